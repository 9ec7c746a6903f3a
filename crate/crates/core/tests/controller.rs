use rok_core::control::{integrate_adaptive, propose_step, ControllerConfig};
use rok_core::linalg::weighted_rms_norm;
use rok_core::ode::FnSystem;
use rok_core::problems::lorenz96;
use rok_core::stepper::{classical_rosenbrock_step, integrate_fixed, rok_step};
use rok_core::tableau::{rok4a, rok4b, rok4p, MethodTableau};
use rok_core::{ArnoldiOptions, JacobianChoice, RokConfig};

fn lorenz_reference() -> Vec<f64> {
    let p = lorenz96::<f64>(40, 8.0);
    let tab = rok4a::<f64>();
    integrate_fixed(0.0, 0.3, &p.y0, 6000, |t, y, h| {
        classical_rosenbrock_step(p.system.as_ref(), t, y, h, &tab, &JacobianChoice::FullExact)
    })
    .unwrap()
    .y
    .into_inner()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Adaptive run that also checks every accepted step's error norm.
fn checked_run(tab: &MethodTableau<f64>, m: usize, rtol: f64) -> Vec<f64> {
    let p = lorenz96::<f64>(40, 8.0);
    let sys = p.system.as_ref();
    let cfg = ControllerConfig::new(rtol, rtol);
    let rc = RokConfig::new(tab.clone(), ArnoldiOptions::new(m));
    let mut accepted_norms = Vec::new();
    let run = integrate_adaptive(0.0, 0.3, &p.y0, 1e-3, tab.embedded_order, &cfg, |t, y, h| {
        let r = rok_step(sys, t, y, h, &rc)?;
        let e = weighted_rms_norm(&r.error_estimate, y, &r.y_next, cfg.atol, cfg.rtol)?;
        if propose_step(h, e, tab.embedded_order, &cfg).accept {
            accepted_norms.push(e);
        }
        Ok(r)
    })
    .unwrap();
    assert_eq!(accepted_norms.len(), run.stats.accepted);
    assert!(accepted_norms.iter().all(|&e| e <= 1.0));
    assert!(run.stats.max_accepted_error <= 1.0);
    assert_eq!(run.t, 0.3);
    run.y.into_inner()
}

#[test]
fn lorenz_global_error_tracks_tolerance() {
    let reference = lorenz_reference();
    for tab in [rok4a::<f64>(), rok4b(), rok4p()] {
        for rtol in [1e-4, 1e-6] {
            let y = checked_run(&tab, 4, rtol);
            let err = rel_err(&y, &reference);
            assert!(err <= 100.0 * rtol, "{} rtol {rtol}: {err:e}", tab.name);
        }
    }
}

#[test]
fn lorenz_error_decreases_across_sweep() {
    let reference = lorenz_reference();
    let tab = rok4a::<f64>();
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8]
        .iter()
        .map(|&tol| rel_err(&checked_run(&tab, 4, tol), &reference))
        .collect();
    let inversions = errs.windows(2).filter(|w| w[1] > w[0]).count();
    assert!(inversions <= 1, "{errs:?}");
    assert!(errs[6] < 1e-3 * errs[0]);
}

fn decay() -> FnSystem<f64> {
    FnSystem::new(1, true, |_, y: &[f64]| vec![-y[0]]).with_jvp(|_, _, u| vec![-u[0]])
}

#[test]
fn decay_global_error_tracks_tolerance() {
    let sys = decay();
    for tab in [rok4a::<f64>(), rok4p()] {
        let rc = RokConfig::new(tab.clone(), ArnoldiOptions::new(1));
        for rtol in [1e-4, 1e-6, 1e-8] {
            let cfg = ControllerConfig::new(rtol, rtol);
            let run = integrate_adaptive(0.0, 2.0, &[1.0], 1e-2, tab.embedded_order, &cfg, |t, y, h| {
                rok_step(&sys, t, y, h, &rc)
            })
            .unwrap();
            let err = (run.y[0] - (-2.0f64).exp()).abs() / (-2.0f64).exp();
            assert!(err <= 100.0 * rtol, "{} rtol {rtol}: {err:e}", tab.name);
        }
    }
}

/// Stages 5 and 6 of rok4b share their linear coefficients and the two
/// weight vectors differ only there, so the estimate vanishes on linear
/// problems and cannot steer the step size.
#[test]
fn rok4b_estimate_vanishes_on_linear_problems() {
    let sys = decay();
    let rc = RokConfig::new(rok4b::<f64>(), ArnoldiOptions::new(1));
    for h in [0.01, 0.1, 1.0] {
        let r = rok_step(&sys, 0.0, &[1.0], h, &rc).unwrap();
        assert!(r.error_estimate[0].abs() <= 1e-12 * r.y_next[0].abs().max(1e-3));
    }
}
