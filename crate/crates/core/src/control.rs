//! Embedded-error step-size control.

use crate::error::{Error, Result};
use crate::linalg::{weighted_rms_norm, Vector};
use crate::ode::WorkCounters;
use crate::scalar::Scalar;
use crate::stepper::StepResult;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerConfig<T> {
    pub atol: T,
    pub rtol: T,
    pub safety: T,
    pub h_min: T,
    pub h_max: T,
    pub max_growth: T,
    pub max_shrink: T,
    pub max_rejects_per_step: usize,
}

impl<T: Scalar> ControllerConfig<T> {
    pub fn new(atol: T, rtol: T) -> Self {
        Self {
            atol,
            rtol,
            safety: T::lit(0.9),
            h_min: T::lit(1e-12),
            h_max: T::infinity(),
            max_growth: T::lit(5.0),
            max_shrink: T::lit(0.1),
            max_rejects_per_step: 20,
        }
    }

    pub fn with_step_bounds(mut self, h_min: T, h_max: T) -> Self {
        self.h_min = h_min;
        self.h_max = h_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.atol > T::zero()
            && self.rtol >= T::zero()
            && self.safety > T::zero()
            && self.max_shrink > T::zero()
            && self.max_shrink < T::one()
            && self.max_growth > T::one()
            && self.h_min > T::zero()
            && self.h_min < self.h_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent controller settings {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepProposal<T> {
    pub accept: bool,
    pub h_new: T,
}

/// Elementary controller `h * clamp(safety * err^(-1/(p+1)), shrink, growth)`.
pub fn propose_step<T: Scalar>(
    h: T,
    err_norm: T,
    embedded_order: u32,
    cfg: &ControllerConfig<T>,
) -> StepProposal<T> {
    let accept = err_norm <= T::one();
    let factor = if err_norm == T::zero() {
        cfg.max_growth
    } else if !err_norm.is_finite() {
        cfg.max_shrink
    } else {
        let expo = -T::one() / T::from_u32(embedded_order + 1).unwrap();
        (cfg.safety * err_norm.powf(expo)).max(cfg.max_shrink).min(cfg.max_growth)
    };
    StepProposal {
        accept,
        h_new: (h * factor).max(cfg.h_min).min(cfg.h_max),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub f_evals: u64,
    pub jvp_evals: u64,
    pub work: WorkCounters,
    /// Largest error norm among accepted steps.
    pub max_accepted_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveRun<T> {
    pub y: Vector<T>,
    pub t: T,
    pub stats: IntegrationStats,
}

/// Accept/reject integration from `t0` to exactly `tf`.
///
/// A step that fails with a singular stage matrix counts as a rejection
/// with the step size cut by `max_shrink`.
pub fn integrate_adaptive<T: Scalar, F>(
    t0: T,
    tf: T,
    y0: &[T],
    h0: T,
    embedded_order: u32,
    cfg: &ControllerConfig<T>,
    mut step_fn: F,
) -> Result<AdaptiveRun<T>>
where
    F: FnMut(T, &[T], T) -> Result<StepResult<T>>,
{
    cfg.validate()?;
    if !(t0 < tf) || !(h0 > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "need t0 < tf and h0 > 0 (t0 = {t0}, tf = {tf}, h0 = {h0})"
        )));
    }
    let mut stats = IntegrationStats::default();
    let mut t = t0;
    let mut y = Vector::from_slice(y0);
    let mut h = h0.min(cfg.h_max);
    while t < tf {
        let mut rejects = 0;
        loop {
            let last = t + h >= tf;
            let h_try = if last { tf - t } else { h };
            let outcome = step_fn(t, &y, h_try);
            let (accept, h_new, result) = match outcome {
                Ok(r) => {
                    stats.work.accumulate(&r.work);
                    let err = weighted_rms_norm(&r.error_estimate, &y, &r.y_next, cfg.atol, cfg.rtol)?;
                    let p = propose_step(h_try, err, embedded_order, cfg);
                    if p.accept {
                        stats.max_accepted_error = stats.max_accepted_error.max(err.to_f64_lossy());
                    }
                    (p.accept, p.h_new, Some(r))
                }
                Err(Error::SingularReducedSystem) | Err(Error::SingularMatrix { .. }) => {
                    (false, (h_try * cfg.max_shrink).max(cfg.h_min), None)
                }
                Err(Error::NonFiniteOutput(_)) if h_try > cfg.h_min => {
                    (false, (h_try * cfg.max_shrink).max(cfg.h_min), None)
                }
                Err(e) => return Err(e),
            };
            if accept {
                let r = result.expect("accepted step has a result");
                y = r.y_next;
                t = if last { tf } else { t + h_try };
                stats.accepted += 1;
                // a truncated final step does not shrink the next proposal
                h = if last { h.max(h_new) } else { h_new };
                break;
            }
            stats.rejected += 1;
            rejects += 1;
            if rejects > cfg.max_rejects_per_step || h_try <= cfg.h_min {
                return Err(Error::StepSizeUnderflow {
                    t: t.to_f64_lossy(),
                    h: h_try.to_f64_lossy(),
                });
            }
            h = h_new.min(h_try);
        }
    }
    stats.f_evals = stats.work.f_evals;
    stats.jvp_evals = stats.work.jvp_evals;
    Ok(AdaptiveRun { y, t, stats })
}
