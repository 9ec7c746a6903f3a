//! Rosenbrock-Krylov and classical Rosenbrock steps.

use crate::error::{Error, Result};
use crate::krylov::{arnoldi_counted, extend_basis_type2_counted, ArnoldiOptions, KrylovBasis};
use crate::linalg::{axpy, lu_factor, DirectSolver, Matrix, Vector};
use crate::ode::{eval_rhs, ft_counted, OdeSystem};
use crate::scalar::Scalar;
use crate::tableau::MethodTableau;

pub use crate::ode::WorkCounters;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BasisVariant {
    #[default]
    Type1,
    /// Krylov basis enriched with `f_yy(f, f)` and its image; autonomous only.
    Type2,
}

#[derive(Clone, Debug)]
pub struct RokConfig<T> {
    pub tableau: MethodTableau<T>,
    pub arnoldi: ArnoldiOptions<T>,
    pub basis_variant: BasisVariant,
}

impl<T: Scalar> RokConfig<T> {
    pub fn new(tableau: MethodTableau<T>, arnoldi: ArnoldiOptions<T>) -> Self {
        Self {
            tableau,
            arnoldi,
            basis_variant: BasisVariant::Type1,
        }
    }

    pub fn with_basis(mut self, variant: BasisVariant) -> Self {
        self.basis_variant = variant;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum JacobianChoice<T> {
    /// `A = J`, assembled from the system's dense Jacobian.
    FullExact,
    /// `A = V H V^T` from a Krylov basis.
    KrylovApprox(ArnoldiOptions<T>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult<T> {
    pub y_next: Vector<T>,
    /// `sum (b_i - b_hat_i) k_i`
    pub error_estimate: Vector<T>,
    pub work: WorkCounters,
    pub krylov_dim_used: usize,
}

fn check_step<T: Scalar>(y: &[T], n: usize, h: T) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    Ok(())
}

fn stage_state<T: Scalar>(y: &[T], row: &[T], ks: &[Vector<T>]) -> Vector<T> {
    let mut out = Vector::from_slice(y);
    for (k, &a) in ks.iter().zip(row) {
        if a != T::zero() {
            axpy(&mut out, a, k);
        }
    }
    out
}

fn combine<T: Scalar>(
    y: &[T],
    tab: &MethodTableau<T>,
    ks: &[Vector<T>],
) -> Result<(Vector<T>, Vector<T>)> {
    let mut y_next = Vector::from_slice(y);
    let mut err = Vector::zeros(y.len());
    for (i, k) in ks.iter().enumerate() {
        axpy(&mut y_next, tab.b[i], k);
        axpy(&mut err, tab.b[i] - tab.b_hat[i], k);
    }
    if !y_next.is_finite() || !err.is_finite() {
        return Err(Error::NonFiniteOutput("step"));
    }
    Ok((y_next, err))
}

/// One step of a Rosenbrock-Krylov method. A single basis is built at
/// `(t, y)` and `(I - h gamma H)` is factored once for all stages.
pub fn rok_step<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    h: T,
    cfg: &RokConfig<T>,
) -> Result<StepResult<T>> {
    let n = sys.dim();
    check_step(y, n, h)?;
    let mut work = WorkCounters::default();
    let f0 = eval_rhs(sys, t, y, &mut work)?;
    let basis = match arnoldi_counted(sys, t, y, &f0, &cfg.arnoldi, &mut work) {
        Ok(b) => b,
        Err(Error::ZeroInitialVector) => {
            return Ok(StepResult {
                y_next: Vector::from_slice(y),
                error_estimate: Vector::zeros(n),
                work,
                krylov_dim_used: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let basis = match cfg.basis_variant {
        BasisVariant::Type1 => basis,
        BasisVariant::Type2 => extend_basis_type2_counted(
            sys,
            &basis,
            t,
            y,
            &f0,
            cfg.arnoldi.jvp_mode,
            cfg.arnoldi.breakdown_tol,
            &mut work,
        )?,
    };
    rok_stages(sys, t, y, h, &cfg.tableau, &basis, f0, work)
}

#[allow(clippy::too_many_arguments)]
fn rok_stages<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    h: T,
    tab: &MethodTableau<T>,
    basis: &KrylovBasis<T>,
    f0: Vector<T>,
    mut work: WorkCounters,
) -> Result<StepResult<T>> {
    let m = basis.dim();
    let hmat = basis.h();
    let hg = h * tab.gamma;
    let mut reduced = Matrix::identity(m);
    for i in 0..m {
        for j in 0..m {
            reduced[(i, j)] -= hg * hmat[(i, j)];
        }
    }
    let lu = lu_factor(&reduced).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularReducedSystem,
        other => other,
    })?;
    work.factorizations += 1;

    let s = tab.stages();
    let nodes = tab.alpha_sums();
    let mut ks: Vec<Vector<T>> = Vec::with_capacity(s);
    let mut lambdas: Vec<Vector<T>> = Vec::with_capacity(s);
    let mut f_first = Some(f0);
    for i in 0..s {
        let fi = match f_first.take() {
            Some(f) if i == 0 => f,
            _ => {
                let yi = stage_state(y, tab.alpha.row(i), &ks);
                eval_rhs(sys, t + nodes[i] * h, &yi, &mut work)?
            }
        };
        let phi = basis.project(&fi).add(basis.w());
        let mut coupled = Vector::zeros(m);
        for (j, lam) in lambdas.iter().enumerate() {
            let g = tab.gamma_lower[(i, j)];
            if g != T::zero() {
                axpy(&mut coupled, g, lam);
            }
        }
        let mut rhs = phi.scaled(h);
        axpy(&mut rhs, h, &hmat.mul_vec(&coupled)?);
        let lambda = lu.solve(&rhs)?;
        work.reduced_solves += 1;
        let mut k = basis.expand(&lambda);
        let vphi = basis.expand(&phi);
        for r in 0..k.len() {
            k[r] += h * (fi[r] - vphi[r]);
        }
        ks.push(k);
        lambdas.push(lambda);
    }
    let (y_next, error_estimate) = combine(y, tab, &ks)?;
    Ok(StepResult {
        y_next,
        error_estimate,
        work,
        krylov_dim_used: m,
    })
}

/// One step of a classical Rosenbrock method
/// `(I - h gamma A) k_i = h F_i + h A sum gamma_ij k_j + h^2 gamma_i f_t`.
///
/// `FullExact` uses the dense Jacobian with one factorization per step;
/// `KrylovApprox` substitutes `A = V H V^T` through the reduced solve.
pub fn classical_rosenbrock_step<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    h: T,
    tableau: &MethodTableau<T>,
    jacobian: &JacobianChoice<T>,
) -> Result<StepResult<T>> {
    match jacobian {
        JacobianChoice::KrylovApprox(opts) => {
            rok_step(sys, t, y, h, &RokConfig::new(tableau.clone(), *opts))
        }
        JacobianChoice::FullExact => full_space_step(sys, t, y, h, tableau),
    }
}

fn full_space_step<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    h: T,
    tab: &MethodTableau<T>,
) -> Result<StepResult<T>> {
    let n = sys.dim();
    check_step(y, n, h)?;
    let mut work = WorkCounters::default();
    let jac = sys
        .jacobian(t, y)
        .ok_or(Error::MissingCapability("a dense Jacobian"))?;
    work.jacobian_evals += 1;
    if jac.rows() != n || jac.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: jac.rows(),
        });
    }
    if !jac.is_finite() {
        return Err(Error::NonFiniteOutput("jacobian"));
    }
    let f0 = eval_rhs(sys, t, y, &mut work)?;
    let ft = ft_counted(sys, t, y, &f0, &mut work)?;
    let autonomous_ft = ft.iter().all(|v| *v == T::zero());

    let hg = h * tab.gamma;
    // exact products replace dense mat-vecs for the stage coupling terms
    let has_jvp = sys.jvp(t, y, &f0).is_some();
    if has_jvp {
        work.jvp_evals += 1;
    }
    let jac_for_coupling = if has_jvp { None } else { Some(jac.clone()) };
    let mut stage = jac;
    for i in 0..n {
        for v in stage.row_mut(i) {
            *v = -hg * *v;
        }
        stage[(i, i)] += T::one();
    }
    let solver = DirectSolver::factor(&stage)?;
    work.factorizations += 1;

    let s = tab.stages();
    let nodes = tab.alpha_sums();
    let gsum = tab.gamma_sums();
    let mut ks: Vec<Vector<T>> = Vec::with_capacity(s);
    let mut f_first = Some(f0);
    for i in 0..s {
        let fi = match f_first.take() {
            Some(f) if i == 0 => f,
            _ => {
                let yi = stage_state(y, tab.alpha.row(i), &ks);
                eval_rhs(sys, t + nodes[i] * h, &yi, &mut work)?
            }
        };
        let coupled = stage_state(&vec![T::zero(); n], tab.gamma_lower.row(i), &ks);
        let mut rhs = fi.scaled(h);
        if i > 0 && coupled.norm_inf() > T::zero() {
            let jc = match &jac_for_coupling {
                Some(m) => m.mul_vec(&coupled)?,
                None => {
                    work.jvp_evals += 1;
                    sys.jvp(t, y, &coupled).expect("checked above")
                }
            };
            axpy(&mut rhs, h, &jc);
        }
        if !autonomous_ft {
            axpy(&mut rhs, h * h * gsum[i], &ft);
        }
        let k = solver.solve(&rhs)?;
        work.reduced_solves += 1;
        ks.push(k);
    }
    let (y_next, error_estimate) = combine(y, tab, &ks)?;
    Ok(StepResult {
        y_next,
        error_estimate,
        work,
        krylov_dim_used: n,
    })
}

/// Classical explicit fourth-order Runge-Kutta step (no error estimate).
pub fn rk4_step<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    h: T,
) -> Result<StepResult<T>> {
    check_step(y, sys.dim(), h)?;
    let mut work = WorkCounters::default();
    let half = T::lit(0.5);
    let k1 = eval_rhs(sys, t, y, &mut work)?;
    let y2: Vec<T> = y.iter().zip(k1.iter()).map(|(&a, &k)| a + half * h * k).collect();
    let k2 = eval_rhs(sys, t + half * h, &y2, &mut work)?;
    let y3: Vec<T> = y.iter().zip(k2.iter()).map(|(&a, &k)| a + half * h * k).collect();
    let k3 = eval_rhs(sys, t + half * h, &y3, &mut work)?;
    let y4: Vec<T> = y.iter().zip(k3.iter()).map(|(&a, &k)| a + h * k).collect();
    let k4 = eval_rhs(sys, t + h, &y4, &mut work)?;
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let y_next: Vector<T> = (0..y.len())
        .map(|i| y[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
        .collect();
    if !y_next.is_finite() {
        return Err(Error::NonFiniteOutput("step"));
    }
    Ok(StepResult {
        error_estimate: Vector::zeros(y.len()),
        y_next,
        work,
        krylov_dim_used: 0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedRun<T> {
    pub y: Vector<T>,
    pub work: WorkCounters,
    pub steps: usize,
}

/// `n_steps` equal steps of `(tf - t0) / n_steps`; step `k` starts at
/// `t0 + k h` computed directly.
pub fn integrate_fixed<T: Scalar, F>(
    t0: T,
    tf: T,
    y0: &[T],
    n_steps: usize,
    mut step_fn: F,
) -> Result<FixedRun<T>>
where
    F: FnMut(T, &[T], T) -> Result<StepResult<T>>,
{
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    let span = tf - t0;
    let h = span / T::from_usize(n_steps).unwrap();
    let mut y = Vector::from_slice(y0);
    let mut work = WorkCounters::default();
    for k in 0..n_steps {
        let t = t0 + span * T::from_usize(k).unwrap() / T::from_usize(n_steps).unwrap();
        let r = step_fn(t, &y, h)?;
        work.accumulate(&r.work);
        y = r.y_next;
    }
    Ok(FixedRun {
        y,
        work,
        steps: n_steps,
    })
}
