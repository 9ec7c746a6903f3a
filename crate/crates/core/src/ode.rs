//! Problem abstraction and matrix-free derivative operators.

use crate::error::{Error, Result};
use crate::linalg::{norm2, Matrix, Vector};
use crate::scalar::Scalar;

/// A right-hand side `y' = f(t, y)` with optional derivative capabilities.
///
/// Implementations must be reentrant: benchmark sweeps evaluate one system
/// from several threads at once.
pub trait OdeSystem<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, t: T, y: &[T]) -> Vector<T>;

    /// Exact Jacobian-vector product `J(t, y) u`.
    fn jvp(&self, _t: T, _y: &[T], _u: &[T]) -> Option<Vector<T>> {
        None
    }

    /// Exact `df/dt`.
    fn time_derivative(&self, _t: T, _y: &[T]) -> Option<Vector<T>> {
        None
    }

    /// Dense Jacobian, used by the classical full-space stepper.
    fn jacobian(&self, _t: T, _y: &[T]) -> Option<Matrix<T>> {
        None
    }

    fn is_autonomous(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaPolicy<T> {
    /// `sqrt(eps) * (1 + ||y||) / ||u||`
    Adaptive,
    Fixed(T),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum JvpMode<T> {
    Exact,
    FiniteDifference(DeltaPolicy<T>),
}

impl<T: Scalar> JvpMode<T> {
    pub fn fd() -> Self {
        Self::FiniteDifference(DeltaPolicy::Adaptive)
    }

    pub fn fd_fixed(delta: T) -> Result<Self> {
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fixed finite-difference delta must be positive, got {delta}"
            )));
        }
        Ok(Self::FiniteDifference(DeltaPolicy::Fixed(delta)))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact)
    }
}

impl<T: Scalar> Default for JvpMode<T> {
    fn default() -> Self {
        Self::Exact
    }
}

/// Evaluation counts accumulated by steppers and drivers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct WorkCounters {
    pub f_evals: u64,
    pub jvp_evals: u64,
    pub reduced_solves: u64,
    pub factorizations: u64,
    pub jacobian_evals: u64,
}

impl WorkCounters {
    pub fn accumulate(&mut self, other: &WorkCounters) {
        self.f_evals += other.f_evals;
        self.jvp_evals += other.jvp_evals;
        self.reduced_solves += other.reduced_solves;
        self.factorizations += other.factorizations;
        self.jacobian_evals += other.jacobian_evals;
    }
}

fn check_len<T>(v: &[T], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    Ok(())
}

fn finite<T: Scalar>(v: Vector<T>, what: &'static str) -> Result<Vector<T>> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteOutput(what))
    }
}

/// `f(t, y)` with length and finiteness checks.
pub fn eval_rhs<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    work: &mut WorkCounters,
) -> Result<Vector<T>> {
    let n = sys.dim();
    check_len(y, n)?;
    let f = sys.rhs(t, y);
    work.f_evals += 1;
    check_len(&f, n)?;
    finite(f, "rhs")
}

fn shifted<T: Scalar>(y: &[T], d: T, u: &[T]) -> Vec<T> {
    y.iter().zip(u).map(|(&a, &b)| a + d * b).collect()
}

fn adaptive_delta<T: Scalar>(y: &[T], u_norm: T) -> T {
    T::epsilon().sqrt() * (T::one() + norm2(y)) / u_norm
}

/// `J u`, exactly or by forward differences around the precomputed `f_at_y`.
pub fn jvp<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    mode: JvpMode<T>,
    t: T,
    y: &[T],
    u: &[T],
    f_at_y: &[T],
) -> Result<Vector<T>> {
    jvp_counted(sys, mode, t, y, u, f_at_y, &mut WorkCounters::default())
}

pub fn jvp_counted<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    mode: JvpMode<T>,
    t: T,
    y: &[T],
    u: &[T],
    f_at_y: &[T],
    work: &mut WorkCounters,
) -> Result<Vector<T>> {
    let n = sys.dim();
    check_len(y, n)?;
    check_len(u, n)?;
    match mode {
        JvpMode::Exact => {
            let v = sys
                .jvp(t, y, u)
                .ok_or(Error::MissingCapability("an exact Jacobian-vector product"))?;
            work.jvp_evals += 1;
            check_len(&v, n)?;
            finite(v, "jvp")
        }
        JvpMode::FiniteDifference(policy) => {
            check_len(f_at_y, n)?;
            let u_norm = norm2(u);
            if u_norm == T::zero() {
                return Ok(Vector::zeros(n));
            }
            let delta = match policy {
                DeltaPolicy::Adaptive => adaptive_delta(y, u_norm),
                DeltaPolicy::Fixed(d) => d,
            };
            let fp = eval_rhs(sys, t, &shifted(y, delta, u), work)?;
            let v: Vector<T> = fp
                .iter()
                .zip(f_at_y)
                .map(|(&a, &b)| (a - b) / delta)
                .collect();
            finite(v, "finite-difference jvp")
        }
    }
}

/// `df/dt`: exact when provided, zero for autonomous systems, otherwise a
/// forward difference in `t`.
pub fn ft<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    f_at_y: &[T],
) -> Result<Vector<T>> {
    ft_counted(sys, t, y, f_at_y, &mut WorkCounters::default())
}

pub fn ft_counted<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    f_at_y: &[T],
    work: &mut WorkCounters,
) -> Result<Vector<T>> {
    let n = sys.dim();
    if let Some(v) = sys.time_derivative(t, y) {
        check_len(&v, n)?;
        return finite(v, "time derivative");
    }
    if sys.is_autonomous() {
        return Ok(Vector::zeros(n));
    }
    check_len(f_at_y, n)?;
    let dt = T::epsilon().sqrt() * (T::one() + t.abs());
    let fp = eval_rhs(sys, t + dt, y, work)?;
    let v: Vector<T> = fp
        .iter()
        .zip(f_at_y)
        .map(|(&a, &b)| (a - b) / dt)
        .collect();
    finite(v, "finite-difference time derivative")
}

/// Approximates the bilinear form `f_yy(u, u)`.
///
/// Exact mode differences two exact jvps at `y + delta u` and `y`. FD mode
/// has no jvp to lean on and uses the central second difference
/// `(f(y + d u) - 2 f(y) + f(y - d u)) / d^2`, with `d = eps^(1/4) (1 + ||y||) / ||u||`
/// for the adaptive policy and the fixed `d` otherwise.
pub fn second_directional_derivative<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    mode: JvpMode<T>,
    t: T,
    y: &[T],
    u: &[T],
    f_at_y: &[T],
) -> Result<Vector<T>> {
    second_directional_derivative_counted(sys, mode, t, y, u, f_at_y, &mut WorkCounters::default())
}

pub fn second_directional_derivative_counted<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    mode: JvpMode<T>,
    t: T,
    y: &[T],
    u: &[T],
    f_at_y: &[T],
    work: &mut WorkCounters,
) -> Result<Vector<T>> {
    let n = sys.dim();
    check_len(y, n)?;
    check_len(u, n)?;
    let u_norm = norm2(u);
    if u_norm == T::zero() {
        return Ok(Vector::zeros(n));
    }
    let v = match mode {
        JvpMode::Exact => {
            let delta = adaptive_delta(y, u_norm);
            let jp = jvp_counted(sys, mode, t, &shifted(y, delta, u), u, f_at_y, work)?;
            let j0 = jvp_counted(sys, mode, t, y, u, f_at_y, work)?;
            jp.iter().zip(j0.iter()).map(|(&a, &b)| (a - b) / delta).collect()
        }
        JvpMode::FiniteDifference(policy) => {
            check_len(f_at_y, n)?;
            let delta = match policy {
                DeltaPolicy::Adaptive => {
                    T::epsilon().sqrt().sqrt() * (T::one() + norm2(y)) / u_norm
                }
                DeltaPolicy::Fixed(d) => d,
            };
            let fp = eval_rhs(sys, t, &shifted(y, delta, u), work)?;
            let fm = eval_rhs(sys, t, &shifted(y, -delta, u), work)?;
            let d2 = delta * delta;
            fp.iter()
                .zip(fm.iter())
                .zip(f_at_y)
                .map(|((&p, &m), &c)| ((p - c) - (c - m)) / d2)
                .collect()
        }
    };
    finite(v, "second directional derivative")
}

type RhsFn<T> = dyn Fn(T, &[T]) -> Vec<T> + Send + Sync;
type JvpFn<T> = dyn Fn(T, &[T], &[T]) -> Vec<T> + Send + Sync;
type FtFn<T> = dyn Fn(T, &[T]) -> Vec<T> + Send + Sync;
type JacFn<T> = dyn Fn(T, &[T]) -> Matrix<T> + Send + Sync;

/// An [`OdeSystem`] assembled from closures.
pub struct FnSystem<T> {
    dim: usize,
    autonomous: bool,
    rhs: Box<RhsFn<T>>,
    jvp: Option<Box<JvpFn<T>>>,
    ft: Option<Box<FtFn<T>>>,
    jac: Option<Box<JacFn<T>>>,
}

impl<T: Scalar> FnSystem<T> {
    pub fn new(
        dim: usize,
        autonomous: bool,
        rhs: impl Fn(T, &[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            autonomous,
            rhs: Box::new(rhs),
            jvp: None,
            ft: None,
            jac: None,
        }
    }

    pub fn with_jvp(mut self, f: impl Fn(T, &[T], &[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.jvp = Some(Box::new(f));
        self
    }

    pub fn with_time_derivative(
        mut self,
        f: impl Fn(T, &[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        self.ft = Some(Box::new(f));
        self
    }

    pub fn with_jacobian(mut self, f: impl Fn(T, &[T]) -> Matrix<T> + Send + Sync + 'static) -> Self {
        self.jac = Some(Box::new(f));
        self
    }

    /// `y' = B y + c(t)` style linear system with every capability.
    pub fn linear(b: Matrix<T>) -> Self {
        let n = b.rows();
        let (b1, b2, b3) = (b.clone(), b.clone(), b);
        Self::new(n, true, move |_, y| b1.mul_vec(y).expect("dim").into_inner())
            .with_jvp(move |_, _, u| b2.mul_vec(u).expect("dim").into_inner())
            .with_jacobian(move |_, _| b3.clone())
    }
}

impl<T: Scalar> OdeSystem<T> for FnSystem<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: T, y: &[T]) -> Vector<T> {
        (self.rhs)(t, y).into()
    }

    fn jvp(&self, t: T, y: &[T], u: &[T]) -> Option<Vector<T>> {
        self.jvp.as_ref().map(|f| f(t, y, u).into())
    }

    fn time_derivative(&self, t: T, y: &[T]) -> Option<Vector<T>> {
        self.ft.as_ref().map(|f| f(t, y).into())
    }

    fn jacobian(&self, t: T, y: &[T]) -> Option<Matrix<T>> {
        self.jac.as_ref().map(|f| f(t, y))
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square() -> FnSystem<f64> {
        FnSystem::new(1, true, |_, y| vec![y[0] * y[0]]).with_jvp(|_, y, u| vec![2.0 * y[0] * u[0]])
    }

    fn cube() -> FnSystem<f64> {
        FnSystem::new(1, true, |_, y: &[f64]| vec![y[0].powi(3)])
            .with_jvp(|_, y, u| vec![3.0 * y[0] * y[0] * u[0]])
    }

    fn linear3() -> FnSystem<f64> {
        FnSystem::linear(
            Matrix::from_rows(&[
                vec![-2.0, 1.0, 0.5],
                vec![0.3, -1.0, 0.0],
                vec![1.0, 2.0, -4.0],
            ])
            .unwrap(),
        )
    }

    #[test]
    fn fd_of_linear_map_is_exact() {
        let sys = linear3();
        let y = [0.4, -1.2, 2.0];
        let u = [1.0, 0.5, -0.25];
        let f = sys.rhs(0.0, &y);
        for mode in [JvpMode::fd(), JvpMode::fd_fixed(0.3).unwrap()] {
            let v = jvp(&sys, mode, 0.0, &y, &u, &f).unwrap();
            let e = sys.jvp(0.0, &y, &u).unwrap();
            assert!(v.sub(&e).norm_inf() < 1e-7 * e.norm_inf());
        }
    }

    #[test]
    fn fd_truncation_of_square() {
        let sys = square();
        let f = sys.rhs(0.0, &[1.0]);
        let v = jvp(&sys, JvpMode::fd_fixed(1e-7).unwrap(), 0.0, &[1.0], &[1.0], &f).unwrap();
        assert!((v[0] - 2.0000001).abs() < 1e-8, "{}", v[0]);
    }

    #[test]
    fn zero_direction_gives_zero() {
        let sys = square();
        let f = sys.rhs(0.0, &[1.0]);
        let mut w = WorkCounters::default();
        let v = jvp_counted(&sys, JvpMode::fd(), 0.0, &[1.0], &[0.0], &f, &mut w).unwrap();
        assert_eq!(v.as_slice(), &[0.0]);
        assert_eq!(w.f_evals, 0);
    }

    #[test]
    fn exact_mode_requires_capability() {
        let sys = FnSystem::new(1, true, |_, y: &[f64]| vec![y[0]]);
        let err = jvp(&sys, JvpMode::Exact, 0.0, &[1.0], &[1.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::MissingCapability(_)));
    }

    #[test]
    fn fixed_delta_must_be_positive() {
        assert!(JvpMode::<f64>::fd_fixed(0.0).is_err());
        assert!(JvpMode::<f64>::fd_fixed(-1.0).is_err());
        assert!(JvpMode::<f64>::fd_fixed(f64::NAN).is_err());
    }

    #[test]
    fn non_finite_rhs_is_reported() {
        let sys = FnSystem::new(1, true, |_, y: &[f64]| vec![1.0 / (y[0] - 1.0)]);
        let mut w = WorkCounters::default();
        assert!(matches!(
            eval_rhs(&sys, 0.0, &[1.0], &mut w),
            Err(Error::NonFiniteOutput(_))
        ));
    }

    #[test]
    fn ft_cases() {
        let auto = square();
        assert_eq!(ft(&auto, 0.3, &[2.0], &[4.0]).unwrap().as_slice(), &[0.0]);

        let tv = FnSystem::new(2, false, |t, y: &[f64]| vec![t * y[0], t * y[1]]);
        let t = 0.7;
        let f = tv.rhs(t, &[1.0, 1.0]);
        let d = ft(&tv, t, &[1.0, 1.0], &f).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-7 && (d[1] - 1.0).abs() < 1e-7);

        let no_t = FnSystem::new(1, false, |_, y: &[f64]| vec![y[0]]);
        let d = ft(&no_t, 2.0, &[3.0], &[3.0]).unwrap();
        assert!(d[0].abs() < 1e-7);

        let exact = FnSystem::new(1, false, |t, _: &[f64]| vec![t * t])
            .with_time_derivative(|t, _| vec![2.0 * t]);
        assert_eq!(ft(&exact, 1.5, &[0.0], &[2.25]).unwrap().as_slice(), &[3.0]);
    }

    #[test]
    fn second_derivative_cases() {
        let sys = cube();
        let f = sys.rhs(0.0, &[1.0]);
        for mode in [JvpMode::Exact, JvpMode::fd()] {
            let v = second_directional_derivative(&sys, mode, 0.0, &[1.0], &[1.0], &f).unwrap();
            assert!((v[0] - 6.0).abs() < 1e-4, "{mode:?}: {}", v[0]);
            let z = second_directional_derivative(&sys, mode, 0.0, &[1.0], &[0.0], &f).unwrap();
            assert_eq!(z.as_slice(), &[0.0]);
        }
        let lin = linear3();
        let y = [0.4, -1.2, 2.0];
        let u = [1.0, 0.5, -0.25];
        let f = lin.rhs(0.0, &y);
        let bu = lin.jvp(0.0, &y, &u).unwrap().norm2();
        for mode in [JvpMode::Exact, JvpMode::fd()] {
            let v = second_directional_derivative(&lin, mode, 0.0, &y, &u, &f).unwrap();
            assert!(v.norm_inf() <= 1e-6 * bu, "{mode:?}: {v:?}");
        }
    }

    #[test]
    fn work_counts_per_mode() {
        let sys = square();
        let f = sys.rhs(0.0, &[1.0]);
        let mut w = WorkCounters::default();
        jvp_counted(&sys, JvpMode::Exact, 0.0, &[1.0], &[1.0], &f, &mut w).unwrap();
        jvp_counted(&sys, JvpMode::fd(), 0.0, &[1.0], &[1.0], &f, &mut w).unwrap();
        assert_eq!((w.jvp_evals, w.f_evals), (1, 1));
    }

    proptest! {
        #[test]
        fn exact_jvp_is_homogeneous(c in -10.0f64..10.0, u in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let sys = linear3();
            let y = [0.1, 0.2, 0.3];
            let f = sys.rhs(0.0, &y);
            let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
            let a = jvp(&sys, JvpMode::Exact, 0.0, &y, &cu, &f).unwrap();
            let b = jvp(&sys, JvpMode::Exact, 0.0, &y, &u, &f).unwrap().scaled(c);
            prop_assert!(a.sub(&b).norm_inf() <= 1e-14 * (1.0 + b.norm_inf()));
        }
    }
}
