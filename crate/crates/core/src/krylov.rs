//! Modified Arnoldi process for the (time-extended) Krylov space of the
//! Jacobian, plus second-order basis enrichment.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, Matrix, Vector};
use crate::ode::{
    ft_counted, jvp_counted, second_directional_derivative_counted, JvpMode, OdeSystem,
    WorkCounters,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArnoldiOptions<T> {
    pub requested_dim: usize,
    /// Reorthogonalize when the residual shrinks below this fraction of its
    /// pre-orthogonalization norm.
    pub reorth_threshold: T,
    /// Lucky breakdown when the new subdiagonal entry is below
    /// `breakdown_tol * ||J v_i||`.
    pub breakdown_tol: T,
    pub jvp_mode: JvpMode<T>,
}

impl<T: Scalar> ArnoldiOptions<T> {
    pub fn new(requested_dim: usize) -> Self {
        Self {
            requested_dim,
            reorth_threshold: T::lit(0.25),
            breakdown_tol: T::lit(1e-12),
            jvp_mode: JvpMode::Exact,
        }
    }

    pub fn with_jvp_mode(mut self, mode: JvpMode<T>) -> Self {
        self.jvp_mode = mode;
        self
    }

    pub fn with_reorth_threshold(mut self, kappa: T) -> Self {
        self.reorth_threshold = kappa;
        self
    }

    pub fn with_breakdown_tol(mut self, tol: T) -> Self {
        self.breakdown_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.requested_dim == 0 {
            return Err(Error::InvalidArgument("Krylov dimension must be at least 1".into()));
        }
        if !(self.reorth_threshold > T::zero() && self.reorth_threshold < T::one()) {
            return Err(Error::InvalidArgument(format!(
                "reorthogonalization threshold {} outside (0, 1)",
                self.reorth_threshold
            )));
        }
        if !(self.breakdown_tol > T::zero()) {
            return Err(Error::InvalidArgument("breakdown tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Orthonormal basis `V`, reduced matrix `H = V^T J V` and the time-coupling
/// row `w` of the extended basis `[V; w^T]`.
#[derive(Clone, Debug)]
pub struct KrylovBasis<T> {
    columns: Vec<Vector<T>>,
    h: Matrix<T>,
    w: Vector<T>,
    beta: T,
    breakdown: bool,
    autonomous: bool,
    extended: bool,
}

impl<T: Scalar> KrylovBasis<T> {
    /// Effective dimension `m`.
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn state_dim(&self) -> usize {
        self.columns.first().map_or(0, |c| c.len())
    }

    pub fn columns(&self) -> &[Vector<T>] {
        &self.columns
    }

    /// `V` as an `N x m` matrix.
    pub fn v(&self) -> Matrix<T> {
        Matrix::from_columns(self.state_dim(), &self.columns)
    }

    pub fn h(&self) -> &Matrix<T> {
        &self.h
    }

    pub fn w(&self) -> &Vector<T> {
        &self.w
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn is_autonomous(&self) -> bool {
        self.autonomous
    }

    /// Whether the basis carries the second-order enrichment.
    pub fn is_extended(&self) -> bool {
        self.extended
    }

    /// `V^T x`
    pub fn project(&self, x: &[T]) -> Vector<T> {
        self.columns.iter().map(|c| dot(c, x)).collect()
    }

    /// `V c`
    pub fn expand(&self, coeffs: &[T]) -> Vector<T> {
        let mut out = Vector::zeros(self.state_dim());
        for (c, &a) in self.columns.iter().zip(coeffs) {
            axpy(&mut out, a, c);
        }
        out
    }

    /// `A x = V H V^T x`
    pub fn apply_approx_jacobian(&self, x: &[T]) -> Vector<T> {
        let p = self.project(x);
        let hp = self.h.mul_vec(&p).expect("square reduced matrix");
        self.expand(&hp)
    }

    /// `max |V^T V - I|`
    pub fn orthogonality_defect(&self) -> T {
        let m = self.dim();
        let mut worst = T::zero();
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot(&self.columns[i], &self.columns[j]) - target).abs());
            }
        }
        worst
    }
}

/// Builds the Krylov basis at `(t, y)`.
///
/// Autonomous systems use `K_M(J, f)` with `w = 0`. Otherwise the process
/// runs on the extended operator `[[J, f_t], [0, 0]]` applied to `[f; 1]`,
/// with the time components carried in `w`.
pub fn arnoldi<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    f_at_y: &[T],
    opts: &ArnoldiOptions<T>,
) -> Result<KrylovBasis<T>> {
    arnoldi_counted(sys, t, y, f_at_y, opts, &mut WorkCounters::default())
}

pub fn arnoldi_counted<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    t: T,
    y: &[T],
    f_at_y: &[T],
    opts: &ArnoldiOptions<T>,
    work: &mut WorkCounters,
) -> Result<KrylovBasis<T>> {
    opts.validate()?;
    let n = sys.dim();
    if f_at_y.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f_at_y.len().min(y.len()),
        });
    }
    if !f_at_y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteOutput("rhs"));
    }
    let autonomous = sys.is_autonomous();
    let cap = if autonomous { n } else { n + 1 };
    let m_max = opts.requested_dim.min(cap);

    let (beta, w1) = if autonomous {
        let b = norm2(f_at_y);
        if b == T::zero() {
            return Err(Error::ZeroInitialVector);
        }
        (b, T::zero())
    } else {
        let nf = norm2(f_at_y);
        let b = nf.hypot(T::one());
        (b, T::one() / b)
    };
    let f_t = if autonomous {
        None
    } else {
        Some(ft_counted(sys, t, y, f_at_y, work)?)
    };

    let mut columns: Vec<Vector<T>> = Vec::with_capacity(m_max);
    let mut ws: Vec<T> = Vec::with_capacity(m_max);
    columns.push(Vector::from_slice(f_at_y).scaled(T::one() / beta));
    ws.push(w1);
    let mut h = Matrix::zeros(m_max, m_max);
    let mut breakdown = false;

    for i in 0..m_max {
        let mut zeta = jvp_counted(sys, opts.jvp_mode, t, y, &columns[i], f_at_y, work)?;
        if let Some(ft) = &f_t {
            axpy(&mut zeta, ws[i], ft);
        }
        let mut xi = T::zero();
        let tau = norm2(&zeta);

        for j in 0..=i {
            let c = dot(&zeta, &columns[j]) + xi * ws[j];
            h[(j, i)] = c;
            axpy(&mut zeta, -c, &columns[j]);
            xi -= c * ws[j];
        }
        let mut resid = norm2(&zeta).hypot(xi);
        if resid <= opts.reorth_threshold * tau {
            for j in 0..=i {
                let c = dot(&zeta, &columns[j]) + xi * ws[j];
                h[(j, i)] += c;
                axpy(&mut zeta, -c, &columns[j]);
                xi -= c * ws[j];
            }
            resid = norm2(&zeta).hypot(xi);
        }
        if !resid.is_finite() {
            return Err(Error::NonFiniteOutput("arnoldi"));
        }
        if i + 1 == m_max {
            break;
        }
        if resid <= opts.breakdown_tol * tau {
            breakdown = true;
            break;
        }
        h[(i + 1, i)] = resid;
        columns.push(zeta.scaled(T::one() / resid));
        ws.push(xi / resid);
    }

    let m = columns.len();
    let h = if m == m_max {
        h
    } else {
        let mut hm = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                hm[(i, j)] = h[(i, j)];
            }
        }
        hm
    };
    Ok(KrylovBasis {
        columns,
        h,
        w: ws.into(),
        beta,
        breakdown,
        autonomous,
        extended: false,
    })
}

/// `A^k f = V H^k (beta e_1)` for an autonomous basis.
pub fn apply_reduced_power<T: Scalar>(basis: &KrylovBasis<T>, k: usize) -> Result<Vector<T>> {
    if !basis.autonomous {
        return Err(Error::NotAutonomous);
    }
    let mut x = Vector::zeros(basis.dim());
    x[0] = basis.beta;
    for _ in 0..k {
        x = basis.h.mul_vec(&x)?;
    }
    Ok(basis.expand(&x))
}

/// Appends `f_yy(f, f)` and `J f_yy(f, f)` to an autonomous basis and
/// recomputes `H = V^T J V`. The result is no longer Hessenberg.
pub fn extend_basis_type2<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    basis: &KrylovBasis<T>,
    t: T,
    y: &[T],
    f_at_y: &[T],
    mode: JvpMode<T>,
) -> Result<KrylovBasis<T>> {
    extend_basis_type2_counted(sys, basis, t, y, f_at_y, mode, T::lit(1e-12), &mut WorkCounters::default())
}

#[allow(clippy::too_many_arguments)]
pub fn extend_basis_type2_counted<T: Scalar, S: OdeSystem<T> + ?Sized>(
    sys: &S,
    basis: &KrylovBasis<T>,
    t: T,
    y: &[T],
    f_at_y: &[T],
    mode: JvpMode<T>,
    tol: T,
    work: &mut WorkCounters,
) -> Result<KrylovBasis<T>> {
    if !basis.autonomous || !sys.is_autonomous() {
        return Err(Error::NotAutonomous);
    }
    if basis.extended {
        return Err(Error::InvalidArgument("basis is already extended".into()));
    }
    let n = sys.dim();
    let ug2 = second_directional_derivative_counted(sys, mode, t, y, f_at_y, f_at_y, work)?;
    let jug2 = if norm2(&ug2) == T::zero() {
        Vector::zeros(n)
    } else {
        jvp_counted(sys, mode, t, y, &ug2, f_at_y, work)?
    };

    let mut columns = basis.columns.clone();
    for cand in [ug2, jug2] {
        if columns.len() >= n {
            break;
        }
        let scale = norm2(&cand);
        if scale == T::zero() {
            continue;
        }
        let mut r = cand;
        for _ in 0..2 {
            for c in &columns {
                let a = dot(&r, c);
                axpy(&mut r, -a, c);
            }
        }
        let rn = norm2(&r);
        if rn <= tol * scale {
            continue;
        }
        columns.push(r.scaled(T::one() / rn));
    }
    if columns.len() == basis.dim() {
        return Ok(KrylovBasis {
            extended: true,
            ..basis.clone()
        });
    }

    let m = columns.len();
    let mut h = Matrix::zeros(m, m);
    for j in 0..m {
        let jv = jvp_counted(sys, mode, t, y, &columns[j], f_at_y, work)?;
        for i in 0..m {
            h[(i, j)] = dot(&columns[i], &jv);
        }
    }
    Ok(KrylovBasis {
        columns,
        h,
        w: Vector::zeros(m),
        beta: basis.beta,
        breakdown: basis.breakdown,
        autonomous: true,
        extended: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::FnSystem;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        a
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// `y' = B y` at a random point.
    fn linear_case(n: usize, seed: u64) -> (FnSystem<f64>, Matrix<f64>, Vec<f64>, Vector<f64>) {
        let b = random_matrix(n, seed);
        let sys = FnSystem::linear(b.clone());
        let y = random_vec(n, seed + 1000);
        let f = sys.rhs(0.0, &y);
        (sys, b, y, f)
    }

    fn dense_power(b: &Matrix<f64>, f: &[f64], k: usize) -> Vector<f64> {
        let mut x = Vector::from_slice(f);
        for _ in 0..k {
            x = b.mul_vec(&x).unwrap();
        }
        x
    }

    #[test]
    fn identity_jacobian_breaks_down_immediately() {
        let sys = FnSystem::linear(Matrix::<f64>::identity(3));
        let y = [1.0, 2.0, -0.5];
        let f = sys.rhs(0.0, &y);
        let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(3)).unwrap();
        assert_eq!(basis.dim(), 1);
        assert!(basis.breakdown());
        assert!((basis.h()[(0, 0)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn full_dense_basis_reproduces_projection() {
        let (sys, b, y, f) = linear_case(6, 11);
        let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(6)).unwrap();
        assert_eq!(basis.dim(), 6);
        assert!(basis.orthogonality_defect() <= 1e-12);
        let v = basis.v();
        let vtjv = v.transpose().matmul(&b.matmul(&v).unwrap()).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((vtjv[(i, j)] - basis.h()[(i, j)]).abs() <= 1e-10);
            }
        }
        let v1 = &basis.columns()[0];
        for i in 0..6 {
            assert!((v1[i] - f[i] / basis.beta()).abs() < 1e-15);
        }
    }

    #[test]
    fn nonautonomous_initial_vector() {
        let sys = FnSystem::new(1, false, |t, y: &[f64]| vec![y[0] + t]).with_jvp(|_, _, u| vec![u[0]]);
        let f = sys.rhs(0.0, &[1.0]);
        let basis = arnoldi(&sys, 0.0, &[1.0], &f, &ArnoldiOptions::new(1)).unwrap();
        let s = 0.5f64.sqrt();
        assert!((basis.beta() - 2f64.sqrt()).abs() < 1e-15);
        assert!((basis.columns()[0][0] - s).abs() < 1e-15);
        assert!((basis.w()[0] - s).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs_is_reported() {
        let sys = FnSystem::linear(Matrix::<f64>::identity(2));
        let err = arnoldi(&sys, 0.0, &[0.0, 0.0], &[0.0, 0.0], &ArnoldiOptions::new(2)).unwrap_err();
        assert_eq!(err, Error::ZeroInitialVector);
    }

    #[test]
    fn lemma_holds_below_dimension_only() {
        let (sys, b, y, f) = linear_case(10, 3);
        let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(4)).unwrap();
        assert_eq!(apply_reduced_power(&basis, 0).unwrap().sub(&f).norm_inf(), 0.0);
        for k in 0..4 {
            let a = apply_reduced_power(&basis, k).unwrap();
            let e = dense_power(&b, &f, k);
            assert!(a.sub(&e).norm2() <= 1e-9 * e.norm2(), "k = {k}");
        }
        let a = apply_reduced_power(&basis, 4).unwrap();
        let e = dense_power(&b, &f, 4);
        assert!(a.sub(&e).norm2() > 1e-6 * e.norm2());
    }

    #[test]
    fn reduced_power_requires_autonomous() {
        let sys = FnSystem::new(2, false, |t, y: &[f64]| vec![y[1] + t, -y[0]])
            .with_jvp(|_, _, u| vec![u[1], -u[0]]);
        let f = sys.rhs(0.0, &[1.0, 0.0]);
        let basis = arnoldi(&sys, 0.0, &[1.0, 0.0], &f, &ArnoldiOptions::new(2)).unwrap();
        assert_eq!(apply_reduced_power(&basis, 1).unwrap_err(), Error::NotAutonomous);
    }

    #[test]
    fn reorthogonalization_on_clustered_spectrum() {
        let n = 12;
        let mut d = Matrix::<f64>::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = 1.0 + 1e-9 * i as f64 + if i > n / 2 { 10.0 * i as f64 } else { 0.0 };
        }
        let sys = FnSystem::linear(d);
        let y: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let f = sys.rhs(0.0, &y);
        let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(n)).unwrap();
        assert!(basis.orthogonality_defect() <= 1e-12, "{}", basis.orthogonality_defect());
    }

    #[test]
    fn extended_operator_matches_dense_nonautonomous() {
        // y' = B y + c t, extended Jacobian [[B, c], [0, 0]]
        let n = 5;
        let b = random_matrix(n, 21);
        let c = random_vec(n, 22);
        let (b1, b2, c1, c2) = (b.clone(), b.clone(), c.clone(), c.clone());
        let sys = FnSystem::new(n, false, move |t, y: &[f64]| {
            let mut v = b1.mul_vec(y).unwrap();
            axpy(&mut v, t, &c1);
            v.into_inner()
        })
        .with_jvp(move |_, _, u| b2.mul_vec(u).unwrap().into_inner())
        .with_time_derivative(move |_, _| c2.clone());
        let y = random_vec(n, 23);
        let t = 0.4;
        let f = sys.rhs(t, &y);
        let basis = arnoldi(&sys, t, &y, &f, &ArnoldiOptions::new(n + 1)).unwrap();
        assert_eq!(basis.dim(), n + 1);
        // columns of [V; w^T] are orthonormal in R^(n+1)
        for i in 0..=n {
            for j in 0..=n {
                let g = dot(&basis.columns()[i], &basis.columns()[j]) + basis.w()[i] * basis.w()[j];
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g - target).abs() < 1e-11);
            }
        }
        // H = V^T (B V + c w^T)
        for j in 0..=n {
            let mut jv = b.mul_vec(&basis.columns()[j]).unwrap();
            axpy(&mut jv, basis.w()[j], &c);
            for i in 0..=n {
                assert!((dot(&basis.columns()[i], &jv) - basis.h()[(i, j)]).abs() < 1e-10);
            }
        }
    }

    fn quadratic_system() -> FnSystem<f64> {
        // f_i = -y_i + 0.3 y_{i+1}^2, with a nonzero second derivative
        let n = 7;
        FnSystem::new(n, true, move |_, y: &[f64]| {
            (0..n).map(|i| -y[i] + 0.3 * y[(i + 1) % n].powi(2)).collect()
        })
        .with_jvp(move |_, y, u| {
            (0..n)
                .map(|i| -u[i] + 0.6 * y[(i + 1) % n] * u[(i + 1) % n])
                .collect()
        })
    }

    #[test]
    fn type2_extension_captures_curvature() {
        let sys = quadratic_system();
        let y: Vec<f64> = (0..7).map(|i| 0.5 + 0.2 * (i as f64).sin()).collect();
        let f = sys.rhs(0.0, &y);
        let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(3)).unwrap();
        let ext = extend_basis_type2(&sys, &basis, 0.0, &y, &f, JvpMode::Exact).unwrap();
        assert!(ext.dim() == 4 || ext.dim() == 5);
        assert!(ext.is_extended());
        assert!(ext.orthogonality_defect() <= 1e-10);
        let u = second_directional_derivative_counted(
            &sys,
            JvpMode::Exact,
            0.0,
            &y,
            &f,
            &f,
            &mut WorkCounters::default(),
        )
        .unwrap();
        let back = ext.expand(&ext.project(&u));
        assert!(back.sub(&u).norm2() <= 1e-9 * u.norm2());
        let ju = sys.jvp(0.0, &y, &u).unwrap();
        let au = ext.apply_approx_jacobian(&u);
        assert!(au.sub(&ju).norm2() <= 1e-8 * ju.norm2());
    }

    #[test]
    fn type2_extension_of_linear_system_is_noop() {
        let (sys, _, y, f) = linear_case(6, 5);
        let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(3)).unwrap();
        let ext = extend_basis_type2(&sys, &basis, 0.0, &y, &f, JvpMode::Exact).unwrap();
        assert_eq!(ext.dim(), basis.dim());
        assert_eq!(ext.h(), basis.h());
    }

    #[test]
    fn options_validation() {
        assert!(ArnoldiOptions::<f64>::new(0).validate().is_err());
        assert!(ArnoldiOptions::<f64>::new(2).with_reorth_threshold(1.5).validate().is_err());
        assert!(ArnoldiOptions::<f64>::new(2).with_breakdown_tol(0.0).validate().is_err());
        assert!(ArnoldiOptions::<f64>::new(2).validate().is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lemma_on_random_systems(n in 4usize..20, m in 1usize..6, seed in 0u64..500) {
            let (sys, b, y, f) = linear_case(n, seed);
            let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(m)).unwrap();
            prop_assert!(basis.orthogonality_defect() <= 1e-12);
            for k in 0..basis.dim() {
                let a = apply_reduced_power(&basis, k).unwrap();
                let e = dense_power(&b, &f, k);
                prop_assert!(a.sub(&e).norm2() <= 1e-9 * e.norm2().max(1e-300));
            }
        }

        #[test]
        fn projector_is_idempotent(n in 4usize..20, m in 1usize..6, seed in 0u64..500) {
            let (sys, _, y, f) = linear_case(n, seed);
            let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(m)).unwrap();
            let x = random_vec(basis.dim(), seed + 7);
            let vx = basis.expand(&x);
            let again = basis.expand(&basis.project(&vx));
            prop_assert!(again.sub(&vx).norm2() <= 1e-12 * norm2(&x));
        }

        #[test]
        fn hessenberg_structure(n in 4usize..20, m in 2usize..8, seed in 0u64..500) {
            let (sys, _, y, f) = linear_case(n, seed);
            let basis = arnoldi(&sys, 0.0, &y, &f, &ArnoldiOptions::new(m)).unwrap();
            let h = basis.h();
            for i in 0..h.rows() {
                for j in 0..i.saturating_sub(1) {
                    prop_assert_eq!(h[(i, j)], 0.0);
                }
            }
        }
    }
}
