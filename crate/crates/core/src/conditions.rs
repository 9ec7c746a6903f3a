//! Order-condition residuals and linear stability analysis for tableaux.
//!
//! Conditions are written as sums over stage indices using three matrices:
//! `alpha` (strictly lower), `Gamma` (lower, `gamma` on the diagonal) and
//! `beta = alpha + Gamma`. Row sums are `alpha_j = (alpha 1)_j` and
//! `beta_j = (beta 1)_j`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::scalar::Scalar;
use crate::tableau::MethodTableau;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConditionFamily {
    /// Classical Rosenbrock conditions through order four.
    Classical,
    /// Rosenbrock-W conditions through order three.
    W,
    /// Rosenbrock-Krylov conditions through order four.
    K4,
    /// The additional Rosenbrock-Krylov conditions of order five.
    K5,
    Parabolic,
}

impl ConditionFamily {
    pub const ALL: [ConditionFamily; 5] = [
        ConditionFamily::Classical,
        ConditionFamily::W,
        ConditionFamily::K4,
        ConditionFamily::K5,
        ConditionFamily::Parabolic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Classical => "classical",
            Self::W => "w",
            Self::K4 => "k4",
            Self::K5 => "k5",
            Self::Parabolic => "parabolic",
        }
    }
}

impl fmt::Display for ConditionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConditionFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown condition family {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weights {
    Main,
    Embedded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResidual<T> {
    pub label: String,
    pub family: ConditionFamily,
    pub lhs: T,
    pub target: T,
    /// `|lhs - target|`
    pub residual: T,
}

impl<T: Scalar> ConditionResidual<T> {
    fn new(label: &str, family: ConditionFamily, lhs: T, target: T) -> Self {
        Self {
            label: label.to_string(),
            family,
            lhs,
            target,
            residual: (lhs - target).abs(),
        }
    }
}

/// Largest residual of a list (zero when empty).
pub fn max_residual<T: Scalar>(rows: &[ConditionResidual<T>]) -> T {
    rows.iter().fold(T::zero(), |acc, r| acc.max(r.residual))
}

struct Coeffs<T> {
    b: Vector<T>,
    alpha: Matrix<T>,
    gamma: Matrix<T>,
    beta: Matrix<T>,
    /// `alpha_j`
    a: Vector<T>,
    /// `beta_j`
    bs: Vector<T>,
    ones: Vector<T>,
}

impl<T: Scalar> Coeffs<T> {
    fn new(t: &MethodTableau<T>) -> Self {
        let s = t.stages();
        let ones = Vector::from_fn(s, |_| T::one());
        let beta = t.beta();
        Self {
            b: t.b.clone(),
            alpha: t.alpha.clone(),
            gamma: t.gamma_full(),
            a: t.alpha.mul_vec(&ones).expect("square"),
            bs: beta.mul_vec(&ones).expect("square"),
            beta,
            ones,
        }
    }

    /// `b^T M_1 M_2 ... v`
    fn chain(&self, mats: &[&Matrix<T>], v: &[T]) -> T {
        let mut x = Vector::from_slice(v);
        for m in mats.iter().rev() {
            x = m.mul_vec(&x).expect("square");
        }
        self.b.dot(&x)
    }
}

fn hadamard<T: Scalar>(x: &[T], y: &[T]) -> Vector<T> {
    x.iter().zip(y).map(|(&p, &q)| p * q).collect()
}

fn frac<T: Scalar>(p: f64, q: f64) -> T {
    T::lit(p) / T::lit(q)
}

/// Residuals of the selected family. `Parabolic` defers to
/// [`parabolic_condition_residuals`].
pub fn order_condition_residuals<T: Scalar>(
    t: &MethodTableau<T>,
    family: ConditionFamily,
) -> Vec<ConditionResidual<T>> {
    use ConditionFamily::*;
    if family == Parabolic {
        return parabolic_condition_residuals(t);
    }
    let c = Coeffs::new(t);
    let zero = T::zero();
    let a2 = hadamard(&c.a, &c.a);
    let a3 = hadamard(&a2, &c.a);
    let row = |label: &str, lhs: T, target: T| ConditionResidual::new(label, family, lhs, target);

    match family {
        Classical | K4 => {
            let mut out = vec![
                row("a", c.chain(&[], &c.ones), T::one()),
                row("b", c.chain(&[&c.beta], &c.ones), frac(1.0, 2.0)),
                row("c", c.b.dot(&a2), frac(1.0, 3.0)),
                row("d", c.chain(&[&c.beta, &c.beta], &c.ones), frac(1.0, 6.0)),
                row("e", c.b.dot(&a3), frac(1.0, 4.0)),
                row(
                    "f",
                    c.b.dot(&hadamard(&c.a, &c.alpha.mul_vec(&c.bs).expect("square"))),
                    frac(1.0, 8.0),
                ),
            ];
            if family == Classical {
                out.push(row("g", c.chain(&[&c.beta], &a2), frac(1.0, 12.0)));
            } else {
                out.push(row("g1", c.chain(&[&c.alpha], &a2), frac(1.0, 12.0)));
                out.push(row("g2", c.chain(&[&c.gamma], &a2), zero));
            }
            out.push(row("h", c.chain(&[&c.beta, &c.beta, &c.beta], &c.ones), frac(1.0, 24.0)));
            out
        }
        W => vec![
            row("a", c.chain(&[], &c.ones), T::one()),
            row("b1", c.b.dot(&c.a), frac(1.0, 2.0)),
            row("b2", c.chain(&[&c.gamma], &c.ones), zero),
            row("c", c.b.dot(&a2), frac(1.0, 3.0)),
            row("d1", c.chain(&[&c.alpha], &c.a), frac(1.0, 6.0)),
            row("d2", c.chain(&[&c.gamma], &c.a), zero),
            row("d3", c.chain(&[&c.alpha, &c.gamma], &c.ones), zero),
            row("d4", c.chain(&[&c.gamma, &c.gamma], &c.ones), zero),
        ],
        K5 => {
            let aaa = hadamard(&c.a, &c.alpha.mul_vec(&c.a).expect("square"));
            vec![
                row("k5-1", c.chain(&[&c.gamma], &a3), zero),
                row("k5-2", c.chain(&[&c.gamma], &aaa), zero),
                row("k5-3", c.chain(&[&c.gamma, &c.alpha], &a2), zero),
                row("k5-4", c.chain(&[&c.gamma, &c.gamma], &a2), zero),
                row("k5-5", c.chain(&[&c.alpha, &c.gamma], &a2), zero),
            ]
        }
        Parabolic => unreachable!(),
    }
}

/// `b^T beta^j (2 beta^2 1 - alpha^2) = 0` for `p - 2 <= j <= s - 1`, with
/// matrix powers of `beta` and the element-wise square of the nodes.
pub fn parabolic_condition_residuals<T: Scalar>(t: &MethodTableau<T>) -> Vec<ConditionResidual<T>> {
    let c = Coeffs::new(t);
    let s = t.stages();
    let two = T::lit(2.0);
    let bb1 = c.beta.mul_vec(&c.bs).expect("square");
    let mut v: Vector<T> = bb1
        .iter()
        .zip(c.a.iter())
        .map(|(&x, &a)| two * x - a * a)
        .collect();
    let first = (t.order as usize).saturating_sub(2);
    let mut out = Vec::new();
    for j in 0..s {
        if j >= first {
            let lhs = c.b.dot(&v);
            out.push(ConditionResidual::new(
                &format!("parabolic-j{j}"),
                ConditionFamily::Parabolic,
                lhs,
                T::zero(),
            ));
        }
        v = c.beta.mul_vec(&v).expect("square");
    }
    out
}

/// The fourth-order bushy-chain condition written with `beta_3'` (row sum
/// without the diagonal) and with `beta_3` in its place. Only the first
/// form is implied by the `f` condition; both are reported for comparison.
pub fn condition_f_variants<T: Scalar>(t: &MethodTableau<T>) -> Vec<ConditionResidual<T>> {
    let c = Coeffs::new(t);
    let s = t.stages();
    let full = c.b.dot(&hadamard(&c.a, &c.alpha.mul_vec(&c.bs).expect("square")));
    let extra = if s >= 3 {
        (0..s).fold(T::zero(), |acc, j| acc + c.b[j] * c.a[j] * c.alpha[(j, 2)]) * t.gamma
    } else {
        T::zero()
    };
    vec![
        ConditionResidual::new("f(beta3')", ConditionFamily::K4, full, frac(1.0, 8.0)),
        ConditionResidual::new("f(beta3)", ConditionFamily::K4, full + extra, frac(1.0, 8.0)),
    ]
}

fn weights_of<T: Scalar>(t: &MethodTableau<T>, w: Weights) -> &Vector<T> {
    match w {
        Weights::Main => &t.b,
        Weights::Embedded => &t.b_hat,
    }
}

/// `R(z) = 1 + z b^T (I - z beta)^{-1} 1`
pub fn stability_function<T: Scalar>(
    t: &MethodTableau<T>,
    z: Complex<T>,
    weights: Weights,
) -> Result<Complex<T>> {
    let beta = t.beta();
    let s = t.stages();
    let b = weights_of(t, weights);
    let one = Complex::new(T::one(), T::zero());
    let mut x: Vec<Complex<T>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut acc = one;
        for (j, xj) in x.iter().enumerate() {
            acc = acc + z * *xj * beta[(i, j)];
        }
        let d = one - z * beta[(i, i)];
        if d.norm() <= T::epsilon() {
            return Err(Error::SingularAtZ);
        }
        x.push(acc / d);
    }
    let sum = x
        .iter()
        .zip(b.iter())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (xi, &bi)| acc + *xi * bi);
    Ok(one + z * sum)
}

/// `R(inf) = 1 - b^T beta^{-1} 1`
pub fn stability_at_infinity<T: Scalar>(t: &MethodTableau<T>, weights: Weights) -> Result<T> {
    if !(t.gamma > T::zero()) {
        return Err(Error::InvalidArgument(
            "stability at infinity needs a positive diagonal".into(),
        ));
    }
    let beta = t.beta();
    let s = t.stages();
    let mut x = vec![T::zero(); s];
    for i in 0..s {
        let mut acc = T::one();
        for j in 0..i {
            acc -= beta[(i, j)] * x[j];
        }
        x[i] = acc / beta[(i, i)];
    }
    Ok(T::one() - weights_of(t, weights).dot(&x))
}

/// Taylor coefficients `c_k = b^T beta^{k-1} 1` of `R` at the origin, `k = 1..=kmax`.
pub fn stability_taylor_coefficients<T: Scalar>(t: &MethodTableau<T>, kmax: usize) -> Vec<T> {
    let beta = t.beta();
    let mut v = Vector::from_fn(t.stages(), |_| T::one());
    let mut out = Vec::with_capacity(kmax);
    for _ in 0..kmax {
        out.push(t.b.dot(&v));
        v = beta.mul_vec(&v).expect("square");
    }
    out
}

/// Largest `k <= 6` with `c_j = 1/j!` for all `j <= k`.
pub fn linear_order<T: Scalar>(t: &MethodTableau<T>) -> u32 {
    let coeffs = stability_taylor_coefficients(t, 6);
    let tol = T::lit(1e-7);
    let mut fact = T::one();
    let mut order = 0;
    for (k, c) in coeffs.iter().enumerate() {
        fact *= T::from_usize(k + 1).unwrap();
        if (*c - T::one() / fact).abs() > tol {
            break;
        }
        order = k as u32 + 1;
    }
    order
}

/// `(y, |R(iy)|, |R_hat(iy)|)` along the imaginary axis.
pub fn sample_stability_boundary<T: Scalar>(
    t: &MethodTableau<T>,
    axis_points: &[T],
) -> Result<Vec<(T, T, T)>> {
    axis_points
        .iter()
        .map(|&y| {
            let z = Complex::new(T::zero(), y);
            Ok((
                y,
                stability_function(t, z, Weights::Main)?.norm(),
                stability_function(t, z, Weights::Embedded)?.norm(),
            ))
        })
        .collect()
}
