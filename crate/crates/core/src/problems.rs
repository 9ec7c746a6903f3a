//! Test systems with exact Jacobian-vector products.

use std::sync::Arc;

use crate::linalg::{Matrix, Vector};
use crate::ode::OdeSystem;
use crate::scalar::Scalar;

#[derive(Clone)]
pub struct ProblemSpec<T> {
    pub name: String,
    pub system: Arc<dyn OdeSystem<T>>,
    pub y0: Vector<T>,
    pub t_span: (T, T),
    /// Accuracy of the reference solutions used for this problem.
    pub reference_tolerance: T,
}

impl<T: Scalar> std::fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dim", &self.system.dim())
            .field("t_span", &self.t_span)
            .field("reference_tolerance", &self.reference_tolerance)
            .finish()
    }
}

pub const PROBLEM_NAMES: [&str; 3] = ["lorenz96", "burgers", "shallow-water"];

/// Problems by their CLI name, at default sizes.
pub fn problem_by_name<T: Scalar>(name: &str) -> Option<ProblemSpec<T>> {
    match name {
        "lorenz96" => Some(lorenz96(40, T::lit(8.0))),
        "burgers" => Some(burgers_fd(50, T::lit(1e-3))),
        "shallow-water" => Some(shallow_water(32, 32, T::lit(9.81))),
        _ => None,
    }
}

/// `dy_j/dt = (y_{j+1} - y_{j-2}) y_{j-1} - y_j + F`, periodic.
#[derive(Clone, Debug)]
pub struct Lorenz96<T> {
    pub n: usize,
    pub forcing: T,
}

impl<T: Scalar> Lorenz96<T> {
    #[inline]
    fn idx(&self, j: usize, off: isize) -> usize {
        (j as isize + off).rem_euclid(self.n as isize) as usize
    }
}

impl<T: Scalar> OdeSystem<T> for Lorenz96<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, _t: T, y: &[T]) -> Vector<T> {
        (0..self.n)
            .map(|j| {
                let (p1, m1, m2) = (self.idx(j, 1), self.idx(j, -1), self.idx(j, -2));
                (y[p1] - y[m2]) * y[m1] - y[j] + self.forcing
            })
            .collect()
    }

    fn jvp(&self, _t: T, y: &[T], u: &[T]) -> Option<Vector<T>> {
        Some(
            (0..self.n)
                .map(|j| {
                    let (p1, m1, m2) = (self.idx(j, 1), self.idx(j, -1), self.idx(j, -2));
                    (u[p1] - u[m2]) * y[m1] + (y[p1] - y[m2]) * u[m1] - u[j]
                })
                .collect(),
        )
    }

    fn jacobian(&self, _t: T, y: &[T]) -> Option<Matrix<T>> {
        let mut jac = Matrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let (p1, m1, m2) = (self.idx(j, 1), self.idx(j, -1), self.idx(j, -2));
            jac[(j, p1)] += y[m1];
            jac[(j, m2)] -= y[m1];
            jac[(j, m1)] += y[p1] - y[m2];
            jac[(j, j)] -= T::one();
        }
        Some(jac)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Length of the RK4 spin-up that moves the Lorenz-96 start onto the attractor.
pub const LORENZ96_SPIN_UP: f64 = 10.0;

/// `F` everywhere with component 20 (or the last, for short rings) raised by `0.01`.
pub fn lorenz96_perturbed_equilibrium(n: usize, forcing: f64) -> Vec<f64> {
    let mut y0 = vec![forcing; n];
    y0[19.min(n - 1)] += 0.01;
    y0
}

/// Lorenz-96 on `t in [0, 0.3]`. The start is the perturbed equilibrium
/// advanced by [`LORENZ96_SPIN_UP`] time units of RK4 at `h = 1e-3` in
/// double precision, so that nonlinear terms are of the same size as the
/// linear ones.
pub fn lorenz96<T: Scalar>(n: usize, forcing: T) -> ProblemSpec<T> {
    assert!(n >= 4, "Lorenz-96 needs at least 4 variables");
    let sys = Lorenz96 {
        n,
        forcing: forcing.to_f64_lossy(),
    };
    let mut y = lorenz96_perturbed_equilibrium(n, sys.forcing);
    let h = 1e-3;
    for _ in 0..(LORENZ96_SPIN_UP / h).round() as usize {
        let k1 = sys.rhs(0.0, &y);
        let y2: Vec<f64> = y.iter().zip(k1.iter()).map(|(a, k)| a + 0.5 * h * k).collect();
        let k2 = sys.rhs(0.0, &y2);
        let y3: Vec<f64> = y.iter().zip(k2.iter()).map(|(a, k)| a + 0.5 * h * k).collect();
        let k3 = sys.rhs(0.0, &y3);
        let y4: Vec<f64> = y.iter().zip(k3.iter()).map(|(a, k)| a + h * k).collect();
        let k4 = sys.rhs(0.0, &y4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let y0: Vector<T> = y.into_iter().map(T::lit).collect();
    ProblemSpec {
        name: "lorenz96".into(),
        system: Arc::new(Lorenz96 { n, forcing }),
        y0,
        t_span: (T::zero(), T::lit(0.3)),
        reference_tolerance: T::lit(1e-13),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Flux<T> {
    /// `u^2 / 2`
    Burgers,
    /// `c u`
    Linear(T),
}

/// `u_t + F(u)_x = eps u_xx` on `(0, 10)` with central differences and
/// homogeneous Dirichlet ends.
#[derive(Clone, Debug)]
pub struct BurgersFd<T> {
    pub nx: usize,
    pub eps: T,
    pub flux: Flux<T>,
    pub dx: T,
}

impl<T: Scalar> BurgersFd<T> {
    pub fn new(nx: usize, eps: T, flux: Flux<T>) -> Self {
        Self {
            nx,
            eps,
            flux,
            dx: T::lit(10.0) / T::from_usize(nx + 1).unwrap(),
        }
    }

    fn flux(&self, u: T) -> T {
        match self.flux {
            Flux::Burgers => T::lit(0.5) * u * u,
            Flux::Linear(c) => c * u,
        }
    }

    fn dflux(&self, u: T) -> T {
        match self.flux {
            Flux::Burgers => u,
            Flux::Linear(c) => c,
        }
    }

    fn at(v: &[T], i: isize) -> T {
        if i < 0 || i as usize >= v.len() {
            T::zero()
        } else {
            v[i as usize]
        }
    }

    pub fn grid(&self) -> Vec<T> {
        (1..=self.nx).map(|i| self.dx * T::from_usize(i).unwrap()).collect()
    }
}

impl<T: Scalar> OdeSystem<T> for BurgersFd<T> {
    fn dim(&self) -> usize {
        self.nx
    }

    fn rhs(&self, _t: T, u: &[T]) -> Vector<T> {
        let two_dx = T::lit(2.0) * self.dx;
        let dx2 = self.dx * self.dx;
        (0..self.nx as isize)
            .map(|i| {
                let (l, c, r) = (Self::at(u, i - 1), u[i as usize], Self::at(u, i + 1));
                -(self.flux(r) - self.flux(l)) / two_dx + self.eps * (r - T::lit(2.0) * c + l) / dx2
            })
            .collect()
    }

    fn jvp(&self, _t: T, u: &[T], w: &[T]) -> Option<Vector<T>> {
        let two_dx = T::lit(2.0) * self.dx;
        let dx2 = self.dx * self.dx;
        Some(
            (0..self.nx as isize)
                .map(|i| {
                    let (ul, ur) = (Self::at(u, i - 1), Self::at(u, i + 1));
                    let (l, c, r) = (Self::at(w, i - 1), w[i as usize], Self::at(w, i + 1));
                    -(self.dflux(ur) * r - self.dflux(ul) * l) / two_dx
                        + self.eps * (r - T::lit(2.0) * c + l) / dx2
                })
                .collect(),
        )
    }

    fn jacobian(&self, _t: T, u: &[T]) -> Option<Matrix<T>> {
        let n = self.nx;
        let two_dx = T::lit(2.0) * self.dx;
        let d = self.eps / (self.dx * self.dx);
        let mut jac = Matrix::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = -T::lit(2.0) * d;
            if i > 0 {
                jac[(i, i - 1)] = self.dflux(u[i - 1]) / two_dx + d;
            }
            if i + 1 < n {
                jac[(i, i + 1)] = -self.dflux(u[i + 1]) / two_dx + d;
            }
        }
        Some(jac)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Viscous Burgers on `x in [0, 10]`, `t in [0, 0.5]`, initial profile
/// `(1/6) sin^2(pi x / 5) (1 - x^2)`.
pub fn burgers_fd<T: Scalar>(nx: usize, eps: T) -> ProblemSpec<T> {
    assert!(nx >= 8, "Burgers grid needs at least 8 points");
    let sys = BurgersFd::new(nx, eps, Flux::Burgers);
    let pi = T::from_f64(std::f64::consts::PI).unwrap();
    let y0 = sys
        .grid()
        .into_iter()
        .map(|x| {
            let s = (pi * x / T::lit(5.0)).sin();
            s * s * (T::one() - x * x) / T::lit(6.0)
        })
        .collect();
    ProblemSpec {
        name: "burgers".into(),
        system: Arc::new(sys),
        y0,
        t_span: (T::zero(), T::lit(0.5)),
        reference_tolerance: T::lit(1e-13),
    }
}

/// Shallow water equations in flux form on the unit square, advanced in the
/// primitive variables `[u v h]` on an `nx x ny` cell-centred grid with
/// reflective walls.
#[derive(Clone, Debug)]
pub struct ShallowWater<T> {
    pub nx: usize,
    pub ny: usize,
    pub g: T,
    pub dx: T,
    pub dy: T,
}

/// Central difference of a cell field with mirrored ghosts: `sign = -1` for
/// quantities odd under the reflection, `+1` for even ones.
struct Diff<'a, T> {
    sw: &'a ShallowWater<T>,
}

impl<T: Scalar> Diff<'_, T> {
    fn dx(&self, q: &[T], sign: T, i: usize, j: usize) -> T {
        let nx = self.sw.nx;
        let row = j * nx;
        let c = q[row + i];
        let l = if i == 0 { sign * c } else { q[row + i - 1] };
        let r = if i + 1 == nx { sign * c } else { q[row + i + 1] };
        (r - l) / (T::lit(2.0) * self.sw.dx)
    }

    fn dy(&self, q: &[T], sign: T, i: usize, j: usize) -> T {
        let (nx, ny) = (self.sw.nx, self.sw.ny);
        let c = q[j * nx + i];
        let d = if j == 0 { sign * c } else { q[(j - 1) * nx + i] };
        let u = if j + 1 == ny { sign * c } else { q[(j + 1) * nx + i] };
        (u - d) / (T::lit(2.0) * self.sw.dy)
    }
}

struct Tendencies<T> {
    fh: Vec<T>,
    fq: Vec<T>,
    fr: Vec<T>,
}

impl<T: Scalar> ShallowWater<T> {
    pub fn new(nx: usize, ny: usize, g: T) -> Self {
        Self {
            nx,
            ny,
            g,
            dx: T::one() / T::from_usize(nx).unwrap(),
            dy: T::one() / T::from_usize(ny).unwrap(),
        }
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    fn split<'a>(&self, y: &'a [T]) -> (&'a [T], &'a [T], &'a [T]) {
        let c = self.cells();
        (&y[..c], &y[c..2 * c], &y[2 * c..])
    }

    /// Conservative tendencies `-div` of the mass and momentum fluxes.
    fn tendencies(&self, fx: [&[T]; 3], fy: [&[T]; 3]) -> Tendencies<T> {
        let d = Diff { sw: self };
        let (odd, even) = (-T::one(), T::one());
        let c = self.cells();
        let mut t = Tendencies {
            fh: vec![T::zero(); c],
            fq: vec![T::zero(); c],
            fr: vec![T::zero(); c],
        };
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                // fx = [uh, u^2 h + g h^2 / 2, uvh], fy = [vh, uvh, v^2 h + g h^2 / 2]
                t.fh[k] = -d.dx(fx[0], odd, i, j) - d.dy(fy[0], odd, i, j);
                t.fq[k] = -d.dx(fx[1], even, i, j) - d.dy(fy[1], odd, i, j);
                t.fr[k] = -d.dx(fx[2], odd, i, j) - d.dy(fy[2], even, i, j);
            }
        }
        t
    }

    fn fluxes(&self, y: &[T]) -> ([Vec<T>; 3], [Vec<T>; 3]) {
        let (u, v, h) = self.split(y);
        let half_g = T::lit(0.5) * self.g;
        let uh: Vec<T> = u.iter().zip(h).map(|(&a, &b)| a * b).collect();
        let vh: Vec<T> = v.iter().zip(h).map(|(&a, &b)| a * b).collect();
        let uvh: Vec<T> = uh.iter().zip(v).map(|(&a, &b)| a * b).collect();
        let p: Vec<T> = h.iter().map(|&b| half_g * b * b).collect();
        let uuh: Vec<T> = uh.iter().zip(u).zip(&p).map(|((&a, &b), &c)| a * b + c).collect();
        let vvh: Vec<T> = vh.iter().zip(v).zip(&p).map(|((&a, &b), &c)| a * b + c).collect();
        ([uh, uuh, uvh.clone()], [vh, uvh, vvh])
    }

    fn assemble(&self, y: &[T]) -> (Tendencies<T>, Vector<T>) {
        let (u, v, h) = self.split(y);
        let (fx, fy) = self.fluxes(y);
        let t = self.tendencies([&fx[0], &fx[1], &fx[2]], [&fy[0], &fy[1], &fy[2]]);
        let c = self.cells();
        let mut out = Vector::zeros(3 * c);
        for k in 0..c {
            out[k] = (t.fq[k] - u[k] * t.fh[k]) / h[k];
            out[c + k] = (t.fr[k] - v[k] * t.fh[k]) / h[k];
            out[2 * c + k] = t.fh[k];
        }
        (t, out)
    }

    fn cell_center(&self, i: usize, j: usize) -> (T, T) {
        let half = T::lit(0.5);
        (
            (T::from_usize(i).unwrap() + half) * self.dx,
            (T::from_usize(j).unwrap() + half) * self.dy,
        )
    }
}

impl<T: Scalar> OdeSystem<T> for ShallowWater<T> {
    fn dim(&self) -> usize {
        3 * self.cells()
    }

    fn rhs(&self, _t: T, y: &[T]) -> Vector<T> {
        self.assemble(y).1
    }

    fn jvp(&self, _t: T, y: &[T], w: &[T]) -> Option<Vector<T>> {
        let (u, v, h) = self.split(y);
        let (du, dv, dh) = self.split(w);
        let (base, f) = self.assemble(y);
        let c = self.cells();
        let g = self.g;
        let mut lx: [Vec<T>; 3] = Default::default();
        let mut ly: [Vec<T>; 3] = Default::default();
        for k in 0..c {
            let (a, b, hh) = (u[k], v[k], h[k]);
            let (da, db, dhh) = (du[k], dv[k], dh[k]);
            let d_uh = da * hh + a * dhh;
            let d_vh = db * hh + b * dhh;
            let d_uvh = db * a * hh + b * d_uh;
            let d_p = g * hh * dhh;
            lx[0].push(d_uh);
            lx[1].push(T::lit(2.0) * a * hh * da + a * a * dhh + d_p);
            lx[2].push(d_uvh);
            ly[0].push(d_vh);
            ly[1].push(d_uvh);
            ly[2].push(T::lit(2.0) * b * hh * db + b * b * dhh + d_p);
        }
        let dt = self.tendencies([&lx[0], &lx[1], &lx[2]], [&ly[0], &ly[1], &ly[2]]);
        let mut out = Vector::zeros(3 * c);
        for k in 0..c {
            let hh = h[k];
            out[k] = (dt.fq[k] - du[k] * base.fh[k] - u[k] * dt.fh[k] - f[k] * dh[k]) / hh;
            out[c + k] = (dt.fr[k] - dv[k] * base.fh[k] - v[k] * dt.fh[k] - f[c + k] * dh[k]) / hh;
            out[2 * c + k] = dt.fh[k];
        }
        Some(out)
    }

    /// Assembled from 27 seeded products: a 3x3 cell colouring per variable,
    /// since each row only couples a cell to its four neighbours.
    fn jacobian(&self, t: T, y: &[T]) -> Option<Matrix<T>> {
        let c = self.cells();
        let n = 3 * c;
        let (nx, ny) = (self.nx, self.ny);
        let mut jac = Matrix::zeros(n, n);
        for ci in 0..3 {
            for cj in 0..3 {
                for var in 0..3 {
                    let mut seed = vec![T::zero(); n];
                    for j in (cj..ny).step_by(3) {
                        for i in (ci..nx).step_by(3) {
                            seed[var * c + j * nx + i] = T::one();
                        }
                    }
                    let col = self.jvp(t, y, &seed)?;
                    for j in 0..ny {
                        for i in 0..nx {
                            // the seeded cell in this row's stencil, if any
                            let src = [(0isize, 0isize), (1, 0), (-1, 0), (0, 1), (0, -1)]
                                .into_iter()
                                .map(|(a, b)| (i as isize + a, j as isize + b))
                                .find(|&(a, b)| {
                                    a >= 0
                                        && b >= 0
                                        && (a as usize) < nx
                                        && (b as usize) < ny
                                        && a as usize % 3 == ci
                                        && b as usize % 3 == cj
                                });
                            if let Some((a, b)) = src {
                                let colidx = var * c + b as usize * nx + a as usize;
                                for rv in 0..3 {
                                    let row = rv * c + j * nx + i;
                                    jac[(row, colidx)] = col[row];
                                }
                            }
                        }
                    }
                }
            }
        }
        Some(jac)
    }

    fn is_autonomous(&self) -> bool {
        true
    }
}

/// Shallow water at rest with a Gaussian height bump of 10% of the unit
/// depth at the centre, `t in [0, 0.2]`.
pub fn shallow_water<T: Scalar>(nx: usize, ny: usize, g: T) -> ProblemSpec<T> {
    assert!(nx >= 8 && ny >= 8, "shallow water grid needs at least 8x8 cells");
    let sys = ShallowWater::new(nx, ny, g);
    let c = sys.cells();
    let mut y0 = Vector::zeros(3 * c);
    let half = T::lit(0.5);
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = sys.cell_center(i, j);
            let r2 = (x - half) * (x - half) + (y - half) * (y - half);
            y0[2 * c + j * nx + i] = T::one() + T::lit(0.1) * (-r2 / T::lit(0.02)).exp();
        }
    }
    ProblemSpec {
        name: "shallow-water".into(),
        system: Arc::new(sys),
        y0,
        t_span: (T::zero(), T::lit(0.2)),
        reference_tolerance: T::lit(1e-12),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{jvp, JvpMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel_fd_gap(sys: &dyn OdeSystem<f64>, y: &[f64], u: &[f64]) -> f64 {
        let f = sys.rhs(0.0, y);
        let e = jvp(sys, JvpMode::Exact, 0.0, y, u, &f).unwrap();
        let d = jvp(sys, JvpMode::fd(), 0.0, y, u, &f).unwrap();
        e.sub(&d).norm2() / e.norm2()
    }

    #[test]
    fn lorenz_equilibrium_and_structure() {
        let p = lorenz96::<f64>(40, 8.0);
        let flat = vec![8.0; 40];
        assert_eq!(p.system.rhs(0.0, &flat).norm_inf(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = (0..40).map(|_| rng.gen_range(-5.0..10.0)).collect();
        let jac = p.system.jacobian(0.0, &y).unwrap();
        for j in 0..40 {
            let nz = jac.row(j).iter().filter(|v| **v != 0.0).count();
            assert_eq!(nz, 4, "row {j}");
        }
        for k in 0..40 {
            let mut e = vec![0.0; 40];
            e[k] = 1.0;
            let col = p.system.jvp(0.0, &y, &e).unwrap();
            assert_eq!(col, jac.column(k));
        }
        assert_eq!(lorenz96_perturbed_equilibrium(40, 8.0)[19], 8.01);
    }

    #[test]
    fn lorenz_start_is_off_equilibrium() {
        let p = lorenz96::<f64>(40, 8.0);
        let spread = p.y0.iter().fold(0.0f64, |m, &v| m.max((v - 8.0).abs()));
        assert!(spread > 1.0, "spin-up left the state near equilibrium: {spread}");
        assert!(p.y0.norm_inf() < 20.0);
        let q = lorenz96::<f32>(40, 8.0);
        assert!((q.y0[3] as f64 - p.y0[3]).abs() < 1e-5);
    }

    #[test]
    fn exact_products_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let problems = [lorenz96::<f64>(40, 8.0), burgers_fd(50, 1e-3), shallow_water(12, 10, 9.81)];
        for p in problems {
            let n = p.system.dim();
            for _ in 0..10 {
                let y: Vec<f64> = p.y0.iter().map(|v| v + 0.05 * rng.gen_range(-1.0..1.0)).collect();
                let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let gap = rel_fd_gap(p.system.as_ref(), &y, &u);
                assert!(gap <= 1e-6, "{}: {gap}", p.name);
            }
        }
    }

    #[test]
    fn burgers_linear_flux_is_banded_operator() {
        let sys = BurgersFd::new(10, 0.3, Flux::Linear(2.0));
        let y: Vec<f64> = (0..10).map(|i| (i as f64).cos()).collect();
        let dx = sys.dx;
        let d = 0.3 / (dx * dx);
        let a = 2.0 / (2.0 * dx);
        let mut m = Matrix::zeros(10, 10);
        for i in 0..10 {
            m[(i, i)] = -2.0 * d;
            if i > 0 {
                m[(i, i - 1)] = d + a;
            }
            if i < 9 {
                m[(i, i + 1)] = d - a;
            }
        }
        let f = sys.rhs(0.0, &y);
        let e = m.mul_vec(&y).unwrap();
        assert!(f.sub(&e).norm_inf() < 1e-12);
        let jac = sys.jacobian(0.0, &y).unwrap();
        assert!(jac.as_slice().iter().zip(m.as_slice()).all(|(p, q)| (p - q).abs() < 1e-12));
        assert_eq!(burgers_fd::<f64>(20, 1e-3).system.rhs(0.0, &[0.0; 20]).norm_inf(), 0.0);
    }

    #[test]
    fn shallow_water_rest_and_volume() {
        let p = shallow_water::<f64>(16, 16, 9.81);
        let sys = p.system.as_ref();
        let c = 256;
        let mut rest = vec![0.0; 3 * c];
        rest[2 * c..].iter_mut().for_each(|h| *h = 1.0);
        assert!(sys.rhs(0.0, &rest).norm_inf() == 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = p
            .y0
            .iter()
            .enumerate()
            .map(|(k, v)| v + if k < 2 * c { 0.1 * rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let f = sys.rhs(0.0, &y);
        let mass: f64 = f[2 * c..].iter().sum();
        let total: f64 = y[2 * c..].iter().map(|v| v.abs()).sum();
        assert!(mass.abs() <= 1e-10 * total, "{mass}");
    }

    #[test]
    fn shallow_water_coloured_jacobian_matches_products() {
        let p = shallow_water::<f64>(9, 8, 9.81);
        let n = p.system.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y: Vec<f64> = p.y0.iter().map(|v| v + 0.05 * rng.gen_range(-1.0..1.0)).collect();
        let jac = p.system.jacobian(0.0, &y).unwrap();
        for k in (0..n).step_by(7) {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let col = p.system.jvp(0.0, &y, &e).unwrap();
            let gap = col.sub(&jac.column(k)).norm_inf();
            assert!(gap <= 1e-12 * (1.0 + col.norm_inf()), "column {k}: {gap}");
        }
    }

    #[test]
    fn registry() {
        for name in PROBLEM_NAMES {
            let p = problem_by_name::<f64>(name).unwrap();
            assert_eq!(p.y0.len(), p.system.dim());
        }
        assert_eq!(problem_by_name::<f64>("shallow-water").unwrap().system.dim(), 3072);
        assert!(problem_by_name::<f64>("cbm4").is_none());
    }
}
