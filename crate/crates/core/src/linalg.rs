//! Dense vector and matrix kernels.
//!
//! The full state lives in [`Vector`]; the Krylov-reduced systems are small
//! [`Matrix`] values factored once per step with [`lu_factor`]. The classical
//! full-space baseline uses [`DirectSolver`], which switches to a banded
//! factorization after a reverse Cuthill-McKee reordering when that is
//! cheaper than dense elimination.

use std::collections::VecDeque;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative pivot threshold used for singularity detection.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Vector<T>(Vec<T>);

impl<T: Scalar> Vector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> T) -> Self {
        Self((0..n).map(f).collect())
    }

    pub fn from_slice(x: &[T]) -> Self {
        Self(x.to_vec())
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn norm2(&self) -> T {
        norm2(&self.0)
    }

    pub fn norm_inf(&self) -> T {
        norm_inf(&self.0)
    }

    pub fn dot(&self, other: &[T]) -> T {
        dot(&self.0, other)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &[T]) {
        axpy(&mut self.0, a, x);
    }

    pub fn scale(&mut self, a: T) {
        self.0.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: T) -> Self {
        Self(self.0.iter().map(|&v| v * a).collect())
    }

    pub fn sub(&self, other: &[T]) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(other).map(|(&a, &b)| a - b).collect())
    }

    pub fn add(&self, other: &[T]) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self(self.0.iter().zip(other).map(|(&a, &b)| a + b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> From<Vec<T>> for Vector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T> Deref for Vector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for Vector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> FromIterator<T> for Vector<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[inline]
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub fn norm2<T: Scalar>(x: &[T]) -> T {
    // scaled to avoid overflow for large entries
    let scale = norm_inf(x);
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let s = x.iter().fold(T::zero(), |acc, &v| {
        let r = v / scale;
        acc + r * r
    });
    scale * s.sqrt()
}

#[inline]
pub fn norm_inf<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, &v| {
        if v.is_nan() {
            v
        } else {
            acc.max(v.abs())
        }
    })
}

#[inline]
pub fn axpy<T: Scalar>(y: &mut [T], a: T, x: &[T]) {
    debug_assert_eq!(x.len(), y.len());
    y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += a * xi);
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: r,
            cols: c,
            data,
        })
    }

    /// Builds an `n x m` matrix whose columns are the given vectors.
    pub fn from_columns(n: usize, columns: &[Vector<T>]) -> Self {
        let mut m = Self::zeros(n, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vector<T>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: x.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `self^T x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Result<Vector<T>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: x.len(),
            });
        }
        let mut out = Vector::zeros(self.cols);
        for (i, &xi) in x.iter().enumerate() {
            axpy(&mut out, xi, self.row(i));
        }
        Ok(out)
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a != T::zero() {
                    axpy(out.row_mut(i), a, other.row(k));
                }
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> T {
        norm_inf(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// LU factors `P A = L U` of a square matrix, packed in one array.
#[derive(Clone, Debug)]
pub struct LuFactors<T> {
    lu: Matrix<T>,
    pivots: Vec<usize>,
}

impl<T: Scalar> LuFactors<T> {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vector<T>> {
        lu_solve(self, rhs)
    }
}

/// Gaussian elimination with partial pivoting.
pub fn lu_factor<T: Scalar>(a: &Matrix<T>) -> Result<LuFactors<T>> {
    if !a.is_square() || a.rows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    let n = a.rows();
    let threshold = T::lit(PIVOT_TOLERANCE) * a.max_abs();
    let mut lu = a.clone();
    let mut pivots = vec![0; n];
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[(i, k)].abs()))
            .fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
        if !(pmax > threshold) || pmax == T::zero() {
            return Err(Error::SingularMatrix {
                column: k,
                pivot: pmax.to_f64_lossy(),
            });
        }
        pivots[k] = p;
        if p != k {
            for j in 0..n {
                lu.data.swap(k * n + j, p * n + j);
            }
        }
        let d = lu[(k, k)];
        for i in k + 1..n {
            let l = lu[(i, k)] / d;
            lu[(i, k)] = l;
            if l != T::zero() {
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
    }
    Ok(LuFactors { lu, pivots })
}

pub fn lu_solve<T: Scalar>(f: &LuFactors<T>, rhs: &[T]) -> Result<Vector<T>> {
    let n = f.dim();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut x = rhs.to_vec();
    for k in 0..n {
        x.swap(k, f.pivots[k]);
    }
    for i in 0..n {
        let row = f.lu.row(i);
        let s = dot(&row[..i], &x[..i]);
        x[i] -= s;
    }
    for i in (0..n).rev() {
        let row = f.lu.row(i);
        let s = dot(&row[i + 1..], &x[i + 1..]);
        x[i] = (x[i] - s) / row[i];
    }
    Ok(x.into())
}

/// Weighted RMS norm `sqrt(mean((err_i / (atol + rtol * max(|y0_i|, |y1_i|)))^2))`.
pub fn weighted_rms_norm<T: Scalar>(err: &[T], y0: &[T], y1: &[T], atol: T, rtol: T) -> Result<T> {
    let n = err.len();
    for len in [y0.len(), y1.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    if n == 0 {
        return Ok(T::zero());
    }
    let sum: T = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(&e, (&a, &b))| {
            let r = e / (atol + rtol * a.abs().max(b.abs()));
            r * r
        })
        .sum();
    Ok((sum / T::from_usize(n).unwrap()).sqrt())
}

/// Band LU with partial pivoting on a symmetrically permuted matrix.
///
/// Row `i` of the permuted matrix is stored for columns `i - kl ..= i + kl + ku`;
/// the extra `kl` upper diagonals hold pivoting fill-in.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<T>,
    pivots: Vec<usize>,
    perm: Vec<usize>,
}

impl<T: Scalar> BandLu<T> {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Factors `P A P^T` where `perm[new] = old`.
    pub fn factor(a: &Matrix<T>, perm: &[usize]) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || perm.len() != n || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        let (kl, ku) = bandwidths(a, perm);
        let width = 2 * kl + ku + 1;
        let mut f = Self {
            n,
            kl,
            ku,
            width,
            band: vec![T::zero(); n * width],
            pivots: vec![0; n],
            perm: perm.to_vec(),
        };
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let hi = (i + ku).min(n - 1);
            let src = a.row(perm[i]);
            for j in lo..=hi {
                let k = f.idx(i, j);
                f.band[k] = src[perm[j]];
            }
        }
        let threshold = T::lit(PIVOT_TOLERANCE) * a.max_abs();
        // last column that may hold a nonzero in each row, grown by pivoting fill-in
        let mut row_end: Vec<usize> = (0..n).map(|i| (i + ku).min(n - 1)).collect();
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut pmax = -T::one();
            for i in k..=last_row {
                let v = f.band[f.idx(i, k)].abs();
                if v > pmax {
                    pmax = v;
                    p = i;
                }
            }
            if !(pmax > threshold) || pmax == T::zero() {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot: pmax.to_f64_lossy(),
                });
            }
            f.pivots[k] = p;
            if p != k {
                for j in k..=row_end[k].max(row_end[p]) {
                    let (ik, ip) = (f.idx(k, j), f.idx(p, j));
                    f.band.swap(ik, ip);
                }
                row_end.swap(k, p);
            }
            let d = f.band[f.idx(k, k)];
            let span = row_end[k] - k;
            let width = f.width;
            for i in k + 1..=last_row {
                let ik = f.idx(i, k);
                let l = f.band[ik] / d;
                f.band[ik] = l;
                if l != T::zero() {
                    // row k occupies band[kk + 1 ..= kk + span], row i the same
                    // columns starting at ik + 1; rows are `width` apart
                    let kk = f.idx(k, k);
                    let (head, tail) = f.band.split_at_mut(i * width);
                    let pivot_row = &head[kk + 1..=kk + span];
                    let off = ik - i * width;
                    let target = &mut tail[off + 1..=off + span];
                    for (t, &u) in target.iter_mut().zip(pivot_row) {
                        *t -= l * u;
                    }
                    row_end[i] = row_end[i].max(row_end[k]);
                }
            }
        }
        Ok(f)
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vector<T>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&old| rhs[old]).collect();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let xk = x[k];
            for i in k + 1..=(k + self.kl).min(n - 1) {
                x[i] -= self.band[self.idx(i, k)] * xk;
            }
        }
        let reach = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= self.band[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.band[self.idx(k, k)];
        }
        let mut out = Vector::zeros(n);
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        Ok(out)
    }
}

/// Lower and upper bandwidth of `P A P^T`.
pub fn bandwidths<T: Scalar>(a: &Matrix<T>, perm: &[usize]) -> (usize, usize) {
    let n = a.rows();
    let mut pos = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        pos[old] = new;
    }
    let (mut kl, mut ku) = (0, 0);
    for i in 0..n {
        let row = a.row(i);
        for (j, v) in row.iter().enumerate() {
            if *v != T::zero() {
                let (pi, pj) = (pos[i], pos[j]);
                if pi > pj {
                    kl = kl.max(pi - pj);
                } else {
                    ku = ku.max(pj - pi);
                }
            }
        }
    }
    (kl, ku)
}

/// Reverse Cuthill-McKee ordering of the symmetrized sparsity pattern.
/// Returns `perm` with `perm[new] = old`.
pub fn rcm_ordering<T: Scalar>(a: &Matrix<T>) -> Vec<usize> {
    let n = a.rows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for (j, v) in a.row(i).iter().enumerate() {
            if i != j && *v != T::zero() {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for nbrs in adj.iter_mut() {
        nbrs.sort_unstable();
        nbrs.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    for nbrs in adj.iter_mut() {
        nbrs.sort_by_key(|&k| (degree[k], k));
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while order.len() < n {
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node");
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order.reverse();
    order
}

/// Direct solver for the full-space baseline: dense LU, or band LU after an
/// RCM reordering when the estimated flop count is lower.
#[derive(Clone, Debug)]
pub enum DirectSolver<T> {
    Dense(LuFactors<T>),
    Band(BandLu<T>),
}

impl<T: Scalar> DirectSolver<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        if n <= 64 {
            return lu_factor(a).map(Self::Dense);
        }
        let perm = rcm_ordering(a);
        let (kl, ku) = bandwidths(a, &perm);
        let band_cost = n as f64 * kl as f64 * (kl + ku + 1) as f64;
        let dense_cost = (n as f64).powi(3) / 3.0;
        if band_cost < dense_cost {
            BandLu::factor(a, &perm).map(Self::Band)
        } else {
            lu_factor(a).map(Self::Dense)
        }
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vector<T>> {
        match self {
            Self::Dense(f) => f.solve(rhs),
            Self::Band(f) => f.solve(rhs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn random_well_conditioned(n: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.gen_range(-1.0..1.0);
            }
            a[(i, i)] += n as f64;
        }
        a
    }

    #[test]
    fn identity_solve_is_identity_map() {
        let f = lu_factor(&Matrix::<f64>::identity(3)).unwrap();
        let r = [1.5, -2.0, 7.25];
        assert_eq!(f.solve(&r).unwrap().as_slice(), &r);
    }

    #[test]
    fn two_by_two_system() {
        let f = lu_factor(&m(&[&[2.0, 1.0], &[1.0, 3.0]])).unwrap();
        let x = f.solve(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_system() {
        let f = lu_factor(&m(&[&[2.0, 0.0], &[0.0, 4.0]])).unwrap();
        assert_eq!(f.solve(&[2.0, 4.0]).unwrap().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn rank_one_is_singular() {
        let err = lu_factor(&m(&[&[1.0, 2.0], &[2.0, 4.0]])).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn non_square_rejected() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(lu_factor(&a), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn solve_length_mismatch() {
        let f = lu_factor(&Matrix::<f64>::identity(3)).unwrap();
        assert!(matches!(f.solve(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn recovers_known_solution_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_well_conditioned(5, &mut rng);
        let x0: Vec<f64> = (0..5).map(|i| (i as f64) - 1.5).collect();
        let b = a.mul_vec(&x0).unwrap();
        let x = lu_factor(&a).unwrap().solve(&b).unwrap();
        for (xi, ei) in x.iter().zip(&x0) {
            assert!((xi - ei).abs() < 1e-10);
        }
    }

    #[test]
    fn rms_norm_examples() {
        assert_eq!(weighted_rms_norm(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 1.0], 1e-3, 1e-3).unwrap(), 0.0);
        let one: f64 = weighted_rms_norm(&[1e-3], &[0.0], &[0.0], 1e-3, 0.0).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        // 2e-3 / (1e-3 + 1e-3 * 1) = 1, second entry 0 -> sqrt(1/2)
        let v = weighted_rms_norm(&[2e-3, 0.0], &[1.0, 1.0], &[1.0, 1.0], 1e-3, 1e-3).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(weighted_rms_norm(&[1.0], &[1.0, 2.0], &[1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn band_solver_matches_dense_on_grid_laplacian() {
        // 2-D 5-point stencil on a 12x12 grid, scrambled numbering
        let g = 12;
        let n = g * g;
        let scramble: Vec<usize> = (0..n).map(|i| (i * 37) % n).collect();
        let mut a = Matrix::<f64>::zeros(n, n);
        for x in 0..g {
            for y in 0..g {
                let i = scramble[x * g + y];
                a[(i, i)] = 4.5;
                let mut link = |xx: usize, yy: usize, w: f64| {
                    let j = scramble[xx * g + yy];
                    a[(i, j)] = w;
                };
                if x > 0 {
                    link(x - 1, y, -1.0);
                }
                if x + 1 < g {
                    link(x + 1, y, -0.7);
                }
                if y > 0 {
                    link(x, y - 1, -1.2);
                }
                if y + 1 < g {
                    link(x, y + 1, -1.0);
                }
            }
        }
        let perm = rcm_ordering(&a);
        let (kl, ku) = bandwidths(&a, &perm);
        assert!(kl <= 2 * g && ku <= 2 * g, "rcm bandwidth {kl},{ku}");
        let band = BandLu::factor(&a, &perm).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let xb = band.solve(&b).unwrap();
        let xd = lu_factor(&a).unwrap().solve(&b).unwrap();
        for (p, q) in xb.iter().zip(xd.iter()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert!(matches!(DirectSolver::factor(&a).unwrap(), DirectSolver::Band(_)));
    }

    #[test]
    fn band_pivoting_handles_zero_diagonal() {
        let a = m(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, 2.0]]);
        let perm = vec![0, 1, 2];
        let f = BandLu::factor(&a, &perm).unwrap();
        let x = f.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = a.mul_vec(&x).unwrap();
        for (ri, bi) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((ri - bi).abs() < 1e-14);
        }
    }

    #[test]
    fn generic_over_f32() {
        let a = Matrix::<f32>::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = lu_factor(&a).unwrap().solve(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn lu_residual_small(n in 1usize..50, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_well_conditioned(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = lu_factor(&a).unwrap().solve(&b).unwrap();
            let r = a.mul_vec(&x).unwrap().sub(&b);
            prop_assert!(r.norm2() <= 1e-10 * norm2(&b).max(1e-300));
        }

        #[test]
        fn rms_norm_homogeneous(c in -100.0f64..100.0, e in proptest::collection::vec(-1.0f64..1.0, 1..20)) {
            let n = e.len();
            let y = vec![0.3; n];
            let base = weighted_rms_norm(&e, &y, &y, 1e-4, 0.0).unwrap();
            let scaled: Vec<f64> = e.iter().map(|v| c * v).collect();
            let s = weighted_rms_norm(&scaled, &y, &y, 1e-4, 0.0).unwrap();
            prop_assert!((s - c.abs() * base).abs() <= 1e-12 * (1.0 + s));
        }
    }
}
