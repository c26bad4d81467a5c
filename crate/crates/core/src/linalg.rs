//! Minimal dense linear algebra.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; [`Matrix`] is row-major with one
//! sample (a feature vector or a gradient) per row.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics
        let cols = self.cols.max(1);
        self.data.chunks_exact(cols).take(self.rows)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    /// Rows at `ids`, in the given order.
    pub fn select_rows(&self, ids: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(ids.len() * self.cols);
        for &i in ids {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: ids.len(),
            cols: self.cols,
            data,
        }
    }

    /// Appends the rows of `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows > 0 && other.rows > 0 && self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let cols = if self.rows > 0 { self.cols } else { other.cols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols,
            data,
        })
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `self · v`, one entry per row.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `selfᵀ · u`, one entry per column.
    pub fn tmul_vec(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &ui) in self.row_iter().zip(u) {
            axpy(ui, r, &mut out);
        }
        out
    }

    /// `selfᵀ · self` (cols × cols).
    pub fn gram(&self) -> Matrix {
        let d = self.cols;
        let mut g = Matrix::zeros(d, d);
        for r in self.row_iter() {
            for i in 0..d {
                let ri = r[i];
                if ri == 0.0 {
                    continue;
                }
                let gi = &mut g.data[i * d..(i + 1) * d];
                for j in i..d {
                    gi[j] += ri * r[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                g.data[i * d + j] = g.data[j * d + i];
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += a·x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Average of the rows.
pub fn mean_rows(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows == 0 {
        return Err(Error::EmptyInput);
    }
    let mut mu = vec![0.0; m.cols];
    for r in m.row_iter() {
        axpy(1.0, r, &mut mu);
    }
    let inv = 1.0 / m.rows as f64;
    mu.iter_mut().for_each(|v| *v *= inv);
    Ok(mu)
}

/// Subtracts `mu` from every row.
pub fn center_rows(m: &Matrix, mu: &[f64]) -> Result<Matrix> {
    if mu.len() != m.cols {
        return Err(Error::DimensionMismatch {
            expected: m.cols,
            got: mu.len(),
        });
    }
    let mut out = m.clone();
    for i in 0..out.rows {
        for (v, c) in out.row_mut(i).iter_mut().zip(mu) {
            *v -= c;
        }
    }
    Ok(out)
}

/// Result of [`top_right_singular_vector`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPair {
    /// Unit right singular vector. Sign is arbitrary.
    pub vector: Vec<f64>,
    /// `‖m·vector‖₂`
    pub value: f64,
    pub converged: bool,
    /// Set when the matrix has no nonzero direction.
    pub degenerate: bool,
    pub iterations: usize,
}

pub const DEFAULT_POWER_TOL: f64 = 1e-8;
pub const DEFAULT_POWER_ITERS: usize = 1000;

const COLLAPSE_NORM: f64 = 1e-12;
const MAX_RESTARTS: usize = 3;

/// Top right singular vector by power iteration on `mᵀm`.
///
/// The Gram matrix is formed explicitly only when `rows ≥ cols`; otherwise each
/// step applies `m` then `mᵀ`. Stops once the eigen-residual
/// `‖mᵀm·v − λv‖ ≤ tol·λ`. On non-convergence the last iterate is returned with
/// `converged == false`.
pub fn top_right_singular_vector(
    m: &Matrix,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> Result<SingularPair> {
    if m.rows == 0 || m.cols == 0 {
        return Err(Error::EmptyInput);
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let d = m.cols;
    let degenerate = || {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        SingularPair {
            vector: e1,
            value: 0.0,
            converged: true,
            degenerate: true,
            iterations: 0,
        }
    };
    if m.frobenius_norm() == 0.0 {
        return Ok(degenerate());
    }

    let gram = (m.rows >= m.cols).then(|| m.gram());
    let apply = |v: &[f64]| -> Vec<f64> {
        match &gram {
            Some(g) => g.mul_vec(v),
            None => m.tmul_vec(&m.mul_vec(v)),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut random_unit = || -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = norm(&v);
            if n > COLLAPSE_NORM {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    };

    let mut v = random_unit();
    let mut restarts = 0;
    let mut iterations = 0;
    let mut converged = false;
    let mut av = apply(&v);
    while iterations < max_iters {
        iterations += 1;
        let n = norm(&av);
        if n < COLLAPSE_NORM {
            restarts += 1;
            if restarts > MAX_RESTARTS {
                return Ok(degenerate());
            }
            v = random_unit();
            av = apply(&v);
            continue;
        }
        v = av.iter().map(|x| x / n).collect();
        av = apply(&v);
        let lambda = dot(&v, &av);
        let resid: f64 = av
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if resid <= tol * lambda.abs() {
            converged = true;
            break;
        }
    }
    let value = norm(&m.mul_vec(&v));
    Ok(SingularPair {
        vector: v,
        value,
        converged,
        degenerate: false,
        iterations,
    })
}

/// Solves `a·x = b` for symmetric positive-definite `a` by Cholesky.
///
/// A pivot at or below `1e-12·max(diag)` is treated as singular.
pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols,
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let scale = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut s = a.get(j, j);
        for k in 0..j {
            s -= l.get(j, k).powi(2);
        }
        if !(s > floor) {
            return Err(Error::Singular);
        }
        let ljj = s.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / ljj);
        }
    }
    // forward then back substitution
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l.get(i, k) * z[k];
        }
        z[i] = s / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}
