//! Small dense linear algebra: row-major matrices, spectral radius by power
//! iteration, and the largest singular value.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            bail!(Shape, "matrix dimensions must be positive, got {rows}x{cols}");
        }
        if data.len() != rows * cols {
            bail!(Shape, "{} entries do not fill a {rows}x{cols} matrix", data.len());
        }
        if data.iter().any(|v| !v.is_finite()) {
            bail!(Domain, "matrix entries must be finite");
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in d.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            bail!(Shape, "cannot add {}x{} and {}x{}", self.rows, self.cols, other.rows, other.cols);
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// `out = self · x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Self> {
        if self.cols != other.rows {
            bail!(Shape, "cannot multiply {}x{} by {}x{}", self.rows, self.cols, other.rows, other.cols);
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).sum()))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

const POWER_MAX_ITERS: usize = 10_000;
const INVARIANCE_TOL: f64 = 1e-12;

/// Largest eigenvalue modulus of a square matrix.
///
/// Power iteration on `x ← Ax/‖Ax‖`. Each step tests whether `span{x}` or
/// `span{x, Ax}` is numerically invariant; in the second case the dominant
/// eigenvalues form a conjugate (or real) pair and are read off the 2×2
/// projected matrix. Fails with a numeric error after 10⁴ steps.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    if a.rows != a.cols {
        bail!(Shape, "spectral radius needs a square matrix, got {}x{}", a.rows, a.cols);
    }
    let n = a.rows;
    if n == 1 {
        return Ok(a.data[0].abs());
    }
    if a.data.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * libm::sin(1.0 + i as f64)).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut q2 = vec![0.0; n];
    for _ in 0..POWER_MAX_ITERS {
        a.mul_vec_into(&x, &mut y);
        let ny = norm(&y);
        if ny == 0.0 {
            // x fell into the kernel; A^k x = 0 for every later iterate too
            return Ok(0.0);
        }
        let alpha = dot(&x, &y);
        for ((q, yi), xi) in q2.iter_mut().zip(&y).zip(&x) {
            *q = yi - alpha * xi;
        }
        let beta = norm(&q2);
        if beta <= INVARIANCE_TOL * ny {
            return Ok(alpha.abs());
        }
        q2.iter_mut().for_each(|v| *v /= beta);
        a.mul_vec_into(&q2, &mut z);
        let h12 = dot(&x, &z);
        let h22 = dot(&q2, &z);
        let nz = norm(&z);
        let res: f64 = z
            .iter()
            .zip(&x)
            .zip(&q2)
            .map(|((zi, xi), qi)| {
                let r = zi - h12 * xi - h22 * qi;
                r * r
            })
            .sum();
        if libm::sqrt(res) <= INVARIANCE_TOL * (ny + nz) {
            return Ok(max_eig_modulus_2x2(alpha, h12, beta, h22));
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    bail!(Numeric, "power iteration did not converge in {POWER_MAX_ITERS} steps")
}

fn max_eig_modulus_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let s = libm::sqrt(disc);
        (half_tr + s).abs().max((half_tr - s).abs())
    } else {
        libm::sqrt(det)
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn symmetric_eigenvalues(s: &Matrix) -> Result<Vec<f64>> {
    if s.rows != s.cols {
        bail!(Shape, "eigenvalues need a square matrix, got {}x{}", s.rows, s.cols);
    }
    let n = s.rows;
    let mut a = s.data.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i * n + j] * a[i * n + j]).sum();
        let diag: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= 1e-30 * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Ok(ev)
}

/// Largest singular value (the Euclidean operator norm).
pub fn sigma_max(m: &Matrix) -> f64 {
    let gram = m.transpose().matmul(m).expect("transpose product is always conformable");
    let top = symmetric_eigenvalues(&gram).expect("gram matrix is square")[0];
    libm::sqrt(top.max(0.0))
}
