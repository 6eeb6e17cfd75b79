//! Dense real linear algebra at small dimension.
//!
//! Everything here works on row-major `f64` storage. The routines are
//! written for matrices of a few dozen rows at most: eigenvalues come from
//! balancing, Householder reduction to Hessenberg form and the shifted
//! double-step QR iteration; symmetric problems use cyclic Jacobi
//! rotations; null spaces use one-sided Jacobi SVD.

mod dense;
mod eigen;
mod spd;

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dense::{null_space, solve_linear, symmetric_eigen, SymmetricEigen};
pub use eigen::{eigenvalues, eigenvalues_raw, real_eigenvectors, spectral_radius, Eigenvalue};
pub use spd::{solve_spd_system, spd_sqrt, SpdConstraint, SymmetricMatrix};

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

/// Default tolerance for numerical comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Induced operator norm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    One,
    #[default]
    Two,
    Inf,
}

impl NormKind {
    /// Vector norm paired with this operator norm.
    pub fn vector_norm(self, x: &[f64]) -> f64 {
        match self {
            NormKind::One => x.iter().map(|v| v.abs()).sum(),
            NormKind::Two => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormKind::Inf => x.iter().fold(0.0, |m, v| f64::max(m, v.abs())),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::One => "one",
            NormKind::Two => "two",
            NormKind::Inf => "inf",
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "one" | "1" => Ok(NormKind::One),
            "two" | "2" => Ok(NormKind::Two),
            "inf" | "infinity" => Ok(NormKind::Inf),
            other => Err(Error::InvalidInput(format!("unknown norm kind `{other}`"))),
        }
    }
}

/// Square real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a `dim × dim` matrix from row-major entries.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        if dim > MAX_DIM {
            return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    pub(crate) fn from_raw(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j];
            }
        }
        Self::from_raw(n, out)
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * n..(k + 1) * n];
                for (d, &b) in dst.iter_mut().zip(rrow) {
                    *d += a * b;
                }
            }
        }
        Self::from_raw(n, out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, x.len(), "mul_vec dimension mismatch");
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Matrix {
        Self::from_raw(self.dim, self.data.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Self::from_raw(self.dim, self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Self::from_raw(self.dim, self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect())
    }

    pub fn pow(&self, k: u32) -> Matrix {
        let mut out = Matrix::identity(self.dim);
        for _ in 0..k {
            out = self.matmul(&out);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.dim;
        let scale = self.max_abs().max(1.0);
        (0..n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let piv = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap();
            if a[piv * n + k] == 0.0 {
                return 0.0;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                det = -det;
            }
            let p = a[k * n + k];
            det *= p;
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                if f != 0.0 {
                    for j in k..n {
                        a[i * n + j] -= f * a[k * n + j];
                    }
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination; `None` when numerically singular.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.dim;
        let mut cols = Vec::with_capacity(n * n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            cols.push(solve_linear(&self.data, n, &e).ok()?);
        }
        let mut out = vec![0.0; n * n];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                out[i * n + j] = col[i];
            }
        }
        Some(Matrix::from_raw(n, out))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Induced operator norm of `m`.
///
/// `One` is the largest absolute column sum, `Inf` the largest absolute row
/// sum, and `Two` the largest singular value, computed as the square root of
/// the spectral radius of `mᵀm`.
pub fn induced_norm(m: &Matrix, kind: NormKind) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = m.dim();
    Ok(match kind {
        NormKind::One => (0..n)
            .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Inf => (0..n)
            .map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Two => {
            let gram = m.transpose().matmul(m);
            let eig = symmetric_eigen(gram.as_slice(), n);
            eig.values.iter().fold(0.0_f64, |a, &v| a.max(v)).max(0.0).sqrt()
        }
    })
}

/// Relative-or-absolute closeness: relative when the reference is ≥ 1.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
