//! Dense self-adjoint linear algebra for small dimensions.
//!
//! Matrices store complex entries throughout; the [`Field`] tag records
//! whether the matrix is meant to be real (β = 1) or complex (β = 2), and
//! real matrices keep exactly zero imaginary parts.

mod eigen;
mod random;

pub use eigen::{cholesky, eig_self_adjoint, eigh, generalized_eig, psd_spectrum};
pub use random::{sample_gaussian_matrix, sample_haar};

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

use crate::error::{param, Error, Result};

/// Scalar field of a matrix model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Field {
    /// β = 1
    Real,
    /// β = 2
    Complex,
}

impl Field {
    pub fn from_beta(beta: u32) -> Result<Self> {
        match beta {
            1 => Ok(Field::Real),
            2 => Ok(Field::Complex),
            b => param(format!("beta must be 1 or 2, got {b}")),
        }
    }

    pub fn beta(self) -> u32 {
        match self {
            Field::Real => 1,
            Field::Complex => 2,
        }
    }

    /// θ = β/2.
    pub fn theta(self) -> f64 {
        self.beta() as f64 / 2.0
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    field: Field,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize, field: Field) -> Self {
        Self {
            rows,
            cols,
            field,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize, field: Field) -> Self {
        let mut m = Self::zeros(dim, dim, field);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return param("ragged rows");
        }
        let data = rows
            .iter()
            .flatten()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Ok(Self {
            rows: r,
            cols: c,
            field: Field::Real,
            data,
        })
    }

    pub fn from_complex(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return param(format!(
                "expected {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        Ok(Self {
            rows,
            cols,
            field: Field::Complex,
            data,
        })
    }

    pub fn diag(values: &[f64], field: Field) -> Self {
        let mut m = Self::zeros(values.len(), values.len(), field);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows, self.field);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Validation(format!(
                "shape mismatch {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let field = if self.field == Field::Complex || other.field == Field::Complex {
            Field::Complex
        } else {
            Field::Real
        };
        let mut out = Self::zeros(self.rows, other.cols, field);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// `A* A` for the first `top_rows` rows of `A`.
    pub fn gram_of_top_rows(&self, top_rows: usize) -> SelfAdjointMatrix {
        let r = top_rows.min(self.rows);
        let n = self.cols;
        let mut out = Self::zeros(n, n, self.field);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..r {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)] = Complex64::new(out[(i, i)].re, 0.0);
        }
        SelfAdjointMatrix { inner: out }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Validation("shape mismatch in add".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        if other.field == Field::Complex {
            out.field = Field::Complex;
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Square matrix equal to its adjoint within `1e-12` relative.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfAdjointMatrix {
    inner: DenseMatrix,
}

impl SelfAdjointMatrix {
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, not square",
                m.rows, m.cols
            )));
        }
        let scale = m.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..m.rows {
            for j in i..m.cols {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > 1e-12 * scale {
                    return Err(Error::Validation(format!(
                        "entry ({i},{j}) breaks self-adjointness"
                    )));
                }
            }
        }
        Ok(Self { inner: m })
    }

    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.inner
    }
}

/// Real eigenvalue tuple in weakly decreasing order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts `values` into decreasing order. NaN entries are rejected.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return param("spectrum contains NaN");
        }
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { values })
    }

    /// Wraps values already in decreasing order.
    pub fn from_sorted(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) || values.windows(2).any(|w| w[0] < w[1]) {
            return param("values are not in decreasing order");
        }
        Ok(Self { values })
    }

    pub fn empty() -> Self {
        Self { values: Vec::new() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// |λ| = Σ λ_i.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] > w[1])
    }

    /// Whether `inner ≺ self`: inner has length `len` or `len - 1` and its
    /// entries sit between consecutive entries of `self` (a missing lower
    /// neighbour counts as 0). Non-strict comparison.
    pub fn interlaced_by(&self, inner: &Spectrum) -> bool {
        interlaces(inner.values(), self.values(), false)
    }
}

impl From<Spectrum> for Vec<f64> {
    fn from(s: Spectrum) -> Self {
        s.values
    }
}

/// `lower ≺ upper` under the truncated Gelfand-Tsetlin convention: for
/// `len(lower) = len(upper) - 1` the usual chain, for equal lengths the
/// chain closes on an implicit trailing 0 of `upper`.
pub fn interlaces(lower: &[f64], upper: &[f64], strict: bool) -> bool {
    let k = lower.len();
    let u = upper.len();
    if !(k + 1 == u || k == u) {
        return false;
    }
    let le = |a: f64, b: f64| if strict { a < b } else { a <= b };
    (0..k).all(|i| {
        let above = upper[i];
        let below = if i + 1 < u { upper[i + 1] } else { 0.0 };
        le(lower[i], above) && le(below, lower[i])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_sorts_decreasing() {
        let s = Spectrum::new(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[3.0, 2.0, 1.0]);
        assert!(Spectrum::from_sorted(vec![1.0, 2.0]).is_err());
        assert!(Spectrum::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn interlacing_conventions() {
        assert!(interlaces(&[2.0], &[3.0, 1.0], true));
        assert!(!interlaces(&[0.5], &[3.0, 1.0], false));
        // equal lengths close on an implicit zero
        assert!(interlaces(&[2.0, 0.5], &[3.0, 1.0], true));
        assert!(!interlaces(&[2.0, 1.5], &[3.0, 1.0], false));
        assert!(interlaces(&[], &[1.0], true));
    }

    #[test]
    fn self_adjoint_validation() {
        let m = DenseMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).unwrap();
        assert!(SelfAdjointMatrix::new(m).is_err());
        let m = DenseMatrix::from_real_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(SelfAdjointMatrix::new(m).is_ok());
    }
}
