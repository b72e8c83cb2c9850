use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{DenseMatrix, Field};
use crate::error::{param, Result};

/// Independent zero-mean Gaussian entries with `E|a_ij|² = variance_of(i, j)`.
/// Complex entries are circular: real and imaginary parts each carry half the
/// variance.
pub fn sample_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance_of: impl Fn(usize, usize) -> f64,
    field: Field,
    rng: &mut R,
) -> Result<DenseMatrix> {
    let mut m = DenseMatrix::zeros(rows, cols, field);
    for i in 0..rows {
        for j in 0..cols {
            let var = variance_of(i, j);
            if !(var > 0.0 && var.is_finite()) {
                return param(format!(
                    "variance {var} at ({i},{j}) must be positive and finite"
                ));
            }
            m[(i, j)] = match field {
                Field::Real => {
                    let x: f64 = rng.sample(StandardNormal);
                    Complex64::new(x * var.sqrt(), 0.0)
                }
                Field::Complex => {
                    let sd = (0.5 * var).sqrt();
                    let x: f64 = rng.sample(StandardNormal);
                    let y: f64 = rng.sample(StandardNormal);
                    Complex64::new(x * sd, y * sd)
                }
            };
        }
    }
    Ok(m)
}

/// Haar-distributed orthogonal (real field) or unitary (complex field)
/// matrix: Gram-Schmidt QR of a Gaussian matrix, which leaves R with a
/// positive diagonal and therefore needs no further phase correction.
pub fn sample_haar<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Result<DenseMatrix> {
    if dim == 0 {
        return param("Haar dimension must be at least 1");
    }
    let g = sample_gaussian_matrix(dim, dim, |_, _| 1.0, field, rng)?;
    let mut cols: Vec<Vec<Complex64>> = (0..dim).map(|j| g.column(j)).collect();
    for j in 0..dim {
        // two passes of modified Gram-Schmidt keep orthogonality at roundoff
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let qk = &done[k];
                let proj: Complex64 = qk
                    .iter()
                    .zip(rest[0].iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for (x, q) in rest[0].iter_mut().zip(qk) {
                    *x -= proj * q;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    let mut q = DenseMatrix::zeros(dim, dim, field);
    for (j, col) in cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            q[(i, j)] = z;
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    #[test]
    fn real_moments() {
        let mut rng = substream(1, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                sample_gaussian_matrix(1, 1, |_, _| 1.0, Field::Real, &mut rng).unwrap()[(0, 0)].re
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let sigma = (1.0 / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * sigma);
        assert!((var - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn complex_circular_moments() {
        let mut rng = substream(2, 0);
        let n = 100_000;
        let zs: Vec<Complex64> = (0..n)
            .map(|_| {
                sample_gaussian_matrix(1, 1, |_, _| 1.0, Field::Complex, &mut rng).unwrap()[(0, 0)]
            })
            .collect();
        let abs2 = zs.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        let sq: Complex64 = zs.iter().map(|z| z * z).sum::<Complex64>() / n as f64;
        // |z|² ~ Exp(1): sd 1; z² has E|z²|² = 2 so each part sd ≤ 1
        assert!((abs2 - 1.0).abs() < 4.0 / (n as f64).sqrt());
        assert!(sq.norm() < 4.0 * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn variance_profile_entry() {
        // π = (2), π̂ = (3): variance (π_j + π̂_i)⁻¹ = 0.2
        let pi = [2.0];
        let pihat = [3.0];
        let var = |i: usize, j: usize| 1.0 / (pi[j] + pihat[i]);
        assert_eq!(var(0, 0), 0.2);
        assert!(
            sample_gaussian_matrix(1, 1, |_, _| 0.0, Field::Real, &mut substream(0, 0)).is_err()
        );
    }

    #[test]
    fn haar_is_orthonormal() {
        let mut rng = substream(3, 0);
        for field in [Field::Real, Field::Complex] {
            for dim in 1..=8 {
                let u = sample_haar(dim, field, &mut rng).unwrap();
                let g = u.adjoint().matmul(&u).unwrap();
                let mut err = 0.0f64;
                for i in 0..dim {
                    for j in 0..dim {
                        let target = if i == j { 1.0 } else { 0.0 };
                        err = err.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
                    }
                }
                assert!(err <= 1e-12, "dim {dim} err {err}");
            }
        }
    }

    #[test]
    fn haar_dim_one_signs() {
        let mut rng = substream(4, 0);
        let n = 10_000;
        let plus = (0..n)
            .filter(|_| sample_haar(1, Field::Real, &mut rng).unwrap()[(0, 0)].re > 0.0)
            .count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((plus as f64 - n as f64 / 2.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn haar_first_entry_second_moment() {
        let mut rng = substream(5, 0);
        let n = 100_000;
        for (field, dim) in [(Field::Real, 3usize), (Field::Complex, 4)] {
            let xs: Vec<f64> = (0..n)
                .map(|_| sample_haar(dim, field, &mut rng).unwrap()[(0, 0)].norm_sqr())
                .collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((mean - 1.0 / dim as f64).abs() < 4.0 * (var / n as f64).sqrt());
        }
    }
}
