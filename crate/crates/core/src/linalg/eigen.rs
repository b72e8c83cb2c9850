//! Cyclic Jacobi eigensolver for self-adjoint matrices.

use num_complex::Complex64;

use super::{DenseMatrix, SelfAdjointMatrix, Spectrum};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (decreasing) and the unitary matrix of eigenvectors (columns
/// in the same order), so that `M = Q diag(values) Q*`.
pub fn eigh(m: &SelfAdjointMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = m.dim();
    let mut a = m.matrix().clone();
    let mut v = DenseMatrix::identity(n, a.field());
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap());
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut q = DenseMatrix::zeros(n, n, v.field());
    for (new_j, &old_j) in order.iter().enumerate() {
        for i in 0..n {
            q[(i, new_j)] = v[(i, old_j)];
        }
    }
    (values, q)
}

/// One Jacobi rotation annihilating entry (p, q).
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let r = g.norm();
    if r == 0.0 {
        return;
    }
    let n = a.rows();
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // phase e^{-iφ} turns the pivot real, then a real rotation diagonalises
    let phase = (g / r).conj();
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase * s;
    let u_qq = phase * c;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * u_pp + akq * u_qp;
        a[(k, q)] = akp * u_pq + akq * u_qq;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * u_pp + vkq * u_qp;
        v[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
        a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
}

/// All eigenvalues, decreasing.
pub fn eig_self_adjoint(m: &SelfAdjointMatrix) -> Spectrum {
    let (values, _) = eigh(m);
    Spectrum::from_sorted(values).expect("eigenvalues are sorted")
}

/// Spectrum of a Gram matrix: roundoff negatives down to `-1e-12` (relative to
/// the matrix scale, at least absolute) are clamped to 0, anything more
/// negative is rejected.
pub fn psd_spectrum(m: &SelfAdjointMatrix) -> Result<Spectrum> {
    let scale = m.matrix().max_abs().max(1.0);
    let mut values = eig_self_adjoint(m).values().to_vec();
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-12 * scale {
                return Err(Error::Validation(format!(
                    "eigenvalue {v:e} of a Gram matrix"
                )));
            }
            *v = 0.0;
        }
    }
    Spectrum::from_sorted(values)
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(m: &SelfAdjointMatrix) -> Result<DenseMatrix> {
    let n = m.dim();
    let a = m.matrix();
    let mut l = DenseMatrix::zeros(n, n, a.field());
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Degenerate("matrix is not positive definite".into()));
        }
        let ljj = d.sqrt();
        l[(j, j)] = Complex64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Eigenvalues (decreasing) of the pencil `A v = λ B v` for self-adjoint `A`
/// and positive definite `B`, via `L⁻¹ A L⁻*` with `B = L L*`. Also returns a
/// condition estimate of `B` from its Cholesky diagonal.
pub fn generalized_eig(a: &SelfAdjointMatrix, b: &SelfAdjointMatrix) -> Result<(Spectrum, f64)> {
    let n = a.dim();
    if b.dim() != n {
        return Err(Error::Validation("pencil dimensions differ".into()));
    }
    let l = cholesky(b)?;
    let (dmin, dmax) = (0..n)
        .map(|i| l[(i, i)].re)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| {
            (lo.min(d), hi.max(d))
        });
    let condition = (dmax / dmin).powi(2);
    // W = L⁻¹ A by forward substitution, then C = L⁻¹ W* (= L⁻¹ A L⁻*).
    let forward = |rhs: &DenseMatrix| {
        let mut x = DenseMatrix::zeros(n, n, rhs.field());
        for col in 0..n {
            for i in 0..n {
                let mut s = rhs[(i, col)];
                for k in 0..i {
                    s -= l[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / l[(i, i)];
            }
        }
        x
    };
    let w = forward(a.matrix());
    let mut c = forward(&w.adjoint());
    for i in 0..n {
        c[(i, i)] = Complex64::new(c[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (c[(i, j)] + c[(j, i)].conj()) * 0.5;
            c[(i, j)] = avg;
            c[(j, i)] = avg.conj();
        }
    }
    let c = SelfAdjointMatrix::new(c)?;
    Ok((eig_self_adjoint(&c), condition))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_gaussian_matrix, sample_haar, Field};
    use crate::rng::substream;

    fn sa(rows: &[Vec<f64>]) -> SelfAdjointMatrix {
        SelfAdjointMatrix::new(DenseMatrix::from_real_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn identity_and_diagonal() {
        let id = SelfAdjointMatrix::new(DenseMatrix::identity(3, Field::Real)).unwrap();
        assert_eq!(eig_self_adjoint(&id).values(), &[1.0, 1.0, 1.0]);
        let d = SelfAdjointMatrix::new(DenseMatrix::diag(&[1.0, 3.0, 2.0], Field::Real)).unwrap();
        assert_eq!(eig_self_adjoint(&d).values(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn two_by_two_matches_quadratic_formula() {
        let mut rng = substream(11, 0);
        for _ in 0..50 {
            let g = sample_gaussian_matrix(2, 2, |_, _| 1.0, Field::Real, &mut rng).unwrap();
            let (a, b, c) = (g[(0, 0)].re, g[(0, 1)].re + g[(1, 0)].re, g[(1, 1)].re);
            let m = sa(&[vec![a, b], vec![b, c]]);
            let mean = 0.5 * (a + c);
            let rad = (0.25 * (a - c).powi(2) + b * b).sqrt();
            let ev = eig_self_adjoint(&m);
            assert!((ev.values()[0] - (mean + rad)).abs() <= 1e-12 * (1.0 + rad));
            assert!((ev.values()[1] - (mean - rad)).abs() <= 1e-12 * (1.0 + rad));
        }
    }

    #[test]
    fn complex_reconstruction_residual() {
        let mut rng = substream(12, 0);
        for dim in [1, 2, 5, 9] {
            let g =
                sample_gaussian_matrix(dim + 2, dim, |_, _| 1.0, Field::Complex, &mut rng).unwrap();
            let m = g.gram_of_top_rows(dim + 2);
            let (vals, q) = eigh(&m);
            let recon = q
                .matmul(&DenseMatrix::diag(&vals, Field::Complex))
                .unwrap()
                .matmul(&q.adjoint())
                .unwrap();
            let mut diff = recon.clone();
            for i in 0..dim {
                for j in 0..dim {
                    diff[(i, j)] = recon[(i, j)] - m.matrix()[(i, j)];
                }
            }
            assert!(diff.frobenius_norm() <= 1e-10 * m.matrix().frobenius_norm());
        }
    }

    #[test]
    fn unitary_conjugation_preserves_spectrum() {
        let mut rng = substream(13, 0);
        let g = sample_gaussian_matrix(4, 4, |_, _| 1.0, Field::Complex, &mut rng).unwrap();
        let m = g.gram_of_top_rows(4);
        let u = sample_haar(4, Field::Complex, &mut rng).unwrap();
        let conj = u.matmul(m.matrix()).unwrap().matmul(&u.adjoint()).unwrap();
        let mut conj = conj;
        for i in 0..4 {
            for j in 0..4 {
                if j < i {
                    conj[(i, j)] = conj[(j, i)].conj();
                }
            }
            conj[(i, i)].im = 0.0;
        }
        let a = eig_self_adjoint(&m);
        let b = eig_self_adjoint(&SelfAdjointMatrix::new(conj).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-10 * a.values()[0]);
        }
    }

    #[test]
    fn psd_clamping() {
        let m = sa(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        let s = psd_spectrum(&m).unwrap();
        assert_eq!(s.values()[1], 0.0);
        let bad = sa(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(psd_spectrum(&bad).is_err());
    }

    #[test]
    fn generalized_pencil_of_identity_denominator() {
        let a = sa(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let b = sa(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let (s, cond) = generalized_eig(&a, &b).unwrap();
        let direct = eig_self_adjoint(&a);
        for (x, y) in s.values().iter().zip(direct.values()) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!((cond - 1.0).abs() < 1e-15);
    }
}
