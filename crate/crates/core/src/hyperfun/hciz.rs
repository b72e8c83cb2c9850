//! HCIZ orbit integrals.
//!
//! `h²_a(b) = ∫ exp(-Tr(U a U* b)) dU` over `U(N)` and
//! `h¹_a(b) = ∫ exp(-Tr(V a Vᵀ b)/2) dV` over `O(N)`, with `a`, `b` diagonal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::gt::{log_vandermonde, Estimate, QuadSpec};
use super::{bessel_b, HyperParams};
use crate::error::{param, Error, Result};
use crate::linalg::{sample_haar, Field};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarMcSpec {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "kebab-case")]
pub enum HciZRoute {
    /// Average over Haar samples.
    HaarMc(HaarMcSpec),
    /// `C_m det(e^{-a_i b_j}) / (Δ(a) Δ(b))`, `β = 2` only.
    Determinant,
    /// `B^{N,N}_β(a, -c b)`, integrated over the GT polytope of `a`.
    Bessel(QuadSpec),
    /// `B^{N,N}_β(b, -c a)`, integrated over the GT polytope of `b`.
    BesselDual(QuadSpec),
}

/// `C_m = (-1)^{m(m-1)/2} ∏_{k<m} k!`, so that the determinant route tends
/// to 1 as `b → 0`.
pub fn hciz_constant(m: usize) -> f64 {
    let sign = if (m * m.saturating_sub(1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    sign * (1..m).map(|k| ln_factorial(k as u64)).sum::<f64>().exp()
}

fn coupling(beta: u32) -> Result<f64> {
    match beta {
        2 => Ok(1.0),
        1 => Ok(0.5),
        _ => param(format!("β = {beta} must be 1 or 2")),
    }
}

fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn padded(x: &[f64], n: usize) -> Vec<f64> {
    let mut v = sorted_desc(x);
    v.resize(n, 0.0);
    sorted_desc(&v)
}

/// Orbit integral for `β ∈ {1, 2}`; the shorter argument is padded with zeros.
pub fn hciz(a: &[f64], b: &[f64], beta: u32, route: &HciZRoute) -> Result<Estimate> {
    let c = coupling(beta)?;
    let n = a.len().max(b.len());
    if n == 0 {
        return Ok(Estimate::exact(0.0));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return param("HCIZ arguments must be finite");
    }
    let (a, b) = (padded(a, n), padded(b, n));
    if let HciZRoute::HaarMc(spec) = route {
        return haar_mc(&a, &b, c, beta, spec);
    }
    // the integrand is constant when either argument is a multiple of the identity
    if a.iter().all(|&v| v == a[0]) {
        return Ok(Estimate::exact(-c * a[0] * b.iter().sum::<f64>()));
    }
    if b.iter().all(|&v| v == b[0]) {
        return Ok(Estimate::exact(-c * b[0] * a.iter().sum::<f64>()));
    }
    match route {
        HciZRoute::Determinant => {
            if beta != 2 {
                return param("the determinant route needs β = 2");
            }
            determinant(&a, &b)
        }
        HciZRoute::Bessel(quad) => via_bessel(&a, &b, c, beta, quad),
        HciZRoute::BesselDual(quad) => via_bessel(&b, &a, c, beta, quad),
        HciZRoute::HaarMc(_) => unreachable!(),
    }
}

fn haar_mc(a: &[f64], b: &[f64], c: f64, beta: u32, spec: &HaarMcSpec) -> Result<Estimate> {
    if spec.samples < 2 {
        return param("Haar Monte Carlo needs at least 2 samples");
    }
    let n = a.len();
    let field = Field::from_beta(beta)?;
    let exps: Vec<f64> = (0..spec.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(spec.seed, k as u64);
            let u = sample_haar(n, field, &mut rng)?;
            let mut tr = 0.0;
            for (j, &bj) in b.iter().enumerate() {
                if bj == 0.0 {
                    continue;
                }
                let row: f64 = a
                    .iter()
                    .enumerate()
                    .map(|(i, &ai)| u[(j, i)].norm_sqr() * ai)
                    .sum();
                tr += bj * row;
            }
            Ok(-c * tr)
        })
        .collect::<Result<_>>()?;
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nf = exps.len() as f64;
    let vals: Vec<f64> = exps.iter().map(|e| (e - max).exp()).collect();
    let mean = vals.iter().sum::<f64>() / nf;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(Estimate {
        log_value: max + mean.ln(),
        rel_error: (var / nf).sqrt() / mean,
    })
}

fn determinant(a: &[f64], b: &[f64]) -> Result<Estimate> {
    let n = a.len();
    if a.windows(2).any(|w| w[0] == w[1]) || b.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate(
            "determinant route needs distinct entries in a and b".into(),
        ));
    }
    let mut mat: Vec<Vec<f64>> = a
        .iter()
        .map(|&ai| b.iter().map(|&bj| (-ai * bj).exp()).collect())
        .collect();
    let det = lu_det(&mut mat);
    let value = hciz_constant(n) * det;
    if !(value > 0.0) {
        return Err(Error::Degenerate(format!(
            "determinant route lost all precision (value {value})"
        )));
    }
    let log_value = value.ln() - log_vandermonde(a) - log_vandermonde(b);
    Ok(Estimate {
        log_value,
        rel_error: 1e-13 * n as f64,
    })
}

fn lu_det(mat: &mut [Vec<f64>]) -> f64 {
    let n = mat.len();
    let mut det = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| mat[i][col].abs().total_cmp(&mat[j][col].abs()))
            .unwrap();
        if mat[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            mat.swap(piv, col);
            det = -det;
        }
        det *= mat[col][col];
        for r in col + 1..n {
            let f = mat[r][col] / mat[col][col];
            for k in col..n {
                mat[r][k] -= f * mat[col][k];
            }
        }
    }
    det
}

/// `B^{N,N} = B^{k,N}` after dropping the zeros of the first argument.
fn via_bessel(a: &[f64], b: &[f64], c: f64, beta: u32, quad: &QuadSpec) -> Result<Estimate> {
    let theta = beta as f64 / 2.0;
    let lambda: Vec<f64> = a.iter().copied().filter(|&v| v > 0.0).collect();
    if a.iter().any(|&v| v < 0.0) {
        return param("the Bessel routes need a nonnegative GT argument");
    }
    let s: Vec<f64> = b.iter().map(|&v| -c * v).collect();
    let hp = HyperParams::new(theta, lambda, s)?;
    bessel_b(&hp, quad)
}
