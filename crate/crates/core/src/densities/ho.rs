//! Jacobi corners, the Heckman-Opdam ensemble, and the `μ = -log λ` map
//! between them.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{scaled, strict_support, sum_ln, sum_ln_one_minus_exp, total, LogValue};
use crate::ensembles::{JacobiParams, MultilevelSample};
use crate::error::{param, Result};
use crate::hyperfun::{
    ho_f, ho_f_tilde, log_cross_vandermonde, log_vandermonde, log_vandermonde_exp,
    log_vandermonde_trig, HyperParams, QuadSpec,
};
use crate::linalg::Spectrum;

/// Parameters `(θ, π, π̂)` of the Heckman-Opdam ensemble; `π̂` is
/// zero-extended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoParams {
    pub theta: f64,
    pub pi: Vec<f64>,
    pub pi_hat: Vec<f64>,
}

impl HoParams {
    pub fn new(theta: f64, pi: Vec<f64>, pi_hat: Vec<f64>) -> Result<Self> {
        let p = Self { theta, pi, pi_hat };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return param(format!("θ = {} must be positive", self.theta));
        }
        if self.pi.is_empty() || self.pi.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return param("π must be nonempty with positive entries");
        }
        if self.pi_hat.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return param("π̂ entries must be nonnegative");
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    fn pi_hat_at(&self, l: usize) -> f64 {
        self.pi_hat.get(l - 1).copied().unwrap_or(0.0)
    }

    /// `Σ_{i≤m} Σ_j [ln Γ(θ + θπ_j + θπ̂_i) - ln Γ(θπ_j + θπ̂_i)]`.
    fn log_gamma_ratio(&self, m: usize) -> f64 {
        let th = self.theta;
        (1..=m)
            .map(|i| {
                let ph = self.pi_hat_at(i);
                self.pi
                    .iter()
                    .map(|&pj| ln_gamma(th + th * (pj + ph)) - ln_gamma(th * (pj + ph)))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// The parameters `π = (A-n+1, …, A)`, `π̂ = (0, 1, …, m-1)` carried by the
/// transformed Jacobi corners.
pub fn ho_from_jacobi(p: &JacobiParams) -> HoParams {
    HoParams {
        theta: p.beta as f64 / 2.0,
        pi: ((p.a - p.n + 1)..=p.a).map(|v| v as f64).collect(),
        pi_hat: (0..p.m_max).map(|v| v as f64).collect(),
    }
}

/// `μ = -log λ` level by level; the log-Jacobian `Σ log λ` converts a
/// density in `λ` into one in `μ`.
pub fn transform_jacobi_to_ho(levels: &MultilevelSample) -> Result<(MultilevelSample, f64)> {
    let mut jac = 0.0;
    let mut out = Vec::with_capacity(levels.depth());
    for lev in &levels.levels {
        let mut mu = Vec::with_capacity(lev.len());
        for &l in lev.values() {
            if !(l > 0.0 && l <= 1.0) {
                return param(format!("λ = {l} is outside (0, 1]"));
            }
            jac += l.ln();
            mu.push(-l.ln());
        }
        out.push(Spectrum::new(mu)?);
    }
    Ok((
        MultilevelSample {
            levels: out,
            provenance: levels.provenance,
        },
        jac,
    ))
}

/// Inverse of [`transform_jacobi_to_ho`]; the returned log-Jacobian is `|μ|`
/// summed over all levels.
pub fn transform_ho_to_jacobi(levels: &MultilevelSample) -> Result<(MultilevelSample, f64)> {
    let mut jac = 0.0;
    let mut out = Vec::with_capacity(levels.depth());
    for lev in &levels.levels {
        if lev.values().iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return param("μ must be finite and nonnegative");
        }
        jac += total(lev.values());
        out.push(Spectrum::new(
            lev.values().iter().map(|&v| (-v).exp()).collect(),
        )?);
    }
    Ok((
        MultilevelSample {
            levels: out,
            provenance: levels.provenance,
        },
        jac,
    ))
}

/// Levels strictly interlacing inside `(0, 1)`.
fn jacobi_support<'a>(
    levels: &'a MultilevelSample,
    p: &JacobiParams,
) -> Result<Option<Vec<&'a [f64]>>> {
    p.validate()?;
    let m = levels.depth();
    if m == 0 || m > p.n {
        return param(format!("need 1 ≤ levels ≤ n = {}, got {m}", p.n));
    }
    let Some(vals) = strict_support(levels, p.n) else {
        return Ok(None);
    };
    if vals[m - 1][0] >= 1.0 {
        return Ok(None);
    }
    Ok(Some(vals))
}

fn jacobi_log(vals: &[&[f64]], p: &JacobiParams, top_exps: (f64, f64)) -> f64 {
    let m = vals.len();
    let top = vals[m - 1];
    let mut log = log_vandermonde(top) + scaled(top_exps.0, sum_ln(top));
    log += scaled(top_exps.1, top.iter().map(|&v| (-v).ln_1p()).sum());
    for l in 0..m - 1 {
        log += match p.beta {
            2 => -2.0 * sum_ln(vals[l]),
            _ => {
                -sum_ln(vals[l]) + log_vandermonde(vals[l])
                    - 0.5 * log_cross_vandermonde(vals[l], vals[l + 1])
            }
        };
    }
    log
}

/// Unnormalized joint log density of the Jacobi corners `λ^1 ≺ ⋯ ≺ λ^m`.
///
/// For `β = 1` the top-level exponents are `(A+m-n-2)/2` on `λ` and
/// `(n-m-1)/2` on `1-λ`, which is what the change of variables from the
/// conditional Wishart density gives; at `m = 1` this is
/// `Beta((A-n+1)/2, n/2)`. The exponents as usually printed are available
/// from [`logdens_jacobi_as_printed`].
pub fn logdens_jacobi(levels: &MultilevelSample, p: &JacobiParams) -> Result<LogValue> {
    let Some(vals) = jacobi_support(levels, p)? else {
        return Ok(LogValue::ZERO);
    };
    let (a, n, m) = (p.a as f64, p.n as f64, vals.len() as f64);
    let exps = match p.beta {
        2 => (a + m - n - 1.0, n - m),
        _ => ((a + m - n - 2.0) / 2.0, (n - m - 1.0) / 2.0),
    };
    Ok(LogValue::from_log(jacobi_log(&vals, p, exps)))
}

/// As [`logdens_jacobi`], with the `β = 1` exponents `(A+m-n-4)/2` and
/// `(n-m+1)/2`.
pub fn logdens_jacobi_as_printed(levels: &MultilevelSample, p: &JacobiParams) -> Result<LogValue> {
    let Some(vals) = jacobi_support(levels, p)? else {
        return Ok(LogValue::ZERO);
    };
    let (a, n, m) = (p.a as f64, p.n as f64, vals.len() as f64);
    let exps = match p.beta {
        2 => (a + m - n - 1.0, n - m),
        _ => ((a + m - n - 4.0) / 2.0, (n - m + 1.0) / 2.0),
    };
    Ok(LogValue::from_log(jacobi_log(&vals, p, exps)))
}

/// The `β = 2` Jacobi density written in `μ = -log λ`:
/// `Δ(e^{-μ^m}) e^{-(A+m-n)|μ^m|} ∏(1-e^{-μ^m_i})^{n-m} ∏_{l<m} e^{|μ^l|}`.
pub fn logdens_jacobi_ho_form(levels: &MultilevelSample, p: &JacobiParams) -> Result<LogValue> {
    p.validate()?;
    if p.beta != 2 {
        return param("the closed μ-form is for β = 2");
    }
    let Some(vals) = strict_support(levels, p.n) else {
        return Ok(LogValue::ZERO);
    };
    let m = vals.len();
    let top = vals[m - 1];
    let mut log = log_vandermonde_exp(top) - (p.a + m - p.n) as f64 * total(top);
    log += (p.n - m) as f64 * sum_ln_one_minus_exp(top);
    log += vals[..m - 1].iter().map(|l| total(l)).sum::<f64>();
    Ok(LogValue::from_log(log))
}

/// `log Δ(e^{-a}, e^{-b})`.
fn log_cross_vandermonde_exp(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in a {
        for &y in b {
            s += -x.min(y) + (-(-(x - y).abs()).exp_m1()).ln();
        }
    }
    s
}

fn level_tilt(p: &HoParams, levels: &[&[f64]]) -> f64 {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (idx, lev) in levels.iter().enumerate() {
        let t = total(lev);
        acc += p.pi_hat_at(idx + 1) * (t - prev);
        prev = t;
    }
    -p.theta * acc
}

/// Unnormalized joint log density of the Heckman-Opdam ensemble; `F̃` is
/// integrated over the GT polytope of `μ^m`.
pub fn logdens_ho_joint(
    levels: &MultilevelSample,
    p: &HoParams,
    quad: &QuadSpec,
) -> Result<LogValue> {
    p.validate()?;
    let n = p.n();
    let th = p.theta;
    let Some(vals) = strict_support(levels, n) else {
        return Ok(LogValue::ZERO);
    };
    let m = vals.len();
    if m == 0 {
        return param("need at least one level");
    }
    let k = m.min(n);
    let top = vals[m - 1];
    let mut log = p.log_gamma_ratio(m) + th * log_vandermonde_trig(top) + level_tilt(p, &vals);
    log += th * (n - k) as f64 * sum_ln_one_minus_exp(top);
    log += scaled(
        th - 1.0,
        sum_ln_one_minus_exp(vals[k - 1]) - sum_ln_one_minus_exp(top),
    );
    for l in 0..m - 1 {
        let (a, b) = (vals[l], vals[l + 1]);
        let r = log_cross_vandermonde_exp(a, b) - log_vandermonde_exp(a) - log_vandermonde_exp(b)
            + total(a);
        log += scaled(th - 1.0, r);
    }
    let s: Vec<f64> = p.pi.iter().map(|&pi| -th * pi).collect();
    let ft = ho_f_tilde(&HyperParams::new(th, top.to_vec(), s)?, quad)?;
    Ok(LogValue::from_log(log + ft.log_value))
}

/// Unnormalized log density of the level-`m` Heckman-Opdam marginal.
pub fn logdens_ho_marginal(
    mu: &Spectrum,
    m: usize,
    p: &HoParams,
    quad: &QuadSpec,
) -> Result<LogValue> {
    p.validate()?;
    let n = p.n();
    let th = p.theta;
    let k = m.min(n);
    let x = mu.values();
    if m == 0 {
        return param("level must be at least 1");
    }
    if x.len() != k {
        return param(format!("level {m} has {k} entries, got {}", x.len()));
    }
    if x.windows(2).any(|w| !(w[0] > w[1])) || x.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Ok(LogValue::ZERO);
    }
    let mut log = p.log_gamma_ratio(m) + 2.0 * th * log_vandermonde_trig(x);
    log += th * (m.max(n) - k) as f64 * sum_ln_one_minus_exp(x);
    let s_hat: Vec<f64> = (1..=m).map(|l| -th * p.pi_hat_at(l)).collect();
    let s: Vec<f64> = p.pi.iter().map(|&pi| -th * pi).collect();
    let f = ho_f(&HyperParams::new(th, x.to_vec(), s_hat)?, quad)?;
    let ft = ho_f_tilde(&HyperParams::new(th, x.to_vec(), s)?, quad)?;
    Ok(LogValue::from_log(log + f.log_value + ft.log_value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(levels: &[&[f64]]) -> MultilevelSample {
        MultilevelSample::new(
            levels
                .iter()
                .map(|l| Spectrum::new(l.to_vec()).unwrap())
                .collect(),
        )
    }

    fn de() -> QuadSpec {
        QuadSpec::double_exponential(4, 1e-7)
    }

    #[test]
    fn one_level_jacobi_shapes() {
        let p2 = JacobiParams::new(2, 4, 3, 1).unwrap();
        let p1 = JacobiParams::new(1, 5, 3, 1).unwrap();
        let f = |p: &JacobiParams, x: f64, printed: bool| {
            let s = sample(&[&[x]]);
            if printed {
                logdens_jacobi_as_printed(&s, p)
            } else {
                logdens_jacobi(&s, p)
            }
            .unwrap()
            .ln()
        };
        // differences of logs at two points isolate the exponents
        let beta_shape =
            |a: f64, b: f64, x: f64, y: f64| a * (x / y).ln() + b * ((1.0 - x) / (1.0 - y)).ln();
        assert_relative_eq!(
            f(&p2, 0.3, false) - f(&p2, 0.6, false),
            beta_shape(1.0, 2.0, 0.3, 0.6),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            f(&p1, 0.3, false) - f(&p1, 0.6, false),
            beta_shape(0.5, 0.5, 0.3, 0.6),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            f(&p1, 0.3, true) - f(&p1, 0.6, true),
            beta_shape(-0.5, 1.5, 0.3, 0.6),
            epsilon = 1e-12
        );
    }

    #[test]
    fn support_violations() {
        let p = JacobiParams::new(1, 5, 2, 2).unwrap();
        assert!(logdens_jacobi(&sample(&[&[0.5], &[0.6, 0.1]]), &p)
            .unwrap()
            .ln()
            .is_finite());
        // tie across levels and an entry at 1
        assert!(logdens_jacobi(&sample(&[&[0.6], &[0.6, 0.1]]), &p)
            .unwrap()
            .is_zero());
        assert!(logdens_jacobi(&sample(&[&[0.5], &[1.0, 0.1]]), &p)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn transform_round_trip() {
        let s = sample(&[&[0.4], &[1.0, 0.25]]);
        let (mu, jac) = transform_jacobi_to_ho(&s).unwrap();
        assert_eq!(mu.level(2).values()[1], 0.0);
        assert_relative_eq!(jac, 0.4f64.ln() + 0.25f64.ln(), epsilon = 1e-15);
        let (back, jac_back) = transform_ho_to_jacobi(&mu).unwrap();
        for (a, b) in back
            .level_values()
            .iter()
            .flatten()
            .zip(s.level_values().iter().flatten())
        {
            assert!((a - b).abs() < 1e-14);
        }
        assert_relative_eq!(jac_back, -jac, epsilon = 1e-14);
        assert!(transform_jacobi_to_ho(&sample(&[&[0.0]])).is_err());
    }

    #[test]
    fn theta_one_ho_matches_log_form() {
        let p = JacobiParams::new(2, 5, 3, 2).unwrap();
        let hp = ho_from_jacobi(&p);
        let mut diffs = Vec::new();
        for (inner, top) in [(0.7, [1.2, 0.3]), (0.2, [2.0, 0.1]), (1.5, [1.6, 0.9])] {
            let s = sample(&[&[inner], &top]);
            let a = logdens_ho_joint(&s, &hp, &QuadSpec::gauss(24, 1e-10))
                .unwrap()
                .ln();
            let b = logdens_jacobi_ho_form(&s, &p).unwrap().ln();
            diffs.push(a - b);
        }
        for d in &diffs {
            assert_relative_eq!(*d, diffs[0], epsilon = 1e-8);
        }
    }

    #[test]
    fn ho_marginal_is_gt_integral_of_joint() {
        let p = HoParams::new(1.0, vec![1.0, 2.0], vec![0.0, 1.0]).unwrap();
        let mut diffs = Vec::new();
        for top in [[2.0, 0.5], [1.0, 0.2], [3.5, 1.5]] {
            let (v, _) = crate::quad::tanh_sinh(top[1], top[0], 1e-10, |x, _, _| {
                logdens_ho_joint(&sample(&[&[x], &top]), &p, &de())
                    .unwrap()
                    .value()
            })
            .unwrap();
            let marg = logdens_ho_marginal(&Spectrum::new(top.to_vec()).unwrap(), 2, &p, &de())
                .unwrap()
                .ln();
            diffs.push(v.ln() - marg);
        }
        for d in &diffs {
            assert_relative_eq!(*d, diffs[0], epsilon = 1e-3);
        }
    }
}
