//! Multivariate Bessel and Heckman-Opdam functions as Gelfand-Tsetlin
//! integrals, and HCIZ orbit integrals.

mod gt;
mod hciz;

pub use gt::{
    gt_dimension, gt_integrate, level_len, log_cross_vandermonde, log_vandermonde,
    log_vandermonde_exp, log_vandermonde_trig, Estimate, GTPattern, QuadScheme, QuadSpec,
    MAX_MONTE_CARLO_DIM, MAX_QUADRATURE_DIM,
};
pub use hciz::{hciz, hciz_constant, HaarMcSpec, HciZRoute};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::densities::LogValue;
use crate::error::{param, Result};
use crate::linalg::Spectrum;

/// `Δ(λ)` for a decreasing spectrum; ties give zero.
pub fn vandermonde(lambda: &Spectrum) -> LogValue {
    LogValue::from_log(log_vandermonde(lambda.values()))
}

/// `Δ(μ, λ) = ∏_{i,j} |μ_i - λ_j|`.
pub fn cross_vandermonde(mu: &Spectrum, lambda: &Spectrum) -> LogValue {
    LogValue::from_log(log_cross_vandermonde(mu.values(), lambda.values()))
}

/// `Δ^trig(λ) = ∏_{i<j} (e^{(λ_i-λ_j)/2} - e^{(λ_j-λ_i)/2})`.
pub fn vandermonde_trig(lambda: &Spectrum) -> LogValue {
    LogValue::from_log(log_vandermonde_trig(lambda.values()))
}

/// Arguments of `B^{n,m}_β(λ, s)` and `F^{n,m}_β(λ, s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub n: usize,
    pub m: usize,
    pub theta: f64,
    /// Length `n`, decreasing.
    pub lambda: Vec<f64>,
    /// Length `m`.
    pub s: Vec<f64>,
}

impl HyperParams {
    pub fn new(theta: f64, lambda: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let p = Self {
            n: lambda.len(),
            m: s.len(),
            theta,
            lambda,
            s,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > self.m {
            return param(format!(
                "need 1 ≤ n ≤ m, got n = {}, m = {}",
                self.n, self.m
            ));
        }
        if self.lambda.len() != self.n || self.s.len() != self.m {
            return param("λ must have n entries and s must have m entries");
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return param(format!("θ = {} must be positive", self.theta));
        }
        if self.lambda.iter().chain(&self.s).any(|v| !v.is_finite()) {
            return param("λ and s must be finite");
        }
        if self.lambda.windows(2).any(|w| w[0] < w[1]) || self.lambda.iter().any(|&v| v < 0.0) {
            return param("λ must be nonnegative and decreasing");
        }
        Ok(())
    }

    fn is_trivial_lambda(&self) -> bool {
        self.lambda.iter().all(|&v| v == 0.0)
    }

    fn is_trivial_s(&self) -> bool {
        self.s.iter().all(|&v| v == 0.0)
    }

    /// `log Γ(mθ)⋯Γ((m-n+1)θ) - n log Γ(θ)`.
    fn log_prefactor(&self) -> f64 {
        let th = self.theta;
        ((self.m - self.n + 1)..=self.m)
            .map(|k| ln_gamma(k as f64 * th))
            .sum::<f64>()
            - self.n as f64 * ln_gamma(th)
    }

    fn dim(&self) -> usize {
        gt_dimension(self.n, self.m)
    }
}

fn s_term(p: &GTPattern, s: &[f64]) -> f64 {
    s.iter()
        .enumerate()
        .map(|(idx, &sl)| sl * (p.level_sum(idx + 1) - p.level_sum(idx)))
        .sum()
}

/// GT log-weight of `φ^{n,m}_θ(λ, s)`.
fn rational_weight(p: &GTPattern, hp: &HyperParams, log_const: f64) -> f64 {
    let (n, m, th) = (hp.n, hp.m, hp.theta);
    let mut w = s_term(p, &hp.s) + log_const;
    if th != 1.0 {
        let mut acc = 0.0;
        if m > n {
            acc += p.level(n).iter().map(|v| v.ln()).sum::<f64>();
        }
        for l in 1..m {
            acc += p.log_cross_vdm(l) - p.log_vdm(l) - p.log_vdm(l + 1);
        }
        w += (th - 1.0) * acc;
    }
    w
}

/// GT log-weight of `Φ^{n,m}_θ(λ, s)`.
fn trig_weight(p: &GTPattern, hp: &HyperParams, log_const: f64) -> f64 {
    let (n, m, th) = (hp.n, hp.m, hp.theta);
    let mut w = s_term(p, &hp.s) + log_const;
    if th != 1.0 {
        let mut acc = 0.0;
        if m > n {
            acc += p
                .level(n)
                .iter()
                .map(|&v| (-(-v).exp_m1()).ln())
                .sum::<f64>();
        }
        for l in 1..m {
            acc +=
                p.log_cross_vdm_exp(l) - p.log_vdm_exp(l) - p.log_vdm_exp(l + 1) + p.level_sum(l);
        }
        w += (th - 1.0) * acc;
    }
    w
}

fn check_quadrature_lambda(hp: &HyperParams) -> Result<()> {
    if hp.lambda.windows(2).any(|w| !(w[0] > w[1])) {
        return param("quadrature needs strictly decreasing λ");
    }
    if hp.m > hp.n && hp.lambda.iter().any(|&v| !(v > 0.0)) {
        return param("quadrature needs positive λ when n < m");
    }
    Ok(())
}

/// `log φ^{n,m}_θ(λ, s)` (no fast paths).
pub fn log_phi(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    hp.validate()?;
    check_quadrature_lambda(hp)?;
    let th = hp.theta;
    let mut c = -(hp.dim() as f64) * ln_gamma(th);
    if hp.m > hp.n && th != 1.0 {
        c -= (th - 1.0) * hp.lambda.iter().map(|v| v.ln()).sum::<f64>();
    }
    gt_integrate(|p| rational_weight(p, hp, c), &hp.lambda, hp.n, hp.m, quad)
}

/// `log Φ^{n,m}_θ(λ, s)` (no fast paths).
pub fn log_ho_phi(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    hp.validate()?;
    check_quadrature_lambda(hp)?;
    let th = hp.theta;
    let mut c = -(hp.dim() as f64) * ln_gamma(th);
    if hp.m > hp.n && th != 1.0 {
        c -= (th - 1.0)
            * hp.lambda
                .iter()
                .map(|&v| (-(-v).exp_m1()).ln())
                .sum::<f64>();
    }
    gt_integrate(|p| trig_weight(p, hp, c), &hp.lambda, hp.n, hp.m, quad)
}

fn shift(e: Estimate, by: f64) -> Estimate {
    Estimate {
        log_value: e.log_value + by,
        rel_error: e.rel_error,
    }
}

/// `log B^{n,m}_β(λ, s)` with `β = 2θ`.
///
/// `B(λ, 0) = B(0, s) = 1` and `B^{1,1}(λ, s) = e^{sλ}` are returned exactly.
/// Otherwise the quadrature estimate must meet `quad.tolerance`.
pub fn bessel_b(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    hp.validate()?;
    if hp.is_trivial_s() || hp.is_trivial_lambda() {
        return Ok(Estimate::exact(0.0));
    }
    if hp.m == 1 {
        return Ok(Estimate::exact(hp.s[0] * hp.lambda[0]));
    }
    bessel_b_quadrature(hp, quad)
}

/// `log B` from the GT integral alone, without the exact fast paths.
pub fn bessel_b_quadrature(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    hp.validate()?;
    let phi = log_phi(hp, quad)?;
    let th = hp.theta;
    let mut norm = hp.log_prefactor() - th * log_vandermonde(&hp.lambda);
    if hp.m > hp.n {
        norm -= th * (hp.m - hp.n) as f64 * hp.lambda.iter().map(|v| v.ln()).sum::<f64>();
    }
    shift(phi, norm).within(quad.tolerance)
}

/// `log B̃ = log B - n log Γ(θ) + (θ-1) Σ log λ_i`.
pub fn bessel_b_tilde(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    let b = bessel_b(hp, quad)?;
    let th = hp.theta;
    let extra =
        -(hp.n as f64) * ln_gamma(th) + log_power_sum(th - 1.0, hp.lambda.iter().map(|v| v.ln()));
    Ok(shift(b, extra))
}

/// `log F^{n,m}_β(λ, s)`; only `n = m = 1` has a closed form.
pub fn ho_f(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    hp.validate()?;
    if hp.m == 1 {
        return Ok(Estimate::exact(hp.s[0] * hp.lambda[0]));
    }
    let phi = log_ho_phi(hp, quad)?;
    let th = hp.theta;
    let mut norm = hp.log_prefactor() - th * log_vandermonde_trig(&hp.lambda);
    if hp.m > hp.n {
        norm -= th
            * (hp.m - hp.n) as f64
            * hp.lambda
                .iter()
                .map(|&v| (-(-v).exp_m1()).ln())
                .sum::<f64>();
    }
    shift(phi, norm).within(quad.tolerance)
}

/// `log F̃ = log F - n log Γ(θ) + (θ-1) Σ log(1 - e^{-λ_i})`.
pub fn ho_f_tilde(hp: &HyperParams, quad: &QuadSpec) -> Result<Estimate> {
    let f = ho_f(hp, quad)?;
    let th = hp.theta;
    let extra = -(hp.n as f64) * ln_gamma(th)
        + log_power_sum(th - 1.0, hp.lambda.iter().map(|&v| (-(-v).exp_m1()).ln()));
    Ok(shift(f, extra))
}

/// `Σ p·x_k` with `0·(-∞) = 0`.
fn log_power_sum(p: f64, xs: impl Iterator<Item = f64>) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        xs.map(|x| p * x).sum()
    }
}
