//! Multivariate Bessel ensemble and the generalized Wishart kernels.

use statrs::function::gamma::ln_gamma;

use super::{scaled, strict_support, sum_ln, total, LogValue};
use crate::ensembles::{MultilevelSample, WishartParams};
use crate::error::{param, Result};
use crate::hyperfun::{
    bessel_b, bessel_b_tilde, hciz, log_cross_vandermonde, log_vandermonde, HciZRoute, HyperParams,
    QuadSpec,
};
use crate::linalg::{interlaces, Spectrum};
use crate::quad::log_box_integral;

fn pi_hat_vec(p: &WishartParams, m: usize) -> Vec<f64> {
    (1..=m).map(|j| p.pi_hat_at(j)).collect()
}

/// `θ Σ_{j≤m} Σ_i ln(π̂_j + π_i)`.
fn log_rate_product(p: &WishartParams, m: usize, theta: f64) -> f64 {
    (1..=m)
        .map(|j| {
            p.pi.iter()
                .map(|&pi| (pi + p.pi_hat_at(j)).ln())
                .sum::<f64>()
        })
        .sum::<f64>()
        * theta
}

/// `-θ Σ_l π̂_l (|μ^l| - |μ^{l-1}|)`.
fn level_tilt(p: &WishartParams, levels: &[&[f64]], theta: f64) -> f64 {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (idx, lev) in levels.iter().enumerate() {
        let t = total(lev);
        acc += p.pi_hat_at(idx + 1) * (t - prev);
        prev = t;
    }
    -theta * acc
}

/// Unnormalized joint log density of `μ^1 ≺ ⋯ ≺ μ^m`; `B̃` is integrated over
/// the GT polytope of `μ^m`.
pub fn logdens_mvb_joint(
    levels: &MultilevelSample,
    p: &WishartParams,
    quad: &QuadSpec,
) -> Result<LogValue> {
    p.validate()?;
    let n = p.n();
    let th = p.theta();
    let Some(vals) = strict_support(levels, n) else {
        return Ok(LogValue::ZERO);
    };
    let m = vals.len();
    if m == 0 {
        return param("need at least one level");
    }
    let k = m.min(n);
    let top = vals[m - 1];
    let mut log = log_rate_product(p, m, th) + th * log_vandermonde(top) + level_tilt(p, &vals, th);
    log += th * (n - k) as f64 * sum_ln(top);
    log += scaled(th - 1.0, sum_ln(vals[k - 1]) - sum_ln(top));
    for l in 0..m - 1 {
        let (a, b) = (vals[l], vals[l + 1]);
        log += scaled(
            th - 1.0,
            log_cross_vandermonde(a, b) - log_vandermonde(a) - log_vandermonde(b),
        );
    }
    let s: Vec<f64> = p.pi.iter().map(|&pi| -th * pi).collect();
    let bt = bessel_b_tilde(&HyperParams::new(th, top.to_vec(), s)?, quad)?;
    Ok(LogValue::from_log(log + bt.log_value))
}

/// Unnormalized log density of the level-`m` marginal.
pub fn logdens_mvb_marginal(
    mu: &Spectrum,
    m: usize,
    p: &WishartParams,
    quad: &QuadSpec,
) -> Result<LogValue> {
    p.validate()?;
    let n = p.n();
    let th = p.theta();
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
    let mut log = log_rate_product(p, m, th) + 2.0 * th * log_vandermonde(x);
    log += th * (m.max(n) - k) as f64 * sum_ln(x);
    let s_hat: Vec<f64> = pi_hat_vec(p, m).iter().map(|&v| -th * v).collect();
    let s: Vec<f64> = p.pi.iter().map(|&pi| -th * pi).collect();
    let b = bessel_b(&HyperParams::new(th, x.to_vec(), s_hat)?, quad)?;
    let bt = bessel_b_tilde(&HyperParams::new(th, x.to_vec(), s)?, quad)?;
    Ok(LogValue::from_log(log + b.log_value + bt.log_value))
}

fn check_kernel_shapes(prev: &Spectrum, next: &Spectrum, m: usize, n: usize) -> Result<()> {
    if m == 0 {
        return param("kernel level must be at least 1");
    }
    if prev.len() != (m - 1).min(n) || next.len() != m.min(n) {
        return param(format!(
            "level sizes {} → {} do not match m = {m}, n = {n}",
            prev.len(),
            next.len()
        ));
    }
    Ok(())
}

fn strictly_inside(prev: &[f64], next: &[f64]) -> bool {
    next.iter().all(|&v| v > 0.0 && v.is_finite())
        && next.windows(2).all(|w| w[0] > w[1])
        && interlaces(prev, next, true)
}

/// Log transition kernel `Q_{m-1,m}(μ^{m-1}, dμ^m)` of the generalized Wishart
/// chain with every explicit constant. HCIZ factors use `route`.
pub fn log_kernel_wishart(
    prev: &Spectrum,
    next: &Spectrum,
    m: usize,
    p: &WishartParams,
    route: &HciZRoute,
) -> Result<LogValue> {
    WishartKernel::new(prev, m, p, route)?.log_at(next)
}

/// [`log_kernel_wishart`] with the factors that depend only on `μ^{m-1}`
/// evaluated once, for repeated evaluation at many `μ^m`.
#[derive(Debug, Clone)]
pub struct WishartKernel<'a> {
    p: &'a WishartParams,
    route: &'a HciZRoute,
    prev: &'a [f64],
    m: usize,
    n: usize,
    /// Everything except the terms in `μ^m`.
    fixed: f64,
}

impl<'a> WishartKernel<'a> {
    pub fn new(
        prev: &'a Spectrum,
        m: usize,
        p: &'a WishartParams,
        route: &'a HciZRoute,
    ) -> Result<Self> {
        p.validate()?;
        let n = p.n();
        if m == 0 {
            return param("kernel level must be at least 1");
        }
        if prev.len() != (m - 1).min(n) {
            return param(format!(
                "level {} has {} entries, got {}",
                m - 1,
                (m - 1).min(n),
                prev.len()
            ));
        }
        let a = prev.values();
        let ph = p.pi_hat_at(m);
        let rates: f64 = p.pi.iter().map(|&pi| (pi + ph).ln()).sum();
        let ka = (m - 1).min(n);
        let ha = hciz(&p.pi, a, p.beta, route)?.log_value;
        let fixed = match p.beta {
            2 => rates - (n - ka) as f64 * sum_ln(a) - ha - log_vandermonde(a) + ph * total(a),
            _ => {
                let ind = if m <= n { 1.0 } else { 0.0 };
                let ea = ((n - ka) as f64 - ind) / 2.0;
                0.5 * rates - ln_gamma(m as f64 / 2.0) - m as f64 * ln_gamma(0.5)
                    + 0.5 * ph * total(a)
                    - scaled(ea, sum_ln(a))
                    - ha
            }
        };
        Ok(Self {
            p,
            route,
            prev: a,
            m,
            n,
            fixed,
        })
    }

    pub fn log_at(&self, next: &Spectrum) -> Result<LogValue> {
        let (p, m, n) = (self.p, self.m, self.n);
        if next.len() != m.min(n) {
            return param(format!(
                "level {m} has {} entries, got {}",
                m.min(n),
                next.len()
            ));
        }
        let (a, b) = (self.prev, next.values());
        if !strictly_inside(a, b) {
            return Ok(LogValue::ZERO);
        }
        let ph = p.pi_hat_at(m);
        let hb = hciz(&p.pi, b, p.beta, self.route)?.log_value;
        let kb = m.min(n);
        let log = match p.beta {
            2 => self.fixed + (n - kb) as f64 * sum_ln(b) + hb + log_vandermonde(b) - ph * total(b),
            _ => {
                let ind = if m <= n { 1.0 } else { 0.0 };
                let eb = ((n - kb) as f64 - ind) / 2.0;
                self.fixed - 0.5 * ph * total(b) + scaled(eb, sum_ln(b)) + hb + log_vandermonde(b)
                    - 0.5 * log_cross_vandermonde(b, a)
            }
        };
        Ok(LogValue::from_log(log))
    }
}

/// The `β = 1` kernel at `π ≡ 1`, `π̂ ≡ 0`, written out directly.
pub fn log_kernel_wishart_standard(
    prev: &Spectrum,
    next: &Spectrum,
    m: usize,
    n: usize,
) -> Result<LogValue> {
    check_kernel_shapes(prev, next, m, n)?;
    let (a, b) = (prev.values(), next.values());
    if !strictly_inside(a, b) {
        return Ok(LogValue::ZERO);
    }
    let ind = if m <= n { 1.0 } else { 0.0 };
    let eb = ((n - m.min(n)) as f64 - ind) / 2.0;
    let ea = ((n - (m - 1).min(n)) as f64 - ind) / 2.0;
    let log = -0.5 * (total(b) - total(a)) - ln_gamma(m as f64 / 2.0) - m as f64 * ln_gamma(0.5)
        + scaled(eb, sum_ln(b))
        - scaled(ea, sum_ln(a))
        + log_vandermonde(b)
        - 0.5 * log_cross_vandermonde(b, a);
    Ok(LogValue::from_log(log))
}

/// `log ∫ exp(log_q(μ^m)) dμ^m` over `{μ^m ≻ prev}` for a level of
/// `min(m, n)` entries, by tensor double-exponential quadrature. The
/// unbounded coordinate is truncated at `tail` above `prev_1`. Returns
/// `(log mass, relative change from the next coarser level)`.
pub fn kernel_log_mass(
    prev: &Spectrum,
    m: usize,
    n: usize,
    level: u32,
    tail: f64,
    log_q: impl Fn(&[f64]) -> f64,
) -> (f64, f64) {
    let a = prev.values();
    let k = m.min(n);
    let bounds: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let hi = if i == 0 { f64::INFINITY } else { a[i - 1] };
            let lo = a.get(i).copied().unwrap_or(0.0);
            (lo, hi)
        })
        .collect();
    log_box_integral(&bounds, level, tail, |x| log_q(x))
}
