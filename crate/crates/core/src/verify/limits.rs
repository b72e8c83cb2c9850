//! Convergence checks for the scalar q-asymptotics and the quasi-classical
//! limits from Macdonald polynomials to Heckman-Opdam and Bessel functions.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::TestReport;
use crate::error::{param, Error, Result};
use crate::hyperfun::{
    bessel_b, bessel_b_tilde, ho_f, ho_f_tilde, log_ho_phi, log_vandermonde_exp, HyperParams,
    QuadSpec,
};
use crate::qseries::{log_qpoch_fin, log_qpoch_inf, BranchTable, Partition, QParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitId {
    QpochAsymp,
    FinQpochAsymp,
    Qgamma,
    RatioQpoch,
    GammaRat,
    FLimA,
    FLimB,
    MacEvalLim,
    MacBranchLim,
    MacTbranchLim,
    BHoScaling,
    MacLim,
    MacQLim,
    MacQevalLim,
    MacHoScale,
    HoMvbScale,
}

impl LimitId {
    pub const ALL: [LimitId; 16] = [
        LimitId::QpochAsymp,
        LimitId::FinQpochAsymp,
        LimitId::Qgamma,
        LimitId::RatioQpoch,
        LimitId::GammaRat,
        LimitId::FLimA,
        LimitId::FLimB,
        LimitId::MacEvalLim,
        LimitId::MacBranchLim,
        LimitId::MacTbranchLim,
        LimitId::BHoScaling,
        LimitId::MacLim,
        LimitId::MacQLim,
        LimitId::MacQevalLim,
        LimitId::MacHoScale,
        LimitId::HoMvbScale,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LimitId::QpochAsymp => "qpoch-asymp",
            LimitId::FinQpochAsymp => "fin-qpoch-asymp",
            LimitId::Qgamma => "qgamma",
            LimitId::RatioQpoch => "ratio-qpoch",
            LimitId::GammaRat => "gamma-rat",
            LimitId::FLimA => "f-lim-a",
            LimitId::FLimB => "f-lim-b",
            LimitId::MacEvalLim => "mac-eval-lim",
            LimitId::MacBranchLim => "mac-branch-lim",
            LimitId::MacTbranchLim => "mac-tbranch-lim",
            LimitId::BHoScaling => "b-ho-scaling",
            LimitId::MacLim => "mac-lim",
            LimitId::MacQLim => "mac-q-lim",
            LimitId::MacQevalLim => "mac-qeval-lim",
            LimitId::MacHoScale => "mac-ho-scale",
            LimitId::HoMvbScale => "ho-mvb-scale",
        }
    }

    /// The scalar asymptotics of q-Pochhammer symbols and Γ.
    pub fn is_scalar(self) -> bool {
        matches!(
            self,
            LimitId::QpochAsymp
                | LimitId::FinQpochAsymp
                | LimitId::Qgamma
                | LimitId::RatioQpoch
                | LimitId::GammaRat
                | LimitId::FLimA
                | LimitId::FLimB
        )
    }

    /// Required relative error at the last ε.
    pub fn tolerance(self) -> f64 {
        match self {
            // first order in 1 - q
            LimitId::Qgamma => 1e-3,
            id if id.is_scalar() => 1e-4,
            _ => 1e-2,
        }
    }

    pub fn default_eps(self) -> Vec<f64> {
        if self.is_scalar() {
            vec![1e-1, 1e-2, 1e-3]
        } else {
            vec![1e-1, 3e-2, 1e-2, 3e-3]
        }
    }
}

impl fmt::Display for LimitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LimitId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LimitId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown limit id '{s}'")))
    }
}

/// Relative error and the finite-ε log value per ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub eps: Vec<f64>,
    pub rel_error: Vec<f64>,
}

impl Trajectory {
    pub fn is_monotone(&self) -> bool {
        self.rel_error.windows(2).all(|w| w[1] < w[0])
    }
}

fn quad() -> QuadSpec {
    QuadSpec::double_exponential(5, 1e-9)
}

fn part(lambda: &[f64], eps: f64) -> Result<Partition> {
    Partition::scaled_floor(lambda, eps)
}

fn principal_vars(m: usize, qt: &QParams) -> Vec<f64> {
    (0..m).map(|i| qt.t().powi(i as i32)).collect()
}

fn exp_vars(s: &[f64], eps: f64) -> Vec<f64> {
    s.iter().map(|&v| (eps * v).exp()).collect()
}

/// `log Γ(mθ)⋯Γ((m-n+1)θ)`.
fn log_gamma_chain(n: usize, m: usize, th: f64) -> f64 {
    ((m - n + 1)..=m).map(|k| ln_gamma(k as f64 * th)).sum()
}

fn log_one_minus_exp(x: f64) -> f64 {
    (-(-x).exp_m1()).ln()
}

/// `log Δ(e^{-a}, e^{-b})`.
fn log_cross_exp(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .flat_map(|&x| {
            b.iter()
                .map(move |&y| -x.min(y) + log_one_minus_exp((x - y).abs()))
        })
        .sum()
}

fn gt_dim(n: usize, m: usize) -> f64 {
    (n * (m - n) + n * (n - 1) / 2) as f64
}

// parameters of the matrix-level checks
const LAM2: [f64; 2] = [0.9, 0.3];
const S2: [f64; 2] = [0.4, -0.3];
const THETA: f64 = 0.5;

/// `(log value at ε, log limit)`.
fn evaluate(id: LimitId, eps: f64) -> Result<(f64, f64)> {
    let q = (-eps).exp();
    Ok(match id {
        LimitId::QpochAsymp => {
            let (a, b, u) = (0.25, 1.0, 0.3);
            let v = log_qpoch_inf(q.powf(a) * u, q)? - log_qpoch_inf(q.powf(b) * u, q)?;
            (v, (b - a) * (1.0f64 - u).ln())
        }
        LimitId::FinQpochAsymp => {
            // q^{m(q)} → e^{-1}
            let (a, b, u) = (0.25, 1.0, 0.3);
            let k = (1.0 / eps).round() as i64;
            let v = log_qpoch_fin(q.powf(a) * u, q, k)? - log_qpoch_fin(q.powf(b) * u, q, k)?;
            (
                v,
                (b - a) * ((1.0f64 - u).ln() - (1.0 - u * (-1.0f64).exp()).ln()),
            )
        }
        LimitId::Qgamma => {
            let x = 1.5;
            let q = 1.0 - eps;
            let v = (1.0 - x) * eps.ln() + log_qpoch_inf(q, q)? - log_qpoch_inf(q.powf(x), q)?;
            (v, ln_gamma(x))
        }
        LimitId::RatioQpoch => {
            let (a, b) = (0.5, 2.5);
            let q = 1.0 - eps;
            let v =
                log_qpoch_inf(q.powf(a), q)? - log_qpoch_inf(q.powf(b), q)? + (a - b) * eps.ln();
            (v, ln_gamma(b) - ln_gamma(a))
        }
        LimitId::GammaRat => {
            let (a, th) = (2.0, 0.5);
            let z = a / eps;
            (
                -th * eps.ln() + ln_gamma(z) - ln_gamma(z + th),
                -th * a.ln(),
            )
        }
        LimitId::FLimA => {
            let (u, a, th) = (0.2, 0.1, 0.5);
            let t = (-th * eps).exp();
            let x = u * q.powf(a);
            let v = log_qpoch_inf(t * x, q)? - log_qpoch_inf(q * x, q)?;
            (v, (1.0 - th) * (1.0f64 - u).ln())
        }
        LimitId::FLimB => {
            let (a, th) = (0.1, 0.5);
            let t = (-th * eps).exp();
            let x = q.powf(a);
            let v = log_qpoch_inf(t * x, q)? - log_qpoch_inf(q * x, q)? + (th - 1.0) * eps.ln();
            (v, ln_gamma(1.0 + a) - ln_gamma(th + a))
        }
        LimitId::MacEvalLim => {
            let (n, m) = (2usize, 3usize);
            let qt = QParams::quasi_classical(eps, THETA)?;
            let v = BranchTable::new(qt).log_principal(&part(&LAM2, eps)?, m);
            let scale = THETA * gt_dim(n, m) * eps.ln();
            let lim = n as f64 * ln_gamma(THETA) - log_gamma_chain(n, m, THETA)
                + THETA * log_vandermonde_exp(&LAM2)
                + THETA * (m - n) as f64 * LAM2.iter().map(|&l| log_one_minus_exp(l)).sum::<f64>();
            (scale + v, lim)
        }
        LimitId::MacBranchLim => {
            // ℓ(λ) = m = 2; the power of ε is (θ - 1)(m - 1)
            let (lam, mu, m) = ([1.2, 0.3], [0.6], 2usize);
            let qt = QParams::quasi_classical(eps, THETA)?;
            let v = BranchTable::new(qt).log_psi_full(&part(&lam, eps)?, &part(&mu, eps)?, m);
            let lim = (1.0 - m as f64) * ln_gamma(THETA)
                + (THETA - 1.0)
                    * (log_cross_exp(&mu, &lam)
                        - log_vandermonde_exp(&mu)
                        - log_vandermonde_exp(&lam)
                        + mu.iter().sum::<f64>());
            ((THETA - 1.0) * (m - 1) as f64 * eps.ln() + v, lim)
        }
        LimitId::MacTbranchLim => {
            let (lam, mu, n) = ([1.2, 0.6], [0.9, 0.3], 2usize);
            let qt = QParams::quasi_classical(eps, THETA)?;
            let v = BranchTable::new(qt).log_psi_truncated(&part(&lam, eps)?, &part(&mu, eps)?);
            let ends: f64 = mu.iter().map(|&x| log_one_minus_exp(x)).sum::<f64>()
                - lam.iter().map(|&x| log_one_minus_exp(x)).sum::<f64>();
            let lim = -(n as f64) * ln_gamma(THETA)
                + (THETA - 1.0)
                    * (log_cross_exp(&mu, &lam)
                        - log_vandermonde_exp(&mu)
                        - log_vandermonde_exp(&lam)
                        + ends
                        + mu.iter().sum::<f64>());
            ((THETA - 1.0) * n as f64 * eps.ln() + v, lim)
        }
        LimitId::BHoScaling => {
            let n = LAM2.len();
            let qt = QParams::quasi_classical(eps, THETA)?;
            let v = BranchTable::new(qt).log_b(&part(&LAM2, eps)?);
            let lim = -(n as f64) * ln_gamma(THETA)
                + (THETA - 1.0) * LAM2.iter().map(|&l| log_one_minus_exp(l)).sum::<f64>();
            (n as f64 * (THETA - 1.0) * eps.ln() + v, lim)
        }
        LimitId::MacLim | LimitId::MacQLim => {
            let (n, m) = (2usize, 2usize);
            let qt = QParams::quasi_classical(eps, THETA)?;
            let table = BranchTable::new(qt);
            let lam = part(&LAM2, eps)?;
            let mut v = table.log_p(&lam, &exp_vars(&S2, eps))? + THETA * gt_dim(n, m) * eps.ln();
            let phi = log_ho_phi(
                &HyperParams::new(THETA, LAM2.to_vec(), S2.to_vec())?,
                &quad(),
            )?
            .log_value;
            let mut lim = phi;
            if id == LimitId::MacQLim {
                v += table.log_b(&lam) + n as f64 * (THETA - 1.0) * eps.ln();
                lim += -(n as f64) * ln_gamma(THETA)
                    + (THETA - 1.0) * LAM2.iter().map(|&l| log_one_minus_exp(l)).sum::<f64>();
            }
            (v, lim)
        }
        LimitId::MacQevalLim => {
            let (n, m) = (2usize, 3usize);
            let qt = QParams::quasi_classical(eps, THETA)?;
            let table = BranchTable::new(qt);
            let lam = part(&LAM2, eps)?;
            let v = table.log_b(&lam)
                + table.log_principal(&lam, m)
                + (THETA * gt_dim(n, m) + n as f64 * (THETA - 1.0)) * eps.ln();
            let lim = -log_gamma_chain(n, m, THETA)
                + THETA * log_vandermonde_exp(&LAM2)
                + (THETA * (m - n + 1) as f64 - 1.0)
                    * LAM2.iter().map(|&l| log_one_minus_exp(l)).sum::<f64>();
            (v, lim)
        }
        LimitId::MacHoScale => {
            // the P-ratio; the Q-ratio differs by b_λ and is checked in its own right
            let (n, m) = (2usize, 2usize);
            let qt = QParams::quasi_classical(eps, THETA)?;
            let table = BranchTable::new(qt);
            let lam = part(&LAM2, eps)?;
            let v = table.log_p(&lam, &exp_vars(&S2, eps))?
                - table.log_p(&lam, &principal_vars(m, &qt))?;
            let hp = HyperParams::new(THETA, LAM2.to_vec(), S2.to_vec())?;
            let lim = 0.5 * (n - 1) as f64 * THETA * LAM2.iter().sum::<f64>()
                + ho_f(&hp, &quad())?.log_value;
            (v, lim)
        }
        LimitId::HoMvbScale => {
            let (lam, s) = ([1.5, 0.5], [0.7, -0.4]);
            let small: Vec<f64> = lam.iter().map(|&l| eps * l).collect();
            let big: Vec<f64> = s.iter().map(|&v| v / eps).collect();
            let f = ho_f(&HyperParams::new(THETA, small, big)?, &quad())?.log_value;
            let b =
                bessel_b(&HyperParams::new(THETA, lam.to_vec(), s.to_vec())?, &quad())?.log_value;
            (f, b)
        }
    })
}

/// The second scaling of `ho-mvb-scale`: `ε^{-(θ-1)n} F̃(ελ, s/ε) → B̃(λ, s)`.
fn tilde_ho_mvb(eps: f64) -> Result<(f64, f64)> {
    let (lam, s) = ([1.5, 0.5], [0.7, -0.4]);
    let small: Vec<f64> = lam.iter().map(|&l| eps * l).collect();
    let big: Vec<f64> = s.iter().map(|&v| v / eps).collect();
    let n = lam.len() as f64;
    let f = ho_f_tilde(&HyperParams::new(THETA, small, big)?, &quad())?.log_value
        - (THETA - 1.0) * n * eps.ln();
    let b = bessel_b_tilde(&HyperParams::new(THETA, lam.to_vec(), s.to_vec())?, &quad())?.log_value;
    Ok((f, b))
}

/// The Q-ratio of `mac-ho-scale`: `ε^{n(θ-1)} Q_λ(e^{εs}) / P_λ(1, t, …) → e^{(n-1)θ|λ|/2} F̃`.
fn q_ratio_ho(eps: f64) -> Result<(f64, f64)> {
    let (n, m) = (2usize, 2usize);
    let qt = QParams::quasi_classical(eps, THETA)?;
    let table = BranchTable::new(qt);
    let lam = part(&LAM2, eps)?;
    let v = table.log_b(&lam) + table.log_p(&lam, &exp_vars(&S2, eps))?
        - table.log_p(&lam, &principal_vars(m, &qt))?
        + n as f64 * (THETA - 1.0) * eps.ln();
    let hp = HyperParams::new(THETA, LAM2.to_vec(), S2.to_vec())?;
    let lim = 0.5 * (n - 1) as f64 * THETA * LAM2.iter().sum::<f64>()
        + ho_f_tilde(&hp, &quad())?.log_value;
    Ok((v, lim))
}

fn rel(v: (f64, f64)) -> f64 {
    (v.0 - v.1).exp_m1().abs()
}

/// Relative errors of the finite-ε expression along `eps`.
pub fn limit_trajectory(id: LimitId, eps: &[f64]) -> Result<Trajectory> {
    if eps.len() < 3 || eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|&e| !(e > 0.0)) {
        return param("ε-sequence must be positive, strictly decreasing, with at least 3 points");
    }
    let mut rel_error = Vec::with_capacity(eps.len());
    for &e in eps {
        let mut r = rel(evaluate(id, e)?);
        // two-part statements count the worse of the two
        match id {
            LimitId::HoMvbScale => r = r.max(rel(tilde_ho_mvb(e)?)),
            LimitId::MacHoScale => r = r.max(rel(q_ratio_ho(e)?)),
            _ => {}
        }
        rel_error.push(r);
    }
    Ok(Trajectory {
        eps: eps.to_vec(),
        rel_error,
    })
}

/// Passes when the relative error decreases strictly along `eps` and ends
/// below [`LimitId::tolerance`].
pub fn check_limit(id: LimitId, eps: &[f64]) -> Result<TestReport> {
    let start = Instant::now();
    let tr = limit_trajectory(id, eps)?;
    let last = *tr.rel_error.last().expect("nonempty trajectory");
    let tol = id.tolerance();
    let mut r = TestReport::tolerance_test(
        &format!("limit/{}", id.as_str()),
        "final rel error",
        last,
        tol,
        eps.len(),
    );
    let monotone = tr.is_monotone();
    r.passed = monotone && last <= tol;
    let path: Vec<String> = tr
        .eps
        .iter()
        .zip(&tr.rel_error)
        .map(|(e, v)| format!("{e:.0e}:{v:.3e}"))
        .collect();
    r.detail = format!(
        "{}trajectory {}",
        if monotone { "" } else { "NON-MONOTONE " },
        path.join(" ")
    );
    r.runtime_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in LimitId::ALL {
            assert_eq!(id.as_str().parse::<LimitId>().unwrap(), id);
        }
        assert!("nope".parse::<LimitId>().is_err());
    }

    #[test]
    fn gamma_ratio_example() {
        let r = check_limit(LimitId::GammaRat, &[1e-1, 1e-2, 1e-3]).unwrap();
        assert!(r.passed && r.statistic <= 1e-3, "{}", r.detail);
    }

    #[test]
    fn principal_limit_at_one_level() {
        // n = 1, m = 2, θ = 1, λ = 1: ε P_{λ/ε}(1, t) → Γ(1)/Γ(2) (1 - e^{-1})
        let lim = (1.0 - (-1.0f64).exp()).ln();
        let mut errs = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let qt = QParams::quasi_classical(eps, 1.0).unwrap();
            let v = BranchTable::new(qt)
                .log_principal(&Partition::scaled_floor(&[1.0], eps).unwrap(), 2);
            errs.push((v + eps.ln() - lim).abs());
        }
        assert!(
            errs.windows(2).all(|w| w[1] < w[0]) && errs[2] < 1e-2,
            "{errs:?}"
        );
    }

    #[test]
    fn short_or_increasing_eps_rejected() {
        assert!(check_limit(LimitId::Qgamma, &[1e-1, 1e-2]).is_err());
        assert!(check_limit(LimitId::Qgamma, &[1e-2, 1e-1, 1e-3]).is_err());
    }

    #[test]
    fn every_limit_converges_on_default_eps() {
        for id in LimitId::ALL {
            let r = check_limit(id, &id.default_eps()).unwrap();
            assert!(r.passed, "{} {}", r.summary_line(), r.detail);
        }
    }
}
