//! q-Pochhammer symbols, partitions and Macdonald polynomials.

mod macdonald;

pub use macdonald::{
    b_norm, b_norm_product, cauchy_partial_sum, cauchy_product, interlaces_partitions, macdonald_p,
    macdonald_p_peel_first, macdonald_q, partitions_up_to, principal_eval, psi_branch,
    psi_branch_full, psi_branch_general, psi_branch_truncated, BranchTable,
};

use crate::error::{param, Error, Result};

/// Infinite products are cut once `|a q^k|` drops below this.
const QPOCH_CUTOFF: f64 = 1e-17;

/// `(q, t)` with `t = q^θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParams {
    q: f64,
    t: f64,
    theta: f64,
}

impl QParams {
    pub fn new(q: f64, theta: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return param(format!("q = {q} must lie in (0,1)"));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return param(format!("θ = {theta} must be positive"));
        }
        Ok(Self {
            q,
            t: q.powf(theta),
            theta,
        })
    }

    pub fn from_qt(q: f64, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return param(format!("t = {t} must lie in (0,1)"));
        }
        if !(q > 0.0 && q < 1.0) {
            return param(format!("q = {q} must lie in (0,1)"));
        }
        Ok(Self {
            q,
            t,
            theta: t.ln() / q.ln(),
        })
    }

    /// `q = e^{-ε}`, `t = e^{-θε}`.
    pub fn quasi_classical(eps: f64, theta: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return param("ε must be positive");
        }
        let mut p = Self::new((-eps).exp(), theta)?;
        p.t = (-theta * eps).exp();
        Ok(p)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        param(format!("q = {q} must lie in (0,1)"))
    }
}

/// `log (a; q)_∞` for `a < 1` (all factors positive).
pub fn log_qpoch_inf(a: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if a >= 1.0 {
        return param(format!("log (a;q)_∞ needs a < 1, got {a}"));
    }
    // Neumaier-compensated sum of the logarithms of the factors
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut term = a;
    while term.abs() >= QPOCH_CUTOFF {
        let x = (-term).ln_1p();
        let s = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - s) + x
        } else {
            (x - s) + sum
        };
        sum = s;
        term *= q;
    }
    // remaining factors: Σ_{j≥k} log(1 - a q^j) ≈ -a q^k / (1 - q)
    Ok(sum + (comp - term / (1.0 - q)))
}

/// `(a; q)_∞ = ∏_{k≥0} (1 - a q^k)`.
pub fn qpoch_inf(a: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if a.abs() >= 1.0 / q {
        return param(format!("(a;q)_∞ needs |a| < 1/q, got a = {a}"));
    }
    if a < 1.0 {
        return Ok(log_qpoch_inf(a, q)?.exp());
    }
    // |a| < 1/q leaves only the k = 0 factor outside (0, 2)
    Ok((1.0 - a) * log_qpoch_inf(a * q, q)?.exp())
}

/// `log (a; q)_k` for `a q^j < 1`, `j < k`.
pub fn log_qpoch_fin(a: f64, q: f64, k: i64) -> Result<f64> {
    check_q(q)?;
    if k < 0 {
        return param(format!("finite q-Pochhammer length {k} is negative"));
    }
    let mut sum = 0.0;
    let mut term = a;
    for _ in 0..k {
        if term >= 1.0 {
            return param(format!("log (a;q)_k needs positive factors, a = {a}"));
        }
        if term.abs() < QPOCH_CUTOFF * 1e-3 {
            break;
        }
        sum += (-term).ln_1p();
        term *= q;
    }
    Ok(sum)
}

/// `(a; q)_k = ∏_{j<k} (1 - a q^j)`.
pub fn qpoch_fin(a: f64, q: f64, k: i64) -> Result<f64> {
    check_q(q)?;
    if k < 0 {
        return param(format!("finite q-Pochhammer length {k} is negative"));
    }
    let mut prod = 1.0;
    let mut term = a;
    for _ in 0..k {
        prod *= 1.0 - term;
        term *= q;
    }
    Ok(prod)
}

/// Integer partition with trailing zeros removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Validation(format!(
                "{parts:?} is not weakly decreasing"
            )));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Self { parts })
    }

    pub fn empty() -> Self {
        Self { parts: Vec::new() }
    }

    /// Nonzero parts.
    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Part `i` (0-based), zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        self.parts.get(i).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().map(|&p| p as u64).sum()
    }

    pub fn conjugate(&self) -> Partition {
        let first = self.part(0);
        let parts = (1..=first)
            .map(|j| self.parts.iter().filter(|&&p| p >= j).count() as u32)
            .collect();
        Partition { parts }
    }

    /// `⌊λ / ε⌋` componentwise; the `1e-9` guard keeps exact multiples exact.
    pub fn scaled_floor(lambda: &[f64], eps: f64) -> Result<Self> {
        let parts = lambda
            .iter()
            .map(|&l| (l / eps + 1e-9).floor().max(0.0) as u32)
            .collect();
        Self::new(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn direct_product(a: f64, q: f64) -> f64 {
        let mut p = 1.0;
        let mut term = a;
        for _ in 0..2000 {
            p *= 1.0 - term;
            term *= q;
        }
        p
    }

    #[test]
    fn qpoch_inf_values() {
        assert_eq!(qpoch_inf(0.0, 0.5).unwrap(), 1.0);
        assert_relative_eq!(
            qpoch_inf(0.5, 0.5).unwrap(),
            direct_product(0.5, 0.5),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            qpoch_inf(0.5, 0.5).unwrap(),
            0.288_788_095_086_602_4,
            max_relative = 1e-12
        );
        for &(a, q) in &[(0.3, 0.7), (-0.9, 0.99), (0.95, 0.9), (1.05, 0.9)] {
            let r = qpoch_inf(a, q).unwrap() / qpoch_inf(a * q, q).unwrap();
            assert_relative_eq!(r, 1.0 - a, max_relative = 1e-14);
        }
        assert!(qpoch_inf(0.5, 1.0).is_err());
        assert!(qpoch_inf(0.5, 0.0).is_err());
    }

    #[test]
    fn log_qpoch_near_one_does_not_underflow() {
        let q = (-1e-3f64).exp();
        let l = log_qpoch_inf(q, q).unwrap();
        // log (q;q)_∞ ≈ -π²/(6ε) + ½ log(2π/ε)
        let eps = 1e-3;
        let approx = -std::f64::consts::PI.powi(2) / (6.0 * eps)
            + 0.5 * (2.0 * std::f64::consts::PI / eps).ln()
            + eps / 24.0;
        assert!((l - approx).abs() < 1e-8, "{l} vs {approx}");
    }

    #[test]
    fn qpoch_fin_values() {
        assert_eq!(qpoch_fin(0.5, 0.5, 0).unwrap(), 1.0);
        assert_relative_eq!(qpoch_fin(0.5, 0.5, 2).unwrap(), 0.375, max_relative = 1e-15);
        assert!(qpoch_fin(0.5, 0.5, -1).is_err());
        for k in 0..6 {
            let direct =
                qpoch_inf(0.4, 0.6).unwrap() / qpoch_inf(0.4 * 0.6f64.powi(k as i32), 0.6).unwrap();
            assert_relative_eq!(
                qpoch_fin(0.4, 0.6, k).unwrap(),
                direct,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                log_qpoch_fin(0.4, 0.6, k).unwrap().exp(),
                direct,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn qparams_invariants() {
        let p = QParams::new(0.5, 2.0).unwrap();
        assert!((p.t() - 0.25).abs() < 1e-14);
        let p = QParams::from_qt(0.3, 0.7).unwrap();
        assert!((p.q().powf(p.theta()) - p.t()).abs() < 1e-14);
        assert!(QParams::new(1.2, 1.0).is_err());
    }

    #[test]
    fn partitions() {
        let p = Partition::new(vec![3, 1, 0, 0]).unwrap();
        assert_eq!(p.parts(), &[3, 1]);
        assert_eq!(p.len(), 2);
        assert_eq!(p.size(), 4);
        assert_eq!(p.conjugate().parts(), &[2, 1, 1]);
        assert!(Partition::new(vec![1, 2]).is_err());
        assert_eq!(
            Partition::scaled_floor(&[0.3, 0.6], 0.1).unwrap_err(),
            Error::Validation("[3, 6] is not weakly decreasing".into())
        );
        assert_eq!(
            Partition::scaled_floor(&[0.6, 0.3], 3e-3).unwrap().parts(),
            &[200, 100]
        );
    }
}
