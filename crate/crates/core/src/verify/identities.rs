//! Deterministic identity checks: Cauchy identities, HCIZ route agreement,
//! the Jacobi-to-Heckman-Opdam pushforward and the Bessel symmetries.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::TestReport;
use crate::densities::{
    ho_from_jacobi, logdens_ho_joint, logdens_jacobi, logdens_jacobi_as_printed,
    transform_jacobi_to_ho,
};
use crate::ensembles::{sample_jacobi_multilevel, JacobiParams};
use crate::error::{Error, Result};
use crate::hyperfun::{
    bessel_b, bessel_b_quadrature, bessel_b_tilde, gt_dimension, hciz, ho_f, Estimate, HaarMcSpec,
    HciZRoute, HyperParams, QuadSpec,
};
use crate::qseries::{cauchy_partial_sum, cauchy_product, QParams};
use crate::quad::{exp_sinh, log_box_integral};
use crate::rng::{derive_seed, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdentityId {
    CauchyMvb,
    CauchyHo,
    MacCauchy,
    HcizConsistency,
    JacobiHoPushforward,
    BesselScaling,
    BesselSymmetry,
    BesselNormalization,
    HoNormalization,
}

impl IdentityId {
    pub const ALL: [IdentityId; 9] = [
        IdentityId::CauchyMvb,
        IdentityId::CauchyHo,
        IdentityId::MacCauchy,
        IdentityId::HcizConsistency,
        IdentityId::JacobiHoPushforward,
        IdentityId::BesselScaling,
        IdentityId::BesselSymmetry,
        IdentityId::BesselNormalization,
        IdentityId::HoNormalization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IdentityId::CauchyMvb => "cauchy-mvb",
            IdentityId::CauchyHo => "cauchy-ho",
            IdentityId::MacCauchy => "mac-cauchy",
            IdentityId::HcizConsistency => "hciz-consistency",
            IdentityId::JacobiHoPushforward => "jacobi-ho-pushforward",
            IdentityId::BesselScaling => "bessel-scaling",
            IdentityId::BesselSymmetry => "bessel-symmetry",
            IdentityId::BesselNormalization => "bessel-normalization",
            IdentityId::HoNormalization => "ho-normalization",
        }
    }
}

impl fmt::Display for IdentityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IdentityId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        IdentityId::ALL
            .iter()
            .copied()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown identity id '{s}'")))
    }
}

/// Runs one identity check. `seed` only matters for the Monte Carlo parts.
pub fn check_identity(id: IdentityId, seed: u64) -> Result<TestReport> {
    let start = Instant::now();
    let mut r = match id {
        IdentityId::CauchyMvb => check_cauchy_mvb()?,
        IdentityId::CauchyHo => check_cauchy_ho()?,
        IdentityId::MacCauchy => check_mac_cauchy()?,
        IdentityId::HcizConsistency => {
            let c = check_hciz_complex(seed)?;
            let r = check_hciz_real(seed)?;
            let mut out = Checks::default();
            out.push(&c.detail, c.statistic, c.threshold);
            out.push(&r.detail, r.statistic, r.threshold);
            out.report("hciz-consistency", 0).with_seed(seed)
        }
        IdentityId::JacobiHoPushforward => check_pushforward(1000, seed)?,
        IdentityId::BesselScaling => check_bessel_scaling()?,
        IdentityId::BesselSymmetry => check_bessel_symmetry()?,
        IdentityId::BesselNormalization => check_bessel_normalization()?,
        IdentityId::HoNormalization => check_ho_normalization()?,
    };
    r.test_id = format!("identity/{}", id.as_str());
    r.runtime_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Sub-checks of one report; the statistic is the largest `error / tolerance`.
#[derive(Debug, Default)]
struct Checks {
    worst: f64,
    lines: Vec<String>,
}

impl Checks {
    fn push(&mut self, label: &str, err: f64, tol: f64) {
        let ratio = if err.is_nan() {
            f64::INFINITY
        } else {
            err / tol
        };
        self.worst = self.worst.max(ratio);
        let verdict = if ratio <= 1.0 { "ok" } else { "FAIL" };
        self.lines
            .push(format!("{label}: {err:.3e} (tol {tol:.0e}) {verdict}"));
    }

    fn report(self, id: &str, n: usize) -> TestReport {
        TestReport::tolerance_test(id, "max err/tol", self.worst, 1.0, n)
            .with_detail(self.lines.join("; "))
    }
}

fn rel_log(a: f64, b: f64) -> f64 {
    (a - b).exp_m1().abs()
}

fn de(level: u32, tol: f64) -> QuadSpec {
    QuadSpec::double_exponential(level, tol)
}

/// `log [Γ(mθ)⋯Γ((m-n+1)θ) Γ(nθ)⋯Γ(θ) / Γ(θ)^{2n}]`.
fn cauchy_constant(n: usize, m: usize, th: f64) -> f64 {
    ((m - n + 1)..=m)
        .chain(1..=n)
        .map(|k| ln_gamma(k as f64 * th))
        .sum::<f64>()
        - 2.0 * n as f64 * ln_gamma(th)
}

/// `∫_0^∞ Γ(θ)^{-1} λ^{θ-1} e^{-(s+r)λ} dλ` by exp-sinh, in log form.
fn scalar_mvb_lhs(th: f64, s: f64, r: f64) -> Result<f64> {
    let c = s + r;
    let (v, _) = exp_sinh(0.0, 1e-13, |x, _| {
        (-ln_gamma(th) + (th - 1.0) * x.ln() - c * x).exp()
    })?;
    Ok(v.ln())
}

/// `∫_0^∞ Γ(θ)^{-1} (1 - e^{-λ})^{θ-1} e^{(s+r)λ} dλ`, in log form.
fn scalar_ho_lhs(th: f64, s: f64, r: f64) -> Result<f64> {
    let c = s + r;
    let (v, _) = exp_sinh(0.0, 1e-13, |x, _| {
        (-ln_gamma(th) + (th - 1.0) * (-(-x).exp_m1()).ln() + c * x).exp()
    })?;
    Ok(v.ln())
}

/// Outer integral of the `n = m = 2` Bessel Cauchy identity over
/// `λ₁ = λ₂ + g`, `λ₂, g > 0`.
fn mvb_cauchy_2x2(th: f64, s: &[f64; 2], r: &[f64; 2], level: u32) -> (f64, f64) {
    let quad = de(5, 1e-7);
    let ms: Vec<f64> = s.iter().map(|v| -v).collect();
    let mr: Vec<f64> = r.iter().map(|v| -v).collect();
    let tail = 80.0 / s.iter().chain(r).fold(f64::INFINITY, |a, &b| a.min(b));
    log_box_integral(
        &[(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
        level,
        tail,
        |x| {
            let lam = vec![x[0] + x[1], x[0]];
            if !(lam[0] > lam[1]) {
                return f64::NEG_INFINITY;
            }
            let b =
                HyperParams::new(th, lam.clone(), ms.clone()).and_then(|hp| bessel_b(&hp, &quad));
            let bt =
                HyperParams::new(th, lam, mr.clone()).and_then(|hp| bessel_b_tilde(&hp, &quad));
            match (b, bt) {
                (Ok(b), Ok(bt)) => b.log_value + bt.log_value + 2.0 * th * x[1].ln(),
                _ => f64::NAN,
            }
        },
    )
}

pub fn check_cauchy_mvb() -> Result<TestReport> {
    let mut c = Checks::default();
    for th in [0.5, 1.0] {
        let (s, r) = (1.3, 0.4);
        let lhs = scalar_mvb_lhs(th, s, r)?;
        let rhs = cauchy_constant(1, 1, th) - th * (s + r).ln();
        c.push(&format!("n=m=1 θ={th}"), rel_log(lhs, rhs), 1e-10);
    }
    for th in [0.5, 1.0] {
        let (s, r) = ([1.0, 0.6], [0.8, 0.5]);
        let (lhs, change) = mvb_cauchy_2x2(th, &s, &r, 4);
        let rhs = cauchy_constant(2, 2, th)
            - th * s
                .iter()
                .flat_map(|a| r.iter().map(move |b| (a + b).ln()))
                .sum::<f64>();
        c.push(
            &format!("n=m=2 θ={th} (level change {change:.1e})"),
            rel_log(lhs, rhs),
            1e-3,
        );
    }
    Ok(c.report("cauchy-mvb", 4))
}

/// Only `n = m = 1`; needs `s + r < 0` for integrability.
pub fn check_cauchy_ho() -> Result<TestReport> {
    let mut c = Checks::default();
    for th in [0.5, 1.0] {
        for (s, r) in [(-0.7, -0.5), (0.3, -2.1)] {
            let lhs = scalar_ho_lhs(th, s, r)?;
            let rhs = cauchy_constant(1, 1, th) + ln_gamma(-s - r) - ln_gamma(th - s - r);
            c.push(
                &format!("n=m=1 θ={th} s+r={:.1}", s + r),
                rel_log(lhs, rhs),
                1e-10,
            );
        }
    }
    Ok(c.report("cauchy-ho", 4))
}

/// Truncated Macdonald Cauchy sum at `|λ| ≤ 12`, `ℓ(λ) ≤ 2` against the product.
pub fn check_mac_cauchy() -> Result<TestReport> {
    let (x, y) = ([0.3, 0.2], [0.25, 0.1]);
    let mut c = Checks::default();
    for q in [0.3, 0.7] {
        for t in [0.3, 0.7] {
            let qt = QParams::from_qt(q, t)?;
            let sum = cauchy_partial_sum(&x, &y, 12, qt)?;
            let prod = cauchy_product(&x, &y, qt)?;
            c.push(&format!("q={q} t={t}"), ((sum - prod) / prod).abs(), 1e-6);
        }
    }
    Ok(c.report("mac-cauchy", 4))
}

const HAAR_SAMPLES: usize = 100_000;

/// `β = 2`, `m = 2, 3`: Haar Monte Carlo against the determinant within 2e-2,
/// determinant against the Bessel quadrature within 1e-3.
pub fn check_hciz_complex(seed: u64) -> Result<TestReport> {
    let cases: [(&[f64], &[f64]); 2] = [
        (&[2.0, 1.0], &[1.0, 0.5]),
        (&[3.0, 1.8, 0.7], &[1.5, 1.0, 0.5]),
    ];
    let mut c = Checks::default();
    for (k, (a, b)) in cases.iter().enumerate() {
        let mc = HciZRoute::HaarMc(HaarMcSpec {
            samples: HAAR_SAMPLES,
            seed: derive_seed(seed, &format!("hciz2/{k}")),
        });
        let h_mc = hciz(a, b, 2, &mc)?;
        let h_det = hciz(a, b, 2, &HciZRoute::Determinant)?;
        let h_bes = hciz(a, b, 2, &HciZRoute::Bessel(QuadSpec::gauss(24, 1e-8)))?;
        let m = a.len();
        c.push(
            &format!("β=2 m={m} haar-mc vs determinant"),
            rel_log(h_mc.log_value, h_det.log_value),
            2e-2,
        );
        c.push(
            &format!("β=2 m={m} determinant vs bessel"),
            rel_log(h_det.log_value, h_bes.log_value),
            1e-3,
        );
    }
    Ok(c.report("hciz-complex", HAAR_SAMPLES).with_seed(seed))
}

/// `β = 1`, `m = 2`: Haar Monte Carlo against `B₁^{2,2}(a, -b/2)` within three
/// combined error estimates.
pub fn check_hciz_real(seed: u64) -> Result<TestReport> {
    let (a, b) = ([2.0, 1.0], [1.0, 0.5]);
    let mc = HciZRoute::HaarMc(HaarMcSpec {
        samples: HAAR_SAMPLES,
        seed: derive_seed(seed, "hciz1"),
    });
    let h_mc = hciz(&a, &b, 1, &mc)?;
    let h_bes = hciz(&a, &b, 1, &HciZRoute::Bessel(de(6, 1e-8)))?;
    let sigma = h_mc.rel_error.hypot(h_bes.rel_error);
    let z = rel_log(h_mc.log_value, h_bes.log_value) / sigma;
    let detail = format!(
        "β=1 m=2 haar-mc {:.6} ± {:.1e}, bessel {:.6} ± {:.1e}, z = {z:.2}",
        h_mc.value(),
        h_mc.rel_error,
        h_bes.value(),
        h_bes.rel_error
    );
    Ok(TestReport::tolerance_test(
        "hciz-real",
        "deviation / combined sigma",
        z,
        3.0,
        HAAR_SAMPLES,
    )
    .with_detail(detail)
    .with_seed(seed))
}

/// Residuals `log p_J(λ) + log|∂λ/∂μ| - log p_HO(μ)` over draws of the Jacobi
/// sampler, for the density as used and as printed.
pub fn pushforward_residuals(
    p: &JacobiParams,
    count: usize,
    seed: u64,
    quad: &QuadSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let hp = ho_from_jacobi(p);
    let mut used = Vec::with_capacity(count);
    let mut printed = Vec::with_capacity(count);
    for k in 0..count as u64 {
        let s = sample_jacobi_multilevel(p, &mut substream(seed, k))?;
        let (mu, jac) = transform_jacobi_to_ho(&s)?;
        let h = logdens_ho_joint(&mu, &hp, quad)?.ln();
        used.push(logdens_jacobi(&s, p)?.ln() + jac - h);
        printed.push(logdens_jacobi_as_printed(&s, p)?.ln() + jac - h);
    }
    Ok((used, printed))
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Pushforward residual variance at most 1e-8 for both β.
pub fn check_pushforward(count: usize, seed: u64) -> Result<TestReport> {
    let mut c = Checks::default();
    let cases = [
        (2u32, 4usize, 2usize, 2usize, QuadSpec::gauss(20, 1e-8)),
        (2, 5, 3, 2, QuadSpec::gauss(20, 1e-8)),
        (1, 4, 2, 2, de(4, 1e-6)),
        (1, 5, 3, 2, de(3, 1e-4)),
    ];
    for (beta, a, n, m, quad) in cases {
        let p = JacobiParams::new(beta, a, n, m)?;
        let (used, printed) = pushforward_residuals(
            &p,
            count,
            derive_seed(seed, &format!("push/{beta}/{a}/{n}/{m}")),
            &quad,
        )?;
        let label = format!("β={beta} (A,n,m)=({a},{n},{m}) variance");
        c.push(&label, variance(&used), 1e-8);
        if beta == 1 {
            c.lines.push(format!(
                "β=1 ({a},{n},{m}) printed exponents: variance {:.3e}",
                variance(&printed)
            ));
        }
    }
    Ok(c.report("jacobi-ho-pushforward", count).with_seed(seed))
}

fn b_quad(th: f64, lam: &[f64], s: &[f64]) -> Result<Estimate> {
    let hp = HyperParams::new(th, lam.to_vec(), s.to_vec())?;
    let level = if gt_dimension(hp.n, hp.m) > 1 { 4 } else { 6 };
    bessel_b_quadrature(&hp, &de(level, 1e-10))
}

const BESSEL_CASES: [(&[f64], &[f64]); 3] = [
    (&[1.3, 0.4], &[0.9, 0.2]),
    (&[1.1], &[0.8, -0.5]),
    (&[1.4, 0.6], &[0.7, 0.3, -0.2]),
];

/// `c^{θ(n(m-n)+n(n-1)/2)} B(λ, cs) = B(cλ, s)` as stated, plus the plain
/// rescaling `B(λ, cs) = B(cλ, s)` that the integral formula gives.
pub fn check_bessel_scaling() -> Result<TestReport> {
    let cfac: f64 = 1.7;
    let mut c = Checks::default();
    let mut plain = Vec::new();
    for th in [0.5, 1.0] {
        for (lam, s) in BESSEL_CASES {
            let (n, m) = (lam.len(), s.len());
            let cs: Vec<f64> = s.iter().map(|v| cfac * v).collect();
            let cl: Vec<f64> = lam.iter().map(|v| cfac * v).collect();
            let left = b_quad(th, lam, &cs)?.log_value;
            let right = b_quad(th, &cl, s)?.log_value;
            let power = th * (n * (m - n) + n * (n - 1) / 2) as f64 * cfac.ln();
            c.push(
                &format!("θ={th} (n,m)=({n},{m})"),
                rel_log(power + left, right),
                1e-8,
            );
            plain.push(format!("{:.1e}", rel_log(left, right)));
        }
    }
    c.lines
        .push(format!("without the power of c: {}", plain.join(" ")));
    Ok(c.report("bessel-scaling", 0))
}

/// `B^{n,m}(λ, s) = B^{m,m}(s, λ)`, `λ` padded with zeros.
pub fn check_bessel_symmetry() -> Result<TestReport> {
    let mut c = Checks::default();
    for th in [0.5, 1.0] {
        for (lam, s) in [(&[1.3, 0.4][..], &[0.9, 0.2][..]), (&[1.1], &[0.8, 0.5])] {
            let mut padded = lam.to_vec();
            padded.resize(s.len(), 0.0);
            let left = b_quad(th, lam, s)?.log_value;
            let right = b_quad(th, s, &padded)?.log_value;
            c.push(
                &format!("θ={th} (n,m)=({},{})", lam.len(), s.len()),
                rel_log(left, right),
                1e-8,
            );
        }
    }
    Ok(c.report("bessel-symmetry", 0))
}

/// `B(λ, 0) = 1` by quadrature and `B(δλ, s) → 1` at `δ = 1e-10`.
pub fn check_bessel_normalization() -> Result<TestReport> {
    let mut c = Checks::default();
    for th in [0.5, 1.0] {
        for (lam, s) in BESSEL_CASES {
            let (n, m) = (lam.len(), s.len());
            let zero = vec![0.0; m];
            c.push(
                &format!("θ={th} (n,m)=({n},{m}) B(λ,0)"),
                b_quad(th, lam, &zero)?.log_value.exp_m1().abs(),
                1e-8,
            );
            let tiny: Vec<f64> = lam.iter().map(|v| 1e-10 * v).collect();
            c.push(
                &format!("θ={th} (n,m)=({n},{m}) B(δλ,s)"),
                b_quad(th, &tiny, s)?.log_value.exp_m1().abs(),
                1e-8,
            );
        }
    }
    Ok(c.report("bessel-normalization", 0))
}

/// `F(λ, 0) = 1` as stated, and `F(λ, ρ) = e^{-(n-1)θ|λ|/2}` at
/// `ρ = (0, -θ, …, -(m-1)θ)`.
pub fn check_ho_normalization() -> Result<TestReport> {
    let mut c = Checks::default();
    for th in [0.5, 1.0] {
        for lam in [&[1.2][..], &[1.6, 0.5]] {
            let (n, m) = (lam.len(), 2);
            let hp = |s: Vec<f64>| HyperParams::new(th, lam.to_vec(), s);
            let level = if gt_dimension(n, m) > 1 { 4 } else { 6 };
            let quad = de(level, 1e-8);
            let at_zero = ho_f(&hp(vec![0.0; m])?, &quad)?.log_value;
            c.push(
                &format!("θ={th} (n,m)=({n},{m}) F(λ,0)"),
                at_zero.exp_m1().abs(),
                1e-8,
            );
            let rho = (0..m).map(|i| -(i as f64) * th).collect();
            let at_rho = ho_f(&hp(rho)?, &quad)?.log_value;
            let expect = -0.5 * (n as f64 - 1.0) * th * lam.iter().sum::<f64>();
            c.push(
                &format!("θ={th} (n,m)=({n},{m}) F(λ,ρ)"),
                rel_log(at_rho, expect),
                1e-8,
            );
        }
    }
    Ok(c.report("ho-normalization", 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in IdentityId::ALL {
            assert_eq!(id.as_str().parse::<IdentityId>().unwrap(), id);
        }
    }

    #[test]
    fn scalar_cauchy_matches_closed_forms() {
        // (s + r)^{-θ} with s + r = 2 and θ = 1: 1/2
        assert!((scalar_mvb_lhs(1.0, 1.5, 0.5).unwrap().exp() - 0.5).abs() < 1e-12);
        // θ = 1: ∫ e^{-cλ} = 1/c = Γ(c)/Γ(1 + c)
        assert!((scalar_ho_lhs(1.0, -1.0, -1.5).unwrap().exp() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn truncated_macdonald_sum() {
        let r = check_mac_cauchy().unwrap();
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn small_pushforward_is_constant() {
        let p = JacobiParams::new(2, 4, 2, 2).unwrap();
        let (used, _) = pushforward_residuals(&p, 20, 5, &QuadSpec::gauss(20, 1e-8)).unwrap();
        assert!(variance(&used) < 1e-8);
    }
}
