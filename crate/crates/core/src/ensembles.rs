//! Exact samplers for the multilevel generalized β-Wishart and β-Jacobi
//! eigenvalue processes through their matrix models.

use std::io::Write;

use log::warn;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::{
    generalized_eig, interlaces, psd_spectrum, sample_gaussian_matrix, DenseMatrix, Field,
    SelfAdjointMatrix, Spectrum,
};
use crate::rng::substream;

/// Relative slack allowed on interlacing before levels are snapped into their
/// boxes; anything larger is reported as a sampler failure.
const INTERLACE_SLACK: f64 = 1e-9;
/// Pencils whose Cholesky factor has a worse condition are redrawn.
const MAX_PENCIL_CONDITION: f64 = 1e14;
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WishartParams {
    pub beta: u32,
    /// Column parameters, length `n`.
    pub pi: Vec<f64>,
    /// Row (level) parameters; missing entries are 0.
    pub pi_hat: Vec<f64>,
}

impl WishartParams {
    pub fn new(beta: u32, pi: Vec<f64>, pi_hat: Vec<f64>) -> Result<Self> {
        let p = Self { beta, pi, pi_hat };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    pub fn theta(&self) -> f64 {
        self.beta as f64 / 2.0
    }

    pub fn field(&self) -> Result<Field> {
        Field::from_beta(self.beta)
    }

    /// `π̂_m` for level `m` (1-based).
    pub fn pi_hat_at(&self, m: usize) -> f64 {
        self.pi_hat.get(m - 1).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.field()?;
        if self.pi.is_empty() {
            return param("π must be nonempty");
        }
        if self
            .pi
            .iter()
            .chain(&self.pi_hat)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return param("π and π̂ must be finite and nonnegative");
        }
        // levels beyond π̂ are zero-extended, so π_j + π̂_i > 0 needs π_j > 0
        if self.pi.iter().any(|&p| p == 0.0) {
            return param("π entries must be positive");
        }
        Ok(())
    }

    fn variance(&self, row: usize, col: usize) -> f64 {
        1.0 / (self.pi[col] + self.pi_hat_at(row + 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JacobiParams {
    pub beta: u32,
    pub a: usize,
    pub n: usize,
    pub m_max: usize,
}

impl JacobiParams {
    pub fn new(beta: u32, a: usize, n: usize, m_max: usize) -> Result<Self> {
        let p = Self { beta, a, n, m_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        Field::from_beta(self.beta)?;
        if !(1 <= self.m_max && self.m_max <= self.n && self.n <= self.a) {
            return param(format!(
                "need 1 ≤ m ≤ n ≤ A, got m = {}, n = {}, A = {}",
                self.m_max, self.n, self.a
            ));
        }
        Ok(())
    }
}

/// Eigenvalue levels `μ^1 ≺ ⋯ ≺ μ^m` from one matrix realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilevelSample {
    pub levels: Vec<Spectrum>,
    /// `(seed, draw index)` when produced by a batch run.
    pub provenance: Option<(u64, u64)>,
}

impl MultilevelSample {
    pub fn new(levels: Vec<Spectrum>) -> Self {
        Self {
            levels,
            provenance: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Level `l`, 1-based.
    pub fn level(&self, l: usize) -> &Spectrum {
        &self.levels[l - 1]
    }

    pub fn is_interlacing(&self) -> bool {
        self.levels
            .windows(2)
            .all(|w| interlaces(w[0].values(), w[1].values(), false))
    }

    pub fn level_values(&self) -> Vec<Vec<f64>> {
        self.levels.iter().map(|s| s.values().to_vec()).collect()
    }
}

/// Snaps rounding-level violations of interlacing (top level down) and
/// errors on anything larger.
fn enforce_interlacing(levels: &mut [Vec<f64>]) -> Result<()> {
    for l in (0..levels.len().saturating_sub(1)).rev() {
        let (low, high) = levels.split_at_mut(l + 1);
        let (cur, up) = (&mut low[l], &high[0]);
        let scale = up.first().copied().unwrap_or(1.0).abs().max(1.0);
        for i in 0..cur.len() {
            let hi = up[i];
            let lo = up.get(i + 1).copied().unwrap_or(0.0);
            if cur[i] > hi + INTERLACE_SLACK * scale || cur[i] < lo - INTERLACE_SLACK * scale {
                return Err(Error::Validation(format!(
                    "levels {} and {} fail to interlace: {:?} vs {:?}",
                    l + 1,
                    l + 2,
                    cur,
                    up
                )));
            }
            cur[i] = cur[i].clamp(lo, hi);
        }
    }
    Ok(())
}

fn top_eigenvalues(m: &SelfAdjointMatrix, k: usize) -> Result<Vec<f64>> {
    let spec = psd_spectrum(m)?;
    Ok(spec.values()[..k].to_vec())
}

fn into_sample(mut levels: Vec<Vec<f64>>) -> Result<MultilevelSample> {
    enforce_interlacing(&mut levels)?;
    let levels = levels
        .into_iter()
        .map(Spectrum::from_sorted)
        .collect::<Result<_>>()?;
    Ok(MultilevelSample::new(levels))
}

/// Nonzero eigenvalues of `M_m = A_m^* A_m`, `m = 1..=m_max`, for a single
/// draw of the `m_max × n` Gaussian matrix `A`.
pub fn sample_wishart_multilevel<R: Rng + ?Sized>(
    p: &WishartParams,
    m_max: usize,
    rng: &mut R,
) -> Result<MultilevelSample> {
    p.validate()?;
    if m_max == 0 {
        return param("m_max must be positive");
    }
    let n = p.n();
    let a = sample_gaussian_matrix(m_max, n, |i, j| p.variance(i, j), p.field()?, rng)?;
    let levels = (1..=m_max)
        .map(|m| top_eigenvalues(&a.gram_of_top_rows(m), m.min(n)))
        .collect::<Result<Vec<_>>>()?;
    into_sample(levels)
}

/// Per level `m`, the `m` smallest eigenvalues of
/// `J_m = X^*X (X^*X + Y_m^*Y_m)^{-1}` (decreasing), from one draw of
/// `X` (`A × n`) and `Y` (`m_max × n`).
pub fn sample_jacobi_multilevel<R: Rng + ?Sized>(
    p: &JacobiParams,
    rng: &mut R,
) -> Result<MultilevelSample> {
    p.validate()?;
    for attempt in 0..MAX_REDRAWS {
        match jacobi_attempt(p, rng)? {
            Some(levels) => return into_sample(levels),
            None => warn!(
                "Jacobi pencil too ill-conditioned, redrawing (attempt {})",
                attempt + 1
            ),
        }
    }
    Err(Error::Degenerate(format!(
        "no well-conditioned Jacobi pencil after {MAX_REDRAWS} draws"
    )))
}

/// Full pencil spectra `(level m, all n eigenvalues)`, or `None` when some
/// pencil is too ill-conditioned.
fn jacobi_pencils<R: Rng + ?Sized>(p: &JacobiParams, rng: &mut R) -> Result<Option<Vec<Vec<f64>>>> {
    let field = Field::from_beta(p.beta)?;
    let x = sample_gaussian_matrix(p.a, p.n, |_, _| 1.0, field, rng)?;
    let y = sample_gaussian_matrix(p.m_max, p.n, |_, _| 1.0, field, rng)?;
    let xx = x.gram_of_top_rows(p.a);
    let mut out = Vec::with_capacity(p.m_max);
    for m in 1..=p.m_max {
        let yy = y.gram_of_top_rows(m);
        let q = SelfAdjointMatrix::new(xx.matrix().add(yy.matrix())?)?;
        let (spec, cond) = match generalized_eig(&xx, &q) {
            Ok(r) => r,
            Err(Error::Degenerate(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !(cond <= MAX_PENCIL_CONDITION) {
            return Ok(None);
        }
        out.push(spec.values().iter().map(|v| v.clamp(0.0, 1.0)).collect());
    }
    Ok(Some(out))
}

fn jacobi_attempt<R: Rng + ?Sized>(p: &JacobiParams, rng: &mut R) -> Result<Option<Vec<Vec<f64>>>> {
    let Some(full) = jacobi_pencils(p, rng)? else {
        return Ok(None);
    };
    // the m smallest eigenvalues sit at the tail of the decreasing spectrum
    Ok(Some(
        full.into_iter()
            .enumerate()
            .map(|(idx, s)| s[s.len() - (idx + 1)..].to_vec())
            .collect(),
    ))
}

/// Jacobi levels conditioned on the eigenvalues `λ_X` of `X^*X`: the
/// `τ = 1/λ - 1` process is generalized Wishart with `π = λ_X`, `π̂ = 0`.
pub fn sample_jacobi_conditional<R: Rng + ?Sized>(
    lambda_x: &Spectrum,
    m_max: usize,
    beta: u32,
    rng: &mut R,
) -> Result<MultilevelSample> {
    let n = lambda_x.len();
    if lambda_x
        .values()
        .iter()
        .any(|&v| !(v > 0.0 && v.is_finite()))
    {
        return param("λ_X must be strictly positive");
    }
    if m_max == 0 || m_max > n {
        return param(format!("need 1 ≤ m ≤ n = {n}"));
    }
    let wp = WishartParams::new(beta, lambda_x.values().to_vec(), Vec::new())?;
    let tau = sample_wishart_multilevel(&wp, m_max, rng)?;
    let levels = tau
        .levels
        .iter()
        .map(|t| tau_to_lambda(t.values()))
        .collect();
    into_sample(levels)
}

/// `λ_i = 1/(1 + τ_{m+1-i})`: decreasing `τ` maps to decreasing `λ`.
pub fn tau_to_lambda(tau: &[f64]) -> Vec<f64> {
    tau.iter().rev().map(|t| 1.0 / (1.0 + t)).collect()
}

/// `τ_i = 1/λ_{m+1-i} - 1`.
pub fn lambda_to_tau(lambda: &[f64]) -> Vec<f64> {
    lambda.iter().rev().map(|l| 1.0 / l - 1.0).collect()
}

/// Draws `count` samples in parallel; draw `k` uses `substream(seed, k)`.
pub fn sample_batch<F>(count: usize, seed: u64, draw: F) -> Result<Vec<MultilevelSample>>
where
    F: Fn(&mut crate::rng::Rng) -> Result<MultilevelSample> + Sync,
{
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k);
            let mut s = draw(&mut rng)?;
            s.provenance = Some((seed, k));
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct CsvRow {
    draw: u64,
    level: usize,
    index: usize,
    value: String,
}

/// 17 significant digits in scientific notation, which round-trips any
/// `f64`; infinities print as `inf` / `-inf`.
pub fn decimal17(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

/// Long-format CSV: one row per eigenvalue, `draw,level,index,value`, with
/// `index` 1-based within the decreasing level.
pub fn write_csv<W: Write>(samples: &[MultilevelSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (k, s) in samples.iter().enumerate() {
        let draw = s.provenance.map_or(k as u64, |(_, d)| d);
        for (l, lev) in s.levels.iter().enumerate() {
            for (i, &value) in lev.values().iter().enumerate() {
                w.serialize(CsvRow {
                    draw,
                    level: l + 1,
                    index: i + 1,
                    value: decimal17(value),
                })
                .map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// One JSON object per line: `{"draw":…,"levels":[[…],…]}`.
pub fn write_json_lines<W: Write>(samples: &[MultilevelSample], mut out: W) -> Result<()> {
    for (k, s) in samples.iter().enumerate() {
        let draw = s.provenance.map_or(k as u64, |(_, d)| d);
        let row = serde_json::json!({ "draw": draw, "levels": s.level_values() });
        writeln!(out, "{row}").map_err(|e| Error::Io(e.to_string()))?;
    }
    Ok(())
}

fn io_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Eigenvalues of `X^*X` for an `A × n` standard Gaussian `X`.
pub fn sample_laguerre<R: Rng + ?Sized>(
    beta: u32,
    a: usize,
    n: usize,
    rng: &mut R,
) -> Result<Spectrum> {
    if n == 0 || a < n {
        return param("need 1 ≤ n ≤ A");
    }
    let x: DenseMatrix = sample_gaussian_matrix(a, n, |_, _| 1.0, Field::from_beta(beta)?, rng)?;
    psd_spectrum(&x.gram_of_top_rows(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::stats::ks_test;
    use statrs::distribution::{Beta, ContinuousCDF, Exp, Gamma};

    fn seeded(k: u64) -> crate::rng::Rng {
        substream(0x5eed, k)
    }

    #[test]
    fn one_by_one_wishart_laws() {
        let n_draws = 20_000;
        let p2 = WishartParams::new(2, vec![1.5], vec![0.5]).unwrap();
        let xs: Vec<f64> = sample_batch(n_draws, 11, |r| sample_wishart_multilevel(&p2, 1, r))
            .unwrap()
            .iter()
            .map(|s| s.level(1).values()[0])
            .collect();
        let exp = Exp::new(2.0).unwrap();
        assert!(ks_test(&xs, |x| exp.cdf(x)).unwrap().p() > 0.01);
        let p1 = WishartParams::new(1, vec![1.5], vec![0.5]).unwrap();
        let xs: Vec<f64> = sample_batch(n_draws, 12, |r| sample_wishart_multilevel(&p1, 1, r))
            .unwrap()
            .iter()
            .map(|s| s.level(1).values()[0])
            .collect();
        let gamma = Gamma::new(0.5, 1.0).unwrap();
        assert!(ks_test(&xs, |x| gamma.cdf(x)).unwrap().p() > 0.01);
    }

    #[test]
    fn wishart_levels_interlace() {
        let p = WishartParams::new(2, vec![1.0, 0.5, 2.0], vec![0.3, 0.0, 1.0, 0.2]).unwrap();
        for k in 0..2000 {
            let s = sample_wishart_multilevel(&p, 4, &mut seeded(k)).unwrap();
            assert!(s.is_interlacing());
            assert_eq!(
                s.levels.iter().map(|l| l.len()).collect::<Vec<_>>(),
                vec![1, 2, 3, 3]
            );
            assert!(s
                .levels
                .iter()
                .all(|l| l.values().iter().all(|&v| v >= 0.0)));
        }
    }

    #[test]
    fn jacobi_support_and_unit_eigenvalues() {
        let p = JacobiParams::new(1, 5, 3, 2).unwrap();
        for k in 0..1000 {
            let mut rng = seeded(k);
            let full = jacobi_pencils(&p, &mut rng).unwrap().unwrap();
            for (idx, spec) in full.iter().enumerate() {
                let m = idx + 1;
                assert!(spec.iter().all(|&v| (0.0..=1.0).contains(&v)));
                // Y_m^*Y_m has rank m, leaving n - m unit eigenvalues
                assert!(
                    spec[..p.n - m].iter().all(|&v| (v - 1.0).abs() < 1e-8),
                    "{spec:?}"
                );
            }
            let s = sample_jacobi_multilevel(&p, &mut seeded(k)).unwrap();
            assert!(s.is_interlacing());
        }
    }

    #[test]
    fn jacobi_single_level_beta_law() {
        // β = 2, m = 1: density ∝ λ^{A-n}(1-λ)^{n-1}
        let p = JacobiParams::new(2, 4, 3, 1).unwrap();
        let xs: Vec<f64> = sample_batch(20_000, 21, |r| sample_jacobi_multilevel(&p, r))
            .unwrap()
            .iter()
            .map(|s| s.level(1).values()[0])
            .collect();
        let beta = Beta::new(2.0, 3.0).unwrap();
        assert!(ks_test(&xs, |x| beta.cdf(x)).unwrap().p() > 0.01);
    }

    #[test]
    fn conditional_route_matches_matrix_model() {
        let p = JacobiParams::new(2, 4, 2, 1).unwrap();
        let n = 20_000;
        let direct: Vec<f64> = sample_batch(n, 31, |r| sample_jacobi_multilevel(&p, r))
            .unwrap()
            .iter()
            .map(|s| s.level(1).values()[0])
            .collect();
        let cond: Vec<f64> = sample_batch(n, 32, |r| {
            let lx = sample_laguerre(2, 4, 2, r)?;
            sample_jacobi_conditional(&lx, 1, 2, r)
        })
        .unwrap()
        .iter()
        .map(|s| s.level(1).values()[0])
        .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let se = ((var(&direct) + var(&cond)) / n as f64).sqrt();
        assert!((mean(&direct) - mean(&cond)).abs() < 4.0 * se);
    }

    #[test]
    fn conditional_one_by_one_is_exponential() {
        // n = 1, β = 2: τ ~ Exp(rate λ_X)
        let lx = Spectrum::new(vec![2.5]).unwrap();
        let taus: Vec<f64> = sample_batch(20_000, 41, |r| sample_jacobi_conditional(&lx, 1, 2, r))
            .unwrap()
            .iter()
            .map(|s| lambda_to_tau(s.level(1).values())[0])
            .collect();
        let exp = Exp::new(2.5).unwrap();
        assert!(ks_test(&taus, |x| exp.cdf(x)).unwrap().p() > 0.01);
    }

    #[test]
    fn tau_transform_reverses_order() {
        let lam = [0.9, 0.5, 0.2];
        let tau = lambda_to_tau(&lam);
        assert!(tau.windows(2).all(|w| w[0] > w[1]));
        let back = tau_to_lambda(&tau);
        for (a, b) in lam.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn batches_are_deterministic_and_serialize() {
        let p = WishartParams::new(1, vec![1.0, 2.0], vec![0.5]).unwrap();
        let a = sample_batch(50, 7, |r| sample_wishart_multilevel(&p, 3, r)).unwrap();
        let b = sample_batch(50, 7, |r| sample_wishart_multilevel(&p, 3, r)).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("draw,level,index,value\n"));
        assert_eq!(text.lines().count(), 1 + 50 * (1 + 2 + 2));
        let mut buf = Vec::new();
        write_json_lines(&a[..2], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn validation() {
        assert!(WishartParams::new(3, vec![1.0], vec![]).is_err());
        assert!(WishartParams::new(1, vec![0.0], vec![]).is_err());
        assert!(JacobiParams::new(2, 2, 3, 1).is_err());
        assert!(sample_jacobi_conditional(
            &Spectrum::new(vec![1.0, 0.0]).unwrap(),
            1,
            2,
            &mut seeded(0)
        )
        .is_err());
    }
}
