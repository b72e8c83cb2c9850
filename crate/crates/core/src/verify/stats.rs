//! Goodness-of-fit statistics.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::TestReport;
use crate::error::{Error, Result};
use crate::quad::tanh_sinh;

pub const MIN_SAMPLES: usize = 100;
pub const MIN_EXPECTED_PER_BIN: f64 = 5.0;
pub const SIGNIFICANCE: f64 = 0.01;
pub const MOMENT_SIGMAS: f64 = 4.0;

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} < {MIN_SAMPLES} samples",
            samples.len()
        )));
    }
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::NaN);
    }
    if samples.iter().all(|&v| v == samples[0]) {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    Ok(())
}

/// Kolmogorov survival function `Q(x) = 2 Σ_{k≥1} (-1)^{k-1} e^{-2k²x²}`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample KS distance and its asymptotic p-value (Stephens' small-sample
/// correction).
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let fs: Vec<f64> = xs.iter().map(|&x| cdf(x)).collect();
    ks_from_sorted_cdf(&fs)
}

/// KS distance and p-value from the model CDF at the sorted samples.
pub fn ks_from_sorted_cdf(fs: &[f64]) -> (f64, f64) {
    let n = fs.len() as f64;
    let mut d = 0.0f64;
    for (i, &f) in fs.iter().enumerate() {
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sn = n.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

pub fn ks_test(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<TestReport> {
    check_samples(samples)?;
    let (d, p) = ks_statistic(samples, cdf);
    Ok(TestReport::p_value_test(
        "ks",
        "ks-distance",
        d,
        p,
        SIGNIFICANCE,
        samples.len(),
    ))
}

/// Pearson chi-square over bins of expected counts, merging neighbouring bins
/// until each expects at least 5. Returns `(statistic, degrees of freedom)`.
pub fn chi2_from_counts(observed: &[f64], expected: &[f64], fitted: usize) -> Result<(f64, usize)> {
    if observed.len() != expected.len() {
        return Err(Error::Validation(
            "observed and expected bins differ in number".into(),
        ));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= MIN_EXPECTED_PER_BIN {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    if merged.len() < 2 + fitted {
        return Err(Error::InsufficientSamples(format!(
            "only {} chi-square bins after merging",
            merged.len()
        )));
    }
    let stat = merged.iter().map(|&(o, e)| (o - e).powi(2) / e).sum();
    Ok((stat, merged.len() - 1 - fitted))
}

pub fn chi2_sf(stat: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64)
        .map(|c| c.sf(stat))
        .unwrap_or(f64::NAN)
}

/// Chi-square test of `samples` against an (unnormalized) density on the
/// bins given by `edges`; the density is normalized over `[edges₀, edges_k]`.
pub fn chi2_binned(
    samples: &[f64],
    density: impl Fn(f64) -> f64,
    edges: &[f64],
) -> Result<TestReport> {
    check_samples(samples)?;
    if edges.len() < 3 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Validation(
            "bin edges must be increasing with at least 2 bins".into(),
        ));
    }
    let mut probs = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (v, _) = tanh_sinh(w[0], w[1], 1e-10, |x, _, _| density(x))?;
        probs.push(v);
    }
    let total: f64 = probs.iter().sum();
    let mut counts = vec![0.0; probs.len()];
    for &x in samples {
        if x < edges[0] || x > edges[edges.len() - 1] {
            return Err(Error::Validation(format!(
                "sample {x} outside the binned range"
            )));
        }
        let idx = edges
            .partition_point(|&e| e <= x)
            .saturating_sub(1)
            .min(probs.len() - 1);
        counts[idx] += 1.0;
    }
    let n = samples.len() as f64;
    let expected: Vec<f64> = probs.iter().map(|p| n * p / total).collect();
    let (stat, dof) = chi2_from_counts(&counts, &expected, 0)?;
    Ok(TestReport::p_value_test(
        "chi2",
        "chi-square",
        stat,
        chi2_sf(stat, dof),
        SIGNIFICANCE,
        samples.len(),
    ))
}

/// Sample mean and standard error of `g` over `samples`.
pub fn mean_and_se<T>(samples: &[T], g: impl Fn(&T) -> f64) -> (f64, f64) {
    let vals: Vec<f64> = samples.iter().map(g).collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `z = (mean g - reference) / sqrt(σ²_MC + reference_sigma²)`; passes at
/// `|z| ≤ 4`.
pub fn moment_compare<T>(
    samples: &[T],
    g: impl Fn(&T) -> f64,
    reference: f64,
    reference_sigma: f64,
) -> Result<TestReport> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} < {MIN_SAMPLES} samples",
            samples.len()
        )));
    }
    let (mean, se) = mean_and_se(samples, g);
    let sigma = (se * se + reference_sigma * reference_sigma).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::Degenerate(
            "moment has zero Monte Carlo variance".into(),
        ));
    }
    let z = (mean - reference) / sigma;
    let mut r =
        TestReport::tolerance_test("moment", "z-score", z.abs(), MOMENT_SIGMAS, samples.len());
    r.detail = format!("sample mean {mean:.6e}, reference {reference:.6e}, sigma {sigma:.3e}");
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng as _;
    use rand_distr::{Distribution, Exp};

    #[test]
    fn kolmogorov_tail_values() {
        // Q(1.36) ≈ 0.0495, Q(1.63) ≈ 0.0098
        assert!((kolmogorov_sf(1.36) - 0.0495).abs() < 5e-4);
        assert!((kolmogorov_sf(1.63) - 0.0098).abs() < 2e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_null_is_calibrated() {
        let mut ps = Vec::new();
        for trial in 0..300 {
            let mut rng = substream(99, trial);
            let xs: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
            ps.push(ks_test(&xs, |x| x.clamp(0.0, 1.0)).unwrap().p());
        }
        // p-values of a calibrated test are themselves uniform
        let meta = ks_test(&ps, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(meta.p() > 0.001, "{}", meta.p());
    }

    #[test]
    fn ks_power_and_null_for_exponentials() {
        let mut rng = substream(5, 0);
        let e = Exp::new(2.0).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| e.sample(&mut rng)).collect();
        assert!(ks_test(&xs, |x| 1.0 - (-2.0 * x).exp()).unwrap().p() > 0.01);
        assert!(ks_test(&xs, |x| 1.0 - (-x).exp()).unwrap().p() < 1e-6);
    }

    #[test]
    fn degenerate_and_short_samples() {
        assert!(matches!(
            ks_test(&[1.0; 200], |x| x),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            ks_test(&[0.5; 10], |x| x),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn chi2_bins_merge_and_detect() {
        let mut rng = substream(8, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>().sqrt()).collect();
        let edges: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
        assert!(chi2_binned(&xs, |x| 2.0 * x, &edges).unwrap().p() > 0.01);
        assert!(chi2_binned(&xs, |_| 1.0, &edges).unwrap().p() < 1e-6);
        let (_, dof) = chi2_from_counts(&[1.0, 1.0, 1.0, 10.0], &[1.0, 2.0, 3.0, 7.0], 0).unwrap();
        assert_eq!(dof, 1);
    }

    #[test]
    fn moment_z_scores() {
        let mut rng = substream(3, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        assert!(moment_compare(&xs, |&x| x, 0.5, 0.0).unwrap().passed);
        assert!(!moment_compare(&xs, |&x| x, 0.6, 0.0).unwrap().passed);
    }
}
