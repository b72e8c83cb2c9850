//! Gelfand-Tsetlin patterns and integration over the GT polytope.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::sync::OnceLock;

use crate::error::{param, Error, Result};
use crate::linalg::interlaces;
use crate::quad::{GaussLegendre, LogSumExp, TanhSinh};
use crate::rng::substream;

pub const MAX_QUADRATURE_DIM: usize = 6;
pub const MAX_MONTE_CARLO_DIM: usize = 12;

/// Interlacing array `μ^1 ≺ ⋯ ≺ μ^m`, level `l` of length `min(l, n)`.
///
/// Besides the coordinates, every non-top entry keeps its distance to the
/// lower and upper end of its interlacing box. Quadrature fills these in
/// without cancellation, which keeps the `|μ^l_i - μ^{l+1}_j|^{θ-1}` factors
/// accurate next to the box edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GTPattern {
    n: usize,
    levels: Vec<Vec<f64>>,
    below: Vec<Vec<f64>>,
    above: Vec<Vec<f64>>,
}

pub fn level_len(l: usize, n: usize) -> usize {
    l.min(n)
}

/// Number of free coordinates below a top row at level `m`.
pub fn gt_dimension(n: usize, m: usize) -> usize {
    (1..m).map(|l| level_len(l, n)).sum()
}

impl GTPattern {
    /// Validates lengths and (weak) interlacing; gaps are computed by
    /// subtraction.
    pub fn from_levels(levels: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        let m = levels.len();
        for (idx, lev) in levels.iter().enumerate() {
            let l = idx + 1;
            if lev.len() != level_len(l, n) {
                return Err(Error::Validation(format!(
                    "level {l} has {} entries, expected {}",
                    lev.len(),
                    level_len(l, n)
                )));
            }
            if lev.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!(
                    "level {l} has a non-finite entry"
                )));
            }
        }
        for l in 1..m {
            if !interlaces(&levels[l - 1], &levels[l], false) {
                return Err(Error::Validation(format!(
                    "levels {l} and {} do not interlace",
                    l + 1
                )));
            }
        }
        let mut below = Vec::with_capacity(m);
        let mut above = Vec::with_capacity(m);
        for l in 1..m {
            let (cur, up) = (&levels[l - 1], &levels[l]);
            below.push(
                (0..cur.len())
                    .map(|i| cur[i] - up.get(i + 1).copied().unwrap_or(0.0))
                    .collect(),
            );
            above.push((0..cur.len()).map(|i| up[i] - cur[i]).collect());
        }
        Ok(Self {
            n,
            levels,
            below,
            above,
        })
    }

    fn skeleton(top: &[f64], n: usize, m: usize) -> Self {
        let mut levels: Vec<Vec<f64>> = (1..m).map(|l| vec![0.0; level_len(l, n)]).collect();
        levels.push(top.to_vec());
        let gaps: Vec<Vec<f64>> = (1..m).map(|l| vec![0.0; level_len(l, n)]).collect();
        Self {
            n,
            levels,
            below: gaps.clone(),
            above: gaps,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of levels.
    pub fn m(&self) -> usize {
        self.levels.len()
    }

    /// Level `l`, 1-based.
    pub fn level(&self, l: usize) -> &[f64] {
        &self.levels[l - 1]
    }

    pub fn levels(&self) -> &[Vec<f64>] {
        &self.levels
    }

    pub fn into_levels(self) -> Vec<Vec<f64>> {
        self.levels
    }

    /// `μ^l_i - μ^{l+1}_{i+1}` (or `μ^l_i` when the lower edge is 0), `l < m`.
    pub fn gap_below(&self, l: usize, i: usize) -> f64 {
        self.below[l - 1][i]
    }

    /// `μ^{l+1}_i - μ^l_i`, `l < m`.
    pub fn gap_above(&self, l: usize, i: usize) -> f64 {
        self.above[l - 1][i]
    }

    /// `|μ^l_i - μ^{l+1}_j|` using the stored gaps for the box edges.
    fn cross_diff(&self, l: usize, i: usize, j: usize) -> f64 {
        if j == i {
            self.gap_above(l, i)
        } else if j == i + 1 {
            self.gap_below(l, i)
        } else {
            (self.levels[l - 1][i] - self.levels[l][j]).abs()
        }
    }

    /// `μ^l_i - μ^l_j` for `i < j`.
    fn level_diff(&self, l: usize, i: usize, j: usize) -> f64 {
        if l < self.m() && j == i + 1 {
            self.gap_below(l, i) + self.gap_above(l, j)
        } else {
            self.levels[l - 1][i] - self.levels[l - 1][j]
        }
    }

    /// `log Δ(μ^l, μ^{l+1})`.
    pub fn log_cross_vdm(&self, l: usize) -> f64 {
        let (a, b) = (self.levels[l - 1].len(), self.levels[l].len());
        let mut s = 0.0;
        for i in 0..a {
            for j in 0..b {
                s += self.cross_diff(l, i, j).ln();
            }
        }
        s
    }

    /// `log Δ(e^{-μ^l}, e^{-μ^{l+1}})`.
    pub fn log_cross_vdm_exp(&self, l: usize) -> f64 {
        let (cur, up) = (&self.levels[l - 1], &self.levels[l]);
        let mut s = 0.0;
        for (i, &x) in cur.iter().enumerate() {
            for (j, &y) in up.iter().enumerate() {
                let d = self.cross_diff(l, i, j);
                s += -x.min(y) + (-(-d).exp_m1()).ln();
            }
        }
        s
    }

    /// `log Δ(μ^l)`.
    pub fn log_vdm(&self, l: usize) -> f64 {
        let k = self.levels[l - 1].len();
        let mut s = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                s += self.level_diff(l, i, j).ln();
            }
        }
        s
    }

    /// `log |Δ(e^{-μ^l})|`.
    pub fn log_vdm_exp(&self, l: usize) -> f64 {
        let lev = &self.levels[l - 1];
        let mut s = 0.0;
        for i in 0..lev.len() {
            for j in i + 1..lev.len() {
                let d = self.level_diff(l, i, j);
                s += -lev[i].min(lev[j]) + (-(-d).exp_m1()).ln();
            }
        }
        s
    }

    /// `|μ^l|`.
    pub fn level_sum(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.levels[l - 1].iter().sum()
        }
    }
}

/// `log Δ(λ) = Σ_{i<j} log |λ_i - λ_j|`.
pub fn log_vandermonde(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            s += (x[i] - x[j]).abs().ln();
        }
    }
    s
}

/// `log Δ(μ, λ) = Σ_{i,j} log |μ_i - λ_j|`.
pub fn log_cross_vandermonde(mu: &[f64], lambda: &[f64]) -> f64 {
    mu.iter()
        .flat_map(|&a| lambda.iter().map(move |&b| (a - b).abs().ln()))
        .sum()
}

/// `log Δ^trig(λ) = Σ_{i<j} log (2 sinh((λ_i - λ_j)/2))`.
pub fn log_vandermonde_trig(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[i] - x[j]).abs();
            // 2 sinh(d/2) = e^{d/2} (1 - e^{-d})
            s += 0.5 * d + (-(-d).exp_m1()).ln();
        }
    }
    s
}

/// `log |Δ(e^{-λ})|`.
pub fn log_vandermonde_exp(x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let d = (x[i] - x[j]).abs();
            s += -x[i].min(x[j]) + (-(-d).exp_m1()).ln();
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum QuadScheme {
    TensorGauss { order: usize },
    DoubleExponential { level: u32 },
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub scheme: QuadScheme,
    /// Relative tolerance on the error estimate.
    pub tolerance: f64,
}

impl QuadSpec {
    pub fn double_exponential(level: u32, tolerance: f64) -> Self {
        Self {
            scheme: QuadScheme::DoubleExponential { level },
            tolerance,
        }
    }

    pub fn gauss(order: usize, tolerance: f64) -> Self {
        Self {
            scheme: QuadScheme::TensorGauss { order },
            tolerance,
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64, tolerance: f64) -> Self {
        Self {
            scheme: QuadScheme::MonteCarlo { samples, seed },
            tolerance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return param("quadrature tolerance must be positive");
        }
        match self.scheme {
            QuadScheme::TensorGauss { order } if order == 0 => {
                param("Gauss order must be positive")
            }
            QuadScheme::DoubleExponential { level } if level == 0 || level > 10 => {
                param("double-exponential level must lie in 1..=10")
            }
            QuadScheme::MonteCarlo { samples, .. } if samples < 2 => {
                param("Monte Carlo needs at least 2 samples")
            }
            _ => Ok(()),
        }
    }
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self::double_exponential(4, 1e-8)
    }
}

/// Integral estimate in log form with a relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub log_value: f64,
    pub rel_error: f64,
}

impl Estimate {
    pub fn exact(log_value: f64) -> Self {
        Self {
            log_value,
            rel_error: 0.0,
        }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn abs_error(&self) -> f64 {
        self.rel_error * self.value()
    }

    /// Errors out when the estimate misses `tolerance`.
    pub fn within(self, tolerance: f64) -> Result<Self> {
        if self.rel_error.is_nan() || self.log_value.is_nan() {
            return Err(Error::NaN);
        }
        if self.rel_error > tolerance {
            return Err(Error::NonConvergence {
                estimate: self.rel_error,
                tolerance,
            });
        }
        Ok(self)
    }
}

/// A one-dimensional rule on `[-1, 1]` as `(1 + x, 1 - x, log w)`.
type Rule = Vec<(f64, f64, f64)>;

const CACHED_LEVELS: usize = 12;
const CACHED_ORDERS: usize = 64;

fn tanh_sinh_rule(level: u32) -> Cow<'static, Rule> {
    static CACHE: [OnceLock<Rule>; CACHED_LEVELS] = [const { OnceLock::new() }; CACHED_LEVELS];
    let build = || -> Rule {
        TanhSinh::new(level)
            .mapped(-1.0, 1.0)
            .filter(|nd| nd.weight > 0.0)
            .map(|nd| (nd.below, nd.above, nd.weight.ln()))
            .collect()
    };
    match CACHE.get(level as usize) {
        Some(cell) => Cow::Borrowed(cell.get_or_init(build)),
        None => Cow::Owned(build()),
    }
}

fn gauss_rule(order: usize) -> Cow<'static, Rule> {
    static CACHE: [OnceLock<Rule>; CACHED_ORDERS] = [const { OnceLock::new() }; CACHED_ORDERS];
    let build = || -> Rule {
        GaussLegendre::new(order)
            .nodes(-1.0, 1.0)
            .map(|(x, w)| (1.0 + x, 1.0 - x, w.ln()))
            .collect()
    };
    match CACHE.get(order) {
        Some(cell) => Cow::Borrowed(cell.get_or_init(build)),
        None => Cow::Owned(build()),
    }
}

/// Integrates `exp(log_weight(μ))` over the GT polytope below `top`.
///
/// `top` is level `m` (length `min(m, n)`), strictly decreasing and, when
/// `m > n`, positive. `log_weight` returns a natural log; `-∞` is allowed.
pub fn gt_integrate<F>(
    log_weight: F,
    top: &[f64],
    n: usize,
    m: usize,
    quad: &QuadSpec,
) -> Result<Estimate>
where
    F: Fn(&GTPattern) -> f64 + Sync,
{
    quad.validate()?;
    if m == 0 || top.len() != level_len(m, n) {
        return param(format!(
            "top row of level {m} must have {} entries",
            level_len(m, n)
        ));
    }
    if top.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Validation(
            "top row must be strictly decreasing".into(),
        ));
    }
    if m > n && top.last().is_some_and(|&v| !(v > 0.0)) {
        return Err(Error::Validation(
            "top row must be positive once levels saturate".into(),
        ));
    }
    let dim = gt_dimension(n, m);
    let skeleton = GTPattern::skeleton(top, n, m);
    if dim == 0 {
        let v = log_weight(&skeleton);
        if v.is_nan() {
            return Err(Error::NaN);
        }
        return Ok(Estimate::exact(v));
    }
    let coords: Vec<(usize, usize)> = (1..m)
        .rev()
        .flat_map(|l| (0..level_len(l, n)).map(move |i| (l, i)))
        .collect();
    match quad.scheme {
        QuadScheme::DoubleExponential { level } => {
            if dim > MAX_QUADRATURE_DIM {
                return Err(Error::DimensionTooLarge {
                    dim,
                    limit: MAX_QUADRATURE_DIM,
                });
            }
            let fine = tensor(&log_weight, &skeleton, &coords, &tanh_sinh_rule(level))?;
            let coarse = tensor(&log_weight, &skeleton, &coords, &tanh_sinh_rule(level - 1))?;
            Ok(Estimate {
                log_value: fine,
                rel_error: rel_diff(fine, coarse),
            })
        }
        QuadScheme::TensorGauss { order } => {
            if dim > MAX_QUADRATURE_DIM {
                return Err(Error::DimensionTooLarge {
                    dim,
                    limit: MAX_QUADRATURE_DIM,
                });
            }
            let fine = tensor(&log_weight, &skeleton, &coords, &gauss_rule(order))?;
            let coarse = tensor(
                &log_weight,
                &skeleton,
                &coords,
                &gauss_rule((order / 2).max(1)),
            )?;
            Ok(Estimate {
                log_value: fine,
                rel_error: rel_diff(fine, coarse),
            })
        }
        QuadScheme::MonteCarlo { samples, seed } => {
            if dim > MAX_MONTE_CARLO_DIM {
                return Err(Error::DimensionTooLarge {
                    dim,
                    limit: MAX_MONTE_CARLO_DIM,
                });
            }
            monte_carlo(&log_weight, &skeleton, &coords, samples, seed)
        }
    }
}

fn rel_diff(fine: f64, coarse: f64) -> f64 {
    if fine == coarse {
        0.0
    } else if fine == f64::NEG_INFINITY || coarse == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (coarse - fine).exp_m1().abs()
    }
}

fn set_coord(p: &mut GTPattern, (l, i): (usize, usize), lo: f64, hi: f64, below: f64, above: f64) {
    p.levels[l - 1][i] = if below <= above {
        lo + below
    } else {
        hi - above
    };
    p.below[l - 1][i] = below;
    p.above[l - 1][i] = above;
}

fn bounds(p: &GTPattern, (l, i): (usize, usize)) -> (f64, f64) {
    let up = &p.levels[l];
    (up.get(i + 1).copied().unwrap_or(0.0), up[i])
}

fn tensor<F>(f: &F, skeleton: &GTPattern, coords: &[(usize, usize)], rule: &Rule) -> Result<f64>
where
    F: Fn(&GTPattern) -> f64 + Sync,
{
    let (lo, hi) = bounds(skeleton, coords[0]);
    let half = 0.5 * (hi - lo);
    let ln_half = half.ln();
    if coords.len() == 1 {
        let mut pat = skeleton.clone();
        return nest(f, &mut pat, coords, 0, rule);
    }
    // outer coordinate in parallel; partial sums merged in node order
    let parts: Vec<Result<LogSumExp>> = rule
        .par_iter()
        .map(|&(p, q, lw)| {
            let mut pat = skeleton.clone();
            set_coord(&mut pat, coords[0], lo, hi, half * p, half * q);
            let inner = nest(f, &mut pat, coords, 1, rule)?;
            let mut acc = LogSumExp::new();
            acc.add(lw + ln_half + inner);
            Ok(acc)
        })
        .collect();
    let mut total = LogSumExp::new();
    for part in parts {
        total.merge(&part?);
    }
    Ok(total.value())
}

fn nest<F>(
    f: &F,
    pat: &mut GTPattern,
    coords: &[(usize, usize)],
    depth: usize,
    rule: &Rule,
) -> Result<f64>
where
    F: Fn(&GTPattern) -> f64,
{
    if depth == coords.len() {
        let v = f(pat);
        if v.is_nan() {
            return Err(Error::NaN);
        }
        return Ok(v);
    }
    let c = coords[depth];
    let (lo, hi) = bounds(pat, c);
    let half = 0.5 * (hi - lo);
    if !(half > 0.0) {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_half = half.ln();
    let mut acc = LogSumExp::new();
    for &(p, q, lw) in rule {
        set_coord(pat, c, lo, hi, half * p, half * q);
        let inner = nest(f, pat, coords, depth + 1, rule)?;
        acc.add(lw + ln_half + inner);
    }
    Ok(acc.value())
}

fn monte_carlo<F>(
    f: &F,
    skeleton: &GTPattern,
    coords: &[(usize, usize)],
    samples: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: Fn(&GTPattern) -> f64 + Sync,
{
    let logs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let mut pat = skeleton.clone();
            let mut log_w = 0.0;
            for &c in coords {
                let (lo, hi) = bounds(&pat, c);
                let width = hi - lo;
                let u: f64 = rng.random();
                set_coord(&mut pat, c, lo, hi, width * u, width * (1.0 - u));
                log_w += width.ln();
            }
            f(&pat) + log_w
        })
        .collect();
    if logs.iter().any(|v| v.is_nan()) {
        return Err(Error::NaN);
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(Estimate {
            log_value: max,
            rel_error: 0.0,
        });
    }
    let nf = samples as f64;
    let scaled: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / nf;
    let var = scaled.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(Estimate {
        log_value: max + mean.ln(),
        rel_error: (var / nf).sqrt() / mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vandermonde_family() {
        assert_eq!(log_vandermonde(&[2.5]), 0.0);
        assert_relative_eq!(
            log_vandermonde(&[3.0, 1.0]).exp(),
            2.0,
            max_relative = 1e-15
        );
        let x = [2.0, 0.7, 0.1];
        let n = x.len() as f64;
        let total: f64 = x.iter().sum();
        let rhs = 0.5 * (n - 1.0) * total + log_vandermonde_exp(&x);
        assert_relative_eq!(log_vandermonde_trig(&x), rhs, max_relative = 1e-12);
        assert_eq!(log_vandermonde(&[1.0, 1.0]), f64::NEG_INFINITY);
        assert_relative_eq!(
            log_cross_vandermonde(&[1.0], &[3.0, 0.5]).exp(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn trivial_volumes() {
        let de = QuadSpec::double_exponential(4, 1e-10);
        let e = gt_integrate(|_| 0.0, &[1.7], 1, 1, &de).unwrap();
        assert_eq!(e.log_value, 0.0);
        let e = gt_integrate(|_| 0.0, &[1.7], 1, 2, &de).unwrap();
        assert_relative_eq!(e.value(), 1.7, max_relative = 1e-13);
        let e = gt_integrate(|_| 0.0, &[2.5, 0.4], 2, 2, &de).unwrap();
        assert_relative_eq!(e.value(), 2.1, max_relative = 1e-13);
        // volume of GT_(a,b,c) is Δ(a,b,c)/2
        let top = [3.0, 1.2, 0.5];
        let e = gt_integrate(|_| 0.0, &top, 3, 3, &de).unwrap();
        assert_relative_eq!(
            e.value(),
            log_vandermonde(&top).exp() / 2.0,
            max_relative = 1e-12
        );
        let g = gt_integrate(|_| 0.0, &top, 3, 3, &QuadSpec::gauss(6, 1e-10)).unwrap();
        assert_relative_eq!(
            g.value(),
            log_vandermonde(&top).exp() / 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn monte_carlo_volume() {
        let top = [3.0, 1.2, 0.5];
        let e = gt_integrate(|_| 0.0, &top, 3, 3, &QuadSpec::monte_carlo(20_000, 3, 0.1)).unwrap();
        let exact = log_vandermonde(&top).exp() / 2.0;
        assert!((e.value() - exact).abs() < 4.0 * e.abs_error());
    }

    #[test]
    fn endpoint_gaps_are_consistent() {
        let top = [2.0, 1.0];
        let de = QuadSpec::double_exponential(3, 1e-6);
        let _ = gt_integrate(
            |p| {
                let v = p.level(1)[0];
                assert!((p.gap_below(1, 0) - (v - 1.0)).abs() <= 1e-15);
                assert!((p.gap_above(1, 0) - (2.0 - v)).abs() <= 1e-15);
                0.0
            },
            &top,
            2,
            2,
            &de,
        )
        .unwrap();
    }

    #[test]
    fn validation() {
        let de = QuadSpec::default();
        assert!(gt_integrate(|_| 0.0, &[1.0, 2.0], 2, 2, &de).is_err());
        assert!(gt_integrate(|_| f64::NAN, &[1.0, 0.5], 2, 2, &de).is_err());
        assert!(matches!(
            gt_integrate(|_| 0.0, &[4.0, 3.0, 2.0, 1.0], 4, 5, &de),
            Err(Error::DimensionTooLarge { .. })
        ));
        assert!(GTPattern::from_levels(vec![vec![3.0], vec![2.0, 1.0]], 2).is_err());
        assert!(GTPattern::from_levels(vec![vec![1.5], vec![2.0, 1.0]], 2).is_ok());
    }
}
