//! Sampler-versus-density checks for the Wishart transition kernels and the
//! Jacobi corner densities.

use std::f64::consts::PI;
use std::time::Instant;

use super::stats::{
    chi2_from_counts, chi2_sf, ks_from_sorted_cdf, ks_statistic, mean_and_se, MOMENT_SIGMAS,
    SIGNIFICANCE,
};
use super::TestReport;
use crate::densities::{
    log_kernel_wishart, log_kernel_wishart_standard, logdens_jacobi, logdens_jacobi_as_printed,
    logdens_mvb_joint, LogValue, WishartKernel,
};
use crate::ensembles::{
    sample_batch, sample_jacobi_multilevel, sample_wishart_multilevel, JacobiParams,
    MultilevelSample, WishartParams,
};
use crate::error::{param, Error, Result};
use crate::hyperfun::{HciZRoute, QuadSpec};
use crate::linalg::Spectrum;
use crate::quad::{log_box_integral, log_box_integrals, tanh_sinh, LogSumExp};
use crate::rng::derive_seed;

const CONDITIONING_BINS: usize = 8;
const CHEB_NODES: usize = 12;
const PILOT_SAMPLES: usize = 10_000;
const MARKOV_SAMPLES: usize = 10_000;
const MARKOV_Z: f64 = 3.0;
const CELL_LEVEL: u32 = 3;
const PIT_LEVEL: u32 = 4;

/// HCIZ route used inside the kernels: GT integration over `π`.
pub fn kernel_route(beta: u32) -> HciZRoute {
    let tol = if beta == 2 { 1e-8 } else { 1e-6 };
    HciZRoute::Bessel(QuadSpec::double_exponential(4, tol))
}

fn spectrum(v: &[f64]) -> Option<Spectrum> {
    Spectrum::from_sorted(v.to_vec()).ok()
}

/// Log kernel at `next`; `-∞` off the support, NaN when the HCIZ evaluation
/// fails.
fn kernel_at(kernel: &WishartKernel, next: &[f64]) -> f64 {
    match spectrum(next).map(|s| kernel.log_at(&s)) {
        Some(Ok(v)) => v.ln(),
        Some(Err(_)) => f64::NAN,
        None => f64::NEG_INFINITY,
    }
}

fn sum_ln(x: &[f64]) -> f64 {
    x.iter().map(|v| v.ln()).sum()
}

/// Exponential scale of the kernel's decay in the top coordinate.
fn tail_for(p: &WishartParams, m: usize) -> f64 {
    let rate = p.theta() * (p.pi.iter().copied().fold(f64::INFINITY, f64::min) + p.pi_hat_at(m));
    60.0 / rate
}

fn quantiles(mut xs: Vec<f64>, k: usize) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    (1..k).map(|j| xs[(j * xs.len()) / k]).collect()
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Chebyshev points of the first kind on `[a, b]` and barycentric weights.
fn cheb_points(a: f64, b: f64, k: usize) -> (Vec<f64>, Vec<f64>) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut xs = Vec::with_capacity(k);
    let mut ws = Vec::with_capacity(k);
    for j in 0..k {
        let ang = PI * (j as f64 + 0.5) / k as f64;
        xs.push(mid + half * ang.cos());
        ws.push(if j % 2 == 0 { ang.sin() } else { -ang.sin() });
    }
    (xs, ws)
}

fn cheb_eval(xs: &[f64], ws: &[f64], fs: &[f64], x: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((&xj, &wj), &fj) in xs.iter().zip(ws).zip(fs) {
        let d = x - xj;
        if d == 0.0 {
            return fj;
        }
        num += wj / d * fj;
        den += wj / d;
    }
    num / den
}

/// Cells for `μ^m` given a one-entry `μ^{m-1} = x`: the top coordinate by
/// `u = μ^m_1 - x`, the second (if any) by `v = μ^m_2 / x`.
#[derive(Debug, Clone)]
struct CellGrid {
    u_edges: Vec<f64>,
    v_edges: Vec<f64>,
}

impl CellGrid {
    fn from_pilot(points: &[(f64, Vec<f64>)]) -> Self {
        let two = points.first().is_some_and(|(_, y)| y.len() == 2);
        let per_axis = if two { 4 } else { 8 };
        let us: Vec<f64> = points.iter().map(|(x, y)| y[0] - x).collect();
        let mut u_edges = vec![0.0];
        u_edges.extend(quantiles(us, per_axis));
        u_edges.push(f64::INFINITY);
        let v_edges = if two {
            let vs: Vec<f64> = points.iter().map(|(x, y)| y[1] / x).collect();
            let mut e = vec![0.0];
            e.extend(quantiles(vs, per_axis));
            e.push(1.0);
            e
        } else {
            vec![]
        };
        Self { u_edges, v_edges }
    }

    fn len(&self) -> usize {
        (self.u_edges.len() - 1) * self.v_edges.len().saturating_sub(1).max(1)
    }

    fn index(&self, x: f64, y: &[f64]) -> usize {
        let nu = self.u_edges.len() - 1;
        let iu = (bin_of(&self.u_edges, y[0] - x) - 1).min(nu - 1);
        if self.v_edges.is_empty() {
            return iu;
        }
        let nv = self.v_edges.len() - 1;
        let iv = (bin_of(&self.v_edges, y[1] / x) - 1).min(nv - 1);
        iu * nv + iv
    }

    fn bounds(&self, x: f64, cell: usize) -> Vec<(f64, f64)> {
        let nv = self.v_edges.len().saturating_sub(1).max(1);
        let (iu, iv) = (cell / nv, cell % nv);
        let mut b = vec![(x + self.u_edges[iu], x + self.u_edges[iu + 1])];
        if !self.v_edges.is_empty() {
            b.push((x * self.v_edges[iv], x * self.v_edges[iv + 1]));
        }
        b
    }
}

/// Normalized cell probabilities of `μ^m | μ^{m-1} = (x)` for the kernel as
/// stated and with the `β = 1` indicator read the other way. Also returns
/// the log total mass of the stated kernel.
fn cell_probabilities(
    x: f64,
    grid: &CellGrid,
    m: usize,
    p: &WishartParams,
    route: &HciZRoute,
    level: u32,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let prev = Spectrum::from_sorted(vec![x])?;
    let tail = tail_for(p, m);
    let alt_shift = alternative_shift(p, m);
    let kernel = WishartKernel::new(&prev, m, p, route)?;
    let mut stated = Vec::with_capacity(grid.len());
    let mut other = Vec::with_capacity(grid.len());
    for cell in 0..grid.len() {
        let b = grid.bounds(x, cell);
        let v = log_box_integrals(&b, level, tail, 2, |y, out| {
            let k = kernel_at(&kernel, y);
            out[0] = k;
            out[1] = k + alt_shift * (sum_ln(y) - x.ln());
        });
        stated.push(v[0]);
        other.push(v[1]);
    }
    let norm = |v: &[f64]| -> Result<(Vec<f64>, f64)> {
        let mut acc = LogSumExp::new();
        v.iter().for_each(|&l| acc.add(l));
        let total = acc.value();
        if !total.is_finite() || v.iter().any(|l| l.is_nan()) {
            return Err(Error::Degenerate(format!(
                "kernel cell mass not finite at μ^{} = {x}",
                m - 1
            )));
        }
        Ok((v.iter().map(|l| (l - total).exp()).collect(), total))
    };
    let (ps, total) = norm(&stated)?;
    let (alt, _) = norm(&other)?;
    Ok((ps, alt, total))
}

/// Exponent change of `Σ log μ^m - Σ log μ^{m-1}` when the `β = 1` indicator
/// `1_{m ≤ n}` is flipped.
fn alternative_shift(p: &WishartParams, m: usize) -> f64 {
    if p.beta != 1 {
        0.0
    } else if m <= p.n() {
        0.5
    } else {
        -0.5
    }
}

/// Chi-square of `μ^m | μ^{m-1}` when `μ^{m-1}` has one entry. Returns
/// statistic and dof for the stated kernel, then for the flipped indicator,
/// then a diagnostic line.
fn conditional_chi2(
    draws: &[MultilevelSample],
    pilot: &[MultilevelSample],
    m: usize,
    p: &WishartParams,
    route: &HciZRoute,
) -> Result<(f64, usize, f64, usize, String)> {
    let pair = |s: &MultilevelSample| (s.level(m - 1).values()[0], s.level(m).values().to_vec());
    let pilot_pts: Vec<(f64, Vec<f64>)> = pilot.iter().map(pair).collect();
    let x_edges = quantiles(
        pilot_pts.iter().map(|(x, _)| *x).collect(),
        CONDITIONING_BINS,
    );
    let mut per_bin_pilot: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); CONDITIONING_BINS];
    for pt in pilot_pts {
        per_bin_pilot[bin_of(&x_edges, pt.0)].push(pt);
    }
    let mut per_bin: Vec<Vec<(f64, Vec<f64>)>> = vec![Vec::new(); CONDITIONING_BINS];
    for s in draws {
        let pt = pair(s);
        per_bin[bin_of(&x_edges, pt.0)].push(pt);
    }
    let (mut stat, mut dof, mut alt_stat, mut alt_dof) = (0.0, 0usize, 0.0, 0usize);
    let mut interp_err = 0.0f64;
    let mut level_err = 0.0f64;
    let (mut mass_lo, mut mass_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (b, pts) in per_bin.iter().enumerate() {
        if pts.len() < 50 || per_bin_pilot[b].len() < 50 {
            return Err(Error::InsufficientSamples(format!(
                "conditioning bin {b} has {} draws",
                pts.len()
            )));
        }
        let grid = CellGrid::from_pilot(&per_bin_pilot[b]);
        let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).ln();
        let hi = pts
            .iter()
            .map(|p| p.0)
            .fold(f64::NEG_INFINITY, f64::max)
            .ln();
        let (ts, ws) = cheb_points(lo, hi, CHEB_NODES);
        let mut tables = Vec::with_capacity(CHEB_NODES);
        for &t in &ts {
            let (ps, alt, total) = cell_probabilities(t.exp(), &grid, m, p, route, CELL_LEVEL)?;
            mass_lo = mass_lo.min(total);
            mass_hi = mass_hi.max(total);
            tables.push((ps, alt));
        }
        let interp = |t: f64, which: usize, cell: usize| {
            let fs: Vec<f64> = tables
                .iter()
                .map(|(a, b)| if which == 0 { a[cell] } else { b[cell] })
                .collect();
            cheb_eval(&ts, &ws, &fs, t)
        };
        // accuracy of the interpolant and of the cell quadrature at the bin centre
        let tm = 0.5 * (lo + hi);
        let (exact, _, _) = cell_probabilities(tm.exp(), &grid, m, p, route, CELL_LEVEL)?;
        let (finer, _, _) = cell_probabilities(tm.exp(), &grid, m, p, route, CELL_LEVEL + 1)?;
        for c in 0..grid.len() {
            interp_err = interp_err.max((interp(tm, 0, c) - exact[c]).abs());
            level_err = level_err.max((finer[c] - exact[c]).abs());
        }
        let mut observed = vec![0.0; grid.len()];
        let mut expected = vec![0.0; grid.len()];
        let mut expected_alt = vec![0.0; grid.len()];
        for (x, y) in pts {
            observed[grid.index(*x, y)] += 1.0;
            let t = x.ln();
            for c in 0..grid.len() {
                expected[c] += interp(t, 0, c);
                expected_alt[c] += interp(t, 1, c);
            }
        }
        let (s, d) = chi2_from_counts(&observed, &expected, 0)?;
        stat += s;
        dof += d;
        let (s, d) = chi2_from_counts(&observed, &expected_alt, 0)?;
        alt_stat += s;
        alt_dof += d;
    }
    let detail = format!(
        "{CONDITIONING_BINS} conditioning bins; interpolation error {interp_err:.1e}, cell quadrature change {level_err:.1e}; log kernel mass in [{mass_lo:.4}, {mass_hi:.4}]"
    );
    Ok((stat, dof, alt_stat, alt_dof, detail))
}

/// Conditional CDF of `μ^m_1` given `μ^{m-1}` and the other entries of `μ^m`.
fn top_pit(s: &MultilevelSample, m: usize, p: &WishartParams, route: &HciZRoute) -> Result<f64> {
    let prev = s.level(m - 1).clone();
    let next = s.level(m).values().to_vec();
    let lo = prev.values()[0];
    let y = next[0];
    let tail = tail_for(p, m);
    let kernel = WishartKernel::new(&prev, m, p, route)?;
    let f = |z: &[f64]| {
        let mut v = next.clone();
        v[0] = z[0];
        kernel_at(&kernel, &v)
    };
    let below = log_box_integrals(&[(lo, y)], PIT_LEVEL, tail, 1, |z, out| out[0] = f(z))[0];
    let above = log_box_integrals(&[(y, f64::INFINITY)], PIT_LEVEL, tail, 1, |z, out| {
        out[0] = f(z)
    })[0];
    if below.is_nan() || above.is_nan() {
        return Err(Error::NaN);
    }
    Ok(1.0 / (1.0 + (above - below).exp()))
}

/// Relative position of `μ^{m-2}_1` inside its interlacing interval.
fn position(s: &MultilevelSample, m: usize) -> f64 {
    let x = s.level(m - 2).values()[0];
    let up = s.level(m - 1).values();
    let (hi, lo) = (up[0], up.get(1).copied().unwrap_or(0.0));
    (x - lo) / (hi - lo)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

/// Checks the transition kernel `μ^{m-1} → μ^m` of the generalized Wishart
/// chain against the sampler.
///
/// With a one-entry `μ^{m-1}` the law of `μ^m` is compared by a chi-square
/// over quantile bins of `μ^{m-1}`; otherwise the conditional CDF of `μ^m_1`
/// is tested for uniformity. The Markov property is spot-checked at level 3:
/// the conditional CDF of `μ^3_1` must be uncorrelated with the position of
/// `μ^1_1` inside its interval (`|z| ≤ 3`).
pub fn check_theorem_kernel(
    p: &WishartParams,
    m: usize,
    sample_count: usize,
    seed: u64,
) -> Result<TestReport> {
    let start = Instant::now();
    p.validate()?;
    let n = p.n();
    if !(2..=3).contains(&m) || n > 3 {
        return param("kernel checks need 2 ≤ m ≤ 3 and n ≤ 3");
    }
    let route = kernel_route(p.beta);
    let depth = m.max(3);
    let draw = |rng: &mut crate::rng::Rng| sample_wishart_multilevel(p, depth, rng);
    let draws = sample_batch(sample_count, seed, draw)?;
    let mut parts = Vec::new();
    let mut passed = true;
    let mut primary = (f64::NAN, f64::NAN);
    let one_entry = (m - 1).min(n) == 1;
    if one_entry {
        let pilot = sample_batch(PILOT_SAMPLES, derive_seed(seed, "kernel-pilot"), draw)?;
        let (stat, dof, alt_stat, alt_dof, info) = conditional_chi2(&draws, &pilot, m, p, &route)?;
        let pv = chi2_sf(stat, dof);
        passed &= pv > SIGNIFICANCE;
        primary = (stat, pv);
        parts.push(format!(
            "chi-square {stat:.2} on {dof} dof, p = {pv:.4}; {info}"
        ));
        if p.beta == 1 {
            parts.push(format!(
                "indicator read the other way: chi-square {alt_stat:.2} on {alt_dof} dof, p = {:.3e}",
                chi2_sf(alt_stat, alt_dof)
            ));
        }
    }
    let markov_n = MARKOV_SAMPLES.min(sample_count);
    let pits = draws[..markov_n]
        .iter()
        .map(|s| top_pit(s, 3, p, &route))
        .collect::<Result<Vec<f64>>>()?;
    let pos: Vec<f64> = draws[..markov_n].iter().map(|s| position(s, 3)).collect();
    let z = correlation(&pits, &pos).abs() * (markov_n as f64).sqrt();
    let (d, ks_p) = ks_statistic(&pits, |u| u.clamp(0.0, 1.0));
    if !one_entry {
        let (d_m, p_m) = if m == 3 {
            (d, ks_p)
        } else {
            let pits_m = draws
                .iter()
                .map(|s| top_pit(s, m, p, &route))
                .collect::<Result<Vec<f64>>>()?;
            ks_statistic(&pits_m, |u| u.clamp(0.0, 1.0))
        };
        passed &= p_m > SIGNIFICANCE;
        primary = (d_m, p_m);
        parts.push(format!(
            "conditional CDF of the top entry: KS {d_m:.4}, p = {p_m:.4}"
        ));
    }
    passed &= z <= MARKOV_Z;
    parts.push(format!(
        "Markov at level 3 over {markov_n} draws: |z| = {z:.2} (threshold {MARKOV_Z}); level-3 conditional CDF KS p = {ks_p:.4}"
    ));
    let name = if one_entry {
        "chi-square"
    } else {
        "ks-distance"
    };
    let id = format!("theorem/kernel-beta{}-n{n}-m{m}", p.beta);
    let mut r =
        TestReport::p_value_test(&id, name, primary.0, primary.1, SIGNIFICANCE, sample_count)
            .with_seed(seed)
            .with_detail(parts.join("; "));
    r.passed = passed;
    r.runtime_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Pointwise agreement of the general `β = 1` kernel at `π ≡ 1`, `π̂ ≡ 0` with
/// the ordinary multilevel Wishart kernel, on `count` sampled transitions.
pub fn check_remark_kernel(n: usize, m: usize, count: usize, seed: u64) -> Result<TestReport> {
    let start = Instant::now();
    let p = WishartParams::new(1, vec![1.0; n], vec![])?;
    let route = kernel_route(1);
    let draws = sample_batch(count, seed, |rng| sample_wishart_multilevel(&p, m, rng))?;
    let mut worst = 0.0f64;
    for s in &draws {
        let (a, b) = (s.level(m - 1), s.level(m));
        let general = log_kernel_wishart(a, b, m, &p, &route)?;
        let standard = log_kernel_wishart_standard(a, b, m, n)?;
        worst = worst.max(rel_diff(general, standard));
    }
    let mut r = TestReport::tolerance_test(
        &format!("theorem/kernel-standard-n{n}-m{m}"),
        "max rel diff",
        worst,
        1e-8,
        count,
    )
    .with_seed(seed);
    r.runtime_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

fn rel_diff(a: LogValue, b: LogValue) -> f64 {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => 0.0,
        (false, false) => (a.ln() - b.ln()).exp_m1().abs(),
        _ => f64::INFINITY,
    }
}

/// Which Jacobi density the check compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobiForm {
    /// [`logdens_jacobi`].
    Used,
    /// [`logdens_jacobi_as_printed`].
    AsPrinted,
}

impl JacobiForm {
    fn density(self, s: &MultilevelSample, p: &JacobiParams) -> Result<LogValue> {
        match self {
            JacobiForm::Used => logdens_jacobi(s, p),
            JacobiForm::AsPrinted => logdens_jacobi_as_printed(s, p),
        }
    }

    fn label(self) -> &'static str {
        match self {
            JacobiForm::Used => "used",
            JacobiForm::AsPrinted => "as printed",
        }
    }

    fn other(self) -> Self {
        match self {
            JacobiForm::Used => JacobiForm::AsPrinted,
            JacobiForm::AsPrinted => JacobiForm::Used,
        }
    }
}

fn one_level_density(form: JacobiForm, p: &JacobiParams, x: f64) -> f64 {
    let s = match Spectrum::from_sorted(vec![x]) {
        Ok(s) => MultilevelSample::new(vec![s]),
        Err(_) => return 0.0,
    };
    form.density(&s, p).map(|v| v.value()).unwrap_or(f64::NAN)
}

fn one_level_ks(form: JacobiForm, p: &JacobiParams, xs: &[f64]) -> Result<(f64, f64)> {
    let (z, _) = tanh_sinh(0.0, 1.0, 1e-12, |x, _, _| one_level_density(form, p, x))?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    // cumulative integration between consecutive order statistics
    let mut cdf = Vec::with_capacity(sorted.len());
    let mut acc = 0.0;
    let mut last = 0.0;
    for &x in &sorted {
        if x > last {
            acc += tanh_sinh(last, x, 1e-10, |t, _, _| one_level_density(form, p, t))
                .map(|v| v.0)
                .unwrap_or(f64::NAN);
            last = x;
        }
        cdf.push(acc / z);
    }
    Ok(ks_from_sorted_cdf(&cdf))
}

/// `log` of `∫ f`, `∫ f·(λ²₁+λ²₂)`, `∫ f·λ¹₁` over `1 > λ²₁ > λ¹₁ > λ²₂ > 0`.
fn two_level_moments(form: JacobiForm, p: &JacobiParams, level: u32) -> Vec<f64> {
    // λ²₂ = u, λ¹₁ = u + (1-u)v, λ²₁ = λ¹₁ + (1-λ¹₁)w
    log_box_integrals(
        &[(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)],
        level,
        1.0,
        3,
        |c, out| {
            let b = c[0];
            let x = b + (1.0 - b) * c[1];
            let a = x + (1.0 - x) * c[2];
            let jac = (1.0 - b).ln() + (1.0 - x).ln();
            let f = match (
                Spectrum::from_sorted(vec![x]),
                Spectrum::from_sorted(vec![a, b]),
            ) {
                (Ok(l1), Ok(l2)) => form
                    .density(&MultilevelSample::new(vec![l1, l2]), p)
                    .map(|v| v.ln())
                    .unwrap_or(f64::NAN),
                _ => f64::NEG_INFINITY,
            };
            out[0] = f + jac;
            out[1] = f + jac + (a + b).ln();
            out[2] = f + jac + x.ln();
        },
    )
}

/// Jacobi corner density check at `m = 1` (KS) or `m = 2` (two moments by
/// three-dimensional quadrature, `|z| ≤ 4` each).
pub fn check_theorem_jacobi(
    p: &JacobiParams,
    form: JacobiForm,
    sample_count: usize,
    seed: u64,
) -> Result<TestReport> {
    let start = Instant::now();
    p.validate()?;
    let id = format!(
        "theorem/jacobi-beta{}-A{}-n{}-m{}",
        p.beta, p.a, p.n, p.m_max
    );
    let draws = sample_batch(sample_count, seed, |rng| sample_jacobi_multilevel(p, rng))?;
    let mut r = match p.m_max {
        1 => {
            let xs: Vec<f64> = draws.iter().map(|s| s.level(1).values()[0]).collect();
            let (d, pv) = one_level_ks(form, p, &xs)?;
            let mut r =
                TestReport::p_value_test(&id, "ks-distance", d, pv, SIGNIFICANCE, sample_count);
            let mut detail = format!("density {}", form.label());
            if p.beta == 1 {
                let (d2, p2) = one_level_ks(form.other(), p, &xs)?;
                detail.push_str(&format!(
                    "; density {}: KS {d2:.4}, p = {p2:.3e}",
                    form.other().label()
                ));
            }
            r.detail = detail;
            r
        }
        2 if p.n == 2 => {
            let fine = two_level_moments(form, p, 5);
            let coarse = two_level_moments(form, p, 4);
            let mut worst = 0.0f64;
            let mut parts = vec![format!("density {}", form.label())];
            for (k, (name, g)) in [
                (
                    "E[λ²₁+λ²₂]",
                    Box::new(|s: &MultilevelSample| s.level(2).total())
                        as Box<dyn Fn(&MultilevelSample) -> f64>,
                ),
                (
                    "E[λ¹₁]",
                    Box::new(|s: &MultilevelSample| s.level(1).values()[0]),
                ),
            ]
            .into_iter()
            .enumerate()
            {
                let reference = (fine[k + 1] - fine[0]).exp();
                let ref_sigma = (reference - (coarse[k + 1] - coarse[0]).exp()).abs();
                let (mean, se) = mean_and_se(&draws, |s| g(s));
                let z = (mean - reference) / (se * se + ref_sigma * ref_sigma).sqrt();
                worst = worst.max(z.abs());
                parts.push(format!("{name}: sample {mean:.6} ± {se:.1e}, quadrature {reference:.6} (±{ref_sigma:.0e}), z = {z:.2}"));
            }
            TestReport::tolerance_test(&id, "max |z|", worst, MOMENT_SIGMAS, sample_count)
                .with_detail(parts.join("; "))
        }
        _ => return param("Jacobi density checks cover m = 1, or m = 2 with n = 2"),
    };
    r.seed = Some(seed);
    r.runtime_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Product of the transition kernels `Q_{0,1} ⋯ Q_{m-1,m}` against the joint
/// density of `μ^1 ≺ ⋯ ≺ μ^m`, pointwise on sampled configurations. The
/// joint density is unnormalized, so the statistic is the spread of the log
/// ratio; the ratio itself is reported.
pub fn check_chain_identity(
    p: &WishartParams,
    m: usize,
    count: usize,
    seed: u64,
) -> Result<TestReport> {
    let start = Instant::now();
    p.validate()?;
    if m == 0 {
        return param("chain identity needs at least one level");
    }
    let route = kernel_route(p.beta);
    let level = if m.min(p.n()) > 1 { 5 } else { 7 };
    let quad = QuadSpec::double_exponential(level, 1e-8);
    let draws = sample_batch(count, seed, |rng| sample_wishart_multilevel(p, m, rng))?;
    let empty = Spectrum::from_sorted(vec![])?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &draws {
        let mut chain = 0.0;
        for l in 1..=m {
            let prev = if l == 1 { &empty } else { s.level(l - 1) };
            chain += log_kernel_wishart(prev, s.level(l), l, p, &route)?.ln();
        }
        let joint = logdens_mvb_joint(s, p, &quad)?;
        let d = chain - joint.ln();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let id = format!("theorem/chain-beta{}-n{}-m{m}", p.beta, p.n());
    let spread = (hi - lo).exp_m1();
    let mut r = TestReport::tolerance_test(&id, "ratio spread", spread, 1e-6, count)
        .with_seed(seed)
        .with_detail(format!(
            "log(kernel product / joint density) in [{lo:.3e}, {hi:.3e}]"
        ));
    r.runtime_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// `log ∫ kernel` at one conditioning point by box quadrature.
pub fn kernel_mass(prev: &Spectrum, m: usize, p: &WishartParams, level: u32) -> (f64, f64) {
    let route = kernel_route(p.beta);
    let n = p.n();
    let a = prev.values();
    let bounds: Vec<(f64, f64)> = (0..m.min(n))
        .map(|i| {
            (
                a.get(i).copied().unwrap_or(0.0),
                if i == 0 { f64::INFINITY } else { a[i - 1] },
            )
        })
        .collect();
    let Ok(kernel) = WishartKernel::new(prev, m, p, &route) else {
        return (f64::NAN, f64::NAN);
    };
    log_box_integral(&bounds, level, tail_for(p, m), |y| kernel_at(&kernel, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_interpolates_smooth_functions() {
        let (xs, ws) = cheb_points(-3.0, 1.0, CHEB_NODES);
        let fs: Vec<f64> = xs
            .iter()
            .map(|&t| (0.5 * t).exp() * (t / 3.0).cos())
            .collect();
        for t in [-2.7f64, -1.0, 0.3, 0.9] {
            let want = (0.5 * t).exp() * (t / 3.0).cos();
            assert!((cheb_eval(&xs, &ws, &fs, t) - want).abs() < 1e-4);
        }
    }

    #[test]
    fn cells_partition_the_conditional_support() {
        let pts: Vec<(f64, Vec<f64>)> = (1..200)
            .map(|k| {
                (
                    1.0,
                    vec![1.0 + k as f64 / 50.0, ((k * 37) % 199) as f64 / 200.0],
                )
            })
            .collect();
        let grid = CellGrid::from_pilot(&pts);
        assert_eq!(grid.len(), 16);
        let mut seen = vec![false; 16];
        for (x, y) in &pts {
            seen[grid.index(*x, y)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn one_by_one_kernel_chain() {
        // n = 1: μ^m | μ^{m-1} is μ^{m-1} plus an exponential at β = 2
        let p = WishartParams::new(2, vec![1.0], vec![0.0, 0.5, 0.2]).unwrap();
        let r = check_theorem_kernel(&p, 2, 20_000, 11).unwrap();
        assert!(r.passed, "{}", r.detail);
    }
}
