//! One-dimensional quadrature rules.
//!
//! Tanh-sinh nodes carry the distance to both endpoints computed without
//! cancellation, so integrands with algebraic endpoint singularities can be
//! evaluated right up to the boundary.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Truncation of the tanh-sinh parameter: beyond |t| = 4.1 the endpoint
/// distance is below 1e-40 of the interval length.
const TANH_SINH_TMAX: f64 = 4.1;

/// A quadrature node on `[a, b]`: `a + below = b - above`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub below: f64,
    pub above: f64,
    pub weight: f64,
}

/// Tanh-sinh rule on `[-1, 1]` with step `2^{-level}`.
#[derive(Debug, Clone)]
pub struct TanhSinh {
    level: u32,
    // (1 + x, 1 - x, weight)
    nodes: Vec<(f64, f64, f64)>,
}

impl TanhSinh {
    pub fn new(level: u32) -> Self {
        let h = 0.5f64.powi(level as i32);
        let kmax = (TANH_SINH_TMAX / h).ceil() as i64;
        let mut nodes = Vec::with_capacity(2 * kmax as usize + 1);
        for k in -kmax..=kmax {
            let t = k as f64 * h;
            let u = FRAC_PI_2 * t.sinh();
            let ch = u.cosh();
            let one_plus = u.exp() / ch;
            let one_minus = (-u).exp() / ch;
            let weight = h * FRAC_PI_2 * t.cosh() / (ch * ch);
            nodes.push((one_plus, one_minus, weight));
        }
        Self { level, nodes }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes mapped to `[a, b]` (requires `b > a`).
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = Node> + '_ {
        let half = 0.5 * (b - a);
        self.nodes.iter().map(move |&(p, m, w)| Node {
            below: half * p,
            above: half * m,
            weight: half * w,
        })
    }

    /// Integral of `f(x, x - a, b - x)` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64, f64, f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut sum = 0.0;
        for node in self.mapped(a, b) {
            let x = if node.below <= node.above {
                a + node.below
            } else {
                b - node.above
            };
            if node.weight == 0.0 {
                continue;
            }
            sum += node.weight * f(x, node.below, node.above);
        }
        sum
    }
}

/// Adaptive tanh-sinh: doubles the node density until two successive levels
/// agree to `rel_tol`. Returns `(value, error estimate)`.
pub fn tanh_sinh(
    a: f64,
    b: f64,
    rel_tol: f64,
    mut f: impl FnMut(f64, f64, f64) -> f64,
) -> Result<(f64, f64)> {
    let mut prev = TanhSinh::new(2).integrate(a, b, &mut f);
    let mut err = f64::INFINITY;
    for level in 3..=9 {
        let cur = TanhSinh::new(level).integrate(a, b, &mut f);
        if cur.is_nan() {
            return Err(Error::NaN);
        }
        err = (cur - prev).abs();
        if err <= rel_tol * cur.abs() || err == 0.0 {
            return Ok((cur, err));
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        estimate: prev,
        tolerance: rel_tol.max(err / prev.abs()),
    })
}

/// Exp-sinh rule for `[a, ∞)`, step `2^{-level}`; `f` receives `(x, x - a)`.
pub fn exp_sinh_level(a: f64, level: u32, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let h = 0.5f64.powi(level as i32);
    let kmin = (-5.0 / h).floor() as i64;
    let mut sum = 0.0;
    let mut small_run = 0;
    let mut k = kmin;
    loop {
        let t = k as f64 * h;
        let e = (FRAC_PI_2 * t.sinh()).exp();
        if !e.is_finite() {
            break;
        }
        let w = h * FRAC_PI_2 * t.cosh() * e;
        let term = w * f(a + e, e);
        sum += term;
        if t > 0.0 {
            if term.abs() <= 1e-20 * sum.abs() {
                small_run += 1;
                if small_run >= 4 {
                    break;
                }
            } else {
                small_run = 0;
            }
        }
        k += 1;
    }
    sum
}

/// Adaptive exp-sinh on `[a, ∞)`.
pub fn exp_sinh(a: f64, rel_tol: f64, mut f: impl FnMut(f64, f64) -> f64) -> Result<(f64, f64)> {
    let mut prev = exp_sinh_level(a, 2, &mut f);
    let mut err = f64::INFINITY;
    for level in 3..=9 {
        let cur = exp_sinh_level(a, level, &mut f);
        if cur.is_nan() {
            return Err(Error::NaN);
        }
        err = (cur - prev).abs();
        if err <= rel_tol * cur.abs() || err == 0.0 {
            return Ok((cur, err));
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        estimate: prev,
        tolerance: rel_tol.max(err / prev.abs()),
    })
}

/// Exp-sinh nodes `(offset, weight)` for `[a, ∞)` with offsets up to `max_offset`.
pub fn exp_sinh_nodes(level: u32, max_offset: f64) -> Vec<(f64, f64)> {
    let h = 0.5f64.powi(level as i32);
    let mut k = (-5.0 / h).floor() as i64;
    let mut out = Vec::new();
    loop {
        let t = k as f64 * h;
        let e = (FRAC_PI_2 * t.sinh()).exp();
        if !(e <= max_offset) {
            break;
        }
        out.push((e, h * FRAC_PI_2 * t.cosh() * e));
        k += 1;
    }
    out
}

/// `log ∫ exp(log_f(x)) dx` over a box; an upper bound of `+∞` uses exp-sinh
/// nodes up to `tail` past the lower bound. Nodes that round onto a finite
/// endpoint are skipped. Returns `(log value, relative change from level - 1)`.
pub fn log_box_integral(
    bounds: &[(f64, f64)],
    level: u32,
    tail: f64,
    log_f: impl Fn(&[f64]) -> f64,
) -> (f64, f64) {
    let run = |lev: u32| log_box_integrals(bounds, lev, tail, 1, |x, out| out[0] = log_f(x))[0];
    let fine = run(level);
    let coarse = run(level.saturating_sub(1).max(1));
    (fine, (coarse - fine).exp_m1().abs())
}

/// Single-level version of [`log_box_integral`] for `k` integrands sharing
/// the nodes; `log_f(x, out)` writes the `k` log values at `x`.
pub fn log_box_integrals(
    bounds: &[(f64, f64)],
    level: u32,
    tail: f64,
    k: usize,
    mut log_f: impl FnMut(&[f64], &mut [f64]),
) -> Vec<f64> {
    let ts = TanhSinh::new(level);
    let es = exp_sinh_nodes(level, tail);
    let axes: Vec<Vec<(f64, f64)>> = bounds
        .iter()
        .map(|&(a, b)| {
            if b.is_infinite() {
                es.iter()
                    .map(|&(e, w)| (a + e, w.ln()))
                    .filter(|&(x, _)| x > a)
                    .collect()
            } else {
                ts.mapped(a, b)
                    .filter(|n| n.weight > 0.0)
                    .map(|n| {
                        (
                            if n.below <= n.above {
                                a + n.below
                            } else {
                                b - n.above
                            },
                            n.weight.ln(),
                        )
                    })
                    .filter(|&(x, _)| x > a && x < b)
                    .collect()
            }
        })
        .collect();
    let mut acc = vec![LogSumExp::new(); k];
    if axes.iter().any(|a| a.is_empty()) {
        return vec![f64::NEG_INFINITY; k];
    }
    let mut idx = vec![0usize; axes.len()];
    let mut x = vec![0.0; axes.len()];
    let mut vals = vec![0.0; k];
    loop {
        let mut lw = 0.0;
        for (d, &i) in idx.iter().enumerate() {
            x[d] = axes[d][i].0;
            lw += axes[d][i].1;
        }
        log_f(&x, &mut vals);
        for (a, v) in acc.iter_mut().zip(&vals) {
            a.add(lw + v);
        }
        let mut d = 0;
        loop {
            if d == idx.len() {
                return acc.iter().map(|a| a.value()).collect();
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<(f64, f64)>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        let n = order.max(1);
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            nodes.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        Self { nodes }
    }

    pub fn nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .map(move |&(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    if n == 0 {
        (1.0, 0.0)
    } else {
        (p1, d)
    }
}

/// Streaming `log Σ exp(x_k)` with a running maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tanh_sinh_polynomial_and_singular() {
        let (v, _) = tanh_sinh(0.0, 2.0, 1e-14, |x, _, _| x * x).unwrap();
        assert_relative_eq!(v, 8.0 / 3.0, max_relative = 1e-13);
        // ∫_0^1 x^{-1/2}(1-x)^{-1/2} dx = π using the accurate endpoint gaps
        let (v, _) = tanh_sinh(0.0, 1.0, 1e-14, |_, lo, hi| 1.0 / (lo.sqrt() * hi.sqrt())).unwrap();
        assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-13);
        // shifted far from the origin, where x - a would lose all digits
        let (v, _) = tanh_sinh(1e6, 1e6 + 1.0, 1e-14, |_, lo, hi| {
            1.0 / (lo.sqrt() * hi.sqrt())
        })
        .unwrap();
        assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-13);
    }

    #[test]
    fn box_integral_mixed_bounds() {
        // ∫_0^∞ ∫_0^1 e^{-x} y^{-1/2} dy dx = 2
        let (v, err) = log_box_integral(&[(0.0, f64::INFINITY), (0.0, 1.0)], 5, 200.0, |p| {
            -p[0] - 0.5 * p[1].ln()
        });
        assert_relative_eq!(v.exp(), 2.0, max_relative = 1e-8);
        assert!(err < 1e-6);
    }

    #[test]
    fn exp_sinh_gamma_integrals() {
        let (v, _) = exp_sinh(0.0, 1e-13, |x, _| (-x).exp()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        let (v, _) = exp_sinh(0.0, 1e-13, |x, _| (-x).exp() / x.sqrt()).unwrap();
        assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
        let (v, _) = exp_sinh(1.0, 1e-12, |x, _| 1.0 / (x * x)).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-11);
    }

    #[test]
    fn gauss_legendre_exact_degree() {
        let gl = GaussLegendre::new(5);
        let total: f64 = gl.nodes(-1.0, 1.0).map(|(_, w)| w).sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
        let v = gl.integrate(0.0, 1.0, |x| x.powi(9));
        assert_relative_eq!(v, 0.1, max_relative = 1e-13);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [-1.0, 3.0, 0.5, -700.0, 2.0];
        let mut acc = LogSumExp::new();
        for &x in &xs {
            acc.add(x);
        }
        let direct: f64 = xs.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert_relative_eq!(acc.value(), direct, max_relative = 1e-15);
        let mut a = LogSumExp::new();
        a.add(1.0);
        let mut b = LogSumExp::new();
        b.add(5.0);
        a.merge(&b);
        assert_relative_eq!(
            a.value(),
            (1f64.exp() + 5f64.exp()).ln(),
            max_relative = 1e-15
        );
        assert_eq!(LogSumExp::new().value(), f64::NEG_INFINITY);
    }
}
