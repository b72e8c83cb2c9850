use std::cell::RefCell;
use std::collections::HashMap;

use super::{log_qpoch_inf, Partition, QParams};
use crate::error::{param, Result};
use crate::quad::LogSumExp;

/// Largest partition size and length accepted by [`partitions_up_to`].
pub const MAX_PARTITION_SIZE: u64 = 16;
pub const MAX_PARTITION_LEN: usize = 4;

/// Per-evaluation cache of `log (q^a t^b; q)_∞` for integer `a, b ≥ 0`; all
/// q-products in the branching rule, the norm and the principal
/// specialization are of this form.
#[derive(Debug)]
pub struct BranchTable {
    qt: QParams,
    ln_q: f64,
    ln_t: f64,
    cache: RefCell<HashMap<(u32, u32), f64>>,
}

impl BranchTable {
    pub fn new(qt: QParams) -> Self {
        Self {
            qt,
            ln_q: qt.q().ln(),
            ln_t: qt.t().ln(),
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> QParams {
        self.qt
    }

    /// `log (q^a t^b; q)_∞`; `-∞` at `a = b = 0`.
    pub fn log_qpoch(&self, a: u32, b: u32) -> f64 {
        if a == 0 && b == 0 {
            return f64::NEG_INFINITY;
        }
        if let Some(&v) = self.cache.borrow().get(&(a, b)) {
            return v;
        }
        let u = (a as f64 * self.ln_q + b as f64 * self.ln_t).exp();
        let v = log_qpoch_inf(u, self.qt.q()).expect("q-power argument below one");
        self.cache.borrow_mut().insert((a, b), v);
        v
    }

    /// `log f(q^a t^b)` with `f(u) = (tu; q)_∞ / (qu; q)_∞`.
    pub fn log_f(&self, a: u32, b: u32) -> f64 {
        self.log_qpoch(a, b + 1) - self.log_qpoch(a + 1, b)
    }

    /// Macdonald's horizontal-strip formula, product over `1 ≤ i ≤ j ≤ ℓ(μ)`.
    pub fn log_psi_general(&self, lambda: &Partition, mu: &Partition) -> f64 {
        if !interlaces_partitions(lambda, mu) {
            return f64::NEG_INFINITY;
        }
        let (l, u) = (|i: usize| lambda.part(i), |i: usize| mu.part(i));
        let mut s = 0.0;
        for j in 0..mu.len() {
            for i in 0..=j {
                let d = (j - i) as u32;
                s += self.log_f(u(i) - u(j), d) + self.log_f(l(i) - l(j + 1), d)
                    - self.log_f(l(i) - u(j), d)
                    - self.log_f(u(i) - l(j + 1), d);
            }
        }
        s
    }

    /// Branching coefficient for `ℓ(λ) = m`, product over `1 ≤ i ≤ j ≤ m - 1`.
    pub fn log_psi_full(&self, lambda: &Partition, mu: &Partition, m: usize) -> f64 {
        if !interlaces_partitions(lambda, mu) || mu.len() + 1 > m.max(1) || lambda.len() > m {
            return f64::NEG_INFINITY;
        }
        let (l, u) = (|i: usize| lambda.part(i), |i: usize| mu.part(i));
        let mut s = 0.0;
        for j in 0..m.saturating_sub(1) {
            for i in 0..=j {
                let d = (j - i) as u32;
                s += self.log_f(u(i) - u(j), d) + self.log_f(l(i) - l(j + 1), d)
                    - self.log_f(l(i) - u(j), d)
                    - self.log_f(u(i) - l(j + 1), d);
            }
        }
        s
    }

    /// Truncated branching coefficient for `ℓ(λ) = n < m`.
    pub fn log_psi_truncated(&self, lambda: &Partition, mu: &Partition) -> f64 {
        if !interlaces_partitions(lambda, mu) {
            return f64::NEG_INFINITY;
        }
        let n = lambda.len();
        let (l, u) = (|i: usize| lambda.part(i), |i: usize| mu.part(i));
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                let d = (j - i) as u32;
                s += self.log_f(u(i) - u(j), d) + self.log_f(l(i) - l(j), d - 1)
                    - self.log_f(l(i) - u(j), d)
                    - self.log_f(u(i) - l(j), d - 1);
            }
        }
        for i in 0..n {
            let e = (n - 1 - i) as u32;
            s += self.log_f(0, 0) - self.log_f(l(i) - u(i), 0);
            s += self.log_f(l(i), e) - self.log_f(u(i), e);
        }
        s
    }

    /// `log b_λ` from arms and legs.
    pub fn log_b(&self, lambda: &Partition) -> f64 {
        let conj = lambda.conjugate();
        let (lq, lt) = (self.ln_q, self.ln_t);
        let mut s = 0.0;
        for (i, &row) in lambda.parts().iter().enumerate() {
            for j in 0..row as usize {
                let arm = (row as usize - 1 - j) as f64;
                let leg = (conj.part(j) as usize - 1 - i) as f64;
                s += (-(arm * lq + (leg + 1.0) * lt).exp()).ln_1p()
                    - (-((arm + 1.0) * lq + leg * lt).exp()).ln_1p();
            }
        }
        s
    }

    /// `log P_λ(1, t, …, t^{m-1})` from the product formula.
    pub fn log_principal(&self, lambda: &Partition, m: usize) -> f64 {
        let n = lambda.len();
        if n > m {
            return f64::NEG_INFINITY;
        }
        let l = |i: usize| lambda.part(i);
        let mut s: f64 = (0..n).map(|i| i as f64 * l(i) as f64).sum::<f64>() * self.ln_t;
        let tail = |a: u32, d: u32| {
            self.log_qpoch(a, d) - self.log_qpoch(a, d + 1) + self.log_qpoch(0, d + 1)
                - self.log_qpoch(0, d)
        };
        for i in 0..n {
            for j in i + 1..n {
                s += tail(l(i) - l(j), (j - i) as u32);
            }
            for j in n..m {
                s += tail(l(i), (j - i) as u32);
            }
        }
        s
    }

    /// `log P_λ(x)` through the branching rule, peeling the last variable.
    pub fn log_p(&self, lambda: &Partition, x: &[f64]) -> Result<f64> {
        if x.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return param("Macdonald evaluation needs nonnegative finite variables");
        }
        let ln_x: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let mut memo = HashMap::new();
        Ok(self.log_p_rec(lambda, &ln_x, &mut memo))
    }

    fn log_p_rec(
        &self,
        lambda: &Partition,
        ln_x: &[f64],
        memo: &mut HashMap<(Partition, usize), f64>,
    ) -> f64 {
        let k = ln_x.len();
        if lambda.len() > k {
            return f64::NEG_INFINITY;
        }
        if lambda.is_empty() {
            return 0.0;
        }
        if k == 1 {
            return power(lambda.part(0) as u64, ln_x[0]);
        }
        if let Some(&v) = memo.get(&(lambda.clone(), k)) {
            return v;
        }
        let mut acc = LogSumExp::new();
        let size = lambda.size();
        for_each_sub_interlacing(lambda, k - 1, &mut |mu| {
            let tail = power(size - mu.size(), ln_x[k - 1]);
            if tail == f64::NEG_INFINITY {
                return;
            }
            let inner = self.log_p_rec(mu, &ln_x[..k - 1], memo);
            acc.add(self.log_psi_general(lambda, mu) + inner + tail);
        });
        let v = acc.value();
        memo.insert((lambda.clone(), k), v);
        v
    }
}

/// `d · log x` with `0 · log 0 = 0`.
fn power(d: u64, ln_x: f64) -> f64 {
    if d == 0 {
        0.0
    } else {
        d as f64 * ln_x
    }
}

/// `μ ≺ λ`: `λ_1 ≥ μ_1 ≥ λ_2 ≥ μ_2 ≥ ⋯`.
pub fn interlaces_partitions(lambda: &Partition, mu: &Partition) -> bool {
    let len = lambda.len().max(mu.len());
    (0..len).all(|i| lambda.part(i) >= mu.part(i) && mu.part(i) >= lambda.part(i + 1))
}

/// Calls `f` on every `μ ≺ λ` with `ℓ(μ) ≤ max_len`.
fn for_each_sub_interlacing(lambda: &Partition, max_len: usize, f: &mut impl FnMut(&Partition)) {
    let len = lambda.len().min(max_len);
    if lambda.len() > max_len + 1 {
        return;
    }
    let mut parts = vec![0u32; len];
    fn rec(i: usize, lambda: &Partition, parts: &mut Vec<u32>, f: &mut impl FnMut(&Partition)) {
        if i == parts.len() {
            let mu = Partition::new(parts.clone()).expect("interlacing parts are decreasing");
            f(&mu);
            return;
        }
        for v in lambda.part(i + 1)..=lambda.part(i) {
            parts[i] = v;
            rec(i + 1, lambda, parts, f);
        }
    }
    rec(0, lambda, &mut parts, f);
}

/// All partitions with `|λ| ≤ max_size` and `ℓ(λ) ≤ max_len`, by size.
pub fn partitions_up_to(max_size: u64, max_len: usize) -> Result<Vec<Partition>> {
    if max_size > MAX_PARTITION_SIZE || max_len > MAX_PARTITION_LEN {
        return param(format!(
            "partition enumeration limited to |λ| ≤ {MAX_PARTITION_SIZE}, ℓ ≤ {MAX_PARTITION_LEN}"
        ));
    }
    let mut out = Vec::new();
    for size in 0..=max_size as u32 {
        let mut stack = vec![(Vec::<u32>::new(), size, size)];
        while let Some((parts, rest, cap)) = stack.pop() {
            if rest == 0 {
                out.push(Partition::new(parts).expect("generated decreasing"));
                continue;
            }
            if parts.len() == max_len {
                continue;
            }
            for p in (1..=rest.min(cap)).rev() {
                let mut next = parts.clone();
                next.push(p);
                stack.push((next, rest - p, p));
            }
        }
    }
    Ok(out)
}

/// Branching coefficient `ψ^m_{λ/μ}`: the full formula when `ℓ(λ) = m`, the
/// truncated one when `ℓ(λ) < m`, and 0 off the interlacing set.
pub fn psi_branch(lambda: &Partition, mu: &Partition, m: usize, qt: QParams) -> f64 {
    if lambda.len() > m || mu.len() + 1 > m.max(1) || !interlaces_partitions(lambda, mu) {
        return 0.0;
    }
    let table = BranchTable::new(qt);
    if lambda.len() == m {
        table.log_psi_full(lambda, mu, m).exp()
    } else {
        table.log_psi_truncated(lambda, mu).exp()
    }
}

pub fn psi_branch_full(lambda: &Partition, mu: &Partition, m: usize, qt: QParams) -> f64 {
    BranchTable::new(qt).log_psi_full(lambda, mu, m).exp()
}

pub fn psi_branch_truncated(lambda: &Partition, mu: &Partition, qt: QParams) -> f64 {
    BranchTable::new(qt).log_psi_truncated(lambda, mu).exp()
}

pub fn psi_branch_general(lambda: &Partition, mu: &Partition, qt: QParams) -> f64 {
    BranchTable::new(qt).log_psi_general(lambda, mu).exp()
}

pub fn b_norm(lambda: &Partition, qt: QParams) -> f64 {
    BranchTable::new(qt).log_b(lambda).exp()
}

/// `b_λ` as the double product of finite q-Pochhammer ratios.
pub fn b_norm_product(lambda: &Partition, qt: QParams) -> f64 {
    let (q, t) = (qt.q(), qt.t());
    let l = |i: usize| lambda.part(i) as i64;
    let mut s = 0.0;
    for ll in 0..lambda.len() {
        let k = l(ll) - l(ll + 1);
        for i in 0..=ll {
            let gap = (l(ll - i) - l(ll)) as i32;
            let num = t.powi(i as i32 + 1) * q.powi(gap);
            let den = t.powi(i as i32) * q.powi(gap + 1);
            s += super::log_qpoch_fin(num, q, k).expect("factors below one")
                - super::log_qpoch_fin(den, q, k).expect("factors below one");
        }
    }
    s.exp()
}

pub fn macdonald_p(lambda: &Partition, x: &[f64], qt: QParams) -> Result<f64> {
    Ok(BranchTable::new(qt).log_p(lambda, x)?.exp())
}

/// Same polynomial, branching off `x_1` first.
pub fn macdonald_p_peel_first(lambda: &Partition, x: &[f64], qt: QParams) -> Result<f64> {
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    macdonald_p(lambda, &rev, qt)
}

pub fn macdonald_q(lambda: &Partition, x: &[f64], qt: QParams) -> Result<f64> {
    let table = BranchTable::new(qt);
    Ok((table.log_b(lambda) + table.log_p(lambda, x)?).exp())
}

pub fn principal_eval(lambda: &Partition, m: usize, qt: QParams) -> f64 {
    BranchTable::new(qt).log_principal(lambda, m).exp()
}

/// `∏_{i,j} (t x_i y_j; q)_∞ / (x_i y_j; q)_∞`.
pub fn cauchy_product(x: &[f64], y: &[f64], qt: QParams) -> Result<f64> {
    let mut s = 0.0;
    for &xi in x {
        for &yj in y {
            let z = xi * yj;
            s += log_qpoch_inf(qt.t() * z, qt.q())? - log_qpoch_inf(z, qt.q())?;
        }
    }
    Ok(s.exp())
}

/// `Σ_{|λ| ≤ max_degree} P_λ(x) Q_λ(y)` over `ℓ(λ) ≤ min(len x, len y)`.
pub fn cauchy_partial_sum(x: &[f64], y: &[f64], max_degree: u64, qt: QParams) -> Result<f64> {
    let table = BranchTable::new(qt);
    let max_len = x.len().min(y.len());
    let mut sum = 0.0;
    for lambda in partitions_up_to(max_degree, max_len)? {
        sum += (table.log_p(&lambda, x)? + table.log_b(&lambda) + table.log_p(&lambda, y)?).exp();
    }
    Ok(sum)
}
