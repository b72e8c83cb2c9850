//! Log-space densities and transition kernels.
//!
//! Every evaluator returns an unnormalized log density; the constants the
//! closed forms leave implicit are estimated numerically and kept in a
//! [`NormalizationCache`].

mod ho;
mod logvalue;
mod mvb;

use std::collections::HashMap;
use std::sync::Mutex;

pub use ho::{
    ho_from_jacobi, logdens_ho_joint, logdens_ho_marginal, logdens_jacobi,
    logdens_jacobi_as_printed, logdens_jacobi_ho_form, transform_ho_to_jacobi,
    transform_jacobi_to_ho, HoParams,
};
pub use logvalue::LogValue;
pub use mvb::{
    kernel_log_mass, log_kernel_wishart, log_kernel_wishart_standard, logdens_mvb_joint,
    logdens_mvb_marginal, WishartKernel,
};

use crate::ensembles::MultilevelSample;
use crate::error::Result;
use crate::hyperfun::Estimate;
use crate::linalg::interlaces;

/// Write-once map from `(density id, parameter key)` to an estimated log
/// normalization constant.
#[derive(Debug, Default)]
pub struct NormalizationCache {
    entries: Mutex<HashMap<(String, String), Estimate>>,
}

impl NormalizationCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the cached estimate or computes and stores it. Concurrent
    /// callers for the same key may both compute, but only the first value
    /// is kept and every caller sees it.
    pub fn get_or_compute(
        &self,
        id: &str,
        key: &str,
        compute: impl FnOnce() -> Result<Estimate>,
    ) -> Result<Estimate> {
        let k = (id.to_string(), key.to_string());
        if let Some(e) = self.entries.lock().expect("cache lock").get(&k) {
            return Ok(*e);
        }
        let fresh = compute()?;
        let mut map = self.entries.lock().expect("cache lock");
        Ok(*map.entry(k).or_insert(fresh))
    }

    pub fn get(&self, id: &str, key: &str) -> Option<Estimate> {
        self.entries
            .lock()
            .expect("cache lock")
            .get(&(id.to_string(), key.to_string()))
            .copied()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Level values when `levels` is a strictly interlacing array with level
/// `l` of length `min(l, n)` and positive entries; `None` otherwise.
fn strict_support(levels: &MultilevelSample, n: usize) -> Option<Vec<&[f64]>> {
    let vals: Vec<&[f64]> = levels.levels.iter().map(|s| s.values()).collect();
    for (idx, lev) in vals.iter().enumerate() {
        if lev.len() != (idx + 1).min(n) || lev.windows(2).any(|w| !(w[0] > w[1])) {
            return None;
        }
        if lev.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return None;
        }
    }
    if vals.windows(2).all(|w| interlaces(w[0], w[1], true)) {
        Some(vals)
    } else {
        None
    }
}

fn sum_ln(x: &[f64]) -> f64 {
    x.iter().map(|v| v.ln()).sum()
}

fn total(x: &[f64]) -> f64 {
    x.iter().sum()
}

/// `Σ ln(1 - e^{-x_i})`.
fn sum_ln_one_minus_exp(x: &[f64]) -> f64 {
    x.iter().map(|&v| (-(-v).exp_m1()).ln()).sum()
}

/// `p · x` with `0 · ±∞ = 0`.
fn scaled(p: f64, x: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn cache_is_write_once() {
        let cache = Arc::new(NormalizationCache::new());
        let first = cache
            .get_or_compute("d", "k", || Ok(Estimate::exact(1.0)))
            .unwrap();
        let second = cache
            .get_or_compute("d", "k", || Ok(Estimate::exact(2.0)))
            .unwrap();
        assert_eq!(first, second);
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let c = Arc::clone(&cache);
                std::thread::spawn(move || {
                    c.get_or_compute("d", "other", || Ok(Estimate::exact(i as f64)))
                        .unwrap()
                })
            })
            .collect();
        let seen: Vec<Estimate> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(seen.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(cache.len(), 2);
    }
}
