//! Sparse vector technique for sensitivity-1 threshold queries.
//!
//! Each query value is compared against 0: the answer is `Above` iff
//! `q + Lap(4c/eps) >= Z` with `Z ~ Lap(2/eps)` drawn once and
//! `eps = sqrt(2 rho)`, as long as fewer than `c` `Above` answers have been
//! given. After the cutoff every query is answered `Below`.

use std::fmt;

use crate::error::{invalid, Result};
use crate::noise::{NoiseSource, Sampler};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvtAnswer {
    Above,
    Below,
}

impl fmt::Display for SvtAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SvtAnswer::Above => "above",
            SvtAnswer::Below => "below",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SvtState {
    rho: f64,
    cutoff: u32,
    epsilon: f64,
    threshold_noise: f64,
    above_count: u32,
    queries: u64,
    sampler: Sampler,
}

impl SvtState {
    pub fn new(rho: f64, cutoff: u32, source: NoiseSource) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid("rho", format!("must be positive and finite, got {rho}")));
        }
        if cutoff == 0 {
            return Err(invalid("cutoff", "must be at least 1"));
        }
        let epsilon = (2.0 * rho).sqrt();
        let mut sampler = source.sampler();
        let threshold_noise = sampler.laplace(2.0 / epsilon);
        Ok(Self {
            rho,
            cutoff,
            epsilon,
            threshold_noise,
            above_count: 0,
            queries: 0,
            sampler,
        })
    }

    /// Answers one query whose value (including any offset) is `value`.
    pub fn query(&mut self, value: f64) -> SvtAnswer {
        self.queries += 1;
        let noise = self.sampler.laplace(4.0 * self.cutoff as f64 / self.epsilon);
        if value + noise >= self.threshold_noise && self.above_count < self.cutoff {
            self.above_count += 1;
            SvtAnswer::Above
        } else {
            SvtAnswer::Below
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn above_count(&self) -> u32 {
        self.above_count
    }

    pub fn exhausted(&self) -> bool {
        self.above_count >= self.cutoff
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }
}

/// Accuracy radius: with probability `1 - beta` all answers up to the last
/// `Above` are `gamma`-accurate, `gamma = 8c (ln k + ln(2c/beta)) / sqrt(2 rho)`.
pub fn svt_gamma(cutoff: u32, k: f64, beta: f64, rho: f64) -> Result<f64> {
    if cutoff == 0 {
        return Err(invalid("cutoff", "must be at least 1"));
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(invalid("k", format!("must be at least 1, got {k}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(invalid("beta", format!("must lie in (0, 1), got {beta}")));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid("rho", format!("must be positive and finite, got {rho}")));
    }
    let c = cutoff as f64;
    Ok(8.0 * c * (k.ln() + (2.0 * c / beta).ln()) / (2.0 * rho).sqrt())
}
