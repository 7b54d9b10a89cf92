//! Uniform step interface shared by every continual-release mechanism.

use std::fmt;
use std::str::FromStr;

use crate::adaptive::{AdaptiveMechanism, HybridMechanism, RecomputeMechanism};
use crate::bounded::BoundedMechanism;
use crate::error::{invalid, Error, Result};
use crate::noise::NoiseSource;
use crate::stream::{Stream, StreamEntry, StreamState};

/// A mechanism that consumes one entry per time step and answers after each.
pub trait ContinualMechanism {
    fn horizon(&self) -> usize;

    /// Number of entries consumed so far.
    fn time(&self) -> usize;

    fn step(&mut self, entry: StreamEntry) -> Result<f64>;

    /// Feeds every entry of `x` and collects the answers.
    fn run(&mut self, x: &Stream) -> Result<Vec<f64>> {
        x.entries().iter().map(|&e| self.step(e)).collect()
    }

    /// Current flippancy estimate, for mechanisms that track one.
    fn w_max(&self) -> Option<u64> {
        None
    }
}

impl<M: ContinualMechanism + ?Sized> ContinualMechanism for Box<M> {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }
    fn time(&self) -> usize {
        (**self).time()
    }
    fn step(&mut self, entry: StreamEntry) -> Result<f64> {
        (**self).step(entry)
    }
    fn w_max(&self) -> Option<u64> {
        (**self).w_max()
    }
}

/// Exact, non-private distinct counter. The noiseless reference mechanism.
#[derive(Clone, Debug)]
pub struct ExactCounter {
    horizon: usize,
    state: StreamState,
}

impl ExactCounter {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            state: StreamState::new(),
        }
    }
}

impl ContinualMechanism for ExactCounter {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn time(&self) -> usize {
        self.state.time()
    }

    fn step(&mut self, entry: StreamEntry) -> Result<f64> {
        if self.state.time() >= self.horizon {
            return Err(Error::PastHorizon { horizon: self.horizon });
        }
        self.state.apply(entry);
        Ok(self.state.distinct() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MechanismKind {
    Exact,
    Bounded,
    Adaptive,
    Hybrid,
    Recompute,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 5] = [
        MechanismKind::Exact,
        MechanismKind::Bounded,
        MechanismKind::Adaptive,
        MechanismKind::Hybrid,
        MechanismKind::Recompute,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Exact => "exact",
            MechanismKind::Bounded => "bounded",
            MechanismKind::Adaptive => "adaptive",
            MechanismKind::Hybrid => "hybrid",
            MechanismKind::Recompute => "recompute",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid("mechanism", format!("unknown mechanism `{s}`")))
    }
}

/// Everything needed to instantiate a mechanism except the horizon and noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub rho: f64,
    /// Flippancy bound; required for `Bounded`.
    pub w: Option<u64>,
    /// Block length for `Recompute`; defaults to `ceil((T/rho)^(1/3))`.
    pub block: Option<usize>,
    /// Clamp bounded-mechanism outputs to `[0, |U_x|]`.
    pub clamp: bool,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, rho: f64) -> Self {
        Self {
            kind,
            rho,
            w: None,
            block: None,
            clamp: false,
        }
    }

    pub fn with_w(mut self, w: u64) -> Self {
        self.w = Some(w);
        self
    }

    pub fn with_block(mut self, block: usize) -> Self {
        self.block = Some(block);
        self
    }

    pub fn build(&self, horizon: usize, source: NoiseSource) -> Result<Box<dyn ContinualMechanism + Send>> {
        Ok(match self.kind {
            MechanismKind::Exact => Box::new(ExactCounter::new(horizon)),
            MechanismKind::Bounded => {
                let w = self.w.ok_or_else(|| invalid("w", "bounded mechanism needs a flippancy bound"))?;
                Box::new(BoundedMechanism::new(horizon, self.rho, w, source)?.with_clamp(self.clamp))
            }
            MechanismKind::Adaptive => Box::new(AdaptiveMechanism::new(horizon, self.rho, source)?),
            MechanismKind::Hybrid => Box::new(HybridMechanism::new(horizon, self.rho, source)?),
            MechanismKind::Recompute => Box::new(RecomputeMechanism::new(horizon, self.rho, self.block, source)?),
        })
    }
}
