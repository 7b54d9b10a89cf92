//! Binary-tree mechanism for a known flippancy bound `w`.
//!
//! Each element contributes its existence bit while its flippancy is at
//! most `w`; once the flippancy exceeds `w` the element is ignored for the
//! rest of the stream. The truncated count gets binary-tree noise with
//! per-node parameter `rho / (4 w (log2 T_pad + 1))`, which makes the
//! mechanism `rho`-zCDP at item level for every input stream.

use crate::accounting::{calibrate_alg1_rho, log2_levels};
use crate::error::{invalid, Error, Result};
use crate::mechanism::ContinualMechanism;
use crate::noise::{padded_horizon, BinaryTreeNoise, NoiseSource};
use crate::stream::{Stream, StreamEntry, StreamState};

#[derive(Clone, Debug)]
pub struct BoundedMechanism {
    horizon: usize,
    rho: f64,
    w: u64,
    state: StreamState,
    /// Truncated existence bit per element id.
    included: Vec<bool>,
    /// Sum of the truncated bits at the current time.
    truncated_count: u64,
    noise: BinaryTreeNoise,
    clamp: bool,
}

impl BoundedMechanism {
    pub fn new(horizon: usize, rho: f64, w: u64, source: NoiseSource) -> Result<Self> {
        let rho_node = calibrate_alg1_rho(rho, w, horizon)?;
        Ok(Self {
            horizon,
            rho,
            w,
            state: StreamState::new(),
            included: Vec::new(),
            truncated_count: 0,
            noise: BinaryTreeNoise::new(horizon, rho_node, source)?,
            clamp: false,
        })
    }

    /// Clamp outputs to `[0, |U_x|]`. Post-processing only.
    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn flippancy_bound(&self) -> u64 {
        self.w
    }

    pub fn rho_node(&self) -> f64 {
        self.noise.rho_node()
    }

    /// `sum_u f~_u[t]` at the current time, without noise.
    pub fn truncated_count(&self) -> u64 {
        self.truncated_count
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    /// Variance of the noise added at time `t`.
    pub fn noise_variance(&self, t: usize) -> f64 {
        self.noise.variance_at(t)
    }
}

impl ContinualMechanism for BoundedMechanism {
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
        // Only the touched element's bit can change, and its flippancy is
        // read after the count update at the same step.
        if let Some(u) = self.state.apply(entry) {
            let s = self.state.get(u).expect("just applied");
            let now = s.flippancy <= self.w && s.count > 0;
            if u.index() >= self.included.len() {
                self.included.resize(u.index() + 1, false);
            }
            let before = std::mem::replace(&mut self.included[u.index()], now);
            match (before, now) {
                (false, true) => self.truncated_count += 1,
                (true, false) => self.truncated_count -= 1,
                _ => {}
            }
        }
        let t = self.state.time();
        let estimate = self.truncated_count as f64 + self.noise.evaluate(t)?;
        Ok(if self.clamp {
            estimate.clamp(0.0, self.state.seen() as f64)
        } else {
            estimate
        })
    }
}

/// Noiseless truncated counts `F[1..=T]` under bound `w`.
pub fn truncated_counts(x: &Stream, w: u64) -> Result<Vec<u64>> {
    let mut m = BoundedMechanism::new(x.len(), 1.0, w, NoiseSource::Zeroed)?;
    x.entries()
        .iter()
        .map(|&e| {
            m.step(e)?;
            Ok(m.truncated_count())
        })
        .collect()
}

/// Per-level differences of the truncated count: `levels[l][i-1] =
/// F[i 2^l] - F[(i-1) 2^l]` for `i` in `1..=T_pad / 2^l`. The stream is
/// treated as padded with no-ops up to `T_pad`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSums {
    pub levels: Vec<Vec<i64>>,
}

impl LevelSums {
    pub fn squared_distance(&self, other: &LevelSums) -> Result<u64> {
        if self.levels.len() != other.levels.len() {
            return Err(Error::LengthMismatch {
                left: self.levels.len(),
                right: other.levels.len(),
            });
        }
        Ok(self
            .levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).unsigned_abs().pow(2)))
            .sum())
    }
}

pub fn level_sums(x: &Stream, w: u64) -> Result<LevelSums> {
    let f = truncated_counts(x, w)?;
    let padded = padded_horizon(x.len());
    let at = |t: usize| -> i64 {
        if t == 0 {
            0
        } else {
            f[t.min(f.len()) - 1] as i64
        }
    };
    let depth = padded.trailing_zeros();
    let levels = (0..=depth)
        .map(|l| {
            let size = 1usize << l;
            (1..=padded / size).map(|i| at(i * size) - at((i - 1) * size)).collect()
        })
        .collect();
    Ok(LevelSums { levels })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityCheck {
    pub squared_distance: u64,
    pub bound: u64,
    pub ok: bool,
}

/// Checks `||G - G'||_2^2 <= 8 w (log2 T_pad + 1)` for an item-neighbor pair.
pub fn check_sensitivity(x: &Stream, y: &Stream, w: u64) -> Result<SensitivityCheck> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if w == 0 {
        return Err(invalid("w", "flippancy bound must be at least 1"));
    }
    ensure_item_neighbors(x, y)?;
    let squared_distance = level_sums(x, w)?.squared_distance(&level_sums(y, w)?)?;
    let bound = 8 * w * log2_levels(x.len()) as u64;
    Ok(SensitivityCheck {
        squared_distance,
        bound,
        ok: squared_distance <= bound,
    })
}

/// Streams are item-neighbors if every differing position is a no-op in one
/// stream and an entry of the same element `u` in the other.
pub fn ensure_item_neighbors(x: &Stream, y: &Stream) -> Result<()> {
    let mut owner: Option<(usize, String)> = None;
    for (i, (&a, &b)) in x.entries().iter().zip(y.entries()).enumerate() {
        let name_a = a.element().map(|u| x.element_name(u));
        let name_b = b.element().map(|u| y.element_name(u));
        let same = match (a, b) {
            (StreamEntry::Insert(_), StreamEntry::Insert(_)) | (StreamEntry::Delete(_), StreamEntry::Delete(_)) => {
                name_a == name_b
            }
            (StreamEntry::NoOp, StreamEntry::NoOp) => true,
            _ => false,
        };
        if same {
            continue;
        }
        let name = match (name_a, name_b) {
            (Some(n), None) | (None, Some(n)) => n,
            _ => return Err(Error::NotItemNeighbors { first: i, second: i }),
        };
        match &owner {
            None => owner = Some((i, name.to_owned())),
            Some((first, u)) if u != name => return Err(Error::NotItemNeighbors { first: *first, second: i }),
            Some(_) => {}
        }
    }
    Ok(())
}
