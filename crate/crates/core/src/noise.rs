//! Seedable Gaussian and Laplace sampling and the binary-tree noise vector.
//!
//! Samplers are continuous double-precision; they are not hardened against
//! floating-point side channels.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Result};

/// Where noise comes from. `Zeroed` makes every draw exactly 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseSource {
    Seeded(u64),
    Zeroed,
}

impl NoiseSource {
    /// Independent child source for a labelled sub-component.
    pub fn split(self, label: u64) -> NoiseSource {
        match self {
            NoiseSource::Seeded(seed) => NoiseSource::Seeded(mix(seed ^ mix(label.wrapping_add(0x632b_e59b_d9b4_e019)))),
            NoiseSource::Zeroed => NoiseSource::Zeroed,
        }
    }

    pub fn sampler(self) -> Sampler {
        match self {
            NoiseSource::Seeded(seed) => Sampler {
                rng: Some(ChaCha12Rng::seed_from_u64(seed)),
            },
            NoiseSource::Zeroed => Sampler { rng: None },
        }
    }

    pub fn is_zeroed(self) -> bool {
        self == NoiseSource::Zeroed
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Single-owner sampler.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: Option<ChaCha12Rng>,
}

impl Sampler {
    /// `N(0, sigma^2)`.
    pub fn gaussian(&mut self, sigma: f64) -> f64 {
        match &mut self.rng {
            Some(rng) => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            None => 0.0,
        }
    }

    /// `Lap(scale)`: density `exp(-|x|/scale) / (2 scale)`.
    pub fn laplace(&mut self, scale: f64) -> f64 {
        match &mut self.rng {
            Some(rng) => {
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                scale * (a - b)
            }
            None => 0.0,
        }
    }

    pub fn uniform(&mut self) -> f64 {
        match &mut self.rng {
            Some(rng) => rng.random(),
            None => 0.0,
        }
    }
}

/// A half-open interval `(start, end]` of time steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn len(self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(self) -> bool {
        self.end == self.start
    }

    /// Tree level (`log2` of the length) of a dyadic interval.
    pub fn level(self) -> u32 {
        self.len().trailing_zeros()
    }
}

/// Splits `(0, t]` into intervals whose lengths are the powers of two in
/// the binary expansion of `t`, largest first.
pub fn dyadic_decomposition(t: usize) -> Result<Vec<Interval>> {
    if t == 0 {
        return Err(invalid("t", "dyadic decomposition needs t >= 1"));
    }
    let mut out = Vec::with_capacity(t.count_ones() as usize);
    let mut start = 0;
    for bit in (0..usize::BITS).rev() {
        let size = 1usize << bit;
        if t & size != 0 {
            out.push(Interval {
                start,
                end: start + size,
            });
            start += size;
        }
    }
    Ok(out)
}

/// Smallest power of two `>= t`.
pub fn padded_horizon(t: usize) -> usize {
    t.max(1).next_power_of_two()
}

/// The binary-tree noise vector `Z`: one `N(0, 1/rho_node)` per node of a
/// complete binary tree over `T_pad` leaves, with `Z[t]` the sum over the
/// dyadic decomposition of `(0, t]`.
///
/// Node values are derived from the seed and the node's position, so they
/// can be sampled lazily on first touch without depending on touch order.
#[derive(Clone, Debug)]
pub struct BinaryTreeNoise {
    horizon: usize,
    padded: usize,
    rho_node: f64,
    sigma: f64,
    source: NoiseSource,
    nodes: HashMap<(u32, usize), f64>,
}

impl BinaryTreeNoise {
    pub fn new(horizon: usize, rho_node: f64, source: NoiseSource) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(rho_node > 0.0 && rho_node.is_finite()) {
            return Err(invalid("rho_node", format!("must be positive and finite, got {rho_node}")));
        }
        Ok(Self {
            horizon,
            padded: padded_horizon(horizon),
            rho_node,
            sigma: (1.0 / rho_node).sqrt(),
            source,
            nodes: HashMap::new(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn padded_horizon(&self) -> usize {
        self.padded
    }

    /// Number of tree levels, `log2(T_pad) + 1`.
    pub fn depth(&self) -> u32 {
        self.padded.trailing_zeros() + 1
    }

    pub fn rho_node(&self) -> f64 {
        self.rho_node
    }

    /// Nodes drawn so far.
    pub fn touched(&self) -> usize {
        self.nodes.len()
    }

    /// Value of the node `((index-1) 2^level, index 2^level]`.
    pub fn node(&mut self, level: u32, index: usize) -> f64 {
        let (source, sigma) = (self.source, self.sigma);
        *self.nodes.entry((level, index)).or_insert_with(|| {
            let label = ((level as u64) << 48) | index as u64;
            source.split(label).sampler().gaussian(sigma)
        })
    }

    /// `Z[t]` for `1 <= t <= T`.
    pub fn evaluate(&mut self, t: usize) -> Result<f64> {
        if t == 0 || t > self.horizon {
            return Err(invalid("t", format!("must lie in [1, {}], got {t}", self.horizon)));
        }
        let mut z = 0.0;
        for iv in dyadic_decomposition(t)? {
            let level = iv.level();
            z += self.node(level, iv.end >> level);
        }
        Ok(z)
    }

    /// `Var(Z[t]) = |dyadic_decomposition(t)| / rho_node`.
    pub fn variance_at(&self, t: usize) -> f64 {
        t.count_ones() as f64 / self.rho_node
    }
}

/// Fresh tree noise for horizon `T` with per-node parameter `rho_node`.
pub fn sample_tree_noise(horizon: usize, rho_node: f64, source: NoiseSource) -> Result<BinaryTreeNoise> {
    BinaryTreeNoise::new(horizon, rho_node, source)
}
