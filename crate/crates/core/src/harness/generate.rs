//! Seeded synthetic stream generators.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::stream::{Stream, StreamBuilder, StreamEntry, StreamModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorModel {
    /// Uniformly random element, insertion or deletion with equal odds, 10% no-ops.
    UniformTurnstile,
    /// Random element toggled: deleted when present, inserted when absent.
    LikesRandom,
    /// Elements alternate `+u, -u, ...` until each has the target flippancy.
    AdversarialFlip,
    /// Repeated phases inserting a random batch of elements then deleting it.
    PhaseBatch,
}

impl GeneratorModel {
    pub const ALL: [GeneratorModel; 4] = [
        GeneratorModel::UniformTurnstile,
        GeneratorModel::LikesRandom,
        GeneratorModel::AdversarialFlip,
        GeneratorModel::PhaseBatch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneratorModel::UniformTurnstile => "uniform-turnstile",
            GeneratorModel::LikesRandom => "likes-random",
            GeneratorModel::AdversarialFlip => "adversarial-flip",
            GeneratorModel::PhaseBatch => "phase-batch",
        }
    }

    /// The validity rule every generated stream satisfies.
    pub fn declared_model(self) -> StreamModel {
        match self {
            GeneratorModel::UniformTurnstile => StreamModel::General,
            _ => StreamModel::Likes,
        }
    }
}

impl fmt::Display for GeneratorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GeneratorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| invalid("model", format!("unknown generator `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub model: GeneratorModel,
    pub horizon: usize,
    pub universe: usize,
    /// Target maximum flippancy, adversarial-flip only.
    pub flippancy: Option<u64>,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(model: GeneratorModel, horizon: usize, universe: usize, seed: u64) -> Self {
        Self {
            model,
            horizon,
            universe,
            flippancy: None,
            seed,
        }
    }

    pub fn adversarial(horizon: usize, universe: usize, w: u64, seed: u64) -> Self {
        Self {
            model: GeneratorModel::AdversarialFlip,
            horizon,
            universe,
            flippancy: Some(w),
            seed,
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Stream> {
    if spec.horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    if spec.universe == 0 {
        return Err(invalid("universe", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = StreamBuilder::new();
    let ids: Vec<_> = (0..spec.universe).map(|i| b.intern(&format!("u{i}"))).collect();
    match spec.model {
        GeneratorModel::UniformTurnstile => {
            for _ in 0..spec.horizon {
                if rng.random_bool(0.1) {
                    b.noop();
                    continue;
                }
                let u = ids[rng.random_range(0..ids.len())];
                b.push(if rng.random_bool(0.5) {
                    StreamEntry::Insert(u)
                } else {
                    StreamEntry::Delete(u)
                });
            }
        }
        GeneratorModel::LikesRandom => {
            let mut present = vec![false; ids.len()];
            for _ in 0..spec.horizon {
                if rng.random_bool(0.1) {
                    b.noop();
                    continue;
                }
                let i = rng.random_range(0..ids.len());
                b.push(if present[i] {
                    StreamEntry::Delete(ids[i])
                } else {
                    StreamEntry::Insert(ids[i])
                });
                present[i] = !present[i];
            }
        }
        GeneratorModel::AdversarialFlip => {
            let w = spec
                .flippancy
                .ok_or_else(|| invalid("flippancy", "adversarial-flip needs a target flippancy"))?;
            adversarial_flip(&mut b, &ids, spec.horizon, w)?;
        }
        GeneratorModel::PhaseBatch => {
            while b.len() < spec.horizon {
                let batch: Vec<_> = ids.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                for &u in &batch {
                    b.push(StreamEntry::Insert(u));
                }
                for &u in &batch {
                    b.push(StreamEntry::Delete(u));
                }
                if batch.is_empty() {
                    b.noop();
                }
            }
        }
    }
    let mut x = b.build()?;
    if x.len() > spec.horizon {
        x = x.with_entries(x.prefix(spec.horizon).to_vec())?;
    }
    Ok(x)
}

/// Round-robin alternating blocks. The element at `t = 1` needs `w + 1`
/// entries for `w` flips, every later element needs `w`. As many elements as
/// fit in the horizon (and the universe) are used; the rest is no-ops.
fn adversarial_flip(b: &mut StreamBuilder, ids: &[crate::stream::ElementId], horizon: usize, w: u64) -> Result<()> {
    if w == 0 || w as usize >= horizon {
        return Err(invalid(
            "flippancy",
            format!("target {w} is unreachable within horizon {horizon} (need 1 <= w < T)"),
        ));
    }
    let w = w as usize;
    let active = ((horizon - 1) / w).min(ids.len()).max(1);
    let entry = |u, round: usize| {
        if round.is_multiple_of(2) {
            StreamEntry::Insert(u)
        } else {
            StreamEntry::Delete(u)
        }
    };
    for round in 0..w {
        for &u in &ids[..active] {
            b.push(entry(u, round));
        }
    }
    b.push(entry(ids[0], w));
    while b.len() < horizon {
        b.noop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{max_flippancy, validate_model};

    #[test]
    fn adversarial_single_element() {
        let x = generate(&GeneratorSpec::adversarial(8, 1, 7, 0)).unwrap();
        assert_eq!(x.to_text(), "+ u0\n- u0\n+ u0\n- u0\n+ u0\n- u0\n+ u0\n- u0\n");
        assert_eq!(max_flippancy(&x), 7);
    }

    #[test]
    fn adversarial_hits_target_for_many_shapes() {
        for (t, m, w) in [(64, 4, 3), (4096, 64, 128), (4096, 64, 2), (100, 1000, 9), (10, 1, 1)] {
            let x = generate(&GeneratorSpec::adversarial(t, m, w, 1)).unwrap();
            assert_eq!(x.len(), t);
            let got = max_flippancy(&x);
            assert!(got <= w && 2 * got >= w, "{t} {m} {w}: {got}");
            assert!(validate_model(&x, StreamModel::Likes).is_ok());
        }
    }

    #[test]
    fn unsatisfiable_specs() {
        assert!(generate(&GeneratorSpec::adversarial(8, 1, 8, 0)).is_err());
        assert!(generate(&GeneratorSpec::adversarial(8, 1, 0, 0)).is_err());
        assert!(generate(&GeneratorSpec::new(GeneratorModel::UniformTurnstile, 0, 4, 0)).is_err());
        assert!(generate(&GeneratorSpec::new(GeneratorModel::AdversarialFlip, 8, 4, 0)).is_err());
    }

    #[test]
    fn generators_respect_declared_model_and_seed() {
        for model in GeneratorModel::ALL {
            let mut spec = GeneratorSpec::new(model, 300, 12, 42);
            spec.flippancy = Some(5);
            let x = generate(&spec).unwrap();
            assert_eq!(x.len(), 300);
            assert!(validate_model(&x, model.declared_model()).is_ok(), "{model}");
            assert_eq!(generate(&spec).unwrap(), x);
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in GeneratorModel::ALL {
            assert_eq!(m.as_str().parse::<GeneratorModel>().unwrap(), m);
        }
    }
}
