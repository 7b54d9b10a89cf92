//! Repeated batch-reduction trials on random datasets.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::harness::measure::{fmt_sig, measure_error};
use crate::mechanism::{MechanismKind, MechanismSpec};
use crate::noise::NoiseSource;
use crate::par::{map_indexed, Execution};
use crate::reductions::{
    build_inner_product_stream, build_marginals_stream, inner_products_via_mechanism, marginals_via_mechanism,
    BinaryDataset, QuerySet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackKind {
    /// `n` records, `k` random queries.
    InnerProduct { n: usize, k: usize },
    /// `n` records with `d` attributes.
    Marginals { n: usize, d: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackRow {
    pub trial: usize,
    /// 1-based query or attribute index.
    pub j: usize,
    pub truth: f64,
    pub estimate: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackTrial {
    pub rows: Vec<AttackRow>,
    /// l-infinity error of the mechanism on the constructed stream.
    pub trace_linf: f64,
}

impl AttackTrial {
    pub fn max_batch_error(&self) -> f64 {
        self.rows.iter().map(|r| r.abs_error).fold(0.0, f64::max)
    }
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| rng.random_range(0..=1u8)).collect()
}

/// Runs `trials` independent trials. Trial `i` draws its dataset and
/// queries from `seed + i` and its mechanism noise from a split of the same
/// seed. A bounded mechanism without `w` gets the construction's flippancy
/// bound (`2k` or `2d`).
pub fn run_attack(
    kind: AttackKind,
    mechanism: MechanismSpec,
    trials: usize,
    seed: u64,
    zeroed: bool,
    exec: Execution,
) -> Result<Vec<AttackTrial>> {
    let (n, width) = match kind {
        AttackKind::InnerProduct { n, k } => (n, k),
        AttackKind::Marginals { n, d } => (n, d),
    };
    if n == 0 || width == 0 {
        return Err(invalid("attack", "dimensions must be at least 1"));
    }
    let mechanism = match (mechanism.kind, mechanism.w) {
        (MechanismKind::Bounded, None) => mechanism.with_w(2 * width as u64),
        _ => mechanism,
    };
    map_indexed(trials, exec, |trial| {
        let trial_seed = seed.wrapping_add(trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let source = if zeroed {
            NoiseSource::Zeroed
        } else {
            NoiseSource::Seeded(trial_seed).split(0xa77ac)
        };
        match kind {
            AttackKind::InnerProduct { n, k } => {
                let y = BinaryDataset::column(&random_bits(&mut rng, n))?;
                let queries = QuerySet::from_bits(&(0..k).map(|_| random_bits(&mut rng, n)).collect::<Vec<_>>())?;
                let x = build_inner_product_stream(&y, &queries)?;
                let mut m = mechanism.build(x.len(), source)?;
                let run = inner_products_via_mechanism(&y, &queries, &mut m)?;
                let truth = queries.inner_products(&y);
                Ok(AttackTrial {
                    rows: rows(trial, truth.iter().map(|&v| v as f64), &run.estimates),
                    trace_linf: measure_error(&x, &run.answers)?.linf,
                })
            }
            AttackKind::Marginals { n, d } => {
                let bits: Vec<Vec<u8>> = (0..n).map(|_| random_bits(&mut rng, d)).collect();
                let y = BinaryDataset::from_rows(&bits)?;
                let x = build_marginals_stream(&y)?;
                let mut m = mechanism.build(x.len(), source)?;
                let run = marginals_via_mechanism(&y, &mut m)?;
                Ok(AttackTrial {
                    rows: rows(trial, y.marginals().into_iter(), &run.estimates),
                    trace_linf: measure_error(&x, &run.answers)?.linf,
                })
            }
        }
    })
    .into_iter()
    .collect()
}

fn rows(trial: usize, truth: impl Iterator<Item = f64>, estimates: &[f64]) -> Vec<AttackRow> {
    truth
        .zip(estimates)
        .enumerate()
        .map(|(j, (truth, &estimate))| AttackRow {
            trial,
            j: j + 1,
            truth,
            estimate,
            abs_error: (truth - estimate).abs(),
        })
        .collect()
}

pub fn attack_csv(trials: &[AttackTrial]) -> String {
    let mut out = String::from("trial,j,truth,estimate,abs_error\n");
    for r in trials.iter().flat_map(|t| &t.rows) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.trial,
            r.j,
            fmt_sig(r.truth),
            fmt_sig(r.estimate),
            fmt_sig(r.abs_error)
        );
    }
    out
}
