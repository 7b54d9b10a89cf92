//! Synthetic workloads, error measurement and experiment drivers.

pub mod attack;
pub mod generate;
pub mod measure;
pub mod sweep;

pub use attack::{attack_csv, run_attack, AttackKind, AttackRow, AttackTrial};
pub use generate::{generate, GeneratorModel, GeneratorSpec};
pub use measure::{fmt_sig, measure_error, percentile, EstimateTrace, TraceRow};
pub use sweep::{bench_sweep, sweep_csv, SweepConfig, SweepRow};
