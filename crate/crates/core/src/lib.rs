//! Differentially private continual release of the number of distinct
//! elements in turnstile streams.
//!
//! The central object is the flippancy of an element: how many times it
//! switches between present and absent. [`BoundedMechanism`] runs the
//! binary-tree mechanism on existence bits truncated at a flippancy bound
//! `w`; [`AdaptiveMechanism`] learns a good bound online with the sparse
//! vector technique. Both are item-level `rho`-zCDP and take one stream
//! entry per call through [`ContinualMechanism`].
//!
//! ```
//! use distinct_dp::{parse_stream, AdaptiveMechanism, ContinualMechanism, NoiseSource};
//!
//! let x = parse_stream(b"+ alice\n+ bob\n- alice\n_\n").unwrap();
//! let mut m = AdaptiveMechanism::new(x.len(), 1.0, NoiseSource::Seeded(7)).unwrap();
//! let estimates = m.run(&x).unwrap();
//! assert_eq!(estimates.len(), 4);
//! ```

pub mod accounting;
pub mod adaptive;
pub mod bounded;
pub mod error;
pub mod harness;
pub mod mechanism;
pub mod noise;
pub mod par;
pub mod reductions;
pub mod stream;
pub mod svt;

pub use accounting::{
    calibrate_alg1_rho, compose_zcdp, dp_to_zcdp_budget, group_privacy, zcdp_to_dp, PrivacyBudget,
};
pub use adaptive::{high_flippancy_count, AdaptiveMechanism, HybridMechanism, RecomputeMechanism, SvtQueryRecord};
pub use bounded::{check_sensitivity, level_sums, truncated_counts, BoundedMechanism, LevelSums, SensitivityCheck};
pub use error::{Error, Result};
pub use mechanism::{ContinualMechanism, ExactCounter, MechanismKind, MechanismSpec};
pub use noise::{dyadic_decomposition, sample_tree_noise, BinaryTreeNoise, Interval, NoiseSource};
pub use par::Execution;
pub use reductions::{
    build_inner_product_stream, build_marginals_stream, indicator_identity_check, inner_products_via_mechanism,
    marginals_via_mechanism, scale_stream_for_epsilon, BinaryDataset, QuerySet,
};
pub use stream::{
    count_distinct_exact, flippancy, make_neighbors, max_flippancy, parse_stream, validate_model, ElementId,
    ElementState, NeighborLevel, Stream, StreamBuilder, StreamEntry, StreamIndicator, StreamModel,
};
pub use svt::{svt_gamma, SvtAnswer, SvtState};
