//! Mechanisms that do not need the flippancy bound up front.
//!
//! [`AdaptiveMechanism`] runs one [`BoundedMechanism`] per power-of-two
//! bound `2^0 ..= T_pad` and uses the sparse vector technique on the number
//! of high-flippancy elements to decide which one to report.
//! [`RecomputeMechanism`] is a block-recompute baseline for sensitivity-1
//! functions, and [`HybridMechanism`] swaps the top of the bound ladder for
//! it.

use crate::accounting::{compose_zcdp, gaussian_sigma_for_rho};
use crate::bounded::BoundedMechanism;
use crate::error::{invalid, Error, Result};
use crate::mechanism::ContinualMechanism;
use crate::noise::{padded_horizon, NoiseSource, Sampler};
use crate::stream::{StreamEntry, StreamState};
use crate::svt::{SvtAnswer, SvtState};

const SVT_LABEL: u64 = 0x5356_5400;
const RECOMPUTE_LABEL: u64 = 0x5245_4300;

/// Number of elements whose flippancy so far is at least `threshold`.
/// Changes by at most one between item-neighboring streams.
pub fn high_flippancy_count(state: &StreamState, threshold: u64) -> usize {
    state.count_flippancy_at_least(threshold)
}

/// One sparse-vector query issued while choosing the flippancy estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SvtQueryRecord {
    pub t: usize,
    pub w_max: u64,
    pub high_count: usize,
    pub value: f64,
    pub answer: SvtAnswer,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(invalid("rho", format!("must be positive and finite, got {rho}")))
    }
}

/// Shared doubling logic: queries the SVT until it answers `Below`,
/// doubling `w_max` (capped at `cap`) on each `Above`. Returns early with
/// `true` as soon as `w_max` would pass `switch_above`.
#[allow(clippy::too_many_arguments)]
fn escalate(
    svt: &mut SvtState,
    state: &StreamState,
    rho: f64,
    w_max: &mut u64,
    cap: u64,
    switch_above: Option<u64>,
    trace: &mut Option<Vec<SvtQueryRecord>>,
) -> bool {
    loop {
        let high_count = high_flippancy_count(state, *w_max);
        let value = high_count as f64 - (*w_max as f64 / rho).sqrt();
        let answer = svt.query(value);
        if let Some(trace) = trace {
            trace.push(SvtQueryRecord {
                t: state.time(),
                w_max: *w_max,
                high_count,
                value,
                answer,
            });
        }
        if answer == SvtAnswer::Below {
            return false;
        }
        if switch_above.is_some_and(|top| *w_max * 2 > top) {
            *w_max *= 2;
            return true;
        }
        *w_max = (*w_max * 2).min(cap);
    }
}

#[derive(Clone, Debug)]
pub struct AdaptiveMechanism {
    horizon: usize,
    rho: f64,
    padded: u64,
    instances: Vec<BoundedMechanism>,
    svt: SvtState,
    w_max: u64,
    state: StreamState,
    trace: Option<Vec<SvtQueryRecord>>,
}

impl AdaptiveMechanism {
    pub fn new(horizon: usize, rho: f64, source: NoiseSource) -> Result<Self> {
        check_rho(rho)?;
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let padded = padded_horizon(horizon);
        let levels = padded.trailing_zeros();
        let share = rho / (2.0 * (levels + 1) as f64);
        let instances = (0..=levels)
            .map(|i| BoundedMechanism::new(horizon, share, 1 << i, source.split(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        // A single-step horizon has log T = 0; one Above is still allowed so
        // the SVT is well defined, and the cap keeps w_max at 1.
        let svt = SvtState::new(rho / 2.0, levels.max(1), source.split(SVT_LABEL))?;
        Ok(Self {
            horizon,
            rho,
            padded: padded as u64,
            instances,
            svt,
            w_max: 1,
            state: StreamState::new(),
            trace: None,
        })
    }

    /// Record every sparse-vector query from now on.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<SvtQueryRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn instances(&self) -> &[BoundedMechanism] {
        &self.instances
    }

    pub fn svt(&self) -> &SvtState {
        &self.svt
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    /// zCDP budgets of every sub-mechanism.
    pub fn budget_shares(&self) -> Vec<f64> {
        self.instances
            .iter()
            .map(BoundedMechanism::rho)
            .chain(std::iter::once(self.svt.rho()))
            .collect()
    }

    pub fn composed_budget(&self) -> Result<f64> {
        compose_zcdp(&self.budget_shares())
    }
}

impl ContinualMechanism for AdaptiveMechanism {
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
        let outputs = self
            .instances
            .iter_mut()
            .map(|b| b.step(entry))
            .collect::<Result<Vec<_>>>()?;
        escalate(
            &mut self.svt,
            &self.state,
            self.rho,
            &mut self.w_max,
            self.padded,
            None,
            &mut self.trace,
        );
        Ok(outputs[self.w_max.trailing_zeros() as usize])
    }

    fn w_max(&self) -> Option<u64> {
        Some(self.w_max)
    }
}

/// Recomputes the exact count with fresh Gaussian noise every `block`
/// steps and repeats the last release in between.
///
/// The per-release budget is `rho / ceil(T / block)` so that all releases
/// compose to `rho`. With the default block `ceil((T/rho)^(1/3))` the error
/// is about `block + sqrt(T / (block rho))`, i.e. `(T/rho)^(1/3)` up to
/// logarithmic factors.
#[derive(Clone, Debug)]
pub struct RecomputeMechanism {
    horizon: usize,
    rho: f64,
    block: usize,
    releases: usize,
    sigma: f64,
    state: StreamState,
    last: f64,
    sampler: Sampler,
}

impl RecomputeMechanism {
    pub fn new(horizon: usize, rho: f64, block: Option<usize>, source: NoiseSource) -> Result<Self> {
        check_rho(rho)?;
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let block = match block {
            Some(0) => return Err(invalid("block", "must be at least 1")),
            Some(b) => b.min(horizon),
            None => Self::default_block(horizon, rho),
        };
        let releases = horizon.div_ceil(block);
        let sigma = gaussian_sigma_for_rho(1.0, rho / releases as f64)?;
        Ok(Self {
            horizon,
            rho,
            block,
            releases,
            sigma,
            state: StreamState::new(),
            last: 0.0,
            sampler: source.split(RECOMPUTE_LABEL).sampler(),
        })
    }

    pub fn default_block(horizon: usize, rho: f64) -> usize {
        ((horizon as f64 / rho).cbrt().ceil() as usize).clamp(1, horizon.max(1))
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn budget_shares(&self) -> Vec<f64> {
        vec![self.rho / self.releases as f64; self.releases]
    }
}

impl ContinualMechanism for RecomputeMechanism {
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
        if (self.state.time() - 1).is_multiple_of(self.block) {
            self.last = self.state.distinct() as f64 + self.sampler.gaussian(self.sigma);
        }
        Ok(self.last)
    }
}

/// Bounded instances for `2^0 ..= 2^k` plus one recompute instance, with
/// `2^k ~ min(rho^(1/3) T^(2/3), T)`. Once the flippancy estimate would pass
/// `2^k` the output switches to the recompute instance for good.
#[derive(Clone, Debug)]
pub struct HybridMechanism {
    horizon: usize,
    rho: f64,
    top: u64,
    instances: Vec<BoundedMechanism>,
    recompute: RecomputeMechanism,
    svt: SvtState,
    w_max: u64,
    switched: bool,
    state: StreamState,
    trace: Option<Vec<SvtQueryRecord>>,
}

impl HybridMechanism {
    pub fn new(horizon: usize, rho: f64, source: NoiseSource) -> Result<Self> {
        check_rho(rho)?;
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        let k = Self::top_level(horizon, rho);
        let share = rho / (2.0 * (k + 2) as f64);
        let instances = (0..=k)
            .map(|i| BoundedMechanism::new(horizon, share, 1 << i, source.split(i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let recompute = RecomputeMechanism::new(horizon, share, None, source)?;
        let svt = SvtState::new(rho / 2.0, k + 1, source.split(SVT_LABEL))?;
        Ok(Self {
            horizon,
            rho,
            top: 1 << k,
            instances,
            recompute,
            svt,
            w_max: 1,
            switched: false,
            state: StreamState::new(),
            trace: None,
        })
    }

    /// `k = ceil(log2 min(rho^(1/3) T^(2/3), T))`, clamped to `[0, log2 T_pad]`.
    pub fn top_level(horizon: usize, rho: f64) -> u32 {
        let levels = padded_horizon(horizon).trailing_zeros();
        let t = horizon as f64;
        let threshold = (rho.cbrt() * t.powf(2.0 / 3.0)).min(t).max(1.0);
        // Tolerate rounding in the fractional power, e.g. 4096^(2/3) = 256.
        ((threshold.log2() - 1e-9).ceil() as u32).min(levels)
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<SvtQueryRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Largest flippancy bound served by a bounded instance.
    pub fn top_bound(&self) -> u64 {
        self.top
    }

    pub fn using_recompute(&self) -> bool {
        self.switched
    }

    pub fn budget_shares(&self) -> Vec<f64> {
        self.instances
            .iter()
            .map(BoundedMechanism::rho)
            .chain([self.recompute.rho, self.svt.rho()])
            .collect()
    }

    pub fn composed_budget(&self) -> Result<f64> {
        compose_zcdp(&self.budget_shares())
    }
}

impl ContinualMechanism for HybridMechanism {
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
        let outputs = self
            .instances
            .iter_mut()
            .map(|b| b.step(entry))
            .collect::<Result<Vec<_>>>()?;
        let fallback = self.recompute.step(entry)?;
        if !self.switched {
            self.switched = escalate(
                &mut self.svt,
                &self.state,
                self.rho,
                &mut self.w_max,
                self.top,
                Some(self.top),
                &mut self.trace,
            );
        }
        Ok(if self.switched {
            fallback
        } else {
            outputs[self.w_max.trailing_zeros() as usize]
        })
    }

    fn w_max(&self) -> Option<u64> {
        Some(self.w_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{count_distinct_exact, parse_stream, Stream, StreamBuilder};

    fn s(text: &str) -> Stream {
        parse_stream(text.as_bytes()).unwrap()
    }

    fn run_with_w_max<M: ContinualMechanism>(m: &mut M, x: &Stream) -> (Vec<f64>, Vec<u64>) {
        x.entries()
            .iter()
            .map(|&e| (m.step(e).unwrap(), m.w_max().unwrap()))
            .unzip()
    }

    #[test]
    fn adaptive_zero_noise_trace() {
        let x = s("+ a\n+ b\n- a\n");
        let mut m = AdaptiveMechanism::new(3, 1.0, NoiseSource::Zeroed).unwrap().with_trace();
        let (out, w) = run_with_w_max(&mut m, &x);
        assert_eq!(out, vec![1.0, 2.0, 1.0]);
        // b enters at t = 2, its first flip: 1 - sqrt(1) = 0 >= 0 doubles w_max
        assert_eq!(w, vec![1, 2, 2]);
        let trace = m.take_trace();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace[1].answer, SvtAnswer::Above);
        assert_eq!(trace[1].value, 0.0);
    }

    #[test]
    fn adaptive_all_noop_stays_at_one() {
        let x = Stream::noops(16).unwrap();
        let mut m = AdaptiveMechanism::new(16, 1.0, NoiseSource::Zeroed).unwrap();
        let (out, w) = run_with_w_max(&mut m, &x);
        assert!(out.iter().all(|&v| v == 0.0));
        assert!(w.iter().all(|&v| v == 1));
    }

    #[test]
    fn adaptive_single_high_flip_element() {
        let mut b = StreamBuilder::new();
        for i in 0..17 {
            if i % 2 == 0 {
                b.insert("a");
            } else {
                b.delete("a");
            }
        }
        let x = b.build().unwrap();
        let mut m = AdaptiveMechanism::new(x.len(), 1.0, NoiseSource::Zeroed).unwrap();
        let (_, w) = run_with_w_max(&mut m, &x);
        // one element with 16 flips: 1 - sqrt(w) >= 0 only at w = 1
        assert_eq!(*w.last().unwrap(), 2);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn adaptive_budget_ledger() {
        for (t, rho) in [(256, 0.1), (4096, 1.0), (1, 1.0), (1000, 0.37)] {
            let m = AdaptiveMechanism::new(t, rho, NoiseSource::Zeroed).unwrap();
            let total = m.composed_budget().unwrap();
            assert!(((total - rho) / rho).abs() < 1e-12, "{t} {rho} {total}");
        }
    }

    #[test]
    fn high_flippancy_count_examples() {
        let mut st = StreamState::new();
        assert_eq!(high_flippancy_count(&st, 1), 0);
        for &e in s("+ a\n- a\n+ a\n+ b\n").entries() {
            st.apply(e);
        }
        assert_eq!(high_flippancy_count(&st, 2), 1);
        assert_eq!(high_flippancy_count(&st, 0), 2);
    }

    #[test]
    fn recompute_examples() {
        let x = s("+ a\n+ b\n- a\n_\n+ c\n");
        let mut m = RecomputeMechanism::new(x.len(), 1.0, Some(1), NoiseSource::Zeroed).unwrap();
        let exact: Vec<f64> = count_distinct_exact(&x).into_iter().map(|c| c as f64).collect();
        assert_eq!(m.run(&x).unwrap(), exact);

        let x = s("+ a\n+ b\n");
        let mut m = RecomputeMechanism::new(2, 1.0, Some(2), NoiseSource::Zeroed).unwrap();
        assert_eq!(m.run(&x).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn recompute_budget_and_block() {
        let m = RecomputeMechanism::new(1000, 1.0, None, NoiseSource::Zeroed).unwrap();
        assert_eq!(m.block(), 10);
        let total: f64 = compose_zcdp(&m.budget_shares()).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        // 100 releases at rho/100 each: sigma = 1 / sqrt(2 / 100)
        assert!((m.sigma() - 50f64.sqrt()).abs() < 1e-12);
        assert!(RecomputeMechanism::new(10, 1.0, Some(0), NoiseSource::Zeroed).is_err());
    }

    #[test]
    fn hybrid_top_level() {
        // rho^(1/3) T^(2/3) = 256 for T = 4096, rho = 1
        assert_eq!(HybridMechanism::top_level(4096, 1.0), 8);
        assert_eq!(HybridMechanism::top_level(8, 1.0), 2);
        assert_eq!(HybridMechanism::top_level(1, 1.0), 0);
        // rho large enough that T is the minimum
        assert_eq!(HybridMechanism::top_level(64, 1e6), 6);
    }

    #[test]
    fn hybrid_budget_ledger() {
        for (t, rho) in [(256, 0.1), (4096, 1.0), (7, 2.0)] {
            let m = HybridMechanism::new(t, rho, NoiseSource::Zeroed).unwrap();
            let total = m.composed_budget().unwrap();
            assert!(((total - rho) / rho).abs() < 1e-12);
        }
    }

    #[test]
    fn hybrid_all_noop_is_zero() {
        let x = Stream::noops(32).unwrap();
        let mut m = HybridMechanism::new(32, 1.0, NoiseSource::Zeroed).unwrap();
        assert!(m.run(&x).unwrap().iter().all(|&v| v == 0.0));
        assert!(!m.using_recompute());
    }

    #[test]
    fn past_horizon_errors() {
        let mut a = AdaptiveMechanism::new(1, 1.0, NoiseSource::Zeroed).unwrap();
        a.step(StreamEntry::NoOp).unwrap();
        assert!(a.step(StreamEntry::NoOp).is_err());
        let mut h = HybridMechanism::new(1, 1.0, NoiseSource::Zeroed).unwrap();
        h.step(StreamEntry::NoOp).unwrap();
        assert!(h.step(StreamEntry::NoOp).is_err());
        let mut r = RecomputeMechanism::new(1, 1.0, None, NoiseSource::Zeroed).unwrap();
        r.step(StreamEntry::NoOp).unwrap();
        assert!(r.step(StreamEntry::NoOp).is_err());
    }
}
