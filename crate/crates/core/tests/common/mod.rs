//! Brute-force reference implementations, deliberately written without
//! reusing any library internals beyond the stream container.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use distinct_dp::{Stream, StreamBuilder, StreamEntry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Ins(u8),
    Del(u8),
    Nop,
}

pub fn name(u: u8) -> String {
    format!("e{u}")
}

pub fn to_stream(ops: &[Op]) -> Stream {
    let mut b = StreamBuilder::new();
    for &op in ops {
        match op {
            Op::Ins(u) => b.insert(&name(u)),
            Op::Del(u) => b.delete(&name(u)),
            Op::Nop => b.noop(),
        };
    }
    b.build().unwrap()
}

pub fn random_ops(rng: &mut ChaCha8Rng, len: usize, universe: u8) -> Vec<Op> {
    (0..len)
        .map(|_| match rng.random_range(0..5) {
            0 => Op::Nop,
            1 | 2 => Op::Ins(rng.random_range(0..universe)),
            _ => Op::Del(rng.random_range(0..universe)),
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entry list keyed by element name.
pub fn named(x: &Stream) -> Vec<Option<(String, i64)>> {
    x.entries()
        .iter()
        .map(|&e| match e {
            StreamEntry::Insert(u) => Some((x.element_name(u).to_owned(), 1)),
            StreamEntry::Delete(u) => Some((x.element_name(u).to_owned(), -1)),
            StreamEntry::NoOp => None,
        })
        .collect()
}

/// Number of elements with positive count after each prefix, recomputed
/// from scratch at every step.
pub fn distinct_counts(x: &Stream) -> Vec<u64> {
    let entries = named(x);
    (1..=entries.len())
        .map(|t| {
            let mut counts: BTreeMap<&str, i64> = BTreeMap::new();
            for (n, d) in entries[..t].iter().flatten() {
                *counts.entry(n.as_str()).or_default() += d;
            }
            counts.values().filter(|&&c| c > 0).count() as u64
        })
        .collect()
}

pub fn names(x: &Stream) -> BTreeSet<String> {
    named(x).into_iter().flatten().map(|(n, _)| n).collect()
}

/// Existence bit of `u` after every prefix.
pub fn existence(x: &Stream, u: &str) -> Vec<bool> {
    let mut c = 0i64;
    named(x)
        .into_iter()
        .map(|e| {
            if let Some((n, d)) = e {
                if n == u {
                    c += d;
                }
            }
            c > 0
        })
        .collect()
}

pub fn flips(bits: &[bool]) -> u64 {
    bits.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

/// Flippancy of `u` in the prefix of length `t`.
pub fn flip_at(x: &Stream, u: &str, t: usize) -> u64 {
    flips(&existence(x, u)[..t])
}

pub fn max_flip_at(x: &Stream, t: usize) -> u64 {
    names(x).iter().map(|u| flip_at(x, u, t)).max().unwrap_or(0)
}

/// `F[t] = |{u : flip(u, x[1:t]) <= w and u present at t}|`.
pub fn truncated(x: &Stream, w: u64) -> Vec<i64> {
    let us = names(x);
    let bits: Vec<Vec<bool>> = us.iter().map(|u| existence(x, u)).collect();
    (1..=x.len())
        .map(|t| bits.iter().filter(|b| b[t - 1] && flips(&b[..t]) <= w).count() as i64)
        .collect()
}

pub fn next_pow2(t: usize) -> usize {
    let mut p = 1;
    while p < t {
        p *= 2;
    }
    p
}

/// Sum over tree nodes of squared differences of the node partial sums
/// of `F[t] - F[t-1]` (stream padded with no-ops to the next power of two).
pub fn node_distance(f: &[i64], g: &[i64]) -> u64 {
    let pad = next_pow2(f.len());
    let ext = |v: &[i64]| -> Vec<i64> {
        let mut out = v.to_vec();
        out.resize(pad, *v.last().unwrap());
        let mut diff = Vec::with_capacity(pad);
        let mut prev = 0;
        for x in out {
            diff.push(x - prev);
            prev = x;
        }
        diff
    };
    let (a, b) = (ext(f), ext(g));
    let mut total = 0u64;
    let mut size = 1;
    while size <= pad {
        for start in (0..pad).step_by(size) {
            let s: i64 = (start..start + size).map(|i| a[i] - b[i]).sum();
            total += (s * s) as u64;
        }
        size *= 2;
    }
    total
}

pub fn levels(horizon: usize) -> u64 {
    next_pow2(horizon).trailing_zeros() as u64 + 1
}
