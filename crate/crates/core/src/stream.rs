//! Turnstile streams over an interned universe, plus exact (non-private)
//! reference computations: existence vectors, flippancy and the distinct
//! count at every prefix.
//!
//! Text format, one entry per line:
//!
//! ```text
//! # comment
//! + alice
//! - alice
//! _
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dense identifier assigned to a universe element on first sight.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId(pub u32);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamEntry {
    Insert(ElementId),
    Delete(ElementId),
    NoOp,
}

impl StreamEntry {
    pub fn element(self) -> Option<ElementId> {
        match self {
            StreamEntry::Insert(u) | StreamEntry::Delete(u) => Some(u),
            StreamEntry::NoOp => None,
        }
    }

    pub fn is_noop(self) -> bool {
        matches!(self, StreamEntry::NoOp)
    }

    /// +1 for an insertion, -1 for a deletion, 0 for a no-op.
    pub fn delta(self) -> i64 {
        match self {
            StreamEntry::Insert(_) => 1,
            StreamEntry::Delete(_) => -1,
            StreamEntry::NoOp => 0,
        }
    }
}

/// Interning table mapping opaque tokens to dense ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Universe {
    names: Vec<String>,
    index: HashMap<String, ElementId>,
}

impl Universe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> ElementId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = ElementId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<ElementId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: ElementId) -> Option<&str> {
        self.names.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ElementId> {
        (0..self.names.len() as u32).map(ElementId)
    }
}

/// A stream of length `T >= 1` together with the universe its ids refer to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    entries: Vec<StreamEntry>,
    universe: Universe,
}

impl Stream {
    pub fn new(entries: Vec<StreamEntry>, universe: Universe) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyStream);
        }
        if let Some(bad) = entries
            .iter()
            .filter_map(|e| e.element())
            .find(|u| u.index() >= universe.len())
        {
            return Err(crate::error::invalid(
                "entries",
                format!("element id {} is not interned", bad.0),
            ));
        }
        Ok(Self { entries, universe })
    }

    /// Stream of `len` no-ops over an empty universe.
    pub fn noops(len: usize) -> Result<Self> {
        Self::new(vec![StreamEntry::NoOp; len], Universe::new())
    }

    pub fn entries(&self) -> &[StreamEntry] {
        &self.entries
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    /// Horizon `T`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Prefix `x[1:t]`, 1-based and inclusive.
    pub fn prefix(&self, t: usize) -> &[StreamEntry] {
        &self.entries[..t.min(self.entries.len())]
    }

    /// Elements that appear in at least one entry, in order of first appearance.
    pub fn appearing(&self) -> Vec<ElementId> {
        let mut seen = vec![false; self.universe.len()];
        let mut out = Vec::new();
        for u in self.entries.iter().filter_map(|e| e.element()) {
            if !seen[u.index()] {
                seen[u.index()] = true;
                out.push(u);
            }
        }
        out
    }

    pub fn element_name(&self, u: ElementId) -> &str {
        self.universe.name(u).unwrap_or("?")
    }

    /// `self ∘ other`, re-interning `other`'s tokens into this universe.
    pub fn concat(&self, other: &Stream) -> Stream {
        let mut universe = self.universe.clone();
        let mut entries = self.entries.clone();
        for &e in &other.entries {
            entries.push(match e {
                StreamEntry::Insert(u) => StreamEntry::Insert(universe.intern(other.element_name(u))),
                StreamEntry::Delete(u) => StreamEntry::Delete(universe.intern(other.element_name(u))),
                StreamEntry::NoOp => StreamEntry::NoOp,
            });
        }
        Stream { entries, universe }
    }

    /// Same universe, entries replaced. Used to build neighbors.
    pub fn with_entries(&self, entries: Vec<StreamEntry>) -> Result<Stream> {
        Stream::new(entries, self.universe.clone())
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match *e {
                StreamEntry::Insert(u) => writeln!(f, "+ {}", self.element_name(u))?,
                StreamEntry::Delete(u) => writeln!(f, "- {}", self.element_name(u))?,
                StreamEntry::NoOp => writeln!(f, "_")?,
            }
        }
        Ok(())
    }
}

/// Incremental construction by token name.
#[derive(Debug, Default)]
pub struct StreamBuilder {
    entries: Vec<StreamEntry>,
    universe: Universe,
}

impl StreamBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: &str) -> &mut Self {
        let u = self.universe.intern(name);
        self.entries.push(StreamEntry::Insert(u));
        self
    }

    pub fn delete(&mut self, name: &str) -> &mut Self {
        let u = self.universe.intern(name);
        self.entries.push(StreamEntry::Delete(u));
        self
    }

    pub fn noop(&mut self) -> &mut Self {
        self.entries.push(StreamEntry::NoOp);
        self
    }

    pub fn intern(&mut self, name: &str) -> ElementId {
        self.universe.intern(name)
    }

    pub fn push(&mut self, entry: StreamEntry) -> &mut Self {
        self.entries.push(entry);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(self) -> Result<Stream> {
        Stream::new(self.entries, self.universe)
    }
}

/// Parses the line format. `#` lines are comments and do not count toward `T`.
pub fn parse_stream(text: &[u8]) -> Result<Stream> {
    let text = std::str::from_utf8(text).map_err(|e| Error::Parse {
        line: 1 + text[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        token: "<invalid utf-8>".to_owned(),
    })?;
    let mut builder = StreamBuilder::new();
    let body = text.strip_suffix('\n').unwrap_or(text);
    if body.is_empty() {
        return Err(Error::EmptyStream);
    }
    for (i, line) in body.split('\n').enumerate() {
        if line.starts_with('#') {
            continue;
        }
        let err = || Error::Parse {
            line: i + 1,
            token: line.to_owned(),
        };
        if line == "_" {
            builder.noop();
            continue;
        }
        let (op, id) = match line.split_at_checked(2) {
            Some((op @ ("+ " | "- "), id)) => (op, id),
            _ => return Err(err()),
        };
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(err());
        }
        if op == "+ " {
            builder.insert(id);
        } else {
            builder.delete(id);
        }
    }
    builder.build()
}

/// Running state of one element.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ElementState {
    /// Insertions minus deletions so far.
    pub count: i64,
    /// `count > 0`.
    pub exists: bool,
    /// Transitions of `exists` between adjacent time steps.
    pub flippancy: u64,
}

/// Per-element counts, existence bits and flippancies, updated one entry at a time.
#[derive(Clone, Debug, Default)]
pub struct StreamState {
    states: Vec<Option<ElementState>>,
    distinct: usize,
    seen: usize,
    t: usize,
}

impl StreamState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies `x[t+1]` and returns the touched element, if any.
    pub fn apply(&mut self, entry: StreamEntry) -> Option<ElementId> {
        self.t += 1;
        let u = entry.element()?;
        if u.index() >= self.states.len() {
            self.states.resize(u.index() + 1, None);
        }
        let slot = &mut self.states[u.index()];
        if slot.is_none() {
            self.seen += 1;
        }
        let state = slot.get_or_insert_with(ElementState::default);
        let before = state.exists;
        state.count += entry.delta();
        state.exists = state.count > 0;
        // The existence vector has no entry before t = 1.
        if self.t >= 2 && before != state.exists {
            state.flippancy += 1;
        }
        match (before, state.exists) {
            (false, true) => self.distinct += 1,
            (true, false) => self.distinct -= 1,
            _ => {}
        }
        Some(u)
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn distinct(&self) -> usize {
        self.distinct
    }

    /// Number of elements that have appeared so far.
    pub fn seen(&self) -> usize {
        self.seen
    }

    pub fn get(&self, u: ElementId) -> Option<&ElementState> {
        self.states.get(u.index()).and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ElementId, &ElementState)> {
        self.states
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (ElementId(i as u32), s)))
    }

    pub fn flippancy(&self, u: ElementId) -> u64 {
        self.get(u).map_or(0, |s| s.flippancy)
    }

    pub fn max_flippancy(&self) -> u64 {
        self.iter().map(|(_, s)| s.flippancy).max().unwrap_or(0)
    }

    /// Elements whose flippancy so far is at least `threshold`.
    pub fn count_flippancy_at_least(&self, threshold: u64) -> usize {
        self.iter().filter(|(_, s)| s.flippancy >= threshold).count()
    }
}

/// Distinct count after every prefix.
pub fn count_distinct_exact(x: &Stream) -> Vec<u64> {
    let mut state = StreamState::new();
    x.entries()
        .iter()
        .map(|&e| {
            state.apply(e);
            state.distinct() as u64
        })
        .collect()
}

/// Existence vector of `u` in `x`, computed from scratch.
pub fn existence_vector(x: &Stream, u: ElementId) -> Vec<bool> {
    let mut count = 0i64;
    x.entries()
        .iter()
        .map(|&e| {
            if e.element() == Some(u) {
                count += e.delta();
            }
            count > 0
        })
        .collect()
}

/// Number of adjacent positions where the vector changes value.
pub fn vector_flips(bits: &[bool]) -> u64 {
    bits.windows(2).filter(|w| w[0] != w[1]).count() as u64
}

/// `flip(u, x)`, evaluated directly on the existence vector.
pub fn flippancy(x: &Stream, u: ElementId) -> u64 {
    vector_flips(&existence_vector(x, u))
}

/// `w_x`; 0 for an all-no-op stream.
pub fn max_flippancy(x: &Stream) -> u64 {
    let mut state = StreamState::new();
    for &e in x.entries() {
        state.apply(e);
    }
    state.max_flippancy()
}

/// Set of elements with positive count at the end of the stream.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StreamIndicator {
    pub present: BTreeSet<String>,
}

impl StreamIndicator {
    /// Elements are keyed by token so that indicators of different streams compare.
    pub fn of(x: &Stream) -> Self {
        let mut state = StreamState::new();
        for &e in x.entries() {
            state.apply(e);
        }
        let present = state
            .iter()
            .filter(|(_, s)| s.exists)
            .map(|(u, _)| x.element_name(u).to_owned())
            .collect();
        Self { present }
    }

    pub fn l0(&self) -> usize {
        self.present.len()
    }

    pub fn inner_product(&self, other: &StreamIndicator) -> usize {
        self.present.intersection(&other.present).count()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeighborLevel {
    Event,
    Item,
}

/// Draws a random event- or item-neighbor of `x` with a seeded generator.
///
/// Event level replaces one non-no-op entry with `_`; item level replaces a
/// uniformly random nonempty subset of one element's entries with `_`. On an
/// all-no-op stream both levels instead turn one `_` into a random insertion
/// or deletion.
pub fn make_neighbors(x: &Stream, level: NeighborLevel, seed: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active: Vec<usize> = (0..x.len()).filter(|&i| !x.entries()[i].is_noop()).collect();
    if active.is_empty() {
        let mut universe = x.universe().clone();
        let u = if universe.is_empty() {
            universe.intern("v")
        } else {
            ElementId(rng.random_range(0..universe.len() as u32))
        };
        let mut entries = x.entries().to_vec();
        let pos = rng.random_range(0..entries.len());
        entries[pos] = if rng.random_bool(0.5) {
            StreamEntry::Insert(u)
        } else {
            StreamEntry::Delete(u)
        };
        return Stream { entries, universe };
    }
    let positions: Vec<usize> = match level {
        NeighborLevel::Event => vec![*active.choose(&mut rng).expect("nonempty")],
        NeighborLevel::Item => {
            let appearing = x.appearing();
            let u = *appearing.choose(&mut rng).expect("nonempty");
            let own: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| x.entries()[i].element() == Some(u))
                .collect();
            loop {
                let subset: Vec<usize> = own.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                if !subset.is_empty() {
                    break subset;
                }
            }
        }
    };
    replace_with_noops(x, &positions)
}

/// Replaces the given 0-based positions with `_`.
pub fn replace_with_noops(x: &Stream, positions: &[usize]) -> Stream {
    let mut entries = x.entries().to_vec();
    for &p in positions {
        entries[p] = StreamEntry::NoOp;
    }
    Stream {
        entries,
        universe: x.universe().clone(),
    }
}

/// Item-neighbor of `x` obtained by blanking the entries of `u` at the
/// given 0-based positions. Positions not referencing `u` are ignored.
pub fn item_neighbor(x: &Stream, u: ElementId, positions: &[usize]) -> Stream {
    let own: Vec<usize> = positions
        .iter()
        .copied()
        .filter(|&p| x.entries().get(p).and_then(|e| e.element()) == Some(u))
        .collect();
    replace_with_noops(x, &own)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamModel {
    /// Any sequence of insertions and deletions.
    General,
    /// Counts never drop below zero.
    Strict,
    /// Insert only when absent, delete only when present.
    Likes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelRule {
    NegativeCount,
    InsertPresent,
    DeleteAbsent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelViolation {
    /// 1-based time step.
    pub t: usize,
    pub element: String,
    pub rule: ModelRule,
}

impl fmt::Display for ModelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.rule {
            ModelRule::NegativeCount => "count below zero",
            ModelRule::InsertPresent => "insertion of a present element",
            ModelRule::DeleteAbsent => "deletion of an absent element",
        };
        write!(f, "t = {}: {} ({})", self.t, rule, self.element)
    }
}

pub fn validate_model(x: &Stream, model: StreamModel) -> std::result::Result<(), ModelViolation> {
    if model == StreamModel::General {
        return Ok(());
    }
    let mut counts = vec![0i64; x.universe().len()];
    for (i, &e) in x.entries().iter().enumerate() {
        let Some(u) = e.element() else { continue };
        let before = counts[u.index()];
        counts[u.index()] += e.delta();
        let rule = match (model, e) {
            (StreamModel::Strict, _) if counts[u.index()] < 0 => Some(ModelRule::NegativeCount),
            (StreamModel::Likes, StreamEntry::Insert(_)) if before > 0 => Some(ModelRule::InsertPresent),
            (StreamModel::Likes, StreamEntry::Delete(_)) if before <= 0 => Some(ModelRule::DeleteAbsent),
            _ => None,
        };
        if let Some(rule) = rule {
            return Err(ModelViolation {
                t: i + 1,
                element: x.element_name(u).to_owned(),
                rule,
            });
        }
    }
    Ok(())
}
