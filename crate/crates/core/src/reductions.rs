//! Batch problems solved through a distinct-count mechanism.
//!
//! Inner products `<q, y>` and one-way marginals of a binary dataset are
//! encoded as turnstile streams; the distinct counts at a few time steps
//! determine the batch answers. With an exact mechanism the answers are
//! exact, and with an `alpha`-accurate one they are off by at most `2 alpha`
//! (inner products) or `alpha / n` (marginals).

use crate::accounting::epsilon_scaling;
use crate::error::{invalid, Error, Result};
use crate::mechanism::ContinualMechanism;
use crate::stream::{Stream, StreamBuilder, StreamEntry, StreamIndicator};

/// `n x d` matrix of bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryDataset {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryDataset {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("dataset", "needs at least one row and one column"));
        }
        if bits.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: rows * cols,
            });
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("dataset", "rows have different lengths"));
        }
        if rows.iter().flatten().any(|&b| b > 1) {
            return Err(invalid("dataset", "entries must be 0 or 1"));
        }
        Self::new(rows.len(), cols, rows.iter().flatten().map(|&b| b == 1).collect())
    }

    /// Single-column dataset.
    pub fn column(bits: &[u8]) -> Result<Self> {
        Self::from_rows(&bits.iter().map(|&b| vec![b]).collect::<Vec<_>>())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.cols + col]
    }

    /// Fraction of ones in each column.
    pub fn marginals(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).filter(|&i| self.get(i, j)).count() as f64 / self.rows as f64)
            .collect()
    }
}

/// `k` query vectors of length `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySet {
    len: usize,
    queries: Vec<Vec<bool>>,
}

impl QuerySet {
    pub fn new(len: usize, queries: Vec<Vec<bool>>) -> Result<Self> {
        if let Some((j, q)) = queries.iter().enumerate().find(|(_, q)| q.len() != len) {
            return Err(Error::DimensionMismatch {
                rows: len,
                query: j + 1,
                len: q.len(),
            });
        }
        Ok(Self { len, queries })
    }

    pub fn from_bits(queries: &[Vec<u8>]) -> Result<Self> {
        let len = queries.first().map_or(0, Vec::len);
        Self::new(len, queries.iter().map(|q| q.iter().map(|&b| b == 1).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    pub fn queries(&self) -> &[Vec<bool>] {
        &self.queries
    }

    /// Exact `<q_j, y>` for a single-column dataset.
    pub fn inner_products(&self, y: &BinaryDataset) -> Vec<u64> {
        self.queries
            .iter()
            .map(|q| q.iter().enumerate().filter(|&(i, &b)| b && y.get(i, 0)).count() as u64)
            .collect()
    }
}

fn element_names(n: usize) -> StreamBuilder {
    let mut b = StreamBuilder::new();
    for i in 1..=n {
        b.intern(&i.to_string());
    }
    b
}

/// `z0 ∘ z1 ∘ ... ∘ zk`: `z0` inserts every `i` with `y[i] = 1`; block `zj`
/// inserts `i` at offset `i` and deletes it at offset `n + i` for every
/// `q_j[i] = 1`. Length `(2k + 1) n`, maximum flippancy at most `2k`.
pub fn build_inner_product_stream(y: &BinaryDataset, queries: &QuerySet) -> Result<Stream> {
    if y.cols() != 1 {
        return Err(invalid("dataset", format!("inner products need one column, got {}", y.cols())));
    }
    let n = y.rows();
    if queries.vector_len() != n && !queries.is_empty() {
        return Err(Error::DimensionMismatch {
            rows: n,
            query: 1,
            len: queries.vector_len(),
        });
    }
    let mut b = element_names(n);
    let ids: Vec<_> = (1..=n).map(|i| b.intern(&i.to_string())).collect();
    for (i, &u) in ids.iter().enumerate() {
        b.push(if y.get(i, 0) { StreamEntry::Insert(u) } else { StreamEntry::NoOp });
    }
    for q in queries.queries() {
        for (i, &u) in ids.iter().enumerate() {
            b.push(if q[i] { StreamEntry::Insert(u) } else { StreamEntry::NoOp });
        }
        for (i, &u) in ids.iter().enumerate() {
            b.push(if q[i] { StreamEntry::Delete(u) } else { StreamEntry::NoOp });
        }
    }
    b.build()
}

/// Answers and batch estimates from one run of a mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionRun {
    /// Mechanism answer after every stream entry.
    pub answers: Vec<f64>,
    pub estimates: Vec<f64>,
}

/// `b[j] = ||q_j||_0 + r[n] - r[2jn]`, with `r` indexed by 1-based time.
pub fn inner_products_via_mechanism<M: ContinualMechanism + ?Sized>(
    y: &BinaryDataset,
    queries: &QuerySet,
    mech: &mut M,
) -> Result<ReductionRun> {
    let x = build_inner_product_stream(y, queries)?;
    let answers = x.entries().iter().map(|&e| mech.step(e)).collect::<Result<Vec<_>>>()?;
    let n = y.rows();
    let r = |t: usize| answers[t - 1];
    let estimates = queries
        .queries()
        .iter()
        .enumerate()
        .map(|(j, q)| {
            let weight = q.iter().filter(|&&b| b).count() as f64;
            weight + r(n) - r(2 * (j + 1) * n)
        })
        .collect();
    Ok(ReductionRun { answers, estimates })
}

/// For every attribute `j`: a phase inserting each `i` with `y[i][j] = 1`,
/// then a phase deleting them. Length `2nd`, maximum flippancy at most `2d`,
/// valid in the likes model.
pub fn build_marginals_stream(y: &BinaryDataset) -> Result<Stream> {
    let n = y.rows();
    let mut b = element_names(n);
    let ids: Vec<_> = (1..=n).map(|i| b.intern(&i.to_string())).collect();
    for j in 0..y.cols() {
        for (i, &u) in ids.iter().enumerate() {
            b.push(if y.get(i, j) { StreamEntry::Insert(u) } else { StreamEntry::NoOp });
        }
        for (i, &u) in ids.iter().enumerate() {
            b.push(if y.get(i, j) { StreamEntry::Delete(u) } else { StreamEntry::NoOp });
        }
    }
    b.build()
}

/// `b[j] = r[(2j - 1) n] / n`.
pub fn marginals_via_mechanism<M: ContinualMechanism + ?Sized>(
    y: &BinaryDataset,
    mech: &mut M,
) -> Result<ReductionRun> {
    let x = build_marginals_stream(y)?;
    let answers = x.entries().iter().map(|&e| mech.step(e)).collect::<Result<Vec<_>>>()?;
    let n = y.rows();
    let estimates = (1..=y.cols())
        .map(|j| answers[(2 * j - 1) * n - 1] / n as f64)
        .collect();
    Ok(ReductionRun { answers, estimates })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    /// `<h_x1, h_x2>`.
    pub lhs: usize,
    /// `||h_x1||_0 + ||h_x2||_0 - ||h_{x1 ∘ x2}||_0`.
    pub rhs: usize,
    pub ok: bool,
}

/// Checks the inner-product identity for two insertion-only streams.
pub fn indicator_identity_check(x1: &Stream, x2: &Stream) -> Result<IdentityCheck> {
    for x in [x1, x2] {
        if let Some(t) = x.entries().iter().position(|e| matches!(e, StreamEntry::Delete(_))) {
            return Err(Error::NotInsertionOnly { t: t + 1 });
        }
    }
    let h1 = StreamIndicator::of(x1);
    let h2 = StreamIndicator::of(x2);
    let joint = StreamIndicator::of(&x1.concat(x2));
    let lhs = h1.inner_product(&h2);
    let rhs = h1.l0() + h2.l0() - joint.l0();
    Ok(IdentityCheck { lhs, rhs, ok: lhs == rhs })
}

/// Replaces each entry `±u` by `±(u,1), ..., ±(u,copies)` and each no-op
/// by `copies` no-ops.
pub fn replicate_stream(x: &Stream, copies: usize) -> Result<Stream> {
    if copies == 0 {
        return Err(invalid("copies", "must be at least 1"));
    }
    let mut b = StreamBuilder::new();
    for &e in x.entries() {
        match e {
            StreamEntry::NoOp => {
                for _ in 0..copies {
                    b.noop();
                }
            }
            StreamEntry::Insert(u) | StreamEntry::Delete(u) => {
                let name = x.element_name(u);
                for c in 1..=copies {
                    let v = b.intern(&format!("({name},{c})"));
                    b.push(if matches!(e, StreamEntry::Insert(_)) {
                        StreamEntry::Insert(v)
                    } else {
                        StreamEntry::Delete(v)
                    });
                }
            }
        }
    }
    b.build()
}

/// Stream over `U x [l]` with `l = floor(1/epsilon)`; its distinct count at
/// `t l` is `l` times the original count at `t`.
pub fn scale_stream_for_epsilon(x: &Stream, epsilon: f64) -> Result<Stream> {
    replicate_stream(x, epsilon_scaling(epsilon, 0.0)?.copies)
}

/// Maps answers on the scaled stream back: `a[t] = a'[t l] / l`.
pub fn unscale_answers(scaled: &[f64], copies: usize) -> Vec<f64> {
    scaled
        .chunks(copies)
        .filter(|c| c.len() == copies)
        .map(|c| c[copies - 1] / copies as f64)
        .collect()
}
