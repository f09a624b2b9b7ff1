//! Reduction of paired state sequences over directed coauthor arcs to the
//! empirical joint distribution over the `4^T` outcomes.
//!
//! Outcome encoding (shared with [`crate::model`]): the index packs the bits
//! `(A_1, ..., A_T, B_1, ..., B_T)` with `A_1` most significant and state `+1`
//! mapped to bit `1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DirectedInfluenceGraph, NodeStateSeries, UniverseRule};

/// Human-readable tag for the bit layout, embedded in serialized
/// distributions so downstream consumers can verify compatibility.
pub const ENCODING_TAG: &str = "A-major, +1->1";

/// Number of joint outcomes for `t` slices.
pub fn outcome_count(t: usize) -> usize {
    1usize << (2 * t)
}

/// Encode a pair of ±1 sequences into the joint outcome index.
pub fn encode_outcome(seq_a: &[i8], seq_b: &[i8]) -> Result<usize> {
    if seq_a.len() != seq_b.len() {
        return Err(Error::LengthMismatch {
            left: seq_a.len(),
            right: seq_b.len(),
        });
    }
    let t = seq_a.len();
    let mut j = 0usize;
    for (k, &s) in seq_a.iter().enumerate() {
        j |= (state_bit(s)?) << (2 * t - 1 - k);
    }
    for (k, &s) in seq_b.iter().enumerate() {
        j |= (state_bit(s)?) << (t - 1 - k);
    }
    Ok(j)
}

/// Decode an outcome index back into the `(A, B)` sequence pair.
pub fn decode_outcome(j: usize, t: usize) -> (Vec<i8>, Vec<i8>) {
    assert!(
        j < outcome_count(t),
        "outcome index {j} out of range for T={t}"
    );
    let bit = |pos: usize| -> i8 {
        if (j >> pos) & 1 == 1 {
            1
        } else {
            -1
        }
    };
    let seq_a: Vec<i8> = (0..t).map(|k| bit(2 * t - 1 - k)).collect();
    let seq_b: Vec<i8> = (0..t).map(|k| bit(t - 1 - k)).collect();
    (seq_a, seq_b)
}

fn state_bit(s: i8) -> Result<usize> {
    match s {
        1 => Ok(1),
        -1 => Ok(0),
        other => Err(Error::InvalidState(other)),
    }
}

/// Empirical joint distribution over the `4^T` outcomes, pooled over
/// (arc, reference) samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    num_slices: usize,
    counts: Vec<u64>,
    total: u64,
}

impl EmpiricalDistribution {
    pub fn new(num_slices: usize) -> Self {
        EmpiricalDistribution {
            num_slices,
            counts: vec![0; outcome_count(num_slices)],
            total: 0,
        }
    }

    pub fn from_counts(num_slices: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != outcome_count(num_slices) {
            return Err(Error::InvalidInput(format!(
                "expected {} counts for T={}, got {}",
                outcome_count(num_slices),
                num_slices,
                counts.len()
            )));
        }
        let total = counts.iter().sum();
        Ok(EmpiricalDistribution {
            num_slices,
            counts,
            total,
        })
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn add_sample(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
        self.total += 1;
    }

    /// Pool another distribution into this one (same `T` required).
    pub fn merge(&mut self, other: &EmpiricalDistribution) -> Result<()> {
        if other.num_slices != self.num_slices {
            return Err(Error::InvalidInput(format!(
                "cannot merge distributions with T={} and T={}",
                self.num_slices, other.num_slices
            )));
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total += other.total;
        Ok(())
    }

    /// Normalized outcome frequencies; all zeros when no samples were seen.
    pub fn y_hat(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let t = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    #[serde(rename = "T")]
    t: usize,
    encoding: String,
    counts: Vec<u64>,
    total: u64,
}

impl Serialize for EmpiricalDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DistributionRepr {
            t: self.num_slices,
            encoding: ENCODING_TAG.to_string(),
            counts: self.counts.clone(),
            total: self.total,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EmpiricalDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DistributionRepr::deserialize(d)?;
        if repr.encoding != ENCODING_TAG {
            return Err(D::Error::custom(format!(
                "unsupported outcome encoding `{}` (expected `{ENCODING_TAG}`)",
                repr.encoding
            )));
        }
        if repr.counts.len() != outcome_count(repr.t) {
            return Err(D::Error::custom(format!(
                "expected {} counts for T={}, got {}",
                outcome_count(repr.t),
                repr.t,
                repr.counts.len()
            )));
        }
        if repr.counts.iter().sum::<u64>() != repr.total {
            return Err(D::Error::custom("count/total mismatch"));
        }
        Ok(EmpiricalDistribution {
            num_slices: repr.t,
            counts: repr.counts,
            total: repr.total,
        })
    }
}

/// Pool paired sequence counts over every directed arc.
///
/// Which references an arc contributes follows the series' universe rule:
/// every reference both endpoints carry (simulator data), or the references
/// either endpoint actually cites, i.e. holds a `+1` somewhere (citation
/// data, where an author also carries all-(-1) nodes for the references its
/// coauthors cite). In both cases the dominant author of `u -> v` plays role
/// `A`, and a reference in the arc's universe whose node is missing from one
/// endpoint means series and graph were built from different universes, and
/// is an error naming the arc.
pub fn pair_sequence_counts(
    series: &NodeStateSeries,
    graph: &DirectedInfluenceGraph,
) -> Result<EmpiricalDistribution> {
    let mut dist = EmpiricalDistribution::new(series.num_slices());
    // Group references by author once.
    let mut refs_by_author: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (author, reference) in series.node_ids() {
        refs_by_author.entry(author).or_default().push(reference);
    }
    let cites = |author: &str, reference: &str| {
        series
            .states(author, reference)
            .map(|seq| seq.contains(&1))
            .unwrap_or(false)
    };
    for (from, to) in graph.arcs() {
        // Candidate references seen by either endpoint.
        let mut candidates: Vec<&str> = Vec::new();
        if let Some(r) = refs_by_author.get(from.as_str()) {
            candidates.extend(r.iter().copied());
        }
        if let Some(r) = refs_by_author.get(to.as_str()) {
            candidates.extend(r.iter().copied());
        }
        candidates.sort_unstable();
        candidates.dedup();
        for reference in candidates {
            if series.universe_rule() == UniverseRule::CitedByEitherEndpoint
                && !cites(from, reference)
                && !cites(to, reference)
            {
                // Neither endpoint cites it inside the window: the reference
                // belongs to another coauthor pair's universe.
                continue;
            }
            let seq_a = series
                .states(from, reference)
                .ok_or_else(|| Error::ArcNotCovered {
                    from: from.clone(),
                    to: to.clone(),
                    node: from.clone(),
                    reference: reference.to_string(),
                })?;
            let seq_b = series
                .states(to, reference)
                .ok_or_else(|| Error::ArcNotCovered {
                    from: from.clone(),
                    to: to.clone(),
                    node: to.clone(),
                    reference: reference.to_string(),
                })?;
            dist.add_sample(encode_outcome(seq_a, seq_b)?);
        }
    }
    Ok(dist)
}
