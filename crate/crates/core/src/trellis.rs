//! Layered trellis over partial syndromes.
//!
//! The state at depth `l` is the OR of the columns of the defective clients
//! among the first `l`, stored as an `m`-bit integer (group `i` at bit `i`).
//! Every root-to-depth-`n` path spells one defective vector, and the state it
//! ends in is that vector's syndrome.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::codes::{AssignmentMatrix, DefectiveVector, SyndromeVector};

/// Largest number of groups for which a trellis is built (`2^m` states).
pub const MAX_TRELLIS_GROUPS: usize = 20;

/// Largest client count for which [`compatible_defectives`] enumerates paths.
pub const MAX_ENUMERATION_CLIENTS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrellisError {
    #[error("{0} groups exceeds the trellis limit of {MAX_TRELLIS_GROUPS}")]
    StateSpaceTooLarge(usize),
    #[error("syndrome {0} is not reachable from any defective vector")]
    UnreachableSyndrome(String),
    #[error("enumerating paths over {0} clients exceeds the limit of {MAX_ENUMERATION_CLIENTS}")]
    OutputTooLarge(usize),
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Edge between consecutive depths, as indices into the state lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

/// Edges from depth `l - 1` to depth `l`, split by label.
///
/// `by_label[b][k]` is the edge with label `b` leaving state `k` of depth
/// `l - 1`, so every state has exactly one edge per label.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Section {
    by_label: [Vec<Edge>; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    groups: usize,
    columns: Vec<u64>,
    states: Vec<Vec<u64>>,
    sections: Vec<Section>,
}

/// Builds the trellis of `a`, keeping only states reachable from the root.
pub fn build_trellis(a: &AssignmentMatrix) -> Result<Trellis, TrellisError> {
    let m = a.groups();
    if m > MAX_TRELLIS_GROUPS {
        return Err(TrellisError::StateSpaceTooLarge(m));
    }
    let mut states: Vec<Vec<u64>> = Vec::with_capacity(a.clients() + 1);
    let mut sections = Vec::with_capacity(a.clients());
    states.push(vec![0]);
    for &column in a.column_masks() {
        let prev = states.last().expect("root layer");
        let mut next: Vec<u64> = prev.iter().flat_map(|&s| [s, s | column]).collect();
        next.sort_unstable();
        next.dedup();
        let index = |s: u64| next.binary_search(&s).expect("successor state present");
        let zero = prev.iter().enumerate().map(|(k, &s)| Edge { from: k, to: index(s) }).collect();
        let one = prev
            .iter()
            .enumerate()
            .map(|(k, &s)| Edge { from: k, to: index(s | column) })
            .collect();
        sections.push(Section { by_label: [zero, one] });
        states.push(next);
    }
    Ok(Trellis { groups: m, columns: a.column_masks().to_vec(), states, sections })
}

impl Trellis {
    /// Number of clients (trellis depth).
    pub fn clients(&self) -> usize {
        self.sections.len()
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    /// Group mask of the client at depth `layer + 1`.
    pub fn column_mask(&self, client: usize) -> u64 {
        self.columns[client]
    }

    /// State labels at depth `layer`, ascending.
    pub fn states(&self, layer: usize) -> &[u64] {
        &self.states[layer]
    }

    /// Edges into depth `layer` (`1..=n`) carrying `label`.
    pub fn edges(&self, layer: usize, label: bool) -> &[Edge] {
        &self.sections[layer - 1].by_label[usize::from(label)]
    }

    /// Position of state `label` within depth `layer`.
    pub fn state_index(&self, layer: usize, label: u64) -> Option<usize> {
        self.states[layer].binary_search(&label).ok()
    }

    pub fn total_states(&self) -> usize {
        self.states.iter().map(Vec::len).sum()
    }

    /// Number of root paths ending in each final state. Sums to `2^n`.
    pub fn path_counts(&self) -> Vec<u128> {
        let mut counts = vec![1u128];
        for layer in 1..=self.clients() {
            let mut next = vec![0u128; self.states[layer].len()];
            for label in [false, true] {
                for e in self.edges(layer, label) {
                    next[e.to] += counts[e.from];
                }
            }
            counts = next;
        }
        counts
    }

    /// Human-readable listing of every layer and edge, one edge per line as
    /// `from -label-> to` with decimal state labels.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "trellis n={} m={}", self.clients(), self.groups);
        for (layer, states) in self.states.iter().enumerate() {
            let labels: Vec<String> = states.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "layer {layer}: {}", labels.join(" "));
            if layer == 0 {
                continue;
            }
            let prev = &self.states[layer - 1];
            for k in 0..prev.len() {
                for label in [false, true] {
                    let e = self.edges(layer, label)[k];
                    let _ = writeln!(out, "  {} -{}-> {}", prev[e.from], u8::from(label), states[e.to]);
                }
            }
        }
        out
    }
}

/// All defective vectors whose syndrome is `t`, read off the trellis paths
/// that end in state `t`.
pub fn compatible_defectives(
    t: &SyndromeVector,
    trellis: &Trellis,
) -> Result<BTreeSet<DefectiveVector>, TrellisError> {
    let n = trellis.clients();
    if t.len() != trellis.groups() {
        return Err(TrellisError::DimensionMismatch { expected: trellis.groups(), actual: t.len() });
    }
    if n > MAX_ENUMERATION_CLIENTS {
        return Err(TrellisError::OutputTooLarge(n));
    }
    let end = trellis
        .state_index(n, t.mask())
        .ok_or_else(|| TrellisError::UnreachableSyndrome(t.to_string()))?;

    // incoming[layer][to] = (from, label)
    let incoming: Vec<Vec<Vec<(usize, bool)>>> = (1..=n)
        .map(|layer| {
            let mut inc = vec![Vec::new(); trellis.states(layer).len()];
            for label in [false, true] {
                for e in trellis.edges(layer, label) {
                    inc[e.to].push((e.from, label));
                }
            }
            inc
        })
        .collect();

    let mut found = BTreeSet::new();
    let mut labels = vec![false; n];
    // Depth-first walk back to the root; `labels[layer..]` holds the suffix.
    fn walk(
        layer: usize,
        state: usize,
        incoming: &[Vec<Vec<(usize, bool)>>],
        labels: &mut [bool],
        found: &mut BTreeSet<DefectiveVector>,
    ) {
        if layer == 0 {
            found.insert(DefectiveVector::new(labels.to_vec()));
            return;
        }
        for &(from, label) in &incoming[layer - 1][state] {
            labels[layer - 1] = label;
            walk(layer - 1, from, incoming, labels, found);
        }
    }
    walk(n, end, &incoming, &mut labels, &mut found);
    Ok(found)
}
