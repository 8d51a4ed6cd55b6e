//! Partition scoring and profile labeling.

use std::collections::HashMap;

use crate::capability::profile_vertex;
use crate::cluster::{CenterSet, ClusteringResult};
use crate::error::{Error, Result};
use crate::hierarchy::{Profile, ProfileSet};

/// Adjusted Rand index plus the degenerate-denominator flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AriOutcome {
    pub value: f64,
    /// Both partitions were trivial in the same way (denominator zero);
    /// the value is 1 by convention.
    pub degenerate: bool,
}

fn comb2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Pair-counting adjusted Rand index between two partitions. Class
/// indices need not be contiguous. Identical partitions score exactly 1;
/// independent partitions score 0 in expectation; negative values are
/// possible.
pub fn adjusted_rand_index_detailed(a: &[usize], b: &[usize]) -> Result<AriOutcome> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "partitions cover {} and {} elements",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "need at least two elements to compare partitions".into(),
        ));
    }
    let mut contingency: HashMap<(usize, usize), u64> = HashMap::new();
    let mut a_counts: HashMap<usize, u64> = HashMap::new();
    let mut b_counts: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *contingency.entry((x, y)).or_insert(0) += 1;
        *a_counts.entry(x).or_insert(0) += 1;
        *b_counts.entry(y).or_insert(0) += 1;
    }
    let sum_cells: u64 = contingency.values().map(|&c| comb2(c)).sum();
    let sum_a: u64 = a_counts.values().map(|&c| comb2(c)).sum();
    let sum_b: u64 = b_counts.values().map(|&c| comb2(c)).sum();
    let total = comb2(n as u64) as f64;
    let expected = sum_a as f64 * sum_b as f64 / total;
    let max_index = 0.5 * (sum_a + sum_b) as f64;
    if max_index == expected {
        return Ok(AriOutcome {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(AriOutcome {
        value: (sum_cells as f64 - expected) / (max_index - expected),
        degenerate: false,
    })
}

/// See [`adjusted_rand_index_detailed`].
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    Ok(adjusted_rand_index_detailed(a, b)?.value)
}

/// Per-center nearest-vertex labels over the licit profile set.
#[derive(Debug, Clone)]
pub struct VertexLabels {
    pub labels: Vec<Profile>,
    /// Some center was equidistant from two or more licit vertices
    /// (resolved to the lowest canonical index).
    pub had_tie: bool,
    /// Two centers mapped to the same vertex.
    pub had_collision: bool,
}

/// Map each center to the Euclidean-nearest licit profile vertex. Ties
/// break to the lowest canonical index; collisions are permitted and
/// flagged.
pub fn nearest_vertex_labels(centers: &CenterSet, licit: &ProfileSet) -> Result<VertexLabels> {
    if centers.dim() != licit.num_skills() {
        return Err(Error::DimensionMismatch(format!(
            "centers have dimension {}, profiles have {} skills",
            centers.dim(),
            licit.num_skills()
        )));
    }
    let vertices: Vec<Vec<f64>> = licit.iter().map(profile_vertex).collect();
    let mut labels = Vec::with_capacity(centers.len());
    let mut chosen = vec![false; licit.len()];
    let mut had_tie = false;
    let mut had_collision = false;
    for center in centers.points() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        let mut tie = false;
        for (idx, vertex) in vertices.iter().enumerate() {
            let d: f64 = center
                .iter()
                .zip(vertex)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best_d {
                best_d = d;
                best = idx;
                tie = false;
            } else if d == best_d {
                tie = true;
            }
        }
        had_tie |= tie;
        had_collision |= chosen[best];
        chosen[best] = true;
        labels.push(licit.get(best).clone());
    }
    Ok(VertexLabels {
        labels,
        had_tie,
        had_collision,
    })
}

/// Fraction of students whose assigned profile matches the truth exactly.
pub fn profile_accuracy(assigned: &[Profile], truth: &[Profile]) -> Result<f64> {
    if assigned.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} assigned profiles for {} students",
            assigned.len(),
            truth.len()
        )));
    }
    if assigned.is_empty() {
        return Err(Error::InvalidArgument("no students to score".into()));
    }
    let hits = assigned.iter().zip(truth).filter(|(a, t)| a == t).count();
    Ok(hits as f64 / assigned.len() as f64)
}

/// A clustering whose every cluster carries a profile label.
#[derive(Debug, Clone)]
pub struct LabeledClustering {
    pub clustering: ClusteringResult,
    pub cluster_labels: Vec<Profile>,
}

impl LabeledClustering {
    pub fn new(clustering: ClusteringResult, cluster_labels: Vec<Profile>) -> Result<Self> {
        if cluster_labels.len() != clustering.num_clusters() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} clusters",
                cluster_labels.len(),
                clustering.num_clusters()
            )));
        }
        Ok(Self {
            clustering,
            cluster_labels,
        })
    }

    /// The label of each student's cluster.
    pub fn student_profiles(&self) -> Vec<Profile> {
        self.clustering
            .assignment
            .iter()
            .map(|&c| self.cluster_labels[c].clone())
            .collect()
    }
}
