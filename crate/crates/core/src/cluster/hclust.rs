//! Agglomerative clustering with complete linkage and a largest-gap
//! dendrogram cut.

use std::collections::HashMap;

use crate::cluster::euclid;
use crate::error::{Error, Result};

/// One agglomeration step: clusters `a` and `b` merge at `height`.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeStep {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub height: f64,
}

/// A stepwise dendrogram. Leaves carry ids `1..=N`; the cluster created by
/// step `t` (1-based) carries id `N + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    num_leaves: usize,
    steps: Vec<MergeStep>,
}

impl Dendrogram {
    pub fn num_leaves(&self) -> usize {
        self.num_leaves
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    pub fn heights(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.height).collect()
    }
}

/// Complete-linkage agglomerative clustering under Euclidean distance.
/// Ties on the closest pair break to the lowest-index pair, so the result
/// is deterministic.
pub fn hclust_complete(points: &[Vec<f64>]) -> Result<Dendrogram> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot cluster zero points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("ragged point set".into()));
    }
    if n == 1 {
        return Ok(Dendrogram {
            num_leaves: 1,
            steps: Vec::new(),
        });
    }

    // Working dissimilarity matrix over slots; slot i keeps the merged
    // cluster, slot j is retired.
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclid(&points[i], &points[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut cluster_id: Vec<usize> = (1..=n).collect();
    let mut steps = Vec::with_capacity(n - 1);
    let mut last_height = 0.0f64;

    for t in 1..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                if best.is_none() || dist[i][j] < best.unwrap().2 {
                    best = Some((i, j, dist[i][j]));
                }
            }
        }
        let (i, j, height) = best.expect("at least two active clusters");
        debug_assert!(height >= last_height, "complete linkage is monotone");
        last_height = height;
        let (id_a, id_b) = (cluster_id[i].min(cluster_id[j]), cluster_id[i].max(cluster_id[j]));
        steps.push(MergeStep {
            cluster_a: id_a,
            cluster_b: id_b,
            height,
        });
        // Complete linkage: distance to the merged cluster is the max of
        // the two previous distances.
        for m in 0..n {
            if m == i || m == j || !active[m] {
                continue;
            }
            let d = dist[i][m].max(dist[j][m]);
            dist[i][m] = d;
            dist[m][i] = d;
        }
        active[j] = false;
        cluster_id[i] = n + t;
    }

    Ok(Dendrogram {
        num_leaves: n,
        steps,
    })
}

/// Cut the dendrogram inside the largest gap between successive merge
/// heights (the gap above the final merge closes the sequence with size
/// zero, so an all-equal-heights dendrogram collapses to one cluster).
/// Ties resolve to the fewer-clusters cut. If the gap cut would produce
/// more than `max_clusters` clusters, cut to exactly `max_clusters`.
///
/// Returns a contiguous cluster index per leaf, numbered by first
/// appearance in leaf order.
pub fn cut_largest_gap(dendrogram: &Dendrogram, max_clusters: usize) -> Result<Vec<usize>> {
    if max_clusters == 0 {
        return Err(Error::InvalidArgument("max_clusters must be positive".into()));
    }
    let n = dendrogram.num_leaves();
    if n == 1 {
        return Ok(vec![0]);
    }
    let heights = dendrogram.heights();
    let m = heights.len();

    // merges_done = t yields n - t clusters; t = m closes the tree.
    let mut best_t = 1usize;
    let mut best_gap = f64::NEG_INFINITY;
    for t in 1..=m {
        let gap = if t < m { heights[t] - heights[t - 1] } else { 0.0 };
        if gap >= best_gap {
            // ">=" prefers the later (fewer-clusters) cut on ties.
            best_gap = gap;
            best_t = t;
        }
    }
    let clusters = n - best_t;
    let merges_done = if clusters > max_clusters {
        n - max_clusters
    } else {
        best_t
    };

    // Replay the first `merges_done` steps, tracking members per cluster id.
    let mut members: HashMap<usize, Vec<usize>> =
        (1..=n).map(|id| (id, vec![id - 1])).collect();
    for (idx, step) in dendrogram.steps()[..merges_done].iter().enumerate() {
        let mut merged = members
            .remove(&step.cluster_a)
            .expect("cluster merged once after creation");
        merged.extend(
            members
                .remove(&step.cluster_b)
                .expect("cluster merged once after creation"),
        );
        members.insert(n + idx + 1, merged);
    }

    let mut assignment = vec![usize::MAX; n];
    for group in members.values() {
        let leader = *group.iter().min().unwrap();
        for &leaf in group {
            assignment[leaf] = leader;
        }
    }
    // Renumber by first appearance.
    let mut remap: HashMap<usize, usize> = HashMap::new();
    for slot in assignment.iter_mut() {
        let next = remap.len();
        let idx = *remap.entry(*slot).or_insert(next);
        *slot = idx;
    }
    Ok(assignment)
}
