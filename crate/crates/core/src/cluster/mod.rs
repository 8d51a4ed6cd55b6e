//! Clustering methods over capability-score points: agglomerative
//! clustering with complete linkage, Lloyd k-means with restarts, empty
//! k-means with three seeding schemes, and LCVQE-style constrained
//! clustering over pseudodata plus real data.

mod hclust;
mod kmeans;
mod lcvqe;

pub use hclust::{cut_largest_gap, hclust_complete, Dendrogram, MergeStep};
pub use kmeans::{
    centers_pseudo, centers_pseudo_with, centers_random, centers_rescaled, empty_kmeans, kmeans,
    kmeans_from, MAX_ITER,
};
pub use lcvqe::{derive_constraints, lcvqe};

use crate::error::{Error, Result};
use crate::hierarchy::Profile;

/// Output of a clustering run: a contiguous cluster index per point plus
/// the cluster centers. `objective` is the within-cluster sum of squared
/// Euclidean distances; `objective_trace` records it after each iteration.
/// `labels`, when nonempty, aligns with `centers` and carries the profile
/// each cluster inherited from its starting center or pseudodata.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub labels: Vec<Option<Profile>>,
    pub objective: f64,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub method_tag: String,
}

impl ClusteringResult {
    pub fn num_clusters(&self) -> usize {
        self.centers.len()
    }
}

/// Starting centers for the k-means family, optionally labeled with the
/// profile each center represents.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    points: Vec<Vec<f64>>,
    labels: Option<Vec<Profile>>,
}

impl CenterSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::check(&points)?;
        Ok(Self {
            points,
            labels: None,
        })
    }

    pub fn labeled(points: Vec<Vec<f64>>, labels: Vec<Profile>) -> Result<Self> {
        Self::check(&points)?;
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} centers",
                labels.len(),
                points.len()
            )));
        }
        Ok(Self {
            points,
            labels: Some(labels),
        })
    }

    fn check(points: &[Vec<f64>]) -> Result<()> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("center set must be nonempty".into()));
        }
        let dim = points[0].len();
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch("ragged center set".into()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "center coordinates must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[Profile]> {
        self.labels.as_deref()
    }
}

/// Unordered must-link / cannot-link index pairs over one point list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    must_link: Vec<(usize, usize)>,
    cannot_link: Vec<(usize, usize)>,
}

impl ConstraintSet {
    pub fn new(must_link: Vec<(usize, usize)>, cannot_link: Vec<(usize, usize)>) -> Result<Self> {
        let norm = |pairs: Vec<(usize, usize)>, kind: &str| -> Result<Vec<(usize, usize)>> {
            let mut out = Vec::with_capacity(pairs.len());
            for (a, b) in pairs {
                if a == b {
                    return Err(Error::InvalidArgument(format!(
                        "{kind} pair ({a}, {b}) must have distinct indices"
                    )));
                }
                out.push((a.min(b), a.max(b)));
            }
            Ok(out)
        };
        let must_link = norm(must_link, "must-link")?;
        let cannot_link = norm(cannot_link, "cannot-link")?;
        for pair in &must_link {
            if cannot_link.contains(pair) {
                return Err(Error::InvalidArgument(format!(
                    "pair ({}, {}) is both must-link and cannot-link",
                    pair.0, pair.1
                )));
            }
        }
        Ok(Self {
            must_link,
            cannot_link,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn must_link(&self) -> &[(usize, usize)] {
        &self.must_link
    }

    pub fn cannot_link(&self) -> &[(usize, usize)] {
        &self.cannot_link
    }

    pub fn is_empty(&self) -> bool {
        self.must_link.is_empty() && self.cannot_link.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.must_link
            .iter()
            .chain(&self.cannot_link)
            .map(|&(a, b)| a.max(b))
            .max()
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

pub(crate) fn euclid(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Index of the nearest center, ties to the lowest index.
pub(crate) fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = sq_dist(point, &centers[0]);
    for (c, center) in centers.iter().enumerate().skip(1) {
        let d = sq_dist(point, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Within-cluster sum of squared distances for an assignment.
pub(crate) fn sse(points: &[Vec<f64>], assignment: &[usize], centers: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum()
}

/// Mean of the points assigned to each of `k` clusters; clusters with no
/// members keep their previous center.
pub(crate) fn cluster_means(
    points: &[Vec<f64>],
    assignment: &[usize],
    previous: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let k = previous.len();
    let dim = previous[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((sum, count), prev)| {
            if count == 0 {
                prev.clone()
            } else {
                sum.into_iter().map(|s| s / count as f64).collect()
            }
        })
        .collect()
}

/// Deduplicated points in order of first occurrence, as indices.
pub(crate) fn distinct_point_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let mut seen: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !seen.iter().any(|&s| points[s] == *p) {
            seen.push(i);
        }
    }
    seen
}

/// Wrap a bare partition (e.g. a dendrogram cut) as a ClusteringResult with
/// cluster means as centers.
pub fn partition_to_result(
    points: &[Vec<f64>],
    assignment: Vec<usize>,
    method_tag: &str,
) -> Result<ClusteringResult> {
    if points.is_empty() || points.len() != assignment.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} points for {} assignments",
            points.len(),
            assignment.len()
        )));
    }
    let k = assignment.iter().copied().max().unwrap() + 1;
    let dim = points[0].len();
    let zero = vec![vec![0.0; dim]; k];
    let centers = cluster_means(points, &assignment, &zero);
    let objective = sse(points, &assignment, &centers);
    Ok(ClusteringResult {
        assignment,
        centers,
        labels: Vec::new(),
        objective,
        iterations: 0,
        objective_trace: Vec::new(),
        method_tag: method_tag.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_set_normalizes_and_validates() {
        let cs = ConstraintSet::new(vec![(3, 1)], vec![(0, 2)]).unwrap();
        assert_eq!(cs.must_link(), &[(1, 3)]);
        assert_eq!(cs.max_index(), Some(3));
        assert!(ConstraintSet::new(vec![(1, 1)], vec![]).is_err());
        assert!(ConstraintSet::new(vec![(0, 1)], vec![(1, 0)]).is_err());
    }

    #[test]
    fn center_set_rejects_bad_input() {
        assert!(CenterSet::new(vec![]).is_err());
        assert!(CenterSet::new(vec![vec![0.0], vec![0.0, 1.0]]).is_err());
        assert!(CenterSet::new(vec![vec![f64::NAN]]).is_err());
        assert!(CenterSet::labeled(vec![vec![0.0]], vec![]).is_err());
    }

    #[test]
    fn distinct_points_keep_first_occurrence() {
        let pts = vec![vec![0.0], vec![1.0], vec![0.0], vec![2.0]];
        assert_eq!(distinct_point_indices(&pts), vec![0, 1, 3]);
    }
}
