//! Constrained k-means over pseudodata plus real data.
//!
//! Pseudodata points carry profile labels; the labels induce must-link
//! chains within a profile group and cannot-links between groups. The
//! LCVQE-style assignment rules trade constraint violations against
//! quantization error, and clusters that end up holding only pseudodata
//! are discarded so the returned partition covers the real points alone.

use std::collections::HashMap;

use crate::cluster::kmeans::{assign_with_repair, MAX_ITER};
use crate::cluster::{sq_dist, sse, CenterSet, ClusteringResult, ConstraintSet};
use crate::error::{Error, Result};
use crate::hierarchy::Profile;

/// Pairwise constraints implied by per-point labels: a must-link chain
/// over consecutive points of each label group, and one cannot-link
/// between the first representatives of every pair of groups.
pub fn derive_constraints(labels: &[Option<Profile>]) -> Result<ConstraintSet> {
    let mut groups: Vec<(Profile, Vec<usize>)> = Vec::new();
    for (idx, label) in labels.iter().enumerate() {
        let Some(profile) = label else { continue };
        match groups.iter_mut().find(|(p, _)| p == profile) {
            Some((_, members)) => members.push(idx),
            None => groups.push((profile.clone(), vec![idx])),
        }
    }
    if groups.is_empty() {
        return Err(Error::InvalidArgument(
            "constraint derivation needs at least one labeled point".into(),
        ));
    }
    let mut must_link = Vec::new();
    for (_, members) in &groups {
        for pair in members.windows(2) {
            must_link.push((pair[0], pair[1]));
        }
    }
    let mut cannot_link = Vec::new();
    for a in 0..groups.len() {
        for b in (a + 1)..groups.len() {
            cannot_link.push((groups[a].1[0], groups[b].1[0]));
        }
    }
    ConstraintSet::new(must_link, cannot_link)
}

/// Second-nearest center to a point (ties to the lowest index). Requires
/// at least two centers.
fn second_nearest(point: &[f64], centers: &[Vec<f64>], nearest: usize) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        if c == nearest {
            continue;
        }
        let d = sq_dist(point, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// LCVQE-style constrained clustering over `points` (pseudo + real),
/// restricted to the real points.
///
/// `point_labels` aligns with `points`: `Some(profile)` marks a labeled
/// pseudodata point, `None` a real one. Iteration starts from nearest
/// assignment, then settles each constrained pair:
///
/// * a must-link pair whose nearest centers differ picks the cheapest of
///   "both to the first center", "both to the second", or "split, paying
///   half the squared distance from each point to the other's center";
///   a split charges each point against the opposite center, which then
///   absorbs it into its mean update;
/// * a cannot-link pair sharing a nearest center keeps the closer point
///   there and either moves the farther point to its second-nearest
///   center or keeps it in place, paying half its squared distance to
///   that second center (the charged center again absorbs the point).
///
/// Clusters holding no real point are dropped; surviving clusters take
/// the majority profile label of their pseudodata members.
pub fn lcvqe(
    points: &[Vec<f64>],
    point_labels: &[Option<Profile>],
    k: usize,
    constraints: &ConstraintSet,
    init: &CenterSet,
) -> Result<ClusteringResult> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("cannot cluster zero points".into()));
    }
    if points.len() != point_labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} points",
            point_labels.len(),
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) || init.dim() != dim {
        return Err(Error::DimensionMismatch("ragged points or centers".into()));
    }
    if k == 0 || init.len() != k {
        return Err(Error::InvalidArgument(format!(
            "init provides {} centers for k = {k}",
            init.len()
        )));
    }
    if let Some(max) = constraints.max_index() {
        if max >= points.len() {
            return Err(Error::InvalidArgument(format!(
                "constraint index {max} out of range for {} points",
                points.len()
            )));
        }
    }
    let real: Vec<usize> = (0..points.len())
        .filter(|&i| point_labels[i].is_none())
        .collect();
    if real.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one real (unlabeled) point".into(),
        ));
    }

    let mut centers = init.points().to_vec();
    let mut assignment: Vec<usize> = Vec::new();
    let mut penalties: Vec<Vec<usize>> = vec![Vec::new(); k];
    // Constraint overrides can cycle between a few assignments without
    // ever repeating consecutively; remember a short history to stop.
    let mut history: Vec<Vec<usize>> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;

    while iterations < MAX_ITER {
        iterations += 1;
        assignment = assign_with_repair(points, &mut centers);
        let nearest: Vec<usize> = assignment.clone();
        for p in penalties.iter_mut() {
            p.clear();
        }

        for &(a, b) in constraints.must_link() {
            let (ca, cb) = (nearest[a], nearest[b]);
            if ca == cb {
                assignment[a] = ca;
                assignment[b] = ca;
                continue;
            }
            let qa = sq_dist(&points[a], &centers[ca]);
            let qb = sq_dist(&points[b], &centers[cb]);
            let xa = sq_dist(&points[b], &centers[ca]);
            let xb = sq_dist(&points[a], &centers[cb]);
            let both_a = 0.5 * (qa + xa);
            let both_b = 0.5 * (xb + qb);
            let split = 0.5 * (qa + qb) + 0.5 * (xa + xb);
            if both_a <= both_b && both_a <= split {
                assignment[a] = ca;
                assignment[b] = ca;
            } else if both_b <= split {
                assignment[a] = cb;
                assignment[b] = cb;
            } else {
                assignment[a] = ca;
                assignment[b] = cb;
                penalties[ca].push(b);
                penalties[cb].push(a);
            }
        }

        if k >= 2 {
            for &(a, b) in constraints.cannot_link() {
                let shared = nearest[a];
                if shared != nearest[b] {
                    continue;
                }
                let da = sq_dist(&points[a], &centers[shared]);
                let db = sq_dist(&points[b], &centers[shared]);
                let (keep, far) = if da <= db { (a, b) } else { (b, a) };
                assignment[keep] = shared;
                let alt = second_nearest(&points[far], &centers, shared);
                let move_cost = 0.5 * sq_dist(&points[far], &centers[alt]);
                let stay_cost =
                    0.5 * sq_dist(&points[far], &centers[shared]) + move_cost;
                if move_cost <= stay_cost {
                    assignment[far] = alt;
                } else {
                    assignment[far] = shared;
                    penalties[alt].push(far);
                }
            }
        }

        trace.push(sse(points, &assignment, &centers));
        if history.iter().any(|past| past == &assignment) {
            break;
        }
        if history.len() == 16 {
            history.remove(0);
        }
        history.push(assignment.clone());

        // Update: each center averages its members plus the points whose
        // violation penalty was charged against it.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (point, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(point) {
                *s += v;
            }
        }
        for (c, charged) in penalties.iter().enumerate() {
            for &i in charged {
                counts[c] += 1;
                for (s, v) in sums[c].iter_mut().zip(&points[i]) {
                    *s += v;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }

    // Restrict to the real points, dropping clusters without any.
    let mut has_real = vec![false; k];
    for &i in &real {
        has_real[assignment[i]] = true;
    }
    let mut remap = vec![usize::MAX; k];
    let mut surviving_centers = Vec::new();
    for c in 0..k {
        if has_real[c] {
            remap[c] = surviving_centers.len();
            surviving_centers.push(centers[c].clone());
        }
    }
    let real_assignment: Vec<usize> = real.iter().map(|&i| remap[assignment[i]]).collect();
    let real_points: Vec<Vec<f64>> = real.iter().map(|&i| points[i].clone()).collect();

    // Majority pseudodata label per surviving cluster.
    let mut labels: Vec<Option<Profile>> = vec![None; surviving_centers.len()];
    for (c, slot) in labels.iter_mut().enumerate() {
        let mut votes: HashMap<&Profile, usize> = HashMap::new();
        for (i, label) in point_labels.iter().enumerate() {
            if let Some(profile) = label {
                if remap[assignment[i]] == c {
                    *votes.entry(profile).or_insert(0) += 1;
                }
            }
        }
        *slot = votes
            .into_iter()
            .max_by(|(pa, na), (pb, nb)| na.cmp(nb).then_with(|| pb.cmp(pa)))
            .map(|(p, _)| p.clone());
    }

    let objective = sse(&real_points, &real_assignment, &surviving_centers);
    Ok(ClusteringResult {
        assignment: real_assignment,
        centers: surviving_centers,
        labels,
        objective,
        iterations,
        objective_trace: trace,
        method_tag: "lcvqe".into(),
    })
}
