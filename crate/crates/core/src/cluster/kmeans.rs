//! Lloyd k-means with restarts, empty k-means, and the starting-center
//! schemes for the empty variant (random observations, min/max rescaling
//! of profile vertices, and model-simulated pseudocenters).

use rand::Rng;

use crate::capability::{capability_scores, sum_scores};
use crate::cluster::{
    cluster_means, distinct_point_indices, nearest_center, sq_dist, sse, CenterSet,
    ClusteringResult,
};
use crate::error::{Error, Result};
use crate::hierarchy::{Profile, ProfileSet};
use crate::sim::{sample_cdm, simulate_responses, Cdm, ModelKind, QMatrix};

/// Iteration cap for every Lloyd-style loop.
pub const MAX_ITER: usize = 300;

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("cannot cluster zero points".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch("ragged point set".into()));
    }
    Ok(dim)
}

/// Nearest-center assignment with empty-cluster repair: an emptied
/// cluster's center jumps to the point farthest from it (skipping points
/// that already sit on a center), then assignment is redone.
pub(crate) fn assign_with_repair(points: &[Vec<f64>], centers: &mut [Vec<f64>]) -> Vec<usize> {
    let k = centers.len();
    let mut assignment = vec![0usize; points.len()];
    for _round in 0..=k {
        for (slot, point) in assignment.iter_mut().zip(points) {
            *slot = nearest_center(point, centers);
        }
        let mut counts = vec![0usize; k];
        for &c in &assignment {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let mut farthest: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if centers.iter().any(|c| c == p) {
                continue;
            }
            let d = sq_dist(p, &centers[empty]);
            if farthest.is_none() || d > farthest.unwrap().1 {
                farthest = Some((i, d));
            }
        }
        match farthest {
            Some((i, _)) => centers[empty] = points[i].clone(),
            None => break, // every point sits on a center already
        }
    }
    assignment
}

/// One Lloyd run from explicit starting centers. Labels on the starting
/// centers carry through to the (position-stable) clusters.
pub fn kmeans_from(points: &[Vec<f64>], init: &CenterSet) -> Result<ClusteringResult> {
    let dim = check_points(points)?;
    if init.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "centers have dimension {}, points have {dim}",
            init.dim()
        )));
    }
    if init.len() > points.len() {
        return Err(Error::InvalidArgument(format!(
            "{} centers for {} points",
            init.len(),
            points.len()
        )));
    }

    let mut centers = init.points().to_vec();
    let mut assignment = assign_with_repair(points, &mut centers);
    let mut trace = vec![sse(points, &assignment, &centers)];
    let mut iterations = 1;

    while iterations < MAX_ITER {
        let mut new_centers = cluster_means(points, &assignment, &centers);
        let new_assignment = assign_with_repair(points, &mut new_centers);
        trace.push(sse(points, &new_assignment, &new_centers));
        iterations += 1;
        let stable = new_assignment == assignment;
        centers = new_centers;
        assignment = new_assignment;
        if stable {
            break;
        }
    }
    // Settle centers on the final means.
    centers = cluster_means(points, &assignment, &centers);
    let objective = sse(points, &assignment, &centers);

    let labels = match init.labels() {
        Some(labels) => labels.iter().cloned().map(Some).collect(),
        None => Vec::new(),
    };
    Ok(ClusteringResult {
        assignment,
        centers,
        labels,
        objective,
        iterations,
        objective_trace: trace,
        method_tag: "kmeans".into(),
    })
}

/// k-means with `restarts` random starts from distinct data points,
/// keeping the restart with the lowest objective.
pub fn kmeans(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<ClusteringResult> {
    check_points(points)?;
    if k == 0 || restarts == 0 {
        return Err(Error::InvalidArgument(
            "k and restarts must be positive".into(),
        ));
    }
    let distinct = distinct_point_indices(points);
    if k > distinct.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the {} distinct points",
            distinct.len()
        )));
    }
    let mut best: Option<ClusteringResult> = None;
    for _ in 0..restarts {
        let init_points: Vec<Vec<f64>> = rand::seq::index::sample(rng, distinct.len(), k)
            .iter()
            .map(|i| points[distinct[i]].clone())
            .collect();
        let run = kmeans_from(points, &CenterSet::new(init_points)?)?;
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Lloyd-style iteration where a center receiving zero points is removed
/// permanently, so between 1 and `|init|` clusters come back. Labels on
/// the starting centers follow the surviving clusters.
pub fn empty_kmeans(points: &[Vec<f64>], init: &CenterSet) -> Result<ClusteringResult> {
    let dim = check_points(points)?;
    if init.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "centers have dimension {}, points have {dim}",
            init.dim()
        )));
    }

    let mut centers = init.points().to_vec();
    let mut labels: Vec<Option<Profile>> = match init.labels() {
        Some(labels) => labels.iter().cloned().map(Some).collect(),
        None => vec![None; init.len()],
    };
    let had_labels = init.labels().is_some();

    let mut prev: Option<Vec<usize>> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut assignment = Vec::new();

    while iterations < MAX_ITER {
        iterations += 1;
        assignment = points.iter().map(|p| nearest_center(p, &centers)).collect();
        let mut counts = vec![0usize; centers.len()];
        for &c in &assignment {
            counts[c] += 1;
        }
        let dropped = counts.iter().any(|&c| c == 0);
        if dropped {
            let mut remap = vec![usize::MAX; centers.len()];
            let mut kept = 0;
            for (old, &count) in counts.iter().enumerate() {
                if count > 0 {
                    remap[old] = kept;
                    kept += 1;
                }
            }
            let keep_mask: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
            let mut idx = 0;
            centers.retain(|_| {
                let keep = keep_mask[idx];
                idx += 1;
                keep
            });
            idx = 0;
            labels.retain(|_| {
                let keep = keep_mask[idx];
                idx += 1;
                keep
            });
            for slot in assignment.iter_mut() {
                *slot = remap[*slot];
            }
        }
        trace.push(sse(points, &assignment, &centers));
        if !dropped && prev.as_ref() == Some(&assignment) {
            break;
        }
        centers = cluster_means(points, &assignment, &centers);
        prev = Some(assignment.clone());
    }

    debug_assert!(!centers.is_empty() && centers.len() <= init.len());
    let objective = sse(points, &assignment, &centers);
    Ok(ClusteringResult {
        assignment,
        centers,
        labels: if had_labels { labels } else { Vec::new() },
        objective,
        iterations,
        objective_trace: trace,
        method_tag: "empty_kmeans".into(),
    })
}

/// `count` distinct data points, uniform without replacement.
pub fn centers_random(
    points: &[Vec<f64>],
    count: usize,
    rng: &mut impl Rng,
) -> Result<CenterSet> {
    check_points(points)?;
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one center".into()));
    }
    let distinct = distinct_point_indices(points);
    if count > distinct.len() {
        return Err(Error::InvalidArgument(format!(
            "{count} centers exceed the {} distinct points",
            distinct.len()
        )));
    }
    let picks: Vec<Vec<f64>> = rand::seq::index::sample(rng, distinct.len(), count)
        .iter()
        .map(|i| points[distinct[i]].clone())
        .collect();
    CenterSet::new(picks)
}

/// One labeled center per profile: each vertex coordinate is rescaled into
/// the observed per-coordinate range of the data, `m_k + a_k (M_k - m_k)`.
pub fn centers_rescaled(points: &[Vec<f64>], profiles: &ProfileSet) -> Result<CenterSet> {
    let dim = check_points(points)?;
    if profiles.num_skills() != dim {
        return Err(Error::DimensionMismatch(format!(
            "profiles have {} skills, points have dimension {dim}",
            profiles.num_skills()
        )));
    }
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in points.iter().skip(1) {
        for k in 0..dim {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let centers: Vec<Vec<f64>> = profiles
        .iter()
        .map(|profile| {
            (0..dim)
                .map(|k| lo[k] + profile.mastery()[k] as f64 * (hi[k] - lo[k]))
                .collect()
        })
        .collect();
    CenterSet::labeled(centers, profiles.profiles().to_vec())
}

/// Pseudocenters under an explicit model: for each profile, simulate `m`
/// pseudo-students, convert to capability scores, and take the per-skill
/// mean as that profile's labeled center.
pub fn centers_pseudo_with(
    profiles: &ProfileSet,
    q: &QMatrix,
    model: &Cdm,
    m: usize,
    rng: &mut impl Rng,
) -> Result<CenterSet> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one pseudo-student per profile".into(),
        ));
    }
    let k = q.num_skills();
    let mut centers = Vec::with_capacity(profiles.len());
    for profile in profiles.iter() {
        let cohort = vec![profile.clone(); m];
        let responses = simulate_responses(&cohort, q, model, rng)?;
        let scores = capability_scores(&sum_scores(&responses, q)?, q)?;
        let mut mean = vec![0.0; k];
        for i in 0..m {
            for (acc, v) in mean.iter_mut().zip(scores.row(i)) {
                *acc += v;
            }
        }
        for acc in mean.iter_mut() {
            *acc /= m as f64;
        }
        centers.push(mean);
    }
    CenterSet::labeled(centers, profiles.profiles().to_vec())
}

/// Pseudocenters under an assumed model whose slip/guess parameters are
/// drawn fresh from the given uniform ranges (independent of whatever
/// generated the real data). Bounds of zero mean a noise-free model.
pub fn centers_pseudo(
    profiles: &ProfileSet,
    q: &QMatrix,
    kind: ModelKind,
    m: usize,
    slip_max: f64,
    guess_max: f64,
    rng: &mut impl Rng,
) -> Result<CenterSet> {
    let model = sample_cdm(kind, q, slip_max, guess_max, rng)?;
    centers_pseudo_with(profiles, q, &model, m, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_canonical_hierarchy, enumerate_profiles, HierarchyKind};
    use crate::sim::sample_q_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn two_pairs() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 0.9],
        ]
    }

    #[test]
    fn kmeans_finds_the_two_pair_means() {
        let result = kmeans(&two_pairs(), 2, 5, &mut rng(1)).unwrap();
        // Brute force over all 2-partitions of 4 points confirms the pair
        // split minimizes SSE; centers must be the pair means.
        let mut centers = result.centers.clone();
        centers.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((centers[0][0] - 0.05).abs() < 1e-12);
        assert!((centers[0][1] - 0.0).abs() < 1e-12);
        assert!((centers[1][0] - 1.0).abs() < 1e-12);
        assert!((centers[1][1] - 0.95).abs() < 1e-12);
        assert_eq!(result.assignment[0], result.assignment[1]);
        assert_eq!(result.assignment[2], result.assignment[3]);
        assert_ne!(result.assignment[0], result.assignment[2]);
    }

    #[test]
    fn kmeans_with_k_equals_n_reaches_zero_objective() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let result = kmeans(&pts, 6, 3, &mut rng(2)).unwrap();
        assert!(result.objective.abs() < 1e-15);
    }

    #[test]
    fn kmeans_objective_never_increases() {
        let mut r = rng(3);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..3).map(|_| r.random_range(0.0..1.0)).collect())
                .collect();
            let result = kmeans(&pts, 6, 2, &mut r).unwrap();
            for w in result.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "trace rose: {:?}", result.objective_trace);
            }
            // Centers are the means of their clusters at convergence.
            let means = cluster_means(&pts, &result.assignment, &result.centers);
            for (a, b) in means.iter().zip(&result.centers) {
                assert!(sq_dist(a, b) < 1e-18);
            }
        }
    }

    #[test]
    fn kmeans_rejects_k_beyond_distinct_points() {
        let pts = vec![vec![0.0], vec![0.0], vec![1.0]];
        assert!(kmeans(&pts, 3, 2, &mut rng(4)).is_err());
        assert!(kmeans(&pts, 2, 2, &mut rng(4)).is_ok());
    }

    #[test]
    fn kmeans_is_deterministic_given_the_seed() {
        let mut r = rng(5);
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..2).map(|_| r.random_range(0.0..1.0)).collect())
            .collect();
        let a = kmeans(&pts, 4, 5, &mut rng(6)).unwrap();
        let b = kmeans(&pts, 4, 5, &mut rng(6)).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn empty_kmeans_drops_a_far_center() {
        let init = CenterSet::new(vec![vec![0.05, 0.0], vec![1.0, 0.95], vec![50.0, 50.0]]).unwrap();
        let result = empty_kmeans(&two_pairs(), &init).unwrap();
        assert_eq!(result.num_clusters(), 2);
    }

    #[test]
    fn empty_kmeans_with_every_point_as_center() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let init = CenterSet::new(pts.clone()).unwrap();
        let result = empty_kmeans(&pts, &init).unwrap();
        assert_eq!(result.num_clusters(), 5);
        assert!(result.objective.abs() < 1e-15);
    }

    #[test]
    fn empty_kmeans_single_center_keeps_everything() {
        let init = CenterSet::new(vec![vec![0.5, 0.5]]).unwrap();
        let result = empty_kmeans(&two_pairs(), &init).unwrap();
        assert_eq!(result.num_clusters(), 1);
        assert!(result.assignment.iter().all(|&c| c == 0));
    }

    #[test]
    fn empty_kmeans_cluster_count_stays_in_range() {
        let mut r = rng(7);
        for _ in 0..20 {
            let pts: Vec<Vec<f64>> = (0..30)
                .map(|_| (0..2).map(|_| r.random_range(0.0..1.0)).collect())
                .collect();
            let init = centers_random(&pts, 8, &mut r).unwrap();
            let result = empty_kmeans(&pts, &init).unwrap();
            assert!(result.num_clusters() >= 1 && result.num_clusters() <= 8);
            for w in result.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
        }
    }

    #[test]
    fn empty_kmeans_passes_labels_through() {
        let profiles = ProfileSet::canonical(vec![
            Profile::parse_bits("00").unwrap(),
            Profile::parse_bits("10").unwrap(),
            Profile::parse_bits("11").unwrap(),
        ])
        .unwrap();
        // Center for "10" is far from all data and must be dropped.
        let init = CenterSet::labeled(
            vec![vec![0.05, 0.0], vec![50.0, 50.0], vec![1.0, 0.95]],
            profiles.profiles().to_vec(),
        )
        .unwrap();
        let result = empty_kmeans(&two_pairs(), &init).unwrap();
        assert_eq!(result.num_clusters(), 2);
        let labels: Vec<String> = result
            .labels
            .iter()
            .map(|l| l.as_ref().unwrap().bitstring())
            .collect();
        assert_eq!(labels, ["00", "11"]);
    }

    #[test]
    fn random_centers_come_from_the_data() {
        let pts = two_pairs();
        let c = centers_random(&pts, 3, &mut rng(8)).unwrap();
        for center in c.points() {
            assert!(pts.contains(center));
        }
        let again = centers_random(&pts, 3, &mut rng(8)).unwrap();
        assert_eq!(c, again);
        assert!(centers_random(&pts, 5, &mut rng(8)).is_err());
        assert_eq!(centers_random(&pts, 1, &mut rng(9)).unwrap().len(), 1);
    }

    #[test]
    fn rescaled_centers_match_the_worked_example() {
        let points = vec![vec![0.1, 0.2], vec![0.9, 0.8], vec![0.5, 0.5]];
        let profiles = ProfileSet::custom(vec![
            Profile::parse_bits("00").unwrap(),
            Profile::parse_bits("10").unwrap(),
            Profile::parse_bits("11").unwrap(),
        ])
        .unwrap();
        let c = centers_rescaled(&points, &profiles).unwrap();
        assert_eq!(c.points()[0], vec![0.1, 0.2]);
        assert_eq!(c.points()[1], vec![0.9, 0.2]);
        assert_eq!(c.points()[2], vec![0.9, 0.8]);
        assert!(c.labels().is_some());
    }

    #[test]
    fn rescaled_centers_hit_vertices_on_full_span_data() {
        let points = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let profiles = ProfileSet::canonical(vec![
            Profile::parse_bits("01").unwrap(),
            Profile::parse_bits("10").unwrap(),
        ])
        .unwrap();
        let c = centers_rescaled(&points, &profiles).unwrap();
        for (center, profile) in c.points().iter().zip(profiles.iter()) {
            assert_eq!(center, &crate::capability::profile_vertex(profile));
        }
    }

    #[test]
    fn rescaled_centers_collapse_constant_coordinates() {
        let points = vec![vec![0.3, 0.2], vec![0.3, 0.9]];
        let profiles = ProfileSet::canonical(vec![
            Profile::parse_bits("00").unwrap(),
            Profile::parse_bits("11").unwrap(),
        ])
        .unwrap();
        let c = centers_rescaled(&points, &profiles).unwrap();
        assert!(c.points().iter().all(|p| p[0] == 0.3));
    }

    #[test]
    fn zero_noise_pseudocenters_sit_on_vertices() {
        let mut r = rng(10);
        let q = sample_q_matrix(12, 6, &[(1, 6), (2, 6)], &mut r).unwrap();
        let h = build_canonical_hierarchy(HierarchyKind::Linear, 6).unwrap();
        let profiles = enumerate_profiles(&h).unwrap();
        let model = Cdm::zero_noise(ModelKind::Dina, &q);
        let c = centers_pseudo_with(&profiles, &q, &model, 3, &mut r).unwrap();
        // Full mastery maps to the all-ones corner, the empty profile to
        // the origin.
        let full_idx = profiles.len() - 1;
        assert!(c.points()[full_idx].iter().all(|&v| v == 1.0));
        assert!(c.points()[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_noise_linear_pseudocenters_distinct_iff_model_separates() {
        // Pseudocenters for the linear hierarchy's prefix profiles are
        // distinct exactly when the model separates the profiles, i.e.
        // their closed-form response-probability vectors differ. (A Q
        // whose only items for skill 1 are multi-skill cannot separate
        // the empty profile from the skill-1 prefix.)
        let h = build_canonical_hierarchy(HierarchyKind::Linear, 6).unwrap();
        let profiles = enumerate_profiles(&h).unwrap();
        let mut r = rng(23);
        let mut fully_distinct = 0;
        for _ in 0..20 {
            let q = sample_q_matrix(30, 6, &[(1, 9), (2, 18), (3, 3)], &mut r).unwrap();
            let model = Cdm::zero_noise(ModelKind::Dina, &q);
            let c = centers_pseudo_with(&profiles, &q, &model, 1, &mut r).unwrap();
            let prob_vecs: Vec<Vec<f64>> = profiles
                .iter()
                .map(|p| {
                    (0..q.num_items())
                        .map(|j| model.response_prob(p, j, &q).unwrap())
                        .collect()
                })
                .collect();
            let mut all_distinct = true;
            for i in 0..c.len() {
                for j in (i + 1)..c.len() {
                    let separated = prob_vecs[i] != prob_vecs[j];
                    assert_eq!(
                        c.points()[i] != c.points()[j],
                        separated,
                        "centers {i}/{j} vs model separation"
                    );
                    all_distinct &= separated;
                }
            }
            fully_distinct += usize::from(all_distinct);
        }
        // Most default-mix Q-matrices separate all seven prefixes.
        assert!(fully_distinct >= 10, "only {fully_distinct}/20 fully distinct");
    }

    #[test]
    fn pseudocenters_converge_to_expected_scores() {
        let mut r = rng(11);
        let q = sample_q_matrix(12, 4, &[(1, 4), (2, 8)], &mut r).unwrap();
        let params = crate::sim::sample_dina_params(12, 0.3, 0.15, &mut r).unwrap();
        let model = Cdm::Dina(params);
        let profile = Profile::parse_bits("1100").unwrap();
        let profiles = ProfileSet::canonical(vec![profile.clone()]).unwrap();
        let m = 10_000;
        let c = centers_pseudo_with(&profiles, &q, &model, m, &mut r).unwrap();
        for k in 0..4 {
            let n_k = q.items_requiring(k) as f64;
            let mut expected = 0.0;
            let mut var = 0.0;
            for j in 0..12 {
                if q.requires(j, k) {
                    let p = model.response_prob(&profile, j, &q).unwrap();
                    expected += p;
                    var += p * (1.0 - p);
                }
            }
            expected /= n_k;
            let se = (var / (n_k * n_k) / m as f64).sqrt();
            let got = c.points()[0][k];
            assert!(
                (got - expected).abs() <= 3.0 * se.max(1e-9),
                "skill {k}: got {got}, expected {expected} +- {se}"
            );
        }
    }
}
