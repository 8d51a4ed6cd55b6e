//! Shared fixtures for the benchmarks: a seeded capability-score data set
//! of the default study size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skillscape_core::capability::{capability_scores, sum_scores};
use skillscape_core::hierarchy::{
    build_canonical_hierarchy, enumerate_profiles, HierarchyKind, ProfileSet,
};
use skillscape_core::sim::{
    assign_students, sample_cdm, sample_q_matrix, simulate_responses, ModelKind, QMatrix,
};

pub struct Fixture {
    pub points: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
    pub profiles: ProfileSet,
    pub q: QMatrix,
}

/// Default-sized data set (250 students, 30 items) under the given
/// hierarchy, DINA-generated.
pub fn fixture(kind: HierarchyKind, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hierarchy = build_canonical_hierarchy(kind, 6).unwrap();
    let profiles = enumerate_profiles(&hierarchy).unwrap();
    let q = sample_q_matrix(30, 6, &[(1, 9), (2, 18), (3, 3)], &mut rng).unwrap();
    let students = assign_students(250, &profiles, &mut rng).unwrap();
    let model = sample_cdm(ModelKind::Dina, &q, 0.30, 0.15, &mut rng).unwrap();
    let responses = simulate_responses(&students, &q, &model, &mut rng).unwrap();
    let scores = capability_scores(&sum_scores(&responses, &q).unwrap(), &q).unwrap();
    let truth = students
        .iter()
        .map(|p| profiles.position(p).unwrap())
        .collect();
    Fixture {
        points: scores.points().to_vec(),
        truth,
        profiles,
        q,
    }
}
