//! Grid execution: every (hierarchy x generating model x subset size x
//! replication) cell simulates one data set and runs each configured
//! method on it. Cells are pure functions of the master seed and their
//! own coordinates, so they can run in parallel and a sub-grid reproduces
//! exactly the rows of a full run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capability::{capability_scores, sum_scores};
use crate::cluster::{
    centers_pseudo, centers_random, centers_rescaled, cut_largest_gap, derive_constraints,
    empty_kmeans, hclust_complete, kmeans, lcvqe, partition_to_result, CenterSet,
    ClusteringResult,
};
use crate::error::{Error, Result};
use crate::eval::{adjusted_rand_index_detailed, nearest_vertex_labels, profile_accuracy};
use crate::experiment::config::{ExperimentConfig, Method, ResolvedHierarchy};
use crate::experiment::figures::render_figures;
use crate::experiment::rows::{write_csv, ResultRow};
use crate::hierarchy::{enumerate_profiles, select_subset, Profile, ProfileSet};
use crate::seeds::derive_rng;
use crate::sim::{assign_students, sample_cdm, sample_q_matrix, simulate_responses, Cdm, QMatrix};

/// Environment variable overriding the worker count for grid execution.
pub const WORKERS_ENV: &str = "SKILLSCAPE_WORKERS";

/// Deterministic run description persisted as `run_meta.json`. Contains
/// only fields that are pure functions of the config, so repeated runs
/// write identical files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub seed: u64,
    pub profile_counts: BTreeMap<String, usize>,
    /// "shared" (one Q-matrix for the whole run) or "per_replication".
    pub q_matrix_mode: String,
    /// Rows of the shared Q-matrix as 0/1 strings, when shared.
    pub shared_q: Option<Vec<String>>,
    pub skipped_cells: Vec<String>,
    pub flag_counts: BTreeMap<String, usize>,
    pub row_count: usize,
    pub config: ExperimentConfig,
}

/// Rows plus run description.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub meta: RunMeta,
}

#[derive(Debug, Clone)]
struct Cell {
    hier_idx: usize,
    model_idx: usize,
    size: usize,
    replication: usize,
}

/// Worker count from `SKILLSCAPE_WORKERS`, when set to a positive integer.
pub fn worker_count_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&w| w >= 1)
}

/// Run the full grid with the worker count taken from the environment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with_workers(cfg, worker_count_from_env())
}

/// Run the full grid on an explicit number of workers (None = one per
/// core). The returned rows are ordered by grid coordinates regardless of
/// the worker count.
pub fn run_experiment_with_workers(
    cfg: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<ExperimentOutput> {
    cfg.validate()?;

    let hierarchies: Vec<ResolvedHierarchy> = cfg
        .hierarchies
        .iter()
        .map(|spec| spec.resolve(cfg.num_skills))
        .collect::<Result<_>>()?;
    let profile_sets: Vec<ProfileSet> = hierarchies
        .iter()
        .map(|h| enumerate_profiles(&h.hierarchy))
        .collect::<Result<_>>()?;

    let shared_q = if cfg.resample_q_per_replication {
        None
    } else {
        let mut q_rng = derive_rng(cfg.seed, &["q"]);
        Some(sample_q_matrix(
            cfg.num_items,
            cfg.num_skills,
            &cfg.q_mix,
            &mut q_rng,
        )?)
    };

    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for (hier_idx, (hier, profiles)) in hierarchies.iter().zip(&profile_sets).enumerate() {
        let (sizes, over) = cfg.subset_sizes.for_profile_count(profiles.len());
        if !over.is_empty() {
            skipped.push(format!(
                "hierarchy={} sizes {:?} exceed L_h={}",
                hier.id,
                over,
                profiles.len()
            ));
        }
        if sizes.is_empty() {
            skipped.push(format!(
                "hierarchy={} has no feasible subset size (L_h={})",
                hier.id,
                profiles.len()
            ));
        }
        if cfg.num_students < profiles.len() {
            // assign_students would fail on the largest sizes; flag early.
            skipped.push(format!(
                "hierarchy={} may skip large subsets: N={} below L_h={}",
                hier.id,
                cfg.num_students,
                profiles.len()
            ));
        }
        for model_idx in 0..cfg.generating_models.len() {
            for &size in &sizes {
                for replication in 1..=cfg.replications {
                    cells.push(Cell {
                        hier_idx,
                        model_idx,
                        size,
                        replication,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let rows: Vec<ResultRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                run_cell(
                    cfg,
                    &hierarchies[cell.hier_idx],
                    &profile_sets[cell.hier_idx],
                    cell,
                    shared_q.as_ref(),
                )
            })
            .collect::<Vec<Vec<ResultRow>>>()
            .into_iter()
            .flatten()
            .collect()
    });

    let mut flag_counts: BTreeMap<String, usize> = BTreeMap::new();
    for row in &rows {
        for flag in row.flags.split(';').filter(|f| !f.is_empty()) {
            let key = flag.split(':').next().unwrap_or(flag).to_string();
            *flag_counts.entry(key).or_insert(0) += 1;
        }
    }

    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        profile_counts: hierarchies
            .iter()
            .zip(&profile_sets)
            .map(|(h, ps)| (h.id.clone(), ps.len()))
            .collect(),
        q_matrix_mode: if cfg.resample_q_per_replication {
            "per_replication".into()
        } else {
            "shared".into()
        },
        shared_q: shared_q.as_ref().map(|q| {
            (0..q.num_items())
                .map(|j| q.row(j).iter().map(|&v| char::from(b'0' + v)).collect())
                .collect()
        }),
        skipped_cells: skipped,
        flag_counts,
        row_count: rows.len(),
        config: cfg.clone(),
    };
    Ok(ExperimentOutput { rows, meta })
}

fn run_cell(
    cfg: &ExperimentConfig,
    hier: &ResolvedHierarchy,
    profiles: &ProfileSet,
    cell: &Cell,
    shared_q: Option<&QMatrix>,
) -> Vec<ResultRow> {
    let model = cfg.generating_models[cell.model_idx];
    let size = cell.size.to_string();
    let rep = cell.replication.to_string();
    let keys = |purpose: &str, with_model: bool| -> Vec<String> {
        let mut parts = vec![purpose.to_string(), hier.id.clone()];
        if with_model {
            parts.push(model.name().to_string());
        }
        parts.push(size.clone());
        parts.push(rep.clone());
        parts
    };
    let rng_for = |parts: &[String]| -> ChaCha8Rng {
        let refs: Vec<&str> = parts.iter().map(String::as_str).collect();
        derive_rng(cfg.seed, &refs)
    };

    let l_h = profiles.len();
    let base_row = |method: Method| ResultRow {
        hierarchy: hier.id.clone(),
        generating_model: model.name().to_string(),
        method: method.name().to_string(),
        l_h,
        subset_size: cell.size,
        proportion: cell.size as f64 / l_h as f64,
        replication: cell.replication,
        ari: None,
        clusters_found: None,
        profile_accuracy: None,
        runtime_ms: 0,
        flags: String::new(),
    };

    // Simulate the cell's data set; on failure, every method reports the
    // same error row rather than aborting the grid.
    let data = (|| -> Result<CellData> {
        let q = match shared_q {
            Some(q) => q.clone(),
            None => sample_q_matrix(
                cfg.num_items,
                cfg.num_skills,
                &cfg.q_mix,
                &mut rng_for(&keys("q", false)),
            )?,
        };
        let subset = select_subset(
            profiles,
            cell.size,
            hier.subset_mode,
            &mut rng_for(&keys("subset", false)),
        )?;
        let students = assign_students(
            cfg.num_students,
            &subset,
            &mut rng_for(&keys("students", false)),
        )?;
        let generator = sample_cdm(
            model,
            &q,
            cfg.slip_max,
            cfg.guess_max,
            &mut rng_for(&keys("params", true)),
        )?;
        let responses =
            simulate_responses(&students, &q, &generator, &mut rng_for(&keys("responses", true)))?;
        let scores = capability_scores(&sum_scores(&responses, &q)?, &q)?;
        let truth: Vec<usize> = students
            .iter()
            .map(|p| subset.position(p).expect("students drawn from the subset"))
            .collect();
        Ok(CellData {
            q,
            students,
            truth,
            points: scores.points().to_vec(),
        })
    })();

    let data = match data {
        Ok(data) => data,
        Err(e) => {
            return cfg
                .methods
                .iter()
                .map(|&m| {
                    let mut row = base_row(m);
                    row.flags = format!("error:{e}");
                    row
                })
                .collect();
        }
    };

    cfg.methods
        .iter()
        .map(|&method| {
            let mut row = base_row(method);
            let started = Instant::now();
            let mut rng = rng_for(&keys(method.name(), true));
            match run_single_method(method, &data, profiles, l_h, cfg, &mut rng) {
                Ok(result) => {
                    let mut flags = Vec::new();
                    match adjusted_rand_index_detailed(&result.assignment, &data.truth) {
                        Ok(outcome) => {
                            row.ari = Some(outcome.value);
                            if outcome.degenerate {
                                flags.push("degenerate_ari".to_string());
                            }
                        }
                        Err(e) => flags.push(format!("error:{e}")),
                    }
                    row.clusters_found = Some(result.num_clusters());
                    match derive_student_profiles(&result, profiles) {
                        Ok((assigned, mut label_flags)) => {
                            flags.append(&mut label_flags);
                            if let Some(assigned) = assigned {
                                row.profile_accuracy =
                                    profile_accuracy(&assigned, &data.students).ok();
                            }
                        }
                        Err(e) => flags.push(format!("error:{e}")),
                    }
                    row.flags = flags.join(";");
                }
                Err(e) => {
                    row.flags = format!("error:{e}");
                }
            }
            row.runtime_ms = started.elapsed().as_millis() as u64;
            row
        })
        .collect()
}

struct CellData {
    q: QMatrix,
    students: Vec<Profile>,
    truth: Vec<usize>,
    points: Vec<Vec<f64>>,
}

fn run_single_method(
    method: Method,
    data: &CellData,
    profiles: &ProfileSet,
    l_h: usize,
    cfg: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ClusteringResult> {
    match method {
        Method::Hc => {
            let dendrogram = hclust_complete(&data.points)?;
            let cut = cut_largest_gap(&dendrogram, l_h)?;
            let mut result = partition_to_result(&data.points, cut, "hc")?;
            result.iterations = dendrogram.steps().len();
            Ok(result)
        }
        Method::Kmeans => kmeans(&data.points, l_h, 5, rng),
        Method::EmptyKRandom => {
            let init = centers_random(&data.points, l_h, rng)?;
            empty_kmeans(&data.points, &init)
        }
        Method::EmptyKRescaled => {
            let init = centers_rescaled(&data.points, profiles)?;
            empty_kmeans(&data.points, &init)
        }
        Method::EmptyKPseudoDina | Method::EmptyKPseudoNida => {
            let kind = method.pseudo_model().expect("pseudo method");
            let init = centers_pseudo(
                profiles,
                &data.q,
                kind,
                cfg.pseudo_m,
                cfg.slip_max,
                cfg.guess_max,
                rng,
            )?;
            empty_kmeans(&data.points, &init)
        }
        Method::SemisupDina | Method::SemisupNida => {
            let kind = method.pseudo_model().expect("semisup method");
            let pseudo_model = sample_cdm(kind, &data.q, cfg.slip_max, cfg.guess_max, rng)?;
            run_semisup(data, profiles, l_h, cfg.pseudo_m, &pseudo_model, rng)
        }
    }
}

/// Pseudodata per possible profile, LCVQE over pseudodata plus real data,
/// result restricted to the real points.
fn run_semisup(
    data: &CellData,
    profiles: &ProfileSet,
    l_h: usize,
    pseudo_m: usize,
    pseudo_model: &Cdm,
    rng: &mut ChaCha8Rng,
) -> Result<ClusteringResult> {
    let cohort: Vec<Profile> = profiles
        .iter()
        .flat_map(|p| std::iter::repeat_n(p.clone(), pseudo_m))
        .collect();
    let responses = simulate_responses(&cohort, &data.q, pseudo_model, rng)?;
    let pseudo_scores = capability_scores(&sum_scores(&responses, &data.q)?, &data.q)?;

    let mut points: Vec<Vec<f64>> = pseudo_scores.points().to_vec();
    points.extend(data.points.iter().cloned());
    let mut labels: Vec<Option<Profile>> = cohort.into_iter().map(Some).collect();
    labels.extend(std::iter::repeat_n(None, data.points.len()));

    // Starting centers: the per-profile pseudodata means.
    let dim = data.q.num_skills();
    let mut centers = Vec::with_capacity(l_h);
    for p_idx in 0..profiles.len() {
        let mut mean = vec![0.0; dim];
        for i in 0..pseudo_m {
            for (acc, v) in mean.iter_mut().zip(pseudo_scores.row(p_idx * pseudo_m + i)) {
                *acc += v;
            }
        }
        for acc in mean.iter_mut() {
            *acc /= pseudo_m as f64;
        }
        centers.push(mean);
    }
    let init = CenterSet::labeled(centers, profiles.profiles().to_vec())?;
    let constraints = derive_constraints(&labels)?;
    lcvqe(&points, &labels, l_h, &constraints, &init)
}

/// Per-student assigned profiles: intrinsic cluster labels when the method
/// produced them, otherwise nearest licit vertex of each cluster center.
/// Returns None (with a flag) when some cluster stayed unlabeled.
fn derive_student_profiles(
    result: &ClusteringResult,
    licit: &ProfileSet,
) -> Result<(Option<Vec<Profile>>, Vec<String>)> {
    let mut flags = Vec::new();
    let cluster_labels: Option<Vec<Profile>> = if result.labels.is_empty() {
        let centers = CenterSet::new(result.centers.clone())?;
        let vertex = nearest_vertex_labels(&centers, licit)?;
        if vertex.had_tie {
            flags.push("vertex_tie".to_string());
        }
        if vertex.had_collision {
            flags.push("vertex_collision".to_string());
        }
        Some(vertex.labels)
    } else if result.labels.iter().all(|l| l.is_some()) {
        Some(result.labels.iter().map(|l| l.clone().unwrap()).collect())
    } else {
        flags.push("unlabeled_cluster".to_string());
        None
    };
    let assigned = cluster_labels.map(|labels| {
        result
            .assignment
            .iter()
            .map(|&c| labels[c].clone())
            .collect()
    });
    Ok((assigned, flags))
}

/// Output files written by a full pipeline run.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub results_csv: PathBuf,
    pub figures: Vec<PathBuf>,
    pub run_meta: PathBuf,
}

/// Write `results.csv`, `figures/*.svg`, and `run_meta.json` under
/// `out_dir`. Every byte written is a pure function of the config and
/// seed.
pub fn write_outputs(output: &ExperimentOutput, out_dir: &Path) -> Result<OutputPaths> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let results_csv = out_dir.join("results.csv");
    write_csv(&output.rows, &results_csv)?;
    let figures = if output.rows.is_empty() {
        Vec::new()
    } else {
        render_figures(&output.rows, &out_dir.join("figures"))?
    };
    let run_meta = out_dir.join("run_meta.json");
    let json = serde_json::to_string_pretty(&output.meta)?;
    std::fs::write(&run_meta, json + "\n")
        .map_err(|e| Error::io(run_meta.display().to_string(), e))?;
    Ok(OutputPaths {
        results_csv,
        figures,
        run_meta,
    })
}
