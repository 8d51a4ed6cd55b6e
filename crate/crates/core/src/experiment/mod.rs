//! Experiment harness: configuration, the simulation grid, CSV results,
//! and SVG figures.

pub mod config;
pub mod figures;
pub mod rows;
pub mod runner;
pub mod svg;

pub use config::{ExperimentConfig, HierarchySpec, Method, ResolvedHierarchy, SubsetSizes};
pub use figures::{mean_ari_by_cell, render_figures, CellMean};
pub use rows::{csv_bytes, read_csv, write_csv, ResultRow};
pub use runner::{
    run_experiment, run_experiment_with_workers, worker_count_from_env, write_outputs,
    ExperimentOutput, OutputPaths, RunMeta, WORKERS_ENV,
};
