//! Experiment orchestration: dataset assembly, repeated k-fold planning,
//! boosted-tree teachers and synthetic targets, the three model modes and
//! the surrogate benchmark generator.

mod benchmark;
mod cv;
mod dataset;
mod experiment;
mod manifest;
mod teachers;

pub use benchmark::{generate_benchmark, Benchmark, BenchmarkSpec, TaskFormula, TASK_DESCRIPTOR_POOL};
pub use cv::{make_cv_plan, CvPlan, DEFAULT_CV_SEEDS, DEFAULT_FOLDS};
pub use dataset::{assemble_dataset, AssemblyReport, Dataset, RowIssue, SparseTargetMatrix, TaskKind, TaskSpec};
pub use experiment::{
    fit_all_teachers, gt_seed, prepare_data, run_experiment, ExperimentResult, Mode, PreparedData, RunConfig,
};
pub use manifest::{comparison_pairs, predictions_csv, replay_manifest, run_all, RunManifest, MANIFEST_FILE};
pub use teachers::{
    fit_teachers, generate_synthetic_targets, load_or_fit_teachers, teacher_dir, SyntheticTargets, TeacherSet,
};

use crate::descriptors::MatrixError;
use crate::gbt::GbtError;
use crate::gt::GtError;
use crate::report::{CompareError, MetricsError, ReportError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("input schema: {0}")]
    Schema(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("no usable rows after parsing and filtering")]
    NoUsableRows,
    #[error("{rows} rows cannot be split into {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("task {task} is degenerate: {detail}")]
    DegenerateTask { task: String, detail: String },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Gbt(#[from] GbtError),
    #[error(transparent)]
    Gt(#[from] GtError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Report(#[from] ReportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Teacher,
    GraphTransformer,
}

/// Which rows' experimental targets entered one model fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub kind: FitKind,
    pub seed_index: usize,
    pub fold: usize,
    pub task: Option<usize>,
    pub rows: Vec<usize>,
}

/// Mixes seed components into one 64-bit seed (splitmix64 finalizer chain).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h ^= h >> 31;
    }
    h
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| PipelineError::Config(e.to_string()))?;
    Ok(pool.install(f))
}
