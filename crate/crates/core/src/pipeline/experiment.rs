use super::cv::{CvPlan, DEFAULT_CV_SEEDS, DEFAULT_FOLDS};
use super::dataset::{Dataset, SparseTargetMatrix, TaskKind, TaskSpec};
use super::teachers::{fit_teachers, TeacherSet};
use super::{derive_seed, FitKind, FitRecord, PipelineError};
use crate::descriptors::{
    arcsinh_pretransform, build_feature_matrix, cached_feature_matrix, prune_features, FeatureMatrix,
    DEFAULT_ARCSINH_THRESHOLD, DEFAULT_CORR_MAX, DEFAULT_VAR_EPS,
};
use crate::gbt::GbtParams;
use crate::gt::{
    featurize_graph, save_checkpoint, stratified_split, train_gt, GraphInput, GtConfig, GtModel, TaskData,
    TaskStandardizer, TrainingLog, NODE_FEATURES,
};
use crate::report::{aggregate_seeds, compute_metrics, MetricsReport, TaskMetrics};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "xgb")]
    XgbBaseline,
    #[serde(rename = "gt")]
    GtNaive,
    #[serde(rename = "gt-sta")]
    GtSta,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::XgbBaseline, Mode::GtNaive, Mode::GtSta];

    pub fn name(self) -> &'static str {
        match self {
            Mode::XgbBaseline => "xgb",
            Mode::GtNaive => "gt",
            Mode::GtSta => "gt-sta",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}, expected xgb, gt or gt-sta"))
    }
}

/// Every knob of a run; serialized verbatim into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cv_seeds: Vec<u64>,
    pub folds: usize,
    pub gbt: GbtParams,
    /// `n_tasks` is set per mode.
    pub gt: GtConfig,
    /// Inner early-stopping split of each training fold.
    pub val_fraction: f64,
    /// Loss weight of every synthetic column (experimental columns weigh 1).
    pub synthetic_weight: f64,
    /// Use only the held-out teacher per molecule instead of the mean of all teachers.
    pub oof_synthetic: bool,
    pub arcsinh_threshold: f64,
    pub var_eps: f64,
    pub corr_max: f64,
    /// Declared target columns; empty means every non-`smiles` column.
    pub tasks: Vec<TaskSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            cv_seeds: DEFAULT_CV_SEEDS.to_vec(),
            folds: DEFAULT_FOLDS,
            gbt: GbtParams::default(),
            gt: GtConfig::default(),
            val_fraction: 0.1,
            synthetic_weight: 1.0,
            oof_synthetic: false,
            arcsinh_threshold: DEFAULT_ARCSINH_THRESHOLD,
            var_eps: DEFAULT_VAR_EPS,
            corr_max: DEFAULT_CORR_MAX,
            tasks: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.cv_seeds.is_empty() {
            return bad("cv_seeds is empty");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must be in (0, 1)");
        }
        if !(self.synthetic_weight >= 0.0 && self.synthetic_weight.is_finite()) {
            return bad("synthetic_weight must be finite and non-negative");
        }
        self.gbt.validate()?;
        self.gt.validate().map_err(PipelineError::from)
    }
}

/// Model-ready view of a dataset: experimental targets, transformed and
/// pruned descriptors, and graph inputs, all in row order.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub targets: SparseTargetMatrix,
    pub features: FeatureMatrix,
    pub graphs: Vec<GraphInput>,
}

/// Drops tasks with fewer than `folds` observations, computes descriptors
/// (through the cache when `cache_dir` is set), then arcsinh and pruning.
pub fn prepare_data(dataset: &Dataset, cfg: &RunConfig, cache_dir: Option<&Path>) -> Result<PreparedData, PipelineError> {
    let full = &dataset.targets;
    let keep: Vec<usize> = (0..full.n_tasks())
        .filter(|&t| {
            let n = full.task_observations(t).len();
            if n < cfg.folds {
                log::warn!("task {} has {n} observations (< {} folds), excluded", full.task_names[t], cfg.folds);
            }
            n >= cfg.folds
        })
        .collect();
    if keep.is_empty() {
        return Err(PipelineError::DegenerateTask {
            task: "*".into(),
            detail: "no task has enough observations".into(),
        });
    }
    let t = full.n_tasks();
    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut observed = Vec::new();
    for r in 0..full.n_rows() {
        if keep.iter().any(|&k| full.observed[r * t + k]) {
            rows.push(r);
            values.extend(keep.iter().map(|&k| full.values[r * t + k]));
            observed.extend(keep.iter().map(|&k| full.observed[r * t + k]));
        }
    }
    let targets = SparseTargetMatrix {
        row_keys: rows.iter().map(|&r| full.row_keys[r].clone()).collect(),
        task_names: keep.iter().map(|&k| full.task_names[k].clone()).collect(),
        units: keep.iter().map(|&k| full.units[k].clone()).collect(),
        task_kind: vec![TaskKind::Experimental; keep.len()],
        values,
        observed,
    };
    let mols: Vec<_> = rows.iter().map(|&r| dataset.molecules[r].clone()).collect();
    let raw = match cache_dir {
        Some(dir) => cached_feature_matrix(dir, &targets.row_keys, &mols)?,
        None => build_feature_matrix(&mols),
    };
    let transformed = arcsinh_pretransform(&raw, cfg.arcsinh_threshold);
    let features = prune_features(&transformed, cfg.var_eps, cfg.corr_max)?;
    let graphs = mols.par_iter().map(featurize_graph).collect();
    Ok(PreparedData {
        targets,
        features,
        graphs,
    })
}

/// Teachers for every CV seed, in seed order.
pub fn fit_all_teachers(data: &PreparedData, plan: &CvPlan, cfg: &RunConfig) -> Result<Vec<TeacherSet>, PipelineError> {
    (0..plan.seeds.len())
        .map(|s| fit_teachers(&data.features, &data.targets, plan, s, &cfg.gbt))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub mode: Mode,
    /// `per_seed[s][task]`, metrics over the pooled held-out predictions.
    pub per_seed: Vec<Vec<TaskMetrics>>,
    pub report: MetricsReport,
    /// `predictions[s]`: row-major `n × n_experimental` held-out predictions.
    pub predictions: Vec<Vec<f64>>,
    pub fits: Vec<FitRecord>,
    /// Training logs of GT modes, `(seed index, fold, log)`.
    pub logs: Vec<(usize, usize, TrainingLog)>,
}

struct FoldOutput {
    test_rows: Vec<usize>,
    /// Row-major `test_rows.len() × n_experimental`.
    pred: Vec<f64>,
    fit: FitRecord,
    log: TrainingLog,
    model: GtModel,
    standardizer: TaskStandardizer,
}

/// Seed used for the GT of one (CV seed, fold); shared by naive and STA runs.
pub fn gt_seed(cfg: &RunConfig, cv_seed: u64, fold: usize) -> u64 {
    derive_seed(&[cfg.gt.seed, cv_seed, fold as u64])
}

#[allow(clippy::too_many_arguments)]
fn train_fold(
    data: &PreparedData,
    plan: &CvPlan,
    cfg: &RunConfig,
    seed_index: usize,
    fold: usize,
    block: &SparseTargetMatrix,
    task_weight: &[f64],
) -> Result<FoldOutput, PipelineError> {
    let t = block.n_tasks();
    let n_exp = data.targets.n_tasks();
    let cv_seed = plan.seeds[seed_index];
    let train_rows = plan.train_rows(seed_index, fold);
    let test_rows = plan.test_rows(seed_index, fold);

    let exp_observed: Vec<bool> = train_rows
        .iter()
        .flat_map(|&r| data.targets.observed[r * n_exp..(r + 1) * n_exp].iter().copied())
        .collect();
    let (inner_pos, val_pos) = stratified_split(&exp_observed, n_exp, cfg.val_fraction, gt_seed(cfg, cv_seed, fold));
    let inner: Vec<usize> = inner_pos.iter().map(|&p| train_rows[p]).collect();
    let val: Vec<usize> = val_pos.iter().map(|&p| train_rows[p]).collect();

    let take = |rows: &[usize]| TaskData {
        graphs: rows.iter().map(|&r| data.graphs[r].clone()).collect(),
        targets: rows.iter().flat_map(|&r| block.values[r * t..(r + 1) * t].iter().copied()).collect(),
        observed: rows.iter().flat_map(|&r| block.observed[r * t..(r + 1) * t].iter().copied()).collect(),
        n_tasks: t,
    };
    let mut train_set = take(&inner);
    let mut val_set = take(&val);
    let standardizer = TaskStandardizer::fit(&train_set.targets, &train_set.observed, t);
    train_set.targets = standardizer.transform(&train_set.targets);
    val_set.targets = standardizer.transform(&val_set.targets);

    let config = GtConfig {
        n_tasks: t,
        seed: gt_seed(cfg, cv_seed, fold),
        ..cfg.gt.clone()
    };
    let (model, log) = train_gt(&config, NODE_FEATURES, &train_set, &val_set, task_weight)?;
    let mut pred = Vec::with_capacity(test_rows.len() * n_exp);
    for &r in &test_rows {
        let out = standardizer.inverse(&model.predict(&data.graphs[r])?);
        pred.extend_from_slice(&out[..n_exp]);
    }
    let mut used: Vec<usize> = train_rows
        .iter()
        .copied()
        .filter(|&r| data.targets.observed[r * n_exp..(r + 1) * n_exp].iter().any(|&o| o))
        .collect();
    used.sort_unstable();
    Ok(FoldOutput {
        test_rows,
        pred,
        fit: FitRecord {
            kind: FitKind::GraphTransformer,
            seed_index,
            fold,
            task: None,
            rows: used,
        },
        log,
        model,
        standardizer,
    })
}

fn seed_metrics(data: &PreparedData, pred: &[f64]) -> Result<Vec<TaskMetrics>, PipelineError> {
    let t = data.targets.n_tasks();
    (0..t)
        .map(|task| {
            let obs = data.targets.task_observations(task);
            let p: Vec<f64> = obs.iter().map(|&(r, _)| pred[r * t + task]).collect();
            let y: Vec<f64> = obs.iter().map(|&(_, v)| v).collect();
            Ok(compute_metrics(&data.targets.task_names[task], &p, &y)?)
        })
        .collect()
}

/// Cross-validated evaluation of one mode on the experimental tasks.
///
/// `teachers` (one set per CV seed) are required by `xgb` and `gt-sta`.
/// When `artifacts` is set, GT checkpoints and training logs are written
/// under it.
pub fn run_experiment(
    mode: Mode,
    data: &PreparedData,
    plan: &CvPlan,
    cfg: &RunConfig,
    teachers: &[TeacherSet],
    artifacts: Option<&Path>,
) -> Result<ExperimentResult, PipelineError> {
    cfg.validate()?;
    let n = data.targets.n_rows();
    let n_exp = data.targets.n_tasks();
    if plan.n_rows() != n {
        return Err(PipelineError::Schema("CV plan does not match the dataset".into()));
    }
    if mode != Mode::GtNaive && teachers.len() != plan.seeds.len() {
        return Err(PipelineError::Config(format!(
            "{mode} needs teachers for all {} CV seeds, got {}",
            plan.seeds.len(),
            teachers.len()
        )));
    }
    let mut predictions = Vec::with_capacity(plan.seeds.len());
    let mut fits = Vec::new();
    let mut logs = Vec::new();

    if mode == Mode::XgbBaseline {
        for set in teachers {
            if set.tasks.len() != n_exp {
                return Err(PipelineError::Schema("teacher set does not cover every task".into()));
            }
            predictions.push(set.out_of_fold(&data.features, plan)?);
            fits.extend(set.fits.iter().cloned());
        }
    } else {
        let blocks: Vec<SparseTargetMatrix> = (0..plan.seeds.len())
            .map(|s| {
                if mode == Mode::GtSta {
                    let syn = teachers[s].synthetic(&data.features, plan, &data.targets.task_names, cfg.oof_synthetic)?;
                    Ok(data.targets.with_synthetic(&syn.names, &syn.values))
                } else {
                    Ok(data.targets.clone())
                }
            })
            .collect::<Result<_, PipelineError>>()?;
        let jobs: Vec<(usize, usize)> = (0..plan.seeds.len()).flat_map(|s| (0..plan.k).map(move |f| (s, f))).collect();
        let outputs: Vec<Result<FoldOutput, PipelineError>> = jobs
            .par_iter()
            .map(|&(s, f)| {
                let block = &blocks[s];
                let w: Vec<f64> = block
                    .task_kind
                    .iter()
                    .map(|k| if *k == TaskKind::Synthetic { cfg.synthetic_weight } else { 1.0 })
                    .collect();
                train_fold(data, plan, cfg, s, f, block, &w)
            })
            .collect();
        let mut current = vec![f64::NAN; n * n_exp];
        for (&(s, f), out) in jobs.iter().zip(outputs) {
            let out = out?;
            for (i, &r) in out.test_rows.iter().enumerate() {
                current[r * n_exp..(r + 1) * n_exp].copy_from_slice(&out.pred[i * n_exp..(i + 1) * n_exp]);
            }
            if let Some(dir) = artifacts {
                let dir = dir.join("models").join(mode.name());
                std::fs::create_dir_all(&dir)?;
                let stem = format!("seed{}_fold{f}", plan.seeds[s]);
                save_checkpoint(&dir.join(format!("{stem}.ckpt")), &out.model, Some(&out.standardizer))?;
                std::fs::write(dir.join(format!("{stem}_log.csv")), out.log.to_csv())?;
            }
            fits.push(out.fit);
            logs.push((s, f, out.log));
            if f + 1 == plan.k {
                predictions.push(std::mem::replace(&mut current, vec![f64::NAN; n * n_exp]));
            }
        }
    }
    let per_seed = predictions
        .iter()
        .map(|p| seed_metrics(data, p))
        .collect::<Result<Vec<_>, _>>()?;
    let report = aggregate_seeds(mode.name(), &per_seed);
    Ok(ExperimentResult {
        mode,
        per_seed,
        report,
        predictions,
        fits,
        logs,
    })
}
