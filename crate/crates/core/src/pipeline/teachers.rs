use super::cv::CvPlan;
use super::dataset::SparseTargetMatrix;
use super::{derive_seed, FitRecord, FitKind, PipelineError};
use crate::descriptors::FeatureMatrix;
use crate::gbt::{fit_gbt, model_from_json, model_to_json, predict_gbt, GbtError, GbtModel, GbtParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// The k fold teachers of every task under one CV seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TeacherSet {
    pub seed_index: usize,
    pub cv_seed: u64,
    /// Task (column) each teacher row belongs to.
    pub tasks: Vec<usize>,
    /// `models[i][fold]` was fit on every fold but `fold` for `tasks[i]`.
    pub models: Vec<Vec<GbtModel>>,
    pub fits: Vec<FitRecord>,
}

/// Dense auxiliary targets, row-major `n × names.len()`, all observed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTargets {
    pub names: Vec<String>,
    pub source_tasks: Vec<usize>,
    pub values: Vec<f64>,
    pub observed: Vec<bool>,
    pub out_of_fold: bool,
}

/// Fits one GBT per (task, fold) on the observed rows outside that fold.
pub fn fit_teachers(
    features: &FeatureMatrix,
    targets: &SparseTargetMatrix,
    plan: &CvPlan,
    seed_index: usize,
    params: &GbtParams,
) -> Result<TeacherSet, PipelineError> {
    let tasks = targets.experimental_tasks();
    let (n, t) = (targets.n_rows(), targets.n_tasks());
    if features.rows != n || plan.n_rows() != n {
        return Err(PipelineError::Schema("features, targets and CV plan disagree on row count".into()));
    }
    let cv_seed = plan.seeds[seed_index];
    let fold_of = &plan.assignment[seed_index];
    let jobs: Vec<(usize, usize)> = tasks.iter().flat_map(|&task| (0..plan.k).map(move |f| (task, f))).collect();
    let fitted: Vec<Result<(GbtModel, FitRecord), PipelineError>> = jobs
        .par_iter()
        .map(|&(task, fold)| {
            let y: Vec<f64> = (0..n).map(|r| targets.values[r * t + task]).collect();
            let mask: Vec<bool> = (0..n).map(|r| targets.observed[r * t + task] && fold_of[r] != fold).collect();
            let p = GbtParams {
                seed: derive_seed(&[params.seed, cv_seed, task as u64, fold as u64]),
                ..params.clone()
            };
            let model = fit_gbt(features, &y, &mask, &p).map_err(|e| match e {
                GbtError::TooFewObserved(_) => PipelineError::DegenerateTask {
                    task: targets.task_names[task].clone(),
                    detail: format!("fold {fold} of seed {cv_seed} leaves too few training rows"),
                },
                other => other.into(),
            })?;
            let record = FitRecord {
                kind: FitKind::Teacher,
                seed_index,
                fold,
                task: Some(task),
                rows: (0..n).filter(|&r| mask[r]).collect(),
            };
            Ok((model, record))
        })
        .collect();
    let mut models = vec![Vec::with_capacity(plan.k); tasks.len()];
    let mut fits = Vec::with_capacity(jobs.len());
    // Jobs are task-major, so consecutive runs of k results share a task.
    for (i, res) in fitted.into_iter().enumerate() {
        let (m, rec) = res?;
        models[i / plan.k].push(m);
        fits.push(rec);
    }
    Ok(TeacherSet {
        seed_index,
        cv_seed,
        tasks,
        models,
        fits,
    })
}

impl TeacherSet {
    /// `out[r * tasks.len() + i]`: prediction of the teacher whose fold held out `r`.
    pub fn out_of_fold(&self, features: &FeatureMatrix, plan: &CvPlan) -> Result<Vec<f64>, PipelineError> {
        let per_fold = self.all_predictions(features)?;
        let fold_of = &plan.assignment[self.seed_index];
        let k = self.tasks.len();
        Ok((0..features.rows * k)
            .map(|i| {
                let (r, ti) = (i / k, i % k);
                per_fold[ti][fold_of[r]][r]
            })
            .collect())
    }

    /// `[task][fold][row]` predictions over every molecule.
    fn all_predictions(&self, features: &FeatureMatrix) -> Result<Vec<Vec<Vec<f64>>>, PipelineError> {
        self.models
            .par_iter()
            .map(|folds| folds.iter().map(|m| predict_gbt(m, features).map_err(PipelineError::from)).collect())
            .collect()
    }

    /// Mean over all fold teachers, or only the held-out teacher when `out_of_fold`.
    pub fn synthetic(
        &self,
        features: &FeatureMatrix,
        plan: &CvPlan,
        names: &[String],
        out_of_fold: bool,
    ) -> Result<SyntheticTargets, PipelineError> {
        let k = self.tasks.len();
        let values = if out_of_fold {
            self.out_of_fold(features, plan)?
        } else {
            let per_fold = self.all_predictions(features)?;
            (0..features.rows * k)
                .map(|i| {
                    let (r, ti) = (i / k, i % k);
                    per_fold[ti].iter().map(|p| p[r]).sum::<f64>() / per_fold[ti].len() as f64
                })
                .collect()
        };
        Ok(SyntheticTargets {
            names: self.tasks.iter().map(|&t| format!("{}_syn", names[t])).collect(),
            source_tasks: self.tasks.clone(),
            observed: vec![true; values.len()],
            values,
            out_of_fold,
        })
    }

    /// Writes `index.json` plus one model file per (task, fold). `dataset_hash`
    /// ties the teachers to the data they were fit on.
    pub fn save(&self, dir: &Path, task_names: &[String], dataset_hash: &str) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (ti, folds) in self.models.iter().enumerate() {
            for (f, m) in folds.iter().enumerate() {
                let name = format!("task{}_fold{f}.json", self.tasks[ti]);
                std::fs::write(dir.join(&name), model_to_json(m))?;
                files.push(name);
            }
        }
        let index = TeacherIndex {
            seed_index: self.seed_index,
            cv_seed: self.cv_seed,
            tasks: self.tasks.clone(),
            task_names: self.tasks.iter().map(|&t| task_names[t].clone()).collect(),
            folds: self.models.first().map_or(0, Vec::len),
            dataset_hash: dataset_hash.to_string(),
            files,
        };
        std::fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)?)?;
        Ok(())
    }

    /// Loads a saved set and the dataset hash it was stored with.
    pub fn load(dir: &Path) -> Result<(TeacherSet, String), PipelineError> {
        let index: TeacherIndex = serde_json::from_str(&std::fs::read_to_string(dir.join("index.json"))?)?;
        let mut models = Vec::new();
        let mut files = index.files.iter();
        for _ in &index.tasks {
            let mut folds = Vec::new();
            for _ in 0..index.folds {
                let name = files.next().ok_or_else(|| PipelineError::Schema("teacher index is short".into()))?;
                folds.push(model_from_json(&std::fs::read_to_string(dir.join(name))?)?);
            }
            models.push(folds);
        }
        let set = TeacherSet {
            seed_index: index.seed_index,
            cv_seed: index.cv_seed,
            tasks: index.tasks,
            models,
            fits: Vec::new(),
        };
        Ok((set, index.dataset_hash))
    }
}

#[derive(Serialize, Deserialize)]
struct TeacherIndex {
    seed_index: usize,
    cv_seed: u64,
    tasks: Vec<usize>,
    task_names: Vec<String>,
    folds: usize,
    dataset_hash: String,
    files: Vec<String>,
}

/// Directory of the teachers for one CV seed under a run directory.
pub fn teacher_dir(out: &Path, cv_seed: u64) -> std::path::PathBuf {
    out.join("teachers").join(format!("seed{cv_seed}"))
}

/// Reuses teachers saved under `out` for the same data and seed, fitting
/// (and saving) any that are missing or stale.
pub fn load_or_fit_teachers(
    features: &FeatureMatrix,
    targets: &SparseTargetMatrix,
    plan: &CvPlan,
    params: &GbtParams,
    out: &Path,
) -> Result<Vec<TeacherSet>, PipelineError> {
    let hash = targets.content_hash();
    (0..plan.seeds.len())
        .map(|s| {
            let dir = teacher_dir(out, plan.seeds[s]);
            if let Ok((set, h)) = TeacherSet::load(&dir) {
                let same_params = set.models.iter().flatten().all(|m| GbtParams {
                    seed: params.seed,
                    ..m.params.clone()
                } == *params);
                if h == hash && same_params && set.seed_index == s && set.tasks == targets.experimental_tasks() {
                    log::info!("reusing teachers in {}", dir.display());
                    return Ok(set);
                }
            }
            let set = fit_teachers(features, targets, plan, s, params)?;
            set.save(&dir, &targets.task_names, &hash)?;
            Ok(set)
        })
        .collect()
}

/// Fits the teachers for one CV seed and derives the synthetic columns.
pub fn generate_synthetic_targets(
    features: &FeatureMatrix,
    targets: &SparseTargetMatrix,
    plan: &CvPlan,
    seed_index: usize,
    params: &GbtParams,
    out_of_fold: bool,
) -> Result<(SyntheticTargets, TeacherSet), PipelineError> {
    let set = fit_teachers(features, targets, plan, seed_index, params)?;
    let syn = set.synthetic(features, plan, &targets.task_names, out_of_fold)?;
    Ok((syn, set))
}
