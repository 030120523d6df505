use super::cv::make_cv_plan;
use super::dataset::assemble_dataset;
use super::experiment::{fit_all_teachers, prepare_data, run_experiment, ExperimentResult, Mode, RunConfig};
use super::teachers::teacher_dir;
use super::PipelineError;
use crate::descriptors::SCHEMA_ID;
use crate::report::{compare_models, emit_report, format_sig, Comparison};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a reported experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub sources: Vec<PathBuf>,
    /// SHA-256 of the assembled target matrix in CSV form.
    pub dataset_hash: String,
    pub schema_id: String,
    pub n_rows: usize,
    pub tasks: Vec<String>,
    pub config: RunConfig,
    pub modes: Vec<Mode>,
    pub cv_plan_hash: String,
    pub threads: usize,
    /// Relative path → SHA-256 of every CSV written by the run.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest, PipelineError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Comparisons emitted for the modes that were run, reference first.
pub fn comparison_pairs(modes: &[Mode]) -> Vec<(Mode, Mode)> {
    [
        (Mode::XgbBaseline, Mode::GtSta),
        (Mode::GtNaive, Mode::GtSta),
        (Mode::XgbBaseline, Mode::GtNaive),
    ]
    .into_iter()
    .filter(|(a, b)| modes.contains(a) && modes.contains(b))
    .collect()
}

/// Held-out predictions as `seed,smiles,<task>...`, one line per (seed, molecule).
pub fn predictions_csv(result: &ExperimentResult, keys: &[String], tasks: &[String], seeds: &[u64]) -> String {
    let t = tasks.len();
    let mut s = String::from("seed,smiles");
    for name in tasks {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (si, pred) in result.predictions.iter().enumerate() {
        for (r, key) in keys.iter().enumerate() {
            s.push_str(&format!("{},{key}", seeds[si]));
            for v in &pred[r * t..(r + 1) * t] {
                s.push_str(&format!(",{v:?}"));
            }
            s.push('\n');
        }
    }
    s
}

fn per_seed_csv(result: &ExperimentResult, seeds: &[u64]) -> String {
    let mut s = String::from("seed,Target,mae,rmse,r2,n_points\n");
    for (si, row) in result.per_seed.iter().enumerate() {
        for m in row {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                seeds[si],
                m.task,
                format_sig(m.mae),
                format_sig(m.rmse),
                m.r2.map(format_sig).unwrap_or_default(),
                m.n_points
            ));
        }
    }
    s
}

fn hash_file(path: &Path) -> Result<String, PipelineError> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

/// Assembles, featurizes, fits teachers, runs every mode, writes the
/// report and finally the manifest. Nothing under `out/report` is written
/// unless every mode succeeds.
pub fn run_all(sources: &[PathBuf], cfg: &RunConfig, modes: &[Mode], out: &Path) -> Result<RunManifest, PipelineError> {
    cfg.validate()?;
    if modes.is_empty() {
        return Err(PipelineError::Config("no modes selected".into()));
    }
    let dataset = assemble_dataset(sources, &cfg.tasks)?;
    std::fs::create_dir_all(out)?;
    let data = prepare_data(&dataset, cfg, Some(&out.join("cache")))?;
    let plan = make_cv_plan(data.targets.n_rows(), &cfg.cv_seeds, cfg.folds)?;
    log::info!(
        "{} molecules, {} tasks, {} descriptors after pruning",
        data.targets.n_rows(),
        data.targets.n_tasks(),
        data.features.cols
    );

    let mut written: Vec<PathBuf> = Vec::new();
    let dataset_path = out.join("dataset.csv");
    std::fs::write(&dataset_path, data.targets.to_csv())?;
    written.push(dataset_path);

    let manifest_hash = data.targets.content_hash();
    let needs_teachers = modes.iter().any(|m| *m != Mode::GtNaive);
    let teachers = if needs_teachers {
        let sets = fit_all_teachers(&data, &plan, cfg)?;
        for set in &sets {
            let dir = teacher_dir(out, set.cv_seed);
            set.save(&dir, &data.targets.task_names, &manifest_hash)?;
            let syn = set.synthetic(&data.features, &plan, &data.targets.task_names, cfg.oof_synthetic)?;
            let path = dir.join("synthetic.csv");
            let block = data.targets.with_synthetic(&syn.names, &syn.values);
            std::fs::write(&path, block.to_csv())?;
            written.push(path);
        }
        sets
    } else {
        Vec::new()
    };

    let mut results = Vec::new();
    for &mode in modes {
        log::info!("running {mode}");
        let result = run_experiment(mode, &data, &plan, cfg, &teachers, Some(out))?;
        results.push(result);
    }

    for r in &results {
        let dir = out.join("predictions");
        std::fs::create_dir_all(&dir)?;
        let p = dir.join(format!("{}.csv", r.mode));
        std::fs::write(&p, predictions_csv(r, &data.targets.row_keys, &data.targets.task_names, &plan.seeds))?;
        written.push(p);
    }
    let report_dir = out.join("report");
    let comparisons: Vec<Comparison> = comparison_pairs(modes)
        .into_iter()
        .map(|(a, b)| {
            let find = |m: Mode| &results.iter().find(|r| r.mode == m).expect("mode was run").report;
            compare_models(find(a), find(b))
        })
        .collect::<Result<_, _>>()?;
    let metrics: Vec<_> = results.iter().map(|r| r.report.clone()).collect();
    if comparisons.is_empty() {
        std::fs::create_dir_all(&report_dir)?;
        for m in &metrics {
            let p = report_dir.join(format!("metrics_{}.csv", m.mode));
            std::fs::write(&p, crate::report::metrics_csv(m))?;
            written.push(p);
        }
    } else {
        written.extend(emit_report(&comparisons, &metrics, &report_dir)?);
    }
    for r in &results {
        let p = report_dir.join(format!("metrics_{}_per_seed.csv", r.mode));
        std::fs::write(&p, per_seed_csv(r, &plan.seeds))?;
        written.push(p);
    }

    let mut outputs = BTreeMap::new();
    for p in written.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let rel = p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/");
        outputs.insert(rel, hash_file(p)?);
    }
    let manifest = RunManifest {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        sources: sources.to_vec(),
        dataset_hash: manifest_hash,
        schema_id: SCHEMA_ID.to_string(),
        n_rows: data.targets.n_rows(),
        tasks: data.targets.task_names.clone(),
        config: cfg.clone(),
        modes: modes.to_vec(),
        cv_plan_hash: plan.hash(),
        threads: rayon::current_num_threads(),
        outputs,
    };
    std::fs::write(out.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Re-runs a manifest into `out` and checks the inputs still match.
pub fn replay_manifest(manifest: &RunManifest, out: &Path) -> Result<RunManifest, PipelineError> {
    if manifest.schema_id != SCHEMA_ID {
        return Err(PipelineError::ManifestMismatch(format!(
            "descriptor schema {} differs from {}",
            manifest.schema_id, SCHEMA_ID
        )));
    }
    let replayed = run_all(&manifest.sources, &manifest.config, &manifest.modes, out)?;
    if replayed.dataset_hash != manifest.dataset_hash {
        return Err(PipelineError::ManifestMismatch("dataset contents changed".into()));
    }
    if replayed.cv_plan_hash != manifest.cv_plan_hash {
        return Err(PipelineError::ManifestMismatch("CV plan changed".into()));
    }
    Ok(replayed)
}
