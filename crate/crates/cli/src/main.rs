use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use staug_core::pipeline::{
    assemble_dataset, comparison_pairs, generate_benchmark, load_or_fit_teachers, make_cv_plan, prepare_data,
    predictions_csv, replay_manifest, run_all, run_experiment, with_threads, BenchmarkSpec, Mode, RunConfig, RunManifest,
};
use staug_core::report::{aggregate_seeds, compare_models, compute_metrics, emit_report, metrics_csv, MetricsReport};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Synthetic task augmentation for multitask molecular property prediction.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// JSON run configuration (GBT, GT, CV and filtering settings).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "STAUG_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "staug-out")]
    out: PathBuf,
    /// Comma-separated CV seeds, overriding the configuration.
    #[arg(long, global = true, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Synthetic targets from the held-out teacher only, not the mean of all fold teachers.
    #[arg(long, global = true)]
    oof_synthetic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sources {
    /// Dataset CSV files with a `smiles` column.
    #[arg(required = true)]
    data: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the dataset and write descriptor matrices.
    Featurize(Sources),
    /// Write a surrogate benchmark dataset with known ground truth.
    GenBenchmark {
        #[arg(long, default_value_t = 2000)]
        n_molecules: usize,
        #[arg(long, default_value_t = 6)]
        tasks: usize,
        #[arg(long, default_value_t = 0.6)]
        sparsity: f64,
        /// Noise standard deviation as a fraction of each task's std.
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit the boosted-tree teachers and write synthetic targets.
    Teach(Sources),
    /// Cross-validate one model mode.
    Train {
        #[arg(long)]
        mode: Mode,
        #[command(flatten)]
        sources: Sources,
    },
    /// Score a predictions CSV against a dataset CSV.
    Evaluate {
        /// Predictions with `seed`, `smiles` and one column per task.
        #[arg(long)]
        predictions: PathBuf,
        /// Dataset the predictions refer to.
        #[arg(long)]
        data: PathBuf,
        /// Name used for the metrics file.
        #[arg(long, default_value = "eval")]
        name: String,
    },
    /// Compare the metrics of previously trained modes.
    Report,
    /// Run every stage and write a manifest, or replay a manifest.
    RunAll {
        /// Modes to run (default: all).
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<Mode>>,
        /// Replay this manifest instead of reading sources.
        #[arg(long)]
        manifest: Option<PathBuf>,
        data: Vec<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seeds) = &cli.seed_list {
        cfg.cv_seeds = seeds.clone();
    }
    if cli.oof_synthetic {
        cfg.oof_synthetic = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn results_path(out: &Path, mode: &str) -> PathBuf {
    out.join("results").join(format!("{mode}.json"))
}

fn featurize(cli: &Cli, cfg: &RunConfig, data: &[PathBuf]) -> Result<()> {
    let ds = assemble_dataset(data, &cfg.tasks)?;
    std::fs::create_dir_all(&cli.out)?;
    let prepared = prepare_data(&ds, cfg, Some(&cli.out.join("cache")))?;
    std::fs::write(cli.out.join("dataset.csv"), prepared.targets.to_csv())?;
    prepared.features.write_csv(&cli.out.join("features.csv"))?;
    println!(
        "{} molecules, {} tasks, {} descriptors kept, {} input issues",
        prepared.targets.n_rows(),
        prepared.targets.n_tasks(),
        prepared.features.cols,
        ds.report.issues.len()
    );
    Ok(())
}

fn teach(cli: &Cli, cfg: &RunConfig, data: &[PathBuf]) -> Result<()> {
    let prepared = prepare_data(&assemble_dataset(data, &cfg.tasks)?, cfg, Some(&cli.out.join("cache")))?;
    let plan = make_cv_plan(prepared.targets.n_rows(), &cfg.cv_seeds, cfg.folds)?;
    let sets = load_or_fit_teachers(&prepared.features, &prepared.targets, &plan, &cfg.gbt, &cli.out)?;
    for set in &sets {
        let syn = set.synthetic(&prepared.features, &plan, &prepared.targets.task_names, cfg.oof_synthetic)?;
        let block = prepared.targets.with_synthetic(&syn.names, &syn.values);
        let path = staug_core::pipeline::teacher_dir(&cli.out, set.cv_seed).join("synthetic.csv");
        std::fs::write(&path, block.to_csv())?;
        println!("seed {}: {} teachers, {}", set.cv_seed, set.models.iter().map(Vec::len).sum::<usize>(), path.display());
    }
    Ok(())
}

fn train(cli: &Cli, cfg: &RunConfig, mode: Mode, data: &[PathBuf]) -> Result<()> {
    let prepared = prepare_data(&assemble_dataset(data, &cfg.tasks)?, cfg, Some(&cli.out.join("cache")))?;
    let plan = make_cv_plan(prepared.targets.n_rows(), &cfg.cv_seeds, cfg.folds)?;
    let teachers = if mode == Mode::GtNaive {
        Vec::new()
    } else {
        load_or_fit_teachers(&prepared.features, &prepared.targets, &plan, &cfg.gbt, &cli.out)?
    };
    let res = run_experiment(mode, &prepared, &plan, cfg, &teachers, Some(&cli.out))?;
    let path = results_path(&cli.out, mode.name());
    std::fs::create_dir_all(path.parent().unwrap())?;
    std::fs::write(&path, serde_json::to_string_pretty(&res.report)?)?;
    let pred_dir = cli.out.join("predictions");
    std::fs::create_dir_all(&pred_dir)?;
    let csv = predictions_csv(&res, &prepared.targets.row_keys, &prepared.targets.task_names, &plan.seeds);
    std::fs::write(pred_dir.join(format!("{mode}.csv")), csv)?;
    let table = metrics_csv(&res.report);
    std::fs::write(cli.out.join(format!("results/metrics_{mode}.csv")), &table)?;
    print!("{table}");
    Ok(())
}

fn evaluate(cli: &Cli, predictions: &Path, data: &Path, name: &str) -> Result<()> {
    let ds = assemble_dataset(&[data], &[])?;
    let t = &ds.targets;
    let mut reader = csv::Reader::from_path(predictions)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("seed") || headers.get(1) != Some("smiles") {
        bail!("predictions must start with `seed,smiles`");
    }
    let cols: Vec<usize> = headers
        .iter()
        .skip(2)
        .map(|h| t.task_names.iter().position(|n| n == h).with_context(|| format!("unknown task {h}")))
        .collect::<Result<_>>()?;
    // Per seed in file order, per task: (predictions, truths).
    let mut pairs: Vec<(u64, Vec<(Vec<f64>, Vec<f64>)>)> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let seed: u64 = rec[0].parse()?;
        let smiles = staug_core::chem::canonical_smiles(&staug_core::chem::parse_smiles(&rec[1])?);
        let Some(row) = t.row_keys.iter().position(|k| *k == smiles) else { continue };
        if pairs.last().map(|p| p.0) != Some(seed) {
            if pairs.iter().any(|p| p.0 == seed) {
                bail!("rows of seed {seed} are not contiguous");
            }
            pairs.push((seed, vec![(Vec::new(), Vec::new()); cols.len()]));
        }
        let entry = &mut pairs.last_mut().unwrap().1;
        for (j, &task) in cols.iter().enumerate() {
            if let Some(truth) = t.get(row, task) {
                entry[j].0.push(rec[j + 2].parse()?);
                entry[j].1.push(truth);
            }
        }
    }
    if pairs.is_empty() {
        bail!("no prediction matched the dataset");
    }
    let per_seed = pairs
        .iter()
        .map(|(_, tasks)| {
            tasks
                .iter()
                .zip(&cols)
                .map(|((p, y), &task)| compute_metrics(&t.task_names[task], p, y))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let report = aggregate_seeds(name, &per_seed);
    let path = results_path(&cli.out, name);
    std::fs::create_dir_all(path.parent().unwrap())?;
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    print!("{}", metrics_csv(&report));
    Ok(())
}

fn report(cli: &Cli) -> Result<()> {
    let mut found: BTreeMap<Mode, MetricsReport> = BTreeMap::new();
    for mode in Mode::ALL {
        let path = results_path(&cli.out, mode.name());
        if path.exists() {
            found.insert(mode, serde_json::from_str(&std::fs::read_to_string(&path)?)?);
        }
    }
    let modes: Vec<Mode> = found.keys().copied().collect();
    let comparisons = comparison_pairs(&modes)
        .into_iter()
        .map(|(a, b)| compare_models(&found[&a], &found[&b]))
        .collect::<Result<Vec<_>, _>>()?;
    if comparisons.is_empty() {
        bail!("need results for at least two modes under {}", cli.out.join("results").display());
    }
    let metrics: Vec<MetricsReport> = found.into_values().collect();
    let files = emit_report(&comparisons, &metrics, &cli.out.join("report"))?;
    for c in &comparisons {
        println!("{} vs {}: {}", c.new_mode, c.ref_mode, c.summary_line());
    }
    log::info!("wrote {} report files", files.len());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenBenchmark {
            n_molecules,
            tasks,
            sparsity,
            noise,
            seed,
        } => {
            let spec = BenchmarkSpec {
                n_molecules: *n_molecules,
                n_tasks: *tasks,
                sparsity: *sparsity,
                noise_sd: *noise,
                seed: *seed,
                ..Default::default()
            };
            let path = generate_benchmark(&spec)?.write(&cli.out)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Featurize(s) => featurize(cli, &load_config(cli)?, &s.data),
        Command::Teach(s) => teach(cli, &load_config(cli)?, &s.data),
        Command::Train { mode, sources } => train(cli, &load_config(cli)?, *mode, &sources.data),
        Command::Evaluate { predictions, data, name } => evaluate(cli, predictions, data, name),
        Command::Report => report(cli),
        Command::RunAll { modes, manifest, data } => {
            let m = match manifest {
                Some(path) => replay_manifest(&RunManifest::load(path)?, &cli.out)?,
                None => {
                    if data.is_empty() {
                        bail!("run-all needs dataset files or --manifest");
                    }
                    let modes = modes.clone().unwrap_or_else(|| Mode::ALL.to_vec());
                    run_all(data, &load_config(cli)?, &modes, &cli.out)?
                }
            };
            print!("{}", std::fs::read_to_string(cli.out.join("report/summary.txt")).unwrap_or_default());
            println!("manifest: {} ({} outputs)", cli.out.join("manifest.json").display(), m.outputs.len());
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    with_threads(cli.threads, || run(&cli))?
}
