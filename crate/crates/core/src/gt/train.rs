use super::featurize::GraphInput;
use super::loss::masked_multitask_loss;
use super::model::{GtConfig, GtModel, GtWeights};
use super::GtError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Molecules with a row-major `n × n_tasks` target block and observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskData {
    pub graphs: Vec<GraphInput>,
    pub targets: Vec<f64>,
    pub observed: Vec<bool>,
    pub n_tasks: usize,
}

impl TaskData {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> TaskData {
        let t = self.n_tasks;
        TaskData {
            graphs: rows.iter().map(|&r| self.graphs[r].clone()).collect(),
            targets: rows.iter().flat_map(|&r| self.targets[r * t..(r + 1) * t].iter().copied()).collect(),
            observed: rows.iter().flat_map(|&r| self.observed[r * t..(r + 1) * t].iter().copied()).collect(),
            n_tasks: t,
        }
    }
}

/// Per-task mean and standard deviation of the observed training values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStandardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl TaskStandardizer {
    /// Tasks with fewer than two distinct observations get std 1.
    pub fn fit(targets: &[f64], observed: &[bool], n_tasks: usize) -> TaskStandardizer {
        let mut mean = vec![0.0; n_tasks];
        let mut std = vec![1.0; n_tasks];
        for t in 0..n_tasks {
            let vals: Vec<f64> = (t..targets.len())
                .step_by(n_tasks)
                .filter(|&i| observed[i])
                .map(|i| targets[i])
                .collect();
            if vals.is_empty() {
                continue;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
            mean[t] = m;
            if var.sqrt() > 0.0 {
                std[t] = var.sqrt();
            }
        }
        TaskStandardizer { mean, std }
    }

    pub fn transform(&self, values: &[f64]) -> Vec<f64> {
        let t = self.mean.len();
        values.iter().enumerate().map(|(i, v)| (v - self.mean[i % t]) / self.std[i % t]).collect()
    }

    pub fn inverse(&self, values: &[f64]) -> Vec<f64> {
        let t = self.mean.len();
        values.iter().enumerate().map(|(i, v)| v * self.std[i % t] + self.mean[i % t]).collect()
    }
}

/// Splits rows into (train, validation) with about `fraction` held out from
/// every group of rows sharing the same observation pattern.
pub fn stratified_split(observed: &[bool], n_tasks: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = observed.len() / n_tasks;
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for r in 0..n {
        groups.entry(observed[r * n_tasks..(r + 1) * n_tasks].to_vec()).or_default().push(r);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ordered = Vec::with_capacity(n);
    for rows in groups.values_mut() {
        rows.shuffle(&mut rng);
        ordered.extend_from_slice(rows);
    }
    let stride = (1.0 / fraction).round().max(2.0) as usize;
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (k, r) in ordered.into_iter().enumerate() {
        if k % stride == stride / 2 {
            val.push(r);
        } else {
            train.push(r);
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Batch loss and parameter gradient. Per-molecule gradients are summed in
/// fixed contiguous chunks so the result does not depend on thread count.
pub fn batch_loss_and_grad(
    model: &GtModel,
    graphs: &[&GraphInput],
    targets: &[f64],
    observed: &[bool],
    task_weight: &[f64],
    dropout_seed: Option<u64>,
) -> Result<(f64, GtWeights), GtError> {
    const GRAD_CHUNKS: usize = 4;
    let t = model.n_tasks();
    let forwards: Vec<_> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = dropout_seed.map(|s| {
                let mut r = ChaCha8Rng::seed_from_u64(s);
                r.set_stream(i as u64);
                r
            });
            model.forward(g, rng.as_mut())
        })
        .collect();
    let pred: Vec<f64> = forwards.iter().flat_map(|f| f.0.iter().copied()).collect();
    let (loss, dpred) = masked_multitask_loss(&pred, targets, observed, task_weight)?;
    let chunk = graphs.len().div_ceil(GRAD_CHUNKS).max(1);
    let partial: Vec<GtWeights> = (0..graphs.len())
        .step_by(chunk)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut g = model.weights.zeros_like();
            for i in start..(start + chunk).min(graphs.len()) {
                let dout = &dpred[i * t..(i + 1) * t];
                if dout.iter().any(|&v| v != 0.0) {
                    model.backward(graphs[i], &forwards[i].1, dout, &mut g);
                }
            }
            g
        })
        .collect();
    let mut total = model.weights.zeros_like();
    for p in &partial {
        total.add_assign(p);
    }
    Ok((loss, total))
}

/// Masked loss of eval-mode predictions over a whole set.
pub fn evaluate_loss(model: &GtModel, data: &TaskData, task_weight: &[f64]) -> Result<f64, GtError> {
    let preds = model.predict_many(&data.graphs)?;
    let flat: Vec<f64> = preds.into_iter().flatten().collect();
    Ok(masked_multitask_loss(&flat, &data.targets, &data.observed, task_weight)?.0)
}

pub struct Adam {
    m: GtWeights,
    v: GtWeights,
    step: i32,
}

impl Adam {
    pub fn new(weights: &GtWeights) -> Adam {
        Adam {
            m: weights.zeros_like(),
            v: weights.zeros_like(),
            step: 0,
        }
    }

    pub fn update(&mut self, weights: &mut GtWeights, grads: &GtWeights, cfg: &GtConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let gs: Vec<_> = grads.tensors().into_iter().map(|t| t.1).collect();
        let ws = weights.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((w, g), m), v) in ws.into_iter().zip(gs).zip(ms).zip(vs) {
            for i in 0..w.data.len() {
                let gi = g.data[i];
                m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
                v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                w.data[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on a validation loss (lower is better).
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> EarlyStopping {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            bad_epochs: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            StopDecision::Improved
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Patience,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{:?},{:?}\n", e.epoch, e.train_loss, e.val_loss));
        }
        s
    }
}

/// Adam on the masked loss with early stopping; returns the best-validation weights.
pub fn train_gt(
    config: &GtConfig,
    n_features: usize,
    train: &TaskData,
    val: &TaskData,
    task_weight: &[f64],
) -> Result<(GtModel, TrainingLog), GtError> {
    let t = config.n_tasks;
    if train.n_tasks != t || val.n_tasks != t || task_weight.len() != t {
        return Err(GtError::DimensionMismatch(format!(
            "config has {t} tasks, data has {} / {}, weights {}",
            train.n_tasks,
            val.n_tasks,
            task_weight.len()
        )));
    }
    if train.is_empty() || !val.observed.iter().any(|&o| o) {
        return Err(GtError::InvalidData("training set empty or validation set has no observations".into()));
    }
    let mut model = GtModel::new(config.clone(), n_features)?;
    let mut adam = Adam::new(&model.weights);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = model.weights.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x005e_ed0f_ba7c);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainingLog {
        epochs: Vec::new(),
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
    };

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut mass_sum) = (0.0, 0.0);
        for batch in order.chunks(config.batch_size) {
            let graphs: Vec<&GraphInput> = batch.iter().map(|&r| &train.graphs[r]).collect();
            let targets: Vec<f64> = batch.iter().flat_map(|&r| train.targets[r * t..(r + 1) * t].iter().copied()).collect();
            let observed: Vec<bool> = batch.iter().flat_map(|&r| train.observed[r * t..(r + 1) * t].iter().copied()).collect();
            let dropout_seed: u64 = rng.gen();
            let (loss, grads) =
                match batch_loss_and_grad(&model, &graphs, &targets, &observed, task_weight, Some(dropout_seed)) {
                    Err(GtError::EmptyBatch) => continue,
                    other => other?,
                };
            if !loss.is_finite() {
                return Err(GtError::NonFiniteLoss { epoch });
            }
            let mass: f64 = observed.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| task_weight[i % t]).sum();
            loss_sum += loss * mass;
            mass_sum += mass;
            adam.update(&mut model.weights, &grads, config);
        }
        let train_loss = if mass_sum > 0.0 { loss_sum / mass_sum } else { f64::NAN };
        let val_loss = evaluate_loss(&model, val, task_weight)?;
        if !val_loss.is_finite() || !train_loss.is_finite() {
            return Err(GtError::NonFiniteLoss { epoch });
        }
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        match stopper.update(epoch, val_loss) {
            StopDecision::Improved => best = model.weights.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                log.stop_reason = StopReason::Patience;
                break;
            }
        }
    }
    log.best_epoch = stopper.best_epoch;
    model.weights = best;
    Ok((model, log))
}
