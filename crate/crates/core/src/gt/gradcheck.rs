use super::featurize::GraphInput;
use super::loss::masked_multitask_loss;
use super::model::{GtModel, GtWeights};
use super::train::batch_loss_and_grad;
use super::GtError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Denominator floor so that two near-zero gradients are not compared relatively.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub coords_checked: usize,
    pub tensors_covered: usize,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: (String, usize),
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(REL_ERROR_FLOOR)
}

fn eval_loss(
    model: &GtModel,
    graphs: &[&GraphInput],
    targets: &[f64],
    observed: &[bool],
    task_weight: &[f64],
) -> Result<f64, GtError> {
    let mut pred = Vec::new();
    for g in graphs {
        pred.extend(model.forward(g, None).0);
    }
    Ok(masked_multitask_loss(&pred, targets, observed, task_weight)?.0)
}

/// Central finite differences against the reverse-mode gradient (dropout
/// off) on at least `n_coords` coordinates, every tensor represented.
#[allow(clippy::too_many_arguments)]
pub fn grad_check(
    model: &GtModel,
    graphs: &[&GraphInput],
    targets: &[f64],
    observed: &[bool],
    task_weight: &[f64],
    epsilon: f64,
    n_coords: usize,
    seed: u64,
) -> Result<GradCheckReport, GtError> {
    grad_check_with(model, graphs, targets, observed, task_weight, epsilon, n_coords, seed, |_| {})
}

/// As [`grad_check`], with a hook that may alter the analytic gradient
/// before comparison (used to confirm the harness detects wrong gradients).
#[allow(clippy::too_many_arguments)]
pub fn grad_check_with(
    model: &GtModel,
    graphs: &[&GraphInput],
    targets: &[f64],
    observed: &[bool],
    task_weight: &[f64],
    epsilon: f64,
    n_coords: usize,
    seed: u64,
    corrupt: impl Fn(&mut GtWeights),
) -> Result<GradCheckReport, GtError> {
    let (_, mut grads) = batch_loss_and_grad(model, graphs, targets, observed, task_weight, None)?;
    corrupt(&mut grads);
    let names: Vec<String> = model.weights.tensors().into_iter().map(|t| t.0).collect();
    let sizes: Vec<usize> = model.weights.tensors().iter().map(|t| t.1.len()).collect();
    let total: usize = sizes.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (t, &len) in sizes.iter().enumerate() {
        coords.insert((t, rng.gen_range(0..len)));
    }
    let target = n_coords.min(total);
    while coords.len() < target {
        let mut flat = rng.gen_range(0..total);
        let mut t = 0;
        while flat >= sizes[t] {
            flat -= sizes[t];
            t += 1;
        }
        coords.insert((t, flat));
    }

    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.1.data.clone()).collect();
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        coords_checked: coords.len(),
        tensors_covered: sizes.len(),
        worst: (String::new(), 0),
    };
    for &(t, i) in &coords {
        let original = model.weights.tensors()[t].1.data[i];
        probe.weights.tensors_mut()[t].data[i] = original + epsilon;
        let plus = eval_loss(&probe, graphs, targets, observed, task_weight)?;
        probe.weights.tensors_mut()[t].data[i] = original - epsilon;
        let minus = eval_loss(&probe, graphs, targets, observed, task_weight)?;
        probe.weights.tensors_mut()[t].data[i] = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let err = relative_error(analytic[t][i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = (names[t].clone(), i);
        }
    }
    Ok(report)
}
