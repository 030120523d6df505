use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("need at least 2 prediction/truth pairs, got {0}")]
    TooFewPairs(usize),
    #[error("prediction and truth lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: String,
    pub mae: f64,
    pub rmse: f64,
    /// `None` when the truth values are constant.
    pub r2: Option<f64>,
    pub n_points: usize,
}

pub fn compute_metrics(task: &str, pred: &[f64], truth: &[f64]) -> Result<TaskMetrics, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    let n = truth.len();
    if n < 2 {
        return Err(MetricsError::TooFewPairs(n));
    }
    let nf = n as f64;
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let e = p - t;
        abs += e.abs();
        sq += e * e;
    }
    let mean = truth.iter().sum::<f64>() / nf;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    let constant = truth.iter().all(|&t| t == truth[0]);
    Ok(TaskMetrics {
        task: task.to_string(),
        mae: abs / nf,
        rmse: (sq / nf).sqrt(),
        r2: (!constant && ss_tot > 0.0).then(|| 1.0 - sq / ss_tot),
        n_points: n,
    })
}

/// The "variance explained" zoom: 1 − r².
pub fn variance_explained_view(r2: f64) -> f64 {
    1.0 - r2
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-task aggregate over seeds in the layout of the published metric tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub target: String,
    pub mae_mean: f64,
    pub mae_std: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    pub r2_mean: Option<f64>,
    pub r2_std: Option<f64>,
    /// Seeds whose r² was undefined and left out of the r² aggregate.
    pub r2_omitted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mode: String,
    pub tasks: Vec<TaskSummary>,
}

/// Aggregates `per_seed[s][t]` into mean ± sample std across seeds.
pub fn aggregate_seeds(mode: &str, per_seed: &[Vec<TaskMetrics>]) -> MetricsReport {
    let n_tasks = per_seed.first().map_or(0, Vec::len);
    let tasks = (0..n_tasks)
        .map(|t| {
            let col: Vec<&TaskMetrics> = per_seed.iter().map(|s| &s[t]).collect();
            let (mae_mean, mae_std) = mean_std(&col.iter().map(|m| m.mae).collect::<Vec<_>>());
            let (rmse_mean, rmse_std) = mean_std(&col.iter().map(|m| m.rmse).collect::<Vec<_>>());
            let r2s: Vec<f64> = col.iter().filter_map(|m| m.r2).collect();
            let (r2_mean, r2_std) = if r2s.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_std(&r2s);
                (Some(m), Some(s))
            };
            TaskSummary {
                target: col[0].task.clone(),
                mae_mean,
                mae_std,
                rmse_mean,
                rmse_std,
                r2_mean,
                r2_std,
                r2_omitted: col.len() - r2s.len(),
            }
        })
        .collect();
    MetricsReport {
        mode: mode.to_string(),
        tasks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let m = compute_metrics("t", &[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((m.mae - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.rmse - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(m.r2, Some(0.5));
    }

    #[test]
    fn perfect_and_mean_predictions() {
        let m = compute_metrics("t", &[1.0, 5.0], &[1.0, 5.0]).unwrap();
        assert_eq!((m.mae, m.rmse, m.r2), (0.0, 0.0, Some(1.0)));
        let m = compute_metrics("t", &[3.0, 3.0], &[1.0, 5.0]).unwrap();
        assert_eq!(m.r2, Some(0.0));
        let m = compute_metrics("t", &[3.0, 4.0], &[2.0, 2.0]).unwrap();
        assert_eq!(m.r2, None);
        assert_eq!(m.mae, 1.5);
        assert!(compute_metrics("t", &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn zoom_view() {
        assert!((variance_explained_view(0.9999) - 1e-4).abs() < 1e-15);
        assert_eq!(variance_explained_view(1.0), 0.0);
        assert_eq!(variance_explained_view(0.5), 0.5);
    }

    #[test]
    fn identical_seeds_have_zero_spread() {
        let m = compute_metrics("t", &[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0]).unwrap();
        let r = aggregate_seeds("x", &vec![vec![m.clone()]; 5]);
        let t = &r.tasks[0];
        assert_eq!((t.mae_mean, t.mae_std, t.rmse_std, t.r2_std), (m.mae, 0.0, 0.0, Some(0.0)));
    }
}
