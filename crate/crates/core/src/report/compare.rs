use super::metrics::{MetricsReport, TaskSummary};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Mae,
    Rmse,
    R2Direct,
    OneMinusR2,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Mae, Metric::Rmse, Metric::R2Direct, Metric::OneMinusR2];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Rmse => "rmse",
            Metric::R2Direct => "r2_direct",
            Metric::OneMinusR2 => "one_minus_r2",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self == Metric::R2Direct
    }

    fn value(self, t: &TaskSummary) -> Option<f64> {
        match self {
            Metric::Mae => Some(t.mae_mean),
            Metric::Rmse => Some(t.rmse_mean),
            Metric::R2Direct => t.r2_mean,
            Metric::OneMinusR2 => t.r2_mean.map(super::variance_explained_view),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub task: String,
    pub metric: Metric,
    pub ref_value: Option<f64>,
    pub new_value: Option<f64>,
    /// `None` when the reference is zero or either side is undefined.
    pub pct_change: Option<f64>,
    pub better: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ref_mode: String,
    pub new_mode: String,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn tasks(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.task.as_str()) {
                out.push(&r.task);
            }
        }
        out
    }

    /// A task counts as improved when its RMSE improved.
    pub fn improved_tasks(&self) -> usize {
        self.rows.iter().filter(|r| r.metric == Metric::Rmse && r.better).count()
    }

    pub fn summary_line(&self) -> String {
        format!("improved {} of {} tasks", self.improved_tasks(), self.tasks().len())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompareError {
    #[error("task sets differ: {0:?} vs {1:?}")]
    TaskSetMismatch(Vec<String>, Vec<String>),
}

pub fn pct_change(reference: f64, new: f64) -> Option<f64> {
    (reference != 0.0).then(|| 100.0 * (new - reference) / reference.abs())
}

pub fn compare_models(reference: &MetricsReport, new: &MetricsReport) -> Result<Comparison, CompareError> {
    let names = |r: &MetricsReport| r.tasks.iter().map(|t| t.target.clone()).collect::<Vec<_>>();
    if names(reference) != names(new) {
        return Err(CompareError::TaskSetMismatch(names(reference), names(new)));
    }
    let mut rows = Vec::new();
    for (a, b) in reference.tasks.iter().zip(&new.tasks) {
        for metric in Metric::ALL {
            let (rv, nv) = (metric.value(a), metric.value(b));
            let (pct, better) = match (rv, nv) {
                (Some(r), Some(n)) => {
                    let better = if metric.higher_is_better() { n > r } else { n < r };
                    (pct_change(r, n), better)
                }
                _ => (None, false),
            };
            rows.push(ComparisonRow {
                task: a.target.clone(),
                metric,
                ref_value: rv,
                new_value: nv,
                pct_change: pct,
                better,
            });
        }
    }
    Ok(Comparison {
        ref_mode: reference.mode.clone(),
        new_mode: new.mode.clone(),
        rows,
    })
}
