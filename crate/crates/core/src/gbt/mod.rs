//! Gradient-boosted regression trees with exact greedy split search and
//! learned default directions for missing feature values.

mod json;
mod split;

pub use json::{model_from_json, model_to_json, FORMAT_VERSION};
pub use split::{beats, split_gain, GAIN_TIE_TOLERANCE, MIN_SPLIT_GAIN};

use crate::descriptors::FeatureMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GbtError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least 2 observed targets, got {0}")]
    TooFewObserved(usize),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 300,
            max_depth: 6,
            learning_rate: 0.05,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            subsample: 0.8,
            colsample: 0.8,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), GbtError> {
        let bad = |m: &str| Err(GbtError::InvalidParams(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("lambda, gamma and min_child_weight must be non-negative");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must be in (0, 1]");
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return bad("colsample must be in (0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    /// Goes left when `x < threshold`; a missing value follows the default direction.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let x = row[feature];
                    let go_left = if x.is_nan() { default_left } else { x < threshold };
                    i = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    pub params: GbtParams,
}

impl GbtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_row_rounds(row, self.trees.len())
    }

    /// Prediction using only the first `rounds` trees.
    pub fn predict_row_rounds(&self, row: &[f64], rounds: usize) -> f64 {
        let sum: f64 = self.trees[..rounds.min(self.trees.len())]
            .iter()
            .map(|t| t.predict_row(row))
            .sum();
        self.base_score + self.learning_rate * sum
    }
}

pub fn predict_gbt(m: &GbtModel, x: &FeatureMatrix) -> Result<Vec<f64>, GbtError> {
    if x.cols != m.n_features {
        return Err(GbtError::DimensionMismatch(format!(
            "model expects {} features, matrix has {}",
            m.n_features, x.cols
        )));
    }
    Ok((0..x.rows).map(|r| m.predict_row(x.row(r))).collect())
}

/// Fits one single-target model on the rows where `observed` is true.
pub fn fit_gbt(
    x: &FeatureMatrix,
    y: &[f64],
    observed: &[bool],
    params: &GbtParams,
) -> Result<GbtModel, GbtError> {
    params.validate()?;
    if y.len() != x.rows || observed.len() != x.rows {
        return Err(GbtError::DimensionMismatch(format!(
            "{} rows but {} targets and {} mask entries",
            x.rows,
            y.len(),
            observed.len()
        )));
    }
    if x.cols == 0 {
        return Err(GbtError::DimensionMismatch("feature matrix has no columns".into()));
    }
    let rows: Vec<usize> = (0..x.rows).filter(|&r| observed[r]).collect();
    if rows.len() < 2 {
        return Err(GbtError::TooFewObserved(rows.len()));
    }
    if let Some(&r) = rows.iter().find(|&&r| !y[r].is_finite()) {
        return Err(GbtError::DimensionMismatch(format!("target at row {r} is not finite")));
    }
    let n = rows.len();
    let data: Vec<&[f64]> = rows.iter().map(|&r| x.row(r)).collect();
    let target: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let base_score = target.iter().sum::<f64>() / n as f64;
    let mut model = GbtModel {
        base_score,
        learning_rate: params.learning_rate,
        n_features: x.cols,
        trees: Vec::new(),
        params: params.clone(),
    };
    if target.iter().all(|&t| t == target[0]) {
        return Ok(model);
    }

    let presorted = split::presort(&data, x.cols);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pred = vec![base_score; n];
    let n_sample = ((n as f64 * params.subsample).round() as usize).clamp(1, n);
    let n_cols = ((x.cols as f64 * params.colsample).round() as usize).clamp(1, x.cols);
    for _ in 0..params.n_rounds {
        let grad: Vec<f64> = pred.iter().zip(&target).map(|(p, t)| p - t).collect();
        let in_sample: Vec<bool> = if n_sample == n {
            vec![true; n]
        } else {
            let mut mask = vec![false; n];
            for i in sample(&mut rng, n, n_sample).iter() {
                mask[i] = true;
            }
            mask
        };
        let mut features: Vec<usize> = if n_cols == x.cols {
            (0..x.cols).collect()
        } else {
            sample(&mut rng, x.cols, n_cols).into_vec()
        };
        features.sort_unstable();
        let tree = split::grow_tree(&data, &presorted, &grad, &in_sample, &features, params);
        for (p, row) in pred.iter_mut().zip(&data) {
            *p += params.learning_rate * tree.predict_row(row);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(params: GbtParams) -> GbtParams {
        GbtParams {
            subsample: 1.0,
            colsample: 1.0,
            ..params
        }
    }

    fn column(values: &[f64]) -> FeatureMatrix {
        FeatureMatrix::new(values.len(), vec!["x".into()], values.to_vec())
    }

    #[test]
    fn constant_target_gives_base_only() {
        let x = column(&[1.0, 2.0, 3.0]);
        let m = fit_gbt(&x, &[7.0; 3], &[true; 3], &GbtParams::default()).unwrap();
        assert_eq!(m.base_score, 7.0);
        assert!(m.trees.is_empty());
        assert_eq!(predict_gbt(&m, &x).unwrap(), vec![7.0; 3]);
    }

    #[test]
    fn single_split_example() {
        let params = exact(GbtParams {
            n_rounds: 1,
            max_depth: 1,
            learning_rate: 1.0,
            lambda: 0.0,
            ..Default::default()
        });
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let m = fit_gbt(&x, &[0.0, 0.0, 10.0, 10.0], &[true; 4], &params).unwrap();
        assert_eq!(
            m.trees[0].nodes[0],
            TreeNode::Split {
                feature: 0,
                threshold: 1.5,
                default_left: false,
                left: 1,
                right: 2
            }
        );
        assert_eq!(m.trees[0].nodes[1], TreeNode::Leaf { value: -5.0 });
        assert_eq!(m.trees[0].nodes[2], TreeNode::Leaf { value: 5.0 });
        assert_eq!(predict_gbt(&m, &x).unwrap(), vec![0.0, 0.0, 10.0, 10.0]);

        let x = column(&[0.0, 1.0, 2.0, f64::NAN]);
        let m = fit_gbt(&x, &[0.0, 0.0, 10.0, 10.0], &[true; 4], &params).unwrap();
        match m.trees[0].nodes[0] {
            TreeNode::Split {
                threshold,
                default_left,
                ..
            } => {
                assert_eq!(threshold, 1.5);
                assert!(!default_left);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(predict_gbt(&m, &column(&[f64::NAN])).unwrap(), vec![10.0]);
    }

    #[test]
    fn unobserved_rows_are_ignored() {
        let x = column(&[0.0, 1.0, 2.0, 3.0]);
        let y = [1.0, f64::NAN, 3.0, 5.0];
        let m = fit_gbt(&x, &y, &[true, false, true, true], &GbtParams::default()).unwrap();
        assert_eq!(m.base_score, 3.0);
        assert!(matches!(
            fit_gbt(&x, &y, &[true, false, false, false], &GbtParams::default()),
            Err(GbtError::TooFewObserved(1))
        ));
    }

    #[test]
    fn rejects_bad_shapes_and_params() {
        let x = column(&[0.0, 1.0]);
        assert!(matches!(
            fit_gbt(&x, &[0.0], &[true], &GbtParams::default()),
            Err(GbtError::DimensionMismatch(_))
        ));
        let p = GbtParams {
            subsample: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            fit_gbt(&x, &[0.0, 1.0], &[true; 2], &p),
            Err(GbtError::InvalidParams(_))
        ));
        let m = fit_gbt(&x, &[0.0, 1.0], &[true; 2], &GbtParams::default()).unwrap();
        let wide = FeatureMatrix::new(1, vec!["a".into(), "b".into()], vec![0.0, 0.0]);
        assert!(predict_gbt(&m, &wide).is_err());
    }
}
