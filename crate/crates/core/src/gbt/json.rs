//! Versioned JSON form. Trees are nested arrays: a leaf is `[value]`, a split
//! is `[feature, threshold, default_left, left_subtree, right_subtree]`.

use super::{GbtError, GbtModel, GbtParams, Tree, TreeNode};
use serde_json::{json, Value};

pub const FORMAT_VERSION: u64 = 1;

fn tree_to_value(t: &Tree, i: usize) -> Value {
    match t.nodes[i] {
        TreeNode::Leaf { value } => json!([value]),
        TreeNode::Split {
            feature,
            threshold,
            default_left,
            left,
            right,
        } => json!([
            feature,
            threshold,
            default_left,
            tree_to_value(t, left),
            tree_to_value(t, right)
        ]),
    }
}

fn value_to_tree(v: &Value, nodes: &mut Vec<TreeNode>) -> Result<usize, GbtError> {
    let bad = || GbtError::Malformed(format!("bad tree node {v}"));
    let arr = v.as_array().ok_or_else(bad)?;
    let index = nodes.len();
    match arr.as_slice() {
        [value] => {
            let value = value.as_f64().filter(|x| x.is_finite()).ok_or_else(bad)?;
            nodes.push(TreeNode::Leaf { value });
        }
        [feature, threshold, default_left, l, r] => {
            nodes.push(TreeNode::Leaf { value: 0.0 });
            let left = value_to_tree(l, nodes)?;
            let right = value_to_tree(r, nodes)?;
            nodes[index] = TreeNode::Split {
                feature: feature.as_u64().ok_or_else(bad)? as usize,
                threshold: threshold.as_f64().ok_or_else(bad)?,
                default_left: default_left.as_bool().ok_or_else(bad)?,
                left,
                right,
            };
        }
        _ => return Err(bad()),
    }
    Ok(index)
}

pub fn model_to_json(m: &GbtModel) -> String {
    let trees: Vec<Value> = m.trees.iter().map(|t| tree_to_value(t, 0)).collect();
    let v = json!({
        "format": "staug-gbt",
        "version": FORMAT_VERSION,
        "base_score": m.base_score,
        "learning_rate": m.learning_rate,
        "n_features": m.n_features,
        "params": m.params,
        "trees": trees,
    });
    serde_json::to_string(&v).expect("model values are serializable")
}

pub fn model_from_json(text: &str) -> Result<GbtModel, GbtError> {
    let v: Value = serde_json::from_str(text).map_err(|e| GbtError::Malformed(e.to_string()))?;
    if v["format"] != "staug-gbt" || v["version"].as_u64() != Some(FORMAT_VERSION) {
        return Err(GbtError::Malformed("unknown format or version".into()));
    }
    let num = |key: &str| {
        v[key]
            .as_f64()
            .ok_or_else(|| GbtError::Malformed(format!("missing {key}")))
    };
    let params: GbtParams = serde_json::from_value(v["params"].clone())
        .map_err(|e| GbtError::Malformed(e.to_string()))?;
    let mut trees = Vec::new();
    for t in v["trees"]
        .as_array()
        .ok_or_else(|| GbtError::Malformed("missing trees".into()))?
    {
        let mut nodes = Vec::new();
        value_to_tree(t, &mut nodes)?;
        trees.push(Tree { nodes });
    }
    let n_features = v["n_features"]
        .as_u64()
        .ok_or_else(|| GbtError::Malformed("missing n_features".into()))? as usize;
    for t in &trees {
        for node in &t.nodes {
            if let TreeNode::Split { feature, .. } = node {
                if *feature >= n_features {
                    return Err(GbtError::Malformed(format!("feature {feature} out of range")));
                }
            }
        }
    }
    Ok(GbtModel {
        base_score: num("base_score")?,
        learning_rate: num("learning_rate")?,
        n_features,
        trees,
        params,
    })
}
