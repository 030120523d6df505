//! Binary checkpoint: magic, u64 LE header length, JSON header, then every
//! tensor's values as f64 LE in the model's fixed tensor order.

use super::model::{GtConfig, GtModel};
use super::train::TaskStandardizer;
use super::GtError;
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 8] = b"STAUGGT1";

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: GtConfig,
    n_features: usize,
    tensors: Vec<(String, usize, usize)>,
    standardizer: Option<TaskStandardizer>,
}

pub fn checkpoint_bytes(model: &GtModel, standardizer: Option<&TaskStandardizer>) -> Vec<u8> {
    let header = Header {
        version: 1,
        config: model.config.clone(),
        n_features: model.n_features,
        tensors: model
            .weights
            .tensors()
            .iter()
            .map(|(n, m)| (n.clone(), m.rows, m.cols))
            .collect(),
        standardizer: standardizer.cloned(),
    };
    let json = serde_json::to_vec(&header).expect("header is serializable");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * model.weights.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for v in model.weights.flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn model_from_checkpoint(bytes: &[u8]) -> Result<(GtModel, Option<TaskStandardizer>), GtError> {
    let bad = |m: &str| GtError::Malformed(m.to_string());
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(bad("not a model checkpoint"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let end = 16usize
        .checked_add(len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(&bytes[16..end]).map_err(|e| bad(&e.to_string()))?;
    if header.version != 1 {
        return Err(bad("unsupported checkpoint version"));
    }
    let mut model = GtModel::new(header.config, header.n_features)?;
    let expected: Vec<(String, usize, usize)> = model
        .weights
        .tensors()
        .iter()
        .map(|(n, m)| (n.clone(), m.rows, m.cols))
        .collect();
    if expected != header.tensors {
        return Err(bad("tensor layout does not match configuration"));
    }
    let body = &bytes[end..];
    if body.len() != 8 * model.weights.parameter_count() {
        return Err(bad("parameter data has the wrong length"));
    }
    let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for t in model.weights.tensors_mut() {
        for v in t.data.iter_mut() {
            *v = values.next().unwrap();
        }
    }
    Ok((model, header.standardizer))
}

pub fn save_checkpoint(path: &Path, model: &GtModel, standardizer: Option<&TaskStandardizer>) -> Result<(), GtError> {
    std::fs::write(path, checkpoint_bytes(model, standardizer))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(GtModel, Option<TaskStandardizer>), GtError> {
    model_from_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let cfg = GtConfig {
            layers: 1,
            hidden_dim: 8,
            heads: 2,
            head_hidden: 4,
            n_tasks: 3,
            seed: 4,
            ..Default::default()
        };
        let m = GtModel::new(cfg, 5).unwrap();
        let s = TaskStandardizer {
            mean: vec![0.0, 1.0, 2.0],
            std: vec![1.0, 0.5, 3.0],
        };
        let (back, st) = model_from_checkpoint(&checkpoint_bytes(&m, Some(&s))).unwrap();
        assert_eq!(back, m);
        assert_eq!(st, Some(s));
        assert!(model_from_checkpoint(b"STAUGGT1").is_err());
    }
}
