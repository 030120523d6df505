use super::{compute_descriptors, DESCRIPTOR_NAMES, SCHEMA_ID};
use crate::chem::MolGraph;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const DEFAULT_ARCSINH_THRESHOLD: f64 = 33.0;
pub const DEFAULT_VAR_EPS: f64 = 1e-10;
pub const DEFAULT_CORR_MAX: f64 = 0.999;
/// Pairs of columns with missing entries need this many shared observations
/// before their correlation is trusted.
pub const MIN_PAIRWISE_OVERLAP: usize = 10;

const CACHE_MAGIC: &[u8; 8] = b"STAUGFM1";

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("every feature column was pruned")]
    EmptyResult,
    #[error("feature matrix needs at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("malformed feature data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Row-major molecules × features matrix. `NaN` marks a missing entry.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    #[serde(skip)]
    pub data: Vec<f64>,
    pub col_names: Vec<String>,
    /// Per current column: whether arcsinh was applied.
    pub arcsinh_applied: Vec<bool>,
    /// Per column of the matrix before pruning: whether it survived.
    pub kept_mask: Vec<bool>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, col_names: Vec<String>, data: Vec<f64>) -> Self {
        let cols = col_names.len();
        assert_eq!(data.len(), rows * cols, "data length must equal rows * cols");
        FeatureMatrix {
            rows,
            cols,
            data,
            arcsinh_applied: vec![false; cols],
            kept_mask: vec![true; cols],
            col_names,
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// New matrix holding the given rows in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            rows: rows.len(),
            data,
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> FeatureMatrix {
        FeatureMatrix {
            rows: 0,
            cols: self.cols,
            data: Vec::new(),
            col_names: self.col_names.clone(),
            arcsinh_applied: self.arcsinh_applied.clone(),
            kept_mask: self.kept_mask.clone(),
        }
    }

    /// CSV with a header of column names; missing values are empty cells.
    pub fn write_csv(&self, path: &Path) -> Result<(), MatrixError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.col_names)?;
        for r in 0..self.rows {
            w.write_record(self.row(r).iter().map(|v| {
                if v.is_nan() {
                    String::new()
                } else {
                    format!("{v:?}")
                }
            }))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix, MatrixError> {
        let mut rdr = csv::Reader::from_path(path)?;
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut data = Vec::new();
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(MatrixError::Malformed(format!("row {rows} has {} cells", rec.len())));
            }
            for cell in rec.iter() {
                data.push(if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse()
                        .map_err(|_| MatrixError::Malformed(format!("bad number {cell:?}")))?
                });
            }
            rows += 1;
        }
        Ok(FeatureMatrix::new(rows, names, data))
    }

    /// Binary form: magic, JSON metadata length (u64 LE), JSON, then data as f64 LE.
    pub fn write_binary(&self, path: &Path) -> Result<(), MatrixError> {
        let meta = serde_json::to_vec(self)?;
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        f.write_all(CACHE_MAGIC)?;
        f.write_all(&(meta.len() as u64).to_le_bytes())?;
        f.write_all(&meta)?;
        for v in &self.data {
            f.write_all(&v.to_le_bytes())?;
        }
        f.flush()?;
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<FeatureMatrix, MatrixError> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 16 || &bytes[..8] != CACHE_MAGIC {
            return Err(MatrixError::Malformed("not a feature cache file".into()));
        }
        let meta_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let meta_end = 16usize
            .checked_add(meta_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| MatrixError::Malformed("truncated metadata".into()))?;
        let mut m: FeatureMatrix = serde_json::from_slice(&bytes[16..meta_end])?;
        let body = &bytes[meta_end..];
        if body.len() != m.rows * m.cols * 8 || m.col_names.len() != m.cols {
            return Err(MatrixError::Malformed("data size does not match header".into()));
        }
        m.data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(m)
    }
}

/// Descriptor rows for every molecule, computed in parallel; row i belongs to mols[i].
pub fn build_feature_matrix(mols: &[MolGraph]) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = mols.par_iter().map(|g| compute_descriptors(g).values).collect();
    let data = rows.into_iter().flatten().collect();
    FeatureMatrix::new(
        mols.len(),
        DESCRIPTOR_NAMES.iter().map(|s| s.to_string()).collect(),
        data,
    )
}

/// Cache key over the schema version and the ordered list of molecule identifiers.
pub fn cache_key<S: AsRef<str>>(smiles: &[S]) -> String {
    let mut h = Sha256::new();
    h.update(SCHEMA_ID.as_bytes());
    h.update([0u8]);
    for s in smiles {
        h.update(s.as_ref().as_bytes());
        h.update(*b"\n");
    }
    hex::encode(h.finalize())
}

pub fn cache_path<S: AsRef<str>>(dir: &Path, smiles: &[S]) -> PathBuf {
    dir.join(format!("features-{}.bin", cache_key(smiles)))
}

/// Loads the cached matrix for these molecules or computes and stores it.
pub fn cached_feature_matrix<S: AsRef<str>>(
    dir: &Path,
    smiles: &[S],
    mols: &[MolGraph],
) -> Result<FeatureMatrix, MatrixError> {
    let path = cache_path(dir, smiles);
    if path.exists() {
        match FeatureMatrix::read_binary(&path) {
            Ok(m) if m.rows == mols.len() => return Ok(m),
            Ok(_) | Err(MatrixError::Malformed(_)) => {
                log::warn!("ignoring stale feature cache {}", path.display())
            }
            Err(e) => return Err(e),
        }
    }
    let m = build_feature_matrix(mols);
    fs::create_dir_all(dir)?;
    m.write_binary(&path)?;
    Ok(m)
}

/// Replaces every observed entry of a column by asinh(x) when the column's
/// largest observed |x| is strictly above `threshold`.
pub fn arcsinh_pretransform(m: &FeatureMatrix, threshold: f64) -> FeatureMatrix {
    assert!(threshold > 0.0, "threshold must be positive");
    let mut out = m.clone();
    for c in 0..m.cols {
        let max_abs = (0..m.rows)
            .map(|r| m.get(r, c))
            .filter(|v| !v.is_nan())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        if max_abs > threshold {
            for r in 0..m.rows {
                let v = &mut out.data[r * m.cols + c];
                if !v.is_nan() {
                    *v = v.asinh();
                }
            }
            out.arcsinh_applied[c] = true;
        }
    }
    out
}

fn observed_variance(col: &[f64]) -> Option<f64> {
    let obs: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
    if obs.len() < 2 {
        return None;
    }
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    Some(obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / obs.len() as f64)
}

fn is_constant(col: &[f64]) -> bool {
    let mut obs = col.iter().filter(|v| !v.is_nan());
    match obs.next() {
        None => true,
        Some(first) => obs.all(|v| v == first),
    }
}

/// Pearson correlation over rows where both columns are observed; `None`
/// when either side has no spread or the overlap is too small.
pub fn pairwise_pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let any_missing = a.iter().chain(b).any(|v| v.is_nan());
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| !x.is_nan() && !y.is_nan())
        .map(|(&x, &y)| (x, y))
        .collect();
    let needed = if any_missing { MIN_PAIRWISE_OVERLAP } else { 2 };
    if pairs.len() < needed {
        return None;
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Drops constant, near-zero-variance and highly correlated columns. Columns
/// are visited in order; a column is dropped when it correlates above
/// `corr_max` (in absolute value) with any earlier surviving column.
pub fn prune_features(
    m: &FeatureMatrix,
    var_eps: f64,
    corr_max: f64,
) -> Result<FeatureMatrix, MatrixError> {
    if m.rows < 2 {
        return Err(MatrixError::TooFewRows { needed: 2, got: m.rows });
    }
    let columns: Vec<Vec<f64>> = (0..m.cols).map(|c| m.column(c)).collect();
    let mut kept: Vec<usize> = Vec::new();
    for c in 0..m.cols {
        let col = &columns[c];
        if is_constant(col) || observed_variance(col).is_none_or(|v| v < var_eps) {
            continue;
        }
        let redundant = kept.iter().any(|&k| {
            pairwise_pearson(&columns[k], col).is_some_and(|r| r.abs() > corr_max)
        });
        if !redundant {
            kept.push(c);
        }
    }
    if kept.is_empty() {
        return Err(MatrixError::EmptyResult);
    }
    Ok(select_columns(m, &kept))
}

/// Restricts to the given columns of `m` (in order) and records them in `kept_mask`.
pub fn select_columns(m: &FeatureMatrix, kept: &[usize]) -> FeatureMatrix {
    let mut data = Vec::with_capacity(m.rows * kept.len());
    for r in 0..m.rows {
        let row = m.row(r);
        data.extend(kept.iter().map(|&c| row[c]));
    }
    // kept_mask is expressed over the columns the matrix had before any pruning.
    let original: Vec<usize> = m
        .kept_mask
        .iter()
        .enumerate()
        .filter(|(_, &k)| k)
        .map(|(i, _)| i)
        .collect();
    let mut kept_mask = vec![false; m.kept_mask.len()];
    for &c in kept {
        kept_mask[original[c]] = true;
    }
    FeatureMatrix {
        rows: m.rows,
        cols: kept.len(),
        data,
        col_names: kept.iter().map(|&c| m.col_names[c].clone()).collect(),
        arcsinh_applied: kept.iter().map(|&c| m.arcsinh_applied[c]).collect(),
        kept_mask,
    }
}
