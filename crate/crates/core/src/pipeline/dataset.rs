use super::PipelineError;
use crate::chem::{canonical_smiles, parse_smiles, rejection_reason, MolGraph};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Experimental,
    Synthetic,
}

/// A declared target column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    #[serde(default)]
    pub unit: Option<String>,
    /// Keep molecules with elements outside the organic set for this task.
    #[serde(default)]
    pub allow_metals: bool,
}

impl TaskSpec {
    pub fn new(name: &str) -> TaskSpec {
        TaskSpec {
            name: name.to_string(),
            unit: None,
            allow_metals: false,
        }
    }
}

/// Molecules × tasks, row-major, with an observation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTargetMatrix {
    /// Canonical SMILES of each row.
    pub row_keys: Vec<String>,
    pub task_names: Vec<String>,
    pub units: Vec<Option<String>>,
    pub task_kind: Vec<TaskKind>,
    pub values: Vec<f64>,
    pub observed: Vec<bool>,
}

impl SparseTargetMatrix {
    pub fn n_rows(&self) -> usize {
        self.row_keys.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.task_names.len()
    }

    pub fn get(&self, row: usize, task: usize) -> Option<f64> {
        let i = row * self.n_tasks() + task;
        self.observed[i].then(|| self.values[i])
    }

    pub fn experimental_tasks(&self) -> Vec<usize> {
        (0..self.n_tasks()).filter(|&t| self.task_kind[t] == TaskKind::Experimental).collect()
    }

    /// Observed `(row, value)` pairs of one task.
    pub fn task_observations(&self, task: usize) -> Vec<(usize, f64)> {
        (0..self.n_rows()).filter_map(|r| self.get(r, task).map(|v| (r, v))).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> SparseTargetMatrix {
        let t = self.n_tasks();
        SparseTargetMatrix {
            row_keys: rows.iter().map(|&r| self.row_keys[r].clone()).collect(),
            task_names: self.task_names.clone(),
            units: self.units.clone(),
            task_kind: self.task_kind.clone(),
            values: rows.iter().flat_map(|&r| self.values[r * t..(r + 1) * t].iter().copied()).collect(),
            observed: rows.iter().flat_map(|&r| self.observed[r * t..(r + 1) * t].iter().copied()).collect(),
        }
    }

    /// Appends dense columns (row-major `n × names.len()`) as synthetic tasks.
    pub fn with_synthetic(&self, names: &[String], dense: &[f64]) -> SparseTargetMatrix {
        let (t, k, n) = (self.n_tasks(), names.len(), self.n_rows());
        assert_eq!(dense.len(), n * k, "synthetic block has the wrong size");
        let mut values = Vec::with_capacity(n * (t + k));
        let mut observed = Vec::with_capacity(n * (t + k));
        for r in 0..n {
            values.extend_from_slice(&self.values[r * t..(r + 1) * t]);
            values.extend_from_slice(&dense[r * k..(r + 1) * k]);
            observed.extend_from_slice(&self.observed[r * t..(r + 1) * t]);
            observed.extend(std::iter::repeat_n(true, k));
        }
        let mut out = self.clone();
        out.task_names.extend(names.iter().cloned());
        out.units.extend(names.iter().map(|_| None));
        out.task_kind.extend(names.iter().map(|_| TaskKind::Synthetic));
        out.values = values;
        out.observed = observed;
        out
    }

    /// CSV in the input contract: `smiles` then one column per task, empty = unobserved.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("smiles");
        for name in &self.task_names {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for r in 0..self.n_rows() {
            s.push_str(&self.row_keys[r]);
            for t in 0..self.n_tasks() {
                s.push(',');
                if let Some(v) = self.get(r, t) {
                    s.push_str(&format!("{v:?}"));
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv().as_bytes()))
    }
}

/// A non-fatal problem with one input row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    pub source: String,
    /// 1-based line in the source file (header is line 1).
    pub line: usize,
    pub smiles: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssemblyReport {
    pub issues: Vec<RowIssue>,
    /// Molecules whose every observation was filtered out.
    pub dropped_molecules: usize,
    /// (molecule, task) cells that received more than one value.
    pub merged_duplicates: usize,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub targets: SparseTargetMatrix,
    /// Graph of each row, parsed from its canonical SMILES.
    pub molecules: Vec<MolGraph>,
    pub report: AssemblyReport,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Merges CSV sources by canonical SMILES. An empty `task_spec` declares
/// every non-`smiles` column as a task with default filtering.
pub fn assemble_dataset<P: AsRef<Path>>(sources: &[P], task_spec: &[TaskSpec]) -> Result<Dataset, PipelineError> {
    let mut spec: Vec<TaskSpec> = task_spec.to_vec();
    let mut report = AssemblyReport::default();
    // canonical key -> task -> values
    let mut cells: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    let mut rejected: BTreeSet<String> = BTreeSet::new();

    for source in sources {
        let path = source.as_ref();
        let name = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
        let headers = reader.headers()?.clone();
        let smiles_col = headers
            .iter()
            .position(|h| h.trim() == "smiles")
            .ok_or_else(|| PipelineError::Schema(format!("{name}: no `smiles` column")))?;
        let mut columns: Vec<(usize, usize)> = Vec::new();
        for (c, h) in headers.iter().enumerate() {
            let h = h.trim();
            if c == smiles_col {
                continue;
            }
            match spec.iter().position(|s| s.name == h) {
                Some(t) => columns.push((c, t)),
                None if task_spec.is_empty() => {
                    spec.push(TaskSpec::new(h));
                    columns.push((c, spec.len() - 1));
                }
                None => {}
            }
        }
        if columns.is_empty() {
            return Err(PipelineError::Schema(format!("{name}: no declared target column")));
        }
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let raw = record.get(smiles_col).unwrap_or("").trim().to_string();
            let issue = |reason: String| RowIssue {
                source: name.clone(),
                line,
                smiles: raw.clone(),
                reason,
            };
            let g = match parse_smiles(&raw) {
                Ok(g) => g,
                Err(e) => {
                    report.issues.push(issue(format!("parse failure: {e}")));
                    continue;
                }
            };
            let key = canonical_smiles(&g);
            let mut kept = 0;
            let mut had_value = false;
            for &(c, t) in &columns {
                let cell = record.get(c).unwrap_or("").trim();
                if cell.is_empty() {
                    continue;
                }
                had_value = true;
                let v: f64 = match cell.parse() {
                    Ok(v) if f64::is_finite(v) => v,
                    _ => {
                        report.issues.push(issue(format!("bad value {cell:?} for {}", spec[t].name)));
                        continue;
                    }
                };
                if let Some(reason) = rejection_reason(&g, spec[t].allow_metals) {
                    report.issues.push(issue(format!("{reason} (task {})", spec[t].name)));
                    continue;
                }
                cells.entry(key.clone()).or_default().entry(t).or_default().push(v);
                kept += 1;
            }
            if had_value && kept == 0 {
                rejected.insert(key);
            }
        }
    }
    report.dropped_molecules = rejected.iter().filter(|k| !cells.contains_key(*k)).count();
    for i in &report.issues {
        log::warn!("{}:{}: {} ({})", i.source, i.line, i.reason, i.smiles);
    }
    if cells.is_empty() {
        return Err(PipelineError::NoUsableRows);
    }

    let t = spec.len();
    let mut targets = SparseTargetMatrix {
        row_keys: Vec::with_capacity(cells.len()),
        task_names: spec.iter().map(|s| s.name.clone()).collect(),
        units: spec.iter().map(|s| s.unit.clone()).collect(),
        task_kind: vec![TaskKind::Experimental; t],
        values: Vec::with_capacity(cells.len() * t),
        observed: Vec::with_capacity(cells.len() * t),
    };
    let mut molecules = Vec::with_capacity(cells.len());
    for (key, by_task) in cells {
        let mut row = vec![f64::NAN; t];
        let mut obs = vec![false; t];
        for (task, mut vals) in by_task {
            if vals.len() > 1 {
                report.merged_duplicates += 1;
            }
            row[task] = median(&mut vals);
            obs[task] = true;
        }
        molecules.push(parse_smiles(&key).map_err(|e| PipelineError::Schema(format!("{key}: {e}")))?);
        targets.row_keys.push(key);
        targets.values.extend(row);
        targets.observed.extend(obs);
    }
    Ok(Dataset {
        targets,
        molecules,
        report,
    })
}
