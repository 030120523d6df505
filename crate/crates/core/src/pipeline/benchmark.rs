use super::PipelineError;
use crate::chem::{canonical_smiles, BondOrder, Element, MolBuilder, MolGraph};
use crate::descriptors::{compute_descriptors, DESCRIPTOR_NAMES};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub n_molecules: usize,
    pub n_tasks: usize,
    /// Probability that a (molecule, task) value is hidden.
    pub sparsity: f64,
    /// Noise standard deviation as a fraction of each task's clean std.
    pub noise_sd: f64,
    pub seed: u64,
    pub min_heavy: usize,
    pub max_heavy: usize,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            n_molecules: 2000,
            n_tasks: 6,
            sparsity: 0.6,
            noise_sd: 0.1,
            seed: 0,
            min_heavy: 4,
            max_heavy: 20,
        }
    }
}

/// Descriptors the task functions draw from.
pub const TASK_DESCRIPTOR_POOL: [&str; 16] = [
    "MW", "nC", "nN", "nO", "nHetero", "nRot", "nRing", "nAromAtom", "TopoPSA(NO)", "VMcGowan", "WPath", "Zagreb1",
    "Xp-1d", "Kier2", "nHBDon", "FCSP3",
];

/// One task: `Σ wᵢ·zᵢ + nl·tanh(z_a·z_b)` over z-scored descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFormula {
    pub name: String,
    pub linear: Vec<(String, f64)>,
    pub interaction: (String, String),
    pub interaction_weight: f64,
    pub clean_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub smiles: Vec<String>,
    pub task_names: Vec<String>,
    /// Row-major noiseless values.
    pub truth: Vec<f64>,
    /// Row-major noisy values (hidden entries are still filled).
    pub noisy: Vec<f64>,
    pub observed: Vec<bool>,
    pub formulas: Vec<TaskFormula>,
}

const ELEMENTS: [(u8, f64); 4] = [(6, 0.70), (7, 0.12), (8, 0.12), (16, 0.06)];

fn max_valence(z: u8) -> u8 {
    match z {
        6 => 4,
        7 => 3,
        _ => 2,
    }
}

fn pick_element(rng: &mut ChaCha8Rng) -> u8 {
    let mut u: f64 = rng.gen();
    for (z, p) in ELEMENTS {
        if u < p {
            return z;
        }
        u -= p;
    }
    6
}

/// Random connected molecule over C, N, O, S: a tree grown atom by atom,
/// optionally on a benzene core, with occasional double bonds and 5/6-ring
/// closures, respecting valence throughout.
fn random_molecule(rng: &mut ChaCha8Rng, n_heavy: usize) -> Option<MolGraph> {
    let mut z: Vec<u8> = Vec::new();
    let mut used: Vec<u8> = Vec::new();
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut add_bond = |a: usize, b: usize, order: BondOrder, used: &mut Vec<u8>, adj: &mut Vec<Vec<usize>>| {
        let o = if order == BondOrder::Double { 2 } else { 1 };
        used[a] += o;
        used[b] += o;
        adj[a].push(b);
        adj[b].push(a);
        bonds.push((a, b, order));
    };
    if n_heavy >= 6 && rng.gen_bool(0.3) {
        for i in 0..6 {
            z.push(6);
            used.push(0);
            adj.push(Vec::new());
            if i > 0 {
                let order = if i % 2 == 1 { BondOrder::Double } else { BondOrder::Single };
                add_bond(i - 1, i, order, &mut used, &mut adj);
            }
        }
        add_bond(5, 0, BondOrder::Single, &mut used, &mut adj);
    } else {
        z.push(6);
        used.push(0);
        adj.push(Vec::new());
    }
    while z.len() < n_heavy {
        let e = pick_element(rng);
        let open: Vec<usize> = (0..z.len()).filter(|&a| used[a] < max_valence(z[a])).collect();
        let &a = open.choose(rng)?;
        let free_a = max_valence(z[a]) - used[a];
        let order = if free_a >= 2 && max_valence(e) >= 2 && rng.gen_bool(0.12) {
            BondOrder::Double
        } else {
            BondOrder::Single
        };
        z.push(e);
        used.push(0);
        adj.push(Vec::new());
        add_bond(a, z.len() - 1, order, &mut used, &mut adj);
    }
    if z.len() >= 5 && rng.gen_bool(0.35) {
        let n = z.len();
        let mut candidates = Vec::new();
        for s in 0..n {
            // BFS distances from s.
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for t in s + 1..n {
                if (dist[t] == 4 || dist[t] == 5) && used[s] < max_valence(z[s]) && used[t] < max_valence(z[t]) {
                    candidates.push((s, t));
                }
            }
        }
        if let Some(&(s, t)) = candidates.choose(rng) {
            add_bond(s, t, BondOrder::Single, &mut used, &mut adj);
        }
    }
    let mut b = MolBuilder::new();
    for &e in &z {
        b.add_atom(Element::from_atomic_number(e)?);
    }
    for (x, y, o) in bonds {
        b.add_bond(x, y, o);
    }
    b.build().ok()
}

fn column_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Deterministic surrogate dataset; the same spec always yields the same values.
pub fn generate_benchmark(spec: &BenchmarkSpec) -> Result<Benchmark, PipelineError> {
    if spec.n_molecules < 100 {
        return Err(PipelineError::Config("benchmark needs at least 100 molecules".into()));
    }
    if !(0.0..1.0).contains(&spec.sparsity) || !(spec.noise_sd >= 0.0) || spec.n_tasks == 0 {
        return Err(PipelineError::Config("sparsity must be in [0, 1), noise_sd ≥ 0, n_tasks ≥ 1".into()));
    }
    if spec.min_heavy < 2 || spec.max_heavy < spec.min_heavy {
        return Err(PipelineError::Config("heavy-atom range is invalid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut seen = BTreeSet::new();
    let mut smiles = Vec::with_capacity(spec.n_molecules);
    let mut mols = Vec::with_capacity(spec.n_molecules);
    let mut attempts = 0usize;
    while mols.len() < spec.n_molecules {
        attempts += 1;
        if attempts > 200 * spec.n_molecules {
            return Err(PipelineError::Config("could not sample enough distinct molecules".into()));
        }
        let n_heavy = rng.gen_range(spec.min_heavy..=spec.max_heavy);
        let Some(g) = random_molecule(&mut rng, n_heavy) else { continue };
        let key = canonical_smiles(&g);
        if seen.insert(key.clone()) {
            smiles.push(key);
            mols.push(g);
        }
    }

    let pool_idx: Vec<usize> = TASK_DESCRIPTOR_POOL
        .iter()
        .map(|name| DESCRIPTOR_NAMES.iter().position(|d| d == name).expect("pool descriptor exists"))
        .collect();
    let n = mols.len();
    let desc: Vec<Vec<f64>> = mols.iter().map(|g| compute_descriptors(g).values).collect();
    let z: Vec<Vec<f64>> = pool_idx
        .iter()
        .map(|&c| {
            let col: Vec<f64> = desc.iter().map(|d| d[c]).collect();
            let (m, s) = column_stats(&col);
            col.iter().map(|v| if s > 0.0 { (v - m) / s } else { 0.0 }).collect()
        })
        .collect();

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let t = spec.n_tasks;
    let mut truth = vec![0.0; n * t];
    let mut formulas = Vec::with_capacity(t);
    for task in 0..t {
        let mut idx: Vec<usize> = (0..pool_idx.len()).collect();
        idx.shuffle(&mut rng);
        let linear: Vec<(usize, f64)> = idx[..3]
            .iter()
            .map(|&i| (i, std_normal.sample(&mut rng) + if rng.gen_bool(0.5) { 1.0 } else { -1.0 }))
            .collect();
        let (a, b) = (idx[3], idx[4]);
        let nl = 0.3 * (rng.gen::<f64>() + 0.5);
        let offset = rng.gen_range(-5.0..5.0);
        let col: Vec<f64> = (0..n)
            .map(|r| offset + linear.iter().map(|&(i, w)| w * z[i][r]).sum::<f64>() + nl * (z[a][r] * z[b][r]).tanh())
            .collect();
        for r in 0..n {
            truth[r * t + task] = col[r];
        }
        formulas.push(TaskFormula {
            name: format!("task_{}", task + 1),
            linear: linear.iter().map(|&(i, w)| (TASK_DESCRIPTOR_POOL[i].to_string(), w)).collect(),
            interaction: (TASK_DESCRIPTOR_POOL[a].to_string(), TASK_DESCRIPTOR_POOL[b].to_string()),
            interaction_weight: nl,
            clean_std: column_stats(&col).1,
        });
    }
    let mut noisy = truth.clone();
    for r in 0..n {
        for task in 0..t {
            noisy[r * t + task] += spec.noise_sd * formulas[task].clean_std * std_normal.sample(&mut rng);
        }
    }
    let mut observed: Vec<bool> = (0..n * t).map(|_| !rng.gen_bool(spec.sparsity)).collect();
    for r in 0..n {
        if !observed[r * t..(r + 1) * t].iter().any(|&o| o) {
            observed[r * t + rng.gen_range(0..t)] = true;
        }
    }
    Ok(Benchmark {
        smiles,
        task_names: formulas.iter().map(|f| f.name.clone()).collect(),
        truth,
        noisy,
        observed,
        formulas,
    })
}

impl Benchmark {
    fn csv(&self, values: &[f64], mask: Option<&[bool]>) -> String {
        let t = self.task_names.len();
        let mut s = format!("smiles,{}\n", self.task_names.join(","));
        for (r, smi) in self.smiles.iter().enumerate() {
            s.push_str(smi);
            for task in 0..t {
                s.push(',');
                let i = r * t + task;
                if mask.is_none_or(|m| m[i]) {
                    s.push_str(&format!("{:?}", values[i]));
                }
            }
            s.push('\n');
        }
        s
    }

    /// Observed noisy values in the dataset CSV contract.
    pub fn data_csv(&self) -> String {
        self.csv(&self.noisy, Some(&self.observed))
    }

    /// Dense noiseless values.
    pub fn truth_csv(&self) -> String {
        self.csv(&self.truth, None)
    }

    /// Writes `data.csv`, `truth.csv` and `formulas.json`; returns the data path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, PipelineError> {
        std::fs::create_dir_all(dir)?;
        let data = dir.join("data.csv");
        std::fs::write(&data, self.data_csv())?;
        std::fs::write(dir.join("truth.csv"), self.truth_csv())?;
        std::fs::write(dir.join("formulas.json"), serde_json::to_string_pretty(&self.formulas)?)?;
        Ok(data)
    }
}
