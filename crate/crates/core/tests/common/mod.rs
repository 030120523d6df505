//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use rand::Rng;
use staug_core::gbt::{beats, GbtParams, Tree, TreeNode, MIN_SPLIT_GAIN};

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for v in 1..n {
        let u = rng.gen_range(0..v);
        adj[u].push(v);
        adj[v].push(u);
    }
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !adj[a].contains(&b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    adj
}

/// Floyd–Warshall all-pairs distances; `f64::INFINITY` when unreachable.
pub fn floyd_warshall(adj: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = adj.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for &j in &adj[i] {
            d[i][j] = 1.0;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

pub fn oracle_wiener(d: &[Vec<f64>]) -> f64 {
    let mut w = 0.0;
    for i in 0..d.len() {
        for j in 0..d.len() {
            if i < j {
                w += d[i][j];
            }
        }
    }
    w
}

pub fn oracle_zagreb(adj: &[Vec<usize>]) -> (f64, f64) {
    let deg: Vec<f64> = adj.iter().map(|a| a.len() as f64).collect();
    let m1 = deg.iter().map(|d| d * d).sum();
    let mut m2 = 0.0;
    for i in 0..adj.len() {
        for j in 0..adj.len() {
            if i < j && adj[i].contains(&j) {
                m2 += deg[i] * deg[j];
            }
        }
    }
    (m1, m2)
}

pub fn oracle_balaban(adj: &[Vec<usize>], d: &[Vec<f64>]) -> f64 {
    let n = adj.len() as f64;
    let m = adj.iter().map(|a| a.len()).sum::<usize>() as f64 / 2.0;
    let mu = m - n + 1.0;
    let s: Vec<f64> = d.iter().map(|r| r.iter().sum()).collect();
    let mut sum = 0.0;
    for i in 0..adj.len() {
        for j in 0..adj.len() {
            if i < j && adj[i].contains(&j) {
                sum += (s[i] * s[j]).powf(-0.5);
            }
        }
    }
    m / (mu + 1.0) * sum
}

pub fn oracle_eccentric_connectivity(adj: &[Vec<usize>], d: &[Vec<f64>]) -> f64 {
    (0..adj.len())
        .map(|i| d[i].iter().cloned().fold(0.0, f64::max) * adj[i].len() as f64)
        .sum()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Exhaustive split search for one node: every feature, every midpoint
/// threshold, both missing-value routings. Gains are summed from scratch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub default_left: bool,
    pub gain: f64,
}

fn stats(rows: &[usize], g: &[f64]) -> (f64, f64) {
    (rows.iter().map(|&r| g[r]).sum(), rows.len() as f64)
}

fn gain_of(left: &[usize], right: &[usize], g: &[f64], p: &GbtParams) -> Option<f64> {
    let (gl, hl) = stats(left, g);
    let (gr, hr) = stats(right, g);
    if hl < p.min_child_weight || hr < p.min_child_weight || hl == 0.0 || hr == 0.0 {
        return None;
    }
    let score = |g: f64, h: f64| g * g / (h + p.lambda);
    Some(0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - p.gamma)
}

pub fn oracle_best_split(
    x: &[Vec<f64>],
    rows: &[usize],
    g: &[f64],
    p: &GbtParams,
) -> Option<OracleSplit> {
    let n_features = x[0].len();
    let mut best: Option<OracleSplit> = None;
    for f in 0..n_features {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][f]).filter(|v| !v.is_nan()).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let missing: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f].is_nan()).collect();
        for w in values.windows(2) {
            let thr = w[0] + (w[1] - w[0]) / 2.0;
            let lo: Vec<usize> = rows.iter().copied().filter(|&r| !x[r][f].is_nan() && x[r][f] < thr).collect();
            let hi: Vec<usize> = rows.iter().copied().filter(|&r| !x[r][f].is_nan() && x[r][f] >= thr).collect();
            let mut right_routing = hi.clone();
            right_routing.extend(&missing);
            let mut left_routing = lo.clone();
            left_routing.extend(&missing);
            let go_right = gain_of(&lo, &right_routing, g, p);
            let go_left = if missing.is_empty() { None } else { gain_of(&left_routing, &hi, g, p) };
            let pick = match (go_right, go_left) {
                (Some(r), Some(l)) if beats(l, r) => Some((l, true)),
                (Some(r), _) => Some((r, false)),
                (None, Some(l)) => Some((l, true)),
                _ => None,
            };
            if let Some((gain, default_left)) = pick {
                let take = match best {
                    None => gain > MIN_SPLIT_GAIN,
                    Some(b) => beats(gain, b.gain),
                };
                if take {
                    best = Some(OracleSplit { feature: f, threshold: thr, default_left, gain });
                }
            }
        }
    }
    best
}

/// Reference single-round tree of the given depth, no subsampling.
pub fn oracle_tree(x: &[Vec<f64>], y: &[f64], p: &GbtParams) -> (f64, OracleNode) {
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let g: Vec<f64> = y.iter().map(|t| base - t).collect();
    let rows: Vec<usize> = (0..y.len()).collect();
    (base, oracle_grow(x, &rows, &g, p, 0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleNode {
    Leaf(f64),
    Split(OracleSplit, Box<OracleNode>, Box<OracleNode>),
}

fn oracle_grow(x: &[Vec<f64>], rows: &[usize], g: &[f64], p: &GbtParams, depth: usize) -> OracleNode {
    let leaf = || {
        let (gs, hs) = stats(rows, g);
        OracleNode::Leaf(-gs / (hs + p.lambda))
    };
    if depth == p.max_depth {
        return leaf();
    }
    match oracle_best_split(x, rows, g, p) {
        None => leaf(),
        Some(s) => {
            let goes_left = |r: &usize| {
                let v = x[*r][s.feature];
                if v.is_nan() { s.default_left } else { v < s.threshold }
            };
            let l: Vec<usize> = rows.iter().copied().filter(goes_left).collect();
            let r: Vec<usize> = rows.iter().copied().filter(|r| !goes_left(r)).collect();
            OracleNode::Split(
                s,
                Box::new(oracle_grow(x, &l, g, p, depth + 1)),
                Box::new(oracle_grow(x, &r, g, p, depth + 1)),
            )
        }
    }
}

/// Compares structure exactly and leaf values to `tol` relative.
pub fn tree_matches(tree: &Tree, i: usize, oracle: &OracleNode, tol: f64) -> Result<(), String> {
    match (&tree.nodes[i], oracle) {
        (TreeNode::Leaf { value }, OracleNode::Leaf(v)) => {
            if (value - v).abs() <= tol * value.abs().max(v.abs()).max(1.0) {
                Ok(())
            } else {
                Err(format!("leaf {value} vs oracle {v}"))
            }
        }
        (
            TreeNode::Split { feature, threshold, default_left, left, right },
            OracleNode::Split(s, l, r),
        ) => {
            if *feature != s.feature || *threshold != s.threshold || *default_left != s.default_left {
                return Err(format!(
                    "split (f{feature} < {threshold}, left={default_left}) vs oracle (f{} < {}, left={})",
                    s.feature, s.threshold, s.default_left
                ));
            }
            tree_matches(tree, *left, l, tol)?;
            tree_matches(tree, *right, r, tol)
        }
        (a, b) => Err(format!("node kind differs: {a:?} vs {b:?}")),
    }
}

/// Random small regression dataset with integer-valued features (to create
/// ties) and injected missing values.
pub fn random_gbt_dataset(rng: &mut impl Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.gen_range(4..=20);
    let f = rng.gen_range(1..=5);
    let missing_rate = [0.0, 0.1, 0.3][rng.gen_range(0..3)];
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..f)
                .map(|_| {
                    if rng.gen_bool(missing_rate) {
                        f64::NAN
                    } else {
                        rng.gen_range(0..6) as f64
                    }
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-50..50) as f64 / 4.0).collect();
    (x, y)
}

/// Naive regression metrics: (mae, rmse, r2) written directly from definitions.
pub fn naive_metrics(pred: &[f64], truth: &[f64]) -> (f64, f64, Option<f64>) {
    let n = truth.len() as f64;
    let mut abs = 0.0;
    let mut sq = 0.0;
    for i in 0..truth.len() {
        abs += (pred[i] - truth[i]).abs();
        sq += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    }
    let mean = truth.iter().sum::<f64>() / n;
    let tot: f64 = truth.iter().map(|t| (t - mean) * (t - mean)).sum();
    let r2 = if tot == 0.0 { None } else { Some(1.0 - sq / tot) };
    (abs / n, (sq / n).sqrt(), r2)
}

/// Fast settings for end-to-end pipeline runs on small datasets.
pub fn tiny_run_config(seeds: &[u64]) -> staug_core::pipeline::RunConfig {
    staug_core::pipeline::RunConfig {
        cv_seeds: seeds.to_vec(),
        gbt: GbtParams {
            n_rounds: 20,
            max_depth: 3,
            learning_rate: 0.3,
            ..Default::default()
        },
        gt: staug_core::gt::GtConfig {
            layers: 1,
            heads: 2,
            hidden_dim: 8,
            head_hidden: 8,
            max_epochs: 2,
            patience: 2,
            batch_size: 16,
            ..Default::default()
        },
        ..Default::default()
    }
}

/// Writes the surrogate benchmark into `dir` and returns the data CSV path.
pub fn small_benchmark(dir: &std::path::Path, n_tasks: usize, seed: u64) -> std::path::PathBuf {
    let spec = staug_core::pipeline::BenchmarkSpec {
        n_molecules: 100,
        n_tasks,
        seed,
        max_heavy: 10,
        ..Default::default()
    };
    staug_core::pipeline::generate_benchmark(&spec).unwrap().write(dir).unwrap()
}

/// `(name, smiles)` entries of the shared test corpus.
pub fn smiles_corpus() -> Vec<(String, String)> {
    include_str!("../data/smiles_corpus.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (name, smi) = l.split_once('\t').expect("name<TAB>smiles");
            (name.to_string(), smi.to_string())
        })
        .collect()
}

/// The 20 corpus molecules with the most atoms, ties by name.
pub fn permutation_subset() -> Vec<(String, String)> {
    let mut all: Vec<(usize, String, String)> = smiles_corpus()
        .into_iter()
        .map(|(n, s)| (staug_core::chem::parse_smiles(&s).unwrap().atom_count(), n, s))
        .collect();
    all.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    all.into_iter().take(20).map(|(_, n, s)| (n, s)).collect()
}
