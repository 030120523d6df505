//! Graph-theoretical indices on a hydrogen-suppressed adjacency list.
//!
//! All functions accept plain adjacency lists so they can be checked against
//! brute-force oracles on arbitrary graphs, not only molecules.

pub const UNREACHABLE: usize = usize::MAX;

/// All-pairs shortest path lengths by BFS from every vertex.
pub fn distance_matrix(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut out = vec![vec![UNREACHABLE; n]; n];
    let mut queue = Vec::with_capacity(n);
    for (s, row) in out.iter_mut().enumerate() {
        row[s] = 0;
        queue.clear();
        queue.push(s);
        let mut head = 0;
        while head < queue.len() {
            let a = queue[head];
            head += 1;
            for &b in &adj[a] {
                if row[b] == UNREACHABLE {
                    row[b] = row[a] + 1;
                    queue.push(b);
                }
            }
        }
    }
    out
}

fn edges(adj: &[Vec<usize>]) -> impl Iterator<Item = (usize, usize)> + '_ {
    adj.iter()
        .enumerate()
        .flat_map(|(i, nb)| nb.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
}

pub fn edge_count(adj: &[Vec<usize>]) -> usize {
    adj.iter().map(Vec::len).sum::<usize>() / 2
}

pub fn component_count(dist: &[Vec<usize>]) -> usize {
    let n = dist.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for i in 0..n {
        if !seen[i] {
            count += 1;
            for j in 0..n {
                if dist[i][j] != UNREACHABLE {
                    seen[j] = true;
                }
            }
        }
    }
    count
}

/// Sum of distances over unordered connected pairs.
pub fn wiener_index(dist: &[Vec<usize>]) -> f64 {
    let mut w = 0usize;
    for (i, row) in dist.iter().enumerate() {
        for &d in &row[i + 1..] {
            if d != UNREACHABLE {
                w += d;
            }
        }
    }
    w as f64
}

/// Number of unordered pairs at distance exactly three.
pub fn wiener_polarity(dist: &[Vec<usize>]) -> f64 {
    let mut w = 0usize;
    for (i, row) in dist.iter().enumerate() {
        w += row[i + 1..].iter().filter(|&&d| d == 3).count();
    }
    w as f64
}

pub fn zagreb_m1(adj: &[Vec<usize>]) -> f64 {
    adj.iter().map(|nb| (nb.len() * nb.len()) as f64).sum()
}

pub fn zagreb_m2(adj: &[Vec<usize>]) -> f64 {
    edges(adj)
        .map(|(i, j)| (adj[i].len() * adj[j].len()) as f64)
        .sum()
}

/// Balaban J; undefined for edgeless or disconnected graphs.
pub fn balaban_j(adj: &[Vec<usize>], dist: &[Vec<usize>]) -> Option<f64> {
    let m = edge_count(adj);
    if m == 0 || component_count(dist) != 1 {
        return None;
    }
    let n = adj.len();
    let cyclomatic = m + 1 - n;
    let s: Vec<f64> = dist
        .iter()
        .map(|row| row.iter().sum::<usize>() as f64)
        .collect();
    let sum: f64 = edges(adj).map(|(i, j)| 1.0 / (s[i] * s[j]).sqrt()).sum();
    Some(m as f64 / (cyclomatic as f64 + 1.0) * sum)
}

/// Eccentricity of each vertex within its own component.
pub fn eccentricities(dist: &[Vec<usize>]) -> Vec<usize> {
    dist.iter()
        .map(|row| {
            row.iter()
                .copied()
                .filter(|&d| d != UNREACHABLE)
                .max()
                .unwrap_or(0)
        })
        .collect()
}

pub fn eccentric_connectivity(adj: &[Vec<usize>], dist: &[Vec<usize>]) -> f64 {
    eccentricities(dist)
        .iter()
        .zip(adj)
        .map(|(&e, nb)| (e * nb.len()) as f64)
        .sum()
}

/// Atom-bond connectivity index.
pub fn abc_index(adj: &[Vec<usize>]) -> f64 {
    edges(adj)
        .map(|(i, j)| {
            let (a, b) = (adj[i].len() as f64, adj[j].len() as f64);
            ((a + b - 2.0) / (a * b)).sqrt()
        })
        .sum()
}

/// Visits every simple path with exactly `len` edges once (as an ordered
/// vertex list whose first vertex is smaller than its last).
pub fn for_each_path(adj: &[Vec<usize>], len: usize, mut visit: impl FnMut(&[usize])) {
    fn extend(
        adj: &[Vec<usize>],
        len: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if path.len() == len + 1 {
            if path[0] < path[len] || len == 0 {
                visit(path);
            }
            return;
        }
        let last = *path.last().unwrap();
        for &b in &adj[last] {
            if !on_path[b] {
                on_path[b] = true;
                path.push(b);
                extend(adj, len, path, on_path, visit);
                path.pop();
                on_path[b] = false;
            }
        }
    }
    let mut on_path = vec![false; adj.len()];
    let mut path = Vec::with_capacity(len + 1);
    for s in 0..adj.len() {
        on_path[s] = true;
        path.push(s);
        extend(adj, len, &mut path, &mut on_path, &mut visit);
        path.pop();
        on_path[s] = false;
    }
}

pub fn path_count(adj: &[Vec<usize>], len: usize) -> usize {
    let mut c = 0;
    for_each_path(adj, len, |_| c += 1);
    c
}

/// Simple path molecular connectivity index of the given order.
pub fn chi_path(adj: &[Vec<usize>], order: usize) -> f64 {
    let mut total = 0.0;
    for_each_path(adj, order, |p| {
        if p.iter().all(|&a| !adj[a].is_empty()) {
            total += p
                .iter()
                .map(|&a| 1.0 / (adj[a].len() as f64).sqrt())
                .product::<f64>();
        }
    });
    total
}

/// Kier shape indices kappa 1..3 (index 0..2); `None` when undefined.
pub fn kappa_shape(adj: &[Vec<usize>]) -> [Option<f64>; 3] {
    let a = adj.len() as f64;
    let p1 = path_count(adj, 1) as f64;
    let p2 = path_count(adj, 2) as f64;
    let p3 = path_count(adj, 3) as f64;
    let k1 = (p1 > 0.0).then(|| a * (a - 1.0).powi(2) / (p1 * p1));
    let k2 = (adj.len() >= 3 && p2 > 0.0).then(|| (a - 1.0) * (a - 2.0).powi(2) / (p2 * p2));
    let k3 = (adj.len() >= 4 && p3 > 0.0).then(|| {
        if adj.len() % 2 == 1 {
            (a - 1.0) * (a - 3.0).powi(2) / (p3 * p3)
        } else {
            (a - 3.0) * (a - 2.0).powi(2) / (p3 * p3)
        }
    });
    [k1, k2, k3]
}

/// Moreau–Broto autocorrelation: sum of property products over pairs at `lag`.
pub fn moreau_broto(dist: &[Vec<usize>], property: &[f64], lag: usize) -> f64 {
    let mut total = 0.0;
    for (i, row) in dist.iter().enumerate() {
        for j in i + 1..row.len() {
            if row[j] == lag {
                total += property[i] * property[j];
            }
        }
    }
    total
}
