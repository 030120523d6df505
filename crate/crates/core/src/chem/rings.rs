//! Minimum cycle basis (SSSR) via Horton candidate cycles and GF(2) elimination.

use super::MolGraph;
use std::collections::{HashSet, VecDeque};

#[derive(Clone)]
struct Candidate {
    atoms: Vec<usize>,
    edges: Vec<u64>,
    len: usize,
}

fn bfs_tree(g: &MolGraph, root: usize) -> (Vec<usize>, Vec<usize>) {
    let n = g.atom_count();
    let mut dist = vec![usize::MAX; n];
    let mut parent = vec![usize::MAX; n];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(a) = queue.pop_front() {
        let mut nbs: Vec<usize> = g.neighbors(a).iter().map(|nb| nb.atom).collect();
        nbs.sort_unstable();
        for b in nbs {
            if dist[b] == usize::MAX {
                dist[b] = dist[a] + 1;
                parent[b] = a;
                queue.push_back(b);
            }
        }
    }
    (dist, parent)
}

fn path_to_root(parent: &[usize], mut a: usize, root: usize) -> Vec<usize> {
    let mut path = vec![a];
    while a != root {
        a = parent[a];
        path.push(a);
    }
    path
}

pub(crate) fn smallest_set_of_smallest_rings(g: &MolGraph) -> Vec<Vec<usize>> {
    let n = g.atom_count();
    let m = g.bonds().len();
    let components = g.fragments().len();
    let target = (m + components).saturating_sub(n);
    if target == 0 {
        return Vec::new();
    }
    let words = m.div_ceil(64);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut candidates = Vec::new();

    for root in 0..n {
        let (dist, parent) = bfs_tree(g, root);
        for bond in g.bonds() {
            let (x, y) = (bond.begin, bond.end);
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            // Tree edges give no cycle.
            if parent[x] == y || parent[y] == x {
                continue;
            }
            let px = path_to_root(&parent, x, root);
            let py = path_to_root(&parent, y, root);
            let sx: HashSet<usize> = px[..px.len() - 1].iter().copied().collect();
            if py[..py.len() - 1].iter().any(|a| sx.contains(a)) {
                continue;
            }
            // x -> root, then back down to y
            let mut cycle: Vec<usize> = px;
            cycle.extend(py.iter().rev().skip(1));
            let mut edges = vec![0u64; words];
            let mut ok = true;
            for k in 0..cycle.len() {
                let a = cycle[k];
                let b = cycle[(k + 1) % cycle.len()];
                match g.bond_between(a, b) {
                    Some(e) => edges[e / 64] |= 1 << (e % 64),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok || cycle.len() < 3 {
                continue;
            }
            if seen.insert(edges.clone()) {
                let len = cycle.len();
                candidates.push(Candidate {
                    atoms: normalize_cycle(cycle),
                    edges,
                    len,
                });
            }
        }
    }

    candidates.sort_by(|a, b| a.len.cmp(&b.len).then_with(|| a.atoms.cmp(&b.atoms)));

    // Reduced basis keyed by pivot bit.
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for cand in candidates {
        let mut v = cand.edges.clone();
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (w, r) in v.iter_mut().zip(row) {
                    *w ^= r;
                }
            }
        }
        if let Some(pivot) = first_bit(&v) {
            basis.push((pivot, v));
            rings.push(cand.atoms);
            if rings.len() == target {
                break;
            }
        }
    }
    rings
}

fn first_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

/// Rotates a cycle so it starts at its smallest atom and runs toward the smaller neighbor.
fn normalize_cycle(cycle: Vec<usize>) -> Vec<usize> {
    let n = cycle.len();
    let start = (0..n).min_by_key(|&i| cycle[i]).unwrap();
    let fwd = cycle[(start + 1) % n];
    let back = cycle[(start + n - 1) % n];
    if fwd <= back {
        (0..n).map(|k| cycle[(start + k) % n]).collect()
    } else {
        (0..n).map(|k| cycle[(start + n - k) % n]).collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    fn ring_sizes(smiles: &str) -> Vec<usize> {
        let g = parse_smiles(smiles).unwrap();
        let mut s: Vec<usize> = g.rings().iter().map(|r| r.len()).collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn simple_and_fused_rings() {
        assert_eq!(ring_sizes("CCO"), Vec::<usize>::new());
        assert_eq!(ring_sizes("C1CCCCC1"), vec![6]);
        assert_eq!(ring_sizes("c1ccc2ccccc2c1"), vec![6, 6]);
        assert_eq!(ring_sizes("C12CC1C2"), vec![3, 3]);
        // norbornane: two five-membered rings
        assert_eq!(ring_sizes("C1CC2CCC1C2"), vec![5, 5]);
        // cubane: five four-membered rings
        assert_eq!(ring_sizes("C12C3C4C1C5C2C3C45"), vec![4, 4, 4, 4, 4]);
    }

    #[test]
    fn ring_atoms_are_cycles() {
        let g = parse_smiles("c1ccc2c(c1)CCN2").unwrap();
        for ring in g.rings() {
            for k in 0..ring.len() {
                assert!(g.bond_between(ring[k], ring[(k + 1) % ring.len()]).is_some());
            }
        }
    }
}
