//! Basak-style neighborhood information content on the hydrogen-filled graph.

use crate::chem::{BondOrder, MolGraph};
use std::collections::HashMap;

fn bond_code(o: BondOrder) -> u8 {
    match o {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

fn entropy(classes: &[u64]) -> f64 {
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &c in classes {
        *counts.entry(c).or_default() += 1;
    }
    let n = classes.len() as f64;
    let mut keys: Vec<_> = counts.into_iter().collect();
    keys.sort_unstable();
    keys.iter()
        .map(|&(_, c)| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy (bits) of atom equivalence classes at radius 0..=max_radius.
///
/// Implicit hydrogens become explicit vertices. Classes at radius r are
/// refined from radius r-1 by the sorted multiset of (bond order, neighbor
/// class) pairs, so two atoms share a class exactly when their r-neighborhood
/// trees coincide.
pub fn information_content(g: &MolGraph, max_radius: usize) -> Vec<f64> {
    let mut label: Vec<u64> = Vec::new();
    let mut adj: Vec<Vec<(usize, u8)>> = Vec::new();
    for a in g.atoms() {
        label.push(a.element.atomic_number() as u64);
        adj.push(Vec::new());
    }
    for b in g.bonds() {
        let code = bond_code(b.order);
        adj[b.begin].push((b.end, code));
        adj[b.end].push((b.begin, code));
    }
    for (i, a) in g.atoms().iter().enumerate() {
        for _ in 0..a.implicit_h {
            let h = label.len();
            label.push(1);
            adj.push(vec![(i, 1)]);
            adj[i].push((h, 1));
        }
    }
    if label.is_empty() {
        return vec![f64::NAN; max_radius + 1];
    }

    let mut out = vec![entropy(&label)];
    for _ in 0..max_radius {
        let mut table: HashMap<(u64, Vec<(u8, u64)>), u64> = HashMap::new();
        let keys: Vec<_> = (0..label.len())
            .map(|i| {
                let mut env: Vec<(u8, u64)> = adj[i].iter().map(|&(j, o)| (o, label[j])).collect();
                env.sort_unstable();
                (label[i], env)
            })
            .collect();
        let mut next = Vec::with_capacity(keys.len());
        for k in keys {
            let fresh = table.len() as u64;
            next.push(*table.entry(k).or_insert(fresh));
        }
        label = next;
        out.push(entropy(&label));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use approx::assert_relative_eq;

    #[test]
    fn methane_classes() {
        let g = parse_smiles("C").unwrap();
        let ic = information_content(&g, 2);
        // one C and four H: -(1/5)log2(1/5) - (4/5)log2(4/5)
        let expected = -(0.2f64 * 0.2f64.log2() + 0.8 * 0.8f64.log2());
        for v in ic {
            assert_relative_eq!(v, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn ethanol_radius_one_splits_hydrogens() {
        let g = parse_smiles("CCO").unwrap();
        let ic = information_content(&g, 1);
        // radius 0: {C:2, O:1, H:6} over 9 atoms
        let p: [f64; 3] = [2.0 / 9.0, 1.0 / 9.0, 6.0 / 9.0];
        let e0: f64 = p.iter().map(|p| -p * p.log2()).sum();
        assert_relative_eq!(ic[0], e0, max_relative = 1e-12);
        // radius 1: CH3, CH2, OH, H-C (5), H-O (1)
        let p: [f64; 5] = [1.0, 1.0, 1.0, 5.0, 1.0].map(|c: f64| c / 9.0);
        let e1: f64 = p.iter().map(|p| -p * p.log2()).sum();
        assert_relative_eq!(ic[1], e1, max_relative = 1e-12);
    }
}
