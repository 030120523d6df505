//! Canonical atom ranking (Morgan-style refinement with tie breaking) and
//! canonical SMILES emission.

use super::{BondOrder, MolGraph};

/// Leaf budget for exploring tie-break choices. Beyond it only the first member
/// of each tied class is tried.
const TIE_BREAK_BUDGET: usize = 512;

fn bond_code(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

fn dense_rank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).unwrap())
        .collect()
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

fn initial_ranks(g: &MolGraph) -> Vec<usize> {
    let keys: Vec<(u8, usize, i8, u8, bool)> = g
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                a.element.atomic_number(),
                g.degree(i),
                a.formal_charge,
                a.implicit_h,
                a.aromatic,
            )
        })
        .collect();
    dense_rank(&keys)
}

/// Refines ranks by neighborhoods until the partition is stable.
fn refine(g: &MolGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    loop {
        let before = class_count(&ranks);
        let keys: Vec<(usize, Vec<(usize, u8)>)> = (0..g.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, u8)> = g
                    .neighbors(i)
                    .iter()
                    .map(|n| (ranks[n.atom], bond_code(g.bonds()[n.bond].order)))
                    .collect();
                nb.sort_unstable();
                (ranks[i], nb)
            })
            .collect();
        ranks = dense_rank(&keys);
        if class_count(&ranks) == before {
            return ranks;
        }
    }
}

fn lowest_tied_class(ranks: &[usize]) -> Option<Vec<usize>> {
    let mut counts = vec![0usize; class_count(ranks)];
    for &r in ranks {
        counts[r] += 1;
    }
    let tied = counts.iter().position(|&c| c > 1)?;
    Some((0..ranks.len()).filter(|&i| ranks[i] == tied).collect())
}

fn break_tie(ranks: &[usize], chosen: usize) -> Vec<usize> {
    let keys: Vec<(usize, bool)> = ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| (r, !(i == chosen || ranks[i] != ranks[chosen])))
        .collect();
    dense_rank(&keys)
}

fn search(g: &MolGraph, ranks: Vec<usize>, leaves: &mut usize, best: &mut Option<(String, Vec<usize>)>) {
    let ranks = refine(g, ranks);
    match lowest_tied_class(&ranks) {
        None => {
            *leaves += 1;
            let s = write_smiles(g, &ranks);
            if best.as_ref().is_none_or(|(b, _)| s < *b) {
                *best = Some((s, ranks));
            }
        }
        Some(class) => {
            for (k, &atom) in class.iter().enumerate() {
                if k > 0 && *leaves >= TIE_BREAK_BUDGET {
                    break;
                }
                search(g, break_tie(&ranks, atom), leaves, best);
            }
        }
    }
}

fn canonicalize(g: &MolGraph) -> (String, Vec<usize>) {
    if g.atom_count() == 0 {
        return (String::new(), Vec::new());
    }
    let mut best = None;
    let mut leaves = 0;
    search(g, initial_ranks(g), &mut leaves, &mut best);
    best.expect("at least one leaf is always visited")
}

/// Canonical total order of atoms (0 = first emitted).
pub fn canonical_ranks(g: &MolGraph) -> Vec<usize> {
    canonicalize(g).1
}

/// Deterministic SMILES that does not depend on the input atom order.
pub fn canonical_smiles(g: &MolGraph) -> String {
    canonicalize(g).0
}

/// Hydrogen count the parser would infer for this atom written without brackets.
fn implied_hydrogens(g: &MolGraph, atom: usize) -> Option<u8> {
    let a = &g.atoms()[atom];
    let sum: u32 = g
        .neighbors(atom)
        .iter()
        .map(|n| g.bonds()[n.bond].order.localized())
        .sum();
    let valence = a.element.implied_valence(sum)?;
    let kekule_sum = if a.aromatic && valence > sum {
        sum + 1
    } else {
        sum
    };
    let valence = a.element.implied_valence(kekule_sum)?;
    Some((valence - kekule_sum) as u8)
}

fn atom_token(g: &MolGraph, atom: usize) -> String {
    let a = &g.atoms()[atom];
    let symbol = if a.aromatic {
        a.element.symbol().to_ascii_lowercase()
    } else {
        a.element.symbol().to_string()
    };
    let bare = a.element.in_smiles_organic_subset()
        && a.formal_charge == 0
        && implied_hydrogens(g, atom) == Some(a.implicit_h);
    if bare {
        return symbol;
    }
    let mut s = format!("[{symbol}");
    match a.implicit_h {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match a.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        q if q > 0 => s.push_str(&format!("+{q}")),
        q => s.push_str(&format!("-{}", -q)),
    }
    s.push(']');
    s
}

fn bond_token(g: &MolGraph, bond: usize) -> &'static str {
    let b = &g.bonds()[bond];
    match b.order {
        BondOrder::Aromatic => "",
        BondOrder::Single => {
            if g.atoms()[b.begin].aromatic && g.atoms()[b.end].aromatic {
                "-"
            } else {
                ""
            }
        }
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn ring_label(d: usize) -> String {
    if d < 10 {
        d.to_string()
    } else {
        format!("%{d:02}")
    }
}

struct Writer<'a> {
    g: &'a MolGraph,
    ranks: &'a [usize],
    visited: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    /// Ring-closure bonds touching each atom, as (partner, bond).
    closures: Vec<Vec<(usize, usize)>>,
    digit_of_bond: Vec<Option<usize>>,
    digits_in_use: Vec<bool>,
}

impl<'a> Writer<'a> {
    fn sorted_neighbors(&self, atom: usize) -> Vec<(usize, usize)> {
        let mut nb: Vec<(usize, usize)> = self
            .g
            .neighbors(atom)
            .iter()
            .map(|n| (n.atom, n.bond))
            .collect();
        nb.sort_by_key(|&(a, _)| self.ranks[a]);
        nb
    }

    fn build_tree(&mut self, atom: usize, via: Option<usize>, on_stack: &mut Vec<bool>) {
        self.visited[atom] = true;
        on_stack[atom] = true;
        for (nb, bond) in self.sorted_neighbors(atom) {
            if Some(bond) == via {
                continue;
            }
            if !self.visited[nb] {
                self.children[atom].push((nb, bond));
                self.build_tree(nb, Some(bond), on_stack);
            } else if on_stack[nb] {
                // Back edge to an ancestor: ring closure.
                self.closures[nb].push((atom, bond));
                self.closures[atom].push((nb, bond));
            }
        }
        on_stack[atom] = false;
    }

    fn emit(&mut self, atom: usize, out: &mut String) {
        out.push_str(&atom_token(self.g, atom));
        let mut closures = self.closures[atom].clone();
        closures.sort_by_key(|&(p, _)| self.ranks[p]);
        let mut to_free = Vec::new();
        for (_, bond) in closures {
            match self.digit_of_bond[bond] {
                Some(d) => {
                    out.push_str(&ring_label(d));
                    to_free.push(d);
                }
                None => {
                    let d = (1..)
                        .find(|&d| !self.digits_in_use.get(d).copied().unwrap_or(false))
                        .unwrap();
                    if d >= self.digits_in_use.len() {
                        self.digits_in_use.resize(d + 1, false);
                    }
                    self.digits_in_use[d] = true;
                    self.digit_of_bond[bond] = Some(d);
                    out.push_str(bond_token(self.g, bond));
                    out.push_str(&ring_label(d));
                }
            }
        }
        for d in to_free {
            self.digits_in_use[d] = false;
        }
        let children = self.children[atom].clone();
        let last = children.len().saturating_sub(1);
        for (k, (child, bond)) in children.into_iter().enumerate() {
            if k < last {
                out.push('(');
            }
            out.push_str(bond_token(self.g, bond));
            self.emit(child, out);
            if k < last {
                out.push(')');
            }
        }
    }
}

fn write_smiles(g: &MolGraph, ranks: &[usize]) -> String {
    let n = g.atom_count();
    let mut w = Writer {
        g,
        ranks,
        visited: vec![false; n],
        children: vec![Vec::new(); n],
        closures: vec![Vec::new(); n],
        digit_of_bond: vec![None; g.bonds().len()],
        digits_in_use: vec![false; 10],
    };
    let mut fragments = g.fragments();
    for f in &mut fragments {
        f.sort_by_key(|&a| ranks[a]);
    }
    fragments.sort_by_key(|f| ranks[f[0]]);
    let mut on_stack = vec![false; n];
    let mut parts = Vec::new();
    for f in fragments {
        let root = f[0];
        w.build_tree(root, None, &mut on_stack);
        let mut s = String::new();
        w.emit(root, &mut s);
        parts.push(s);
    }
    parts.join(".")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap())
    }

    #[test]
    fn order_invariance_on_ethanol() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(O)C"), canon("CCO"));
    }

    #[test]
    fn kekule_and_aromatic_inputs_agree() {
        assert_eq!(canon("C1=CC=CC=C1"), canon("c1ccccc1"));
        assert_eq!(canon("c1ccccc1"), "c1ccccc1");
        assert_eq!(canon("C1=CC=NC=C1"), canon("c1ccncc1"));
        assert_eq!(canon("O=C1C=CC=CN1"), canon("O=c1cccc[nH]1"));
    }

    #[test]
    fn idempotent_on_its_output() {
        for s in [
            "CC(=O)Oc1ccccc1C(=O)O",
            "C1CC2CCC1CC2",
            "c1ccc2c(c1)[nH]c1ccccc12",
            "[NH4+].[Cl-]",
            "C#N",
            "O=S(=O)(O)c1ccc(cc1)N",
            "c1ccc(-c2ccccc2)cc1",
            "C12C3C4C1C5C2C3C45",
        ] {
            let c1 = canon(s);
            assert_eq!(canon(&c1), c1, "input {s}");
        }
    }

    #[test]
    fn twelve_atom_permutations_map_to_one_string() {
        // ibuprofen-like, 12 heavy atoms after trimming: 4-isobutylbenzoic acid
        let g = parse_smiles("CC(C)Cc1ccc(cc1)C(=O)O").unwrap();
        assert_eq!(g.heavy_atom_count(), 13);
        let g = parse_smiles("CC(C)Cc1ccc(cc1)C=O").unwrap();
        assert_eq!(g.heavy_atom_count(), 12);
        let reference = canonical_smiles(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut order: Vec<usize> = (0..g.atom_count()).collect();
        for _ in 0..100 {
            order.shuffle(&mut rng);
            assert_eq!(canonical_smiles(&g.relabel(&order)), reference);
        }
    }

    #[test]
    fn ranks_are_a_permutation() {
        let g = parse_smiles("CC(C)(C)C").unwrap();
        let mut r = canonical_ranks(&g);
        r.sort_unstable();
        assert_eq!(r, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn charges_and_hydrogens_round_trip() {
        let c = canon("C[N+](C)(C)C");
        assert!(c.contains("[N+]"), "{c}");
        let c = canon("c1cc[nH]c1");
        assert!(c.contains("[nH]"), "{c}");
        let g1 = parse_smiles("CC(=O)[O-].[Na+]").unwrap();
        let g2 = parse_smiles(&canonical_smiles(&g1)).unwrap();
        assert_eq!(g1.total_hydrogens(), g2.total_hydrogens());
    }
}
