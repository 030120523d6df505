//! Kekulization of aromatic input and ring-by-ring Hückel aromaticity.
//!
//! Perception works on the Kekulé form only, so lowercase input symbols are
//! hints that get re-derived. Each SSSR ring is judged on its own (fused
//! systems such as azulene are not treated as one perimeter). π-electron
//! contributions per ring atom:
//!
//! | atom                                           | π |
//! |------------------------------------------------|---|
//! | any atom with a double bond to a ring atom     | 1 |
//! | C with exocyclic double bond to N/O/S          | 0 |
//! | C-, neutral 3-connected N, N-, O, S, Se, P     | 2 |
//! | C+, neutral 3-connected B                      | 0 |
//!
//! Anything else (sp3 carbon, triple bonds, cumulated doubles) makes the ring
//! non-aromatic. A ring is aromatic when its π count is 4n + 2.

use super::graph::{BondOrder, RawAtom};
use super::{ChemError, Element, MolGraph, Result};

/// Charge-adjusted valence list: an ion takes the valences of its isoelectronic neutral.
fn isoelectronic_valence(element: Element, charge: i8, used: u32) -> Option<u32> {
    let z = element.atomic_number() as i16 - charge as i16;
    let iso = Element::from_atomic_number(u8::try_from(z).ok()?)?;
    iso.implied_valence(used)
}

fn needs_double_bond(
    atom: &RawAtom,
    index: usize,
    bonds: &[(usize, usize, BondOrder)],
    adjacency: &[Vec<(usize, usize)>],
) -> bool {
    let used: u32 = adjacency[index]
        .iter()
        .map(|&(_, bi)| bonds[bi].2.localized())
        .sum::<u32>()
        + atom.bracket_h.unwrap_or(0) as u32;
    let valence = if atom.bracket_h.is_some() {
        isoelectronic_valence(atom.element, atom.charge, used)
    } else {
        atom.element.implied_valence(used)
    };
    matches!(valence, Some(v) if v > used)
}

/// Assigns localized orders (1 or 2) to every aromatic bond (`kekule[bi] == 0`).
pub(crate) fn kekulize(
    atoms: &[RawAtom],
    bonds: &[(usize, usize, BondOrder)],
    adjacency: &[Vec<(usize, usize)>],
    kekule: &mut [u8],
) -> Result<()> {
    if kekule.iter().all(|&k| k != 0) && !atoms.iter().any(|a| a.aromatic) {
        return Ok(());
    }
    let n = atoms.len();
    let mut candidate = vec![false; n];
    for (i, atom) in atoms.iter().enumerate() {
        let touches_aromatic = adjacency[i].iter().any(|&(_, bi)| kekule[bi] == 0);
        if (touches_aromatic || atom.aromatic) && needs_double_bond(atom, i, bonds, adjacency) {
            candidate[i] = true;
        }
    }
    let mut mate = vec![usize::MAX; n];
    let options = |a: usize, mate: &[usize]| -> Vec<(usize, usize)> {
        adjacency[a]
            .iter()
            .filter(|&&(b, bi)| kekule[bi] == 0 && candidate[b] && mate[b] == usize::MAX)
            .copied()
            .collect()
    };

    fn search(
        candidate: &[bool],
        mate: &mut Vec<usize>,
        options: &dyn Fn(usize, &[usize]) -> Vec<(usize, usize)>,
        budget: &mut usize,
    ) -> bool {
        // Most constrained unmatched candidate first.
        let mut best: Option<(usize, Vec<(usize, usize)>)> = None;
        for a in 0..candidate.len() {
            if !candidate[a] || mate[a] != usize::MAX {
                continue;
            }
            let opts = options(a, mate);
            if opts.is_empty() {
                return false;
            }
            if best.as_ref().is_none_or(|(_, o)| opts.len() < o.len()) {
                best = Some((a, opts));
            }
        }
        let Some((a, opts)) = best else {
            return true;
        };
        for (b, _) in opts {
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            mate[a] = b;
            mate[b] = a;
            if search(candidate, mate, options, budget) {
                return true;
            }
            mate[a] = usize::MAX;
            mate[b] = usize::MAX;
        }
        false
    }

    let mut budget = 100_000;
    if !search(&candidate, &mut mate, &options, &mut budget) {
        return Err(ChemError::Kekulization(
            "no alternating single/double assignment for the aromatic atoms".into(),
        ));
    }
    for (bi, &(a, b, _)) in bonds.iter().enumerate() {
        if kekule[bi] == 0 {
            kekule[bi] = if mate[a] == b && mate[b] == a { 2 } else { 1 };
        }
    }
    Ok(())
}

fn pi_contribution(g: &MolGraph, atom: usize) -> Option<u32> {
    let a = &g.atoms()[atom];
    let mut doubles = Vec::new();
    for nb in g.neighbors(atom) {
        match g.bonds()[nb.bond].kekule {
            3 => return None,
            2 => doubles.push(nb.atom),
            _ => {}
        }
    }
    let connections = g.degree(atom) + a.implicit_h as usize;
    let z = a.element.atomic_number();
    match doubles.as_slice() {
        [partner] => {
            let p = &g.atoms()[*partner];
            if p.ring_member {
                Some(1)
            } else if z == 6 && matches!(p.element.atomic_number(), 7 | 8 | 16) {
                Some(0)
            } else {
                None
            }
        }
        [] => match (z, a.formal_charge) {
            (6, -1) => Some(2),
            (6, 1) => Some(0),
            (7, 0) | (15, 0) if connections == 3 => Some(2),
            (7, -1) if connections == 2 => Some(2),
            (8, 0) | (16, 0) | (34, 0) if connections == 2 => Some(2),
            (5, 0) if connections == 3 => Some(0),
            _ => None,
        },
        _ => None,
    }
}

/// Re-derives aromatic flags on atoms and bonds from the Kekulé bond orders.
/// Idempotent: input aromatic flags are ignored.
pub fn perceive_aromaticity(mut g: MolGraph) -> MolGraph {
    for a in g.atoms_mut() {
        a.aromatic = false;
    }
    for b in g.bonds_mut() {
        b.order = BondOrder::from_kekule(b.kekule);
    }
    let mut aromatic_rings = Vec::new();
    for ring in g.rings() {
        let mut total = 0;
        let mut ok = true;
        for &a in ring {
            match pi_contribution(&g, a) {
                Some(e) => total += e,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && total % 4 == 2 {
            aromatic_rings.push(ring.clone());
        }
    }
    for ring in aromatic_rings {
        for k in 0..ring.len() {
            let a = ring[k];
            let b = ring[(k + 1) % ring.len()];
            g.atoms_mut()[a].aromatic = true;
            let bi = g.bond_between(a, b).expect("ring atoms are bonded");
            g.bonds_mut()[bi].order = BondOrder::Aromatic;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn aromatic_count(s: &str) -> usize {
        parse_smiles(s)
            .unwrap()
            .atoms()
            .iter()
            .filter(|a| a.aromatic)
            .count()
    }

    /// Independent Hückel count for a single ring, written from the textbook rule.
    fn huckel_oracle(pi: &[u32]) -> bool {
        let n: u32 = pi.iter().sum();
        n >= 2 && (n - 2).is_multiple_of(4)
    }

    #[test]
    fn benzene_kekule_and_aromatic_forms_agree() {
        assert!(huckel_oracle(&[1; 6]));
        assert_eq!(aromatic_count("C1=CC=CC=C1"), 6);
        assert_eq!(aromatic_count("c1ccccc1"), 6);
        let g = parse_smiles("c1ccccc1").unwrap();
        assert!(g.atoms().iter().all(|a| a.implicit_h == 1));
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn saturated_and_antiaromatic_rings() {
        assert_eq!(aromatic_count("C1CCCCC1"), 0);
        assert!(!huckel_oracle(&[1, 1, 1, 1]));
        assert_eq!(aromatic_count("C1=CC=C1"), 0);
        assert_eq!(aromatic_count("C1=CCC=C1"), 0);
        assert!(!huckel_oracle(&[1; 8]));
        assert_eq!(aromatic_count("C1=CC=CC=CC=C1"), 0);
    }

    #[test]
    fn heteroaromatics() {
        // pyridine: N gives one electron
        assert!(huckel_oracle(&[1, 1, 1, 1, 1, 1]));
        assert_eq!(aromatic_count("c1ccncc1"), 6);
        // pyrrole, furan, thiophene: heteroatom gives two
        assert!(huckel_oracle(&[2, 1, 1, 1, 1]));
        assert_eq!(aromatic_count("c1cc[nH]c1"), 5);
        assert_eq!(aromatic_count("c1ccoc1"), 5);
        assert_eq!(aromatic_count("c1ccsc1"), 5);
        assert_eq!(aromatic_count("C1=CNC=C1"), 5);
        // 2-pyridone: exocyclic C=O carbon gives zero
        assert!(huckel_oracle(&[0, 2, 1, 1, 1, 1]));
        assert_eq!(aromatic_count("O=C1C=CC=CN1"), 6);
        // naphthalene, per ring
        assert_eq!(aromatic_count("C1=CC2=CC=CC=C2C=C1"), 10);
        // tropylium cation
        assert_eq!(aromatic_count("[CH+]1C=CC=CC=C1"), 7);
    }

    #[test]
    fn perception_is_idempotent() {
        for s in ["c1ccc2[nH]ccc2c1", "O=C1C=CC(=O)C=C1", "c1ccc(-c2ccccc2)cc1"] {
            let g = parse_smiles(s).unwrap();
            let h = perceive_aromaticity(g.clone());
            let flags = |g: &MolGraph| {
                (
                    g.atoms().iter().map(|a| a.aromatic).collect::<Vec<_>>(),
                    g.bonds().iter().map(|b| b.order).collect::<Vec<_>>(),
                )
            };
            assert_eq!(flags(&g), flags(&h));
        }
        // quinone is not aromatic
        assert_eq!(aromatic_count("O=C1C=CC(=O)C=C1"), 0);
    }

    #[test]
    fn unkekulizable_input() {
        assert!(matches!(
            parse_smiles("c1cccc1"),
            Err(ChemError::Kekulization(_))
        ));
        assert!(parse_smiles("cc").is_ok());
        assert!(matches!(parse_smiles("c"), Err(ChemError::Kekulization(_))));
    }
}
