//! Additive contribution tables: topological polar surface area (Ertl N/O
//! fragment values), McGowan characteristic volumes and H-bond counting rules.

use crate::chem::{BondOrder, Element, MolGraph};

/// McGowan atomic volume contribution in cm³/mol.
pub fn mcgowan_atom_volume(e: Element) -> Option<f64> {
    Some(match e.atomic_number() {
        1 => 8.71,
        5 => 18.32,
        6 => 16.35,
        7 => 14.39,
        8 => 12.43,
        9 => 10.48,
        14 => 26.83,
        15 => 24.87,
        16 => 22.91,
        17 => 20.95,
        35 => 26.21,
        53 => 34.53,
        _ => return None,
    })
}

/// Every bond, whatever its order, removes this volume.
pub const MCGOWAN_BOND_VOLUME: f64 = 6.56;

/// McGowan characteristic volume in units of 100 cm³/mol.
pub fn mcgowan_volume(
    elements: impl IntoIterator<Item = Element>,
    hydrogens: usize,
    bonds: usize,
) -> Option<f64> {
    let mut total = hydrogens as f64 * mcgowan_atom_volume(Element::H)?;
    for e in elements {
        total += mcgowan_atom_volume(e)?;
    }
    Some((total - MCGOWAN_BOND_VOLUME * bonds as f64) / 100.0)
}

pub fn molecule_mcgowan_volume(g: &MolGraph) -> Option<f64> {
    let h: usize = g.atoms().iter().map(|a| a.implicit_h as usize).sum();
    mcgowan_volume(
        g.atoms().iter().map(|a| a.element),
        h,
        g.bonds().len() + h,
    )
}

#[derive(Default)]
struct BondTally {
    single: u32,
    double: u32,
    triple: u32,
    aromatic: u32,
}

fn tally(g: &MolGraph, atom: usize) -> BondTally {
    let mut t = BondTally::default();
    for nb in g.neighbors(atom) {
        match g.bonds()[nb.bond].order {
            BondOrder::Single => t.single += 1,
            BondOrder::Double => t.double += 1,
            BondOrder::Triple => t.triple += 1,
            BondOrder::Aromatic => t.aromatic += 1,
        }
    }
    t
}

fn in_three_ring(g: &MolGraph, atom: usize) -> bool {
    g.rings().iter().any(|r| r.len() == 3 && r.contains(&atom))
}

fn nitrogen_psa(g: &MolGraph, atom: usize) -> f64 {
    let a = &g.atoms()[atom];
    let t = tally(g, atom);
    let (h, q, nbrs) = (a.implicit_h, a.formal_charge, g.degree(atom));
    let ring3 = in_three_ring(g, atom);
    let value = if !a.aromatic {
        match nbrs {
            1 => match (h, q) {
                (0, 0) if t.triple == 1 => Some(23.79),
                (1, 0) if t.double == 1 => Some(23.85),
                (2, 0) if t.single == 1 => Some(26.02),
                (2, 1) if t.double == 1 => Some(25.59),
                (3, 1) if t.single == 1 => Some(27.64),
                _ => None,
            },
            2 => match (h, q) {
                (0, 0) if t.single == 1 && t.double == 1 => Some(12.36),
                (0, 0) if t.triple == 1 && t.double == 1 => Some(13.60),
                (1, 0) if t.single == 2 && ring3 => Some(21.94),
                (1, 0) if t.single == 2 => Some(12.03),
                (0, 1) if t.triple == 1 && t.single == 1 => Some(4.36),
                (1, 1) if t.double == 1 && t.single == 1 => Some(13.97),
                (2, 1) if t.single == 2 => Some(16.61),
                _ => None,
            },
            3 => match (h, q) {
                (0, 0) if t.single == 3 && ring3 => Some(3.01),
                (0, 0) if t.single == 3 => Some(3.24),
                (0, 0) if t.single == 1 && t.double == 2 => Some(11.68),
                (0, 1) if t.single == 2 && t.double == 1 => Some(3.01),
                (1, 1) if t.single == 3 => Some(4.44),
                _ => None,
            },
            4 => match (h, q) {
                (0, 1) if t.single == 4 => Some(0.0),
                _ => None,
            },
            _ => None,
        }
    } else {
        match nbrs {
            2 => match (h, q) {
                (0, 0) if t.aromatic == 2 => Some(12.89),
                (1, 0) if t.aromatic == 2 => Some(15.79),
                (1, 1) if t.aromatic == 2 => Some(14.14),
                _ => None,
            },
            3 => match (h, q) {
                (0, 0) if t.aromatic == 3 => Some(4.41),
                (0, 0) if t.single == 1 && t.aromatic == 2 => Some(4.93),
                (0, 0) if t.double == 1 && t.aromatic == 2 => Some(8.39),
                (0, 1) if t.aromatic == 3 => Some(4.10),
                (0, 1) if t.single == 1 && t.aromatic == 2 => Some(3.88),
                _ => None,
            },
            _ => None,
        }
    };
    value.unwrap_or_else(|| (30.5 - nbrs as f64 * 8.2 + h as f64 * 1.5).max(0.0))
}

fn oxygen_psa(g: &MolGraph, atom: usize) -> f64 {
    let a = &g.atoms()[atom];
    let t = tally(g, atom);
    let (h, q, nbrs) = (a.implicit_h, a.formal_charge, g.degree(atom));
    let value = if !a.aromatic {
        match (nbrs, h, q) {
            (1, 0, 0) if t.double == 1 => Some(17.07),
            (1, 1, 0) if t.single == 1 => Some(20.23),
            (1, 0, -1) if t.single == 1 => Some(23.06),
            (2, 0, 0) if t.single == 2 && in_three_ring(g, atom) => Some(12.53),
            (2, 0, 0) if t.single == 2 => Some(9.23),
            _ => None,
        }
    } else {
        match (nbrs, h, q) {
            (2, 0, 0) if t.aromatic == 2 => Some(13.14),
            _ => None,
        }
    };
    value.unwrap_or_else(|| (28.5 - nbrs as f64 * 8.6 + h as f64 * 1.5).max(0.0))
}

/// Topological polar surface area from N and O contributions only.
pub fn topological_psa(g: &MolGraph) -> f64 {
    (0..g.atom_count())
        .map(|i| match g.atoms()[i].element.atomic_number() {
            7 => nitrogen_psa(g, i),
            8 => oxygen_psa(g, i),
            _ => 0.0,
        })
        .sum()
}

/// N or O carrying at least one hydrogen.
pub fn hbond_donors(g: &MolGraph) -> usize {
    g.atoms()
        .iter()
        .filter(|a| matches!(a.element.atomic_number(), 7 | 8) && a.implicit_h > 0)
        .count()
}

/// Every O, plus N that is not cationic and not pyrrole-type.
pub fn hbond_acceptors(g: &MolGraph) -> usize {
    (0..g.atom_count())
        .filter(|&i| {
            let a = &g.atoms()[i];
            match a.element.atomic_number() {
                8 => true,
                7 => {
                    let pyrrole_like = a.aromatic && (a.implicit_h > 0 || g.degree(i) == 3);
                    a.formal_charge <= 0 && !pyrrole_like
                }
                _ => false,
            }
        })
        .count()
}
