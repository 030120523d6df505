use super::aromaticity::{kekulize, perceive_aromaticity};
use super::rings::smallest_set_of_smallest_rings;
use super::{ChemError, Element, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub(crate) fn from_kekule(order: u8) -> BondOrder {
        match order {
            2 => BondOrder::Double,
            3 => BondOrder::Triple,
            _ => BondOrder::Single,
        }
    }

    /// Integer order with aromatic counted as 1 (the SMILES "sum" convention).
    pub(crate) fn localized(self) -> u32 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Contribution used by topological descriptors (aromatic = 1.5).
    pub fn conventional(self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub formal_charge: i8,
    pub aromatic: bool,
    pub implicit_h: u8,
    pub ring_member: bool,
}

impl Atom {
    pub fn is_heavy(&self) -> bool {
        self.element != Element::H
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
    /// Localized order (1, 2 or 3) from a Kekulé assignment; aromatic perception reads this.
    pub(crate) kekule: u8,
    pub ring_member: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }

    pub fn kekule_order(&self) -> u8 {
        self.kekule
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub atom: usize,
    pub bond: usize,
}

/// A hydrogen-suppressed molecular graph. Hydrogens live in `Atom::implicit_h`
/// unless they cannot be folded into a heavy atom (H2, hydride ions).
#[derive(Debug, Clone)]
pub struct MolGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<Neighbor>>,
    rings: Vec<Vec<usize>>,
}

impl MolGraph {
    pub(crate) fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<MolGraph> {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (bi, b) in bonds.iter().enumerate() {
            if b.begin == b.end {
                return Err(ChemError::InvalidGraph(format!("bond {bi} is a self loop")));
            }
            if b.begin >= atoms.len() || b.end >= atoms.len() {
                return Err(ChemError::InvalidGraph(format!("bond {bi} out of range")));
            }
            if adjacency[b.begin].iter().any(|n: &Neighbor| n.atom == b.end) {
                return Err(ChemError::InvalidGraph(format!(
                    "duplicate bond between atoms {} and {}",
                    b.begin, b.end
                )));
            }
            adjacency[b.begin].push(Neighbor {
                atom: b.end,
                bond: bi,
            });
            adjacency[b.end].push(Neighbor {
                atom: b.begin,
                bond: bi,
            });
        }
        let mut g = MolGraph {
            atoms,
            bonds,
            adjacency,
            rings: Vec::new(),
        };
        g.rings = smallest_set_of_smallest_rings(&g);
        let mut atom_in_ring = vec![false; g.atoms.len()];
        let mut bond_in_ring = vec![false; g.bonds.len()];
        for ring in &g.rings {
            for (k, &a) in ring.iter().enumerate() {
                atom_in_ring[a] = true;
                let next = ring[(k + 1) % ring.len()];
                if let Some(bi) = g.bond_between(a, next) {
                    bond_in_ring[bi] = true;
                }
            }
        }
        for (a, flag) in g.atoms.iter_mut().zip(atom_in_ring) {
            a.ring_member = flag;
        }
        for (b, flag) in g.bonds.iter_mut().zip(bond_in_ring) {
            b.ring_member = flag;
        }
        Ok(g)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub(crate) fn atoms_mut(&mut self) -> &mut [Atom] {
        &mut self.atoms
    }

    pub(crate) fn bonds_mut(&mut self) -> &mut [Bond] {
        &mut self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn neighbors(&self, atom: usize) -> &[Neighbor] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|n| n.atom == b).map(|n| n.bond)
    }

    /// Smallest set of smallest rings, each as a cyclic atom sequence.
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_heavy()).count()
    }

    /// Hydrogens counted both as implicit counts and as explicit H atoms.
    pub fn total_hydrogens(&self) -> usize {
        self.atoms
            .iter()
            .map(|a| a.implicit_h as usize + usize::from(a.element == Element::H))
            .sum()
    }

    /// Connected components as sorted atom lists, ordered by their lowest atom.
    pub fn fragments(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let a = comp[head];
                head += 1;
                for nb in &self.adjacency[a] {
                    if !seen[nb.atom] {
                        seen[nb.atom] = true;
                        comp.push(nb.atom);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Returns the same molecule with atom `i` moved to position `order[i]`.
    pub fn relabel(&self, order: &[usize]) -> MolGraph {
        assert_eq!(order.len(), self.atoms.len(), "permutation length mismatch");
        let mut atoms = vec![None; self.atoms.len()];
        for (old, &new) in order.iter().enumerate() {
            atoms[new] = Some(self.atoms[old].clone());
        }
        let atoms: Vec<Atom> = atoms
            .into_iter()
            .map(|a| a.expect("order is not a permutation"))
            .collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                begin: order[b.begin],
                end: order[b.end],
                ..b.clone()
            })
            .collect();
        MolGraph::from_parts(atoms, bonds).expect("relabeling preserves validity")
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RawAtom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Explicit hydrogen count for bracket atoms; `None` means implicit hydrogens apply.
    pub bracket_h: Option<u8>,
}

/// Incremental constructor for molecules; `build` assigns hydrogens and perceives
/// rings and aromaticity exactly as the SMILES parser does.
#[derive(Debug, Clone, Default)]
pub struct MolBuilder {
    pub(crate) atoms: Vec<RawAtom>,
    pub(crate) bonds: Vec<(usize, usize, BondOrder)>,
}

impl MolBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an atom whose hydrogens are implied by default valence.
    pub fn add_atom(&mut self, element: Element) -> usize {
        self.atoms.push(RawAtom {
            element,
            charge: 0,
            aromatic: false,
            bracket_h: None,
        });
        self.atoms.len() - 1
    }

    /// Adds an atom with an explicit hydrogen count and charge.
    pub fn add_explicit_atom(&mut self, element: Element, charge: i8, hydrogens: u8) -> usize {
        self.atoms.push(RawAtom {
            element,
            charge,
            aromatic: false,
            bracket_h: Some(hydrogens),
        });
        self.atoms.len() - 1
    }

    pub(crate) fn push_raw(&mut self, atom: RawAtom) -> usize {
        self.atoms.push(atom);
        self.atoms.len() - 1
    }

    pub fn add_bond(&mut self, a: usize, b: usize, order: BondOrder) {
        self.bonds.push((a, b, order));
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn has_bond(&self, a: usize, b: usize) -> bool {
        self.bonds
            .iter()
            .any(|&(x, y, _)| (x == a && y == b) || (x == b && y == a))
    }

    pub fn build(self) -> Result<MolGraph> {
        let MolBuilder { atoms: raw, bonds } = self;
        let n = raw.len();
        let mut kekule: Vec<u8> = bonds
            .iter()
            .map(|&(_, _, o)| match o {
                BondOrder::Aromatic => 0,
                other => other.localized() as u8,
            })
            .collect();
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (bi, &(a, b, _)) in bonds.iter().enumerate() {
            if a >= n || b >= n || a == b {
                return Err(ChemError::InvalidGraph(format!("bad bond {a}-{b}")));
            }
            adjacency[a].push((b, bi));
            adjacency[b].push((a, bi));
        }

        kekulize(&raw, &bonds, &adjacency, &mut kekule)?;

        let mut hydrogens = vec![0u8; n];
        for (i, atom) in raw.iter().enumerate() {
            let used: u32 = adjacency[i].iter().map(|&(_, bi)| kekule[bi] as u32).sum();
            hydrogens[i] = match atom.bracket_h {
                Some(h) => h,
                None => {
                    let valence = atom.element.implied_valence(used).ok_or_else(|| {
                        ChemError::Valence {
                            atom: i,
                            message: format!(
                                "{} with bond order sum {used} exceeds every default valence",
                                atom.element
                            ),
                        }
                    })?;
                    (valence - used) as u8
                }
            };
        }

        // Fold neutral explicit hydrogens bonded to exactly one heavy atom.
        let foldable: Vec<bool> = (0..n)
            .map(|i| {
                raw[i].element == Element::H
                    && raw[i].charge == 0
                    && hydrogens[i] == 0
                    && adjacency[i].len() == 1
                    && raw[adjacency[i][0].0].element != Element::H
                    && kekule[adjacency[i][0].1] == 1
            })
            .collect();
        let mut new_index = vec![usize::MAX; n];
        let mut atoms = Vec::with_capacity(n);
        for i in 0..n {
            if foldable[i] {
                continue;
            }
            new_index[i] = atoms.len();
            atoms.push(Atom {
                element: raw[i].element,
                formal_charge: raw[i].charge,
                aromatic: false,
                implicit_h: hydrogens[i],
                ring_member: false,
            });
        }
        for i in 0..n {
            if foldable[i] {
                let heavy = new_index[adjacency[i][0].0];
                atoms[heavy].implicit_h += 1;
            }
        }
        let mut out_bonds = Vec::with_capacity(bonds.len());
        for (bi, &(a, b, _)) in bonds.iter().enumerate() {
            if foldable[a] || foldable[b] {
                continue;
            }
            out_bonds.push(Bond {
                begin: new_index[a],
                end: new_index[b],
                order: BondOrder::from_kekule(kekule[bi]),
                kekule: kekule[bi],
                ring_member: false,
            });
        }
        let g = MolGraph::from_parts(atoms, out_bonds)?;
        Ok(perceive_aromaticity(g))
    }
}
