//! A pinned set of 2D molecular descriptors and the feature-matrix
//! preprocessing applied before boosted-tree training.
//!
//! Topological indices use the hydrogen-suppressed graph; counts, weights,
//! volumes and information content include hydrogens. Values that are not
//! defined for a molecule are `NaN` (missing) and are never imputed.

mod info;
mod matrix;
pub mod tables;
pub mod topology;

pub use info::information_content;
pub use matrix::{
    arcsinh_pretransform, build_feature_matrix, cache_key, cache_path, cached_feature_matrix,
    pairwise_pearson, prune_features, select_columns, FeatureMatrix, MatrixError,
    DEFAULT_ARCSINH_THRESHOLD, DEFAULT_CORR_MAX, DEFAULT_VAR_EPS, MIN_PAIRWISE_OVERLAP,
};

use crate::chem::{BondOrder, Element, MolGraph};
use topology as topo;

pub const SCHEMA_ID: &str = "staug-desc-v1";

/// Column names in schema order.
pub const DESCRIPTOR_NAMES: [&str; 69] = [
    // AtomCount
    "nAtom", "nHeavyAtom", "nH", "nC", "nN", "nO", "nS", "nP", "nF", "nCl", "nBr", "nI", "nX",
    "nHetero", "nAromAtom",
    // BondCount
    "nBonds", "nBondsS", "nBondsD", "nBondsT", "nBondsA", "nBondsM", "nRot",
    // RingCount
    "nRing", "nAromRing", "nHeteroRing", "n5Ring", "n6Ring",
    // Weight
    "MW", "AMW",
    // WienerIndex
    "WPath", "WPol",
    // ZagrebIndex
    "Zagreb1", "Zagreb2",
    // BalabanJ, EccentricConnectivityIndex
    "BalabanJ", "ECIndex",
    // Chi (simple path)
    "Xp-0d", "Xp-1d", "Xp-2d", "Xp-3d",
    // KappaShapeIndex
    "Kier1", "Kier2", "Kier3",
    // HydrogenBond
    "nHBDon", "nHBAcc",
    // TopoPSA, McGowanVolume
    "TopoPSA(NO)", "VMcGowan",
    // Autocorrelation (Moreau-Broto)
    "ATSm1", "ATSm2", "ATSm3", "ATSm4", "ATSd1", "ATSd2", "ATSd3", "ATSd4",
    // InformationContent
    "IC0", "IC1", "IC2", "TIC0", "TIC1", "TIC2",
    // Flexibility
    "FlexibilityIndex",
    // Topological extras
    "Diameter", "Radius", "PetitjeanIndex", "ABC", "MPC2", "MPC3", "MPC4", "FCSP3",
];

pub fn schema_len() -> usize {
    DESCRIPTOR_NAMES.len()
}

/// One molecule's descriptor values in schema order; `NaN` marks missing.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector {
    pub values: Vec<f64>,
    pub schema_id: &'static str,
}

impl DescriptorVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        DESCRIPTOR_NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| self.values[i])
    }
}

/// Adjacency list of the heavy-atom graph (explicit H atoms excluded).
pub fn heavy_adjacency(g: &MolGraph) -> (Vec<usize>, Vec<Vec<usize>>) {
    let heavy: Vec<usize> = (0..g.atom_count())
        .filter(|&i| g.atoms()[i].is_heavy())
        .collect();
    let mut index = vec![usize::MAX; g.atom_count()];
    for (k, &i) in heavy.iter().enumerate() {
        index[i] = k;
    }
    let adj = heavy
        .iter()
        .map(|&i| {
            g.neighbors(i)
                .iter()
                .filter(|nb| index[nb.atom] != usize::MAX)
                .map(|nb| index[nb.atom])
                .collect()
        })
        .collect();
    (heavy, adj)
}

fn is_rotatable(g: &MolGraph, bond: usize) -> bool {
    let b = &g.bonds()[bond];
    if b.order != BondOrder::Single || b.ring_member {
        return false;
    }
    [b.begin, b.end].iter().all(|&a| {
        g.atoms()[a].is_heavy()
            && g.neighbors(a).iter().filter(|nb| g.atoms()[nb.atom].is_heavy()).count() >= 2
            && !g
                .neighbors(a)
                .iter()
                .any(|nb| g.bonds()[nb.bond].order == BondOrder::Triple)
    })
}

fn count_element(g: &MolGraph, e: Element) -> f64 {
    g.atoms().iter().filter(|a| a.element == e).count() as f64
}

pub fn compute_descriptors(g: &MolGraph) -> DescriptorVector {
    let nan = f64::NAN;
    let atoms = g.atoms();
    let n_h = g.total_hydrogens() as f64;
    let n_heavy = g.heavy_atom_count() as f64;
    let n_atom = n_heavy + n_h;
    let n_c = count_element(g, Element::C);
    let n_x: f64 = atoms.iter().filter(|a| a.element.is_halogen()).count() as f64;
    let n_hetero = atoms
        .iter()
        .filter(|a| a.is_heavy() && a.element != Element::C)
        .count() as f64;
    let n_arom_atom = atoms.iter().filter(|a| a.aromatic).count() as f64;

    let heavy_bonds: Vec<usize> = (0..g.bonds().len())
        .filter(|&b| {
            let b = &g.bonds()[b];
            atoms[b.begin].is_heavy() && atoms[b.end].is_heavy()
        })
        .collect();
    let count_order =
        |o: BondOrder| heavy_bonds.iter().filter(|&&b| g.bonds()[b].order == o).count() as f64;
    let n_single = count_order(BondOrder::Single);
    let n_double = count_order(BondOrder::Double);
    let n_triple = count_order(BondOrder::Triple);
    let n_arom_bond = count_order(BondOrder::Aromatic);
    let n_rot = heavy_bonds.iter().filter(|&&b| is_rotatable(g, b)).count() as f64;

    let rings = g.rings();
    let n_ring = rings.len() as f64;
    let n_arom_ring = rings
        .iter()
        .filter(|r| r.iter().all(|&a| atoms[a].aromatic))
        .count() as f64;
    let n_hetero_ring = rings
        .iter()
        .filter(|r| r.iter().any(|&a| atoms[a].element != Element::C))
        .count() as f64;
    let n_ring5 = rings.iter().filter(|r| r.len() == 5).count() as f64;
    let n_ring6 = rings.iter().filter(|r| r.len() == 6).count() as f64;

    let mw: f64 = atoms
        .iter()
        .map(|a| a.element.mass() + a.implicit_h as f64 * Element::H.mass())
        .sum();

    let (heavy, adj) = heavy_adjacency(g);
    let dist = topo::distance_matrix(&adj);
    let ecc = topo::eccentricities(&dist);
    let diameter = ecc.iter().copied().max().unwrap_or(0) as f64;
    let radius = ecc.iter().copied().min().unwrap_or(0) as f64;
    let petitjean = if diameter > 0.0 {
        (diameter - radius) / diameter
    } else {
        nan
    };
    let kappa = topo::kappa_shape(&adj);

    let mass: Vec<f64> = heavy.iter().map(|&i| atoms[i].element.mass()).collect();
    let degree: Vec<f64> = adj.iter().map(|nb| nb.len() as f64).collect();
    let ic = information_content(g, 2);

    let sp3_carbons = (0..g.atom_count())
        .filter(|&i| {
            atoms[i].element == Element::C
                && !atoms[i].aromatic
                && g.neighbors(i)
                    .iter()
                    .all(|nb| g.bonds()[nb.bond].order == BondOrder::Single)
        })
        .count() as f64;

    let values = vec![
        n_atom,
        n_heavy,
        n_h,
        n_c,
        count_element(g, Element::N),
        count_element(g, Element::O),
        count_element(g, Element::S),
        count_element(g, Element::P),
        count_element(g, Element::F),
        count_element(g, Element::CL),
        count_element(g, Element::BR),
        count_element(g, Element::I),
        n_x,
        n_hetero,
        n_arom_atom,
        heavy_bonds.len() as f64,
        n_single,
        n_double,
        n_triple,
        n_arom_bond,
        n_double + n_triple + n_arom_bond,
        n_rot,
        n_ring,
        n_arom_ring,
        n_hetero_ring,
        n_ring5,
        n_ring6,
        mw,
        mw / n_atom,
        topo::wiener_index(&dist),
        topo::wiener_polarity(&dist),
        topo::zagreb_m1(&adj),
        topo::zagreb_m2(&adj),
        topo::balaban_j(&adj, &dist).unwrap_or(nan),
        topo::eccentric_connectivity(&adj, &dist),
        topo::chi_path(&adj, 0),
        topo::chi_path(&adj, 1),
        topo::chi_path(&adj, 2),
        topo::chi_path(&adj, 3),
        kappa[0].unwrap_or(nan),
        kappa[1].unwrap_or(nan),
        kappa[2].unwrap_or(nan),
        tables::hbond_donors(g) as f64,
        tables::hbond_acceptors(g) as f64,
        tables::topological_psa(g),
        tables::molecule_mcgowan_volume(g).unwrap_or(nan),
        topo::moreau_broto(&dist, &mass, 1),
        topo::moreau_broto(&dist, &mass, 2),
        topo::moreau_broto(&dist, &mass, 3),
        topo::moreau_broto(&dist, &mass, 4),
        topo::moreau_broto(&dist, &degree, 1),
        topo::moreau_broto(&dist, &degree, 2),
        topo::moreau_broto(&dist, &degree, 3),
        topo::moreau_broto(&dist, &degree, 4),
        ic[0],
        ic[1],
        ic[2],
        ic[0] * n_atom,
        ic[1] * n_atom,
        ic[2] * n_atom,
        if n_heavy > 0.0 { n_rot / n_heavy } else { nan },
        diameter,
        radius,
        petitjean,
        topo::abc_index(&adj),
        topo::path_count(&adj, 2) as f64,
        topo::path_count(&adj, 3) as f64,
        topo::path_count(&adj, 4) as f64,
        if n_c > 0.0 { sp3_carbons / n_c } else { nan },
    ];
    debug_assert_eq!(values.len(), DESCRIPTOR_NAMES.len());
    DescriptorVector {
        values,
        schema_id: SCHEMA_ID,
    }
}
