mod common;

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use staug_core::chem::{parse_smiles, BondOrder, Element, MolBuilder, MolGraph};
use staug_core::descriptors::topology as topo;
use staug_core::descriptors::*;

const TOL: f64 = 1e-9;

/// Random connected carbon skeleton with every degree at most 4.
fn random_skeleton(rng: &mut ChaCha8Rng, n: usize) -> (MolGraph, Vec<Vec<usize>>) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 1..n {
        let open: Vec<usize> = (0..v).filter(|&u| adj[u].len() < 4).collect();
        let u = *open.choose(rng).unwrap();
        adj[u].push(v);
        adj[v].push(u);
    }
    for _ in 0..rng.gen_range(0..=n / 3) {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !adj[a].contains(&b) && adj[a].len() < 4 && adj[b].len() < 4 {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut mb = MolBuilder::new();
    for _ in 0..n {
        mb.add_atom(Element::C);
    }
    for (a, nbrs) in adj.iter().enumerate() {
        for &b in nbrs.iter().filter(|&&b| b > a) {
            mb.add_bond(a, b, BondOrder::Single);
        }
    }
    (mb.build().unwrap(), adj)
}

fn usize_distances(d: &[Vec<f64>]) -> Vec<Vec<usize>> {
    d.iter().map(|r| r.iter().map(|&v| v as usize).collect()).collect()
}

#[test]
fn topological_indices_match_brute_force_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for case in 0..50 {
        let n = rng.gen_range(2..=15);
        let extra = rng.gen_range(0..=n);
        let adj = random_connected_graph(&mut rng, n, extra);
        let fw = floyd_warshall(&adj);
        let dist = topo::distance_matrix(&adj);
        assert_eq!(dist, usize_distances(&fw), "case {case}");
        let (m1, m2) = oracle_zagreb(&adj);
        assert!(rel_close(topo::wiener_index(&dist), oracle_wiener(&fw), TOL), "case {case}");
        assert!(rel_close(topo::zagreb_m1(&adj), m1, TOL), "case {case}");
        assert!(rel_close(topo::zagreb_m2(&adj), m2, TOL), "case {case}");
        assert!(rel_close(topo::balaban_j(&adj, &dist).unwrap(), oracle_balaban(&adj, &fw), TOL), "case {case}");
        assert!(
            rel_close(topo::eccentric_connectivity(&adj, &dist), oracle_eccentric_connectivity(&adj, &fw), TOL),
            "case {case}"
        );
    }
}

#[test]
fn molecule_descriptors_match_brute_force_on_random_skeletons() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for case in 0..50 {
        let n = rng.gen_range(2..=15);
        let (g, adj) = random_skeleton(&mut rng, n);
        let d = compute_descriptors(&g);
        let fw = floyd_warshall(&adj);
        let (m1, m2) = oracle_zagreb(&adj);
        let check = |name: &str, want: f64| {
            let got = d.get(name).unwrap();
            assert!(rel_close(got, want, TOL), "case {case} {name}: {got} vs {want}");
        };
        check("WPath", oracle_wiener(&fw));
        check("Zagreb1", m1);
        check("Zagreb2", m2);
        check("BalabanJ", oracle_balaban(&adj, &fw));
        check("ECIndex", oracle_eccentric_connectivity(&adj, &fw));
        check("nHeavyAtom", n as f64);
    }
}

#[test]
fn propane_reference_values() {
    let d = compute_descriptors(&parse_smiles("CCC").unwrap());
    assert_eq!(d.get("WPath"), Some(4.0));
    assert_eq!(d.get("Zagreb1"), Some(6.0));
    assert!(rel_close(d.get("BalabanJ").unwrap(), 4.0 / 6f64.sqrt(), 1e-12));
    assert_eq!(d.get("nAtom"), Some(11.0));
    assert_eq!(d.values.len(), schema_len());
    assert_eq!(d.schema_id, SCHEMA_ID);
}

#[test]
fn descriptors_ignore_atom_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for (name, smi) in smiles_corpus().iter().step_by(5) {
        let g = parse_smiles(smi).unwrap();
        let base = compute_descriptors(&g);
        let mut order: Vec<usize> = (0..g.atom_count()).collect();
        for _ in 0..3 {
            order.shuffle(&mut rng);
            let moved = compute_descriptors(&g.relabel(&order));
            for (i, (a, b)) in base.values.iter().zip(&moved.values).enumerate() {
                let same = (a.is_nan() && b.is_nan()) || rel_close(*a, *b, 1e-9) || (a - b).abs() < 1e-12;
                assert!(same, "{name} {}: {a} vs {b}", DESCRIPTOR_NAMES[i]);
            }
        }
    }
}

#[test]
fn feature_matrix_rows_follow_input_order() {
    let mols: Vec<MolGraph> = ["CCO", "c1ccccc1", "CC(=O)O"].iter().map(|s| parse_smiles(s).unwrap()).collect();
    let m = build_feature_matrix(&mols);
    assert_eq!((m.rows, m.cols), (3, schema_len()));
    for (r, g) in mols.iter().enumerate() {
        let d = compute_descriptors(g);
        for c in 0..m.cols {
            let (a, b) = (m.get(r, c), d.values[c]);
            assert!(a == b || (a.is_nan() && b.is_nan()));
        }
    }
}

fn uninformative(col: &[f64], var_eps: f64) -> bool {
    let obs: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
    if obs.len() < 2 || obs.iter().all(|v| *v == obs[0]) {
        return true;
    }
    let mean = obs.iter().sum::<f64>() / obs.len() as f64;
    obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (obs.len() as f64) < var_eps
}

fn matrix_strategy() -> impl Strategy<Value = FeatureMatrix> {
    (3usize..25, 1usize..6).prop_flat_map(|(rows, cols)| {
        prop::collection::vec(
            prop_oneof![8 => -1e4f64..1e4, 1 => Just(f64::NAN), 1 => Just(2.0)],
            rows * cols,
        )
        .prop_map(move |data| FeatureMatrix::new(rows, (0..cols).map(|c| format!("f{c}")).collect(), data))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn arcsinh_is_columnwise_and_monotone(m in matrix_strategy(), threshold in 1.0f64..500.0) {
        let t = arcsinh_pretransform(&m, threshold);
        for c in 0..m.cols {
            let col = m.column(c);
            let max_abs = col.iter().filter(|v| !v.is_nan()).fold(0.0f64, |a, v| a.max(v.abs()));
            prop_assert_eq!(t.arcsinh_applied[c], max_abs > threshold);
            for r in 0..m.rows {
                let (x, y) = (m.get(r, c), t.get(r, c));
                if x.is_nan() {
                    prop_assert!(y.is_nan());
                } else if t.arcsinh_applied[c] {
                    prop_assert!((y - x.asinh()).abs() <= 1e-12 * y.abs().max(1.0));
                } else {
                    prop_assert_eq!(x, y);
                }
            }
            for a in 0..m.rows {
                for b in 0..m.rows {
                    let (xa, xb) = (m.get(a, c), m.get(b, c));
                    if !xa.is_nan() && !xb.is_nan() && xa < xb {
                        prop_assert!(t.get(a, c) <= t.get(b, c));
                    }
                }
            }
        }
    }

    #[test]
    fn pruned_columns_are_varied_and_decorrelated(m in matrix_strategy(), corr_max in 0.5f64..0.99) {
        match prune_features(&m, 1e-8, corr_max) {
            Err(MatrixError::EmptyResult) => {
                for c in 0..m.cols {
                    prop_assert!(uninformative(&m.column(c), 1e-8));
                }
            }
            Err(e) => prop_assert!(false, "{e}"),
            Ok(p) => {
                prop_assert_eq!(p.rows, m.rows);
                for a in 0..p.cols {
                    let ca = p.column(a);
                    let obs: Vec<f64> = ca.iter().copied().filter(|v| !v.is_nan()).collect();
                    prop_assert!(obs.iter().any(|v| *v != obs[0]));
                    for b in a + 1..p.cols {
                        if let Some(r) = pairwise_pearson(&ca, &p.column(b)) {
                            prop_assert!(r.abs() <= corr_max);
                        }
                    }
                }
                let again = prune_features(&p, 1e-8, corr_max).unwrap();
                prop_assert_eq!(again.cols, p.cols);
            }
        }
    }

    #[test]
    fn pearson_is_symmetric_and_bounded(a in prop::collection::vec(-50f64..50.0, 12), b in prop::collection::vec(-50f64..50.0, 12)) {
        let (ab, ba) = (pairwise_pearson(&a, &b), pairwise_pearson(&b, &a));
        prop_assert_eq!(ab, ba);
        if let Some(r) = ab {
            prop_assert!((-1.0..=1.0).contains(&r));
        }
        let scaled: Vec<f64> = a.iter().map(|v| 3.0 * v + 1.0).collect();
        if let Some(r) = pairwise_pearson(&a, &scaled) {
            prop_assert!((r - 1.0).abs() < 1e-9);
        }
    }
}
