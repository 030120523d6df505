mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use staug_core::chem::*;

#[test]
fn corpus_round_trips_to_a_fixed_point() {
    let corpus = common::smiles_corpus();
    assert!(corpus.len() >= 200);
    for (name, smi) in &corpus {
        let g = parse_smiles(smi).unwrap_or_else(|e| panic!("{name}: {e}"));
        let c1 = canonical_smiles(&g);
        let g2 = parse_smiles(&c1).unwrap_or_else(|e| panic!("{name}: reparse of {c1}: {e}"));
        assert_eq!(g2.atom_count(), g.atom_count(), "{name}");
        assert_eq!(g2.bonds().len(), g.bonds().len(), "{name}");
        assert_eq!(g2.total_hydrogens(), g.total_hydrogens(), "{name}");
        assert_eq!(canonical_smiles(&g2), c1, "{name}");
    }
}

#[test]
fn canonical_form_ignores_atom_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (name, smi) in common::permutation_subset() {
        let g = parse_smiles(&smi).unwrap();
        let reference = canonical_smiles(&g);
        let mut order: Vec<usize> = (0..g.atom_count()).collect();
        for _ in 0..100 {
            order.shuffle(&mut rng);
            assert_eq!(canonical_smiles(&g.relabel(&order)), reference, "{name}");
        }
    }
}

#[test]
fn equivalent_spellings_share_a_canonical_form() {
    let pairs = [
        ("c1ccccc1", "C1=CC=CC=C1"),
        ("OCC", "CCO"),
        ("C(C)(C)O", "CC(C)O"),
        ("c1ccncc1", "n1ccccc1"),
        ("Oc1ccccc1", "c1ccc(O)cc1"),
        ("C%10CCCCC%10", "C1CCCCC1"),
        ("[CH3][CH2][OH]", "CCO"),
        ("CC(=O)O", "OC(C)=O"),
        ("[Na+].CC(=O)[O-]", "CC(=O)[O-].[Na+]"),
    ];
    for (a, b) in pairs {
        let (ca, cb) = (canonical_smiles(&parse_smiles(a).unwrap()), canonical_smiles(&parse_smiles(b).unwrap()));
        assert_eq!(ca, cb, "{a} vs {b}");
    }
    let distinct = ["CCO", "COC", "c1ccncc1", "c1cnccc1N", "CC=O", "C=CO"];
    let forms: std::collections::BTreeSet<String> =
        distinct.iter().map(|s| canonical_smiles(&parse_smiles(s).unwrap())).collect();
    assert_eq!(forms.len(), distinct.len(), "{forms:?}");
}

#[test]
fn filters_reject_single_atoms_and_metals() {
    for smi in ["C", "O", "N", "[NH4+]", "Cl", "[Na+]"] {
        let g = parse_smiles(smi).unwrap();
        assert_eq!(rejection_reason(&g, false), Some(Rejection::SingleHeavyAtom), "{smi}");
        assert_eq!(rejection_reason(&g, true), Some(Rejection::SingleHeavyAtom), "{smi}");
    }
    for smi in ["CC(=O)[O-].[Na+]", "[K+].[Cl-]", "CC[Sn](CC)(CC)CC", "[Fe+2].[O-]C(=O)C"] {
        let g = parse_smiles(smi).unwrap();
        assert_eq!(rejection_reason(&g, false), Some(Rejection::MetalOrOther), "{smi}");
        assert!(admit_molecule(&g, true), "{smi}");
    }
    for (name, smi) in common::smiles_corpus() {
        let g = parse_smiles(&smi).unwrap();
        let organic = g.atoms().iter().all(|a| a.element.is_organic());
        let expected = g.heavy_atom_count() >= 2 && organic;
        assert_eq!(admit_molecule(&g, false), expected, "{name}");
    }
}

#[test]
fn malformed_smiles_are_errors() {
    for bad in ["", "C1CC", "C(C", "CC)", "[Xx]", "C==C", "c1cccc1", "C%1", "[C", "CC(=)C", "1CC"] {
        assert!(parse_smiles(bad).is_err(), "{bad:?} parsed");
    }
    for unsupported in ["[2H]C", "[13CH4]", "C*"] {
        assert!(matches!(parse_smiles(unsupported), Err(ChemError::Unsupported(_))), "{unsupported}");
    }
}

#[test]
fn aromatic_and_kekule_inputs_agree_on_hydrogens() {
    for (arom, kek) in [
        ("c1ccccc1", "C1=CC=CC=C1"),
        ("c1ccc2ccccc2c1", "C1=CC=C2C=CC=CC2=C1"),
        ("c1cc[nH]c1", "C1=CNC=C1"),
        ("c1ccoc1", "C1=COC=C1"),
    ] {
        let (a, k) = (parse_smiles(arom).unwrap(), parse_smiles(kek).unwrap());
        assert_eq!(a.total_hydrogens(), k.total_hydrogens(), "{arom}");
        assert_eq!(canonical_smiles(&a), canonical_smiles(&k), "{arom}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_chains_round_trip(atoms in prop::collection::vec(0usize..5, 2..14), closures in 0usize..3) {
        let syms = ["C", "N", "O", "S", "Cl"];
        let mut smi = String::new();
        for (i, &a) in atoms.iter().enumerate() {
            // Halogens only terminate the chain.
            let sym = if a == 4 && i + 1 < atoms.len() { "C" } else { syms[a] };
            smi.push_str(sym);
            if i == 0 && closures > 0 && atoms.len() >= 5 && sym == "C" && atoms[atoms.len() - 1] == 0 {
                smi.push('1');
            }
        }
        if smi.starts_with("C1") {
            smi.push('1');
        }
        let g = parse_smiles(&smi).unwrap();
        let c = canonical_smiles(&g);
        prop_assert_eq!(canonical_smiles(&parse_smiles(&c).unwrap()), c);
    }
}
