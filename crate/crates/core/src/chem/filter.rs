use super::MolGraph;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    SingleHeavyAtom,
    MetalOrOther,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::SingleHeavyAtom => "single-heavy-atom",
            Rejection::MetalOrOther => "metal-or-other-element",
        })
    }
}

/// Why a molecule fails the dataset filters, if it does.
pub fn rejection_reason(g: &MolGraph, allow_metals: bool) -> Option<Rejection> {
    if g.heavy_atom_count() < 2 {
        return Some(Rejection::SingleHeavyAtom);
    }
    if !allow_metals && g.atoms().iter().any(|a| !a.element.is_organic()) {
        return Some(Rejection::MetalOrOther);
    }
    None
}

/// Keeps molecules with at least two heavy atoms and, unless `allow_metals`,
/// only elements from the supported organic set.
pub fn admit_molecule(g: &MolGraph, allow_metals: bool) -> bool {
    rejection_reason(g, allow_metals).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    #[test]
    fn admission_rules() {
        let methane = parse_smiles("C").unwrap();
        assert!(!admit_molecule(&methane, false));
        assert!(!admit_molecule(&methane, true));
        assert_eq!(
            rejection_reason(&methane, false),
            Some(Rejection::SingleHeavyAtom)
        );
        let salt = parse_smiles("[Na+].[Cl-]").unwrap();
        assert!(!admit_molecule(&salt, false));
        assert!(admit_molecule(&salt, true));
        assert!(admit_molecule(&parse_smiles("CCO").unwrap(), false));
        assert!(admit_molecule(&parse_smiles("C[Si](C)(C)C").unwrap(), false));
        assert!(!admit_molecule(&parse_smiles("[H][H]").unwrap(), false));
    }
}
