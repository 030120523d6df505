//! Molecular graphs: SMILES parsing, ring and aromaticity perception,
//! canonical SMILES and dataset admission filters.

mod aromaticity;
mod canon;
mod element;
mod filter;
mod graph;
mod rings;
mod smiles;

pub use aromaticity::perceive_aromaticity;
pub use canon::{canonical_ranks, canonical_smiles};
pub use element::Element;
pub use filter::{admit_molecule, rejection_reason, Rejection};
pub use graph::{Atom, Bond, BondOrder, MolBuilder, MolGraph, Neighbor};
pub use smiles::parse_smiles;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("valence error on atom {atom}: {message}")]
    Valence { atom: usize, message: String },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("kekulization failed: {0}")]
    Kekulization(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
}

pub type Result<T> = std::result::Result<T, ChemError>;
