//! Synthetic task augmentation for multitask molecular property prediction:
//! boosted-tree teachers on topological descriptors produce dense auxiliary
//! targets for a multitask graph transformer.

pub mod chem;
pub mod descriptors;
pub mod gbt;
pub mod gt;
pub mod report;
pub mod pipeline;
