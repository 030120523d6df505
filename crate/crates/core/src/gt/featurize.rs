use crate::chem::{Element, MolGraph};

/// Element slots of the one-hot block; anything else goes to the final "other" slot.
pub const ELEMENT_SLOTS: [Element; 11] = [
    Element::B,
    Element::C,
    Element::N,
    Element::O,
    Element::F,
    Element::SI,
    Element::P,
    Element::S,
    Element::CL,
    Element::BR,
    Element::I,
];
const N_ELEMENT: usize = ELEMENT_SLOTS.len() + 1;
const N_DEGREE: usize = 6;
const N_HYDROGEN: usize = 5;
const N_CHARGE: usize = 5;

/// Per-node feature width: element (12), heavy degree 0-5 (6), implicit H 0-4
/// (5), formal charge -2..+2 (5), aromatic (1), ring member (1).
pub const NODE_FEATURES: usize = N_ELEMENT + N_DEGREE + N_HYDROGEN + N_CHARGE + 2;

/// One molecule as transformer input: heavy atoms only.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub n_nodes: usize,
    /// Row-major `n_nodes × NODE_FEATURES`.
    pub features: Vec<f64>,
    /// Attention neighborhood of each node: itself plus bonded heavy atoms, ascending.
    pub neighbors: Vec<Vec<usize>>,
}

pub fn featurize_graph(g: &MolGraph) -> GraphInput {
    let heavy: Vec<usize> = (0..g.atom_count()).filter(|&i| g.atoms()[i].is_heavy()).collect();
    let mut index = vec![usize::MAX; g.atom_count()];
    for (k, &i) in heavy.iter().enumerate() {
        index[i] = k;
    }
    let mut features = vec![0.0; heavy.len() * NODE_FEATURES];
    let mut neighbors = Vec::with_capacity(heavy.len());
    for (k, &i) in heavy.iter().enumerate() {
        let atom = &g.atoms()[i];
        let row = &mut features[k * NODE_FEATURES..(k + 1) * NODE_FEATURES];
        let element = ELEMENT_SLOTS
            .iter()
            .position(|&e| e == atom.element)
            .unwrap_or(N_ELEMENT - 1);
        row[element] = 1.0;
        let mut nb: Vec<usize> = g
            .neighbors(i)
            .iter()
            .map(|n| index[n.atom])
            .filter(|&j| j != usize::MAX)
            .collect();
        let mut offset = N_ELEMENT;
        row[offset + nb.len().min(N_DEGREE - 1)] = 1.0;
        offset += N_DEGREE;
        row[offset + (atom.implicit_h as usize).min(N_HYDROGEN - 1)] = 1.0;
        offset += N_HYDROGEN;
        row[offset + (atom.formal_charge.clamp(-2, 2) + 2) as usize] = 1.0;
        offset += N_CHARGE;
        row[offset] = atom.aromatic as u8 as f64;
        row[offset + 1] = atom.ring_member as u8 as f64;
        nb.push(k);
        nb.sort_unstable();
        neighbors.push(nb);
    }
    GraphInput {
        n_nodes: heavy.len(),
        features,
        neighbors,
    }
}

impl GraphInput {
    /// Same molecule with node `i` moved to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> GraphInput {
        let n = self.n_nodes;
        let mut features = vec![0.0; self.features.len()];
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            let p = perm[i];
            features[p * NODE_FEATURES..(p + 1) * NODE_FEATURES]
                .copy_from_slice(&self.features[i * NODE_FEATURES..(i + 1) * NODE_FEATURES]);
            let mut nb: Vec<usize> = self.neighbors[i].iter().map(|&j| perm[j]).collect();
            nb.sort_unstable();
            neighbors[p] = nb;
        }
        GraphInput {
            n_nodes: n,
            features,
            neighbors,
        }
    }
}

/// Several molecules concatenated node-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub node_features: Vec<f64>,
    /// `graph_offsets[b]..graph_offsets[b + 1]` are the nodes of molecule b.
    pub graph_offsets: Vec<usize>,
    /// Global node indices, self included.
    pub neighbor_lists: Vec<Vec<usize>>,
}

impl GraphBatch {
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a GraphInput>) -> GraphBatch {
        let mut b = GraphBatch {
            node_features: Vec::new(),
            graph_offsets: vec![0],
            neighbor_lists: Vec::new(),
        };
        for g in graphs {
            let start = *b.graph_offsets.last().unwrap();
            b.node_features.extend_from_slice(&g.features);
            b.neighbor_lists
                .extend(g.neighbors.iter().map(|nb| nb.iter().map(|&j| j + start).collect()));
            b.graph_offsets.push(start + g.n_nodes);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.graph_offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Molecule `b` as a standalone graph with local indices.
    pub fn graph(&self, b: usize) -> GraphInput {
        let (start, end) = (self.graph_offsets[b], self.graph_offsets[b + 1]);
        GraphInput {
            n_nodes: end - start,
            features: self.node_features[start * NODE_FEATURES..end * NODE_FEATURES].to_vec(),
            neighbors: self.neighbor_lists[start..end]
                .iter()
                .map(|nb| nb.iter().map(|&j| j - start).collect())
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chem::parse_smiles;

    fn slot(row: &[f64], from: usize, len: usize) -> usize {
        (from..from + len).find(|&i| row[i] == 1.0).unwrap() - from
    }

    #[test]
    fn benzene_rows() {
        let g = featurize_graph(&parse_smiles("c1ccccc1").unwrap());
        assert_eq!(g.n_nodes, 6);
        for row in g.features.chunks(NODE_FEATURES) {
            assert_eq!(slot(row, N_ELEMENT, N_DEGREE), 2);
            assert_eq!(slot(row, N_ELEMENT + N_DEGREE, N_HYDROGEN), 1);
            assert_eq!(row[NODE_FEATURES - 2], 1.0);
            assert_eq!(row[NODE_FEATURES - 1], 1.0);
        }
        assert!(g.neighbors.iter().enumerate().all(|(i, nb)| nb.len() == 3 && nb.contains(&i)));
    }

    #[test]
    fn ethanol_oxygen_row() {
        let g = featurize_graph(&parse_smiles("CCO").unwrap());
        assert_eq!(g.n_nodes, 3);
        let o = &g.features[2 * NODE_FEATURES..3 * NODE_FEATURES];
        assert_eq!(slot(o, 0, N_ELEMENT), 3);
        let charge = N_ELEMENT + N_DEGREE + N_HYDROGEN;
        assert_eq!(slot(o, charge, N_CHARGE), 2);
    }

    #[test]
    fn batch_round_trip() {
        let a = featurize_graph(&parse_smiles("CCO").unwrap());
        let b = featurize_graph(&parse_smiles("c1ccncc1").unwrap());
        let batch = GraphBatch::from_graphs([&a, &b]);
        assert_eq!(batch.graph_offsets, vec![0, 3, 9]);
        assert_eq!(batch.graph(1), b);
        assert!(batch.neighbor_lists[3..].iter().flatten().all(|&j| (3..9).contains(&j)));
    }
}
