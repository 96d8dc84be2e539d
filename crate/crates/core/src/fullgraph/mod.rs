//! Joint equalization and decoding on the full factor graph.
//!
//! The graph has three node kinds: one variable per codeword bit, one check
//! per row of `H`, and one measured-data node per page cell. A data node is
//! wired to the variable stored in its own cell (slot 0) and to the
//! variables in its six hexagonal neighbours (slots 1..=6, clockwise from
//! west). Messages are LLRs `log mu(0)/mu(1)`, so positive means "bit 0".

mod decoder;
mod kernel;

use crate::channel::hex_neighbor_slots;
use crate::ldpc::{PageMapping, ParityCheckMatrix};
use crate::{Error, Result};

pub use decoder::{
    decode, detect_uncoded, DecodeResult, DEFAULT_LLR_CLAMP, DecoderParams, IterationTrace, MessageState,
};
pub use kernel::{llr_to_probs, DataKernel, Likelihoods, ALL_PRESENT, DATA_SLOTS};

/// Marks an absent slot or edge.
pub const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct FullGraph {
    n: usize,
    dims: (usize, usize),
    /// Variables on each data node's slots; data node `d` sits in row-major
    /// cell `d`. Data edge `d * DATA_SLOTS + s` joins node `d` and slot `s`.
    data_vars: Vec<[u32; DATA_SLOTS]>,
    data_present: Vec<u8>,
    /// Data edges of each variable; the first is always its own cell's
    /// centre slot.
    var_data_edges: Vec<[u32; DATA_SLOTS]>,
    var_data_deg: Vec<u8>,
    /// Edges of check `c` are `check_ptr[c]..check_ptr[c + 1]`; edge `e`
    /// ends at variable `check_edge_var[e]`.
    check_ptr: Vec<usize>,
    check_edge_var: Vec<u32>,
    var_check_ptr: Vec<usize>,
    var_check_edges: Vec<u32>,
}

impl FullGraph {
    /// Joint code/channel graph for codeword bits laid out by `mapping`.
    pub fn new(h: &ParityCheckMatrix, mapping: &PageMapping) -> Result<Self> {
        if h.n() != mapping.n() {
            return Err(Error::domain(format!(
                "code length {} does not match the {}x{} page",
                h.n(),
                mapping.dims().0,
                mapping.dims().1
            )));
        }
        let mut g = Self::channel_only(mapping);
        g.attach_code(h);
        Ok(g)
    }

    /// The channel graph alone, for uncoded detection.
    pub fn channel_only(mapping: &PageMapping) -> Self {
        let n = mapping.n();
        let dims = mapping.dims();
        let cols = dims.1;
        let mut data_vars = vec![[NONE; DATA_SLOTS]; n];
        let mut data_present = vec![0u8; n];
        let mut var_data_edges = vec![[NONE; DATA_SLOTS]; n];
        let mut var_data_deg = vec![0u8; n];

        for (d, (vars, present)) in data_vars.iter_mut().zip(&mut data_present).enumerate() {
            vars[0] = mapping.index_at_cell(d) as u32;
            *present = 1;
            let slots = hex_neighbor_slots((d / cols, d % cols), dims);
            for (s, nb) in slots.iter().enumerate() {
                if let Some((i, j)) = nb {
                    vars[s + 1] = mapping.index_at_cell(i * cols + j) as u32;
                    *present |= 1 << (s + 1);
                }
            }
        }
        // centre edges first so each variable's own cell leads its list
        for slot in 0..DATA_SLOTS {
            for d in 0..n {
                let v = data_vars[d][slot];
                if v != NONE {
                    let v = v as usize;
                    var_data_edges[v][var_data_deg[v] as usize] = (d * DATA_SLOTS + slot) as u32;
                    var_data_deg[v] += 1;
                }
            }
        }

        Self {
            n,
            dims,
            data_vars,
            data_present,
            var_data_edges,
            var_data_deg,
            check_ptr: vec![0],
            check_edge_var: Vec::new(),
            var_check_ptr: vec![0; n + 1],
            var_check_edges: Vec::new(),
        }
    }

    fn attach_code(&mut self, h: &ParityCheckMatrix) {
        self.check_ptr = Vec::with_capacity(h.m() + 1);
        self.check_ptr.push(0);
        self.check_edge_var.clear();
        for row in h.rows() {
            self.check_edge_var.extend_from_slice(row);
            self.check_ptr.push(self.check_edge_var.len());
        }
        let mut deg = vec![0usize; self.n];
        for &v in &self.check_edge_var {
            deg[v as usize] += 1;
        }
        self.var_check_ptr = std::iter::once(0)
            .chain(deg.iter().scan(0, |acc, &d| {
                *acc += d;
                Some(*acc)
            }))
            .collect();
        let mut fill = self.var_check_ptr[..self.n].to_vec();
        self.var_check_edges = vec![0; self.check_edge_var.len()];
        for (e, &v) in self.check_edge_var.iter().enumerate() {
            self.var_check_edges[fill[v as usize]] = e as u32;
            fill[v as usize] += 1;
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn num_checks(&self) -> usize {
        self.check_ptr.len() - 1
    }

    pub fn num_check_edges(&self) -> usize {
        self.check_edge_var.len()
    }

    pub fn has_code(&self) -> bool {
        self.num_checks() > 0
    }

    /// Variables attached to data node `d`, slot 0 the centre.
    pub fn data_node_vars(&self, d: usize) -> &[u32; DATA_SLOTS] {
        &self.data_vars[d]
    }

    pub fn data_node_present(&self, d: usize) -> u8 {
        self.data_present[d]
    }

    pub fn data_degree(&self, d: usize) -> usize {
        self.data_present[d].count_ones() as usize
    }

    /// Data edges `d * DATA_SLOTS + slot` of variable `v`.
    pub fn var_data_edges(&self, v: usize) -> &[u32] {
        &self.var_data_edges[v][..self.var_data_deg[v] as usize]
    }

    /// Check edges of variable `v`.
    pub fn var_check_edges(&self, v: usize) -> &[u32] {
        &self.var_check_edges[self.var_check_ptr[v]..self.var_check_ptr[v + 1]]
    }

    /// Variables of check `c`, in edge order.
    pub fn check_vars(&self, c: usize) -> &[u32] {
        &self.check_edge_var[self.check_ptr[c]..self.check_ptr[c + 1]]
    }

    pub fn check_edge_range(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    /// Zero syndrome for `bits` (codeword order); trivially true without a code.
    pub fn satisfies_checks(&self, bits: &[u8]) -> bool {
        (0..self.num_checks()).all(|c| {
            self.check_vars(c)
                .iter()
                .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                == 0
        })
    }

    pub fn unsatisfied_checks(&self, bits: &[u8]) -> usize {
        (0..self.num_checks())
            .filter(|&c| {
                self.check_vars(c)
                    .iter()
                    .fold(0u8, |acc, &v| acc ^ bits[v as usize])
                    != 0
            })
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{generate_regular, CodeParams};

    #[test]
    fn structure_100x100() {
        let h = generate_regular(&CodeParams::new(3, 30, 10000, 1).unwrap()).unwrap();
        let map = PageMapping::row_major(10000, (100, 100)).unwrap();
        let g = FullGraph::new(&h, &map).unwrap();
        assert_eq!(g.n(), 10000);
        assert_eq!(g.data_vars.len(), 10000);
        let interior = map.index((50, 50));
        assert_eq!(g.var_check_edges(interior).len(), 3);
        assert_eq!(g.var_data_edges(interior).len(), 7);
        assert_eq!(g.data_degree(5050), 7);
        let corner = map.index((0, 0));
        assert!(g.var_data_edges(corner).len() < 7);
        assert!(g.data_degree(0) < 7);
        for v in 0..10000 {
            assert!(g.var_data_edges(v).len() <= 7);
            assert_eq!(g.var_check_edges(v).len(), 3);
            // own cell's centre slot leads
            assert_eq!(g.var_data_edges(v)[0] as usize, map.cell(v) * DATA_SLOTS);
        }
    }

    #[test]
    fn edges_are_consistent() {
        let h = generate_regular(&CodeParams::new(3, 6, 120, 1).unwrap()).unwrap();
        let map = PageMapping::from_permutation((10, 12), (0..120u32).rev().collect()).unwrap();
        let g = FullGraph::new(&h, &map).unwrap();
        for v in 0..120 {
            for &e in g.var_data_edges(v) {
                let (d, s) = (e as usize / DATA_SLOTS, e as usize % DATA_SLOTS);
                assert_eq!(g.data_node_vars(d)[s] as usize, v);
            }
            for &e in g.var_check_edges(v) {
                assert_eq!(g.check_edge_var[e as usize] as usize, v);
            }
        }
        // symmetry of the hex lattice: edge count per side matches
        let data_edges: usize = (0..120).map(|d| g.data_degree(d)).sum();
        let var_edges: usize = (0..120).map(|v| g.var_data_edges(v).len()).sum();
        assert_eq!(data_edges, var_edges);
    }

    #[test]
    fn mismatched_dims() {
        let h = generate_regular(&CodeParams::new(3, 6, 120, 1).unwrap()).unwrap();
        let map = PageMapping::row_major(121, (11, 11)).unwrap();
        assert!(FullGraph::new(&h, &map).is_err());
    }
}
