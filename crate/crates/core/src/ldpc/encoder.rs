use super::ParityCheckMatrix;
use crate::{Error, Result};

/// Systematic encoder obtained by reducing `H` to row-echelon form over GF(2).
///
/// Pivot columns carry parity, every other column carries a message bit.
/// Redundant checks are dropped, so `k = n - rank(H)` may exceed `n - m`.
#[derive(Clone, Debug)]
pub struct Encoder {
    n: usize,
    words: usize,
    /// Reduced rows, `rank * words` packed bits.
    reduced: Vec<u64>,
    pivot_cols: Vec<usize>,
    info_cols: Vec<usize>,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix) -> Self {
        let n = h.n();
        let words = n.div_ceil(64);
        let mut mat = vec![0u64; h.m() * words];
        for (r, row) in h.rows().iter().enumerate() {
            for &c in row {
                mat[r * words + c as usize / 64] ^= 1 << (c % 64);
            }
        }

        let mut rank = 0;
        let mut pivot_cols = Vec::new();
        let mut info_cols = Vec::new();
        for col in 0..n {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..h.m()).find(|&r| mat[r * words + w] & bit != 0) else {
                info_cols.push(col);
                continue;
            };
            if p != rank {
                for i in 0..words {
                    mat.swap(p * words + i, rank * words + i);
                }
            }
            // earlier words of the pivot row are already clear
            let pivot: Vec<u64> = mat[rank * words + w..(rank + 1) * words].to_vec();
            for r in 0..h.m() {
                if r != rank && mat[r * words + w] & bit != 0 {
                    for (dst, src) in mat[r * words + w..(r + 1) * words].iter_mut().zip(&pivot) {
                        *dst ^= src;
                    }
                }
            }
            pivot_cols.push(col);
            rank += 1;
        }
        mat.truncate(rank * words);
        Self {
            n,
            words,
            reduced: mat,
            pivot_cols,
            info_cols,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.info_cols.len()
    }

    pub fn rank(&self) -> usize {
        self.pivot_cols.len()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    /// Codeword positions holding the message, in message order.
    pub fn systematic_positions(&self) -> &[usize] {
        &self.info_cols
    }

    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.k() {
            return Err(Error::domain(format!(
                "message length {} does not match k={}",
                message.len(),
                self.k()
            )));
        }
        let mut packed = vec![0u64; self.words];
        for (&col, &b) in self.info_cols.iter().zip(message) {
            packed[col / 64] |= ((b & 1) as u64) << (col % 64);
        }
        for (row, &pc) in self.reduced.chunks_exact(self.words).zip(&self.pivot_cols) {
            let parity = row
                .iter()
                .zip(&packed)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1;
            packed[pc / 64] |= (parity as u64) << (pc % 64);
        }
        Ok((0..self.n).map(|i| ((packed[i / 64] >> (i % 64)) & 1) as u8).collect())
    }

    /// Reads the message back out of a codeword.
    pub fn extract(&self, codeword: &[u8]) -> Result<Vec<u8>> {
        if codeword.len() != self.n {
            return Err(Error::domain(format!(
                "codeword length {} does not match n={}",
                codeword.len(),
                self.n
            )));
        }
        Ok(self.info_cols.iter().map(|&c| codeword[c]).collect())
    }
}
