//! Regular LDPC codes: construction, encoding, syndromes and alist files.

mod alist;
mod encoder;
mod mapping;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use alist::{parse_alist, read_alist, to_alist, write_alist};
pub use encoder::Encoder;
pub use mapping::{near_square_dims, PageMapping};

/// Sparse binary parity-check matrix kept in both row and column form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    n: usize,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
}

impl ParityCheckMatrix {
    /// Builds `H` from the column indices of each row. Rows are sorted;
    /// repeated or out-of-range indices are rejected.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<u32>>) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::domain(format!("row {r} repeats a column index")));
            }
            for &c in row.iter() {
                let col = cols
                    .get_mut(c as usize)
                    .ok_or_else(|| Error::domain(format!("row {r} references column {c} >= n={n}")))?;
                col.push(r as u32);
            }
        }
        Ok(Self { n, rows, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Sorted column indices of row `r`.
    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    /// Sorted row indices of column `c`.
    pub fn col(&self, c: usize) -> &[u32] {
        &self.cols[c]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn cols(&self) -> &[Vec<u32>] {
        &self.cols
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `Some((dv, dc))` when every column has weight dv and every row dc.
    pub fn regular_degrees(&self) -> Option<(usize, usize)> {
        let dv = self.cols.first()?.len();
        let dc = self.rows.first()?.len();
        (self.cols.iter().all(|c| c.len() == dv) && self.rows.iter().all(|r| r.len() == dc))
            .then_some((dv, dc))
    }

    /// Largest number of columns shared by any two rows.
    pub fn max_row_overlap(&self) -> usize {
        let mut best = 0;
        let mut count = vec![0usize; self.m()];
        for r in 0..self.m() {
            for &c in &self.rows[r] {
                for &other in &self.cols[c as usize] {
                    if (other as usize) > r {
                        count[other as usize] += 1;
                    }
                }
            }
            for &c in &self.rows[r] {
                for &other in &self.cols[c as usize] {
                    best = best.max(count[other as usize]);
                    count[other as usize] = 0;
                }
            }
        }
        best
    }

    pub fn syndrome(&self, word: &[u8]) -> Result<Vec<u8>> {
        if word.len() != self.n {
            return Err(Error::domain(format!(
                "word length {} does not match code length {}",
                word.len(),
                self.n
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)))
            .collect())
    }

    /// True when `word` satisfies every check. Panics on a length mismatch.
    pub fn is_codeword(&self, word: &[u8]) -> bool {
        assert_eq!(word.len(), self.n);
        self.rows
            .iter()
            .all(|row| row.iter().fold(0u8, |acc, &c| acc ^ (word[c as usize] & 1)) == 0)
    }
}

/// Parameters of a random regular `(dv, dc)` code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub dv: usize,
    pub dc: usize,
    pub n: usize,
    pub seed: u64,
}

impl CodeParams {
    pub fn new(dv: usize, dc: usize, n: usize, seed: u64) -> Result<Self> {
        let p = Self { dv, dc, n, seed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dv < 2 {
            return Err(Error::domain(format!("column weight must be >= 2, got {}", self.dv)));
        }
        if self.dc <= self.dv {
            return Err(Error::domain(format!(
                "row weight {} must exceed column weight {}",
                self.dc, self.dv
            )));
        }
        if self.n == 0 || (self.dv * self.n) % self.dc != 0 {
            return Err(Error::domain(format!(
                "dv*n = {} is not divisible by dc = {}",
                self.dv * self.n,
                self.dc
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.dv * self.n / self.dc
    }

    pub fn design_rate(&self) -> f64 {
        1.0 - self.dv as f64 / self.dc as f64
    }
}

/// Serialized next to an alist file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeMetadata {
    pub dv: usize,
    pub dc: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub rank: usize,
    pub k: usize,
    pub design_rate: f64,
    pub true_rate: f64,
}

impl CodeMetadata {
    pub fn new(params: &CodeParams, encoder: &Encoder) -> Self {
        Self {
            dv: params.dv,
            dc: params.dc,
            n: params.n,
            m: params.m(),
            seed: params.seed,
            rank: encoder.rank(),
            k: encoder.k(),
            design_rate: params.design_rate(),
            true_rate: encoder.rate(),
        }
    }
}

const MAX_RESTARTS: u64 = 200;
const SWAP_TRIES: usize = 64;

/// Random `(dv, dc)`-regular matrix without double edges or 4-cycles.
///
/// Row sockets are shuffled and dealt `dv` at a time to columns. A socket
/// that would repeat a row in the column, or pair two rows that already
/// share a column, is swapped with a random undealt socket; if no swap
/// helps the whole deal is restarted with a fresh permutation.
pub fn generate_regular(params: &CodeParams) -> Result<ParityCheckMatrix> {
    params.validate()?;
    let (dv, dc, n, m) = (params.dv, params.dc, params.n, params.m());
    // each row meets dc*(dv-1) others; they must all be distinct
    if dc * (dv - 1) > m - 1 {
        return Err(Error::Construction(format!(
            "a 4-cycle-free ({dv},{dc}) code needs at least {} checks, n={n} gives {m}",
            dc * (dv - 1) + 1
        )));
    }
    for attempt in 0..MAX_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(attempt);
        if let Some(cols) = deal_sockets(dv, dc, n, m, &mut rng) {
            let mut rows = vec![Vec::with_capacity(dc); m];
            for (c, col) in cols.chunks(dv).enumerate() {
                for &r in col {
                    rows[r as usize].push(c as u32);
                }
            }
            return ParityCheckMatrix::from_rows(n, rows);
        }
    }
    Err(Error::Construction(format!(
        "no 4-cycle-free ({dv},{dc}) matrix with n={n} after {MAX_RESTARTS} restarts"
    )))
}

fn deal_sockets(dv: usize, dc: usize, n: usize, m: usize, rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    let mut sockets: Vec<u32> = (0..m as u32).flat_map(|r| std::iter::repeat_n(r, dc)).collect();
    sockets.shuffle(rng);
    // rows already sharing a column with each row
    let mut partners: Vec<Vec<u32>> = vec![Vec::with_capacity(dc * (dv - 1)); m];

    let fits = |partners: &[Vec<u32>], placed: &[u32], r: u32| {
        placed.iter().all(|&p| p != r && !partners[r as usize].contains(&p))
    };

    for c in 0..n {
        let base = c * dv;
        for s in 0..dv {
            let pos = base + s;
            let placed = &sockets[base..pos];
            if !fits(&partners, placed, sockets[pos]) {
                let rest = sockets.len() - pos - 1;
                if rest == 0 {
                    return None;
                }
                let random_pick = (0..SWAP_TRIES.min(4 * rest))
                    .map(|_| pos + 1 + rng.random_range(0..rest))
                    .find(|&o| fits(&partners, placed, sockets[o]));
                let other = match random_pick {
                    Some(o) => o,
                    None => (pos + 1..sockets.len()).find(|&o| fits(&partners, placed, sockets[o]))?,
                };
                sockets.swap(pos, other);
            }
        }
        let col = &sockets[base..base + dv];
        for (a, &ra) in col.iter().enumerate() {
            for &rb in &col[a + 1..] {
                partners[ra as usize].push(rb);
                partners[rb as usize].push(ra);
            }
        }
    }
    Some(sockets)
}
