use serde::{Deserialize, Serialize};

use crate::channel::{BitPage, Pos};
use crate::{Error, Result};

/// Bijection between codeword indices and page cells.
///
/// The default layout is row-major; any permutation can be supplied to try
/// interleaved layouts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMapping {
    rows: usize,
    cols: usize,
    /// `cell_of[index]` is the row-major cell holding codeword bit `index`.
    cell_of: Vec<u32>,
    index_of: Vec<u32>,
}

/// The most nearly square `rows x cols = n` with `rows <= cols`.
pub fn near_square_dims(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

impl PageMapping {
    pub fn row_major(n: usize, (rows, cols): (usize, usize)) -> Result<Self> {
        if rows * cols != n || n == 0 {
            return Err(Error::domain(format!(
                "a {rows}x{cols} page cannot hold {n} codeword bits"
            )));
        }
        let id: Vec<u32> = (0..n as u32).collect();
        Ok(Self {
            rows,
            cols,
            cell_of: id.clone(),
            index_of: id,
        })
    }

    /// `cell_of[i]` gives the row-major cell of codeword bit `i`.
    pub fn from_permutation((rows, cols): (usize, usize), cell_of: Vec<u32>) -> Result<Self> {
        let n = rows * cols;
        if cell_of.len() != n || n == 0 {
            return Err(Error::domain(format!(
                "permutation of length {} does not fit a {rows}x{cols} page",
                cell_of.len()
            )));
        }
        let mut index_of = vec![u32::MAX; n];
        for (i, &c) in cell_of.iter().enumerate() {
            let slot = index_of
                .get_mut(c as usize)
                .ok_or_else(|| Error::domain(format!("cell {c} outside the page")))?;
            if *slot != u32::MAX {
                return Err(Error::domain(format!("cell {c} assigned twice")));
            }
            *slot = i as u32;
        }
        Ok(Self {
            rows,
            cols,
            cell_of,
            index_of,
        })
    }

    pub fn n(&self) -> usize {
        self.cell_of.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_row_major(&self) -> bool {
        self.cell_of.iter().enumerate().all(|(i, &c)| i == c as usize)
    }

    /// Row-major cell number of codeword bit `index`.
    #[inline]
    pub fn cell(&self, index: usize) -> usize {
        self.cell_of[index] as usize
    }

    /// Codeword bit stored in row-major cell `cell`.
    #[inline]
    pub fn index_at_cell(&self, cell: usize) -> usize {
        self.index_of[cell] as usize
    }

    pub fn pos(&self, index: usize) -> Pos {
        let c = self.cell(index);
        (c / self.cols, c % self.cols)
    }

    pub fn index(&self, (row, col): Pos) -> usize {
        self.index_at_cell(row * self.cols + col)
    }

    pub fn to_page(&self, codeword: &[u8]) -> Result<BitPage> {
        if codeword.len() != self.n() {
            return Err(Error::domain(format!(
                "codeword length {} does not match mapping length {}",
                codeword.len(),
                self.n()
            )));
        }
        let bits = self.index_of.iter().map(|&i| codeword[i as usize]).collect();
        BitPage::from_bits(self.rows, self.cols, bits)
    }

    pub fn from_page(&self, page: &BitPage) -> Result<Vec<u8>> {
        if page.dims() != self.dims() {
            return Err(Error::domain("page dimensions do not match the mapping"));
        }
        Ok(self.cell_of.iter().map(|&c| page.bits()[c as usize]).collect())
    }
}
