//! Hexagonal-lattice page, nearest-neighbour readback and noise.
//!
//! Pages use odd-row-shifted offset coordinates: odd rows sit half a cell to
//! the right of even rows, so `(i, j)` has the six neighbours
//!
//! ```text
//! even i: (i, j-1) (i-1, j-1) (i-1, j) (i, j+1) (i+1, j) (i+1, j-1)
//! odd  i: (i, j-1) (i-1, j)   (i-1, j+1) (i, j+1) (i+1, j+1) (i+1, j)
//! ```
//!
//! listed clockwise from west. Cells outside the page read as `0`, which is
//! how the empty guard rows between tracks behave.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Number of hexagonal nearest neighbours.
pub const HEX_DEGREE: usize = 6;

/// `(row, col)` position on a page.
pub type Pos = (usize, usize);

/// The written page: one bit per hexagonal cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitPage {
    rows: usize,
    cols: usize,
    bits: Vec<u8>,
}

impl BitPage {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_bits(rows, cols, vec![0; rows * cols])
    }

    pub fn ones(rows: usize, cols: usize) -> Result<Self> {
        Self::from_bits(rows, cols, vec![1; rows * cols])
    }

    /// Builds a page from row-major bits.
    pub fn from_bits(rows: usize, cols: usize, bits: Vec<u8>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::domain(format!("page must be non-empty, got {rows}x{cols}")));
        }
        if bits.len() != rows * cols {
            return Err(Error::domain(format!(
                "{} bits do not fill a {rows}x{cols} page",
                bits.len()
            )));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::domain(format!("page bits must be 0 or 1, found {b}")));
        }
        Ok(Self { rows, cols, bits })
    }

    /// I.i.d. equiprobable bits.
    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        let bits = (0..rows * cols).map(|_| rng.random::<bool>() as u8).collect();
        Self::from_bits(rows, cols, bits)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn get(&self, (row, col): Pos) -> u8 {
        self.bits[row * self.cols + col]
    }

    pub fn set(&mut self, (row, col): Pos, bit: bool) {
        self.bits[row * self.cols + col] = bit as u8;
    }

    pub fn flip(&mut self, (row, col): Pos) {
        self.bits[row * self.cols + col] ^= 1;
    }

    fn check_pos(&self, pos: Pos) -> Result<()> {
        check_in_bounds(pos, self.dims())
    }
}

fn check_in_bounds((row, col): Pos, (rows, cols): (usize, usize)) -> Result<()> {
    if row < rows && col < cols {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "position ({row}, {col}) outside {rows}x{cols} page"
        )))
    }
}

/// The in-bounds part of a cell's hexagonal neighbourhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HexNeighborhood {
    pub center: Pos,
    pub neighbors: Vec<Pos>,
}

/// All six neighbour slots of `pos` in clockwise order from west, `None`
/// where the neighbour falls off the page. `pos` itself must be in bounds.
pub fn hex_neighbor_slots((i, j): Pos, (rows, cols): (usize, usize)) -> [Option<Pos>; HEX_DEGREE] {
    let (i, j) = (i as isize, j as isize);
    let offsets: [(isize, isize); HEX_DEGREE] = if i % 2 == 0 {
        [(0, -1), (-1, -1), (-1, 0), (0, 1), (1, 0), (1, -1)]
    } else {
        [(0, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0)]
    };
    offsets.map(|(di, dj)| {
        let (r, c) = (i + di, j + dj);
        (r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols)
            .then_some((r as usize, c as usize))
    })
}

pub fn hex_neighbors(pos: Pos, dims: (usize, usize)) -> Result<HexNeighborhood> {
    check_in_bounds(pos, dims)?;
    Ok(HexNeighborhood {
        center: pos,
        neighbors: hex_neighbor_slots(pos, dims).into_iter().flatten().collect(),
    })
}

/// Number of set bits among the six neighbours, off-page cells counting 0.
pub fn nonzero_neighbors(page: &BitPage, pos: Pos) -> usize {
    hex_neighbor_slots(pos, page.dims())
        .into_iter()
        .flatten()
        .filter(|&p| page.get(p) == 1)
        .count()
}

/// Readback intensity for each (nonzero-neighbour count, central bit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalLevelTable {
    levels: [[f64; 2]; HEX_DEGREE + 1],
}

impl Default for SignalLevelTable {
    /// The published TWODOS levels for one choice of pit size and spot.
    fn default() -> Self {
        Self {
            levels: [
                [0.95, 0.50],
                [0.80, 0.35],
                [0.70, 0.30],
                [0.55, 0.20],
                [0.45, 0.15],
                [0.35, 0.10],
                [0.25, 0.05],
            ],
        }
    }
}

impl SignalLevelTable {
    /// Validates monotonicity: both columns strictly decrease with the
    /// neighbour count and a central pit always lowers the intensity.
    pub fn new(levels: [[f64; 2]; HEX_DEGREE + 1]) -> Result<Self> {
        if levels.iter().flatten().any(|s| !s.is_finite()) {
            return Err(Error::domain("signal levels must be finite"));
        }
        for n in 0..HEX_DEGREE {
            for b in 0..2 {
                if levels[n + 1][b] >= levels[n][b] {
                    return Err(Error::domain(format!(
                        "levels for central bit {b} must strictly decrease: s[{}]={} >= s[{n}]={}",
                        n + 1,
                        levels[n + 1][b],
                        levels[n][b]
                    )));
                }
            }
        }
        for (n, row) in levels.iter().enumerate() {
            if row[0] <= row[1] {
                return Err(Error::domain(format!(
                    "central pit must lower the intensity at n={n}: {} <= {}",
                    row[0], row[1]
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Intensity with `n` nonzero neighbours and central bit `bit`.
    #[inline]
    pub fn level(&self, n: usize, bit: u8) -> f64 {
        self.levels[n][bit as usize]
    }

    pub fn levels(&self) -> &[[f64; 2]; HEX_DEGREE + 1] {
        &self.levels
    }

    /// Mean signal energy over equiprobable configurations of the seven
    /// cells in a closed neighbourhood.
    pub fn mean_energy(&self) -> f64 {
        let mut binom = 1.0;
        let mut total = 0.0;
        for (n, [s0, s1]) in self.levels.iter().enumerate() {
            total += binom * (s0 * s0 + s1 * s1);
            binom = binom * (HEX_DEGREE - n) as f64 / (n + 1) as f64;
        }
        total / (1u32 << (HEX_DEGREE + 1)) as f64
    }

    /// Parses the plain-text format written by [`SignalLevelTable::to_text`]:
    /// seven lines `n s_n0 s_n1`. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut levels = [[f64::NAN; 2]; HEX_DEGREE + 1];
        let mut seen = [false; HEX_DEGREE + 1];
        for (lineno, raw) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(lineno, format!("expected `n s_n0 s_n1`, got {line:?}")));
            }
            let n: usize = fields[0]
                .parse()
                .map_err(|_| err(lineno, format!("bad neighbour count {:?}", fields[0])))?;
            if n > HEX_DEGREE {
                return Err(err(lineno, format!("neighbour count {n} exceeds {HEX_DEGREE}")));
            }
            if seen[n] {
                return Err(err(lineno, format!("duplicate row for n={n}")));
            }
            for b in 0..2 {
                levels[n][b] = fields[b + 1]
                    .parse()
                    .map_err(|_| err(lineno, format!("bad level {:?}", fields[b + 1])))?;
            }
            seen[n] = true;
        }
        if let Some(n) = seen.iter().position(|s| !s) {
            return Err(err(text.lines().count(), format!("missing row for n={n}")));
        }
        Self::new(levels).map_err(|e| err(0, e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SignalLevelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, [s0, s1]) in self.levels.iter().enumerate() {
            writeln!(f, "{n} {s0} {s1}")?;
        }
        Ok(())
    }
}

pub fn noiseless_intensity(page: &BitPage, pos: Pos, table: &SignalLevelTable) -> Result<f64> {
    page.check_pos(pos)?;
    Ok(table.level(nonzero_neighbors(page, pos), page.get(pos)))
}

/// Noisy readback intensities, same shape as the written page.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadbackPage {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ReadbackPage {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::domain(format!(
                "{} values do not fill a {rows}x{cols} page",
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, (row, col): Pos) -> f64 {
        self.values[row * self.cols + col]
    }
}

/// Additive white Gaussian noise of variance `sigma2`, drawn from a
/// ChaCha8 stream seeded with `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    sigma2: f64,
    seed: u64,
    noiseless: bool,
}

impl NoiseModel {
    pub fn new(sigma2: f64, seed: u64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(Self {
            sigma2,
            seed,
            noiseless: false,
        })
    }

    /// The zero-noise limit: readback returns the noiseless intensities.
    pub fn noiseless() -> Self {
        Self {
            sigma2: f64::MIN_POSITIVE,
            seed: 0,
            noiseless: true,
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_noiseless(&self) -> bool {
        self.noiseless
    }
}

/// Noiseless intensities of every cell, row-major.
pub fn noiseless_page(page: &BitPage, table: &SignalLevelTable) -> Vec<f64> {
    let (rows, cols) = page.dims();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(table.level(nonzero_neighbors(page, (i, j)), page.get((i, j))));
        }
    }
    out
}

pub fn readback(page: &BitPage, table: &SignalLevelTable, noise: &NoiseModel) -> ReadbackPage {
    let mut values = noiseless_page(page, table);
    if !noise.noiseless {
        let sigma = noise.sigma2.sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for v in &mut values {
            let w: f64 = rng.sample(StandardNormal);
            *v += sigma * w;
        }
    }
    ReadbackPage {
        rows: page.rows,
        cols: page.cols,
        values,
    }
}

/// Signal-to-noise ratio in dB: mean signal energy over `2 * rate * sigma2`.
pub fn snr_db(sigma2: f64, rate: f64, table: &SignalLevelTable) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::domain(format!("noise variance must be positive, got {sigma2}")));
    }
    check_rate(rate)?;
    Ok(10.0 * (table.mean_energy() / (2.0 * rate * sigma2)).log10())
}

/// Inverse of [`snr_db`].
pub fn sigma2_from_snr_db(snr: f64, rate: f64, table: &SignalLevelTable) -> Result<f64> {
    check_rate(rate)?;
    Ok(table.mean_energy() / (2.0 * rate * 10f64.powf(snr / 10.0)))
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("code rate must lie in (0, 1], got {rate}")))
    }
}
