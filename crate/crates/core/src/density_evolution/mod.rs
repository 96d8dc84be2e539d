//! Density evolution for the full-graph decoder.
//!
//! Message densities are tracked for *sign-corrected* LLRs: a message `L`
//! about a bit whose true value is `x` is recorded as `(1 - 2x) L`, so mass
//! on the positive axis is correct belief. The channel is asymmetric, so
//! the usual all-zero-codeword shortcut does not apply; the Monte Carlo data
//! step uses random pages instead.
//!
//! A density lives on a uniform grid of `2h + 1` points `k * step`,
//! `k = -h..=h`, with `h * step = L_max`, plus point masses at `+-inf`.

mod check;
mod evolve;
mod montecarlo;
mod variable;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use check::{check_update, CheckTable};
pub use evolve::{
    evolve, find_threshold, find_threshold_with, DeCode, DeOutcome, DeParams, DeRun, DeState, ThresholdProbe,
    ThresholdResult, ThresholdSearch,
};
pub use montecarlo::{data_update_mc, McHistograms, McPage, McParams, MonteCarloChannel};
pub use variable::variable_update;

/// Tolerance on the total mass of a density.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Uniform LLR quantization grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlrGrid {
    half_bins: usize,
    max_llr: f64,
}

impl Default for LlrGrid {
    /// 4097 points over `[-30, 30]`, matching the decoder clamp.
    fn default() -> Self {
        Self {
            half_bins: 2048,
            max_llr: 30.0,
        }
    }
}

impl LlrGrid {
    pub fn new(half_bins: usize, max_llr: f64) -> Result<Self> {
        if half_bins == 0 || half_bins > u16::MAX as usize - 2 {
            return Err(Error::domain(format!(
                "grid half-width must lie in 1..={}, got {half_bins}",
                u16::MAX - 2
            )));
        }
        if !(max_llr > 0.0 && max_llr.is_finite()) {
            return Err(Error::domain(format!("grid range must be positive, got {max_llr}")));
        }
        Ok(Self { half_bins, max_llr })
    }

    /// Points on the positive side; index `half_bins` is zero.
    pub fn half_bins(&self) -> usize {
        self.half_bins
    }

    pub fn max_llr(&self) -> f64 {
        self.max_llr
    }

    pub fn step(&self) -> f64 {
        self.max_llr / self.half_bins as f64
    }

    /// Number of finite grid points.
    pub fn len(&self) -> usize {
        2 * self.half_bins + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// LLR value of finite index `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        (idx as f64 - self.half_bins as f64) * self.step()
    }

    /// Nearest finite index of `llr`, saturating at the grid ends.
    pub fn quantize(&self, llr: f64) -> usize {
        let k = (llr / self.step()).round();
        let h = self.half_bins as f64;
        (k.clamp(-h, h) + h) as usize
    }
}

/// Probability mass function of a sign-corrected LLR on an [`LlrGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LlrDensity {
    grid: LlrGrid,
    finite: Vec<f64>,
    neg_inf: f64,
    pos_inf: f64,
}

impl LlrDensity {
    /// Builds a density from its parts, checking shape and normalization.
    pub fn from_parts(grid: LlrGrid, finite: Vec<f64>, neg_inf: f64, pos_inf: f64) -> Result<Self> {
        if finite.len() != grid.len() {
            return Err(Error::domain(format!(
                "density has {} points, grid has {}",
                finite.len(),
                grid.len()
            )));
        }
        let d = Self {
            grid,
            finite,
            neg_inf,
            pos_inf,
        };
        if !d.all_masses().all(|m| m >= 0.0 && m.is_finite()) {
            return Err(Error::domain("density masses must be finite and nonnegative"));
        }
        let total = d.total_mass();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::domain(format!("density mass is {total}, expected 1")));
        }
        Ok(d)
    }

    /// All mass on one LLR value; infinite values go to the saturation masses.
    pub fn point_mass(grid: LlrGrid, llr: f64) -> Self {
        let mut d = Self::empty(grid);
        if llr == f64::INFINITY {
            d.pos_inf = 1.0;
        } else if llr == f64::NEG_INFINITY {
            d.neg_inf = 1.0;
        } else {
            d.finite[grid.quantize(llr)] = 1.0;
        }
        d
    }

    /// Point mass at zero: the state of an uninformed message.
    pub fn zero(grid: LlrGrid) -> Self {
        Self::point_mass(grid, 0.0)
    }

    /// Gaussian `N(mean, var)` sampled at the grid points and normalized;
    /// tails beyond the grid are dropped.
    pub fn gaussian(grid: LlrGrid, mean: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) {
            return Err(Error::domain(format!("variance must be positive, got {var}")));
        }
        let mut finite: Vec<f64> = (0..grid.len())
            .map(|i| {
                let z = grid.value(i) - mean;
                (-z * z / (2.0 * var)).exp()
            })
            .collect();
        let sum: f64 = finite.iter().sum();
        if sum == 0.0 {
            return Err(Error::domain("Gaussian lies entirely off the grid"));
        }
        finite.iter_mut().for_each(|m| *m /= sum);
        Ok(Self {
            grid,
            finite,
            neg_inf: 0.0,
            pos_inf: 0.0,
        })
    }

    /// Normalized histogram of finite-index counts plus infinite counts.
    pub fn from_counts(grid: LlrGrid, counts: &[u64], neg_inf: u64, pos_inf: u64) -> Result<Self> {
        if counts.len() != grid.len() {
            return Err(Error::domain(format!(
                "histogram has {} bins, grid has {}",
                counts.len(),
                grid.len()
            )));
        }
        let total = counts.iter().sum::<u64>() + neg_inf + pos_inf;
        if total == 0 {
            return Err(Error::domain("histogram is empty"));
        }
        let scale = 1.0 / total as f64;
        Ok(Self {
            grid,
            finite: counts.iter().map(|&c| c as f64 * scale).collect(),
            neg_inf: neg_inf as f64 * scale,
            pos_inf: pos_inf as f64 * scale,
        })
    }

    fn empty(grid: LlrGrid) -> Self {
        Self {
            grid,
            finite: vec![0.0; grid.len()],
            neg_inf: 0.0,
            pos_inf: 0.0,
        }
    }

    /// Rescales to unit mass. Updates raise their inputs' masses to high
    /// powers, so round-off would otherwise compound across iterations.
    fn normalize(mut self) -> Self {
        let total = self.total_mass();
        if total > 0.0 && total != 1.0 {
            let s = 1.0 / total;
            self.finite.iter_mut().for_each(|m| *m *= s);
            self.neg_inf *= s;
            self.pos_inf *= s;
        }
        self
    }

    fn all_masses(&self) -> impl Iterator<Item = f64> + '_ {
        self.finite
            .iter()
            .copied()
            .chain([self.neg_inf, self.pos_inf])
    }

    pub fn grid(&self) -> &LlrGrid {
        &self.grid
    }

    /// Masses of the finite grid points, most negative first.
    pub fn finite(&self) -> &[f64] {
        &self.finite
    }

    pub fn neg_inf(&self) -> f64 {
        self.neg_inf
    }

    pub fn pos_inf(&self) -> f64 {
        self.pos_inf
    }

    pub fn finite_mass(&self) -> f64 {
        self.finite.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.finite_mass() + self.neg_inf + self.pos_inf
    }

    /// Mean of the finite part, conditioned on being finite.
    pub fn finite_mean(&self) -> Option<f64> {
        let mass = self.finite_mass();
        (mass > 0.0).then(|| {
            self.finite
                .iter()
                .enumerate()
                .map(|(i, &m)| m * self.grid.value(i))
                .sum::<f64>()
                / mass
        })
    }

    /// Variance of the finite part, conditioned on being finite.
    pub fn finite_variance(&self) -> Option<f64> {
        let mean = self.finite_mean()?;
        let mass = self.finite_mass();
        Some(
            self.finite
                .iter()
                .enumerate()
                .map(|(i, &m)| {
                    let d = self.grid.value(i) - mean;
                    m * d * d
                })
                .sum::<f64>()
                / mass,
        )
    }

    /// Probability that a hard decision on this message is wrong: mass
    /// below zero plus half the mass at zero.
    pub fn error_probability(&self) -> f64 {
        let h = self.grid.half_bins;
        let below: f64 = self.finite[..h].iter().sum();
        (self.neg_inf + below + 0.5 * self.finite[h]).clamp(0.0, 1.0)
    }

    /// Total-variation distance to `other` on the same grid.
    pub fn total_variation(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(0.5
            * self
                .all_masses()
                .zip(other.all_masses())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_geometry() {
        let g = LlrGrid::default();
        assert_eq!(g.len(), 4097);
        assert_eq!(g.value(2048), 0.0);
        assert_eq!(g.value(4096), 30.0);
        assert_eq!(g.quantize(0.0), 2048);
        assert_eq!(g.quantize(100.0), 4096);
        assert_eq!(g.quantize(-100.0), 0);
        assert_eq!(g.quantize(g.step() * 0.49), 2048);
        assert_eq!(g.quantize(g.step() * 0.51), 2049);
        assert!(LlrGrid::new(0, 30.0).is_err());
        assert!(LlrGrid::new(16, -1.0).is_err());
    }

    #[test]
    fn error_probability_examples() {
        let g = LlrGrid::default();
        assert_eq!(LlrDensity::point_mass(g, f64::INFINITY).error_probability(), 0.0);
        assert_eq!(LlrDensity::point_mass(g, f64::NEG_INFINITY).error_probability(), 1.0);
        assert_eq!(LlrDensity::zero(g).error_probability(), 0.5);
        let sym = LlrDensity::gaussian(g, 0.0, 4.0).unwrap();
        assert!((sym.error_probability() - 0.5).abs() < 1e-12);
        // Phi(-1) = 0.158655...
        let d = LlrDensity::gaussian(g, 1.0, 1.0).unwrap();
        assert!((d.error_probability() - 0.158_655_253_9).abs() < 0.005);
    }

    #[test]
    fn from_parts_validates() {
        let g = LlrGrid::new(4, 1.0).unwrap();
        assert!(LlrDensity::from_parts(g, vec![0.0; 9], 0.5, 0.5).is_ok());
        assert!(LlrDensity::from_parts(g, vec![0.0; 8], 0.5, 0.5).is_err());
        assert!(LlrDensity::from_parts(g, vec![0.0; 9], 0.5, 0.4).is_err());
        assert!(LlrDensity::from_parts(g, vec![0.0; 9], -0.5, 1.5).is_err());
    }

    #[test]
    fn moments_and_counts() {
        let g = LlrGrid::default();
        let d = LlrDensity::gaussian(g, 3.0, 2.0).unwrap();
        assert!((d.finite_mean().unwrap() - 3.0).abs() < 1e-9);
        assert!((d.finite_variance().unwrap() - 2.0).abs() < 1e-4);
        let mut counts = vec![0u64; g.len()];
        counts[g.quantize(1.0)] = 3;
        let h = LlrDensity::from_counts(g, &counts, 0, 1).unwrap();
        assert_eq!(h.pos_inf(), 0.25);
        assert!((h.total_mass() - 1.0).abs() < 1e-15);
        assert!(h.total_variation(&LlrDensity::point_mass(g, 1.0)).unwrap() - 0.25 < 1e-15);
    }
}
