//! Monte Carlo evolution of the data-node density.
//!
//! The data-node update has no closed form on densities, so it is sampled:
//! random pages are written and read back at the probe noise level, each
//! interior data node receives side messages drawn from the var-to-data
//! density (delivered with the true bit's sign), and the outgoing messages
//! of the full-graph kernel are histogrammed after sign correction.
//!
//! Pages, noise and the uniforms behind the side-message draws come from
//! fixed seeded streams. The same uniforms are reused in every iteration
//! and for every noise level, so the sampled update is a deterministic map
//! and comparisons between probes are not blurred by fresh sampling noise.
//! One draw per slot feeds all seven outgoing messages of a node; each
//! message still excludes its own target's input, so its marginal is exact.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LlrDensity;
use crate::channel::{hex_neighbor_slots, readback, BitPage, NoiseModel, SignalLevelTable};
use crate::fullgraph::{llr_to_probs, DataKernel, Likelihoods, ALL_PRESENT, DATA_SLOTS};
use crate::seed::{Role, SeedTree};
use crate::{Error, Result};

/// Bit content of Monte Carlo pages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McPage {
    /// I.i.d. equiprobable bits.
    Random,
    /// Every bit zero; for diagnostics against closed-form densities.
    AllZero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McParams {
    /// Interior data nodes per page; pages carry one extra ring of cells so
    /// every sampled node has all six neighbours.
    pub page_rows: usize,
    pub page_cols: usize,
    /// Message samples per update; pages are added until this is reached.
    pub samples: usize,
    /// Smallest acceptable `samples`.
    pub min_samples: usize,
    pub seed: u64,
    pub page: McPage,
}

impl Default for McParams {
    fn default() -> Self {
        Self {
            page_rows: 256,
            page_cols: 256,
            samples: 1_000_000,
            min_samples: 100_000,
            seed: 1,
            page: McPage::Random,
        }
    }
}

impl McParams {
    pub fn validate(&self) -> Result<()> {
        if self.page_rows == 0 || self.page_cols == 0 {
            return Err(Error::domain("Monte Carlo page must be nonempty"));
        }
        if self.samples < self.min_samples {
            return Err(Error::Diagnostics(format!(
                "{} samples cannot fill the histogram; at least {} required",
                self.samples, self.min_samples
            )));
        }
        Ok(())
    }

    fn samples_per_page(&self) -> usize {
        self.page_rows * self.page_cols * DATA_SLOTS
    }

    pub fn pages(&self) -> usize {
        self.samples.div_ceil(self.samples_per_page()).max(1)
    }

    /// Samples actually produced per update.
    pub fn total_samples(&self) -> usize {
        self.pages() * self.samples_per_page()
    }
}

/// One sampled data node: likelihoods of its readback and the true bits of
/// its seven slots (bit `k` for slot `k`).
#[derive(Clone, Debug)]
struct Node {
    likelihoods: Likelihoods,
    bits: u8,
}

/// Readback pages at one noise level, prepared for repeated updates.
#[derive(Clone, Debug)]
pub struct MonteCarloChannel {
    params: McParams,
    kernel: DataKernel,
    /// Nodes of each page row, in page-major order.
    rows: Vec<Vec<Node>>,
}

/// Histograms of one Monte Carlo update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McHistograms {
    /// All data-to-variable messages.
    pub all: LlrDensity,
    /// Messages to the centre variable only.
    pub center: LlrDensity,
    pub samples: u64,
}

impl MonteCarloChannel {
    pub fn new(sigma2: f64, table: &SignalLevelTable, clamp: f64, params: &McParams) -> Result<Self> {
        params.validate()?;
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("noise variance must be positive, got {sigma2}")));
        }
        let seeds = SeedTree::new(params.seed);
        let kernel = DataKernel::new(table, sigma2, clamp);
        let (rows, cols) = (params.page_rows + 2, params.page_cols + 2);

        let mut out = Vec::with_capacity(params.pages() * params.page_rows);
        for p in 0..params.pages() as u64 {
            let page = match params.page {
                McPage::Random => BitPage::random(rows, cols, &mut seeds.rng(Role::MonteCarloPage, 0, p))?,
                McPage::AllZero => BitPage::zeros(rows, cols)?,
            };
            let noise = NoiseModel::new(sigma2, seeds.derive(Role::MonteCarloNoise, 0, p))?;
            let rb = readback(&page, table, &noise);
            for i in 1..=params.page_rows {
                let row = (1..=params.page_cols)
                    .map(|j| {
                        let mut bits = page.get((i, j));
                        let slots = hex_neighbor_slots((i, j), (rows, cols));
                        for (s, nb) in slots.iter().enumerate() {
                            let nb = nb.expect("interior node");
                            bits |= page.get(nb) << (s + 1);
                        }
                        Node {
                            likelihoods: kernel.likelihoods(rb.get((i, j))),
                            bits,
                        }
                    })
                    .collect();
                out.push(row);
            }
        }
        Ok(Self {
            params: params.clone(),
            kernel,
            rows: out,
        })
    }

    pub fn params(&self) -> &McParams {
        &self.params
    }

    /// Sampled data-to-variable density given the var-to-data density.
    pub fn update(&self, var_to_data: &LlrDensity) -> Result<McHistograms> {
        let grid = *var_to_data.grid();
        let sampler = Sampler::new(var_to_data, self.kernel.clamp());
        let seeds = SeedTree::new(self.params.seed);
        let bins = grid.len();

        let (all, center) = self
            .rows
            .par_iter()
            .enumerate()
            .fold(
                || (vec![0u64; bins], vec![0u64; bins]),
                |(mut all, mut center), (r, row)| {
                    let mut rng = seeds.rng(Role::MonteCarloMessages, 0, r as u64);
                    let mut out = [0.0; DATA_SLOTS];
                    for node in row {
                        let probs: [[f64; 2]; DATA_SLOTS] = std::array::from_fn(|k| {
                            let p = sampler.draw(rng.random::<f64>());
                            if node.bits >> k & 1 == 1 {
                                [p[1], p[0]]
                            } else {
                                p
                            }
                        });
                        self.kernel
                            .messages_from_probs(&node.likelihoods, &probs, ALL_PRESENT, &mut out);
                        for (k, &l) in out.iter().enumerate() {
                            let corrected = if node.bits >> k & 1 == 1 { -l } else { l };
                            let idx = grid.quantize(corrected);
                            all[idx] += 1;
                            if k == 0 {
                                center[idx] += 1;
                            }
                        }
                    }
                    (all, center)
                },
            )
            .reduce(
                || (vec![0u64; bins], vec![0u64; bins]),
                |(mut a1, mut c1), (a2, c2)| {
                    a1.iter_mut().zip(&a2).for_each(|(x, y)| *x += y);
                    c1.iter_mut().zip(&c2).for_each(|(x, y)| *x += y);
                    (a1, c1)
                },
            );
        let samples: u64 = all.iter().sum();
        if (samples as usize) < self.params.min_samples {
            return Err(Error::Diagnostics(format!(
                "only {samples} samples, at least {} required",
                self.params.min_samples
            )));
        }
        Ok(McHistograms {
            all: LlrDensity::from_counts(grid, &all, 0, 0)?,
            center: LlrDensity::from_counts(grid, &center, 0, 0)?,
            samples,
        })
    }
}

/// Inverse-CDF sampling of a density, returning `(P(0), P(1))` of the
/// drawn sign-corrected message. Infinite values are replaced by `+-clamp`.
struct Sampler {
    cdf: Vec<f64>,
    probs: Vec<[f64; 2]>,
    guide: Vec<u32>,
}

impl Sampler {
    fn new(d: &LlrDensity, clamp: f64) -> Self {
        let grid = d.grid();
        // outcomes: -inf, finite points, +inf
        let masses: Vec<f64> = std::iter::once(d.neg_inf())
            .chain(d.finite().iter().copied())
            .chain(std::iter::once(d.pos_inf()))
            .collect();
        let probs: Vec<[f64; 2]> = (0..masses.len())
            .map(|o| {
                let v = match o {
                    0 => -clamp,
                    o if o == masses.len() - 1 => clamp,
                    o => grid.value(o - 1).clamp(-clamp, clamp),
                };
                llr_to_probs(v)
            })
            .collect();
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = masses
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        // guard the top against round-off
        let last = masses.iter().rposition(|&m| m > 0.0).unwrap_or(0);
        cdf[last..].iter_mut().for_each(|c| *c = f64::INFINITY);

        let g = masses.len();
        let mut guide = Vec::with_capacity(g);
        let mut o = 0usize;
        for b in 0..g {
            let u = b as f64 / g as f64;
            while cdf[o] <= u {
                o += 1;
            }
            guide.push(o as u32);
        }
        Self { cdf, probs, guide }
    }

    #[inline]
    fn draw(&self, u: f64) -> [f64; 2] {
        let g = self.guide.len();
        let mut o = self.guide[((u * g as f64) as usize).min(g - 1)] as usize;
        while self.cdf[o] <= u {
            o += 1;
        }
        self.probs[o]
    }
}

/// One Monte Carlo data-node update from scratch.
pub fn data_update_mc(
    var_to_data: &LlrDensity,
    sigma2: f64,
    table: &SignalLevelTable,
    clamp: f64,
    params: &McParams,
) -> Result<McHistograms> {
    MonteCarloChannel::new(sigma2, table, clamp, params)?.update(var_to_data)
}
