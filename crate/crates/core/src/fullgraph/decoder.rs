use serde::{Deserialize, Serialize};

use super::kernel::{llr_to_probs, DataKernel, DATA_SLOTS};
use super::FullGraph;
use crate::channel::{ReadbackPage, SignalLevelTable};
use crate::ldpc::{PageMapping, ParityCheckMatrix};
use crate::{Error, Result};

/// Messages are kept inside `+-DEFAULT_LLR_CLAMP`; error probability there
/// is below 1e-13.
pub const DEFAULT_LLR_CLAMP: f64 = 30.0;
/// Above this the probabilities fed to the data-node sums can underflow.
const MAX_LLR_CLAMP: f64 = 50.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoderParams {
    pub max_iters: usize,
    pub llr_clamp: f64,
    /// Noise variance assumed by the data-node likelihoods.
    pub sigma2: f64,
    pub table: SignalLevelTable,
}

impl DecoderParams {
    pub fn new(sigma2: f64, max_iters: usize) -> Result<Self> {
        let p = Self {
            max_iters,
            llr_clamp: DEFAULT_LLR_CLAMP,
            sigma2,
            table: SignalLevelTable::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::domain("max_iters must be at least 1"));
        }
        if !(self.llr_clamp > 0.0 && self.llr_clamp <= MAX_LLR_CLAMP) {
            return Err(Error::domain(format!(
                "llr_clamp must lie in (0, {MAX_LLR_CLAMP}], got {}",
                self.llr_clamp
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        Ok(())
    }

    pub fn kernel(&self) -> DataKernel {
        DataKernel::new(&self.table, self.sigma2, self.llr_clamp)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Hard decisions in codeword order.
    pub decisions: Vec<u8>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Pseudo-posterior LLRs after the last iteration.
    pub posterior: Vec<f64>,
}

/// Per-iteration diagnostics, collected only on request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub unsatisfied_checks: usize,
    /// Decision errors against the transmitted word, when it was supplied.
    pub bit_errors: Option<usize>,
    /// Posterior LLR counts in [`POSTERIOR_BINS`] equal bins over
    /// `[-POSTERIOR_RANGE, POSTERIOR_RANGE]`; outliers land in the end bins.
    pub posterior_histogram: Vec<u64>,
}

pub const POSTERIOR_BINS: usize = 16;
pub const POSTERIOR_RANGE: f64 = 64.0;

fn histogram(posterior: &[f64]) -> Vec<u64> {
    let mut h = vec![0u64; POSTERIOR_BINS];
    let width = 2.0 * POSTERIOR_RANGE / POSTERIOR_BINS as f64;
    for &q in posterior {
        let b = ((q + POSTERIOR_RANGE) / width).floor();
        h[(b.max(0.0) as usize).min(POSTERIOR_BINS - 1)] += 1;
    }
    h
}

/// All edge messages of one decode, as LLRs.
///
/// Check-edge arrays are indexed like [`FullGraph::check_edge_range`];
/// data-edge arrays by `d * DATA_SLOTS + slot`.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState {
    pub var_to_check: Vec<f64>,
    pub check_to_var: Vec<f64>,
    pub var_to_data: Vec<f64>,
    pub data_to_var: Vec<f64>,
    pub iteration: usize,
}

impl MessageState {
    /// Uniform start: every message is LLR 0.
    pub fn new(graph: &FullGraph) -> Self {
        let e = graph.num_check_edges();
        let d = graph.n() * DATA_SLOTS;
        Self {
            var_to_check: vec![0.0; e],
            check_to_var: vec![0.0; e],
            var_to_data: vec![0.0; d],
            data_to_var: vec![0.0; d],
            iteration: 0,
        }
    }

    /// Each check gets the sum of every data message and every other check
    /// message at the variable.
    pub fn var_to_check_update(&mut self, graph: &FullGraph, clamp: f64) {
        for v in 0..graph.n() {
            let from_data: f64 = graph.var_data_edges(v).iter().map(|&e| self.data_to_var[e as usize]).sum();
            let checks = graph.var_check_edges(v);
            for &target in checks {
                let others: f64 = checks
                    .iter()
                    .filter(|&&e| e != target)
                    .map(|&e| self.check_to_var[e as usize])
                    .sum();
                self.var_to_check[target as usize] = (from_data + others).clamp(-clamp, clamp);
            }
        }
    }

    /// tanh rule for even-parity checks.
    pub fn check_to_var_update(&mut self, graph: &FullGraph, clamp: f64) {
        let limit = (clamp / 2.0).tanh();
        let mut t = Vec::new();
        let mut suffix = Vec::new();
        for c in 0..graph.num_checks() {
            let range = graph.check_edge_range(c);
            t.clear();
            t.extend(self.var_to_check[range.clone()].iter().map(|&l| (l / 2.0).tanh()));
            suffix.clear();
            suffix.resize(t.len() + 1, 1.0);
            for i in (0..t.len()).rev() {
                suffix[i] = suffix[i + 1] * t[i];
            }
            let mut prefix = 1.0;
            for (i, e) in range.enumerate() {
                let p = (prefix * suffix[i + 1]).clamp(-limit, limit);
                self.check_to_var[e] = 2.0 * p.atanh();
                prefix *= t[i];
            }
        }
    }

    /// Each data node gets the sum of every check message and every other
    /// data message at the variable.
    pub fn var_to_data_update(&mut self, graph: &FullGraph, clamp: f64) {
        for v in 0..graph.n() {
            let from_checks: f64 = graph.var_check_edges(v).iter().map(|&e| self.check_to_var[e as usize]).sum();
            let data = graph.var_data_edges(v);
            for &target in data {
                let others: f64 = data
                    .iter()
                    .filter(|&&e| e != target)
                    .map(|&e| self.data_to_var[e as usize])
                    .sum();
                self.var_to_data[target as usize] = (from_checks + others).clamp(-clamp, clamp);
            }
        }
    }

    pub fn data_to_var_update(&mut self, graph: &FullGraph, received: &[f64], kernel: &DataKernel) {
        let mut probs = [[1.0, 0.0]; DATA_SLOTS];
        for d in 0..graph.n() {
            let present = graph.data_node_present(d);
            let base = d * DATA_SLOTS;
            for (s, p) in probs.iter_mut().enumerate() {
                *p = if present & (1 << s) != 0 {
                    llr_to_probs(self.var_to_data[base + s])
                } else {
                    [1.0, 0.0]
                };
            }
            let g = kernel.likelihoods(received[d]);
            let out: &mut [f64; DATA_SLOTS] = (&mut self.data_to_var[base..base + DATA_SLOTS])
                .try_into()
                .expect("slot block");
            kernel.messages_from_probs(&g, &probs, present, out);
        }
    }

    /// Pseudo-posterior LLR of every variable: all data and check messages.
    pub fn posteriors(&self, graph: &FullGraph) -> Vec<f64> {
        (0..graph.n())
            .map(|v| {
                let d: f64 = graph.var_data_edges(v).iter().map(|&e| self.data_to_var[e as usize]).sum();
                let c: f64 = graph.var_check_edges(v).iter().map(|&e| self.check_to_var[e as usize]).sum();
                d + c
            })
            .collect()
    }
}

/// Bit 1 exactly when the posterior favours it; ties decide 0.
pub fn decide(posterior: &[f64]) -> Vec<u8> {
    posterior.iter().map(|&q| (q < 0.0) as u8).collect()
}

impl FullGraph {
    fn check_inputs(&self, received: &ReadbackPage, params: &DecoderParams) -> Result<()> {
        params.validate()?;
        if received.dims() != self.dims {
            return Err(Error::domain(format!(
                "readback is {}x{} but the graph page is {}x{}",
                received.rows(),
                received.cols(),
                self.dims.0,
                self.dims.1
            )));
        }
        Ok(())
    }

    /// Full-graph decoding with early stop on a zero syndrome.
    pub fn decode(&self, received: &ReadbackPage, params: &DecoderParams) -> Result<DecodeResult> {
        self.check_inputs(received, params)?;
        Ok(self.run(received.values(), params, true, None, false).0)
    }

    /// Decoding with a per-iteration trace; `truth` (codeword order) adds
    /// bit-error counts.
    pub fn decode_traced(
        &self,
        received: &ReadbackPage,
        params: &DecoderParams,
        truth: Option<&[u8]>,
    ) -> Result<(DecodeResult, Vec<IterationTrace>)> {
        self.check_inputs(received, params)?;
        Ok(self.run(received.values(), params, true, truth, true))
    }

    /// Channel-only detection: check nodes are ignored and exactly
    /// `max_iters` iterations run.
    pub fn detect(&self, received: &ReadbackPage, params: &DecoderParams) -> Result<DecodeResult> {
        self.check_inputs(received, params)?;
        Ok(self.run(received.values(), params, false, None, false).0)
    }

    pub fn detect_traced(
        &self,
        received: &ReadbackPage,
        params: &DecoderParams,
        truth: Option<&[u8]>,
    ) -> Result<(DecodeResult, Vec<IterationTrace>)> {
        self.check_inputs(received, params)?;
        Ok(self.run(received.values(), params, false, truth, true))
    }

    fn run(
        &self,
        received: &[f64],
        params: &DecoderParams,
        coded: bool,
        truth: Option<&[u8]>,
        trace: bool,
    ) -> (DecodeResult, Vec<IterationTrace>) {
        let kernel = params.kernel();
        let clamp = params.llr_clamp;
        let coded = coded && self.has_code();
        let mut state = MessageState::new(self);
        let mut traces = Vec::new();
        let mut posterior = Vec::new();
        let mut decisions = Vec::new();
        let mut converged = false;

        for it in 1..=params.max_iters {
            state.iteration = it;
            if coded {
                state.var_to_check_update(self, clamp);
                state.check_to_var_update(self, clamp);
            }
            state.var_to_data_update(self, clamp);
            state.data_to_var_update(self, received, &kernel);
            posterior = state.posteriors(self);
            decisions = decide(&posterior);

            let unsatisfied = if coded { self.unsatisfied_checks(&decisions) } else { 0 };
            if trace {
                traces.push(IterationTrace {
                    iteration: it,
                    unsatisfied_checks: unsatisfied,
                    bit_errors: truth.map(|t| t.iter().zip(&decisions).filter(|(a, b)| a != b).count()),
                    posterior_histogram: histogram(&posterior),
                });
            }
            if coded && unsatisfied == 0 {
                converged = true;
                break;
            }
        }
        debug_assert!(!converged || self.satisfies_checks(&decisions));
        (
            DecodeResult {
                decisions,
                converged,
                iterations_used: state.iteration,
                posterior,
            },
            traces,
        )
    }
}

/// Decodes a page written row-major from codewords of `h`.
pub fn decode(received: &ReadbackPage, h: &ParityCheckMatrix, params: &DecoderParams) -> Result<DecodeResult> {
    let mapping = PageMapping::row_major(h.n(), received.dims())?;
    FullGraph::new(h, &mapping)?.decode(received, params)
}

/// Uncoded detection of a row-major page.
pub fn detect_uncoded(received: &ReadbackPage, params: &DecoderParams) -> Result<DecodeResult> {
    let (rows, cols) = received.dims();
    let mapping = PageMapping::row_major(rows * cols, (rows, cols))?;
    FullGraph::channel_only(&mapping).detect(received, params)
}
