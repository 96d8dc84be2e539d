//! Iterated density updates and the threshold search.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::montecarlo::{McParams, MonteCarloChannel};
use super::{check_update, variable_update, LlrDensity, LlrGrid};
use crate::channel::{snr_db, SignalLevelTable};
use crate::fullgraph::{DATA_SLOTS, DEFAULT_LLR_CLAMP};
use crate::{Error, Result};

/// Regular code degrees; `dc = None` is the uncoded channel, where no check
/// messages exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeCode {
    pub dv: usize,
    pub dc: Option<usize>,
}

impl DeCode {
    pub fn regular(dv: usize, dc: usize) -> Self {
        Self { dv, dc: Some(dc) }
    }

    pub fn uncoded() -> Self {
        Self { dv: 3, dc: None }
    }

    /// Check edges per variable that carry information.
    fn check_edges(&self) -> usize {
        if self.dc.is_some() {
            self.dv
        } else {
            0
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(dc) = self.dc {
            if self.dv == 0 || dc < 2 {
                return Err(Error::domain(format!(
                    "code degrees need dv >= 1 and dc >= 2, got ({}, {dc})",
                    self.dv
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DeCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dc {
            Some(dc) => write!(f, "({},{dc})", self.dv),
            None => write!(f, "({},inf)", self.dv),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeParams {
    pub code: DeCode,
    pub grid: LlrGrid,
    pub table: SignalLevelTable,
    /// Clamp applied to data-node outputs and to infinite side messages.
    pub llr_clamp: f64,
    pub max_iters: usize,
    /// Error probability counted as convergence.
    pub target_pe: f64,
    /// Stagnation: relative change below `stall_rel_change` over
    /// `stall_window` iterations while still above `stall_min_pe`.
    pub stall_window: usize,
    pub stall_rel_change: f64,
    pub stall_min_pe: f64,
    pub mc: McParams,
}

impl DeParams {
    pub fn new(code: DeCode) -> Self {
        Self {
            code,
            grid: LlrGrid::default(),
            table: SignalLevelTable::default(),
            llr_clamp: DEFAULT_LLR_CLAMP,
            max_iters: 200,
            target_pe: 1e-6,
            stall_window: 10,
            stall_rel_change: 1e-3,
            stall_min_pe: 1e-4,
            mc: McParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.code.validate()?;
        self.mc.validate()?;
        if self.max_iters == 0 || self.stall_window == 0 {
            return Err(Error::domain("max_iters and stall_window must be positive"));
        }
        if !(self.target_pe > 0.0 && self.target_pe < 0.5) {
            return Err(Error::domain(format!("target_pe must lie in (0, 0.5), got {}", self.target_pe)));
        }
        if !(self.llr_clamp > 0.0 && self.llr_clamp.is_finite()) {
            return Err(Error::domain(format!("llr_clamp must be positive, got {}", self.llr_clamp)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeOutcome {
    /// Error probability fell below the target.
    Converged,
    /// Error probability settled at a nonzero value.
    Stalled,
    /// Neither happened within the iteration cap.
    MaxIterations,
}

impl DeOutcome {
    pub fn converged(self) -> bool {
        self == DeOutcome::Converged
    }
}

/// Message densities after the last completed iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct DeState {
    pub var_to_check: LlrDensity,
    pub check_to_var: LlrDensity,
    pub var_to_data: LlrDensity,
    pub data_to_var: LlrDensity,
    pub iteration: usize,
    /// Error probability of the var-to-check density; entry 0 is the
    /// uninformed start.
    pub pe: Vec<f64>,
}

impl DeState {
    fn initial(grid: LlrGrid) -> Self {
        let zero = LlrDensity::zero(grid);
        Self {
            pe: vec![zero.error_probability()],
            var_to_check: zero.clone(),
            check_to_var: zero.clone(),
            var_to_data: zero.clone(),
            data_to_var: zero,
            iteration: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DeRun {
    pub sigma2: f64,
    pub outcome: DeOutcome,
    pub state: DeState,
}

/// Evolves all four message densities at noise variance `sigma2`, in the
/// decoder's order: check, var-to-data, data (Monte Carlo), var-to-check.
pub fn evolve(sigma2: f64, params: &DeParams) -> Result<DeRun> {
    params.validate()?;
    let channel = MonteCarloChannel::new(sigma2, &params.table, params.llr_clamp, &params.mc)?;
    let code = params.code;
    let dv = code.check_edges();
    let mut s = DeState::initial(params.grid);

    for it in 1..=params.max_iters {
        s.check_to_var = match code.dc {
            Some(dc) => check_update(&s.var_to_check, dc)?,
            None => LlrDensity::zero(params.grid),
        };
        s.var_to_data = variable_update(&[(&s.check_to_var, dv), (&s.data_to_var, DATA_SLOTS - 1)])?;
        s.data_to_var = channel.update(&s.var_to_data)?.all;
        s.var_to_check = variable_update(&[
            (&s.data_to_var, DATA_SLOTS),
            (&s.check_to_var, dv.saturating_sub(1)),
        ])?;
        s.iteration = it;
        let pe = s.var_to_check.error_probability();
        s.pe.push(pe);

        if pe < params.target_pe {
            return Ok(DeRun {
                sigma2,
                outcome: DeOutcome::Converged,
                state: s,
            });
        }
        if it >= params.stall_window && pe > params.stall_min_pe {
            let before = s.pe[it - params.stall_window];
            if (pe - before).abs() < params.stall_rel_change * before {
                return Ok(DeRun {
                    sigma2,
                    outcome: DeOutcome::Stalled,
                    state: s,
                });
            }
        }
    }
    Ok(DeRun {
        sigma2,
        outcome: DeOutcome::MaxIterations,
        state: s,
    })
}

/// Bisection bracket in noise variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    pub lo: f64,
    pub hi: f64,
    /// Stop once `hi - lo` is below this.
    pub tol: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            lo: 5e-4,
            hi: 0.1,
            tol: 2e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProbe {
    pub sigma2: f64,
    pub outcome: DeOutcome,
    pub iterations: usize,
    pub pe: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub code: DeCode,
    pub sigma2_star: f64,
    pub bracket: (f64, f64),
    /// SNR of `sigma2_star` with the code rate left out (rate 1).
    pub snr_db: f64,
    /// Iteration cap of every probe.
    pub iterations_per_probe: usize,
    pub mc: McParams,
    pub grid: LlrGrid,
    pub search: ThresholdSearch,
    pub probes: Vec<ThresholdProbe>,
}

/// Largest noise variance at which the evolution converges, by bisection.
pub fn find_threshold(params: &DeParams, search: &ThresholdSearch) -> Result<ThresholdResult> {
    find_threshold_with(params, search, |_| {})
}

/// [`find_threshold`], reporting each probe as it completes.
pub fn find_threshold_with(
    params: &DeParams,
    search: &ThresholdSearch,
    mut on_probe: impl FnMut(&ThresholdProbe),
) -> Result<ThresholdResult> {
    params.validate()?;
    if !(search.lo > 0.0 && search.lo < search.hi && search.tol > 0.0) {
        return Err(Error::Search(format!(
            "invalid bracket [{}, {}] with tolerance {}",
            search.lo, search.hi, search.tol
        )));
    }
    let mut probes = Vec::new();
    let mut probe = |sigma2: f64| -> Result<bool> {
        let run = evolve(sigma2, params)?;
        let p = ThresholdProbe {
            sigma2,
            outcome: run.outcome,
            iterations: run.state.iteration,
            pe: run.state.pe,
        };
        on_probe(&p);
        probes.push(p);
        Ok(run.outcome.converged())
    };

    let (mut lo, mut hi) = (search.lo, search.hi);
    if !probe(lo)? {
        return Err(Error::Search(format!("{} does not converge at the lower end {lo}", params.code)));
    }
    if probe(hi)? {
        return Err(Error::Search(format!("{} still converges at the upper end {hi}", params.code)));
    }
    while hi - lo >= search.tol {
        let mid = 0.5 * (lo + hi);
        if probe(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma2_star = 0.5 * (lo + hi);
    Ok(ThresholdResult {
        code: params.code,
        sigma2_star,
        bracket: (lo, hi),
        snr_db: snr_db(sigma2_star, 1.0, &params.table)?,
        iterations_per_probe: params.max_iters,
        mc: params.mc.clone(),
        grid: params.grid,
        search: *search,
        probes,
    })
}
