//! Check-node density update by table lookup.
//!
//! Two sign-corrected inputs `a`, `b` combine to `2 atanh(tanh(a/2)
//! tanh(b/2))`, whose sign is the product of the input signs and whose
//! magnitude depends only on `|a|`, `|b|`. The magnitude is precomputed for
//! every pair of grid magnitudes (with infinity as an extra magnitude), so
//! combining two densities is a pass over the table with no transcendental
//! calls. The `dc - 1` inputs of a check are folded by repeated squaring;
//! the exact combine is associative, so this only reorders quantization.

use std::sync::{Arc, Mutex, OnceLock};

use super::{LlrDensity, LlrGrid};
use crate::{Error, Result};

/// Quantized magnitude of the two-input check combine.
#[derive(Debug)]
pub struct CheckTable {
    grid: LlrGrid,
    /// Magnitudes `0..=h` plus `h + 1` for infinity.
    mags: usize,
    table: Vec<u16>,
}

/// `2 atanh(tanh(a/2) tanh(b/2))` for `a, b >= 0`, in a form that stays
/// accurate when both are large.
fn combine_exact(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo + (-(lo + hi)).exp().ln_1p() - (-(hi - lo)).exp().ln_1p()
}

impl CheckTable {
    pub fn new(grid: LlrGrid) -> Self {
        let h = grid.half_bins();
        let mags = h + 2;
        let step = grid.step();
        let mut table = vec![0u16; mags * mags];
        for i in 0..mags {
            for j in 0..=i {
                let r = if i == h + 1 {
                    j
                } else {
                    let v = combine_exact(i as f64 * step, j as f64 * step);
                    ((v / step).round() as usize).min(j)
                };
                table[i * mags + j] = r as u16;
                table[j * mags + i] = r as u16;
            }
        }
        Self { grid, mags, table }
    }

    /// Shared table for `grid`, built on first use.
    pub fn for_grid(grid: LlrGrid) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<Vec<Arc<CheckTable>>>> = OnceLock::new();
        let mut cache = CACHE
            .get_or_init(Default::default)
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        if let Some(t) = cache.iter().find(|t| t.grid == grid) {
            return t.clone();
        }
        let t = Arc::new(Self::new(grid));
        cache.push(t.clone());
        t
    }

    /// Output magnitude index for input magnitude indices `i`, `j`
    /// (`h + 1` is infinity).
    pub fn lookup(&self, i: usize, j: usize) -> usize {
        self.table[i * self.mags + j] as usize
    }

    /// Density of the combine of independent draws from `a` and `b`.
    pub fn combine(&self, a: &LlrDensity, b: &LlrDensity) -> LlrDensity {
        let (ap, an) = self.split(a);
        let (bp, bn) = self.split(b);
        let nonzero_b: Vec<usize> = (0..self.mags).filter(|&j| bp[j] + bn[j] > 0.0).collect();
        let mut op = vec![0.0; self.mags];
        let mut on = vec![0.0; self.mags];
        for i in 0..self.mags {
            let (pi, ni) = (ap[i], an[i]);
            if pi + ni == 0.0 {
                continue;
            }
            let row = &self.table[i * self.mags..(i + 1) * self.mags];
            for &j in &nonzero_b {
                let r = row[j] as usize;
                op[r] += pi * bp[j] + ni * bn[j];
                on[r] += pi * bn[j] + ni * bp[j];
            }
        }
        self.join(&op, &on)
    }

    /// Positive/negative mass per magnitude; zero is counted as positive.
    fn split(&self, d: &LlrDensity) -> (Vec<f64>, Vec<f64>) {
        let h = self.grid.half_bins();
        let mut pos = vec![0.0; self.mags];
        let mut neg = vec![0.0; self.mags];
        pos[0] = d.finite[h];
        for i in 1..=h {
            pos[i] = d.finite[h + i];
            neg[i] = d.finite[h - i];
        }
        pos[h + 1] = d.pos_inf;
        neg[h + 1] = d.neg_inf;
        (pos, neg)
    }

    fn join(&self, pos: &[f64], neg: &[f64]) -> LlrDensity {
        let h = self.grid.half_bins();
        let mut d = LlrDensity::empty(self.grid);
        d.finite[h] = pos[0] + neg[0];
        for i in 1..=h {
            d.finite[h + i] = pos[i];
            d.finite[h - i] = neg[i];
        }
        d.pos_inf = pos[h + 1];
        d.neg_inf = neg[h + 1];
        d.normalize()
    }
}

/// Density of a check-to-variable message for a degree-`dc` check whose
/// `dc - 1` other inputs are i.i.d. from `input`.
pub fn check_update(input: &LlrDensity, dc: usize) -> Result<LlrDensity> {
    if dc < 2 {
        return Err(Error::domain(format!("check degree must be at least 2, got {dc}")));
    }
    let table = CheckTable::for_grid(input.grid);
    let mut e = dc - 1;
    let mut base = input.clone();
    let mut acc: Option<LlrDensity> = None;
    loop {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => table.combine(&a, &base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = table.combine(&base, &base);
    }
    Ok(acc.expect("dc - 1 >= 1"))
}
