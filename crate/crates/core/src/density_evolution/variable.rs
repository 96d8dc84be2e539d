//! Variable-node density update: the density of a sum of independent LLRs
//! is the convolution of their densities, done with one zero-padded FFT.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{LlrDensity, LlrGrid};
use crate::{Error, Result};

fn plans(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    type Plans = HashMap<usize, (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>;
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, Plans)>> = OnceLock::new();
    let mut guard = CACHE
        .get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    plans
        .entry(len)
        .or_insert_with(|| (planner.plan_fft_forward(len), planner.plan_fft_inverse(len)))
        .clone()
}

/// Density of the sum of `m` independent draws from each `(density, m)`.
///
/// Sums beyond the grid saturate into the `+-inf` masses, and `+inf` plus
/// `-inf` counts as zero. With every multiplicity zero the result is the
/// point mass at zero.
pub fn variable_update(inputs: &[(&LlrDensity, usize)]) -> Result<LlrDensity> {
    let Some((first, _)) = inputs.first() else {
        return Err(Error::domain("variable update needs at least one input"));
    };
    let grid = first.grid;
    for (d, _) in inputs {
        first.same_grid(d)?;
    }
    let active: Vec<(&LlrDensity, usize)> = inputs.iter().copied().filter(|&(_, m)| m > 0).collect();
    let terms: usize = active.iter().map(|&(_, m)| m).sum();
    match terms {
        0 => return Ok(LlrDensity::zero(grid)),
        1 => return Ok(active[0].0.clone()),
        _ => {}
    }

    // P(no -inf), P(no +inf), P(all finite) over all terms; plain products
    // because `powi` does not guarantee a rounding sequence
    let pow = |f: &dyn Fn(&LlrDensity) -> f64| -> f64 {
        active
            .iter()
            .flat_map(|&(d, m)| std::iter::repeat_n(f(d), m))
            .product()
    };
    let no_neg = pow(&|d| (1.0 - d.neg_inf).max(0.0));
    let no_pos = pow(&|d| (1.0 - d.pos_inf).max(0.0));
    let all_finite = pow(&|d| d.finite_mass());

    let mut out = LlrDensity::empty(grid);
    out.pos_inf = (no_neg - all_finite).max(0.0);
    out.neg_inf = (no_pos - all_finite).max(0.0);
    // both infinities present cancel to zero
    let both = (1.0 - no_neg - no_pos + all_finite).max(0.0);
    out.finite[grid.half_bins] += both;

    if all_finite > 0.0 {
        let sum = convolve_finite(&grid, &active, terms);
        let h = grid.half_bins as isize;
        let offset = terms as isize * h;
        let total: f64 = sum.iter().sum();
        let scale = if total > 0.0 { all_finite / total } else { 0.0 };
        for (o, &m) in sum.iter().enumerate() {
            let k = o as isize - offset;
            let m = m * scale;
            if k > h {
                out.pos_inf += m;
            } else if k < -h {
                out.neg_inf += m;
            } else {
                out.finite[(k + h) as usize] += m;
            }
        }
    }
    Ok(out.normalize())
}

/// Linear convolution of the finite parts; index `o` holds the sum value
/// `(o - terms * h) * step`. Negative round-off is clipped.
fn convolve_finite(grid: &LlrGrid, active: &[(&LlrDensity, usize)], terms: usize) -> Vec<f64> {
    let width = terms * (grid.len() - 1) + 1;
    let n = width.next_power_of_two();
    let (fwd, inv) = plans(n);
    let mut acc = vec![Complex::new(1.0, 0.0); n];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for &(d, m) in active {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(&d.finite) {
            b.re = v;
        }
        fwd.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a *= b.powu(m as u32);
        }
    }
    inv.process(&mut acc);
    let scale = 1.0 / n as f64;
    acc[..width].iter().map(|c| (c.re * scale).max(0.0)).collect()
}
