//! Measured-data node update.
//!
//! A data node observes `r = s[n][b] + w`, where `b` is its central bit and
//! `n` the number of ones among its six neighbours. Because the readback
//! only depends on the neighbour *count*, the sum over the 2^6 neighbour
//! assignments collapses to a sum over `n` weighted by the probability that
//! exactly `n` neighbours are one. That count distribution is a convolution
//! of Bernoulli variables, built here with prefix/suffix products so each
//! leave-one-out distribution costs one more convolution and no division.

use crate::channel::{SignalLevelTable, HEX_DEGREE};

/// Slots per data node: centre then six neighbours.
pub const DATA_SLOTS: usize = HEX_DEGREE + 1;

/// Gaussian likelihood of each of the 14 levels, divided by the largest one.
pub type Likelihoods = [[f64; 2]; HEX_DEGREE + 1];

/// `(P(x=0), P(x=1))` from an LLR `log P(0)/P(1)`.
#[inline]
pub fn llr_to_probs(llr: f64) -> [f64; 2] {
    [1.0 / (1.0 + (-llr).exp()), 1.0 / (1.0 + llr.exp())]
}

#[derive(Clone, Debug)]
pub struct DataKernel {
    levels: Likelihoods,
    inv_two_sigma2: f64,
    clamp: f64,
}

impl DataKernel {
    pub fn new(table: &SignalLevelTable, sigma2: f64, clamp: f64) -> Self {
        Self {
            levels: *table.levels(),
            inv_two_sigma2: 0.5 / sigma2,
            clamp,
        }
    }

    pub fn clamp(&self) -> f64 {
        self.clamp
    }

    /// Likelihoods of `r` under every level, max-normalized so the most
    /// likely level has weight one.
    pub fn likelihoods(&self, r: f64) -> Likelihoods {
        let mut log = [[0.0; 2]; HEX_DEGREE + 1];
        let mut max = f64::NEG_INFINITY;
        for (l, s) in log.iter_mut().zip(&self.levels) {
            for b in 0..2 {
                let d = r - s[b];
                l[b] = -d * d * self.inv_two_sigma2;
                max = max.max(l[b]);
            }
        }
        log.map(|l| l.map(|v| (v - max).exp()))
    }

    fn llr(&self, mu: [f64; 2]) -> f64 {
        (mu[0].ln() - mu[1].ln()).clamp(-self.clamp, self.clamp)
    }

    /// All outgoing messages of one data node.
    ///
    /// `probs[0]` is the centre's incoming message, `probs[1..]` the
    /// neighbours' in clockwise order. Absent neighbours (`present` bit
    /// clear) are fixed to zero and receive no message; their `out` slot is
    /// left untouched.
    pub fn messages_from_probs(
        &self,
        g: &Likelihoods,
        probs: &[[f64; 2]; DATA_SLOTS],
        present: u8,
        out: &mut [f64; DATA_SLOTS],
    ) {
        let bern = |k: usize| -> [f64; 2] {
            if present & (1 << k) != 0 {
                probs[k]
            } else {
                [1.0, 0.0]
            }
        };

        // prefix[k]: count distribution of neighbours 1..=k
        let mut prefix = [[0.0; HEX_DEGREE + 1]; HEX_DEGREE + 1];
        prefix[0][0] = 1.0;
        for k in 1..=HEX_DEGREE {
            let [p0, p1] = bern(k);
            let (prev, cur) = prefix.split_at_mut(k);
            let (prev, cur) = (&prev[k - 1], &mut cur[0]);
            cur[0] = prev[0] * p0;
            for c in 1..=k {
                cur[c] = prev[c] * p0 + prev[c - 1] * p1;
            }
        }
        // suffix[k]: count distribution of neighbours k..=6
        let mut suffix = [[0.0; HEX_DEGREE + 1]; HEX_DEGREE + 2];
        suffix[HEX_DEGREE + 1][0] = 1.0;
        for k in (1..=HEX_DEGREE).rev() {
            let [p0, p1] = bern(k);
            let width = HEX_DEGREE + 1 - k;
            let (cur, next) = suffix.split_at_mut(k + 1);
            let (cur, next) = (&mut cur[k], &next[0]);
            cur[0] = next[0] * p0;
            for c in 1..=width {
                cur[c] = next[c] * p0 + next[c - 1] * p1;
            }
        }

        let full = &prefix[HEX_DEGREE];
        let mut mu = [0.0; 2];
        for (n, &pn) in full.iter().enumerate() {
            mu[0] += pn * g[n][0];
            mu[1] += pn * g[n][1];
        }
        out[0] = self.llr(mu);

        let center = probs[0];
        for k in 1..=HEX_DEGREE {
            if present & (1 << k) == 0 {
                continue;
            }
            // others: neighbours 1..k-1 and k+1..6, at most five
            let (pre, suf) = (&prefix[k - 1], &suffix[k + 1]);
            let mut others = [0.0; HEX_DEGREE];
            for (a, &pa) in pre.iter().enumerate().take(k) {
                if pa == 0.0 {
                    continue;
                }
                for (b, &sb) in suf.iter().enumerate().take(HEX_DEGREE + 1 - k) {
                    others[a + b] += pa * sb;
                }
            }
            let mut mu = [0.0; 2];
            for (m, &pm) in others.iter().enumerate() {
                for b in 0..2 {
                    mu[b] += pm * (center[0] * g[m + b][0] + center[1] * g[m + b][1]);
                }
            }
            out[k] = self.llr(mu);
        }
    }

    /// [`DataKernel::messages_from_probs`] with LLR inputs.
    pub fn messages(
        &self,
        r: f64,
        incoming: &[f64; DATA_SLOTS],
        present: u8,
        out: &mut [f64; DATA_SLOTS],
    ) {
        let g = self.likelihoods(r);
        let probs = incoming.map(llr_to_probs);
        self.messages_from_probs(&g, &probs, present, out);
    }
}

/// Presence mask with the centre and all six neighbours set.
pub const ALL_PRESENT: u8 = (1 << DATA_SLOTS) - 1;
