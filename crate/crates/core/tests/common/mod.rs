//! Independent references shared by the integration tests.
//!
//! Everything here is written the slow, literal way: messages are pairs of
//! probabilities, data nodes enumerate every assignment of their
//! neighbourhood, and the graph is rebuilt from `H` and the hexagonal
//! neighbour rule rather than taken from the decoder.

#![allow(dead_code)]

use twodos::channel::{hex_neighbor_slots, SignalLevelTable, HEX_DEGREE};
use twodos::ldpc::ParityCheckMatrix;

/// Unnormalized message `(mu(0), mu(1))`.
pub type Pair = [f64; 2];

pub fn normalize(p: Pair) -> Pair {
    let s = p[0] + p[1];
    [p[0] / s, p[1] / s]
}

pub fn llr(p: Pair) -> f64 {
    p[0].ln() - p[1].ln()
}

pub fn from_llr(l: f64) -> Pair {
    normalize([1.0, (-l).exp()])
}

/// Caps the likelihood ratio at `e^clamp` either way.
pub fn clamp(p: Pair, limit: f64) -> Pair {
    let p = normalize(p);
    let r = limit.exp();
    if p[0] > p[1] * r {
        normalize([1.0, 1.0 / r])
    } else if p[1] > p[0] * r {
        normalize([1.0 / r, 1.0])
    } else {
        p
    }
}

fn mul(a: Pair, b: Pair) -> Pair {
    normalize([a[0] * b[0], a[1] * b[1]])
}

/// `P(r | neighbourhood)` up to a constant, for every assignment of the
/// centre (bit 0 of `assign`) and the six neighbour slots (bits 1..=6).
fn gauss(table: &SignalLevelTable, sigma2: f64, r: f64, assign: u32) -> f64 {
    let centre = (assign & 1) as u8;
    let ones = (1..=HEX_DEGREE).filter(|k| assign >> k & 1 == 1).count();
    let d = r - table.level(ones, centre);
    (-d * d / (2.0 * sigma2)).exp()
}

/// Literal data-node update: the message to slot `target` sums the channel
/// likelihood over all assignments of the other slots, weighted by their
/// incoming messages. Absent slots (`present` bit clear) hold bit 0.
pub fn data_message_enumerated(
    table: &SignalLevelTable,
    sigma2: f64,
    r: f64,
    incoming: &[Pair; HEX_DEGREE + 1],
    present: u8,
    target: usize,
) -> Pair {
    let mut out = [0.0; 2];
    for assign in 0u32..(1 << (HEX_DEGREE + 1)) {
        if (0..=HEX_DEGREE).any(|k| present >> k & 1 == 0 && assign >> k & 1 == 1) {
            continue;
        }
        let mut w = gauss(table, sigma2, r, assign);
        for (k, m) in incoming.iter().enumerate() {
            if k != target && present >> k & 1 == 1 {
                w *= m[(assign >> k & 1) as usize];
            }
        }
        out[(assign >> target & 1) as usize] += w;
    }
    out
}

/// Probability-domain sum-product on the joint code/channel graph of a
/// row-major page, with the same four-phase schedule as the decoder.
pub struct ReferenceDecoder {
    n: usize,
    sigma2: f64,
    clamp: f64,
    table: SignalLevelTable,
    /// Per data node: (variable per slot or None).
    data: Vec<[Option<usize>; HEX_DEGREE + 1]>,
    checks: Vec<Vec<usize>>,
    v2c: Vec<Vec<Pair>>,
    c2v: Vec<Vec<Pair>>,
    v2d: Vec<[Pair; HEX_DEGREE + 1]>,
    d2v: Vec<[Pair; HEX_DEGREE + 1]>,
}

const UNIFORM: Pair = [0.5, 0.5];

impl ReferenceDecoder {
    /// `h = None` runs the channel alone.
    pub fn new(h: Option<&ParityCheckMatrix>, dims: (usize, usize), sigma2: f64, clamp: f64) -> Self {
        let (rows, cols) = dims;
        let n = rows * cols;
        let data: Vec<_> = (0..n)
            .map(|d| {
                let mut slots = [None; HEX_DEGREE + 1];
                slots[0] = Some(d);
                for (s, nb) in hex_neighbor_slots((d / cols, d % cols), dims).iter().enumerate() {
                    slots[s + 1] = nb.map(|(i, j)| i * cols + j);
                }
                slots
            })
            .collect();
        let checks: Vec<Vec<usize>> = h
            .map(|h| h.rows().iter().map(|r| r.iter().map(|&v| v as usize).collect()).collect())
            .unwrap_or_default();
        Self {
            n,
            sigma2,
            clamp,
            table: SignalLevelTable::default(),
            v2c: checks.iter().map(|c| vec![UNIFORM; c.len()]).collect(),
            c2v: checks.iter().map(|c| vec![UNIFORM; c.len()]).collect(),
            v2d: vec![[UNIFORM; HEX_DEGREE + 1]; n],
            d2v: vec![[UNIFORM; HEX_DEGREE + 1]; n],
            data,
            checks,
        }
    }

    /// Incoming messages at each variable: (data node, slot) and (check, position).
    fn incidences(&self) -> (Vec<Vec<(usize, usize)>>, Vec<Vec<(usize, usize)>>) {
        let mut by_data = vec![Vec::new(); self.n];
        for (d, slots) in self.data.iter().enumerate() {
            for (s, v) in slots.iter().enumerate() {
                if let Some(v) = v {
                    by_data[*v].push((d, s));
                }
            }
        }
        let mut by_check = vec![Vec::new(); self.n];
        for (c, vars) in self.checks.iter().enumerate() {
            for (i, &v) in vars.iter().enumerate() {
                by_check[v].push((c, i));
            }
        }
        (by_data, by_check)
    }

    /// One iteration; returns posterior LLRs.
    pub fn iterate(&mut self, received: &[f64]) -> Vec<f64> {
        let (by_data, by_check) = self.incidences();
        let coded = !self.checks.is_empty();

        if coded {
            // variables to checks
            for v in 0..self.n {
                for &(c, i) in &by_check[v] {
                    let mut m = UNIFORM;
                    for &(d, s) in &by_data[v] {
                        m = mul(m, self.d2v[d][s]);
                    }
                    for &(c2, i2) in &by_check[v] {
                        if (c2, i2) != (c, i) {
                            m = mul(m, self.c2v[c2][i2]);
                        }
                    }
                    self.v2c[c][i] = clamp(m, self.clamp);
                }
            }
            // checks to variables: parity of the others by direct recursion
            for (c, vars) in self.checks.iter().enumerate() {
                for i in 0..vars.len() {
                    let (mut even, mut odd) = (1.0, 0.0);
                    for (j, q) in self.v2c[c].iter().enumerate() {
                        if j != i {
                            (even, odd) = (even * q[0] + odd * q[1], even * q[1] + odd * q[0]);
                        }
                    }
                    self.c2v[c][i] = clamp([even, odd], self.clamp);
                }
            }
        }
        // variables to data nodes
        for v in 0..self.n {
            for &(d, s) in &by_data[v] {
                let mut m = UNIFORM;
                for &(c, i) in &by_check[v] {
                    m = mul(m, self.c2v[c][i]);
                }
                for &(d2, s2) in &by_data[v] {
                    if (d2, s2) != (d, s) {
                        m = mul(m, self.d2v[d2][s2]);
                    }
                }
                self.v2d[d][s] = clamp(m, self.clamp);
            }
        }
        // data nodes to variables
        for d in 0..self.n {
            let present = self.data[d]
                .iter()
                .enumerate()
                .fold(0u8, |acc, (s, v)| acc | ((v.is_some() as u8) << s));
            for s in 0..=HEX_DEGREE {
                if self.data[d][s].is_some() {
                    let m = data_message_enumerated(&self.table, self.sigma2, received[d], &self.v2d[d], present, s);
                    self.d2v[d][s] = clamp(m, self.clamp);
                }
            }
        }
        // posteriors
        (0..self.n)
            .map(|v| {
                let mut l = 0.0;
                for &(d, s) in &by_data[v] {
                    l += llr(self.d2v[d][s]);
                }
                for &(c, i) in &by_check[v] {
                    l += llr(self.c2v[c][i]);
                }
                l
            })
            .collect()
    }
}

/// Largest relative LLR error of the decoder's data-node kernel against
/// [`data_message_enumerated`] over `sets` random nodes (random noise,
/// observation, incoming messages and boundary shape).
pub fn kernel_vs_enumeration(sets: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    use twodos::fullgraph::{DataKernel, ALL_PRESENT, DATA_SLOTS};

    let table = SignalLevelTable::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for set in 0..sets {
        let sigma2 = 10f64.powf(rng.random_range(-3.0..-1.0));
        let r = rng.random_range(-0.2..1.2);
        let incoming: [f64; DATA_SLOTS] = std::array::from_fn(|_| rng.random_range(-12.0..12.0));
        // every fourth set is a boundary node with some neighbours missing
        let present = if set % 4 == 0 {
            (rng.random::<u8>() & ALL_PRESENT) | 1
        } else {
            ALL_PRESENT
        };
        let kernel = DataKernel::new(&table, sigma2, f64::INFINITY);
        let mut out = [0.0; DATA_SLOTS];
        kernel.messages(r, &incoming, present, &mut out);
        let probs = incoming.map(from_llr);
        for target in 0..DATA_SLOTS {
            if present >> target & 1 == 0 {
                continue;
            }
            let want = llr(data_message_enumerated(&table, sigma2, r, &probs, present, target));
            let err = (out[target] - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
        }
    }
    worst
}

/// Outcome of comparing the LLR decoder with [`ReferenceDecoder`].
#[derive(Debug, Default)]
pub struct DualDomain {
    pub instances: usize,
    pub decision_mismatches: usize,
    pub max_llr_diff: f64,
}

/// Runs `instances` random small codes (and some uncoded pages) through
/// both decoders and compares posteriors after the decoder's iterations.
pub fn dual_domain(instances: usize, seed: u64) -> DualDomain {
    use rand::{Rng, SeedableRng};
    use twodos::channel::{readback, NoiseModel};
    use twodos::fullgraph::{DecoderParams, FullGraph, DEFAULT_LLR_CLAMP};
    use twodos::ldpc::{generate_regular, CodeParams, Encoder, PageMapping};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = DualDomain::default();
    for inst in 0..instances {
        let coded = inst % 5 != 4;
        let (rows, cols) = [(6, 10), (8, 12), (10, 15), (12, 16), (10, 20)][inst % 5];
        let n = rows * cols;
        let sigma2 = rng.random_range(0.01..0.06);
        let iters = rng.random_range(1..=5);
        let params = DecoderParams::new(sigma2, iters).unwrap();

        let (h, bits) = if coded {
            let h = generate_regular(&CodeParams::new(3, 6, n, rng.random()).unwrap()).unwrap();
            let enc = Encoder::new(&h);
            let msg: Vec<u8> = (0..enc.k()).map(|_| rng.random::<bool>() as u8).collect();
            let cw = enc.encode(&msg).unwrap();
            (Some(h), cw)
        } else {
            (None, (0..n).map(|_| rng.random::<bool>() as u8).collect())
        };
        let mapping = PageMapping::row_major(n, (rows, cols)).unwrap();
        let page = mapping.to_page(&bits).unwrap();
        let rb = readback(&page, &params.table, &NoiseModel::new(sigma2, rng.random()).unwrap());

        let result = match &h {
            Some(h) => FullGraph::new(h, &mapping).unwrap().decode(&rb, &params).unwrap(),
            None => FullGraph::channel_only(&mapping).detect(&rb, &params).unwrap(),
        };
        let mut reference = ReferenceDecoder::new(h.as_ref(), (rows, cols), sigma2, DEFAULT_LLR_CLAMP);
        let mut post = Vec::new();
        for _ in 0..result.iterations_used {
            post = reference.iterate(rb.values());
        }
        for (a, b) in result.posterior.iter().zip(&post) {
            report.max_llr_diff = report.max_llr_diff.max((a - b).abs());
            if (*a < 0.0) != (*b < 0.0) {
                report.decision_mismatches += 1;
            }
        }
        report.instances += 1;
    }
    report
}

/// Published signal levels: `(n, s_n0, s_n1)`.
pub const TABLE_I: [(usize, f64, f64); 7] = [
    (0, 0.95, 0.50),
    (1, 0.80, 0.35),
    (2, 0.70, 0.30),
    (3, 0.55, 0.20),
    (4, 0.45, 0.15),
    (5, 0.35, 0.10),
    (6, 0.25, 0.05),
];

/// Published thresholds: `(dv, dc or None for uncoded, sigma2*, SNR dB at rate 1)`.
pub const TABLE_II: [(usize, Option<usize>, f64, f64); 13] = [
    (3, Some(3), 0.0670, 1.7270),
    (3, Some(4), 0.0436, 3.5929),
    (3, Some(5), 0.0283, 5.4699),
    (3, Some(6), 0.0215, 6.6633),
    (3, Some(9), 0.0140, 8.5264),
    (3, Some(12), 0.0117, 9.3059),
    (3, Some(15), 0.0103, 9.8593),
    (3, Some(30), 0.0061, 12.1344),
    (3, Some(60), 0.0035, 14.5470),
    (3, Some(90), 0.0030, 15.2165),
    (3, Some(120), 0.0027, 15.6741),
    (3, Some(150), 0.0025, 16.0083),
    (3, None, 0.0018, 17.4342),
];

/// Number of (n, central bit, neighbour pattern) configurations whose
/// noiseless intensity differs from [`TABLE_I`], checked on an interior cell
/// for every one of the 2^6 neighbour patterns and both central bits.
pub fn table_one_mismatches() -> usize {
    use twodos::channel::{hex_neighbors, noiseless_intensity, BitPage};
    let table = SignalLevelTable::default();
    let centre = (3, 3);
    let nbrs = hex_neighbors(centre, (7, 7)).unwrap();
    let mut bad = 0;
    for pattern in 0u32..64 {
        for b in 0..2u8 {
            let mut page = BitPage::zeros(7, 7).unwrap();
            page.set(centre, b == 1);
            for (k, &p) in nbrs.neighbors.iter().enumerate() {
                page.set(p, pattern >> k & 1 == 1);
            }
            let (_, s0, s1) = TABLE_I[pattern.count_ones() as usize];
            let want = if b == 0 { s0 } else { s1 };
            if noiseless_intensity(&page, centre, &table).unwrap() != want {
                bad += 1;
            }
        }
    }
    bad
}
