//! Experiment runner: BER sweeps, threshold searches, code generation and
//! result files.
//!
//! Every random stream is derived from the master seed by label (sweep
//! point, frame), never by worker. Frames run in fixed-size batches and the
//! stop rule is evaluated only between batches, so a sweep produces the same
//! counts on any number of threads.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{readback, sigma2_from_snr_db, snr_db, BitPage, NoiseModel, SignalLevelTable};
use crate::density_evolution::{
    find_threshold_with, DeCode, DeParams, McParams, ThresholdProbe, ThresholdResult,
    ThresholdSearch,
};
use crate::fullgraph::{DecoderParams, FullGraph, DEFAULT_LLR_CLAMP};
use crate::ldpc::{
    generate_regular, near_square_dims, read_alist, write_alist, CodeMetadata, CodeParams, Encoder,
    PageMapping, ParityCheckMatrix,
};
use crate::seed::{Role, SeedTree};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    BerSweep,
    Threshold,
    GenCode,
    DetectUncoded,
}

/// Where the parity-check matrix comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CodeSource {
    Generate { dv: usize, dc: usize, n: usize, seed: u64 },
    Alist { path: PathBuf },
}

/// When to stop simulating one sweep point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Stop once this many bit errors are seen at the largest iteration cap.
    pub min_bit_errors: u64,
    /// Never stop before this many frames.
    pub min_frames: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            min_bit_errors: 100,
            min_frames: 1,
            max_frames: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    /// Format implied by a file extension; JSON unless it ends in `.csv`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => OutputFormat::Csv,
            _ => OutputFormat::Json,
        }
    }
}

/// Density-evolution settings of a threshold run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSettings {
    pub codes: Vec<DeCode>,
    pub search: ThresholdSearch,
    pub mc: McParams,
    pub max_iters: usize,
    pub target_pe: f64,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        let de = DeParams::new(DeCode::regular(3, 6));
        Self {
            codes: vec![DeCode::regular(3, 6)],
            search: ThresholdSearch::default(),
            mc: de.mc,
            max_iters: de.max_iters,
            target_pe: de.target_pe,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub code: Option<CodeSource>,
    /// Page rows and columns; defaults to the most square layout of `n`.
    #[serde(default)]
    pub page_dims: Option<(usize, usize)>,
    /// Sweep points as SNR in dB (code rate included for coded runs) ...
    #[serde(default)]
    pub snr_db: Option<Vec<f64>>,
    /// ... or as noise variances; exactly one of the two.
    #[serde(default)]
    pub sigma2: Option<Vec<f64>>,
    /// Decoder iteration caps reported per point; one decode to the
    /// largest cap serves them all.
    #[serde(default = "default_iterations")]
    pub iterations: Vec<usize>,
    #[serde(default)]
    pub stop: StopRule,
    /// Frames decoded between stop-rule checks.
    #[serde(default = "default_batch")]
    pub batch_frames: u64,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Worker threads; all available cores when unset.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub table: SignalLevelTable,
    #[serde(default = "default_clamp")]
    pub llr_clamp: f64,
    #[serde(default)]
    pub threshold: ThresholdSettings,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_iterations() -> Vec<usize> {
    vec![5]
}

fn default_batch() -> u64 {
    16
}

fn default_seed() -> u64 {
    1
}

fn default_clamp() -> f64 {
    DEFAULT_LLR_CLAMP
}

impl ExperimentConfig {
    /// A configuration of `mode` with every optional field at its default.
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            code: None,
            page_dims: None,
            snr_db: None,
            sigma2: None,
            iterations: default_iterations(),
            stop: StopRule::default(),
            batch_frames: default_batch(),
            master_seed: default_seed(),
            threads: None,
            table: SignalLevelTable::default(),
            llr_clamp: DEFAULT_LLR_CLAMP,
            threshold: ThresholdSettings::default(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks everything a run needs before any work starts.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        match self.mode {
            Mode::BerSweep | Mode::DetectUncoded => {
                match (&self.snr_db, &self.sigma2) {
                    (Some(_), Some(_)) | (None, None) => {
                        return cfg("give exactly one of snr_db and sigma2".into())
                    }
                    (Some(v), None) | (None, Some(v)) if v.is_empty() => {
                        return cfg("the sweep needs at least one point".into())
                    }
                    _ => {}
                }
                if let Some(s) = &self.sigma2 {
                    if let Some(bad) = s.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
                        return cfg(format!("noise variance {bad} is not positive"));
                    }
                }
                if let Some(s) = &self.snr_db {
                    if let Some(bad) = s.iter().find(|v| !v.is_finite()) {
                        return cfg(format!("SNR {bad} is not finite"));
                    }
                }
                if self.iterations.is_empty() || self.iterations.contains(&0) {
                    return cfg("iterations must be a nonempty list of positive caps".into());
                }
                if self.stop.max_frames == 0 || self.stop.min_frames > self.stop.max_frames {
                    return cfg(format!(
                        "need 1 <= min_frames <= max_frames, got {} and {}",
                        self.stop.min_frames, self.stop.max_frames
                    ));
                }
                if self.batch_frames == 0 {
                    return cfg("batch_frames must be positive".into());
                }
                if self.threads == Some(0) {
                    return cfg("threads must be positive".into());
                }
                if self.mode == Mode::BerSweep && self.code.is_none() {
                    return cfg("a coded sweep needs a code".into());
                }
                if self.mode == Mode::DetectUncoded && self.page_dims.is_none() {
                    return cfg("uncoded detection needs page_dims".into());
                }
                if let Some((r, c)) = self.page_dims {
                    if r == 0 || c == 0 {
                        return cfg("page_dims must be positive".into());
                    }
                }
                DecoderParams {
                    llr_clamp: self.llr_clamp,
                    ..DecoderParams::new(1.0, 1)?
                }
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
            }
            Mode::Threshold => {
                if self.threshold.codes.is_empty() {
                    return cfg("threshold mode needs at least one code".into());
                }
                for code in &self.threshold.codes {
                    self.de_params(*code).validate().map_err(|e| Error::Config(e.to_string()))?;
                }
            }
            Mode::GenCode => match &self.code {
                Some(CodeSource::Generate { dv, dc, n, seed }) => {
                    CodeParams::new(*dv, *dc, *n, *seed).map_err(|e| Error::Config(e.to_string()))?;
                    if self.output.is_none() {
                        return cfg("gen-code needs an output path".into());
                    }
                }
                _ => return cfg("gen-code needs generated code parameters".into()),
            },
        }
        Ok(())
    }

    fn de_params(&self, code: DeCode) -> DeParams {
        DeParams {
            table: self.table.clone(),
            llr_clamp: self.llr_clamp,
            max_iters: self.threshold.max_iters,
            target_pe: self.threshold.target_pe,
            mc: self.threshold.mc.clone(),
            ..DeParams::new(code)
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

/// Result of one sweep point at one iteration cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub sigma2: f64,
    pub iters: usize,
    pub frames: u64,
    pub bit_errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub frame_errors: u64,
    pub fer: f64,
    /// Wall time of the whole point, shared by its iteration caps.
    pub seconds: f64,
    /// The bit-error target was met before `max_frames`.
    pub early_stop: bool,
}

/// A loaded or generated code with everything needed to simulate it.
pub struct CodeSetup {
    pub h: ParityCheckMatrix,
    pub encoder: Encoder,
    pub mapping: PageMapping,
    pub graph: FullGraph,
}

impl CodeSetup {
    pub fn new(h: ParityCheckMatrix, dims: Option<(usize, usize)>) -> Result<Self> {
        let dims = dims.unwrap_or_else(|| near_square_dims(h.n()));
        let mapping = PageMapping::row_major(h.n(), dims)?;
        let graph = FullGraph::new(&h, &mapping)?;
        let encoder = Encoder::new(&h);
        Ok(Self {
            h,
            encoder,
            mapping,
            graph,
        })
    }

    pub fn from_source(source: &CodeSource, dims: Option<(usize, usize)>) -> Result<Self> {
        let h = match source {
            CodeSource::Generate { dv, dc, n, seed } => {
                generate_regular(&CodeParams::new(*dv, *dc, *n, *seed)?)?
            }
            CodeSource::Alist { path } => read_alist(path)?,
        };
        Self::new(h, dims)
    }
}

/// Simulated system: a code on a page, or the bare page.
enum System {
    Coded(CodeSetup),
    Uncoded { graph: FullGraph, dims: (usize, usize) },
}

impl System {
    fn build(config: &ExperimentConfig) -> Result<Self> {
        match config.mode {
            Mode::BerSweep => {
                let source = config.code.as_ref().expect("validated");
                Ok(System::Coded(CodeSetup::from_source(source, config.page_dims)?))
            }
            Mode::DetectUncoded => {
                let dims = config.page_dims.expect("validated");
                let mapping = PageMapping::row_major(dims.0 * dims.1, dims)?;
                Ok(System::Uncoded {
                    graph: FullGraph::channel_only(&mapping),
                    dims,
                })
            }
            _ => Err(Error::Config("not a BER sweep".into())),
        }
    }

    fn n(&self) -> usize {
        match self {
            System::Coded(c) => c.h.n(),
            System::Uncoded { dims, .. } => dims.0 * dims.1,
        }
    }

    fn rate(&self) -> f64 {
        match self {
            System::Coded(c) => c.encoder.rate(),
            System::Uncoded { .. } => 1.0,
        }
    }

    /// Bit errors after each iteration `1..=max_iters` for one frame.
    fn frame(
        &self,
        seeds: &SeedTree,
        point: u16,
        frame: u64,
        params: &DecoderParams,
        table: &SignalLevelTable,
    ) -> Result<Vec<u64>> {
        let mut msg_rng = seeds.rng(Role::Message, point, frame);
        let noise = NoiseModel::new(params.sigma2, seeds.derive(Role::Noise, point, frame))?;
        let (graph, truth, page) = match self {
            System::Coded(c) => {
                let msg: Vec<u8> = (0..c.encoder.k()).map(|_| msg_rng.random::<bool>() as u8).collect();
                let cw = c.encoder.encode(&msg)?;
                let page = c.mapping.to_page(&cw)?;
                (&c.graph, cw, page)
            }
            System::Uncoded { graph, dims } => {
                let page = BitPage::random(dims.0, dims.1, &mut msg_rng)?;
                (graph, page.bits().to_vec(), page)
            }
        };
        let rb = readback(&page, table, &noise);
        let (_, trace) = match self {
            System::Coded(_) => graph.decode_traced(&rb, params, Some(&truth))?,
            System::Uncoded { .. } => graph.detect_traced(&rb, params, Some(&truth))?,
        };
        let mut errors: Vec<u64> = trace.iter().map(|t| t.bit_errors.unwrap_or(0) as u64).collect();
        // a decoder that stopped early keeps its last decision
        let last = *errors.last().expect("at least one iteration");
        errors.resize(params.max_iters, last);
        Ok(errors)
    }
}

/// Runs a coded or uncoded BER sweep.
pub fn run_ber_sweep(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    run_ber_sweep_with(config, |_| {})
}

/// [`run_ber_sweep`], reporting each record as its point completes.
pub fn run_ber_sweep_with(
    config: &ExperimentConfig,
    mut on_record: impl FnMut(&BerRecord),
) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let system = System::build(config)?;
    let pool = config.pool()?;
    let seeds = SeedTree::new(config.master_seed);
    let n = system.n() as u64;
    let rate = system.rate();
    let max_iters = *config.iterations.iter().max().expect("validated");

    let points: Vec<f64> = match (&config.sigma2, &config.snr_db) {
        (Some(s), _) => s.clone(),
        (None, Some(snr)) => snr
            .iter()
            .map(|&s| sigma2_from_snr_db(s, rate, &config.table))
            .collect::<Result<_>>()?,
        (None, None) => unreachable!("validated"),
    };
    if points.len() > u16::MAX as usize {
        return Err(Error::Config(format!("at most {} sweep points", u16::MAX)));
    }

    let mut records = Vec::new();
    for (p, &sigma2) in points.iter().enumerate() {
        let start = Instant::now();
        let params = DecoderParams {
            llr_clamp: config.llr_clamp,
            table: config.table.clone(),
            ..DecoderParams::new(sigma2, max_iters)?
        };
        let mut bit_errors = vec![0u64; max_iters];
        let mut frame_errors = vec![0u64; max_iters];
        let mut frames = 0u64;
        let mut early_stop = false;
        while frames < config.stop.max_frames {
            let batch = config.batch_frames.min(config.stop.max_frames - frames);
            let results: Vec<Vec<u64>> = pool.install(|| {
                (frames..frames + batch)
                    .into_par_iter()
                    .map(|f| system.frame(&seeds, p as u16, f, &params, &config.table))
                    .collect::<Result<_>>()
            })?;
            for errs in results {
                for (i, &e) in errs.iter().enumerate() {
                    bit_errors[i] += e;
                    frame_errors[i] += (e > 0) as u64;
                }
            }
            frames += batch;
            if frames >= config.stop.min_frames && bit_errors[max_iters - 1] >= config.stop.min_bit_errors {
                early_stop = frames < config.stop.max_frames;
                break;
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        let snr = snr_db(sigma2, rate, &config.table)?;
        for &iters in &config.iterations {
            let bits = frames * n;
            let rec = BerRecord {
                snr_db: snr,
                sigma2,
                iters,
                frames,
                bit_errors: bit_errors[iters - 1],
                bits,
                ber: bit_errors[iters - 1] as f64 / bits as f64,
                frame_errors: frame_errors[iters - 1],
                fer: frame_errors[iters - 1] as f64 / frames as f64,
                seconds,
                early_stop,
            };
            on_record(&rec);
            records.push(rec);
        }
    }
    Ok(records)
}

/// Threshold report: results plus the configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub config: ExperimentConfig,
    pub results: Vec<ThresholdResult>,
}

/// Density-evolution thresholds of every configured code.
pub fn run_threshold(config: &ExperimentConfig) -> Result<ThresholdReport> {
    run_threshold_with(config, |_, _| {})
}

/// [`run_threshold`], reporting each probe as it completes.
pub fn run_threshold_with(
    config: &ExperimentConfig,
    mut on_probe: impl FnMut(DeCode, &ThresholdProbe) + Send,
) -> Result<ThresholdReport> {
    config.validate()?;
    let pool = config.pool()?;
    let mut results = Vec::new();
    for &code in &config.threshold.codes {
        let params = config.de_params(code);
        let r = pool.install(|| find_threshold_with(&params, &config.threshold.search, |p| on_probe(code, p)))?;
        results.push(r);
    }
    Ok(ThresholdReport {
        config: config.clone(),
        results,
    })
}

/// Generates the configured code and writes `<output>` (alist) plus
/// `<output>.json` (metadata).
pub fn run_gen_code(config: &ExperimentConfig) -> Result<CodeMetadata> {
    config.validate()?;
    let Some(CodeSource::Generate { dv, dc, n, seed }) = config.code else {
        unreachable!("validated")
    };
    let params = CodeParams::new(dv, dc, n, seed)?;
    let h = generate_regular(&params)?;
    let meta = CodeMetadata::new(&params, &Encoder::new(&h));
    let path = config.output.as_ref().expect("validated");
    write_alist(&h, path)?;
    write_json(&sidecar(path, "json"), &meta)?;
    Ok(meta)
}

/// `<path>.<ext>`, keeping the original extension.
pub fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct BerReport<'a> {
    config: &'a ExperimentConfig,
    records: &'a [BerRecord],
}

/// CSV header of [`BerRecord`], in column order.
pub const BER_COLUMNS: [&str; 11] = [
    "snr_db",
    "sigma2",
    "iters",
    "frames",
    "bit_errors",
    "bits",
    "ber",
    "frame_errors",
    "fer",
    "seconds",
    "early_stop",
];

/// Writes sweep records as CSV (with the configuration in
/// `<path>.config.json`) or as JSON (configuration embedded).
pub fn emit_results(
    records: &[BerRecord],
    config: &ExperimentConfig,
    path: &Path,
    format: OutputFormat,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    match format {
        OutputFormat::Json => write_json(path, &BerReport { config, records }),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            if records.is_empty() {
                w.write_record(BER_COLUMNS)?;
            }
            for r in records {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io(path, e))?;
            write_json(&sidecar(path, "config.json"), config)
        }
    }
}

/// SNR at which `records` (one iteration cap, sorted by SNR) cross
/// `target` BER, by linear interpolation of `log10(BER)` in dB. `None` when
/// the curve does not straddle the target.
pub fn snr_at_ber(records: &[&BerRecord], target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.snr_db, r.ber.max(0.5 / r.bits as f64).log10()))
        .collect();
    let t = target.log10();
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        ((y0 >= t && y1 <= t) && y0 != y1).then(|| x0 + (t - y0) * (x1 - x0) / (y1 - y0))
    })
}
