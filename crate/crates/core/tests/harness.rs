use twodos::density_evolution::{DeCode, ThresholdSearch};
use twodos::harness::{
    emit_results, run_ber_sweep, run_threshold, snr_at_ber, BerRecord, CodeSource, ExperimentConfig, Mode,
    OutputFormat, StopRule, BER_COLUMNS,
};

fn coded(sigma2: Vec<f64>, threads: usize) -> ExperimentConfig {
    ExperimentConfig {
        code: Some(CodeSource::Generate {
            dv: 3,
            dc: 6,
            n: 600,
            seed: 4,
        }),
        page_dims: Some((20, 30)),
        sigma2: Some(sigma2),
        iterations: vec![1, 2, 5],
        stop: StopRule {
            min_bit_errors: 400,
            min_frames: 1,
            max_frames: 40,
        },
        batch_frames: 8,
        master_seed: 21,
        threads: Some(threads),
        ..ExperimentConfig::new(Mode::BerSweep)
    }
}

fn counts(records: &[BerRecord]) -> Vec<(u64, u64, u64)> {
    records.iter().map(|r| (r.frames, r.bit_errors, r.frame_errors)).collect()
}

#[test]
fn error_counts_do_not_depend_on_worker_count() {
    let points = vec![0.01, 0.03, 0.05];
    let one = run_ber_sweep(&coded(points.clone(), 1)).unwrap();
    let four = run_ber_sweep(&coded(points, 4)).unwrap();
    assert_eq!(counts(&one), counts(&four));
    assert!(one.iter().any(|r| r.bit_errors > 0));
}

#[test]
fn noise_free_point_has_no_errors() {
    // a single iteration cannot separate the two configurations that share
    // the 0.35 level, so the smoke point uses a real decoding budget
    let cfg = ExperimentConfig {
        iterations: vec![5],
        stop: StopRule {
            max_frames: 10,
            ..StopRule::default()
        },
        ..coded(vec![1e-4], 2)
    };
    for r in run_ber_sweep(&cfg).unwrap() {
        assert_eq!(r.bit_errors, 0);
        assert_eq!(r.frames, 10);
        assert_eq!(r.bits, 6000);
        assert!(!r.early_stop);
    }
}

#[test]
fn records_are_consistent_and_early_stops_are_flagged() {
    let recs = run_ber_sweep(&coded(vec![0.06], 3)).unwrap();
    assert_eq!(recs.len(), 3);
    for r in &recs {
        assert_eq!(r.bits, r.frames * 600);
        assert_eq!(r.ber, r.bit_errors as f64 / r.bits as f64);
        assert!(r.frame_errors <= r.frames);
    }
    // plenty of errors at this noise: the point stops at a batch boundary
    let last = recs.iter().find(|r| r.iters == 5).unwrap();
    assert!(last.early_stop);
    assert_eq!(last.frames % 8, 0);
    assert!(last.bit_errors >= 400);
}

#[test]
fn uncoded_sweep_uses_rate_one() {
    let cfg = ExperimentConfig {
        page_dims: Some((16, 16)),
        snr_db: Some(vec![15.0, 25.0]),
        iterations: vec![10],
        stop: StopRule {
            max_frames: 4,
            ..StopRule::default()
        },
        ..ExperimentConfig::new(Mode::DetectUncoded)
    };
    let recs = run_ber_sweep(&cfg).unwrap();
    assert!((recs[0].snr_db - 15.0).abs() < 1e-9);
    let s2 = twodos::channel::sigma2_from_snr_db(15.0, 1.0, &Default::default()).unwrap();
    assert!((recs[0].sigma2 - s2).abs() < 1e-15);
    assert!(recs[0].ber > recs[1].ber);
}

#[test]
fn csv_and_json_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coded(vec![0.04], 2);

    let empty = dir.path().join("empty.csv");
    emit_results(&[], &cfg, &empty, OutputFormat::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap().trim_end(), BER_COLUMNS.join(","));

    let recs = run_ber_sweep(&cfg).unwrap();
    let csv_path = dir.path().join("out/sweep.csv");
    emit_results(&recs, &cfg, &csv_path, OutputFormat::from_path(&csv_path)).unwrap();
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), recs.len() + 1);
    assert_eq!(text.lines().next().unwrap(), BER_COLUMNS.join(","));
    let echoed = ExperimentConfig::load(dir.path().join("out/sweep.csv.config.json")).unwrap();
    assert_eq!(echoed, cfg);

    let json_path = dir.path().join("sweep.json");
    emit_results(&recs, &cfg, &json_path, OutputFormat::from_path(&json_path)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let back: Vec<BerRecord> = serde_json::from_value(v["records"].clone()).unwrap();
    assert_eq!(back, recs);
    let back_cfg: ExperimentConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(back_cfg, cfg);

    // a directory is not a writable file
    assert!(emit_results(&recs, &cfg, dir.path(), OutputFormat::Json).is_err());
}

#[test]
fn invalid_configs_fail_before_any_work() {
    let mut cfg = coded(vec![0.01], 1);
    cfg.snr_db = Some(vec![10.0]);
    assert!(run_ber_sweep(&cfg).is_err());
    let mut cfg = coded(vec![], 1);
    assert!(run_ber_sweep(&cfg).is_err());
    cfg.sigma2 = Some(vec![0.01]);
    cfg.stop.max_frames = 0;
    assert!(run_ber_sweep(&cfg).is_err());
    let cfg = ExperimentConfig {
        code: Some(CodeSource::Alist {
            path: "/nonexistent/code.alist".into(),
        }),
        ..coded(vec![0.01], 1)
    };
    assert!(run_ber_sweep(&cfg).is_err());
    assert!(ExperimentConfig::from_json(r#"{"mode": "ber-sweep", "sigma2": [0.01], "typo": 3}"#).is_err());
}

#[test]
fn uncoded_threshold_report_is_reproducible() {
    let mut cfg = ExperimentConfig::new(Mode::Threshold);
    cfg.threshold.codes = vec![DeCode::uncoded()];
    cfg.threshold.mc.samples = 200_000;
    cfg.threshold.max_iters = 30;
    cfg.threshold.search = ThresholdSearch {
        lo: 5e-4,
        hi: 0.01,
        tol: 1e-3,
    };
    let a = run_threshold(&cfg).unwrap();
    let b = run_threshold(&cfg).unwrap();
    assert_eq!(a, b);
    let r = &a.results[0];
    assert_eq!(r.code.dc, None);
    assert_eq!(r.mc.samples, 200_000);
    assert_eq!(r.mc.seed, cfg.threshold.mc.seed);
    // the report carries everything needed to re-run it
    let text = serde_json::to_string(&a).unwrap();
    let back: twodos::harness::ThresholdReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, a);
}

#[test]
fn crossing_point_interpolates_between_records() {
    let rec = |snr: f64, ber: f64| BerRecord {
        snr_db: snr,
        sigma2: 0.0,
        iters: 5,
        frames: 100,
        bit_errors: (ber * 1e6) as u64,
        bits: 1_000_000,
        ber,
        frame_errors: 0,
        fer: 0.0,
        seconds: 0.0,
        early_stop: false,
    };
    let (a, b) = (rec(10.0, 1e-2), rec(12.0, 1e-4));
    assert!((snr_at_ber(&[&a, &b], 1e-3).unwrap() - 11.0).abs() < 1e-9);
    assert!(snr_at_ber(&[&a, &b], 1e-6).is_none());
}
