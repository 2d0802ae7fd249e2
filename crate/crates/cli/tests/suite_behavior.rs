//! End-to-end harness behavior on a tiny grid: row arithmetic, emitted
//! files, failure rows, resume, and the scheduling-independence of the
//! report.

use std::path::Path;

use rinst_cli::config::{BenchConfig, DatasetSpec};
use rinst_cli::harness::run_suite;
use rinst_core::net::NetConfig;
use rinst_core::solver::SolverConfig;

fn tiny_config(out: &Path) -> BenchConfig {
    BenchConfig {
        out_dir: out.to_path_buf(),
        datasets: vec![DatasetSpec {
            name: "tiny".into(),
            synth: Some("sines".into()),
            length: 128,
            seed: 3,
            ..DatasetSpec::default()
        }],
        scenarios: vec!["d1".into()],
        methods: vec!["gaussian".into(), "tv".into()],
        seeds: vec![0, 1, 2, 3, 4],
        solver: SolverConfig {
            iterations: 3,
            net: NetConfig {
                encoder_channel_sizes: vec![4, 4],
                decoder_channel_sizes: vec![4, 4],
                skip_channel_sizes: vec![2, 2],
                ..NetConfig::default()
            },
            ..SolverConfig::default()
        },
        ..BenchConfig::default()
    }
}

#[test]
fn grid_arithmetic_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let report = run_suite(&cfg, Some(2)).unwrap();
    // 1 dataset x 1 scenario x 2 methods x 5 seeds
    assert_eq!(report.rows.len(), 10);
    assert_eq!(report.aggregates.len(), 2);
    for a in &report.aggregates {
        assert_eq!(a.seeds, 5);
        assert!(a.std_snr >= 0.0);
    }
    report.write_csv(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(text.starts_with("dataset,scenario,method,seed,rmse,mae,snr_db,wall_time_s\n"));
    assert_eq!(text.lines().count(), 11);
    let agg = std::fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(agg.contains("mean_snr,std_snr"));
    // manifests exist
    let manifests = std::fs::read_dir(dir.path().join("manifests")).unwrap().count();
    assert_eq!(manifests, 10);
    // best-seed overlays exist per (dataset, scenario, method)
    let plots: Vec<String> = std::fs::read_dir(dir.path().join("plots"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(plots.iter().any(|p| p.contains("tiny_d1_gaussian_best")), "{plots:?}");
    assert!(plots.iter().any(|p| p.contains("tiny_d1_tv_best")), "{plots:?}");
}

#[test]
fn rerun_resumes_bit_identical_and_failures_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    // an all-missing impute cell must fail without aborting the suite
    cfg.scenarios = vec!["d1".into(), "i:100".into()];
    cfg.methods = vec!["tv".into(), "spline".into()];
    cfg.seeds = vec![0, 1];

    let first = run_suite(&cfg, Some(2)).unwrap();
    // d1/tv: 2 rows ok; i:100/spline: 2 rows failed
    assert_eq!(first.rows.len(), 4);
    let failed: Vec<_> = first.rows.iter().filter(|r| r.failed()).collect();
    assert_eq!(failed.len(), 2);
    assert!(failed.iter().all(|r| r.scenario == "i:100"));
    first.write_csv(dir.path()).unwrap();
    let report1 = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();

    // failed manifests carry the error message
    let mut failed_manifest_seen = false;
    for entry in std::fs::read_dir(dir.path().join("manifests")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        if text.contains("\"status\": \"failed\"") {
            assert!(text.contains("error"));
            failed_manifest_seen = true;
        }
    }
    assert!(failed_manifest_seen);

    // rerun: resumed from manifests, byte-identical report including times
    let second = run_suite(&cfg, Some(1)).unwrap();
    second.write_csv(dir.path()).unwrap();
    let report2 = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(report1, report2);
    assert_eq!(
        first.rows.iter().map(|r| r.wall_time_s).collect::<Vec<_>>(),
        second.rows.iter().map(|r| r.wall_time_s).collect::<Vec<_>>()
    );
}

#[test]
fn parallel_equals_sequential_fresh_runs() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut cfg_a = tiny_config(dir_a.path());
    cfg_a.methods = vec!["gaussian".into(), "tv".into(), "dip".into(), "rinst".into()];
    cfg_a.seeds = vec![0, 1];
    let mut cfg_b = cfg_a.clone();
    cfg_b.out_dir = dir_b.path().to_path_buf();

    let parallel = run_suite(&cfg_a, Some(2)).unwrap();
    let sequential = run_suite(&cfg_b, Some(1)).unwrap();
    assert_eq!(parallel.rows.len(), sequential.rows.len());
    for (a, b) in parallel.rows.iter().zip(&sequential.rows) {
        assert_eq!(a.key(), b.key());
        assert_eq!(a.rmse.to_bits(), b.rmse.to_bits(), "{:?}", a.key());
        assert_eq!(a.mae.to_bits(), b.mae.to_bits());
        assert_eq!(a.snr_db.to_bits(), b.snr_db.to_bits());
    }
}
