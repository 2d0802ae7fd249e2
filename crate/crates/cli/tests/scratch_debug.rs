use rinst_cli::config::{BenchConfig, DatasetSpec};
use rinst_cli::harness::run_suite;
use rinst_core::net::NetConfig;
use rinst_core::solver::SolverConfig;

#[test]
#[ignore]
fn debug_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig {
        out_dir: dir.path().join("a"),
        datasets: vec![DatasetSpec {
            name: "det".into(),
            synth: Some("sines".into()),
            length: 128,
            seed: 3,
            ..DatasetSpec::default()
        }],
        scenarios: vec!["d3".into(), "i1".into()],
        methods: vec!["tv".into(), "spline".into(), "rinst".into()],
        seeds: vec![0, 1],
        solver: SolverConfig {
            iterations: 8,
            net: NetConfig {
                encoder_channel_sizes: vec![6, 6],
                decoder_channel_sizes: vec![6, 6],
                skip_channel_sizes: vec![2, 2],
                ..NetConfig::default()
            },
            ..SolverConfig::default()
        },
        ..BenchConfig::default()
    };
    let first = run_suite(&cfg, Some(2)).unwrap();
    let names1: Vec<String> = std::fs::read_dir(cfg.out_dir.join("manifests"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let second = run_suite(&cfg, Some(2)).unwrap();
    let names2: Vec<String> = std::fs::read_dir(cfg.out_dir.join("manifests"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    eprintln!("manifests after run1: {} after run2: {}", names1.len(), names2.len());
    for (a, b) in first.rows.iter().zip(&second.rows) {
        if a.wall_time_s != b.wall_time_s || a.rmse.to_bits() != b.rmse.to_bits() {
            eprintln!(
                "DIFF {:?}: wall {} vs {} rmse {:?} vs {:?}",
                a.key(),
                a.wall_time_s,
                b.wall_time_s,
                a.rmse,
                b.rmse
            );
        }
    }
}
