//! Grid runner: executes (dataset, scenario, method, seed) cells with
//! independent random streams, records a replayable manifest per cell,
//! skips cells whose manifest already exists, and emits CSV tables and
//! SVG plots. Parallel and sequential execution produce identical
//! reports because every stream is derived from the cell key, never from
//! scheduling order.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use rinst_core::corruption::{make_scenario, ScenarioSpec};
use rinst_core::data::{NormParams, Series};
use rinst_core::error::{CoreError, Result};
use rinst_core::metrics::{score, ScoreRow};
use rinst_core::operators::OperatorDescriptor;
use rinst_core::rng::RngStream;
use rinst_core::solver::{LossTag, SolverConfig};
use rinst_core::tensor::TensorBuf;

use crate::config::BenchConfig;
use crate::methods::{run_method, Method, TunedParams};
use crate::plot::{bars_svg, overlay_svg, trace_svg};
use crate::report::{BenchReport, ReportRow};
use crate::tuning::tune_method;

/// Everything that determines one cell's result; hashed for resume.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CellManifest {
    pub dataset: String,
    pub scenario: String,
    pub method: String,
    pub seed: u64,
    pub scenario_spec: ScenarioSpec,
    pub solver: SolverConfig,
    pub tuned: TunedParams,
    pub operator: Option<OperatorDescriptor>,
    /// Normalization of the evaluated series, carried so reported errors
    /// stay comparable across runs.
    pub norm_params: Option<NormParams>,
    pub metrics: Option<ScoreRow>,
    pub wall_time_s: f64,
    pub status: String,
    pub error: Option<String>,
}

struct Cell {
    dataset: String,
    scenario: String,
    method: Method,
    seed: u64,
}

struct CellOutcome {
    row: ReportRow,
    manifest: CellManifest,
    manifest_path: PathBuf,
    estimate: Option<TensorBuf>,
    truth: Option<TensorBuf>,
    observed: Option<TensorBuf>,
    trace: Option<Vec<f64>>,
    resumed: bool,
}

fn scenario_seed(base: u64, dataset: &str, scenario: &str, seed: u64) -> u64 {
    RngStream::seeded(base)
        .split("scenario")
        .split(&format!("{dataset}|{scenario}|{seed}"))
        .seed()
}

fn solver_seed(base: u64, dataset: &str, scenario: &str, method: &str, seed: u64) -> u64 {
    RngStream::seeded(base)
        .split("solver")
        .split(&format!("{dataset}|{scenario}|{method}|{seed}"))
        .seed()
}

fn manifest_hash(manifest: &CellManifest) -> String {
    #[derive(serde::Serialize)]
    struct ReplayKey<'a> {
        dataset: &'a str,
        scenario: &'a ScenarioSpec,
        method: &'a str,
        seed: u64,
        solver: &'a SolverConfig,
        tuned: &'a TunedParams,
    }
    let key = ReplayKey {
        dataset: &manifest.dataset,
        scenario: &manifest.scenario_spec,
        method: &manifest.method,
        seed: manifest.seed,
        solver: &manifest.solver,
        tuned: &manifest.tuned,
    };
    let json = serde_json::to_string(&key).expect("manifest key serializes");
    let mut hasher = Sha256::new();
    hasher.update(json.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Build the thread pool respecting an explicit cap or `RINST_THREADS`.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let cap = threads.or_else(|| {
        std::env::var("RINST_THREADS").ok().and_then(|v| v.parse().ok())
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cap {
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| CoreError::InvalidArg(format!("thread pool: {e}")))
}

fn run_cell(
    cell: &Cell,
    series: &Series,
    cfg: &BenchConfig,
    tuned: &TunedParams,
    manifest_dir: &Path,
) -> CellOutcome {
    let base = cfg.solver.seed;
    let spec = ScenarioSpec::from_id(
        &cell.scenario,
        scenario_seed(base, &cell.dataset, &cell.scenario, cell.seed),
    )
    .expect("scenario ids validated before cells are built");
    let mut solver = cfg.solver.clone();
    solver.seed = solver_seed(base, &cell.dataset, &cell.scenario, cell.method.name(), cell.seed);
    solver.net.in_channels = series.values.channels();
    solver.net.out_channels = series.values.channels();

    let mut manifest = CellManifest {
        dataset: cell.dataset.clone(),
        scenario: cell.scenario.clone(),
        method: cell.method.name().to_string(),
        seed: cell.seed,
        scenario_spec: spec.clone(),
        solver,
        tuned: *tuned,
        operator: None,
        norm_params: series.meta.norm.clone(),
        metrics: None,
        wall_time_s: 0.0,
        status: "pending".into(),
        error: None,
    };
    let hash = manifest_hash(&manifest);
    let manifest_path = manifest_dir.join(format!("{hash}.json"));

    // resume: a finished manifest short-circuits the cell
    if let Ok(text) = std::fs::read_to_string(&manifest_path) {
        if let Ok(prev) = serde_json::from_str::<CellManifest>(&text) {
            if prev.status == "ok" || prev.status == "failed" {
                let row = row_from_manifest(&prev);
                return CellOutcome {
                    row,
                    manifest: prev,
                    manifest_path,
                    estimate: None,
                    truth: None,
                    observed: None,
                    trace: None,
                    resumed: true,
                };
            }
        }
    }

    let started = Instant::now();
    let result = (|| {
        let corrupted = make_scenario(&series.values, &spec)?;
        let run = run_method(cell.method, &corrupted, tuned, &manifest.solver)?;
        let metrics = score(&corrupted.ground_truth, &run.estimate)?;
        Ok::<_, CoreError>((corrupted, run, metrics))
    })();
    manifest.wall_time_s = started.elapsed().as_secs_f64();

    let (estimate, truth, observed, trace) = match result {
        Ok((corrupted, run, metrics)) => {
            manifest.status = "ok".into();
            manifest.metrics = Some(metrics);
            manifest.operator = Some(corrupted.operator_descriptor.clone());
            (
                Some(run.estimate),
                Some(corrupted.ground_truth),
                Some(corrupted.y),
                run.loss_trace,
            )
        }
        Err(e) => {
            manifest.status = "failed".into();
            manifest.error = Some(e.to_string());
            (None, None, None, None)
        }
    };

    CellOutcome {
        row: row_from_manifest(&manifest),
        manifest,
        manifest_path,
        estimate,
        truth,
        observed,
        trace,
        resumed: false,
    }
}

fn row_from_manifest(m: &CellManifest) -> ReportRow {
    match &m.metrics {
        Some(s) => ReportRow {
            dataset: m.dataset.clone(),
            scenario: m.scenario.clone(),
            method: m.method.clone(),
            seed: m.seed,
            rmse: s.rmse,
            mae: s.mae,
            snr_db: s.snr_db,
            wall_time_s: m.wall_time_s,
        },
        None => ReportRow {
            dataset: m.dataset.clone(),
            scenario: m.scenario.clone(),
            method: m.method.clone(),
            seed: m.seed,
            rmse: f64::NAN,
            mae: f64::NAN,
            snr_db: f64::NAN,
            wall_time_s: m.wall_time_s,
        },
    }
}

/// Run the full grid and write every output. Cell failures become failed
/// rows; they never abort the suite.
pub fn run_suite(cfg: &BenchConfig, threads: Option<usize>) -> Result<BenchReport> {
    cfg.validate()?;
    let out_dir = &cfg.out_dir;
    let manifest_dir = out_dir.join("manifests");
    std::fs::create_dir_all(&manifest_dir)?;

    let mut datasets: HashMap<String, Series> = HashMap::new();
    for spec in &cfg.datasets {
        datasets.insert(spec.name.clone(), spec.load()?);
    }

    // applicable methods per scenario, after task filtering
    let mut cells = Vec::new();
    let mut tuned_map: HashMap<(String, String), TunedParams> = HashMap::new();
    for scenario in &cfg.scenarios {
        let spec = ScenarioSpec::from_id(scenario, 0)?;
        for method_name in &cfg.methods {
            let method = Method::parse(method_name)?;
            if !method.applies_to(spec.task) {
                continue;
            }
            tuned_map
                .entry((scenario.clone(), method_name.clone()))
                .or_insert(tune_method(method, scenario, &cfg.grids)?);
            for dataset in cfg.datasets.iter().map(|d| d.name.clone()) {
                for &seed in &cfg.seeds {
                    cells.push(Cell {
                        dataset: dataset.clone(),
                        scenario: scenario.clone(),
                        method,
                        seed,
                    });
                }
            }
        }
    }

    let pool = thread_pool(threads)?;
    let outcomes: Vec<CellOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let series = &datasets[&cell.dataset];
                let tuned = tuned_map[&(cell.scenario.clone(), cell.method.name().to_string())];
                run_cell(cell, series, cfg, &tuned, &manifest_dir)
            })
            .collect()
    });

    emit_outputs(&outcomes, out_dir)?;
    let rows = outcomes.into_iter().map(|o| o.row).collect();
    Ok(BenchReport::finalize(rows))
}

/// Write manifests, report/aggregate CSVs, per-run traces, overlays, and
/// mean-SNR bar charts.
fn emit_outputs(outcomes: &[CellOutcome], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for o in outcomes {
        if !o.resumed {
            let json = serde_json::to_string_pretty(&o.manifest)
                .map_err(|e| CoreError::InvalidArg(format!("manifest: {e}")))?;
            std::fs::write(&o.manifest_path, json)?;
        }
    }

    // per-run loss traces for the optimization methods
    let trace_dir = out_dir.join("traces");
    for o in outcomes {
        if let Some(trace) = &o.trace {
            std::fs::create_dir_all(&trace_dir)?;
            let name = format!(
                "{}_{}_{}_{}.csv",
                o.row.dataset, o.row.scenario, o.row.method, o.row.seed
            );
            let mut text = String::from("iteration,loss\n");
            for (i, l) in trace.iter().enumerate() {
                text.push_str(&format!("{i},{l}\n"));
            }
            std::fs::write(trace_dir.join(&name), text)?;
            trace_svg(
                &trace_dir.join(name.replace(".csv", ".svg")),
                &format!(
                    "{} {} {} seed {}",
                    o.row.dataset, o.row.scenario, o.row.method, o.row.seed
                ),
                trace,
            )?;
        }
    }

    // best-seed overlay per (dataset, scenario, method)
    let mut best: HashMap<(String, String, String), &CellOutcome> = HashMap::new();
    for o in outcomes {
        if o.estimate.is_none() || o.row.failed() {
            continue;
        }
        let key = (o.row.dataset.clone(), o.row.scenario.clone(), o.row.method.clone());
        let better = match best.get(&key) {
            Some(prev) => o.row.snr_db > prev.row.snr_db,
            None => true,
        };
        if better {
            best.insert(key, o);
        }
    }
    let plot_dir = out_dir.join("plots");
    for ((dataset, scenario, method), o) in &best {
        let truth = o.truth.as_ref().expect("kept with estimate");
        let estimate = o.estimate.as_ref().expect("kept");
        let observed = o.observed.as_ref().map(|t| t.channel(0));
        overlay_svg(
            &plot_dir.join(format!("{dataset}_{scenario}_{method}_best.svg")),
            &format!("{dataset} / {scenario} / {method} (seed {})", o.row.seed),
            truth.channel(0),
            observed,
            estimate.channel(0),
        )?;
    }

    Ok(())
}

/// Bar charts per (dataset, scenario): mean SNR and mean wall time.
pub fn emit_snr_bars(report: &BenchReport, out_dir: &Path) -> Result<()> {
    let plot_dir = out_dir.join("plots");
    let mut groups: HashMap<(String, String), Vec<(String, f64, f64)>> = HashMap::new();
    for a in &report.aggregates {
        groups
            .entry((a.dataset.clone(), a.scenario.clone()))
            .or_default()
            .push((a.method.clone(), a.mean_snr, a.mean_wall_time_s));
    }
    for ((dataset, scenario), mut entries) in groups {
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let labels: Vec<String> = entries.iter().map(|(m, _, _)| m.clone()).collect();
        let snrs: Vec<f64> = entries.iter().map(|(_, v, _)| *v).collect();
        let times: Vec<f64> = entries.iter().map(|(_, _, t)| *t).collect();
        bars_svg(
            &plot_dir.join(format!("{dataset}_{scenario}_mean_snr.svg")),
            &format!("mean SNR (dB): {dataset} / {scenario}"),
            &labels,
            &snrs,
        )?;
        bars_svg(
            &plot_dir.join(format!("{dataset}_{scenario}_wall_time.svg")),
            &format!("mean wall time (s): {dataset} / {scenario}"),
            &labels,
            &times,
        )?;
    }
    Ok(())
}

/// Ablation grid: single-switch removals, the alpha sweep, and the
/// data-fit threshold sweep, reported as extra "method" rows on the
/// outlier denoising scenario.
pub fn ablate(cfg: &BenchConfig, threads: Option<usize>) -> Result<BenchReport> {
    cfg.validate()?;
    let scenario = "d3";
    let out_dir = cfg.out_dir.join("ablation");
    std::fs::create_dir_all(&out_dir)?;

    let mut variants: Vec<(String, SolverConfig)> = vec![
        ("rinst".into(), cfg.solver.clone()),
        ("no-guided".into(), SolverConfig { guided_input: false, ..cfg.solver.clone() }),
        ("no-perturb".into(), SolverConfig { perturbation: false, ..cfg.solver.clone() }),
        ("no-convex".into(), SolverConfig { convex_combo: false, ..cfg.solver.clone() }),
        ("ls-loss".into(), SolverConfig { loss: LossTag::LeastSquares, ..cfg.solver.clone() }),
    ];
    for alpha in [0.1, 0.3, 0.5, 0.7, 0.9] {
        variants.push((format!("alpha-{alpha}"), SolverConfig { alpha, ..cfg.solver.clone() }));
    }
    for lambda in [1e-4, 1e-3, 1e-2, 1e-1, 1.0] {
        variants.push((
            format!("lambda-{lambda}"),
            SolverConfig { huber_lambda: lambda, ..cfg.solver.clone() },
        ));
    }

    let mut datasets: HashMap<String, Series> = HashMap::new();
    for spec in &cfg.datasets {
        datasets.insert(spec.name.clone(), spec.load()?);
    }

    let mut jobs = Vec::new();
    for (name, solver) in &variants {
        for ds in cfg.datasets.iter().map(|d| d.name.clone()) {
            for &seed in &cfg.seeds {
                jobs.push((name.clone(), solver.clone(), ds.clone(), seed));
            }
        }
    }

    let pool = thread_pool(threads)?;
    let base = cfg.solver.seed;
    let rows: Vec<ReportRow> = pool.install(|| {
        jobs.par_iter()
            .map(|(name, solver, dataset, seed)| {
                let series = &datasets[dataset];
                let mut solver = solver.clone();
                solver.seed = solver_seed(base, dataset, scenario, "rinst", *seed);
                solver.net.in_channels = series.values.channels();
                solver.net.out_channels = series.values.channels();
                let spec = ScenarioSpec::from_id(
                    scenario,
                    scenario_seed(base, dataset, scenario, *seed),
                )
                .expect("known scenario");
                let started = Instant::now();
                let outcome = make_scenario(&series.values, &spec).and_then(|corrupted| {
                    let r = rinst_core::solver::solve(&corrupted.y, &corrupted.operator, &solver)?;
                    score(&corrupted.ground_truth, &r.x_hat)
                });
                match outcome {
                    Ok(s) => ReportRow {
                        dataset: dataset.clone(),
                        scenario: scenario.into(),
                        method: name.clone(),
                        seed: *seed,
                        rmse: s.rmse,
                        mae: s.mae,
                        snr_db: s.snr_db,
                        wall_time_s: started.elapsed().as_secs_f64(),
                    },
                    Err(_) => ReportRow {
                        dataset: dataset.clone(),
                        scenario: scenario.into(),
                        method: name.clone(),
                        seed: *seed,
                        rmse: f64::NAN,
                        mae: f64::NAN,
                        snr_db: f64::NAN,
                        wall_time_s: started.elapsed().as_secs_f64(),
                    },
                }
            })
            .collect()
    });

    let report = BenchReport::finalize(rows);
    report.write_csv(&out_dir)?;
    emit_snr_bars(&report, &out_dir)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = scenario_seed(1, "ds", "d1", 0);
        assert_eq!(a, scenario_seed(1, "ds", "d1", 0));
        assert_ne!(a, scenario_seed(1, "ds", "d1", 1));
        assert_ne!(a, scenario_seed(1, "ds", "d3", 0));
        assert_ne!(a, scenario_seed(2, "ds", "d1", 0));
        // methods share the scenario but not the solver stream
        let s1 = solver_seed(1, "ds", "d1", "dip", 0);
        let s2 = solver_seed(1, "ds", "d1", "rinst", 0);
        assert_ne!(s1, s2);
    }

    #[test]
    fn manifest_hash_tracks_replay_inputs() {
        let mk = |seed: u64, iters: usize| CellManifest {
            dataset: "ds".into(),
            scenario: "d1".into(),
            method: "tv".into(),
            seed,
            scenario_spec: ScenarioSpec::from_id("d1", 7).unwrap(),
            solver: SolverConfig { iterations: iters, ..SolverConfig::default() },
            tuned: TunedParams::default(),
            operator: None,
            metrics: None,
            wall_time_s: 0.0,
            status: "pending".into(),
            error: None,
        };
        assert_eq!(manifest_hash(&mk(0, 10)), manifest_hash(&mk(0, 10)));
        assert_ne!(manifest_hash(&mk(0, 10)), manifest_hash(&mk(1, 10)));
        assert_ne!(manifest_hash(&mk(0, 10)), manifest_hash(&mk(0, 20)));
        // wall time and status do not affect the replay hash
        let mut m = mk(0, 10);
        m.wall_time_s = 99.0;
        m.status = "ok".into();
        assert_eq!(manifest_hash(&m), manifest_hash(&mk(0, 10)));
    }
}
