//! One-shot runs for the `denoise`, `impute`, and `cs` subcommands.

use std::path::{Path, PathBuf};

use rinst_core::corruption::{make_scenario, ScenarioSpec, TaskKind};
use rinst_core::data::Series;
use rinst_core::error::{CoreError, Result};
use rinst_core::metrics::{score, ScoreRow};
use rinst_core::rng::RngStream;

use crate::config::{BenchConfig, DatasetSpec};
use crate::methods::{run_method, Method};
use crate::plot::{overlay_svg, trace_svg};
use crate::tuning::tune_method;

/// Parse `--input`: either a CSV path or a `synth:<kind>[:key=value]...`
/// spec (keys: n, seed, channels).
pub fn parse_input(
    input: &str,
    columns: &[usize],
    delimiter: char,
    has_header: bool,
) -> Result<DatasetSpec> {
    if let Some(rest) = input.strip_prefix("synth:") {
        let mut parts = rest.split(':');
        let kind = parts.next().unwrap_or_default().to_string();
        let mut spec = DatasetSpec {
            name: format!("synth-{kind}"),
            path: None,
            synth: Some(kind),
            ..DatasetSpec::default()
        };
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                CoreError::InvalidArg(format!("bad synth option {part:?}, expected key=value"))
            })?;
            match key {
                "n" => spec.length = value.parse().map_err(|_| bad_value(key, value))?,
                "seed" => spec.seed = value.parse().map_err(|_| bad_value(key, value))?,
                "channels" => {
                    spec.channels = value.parse().map_err(|_| bad_value(key, value))?
                }
                _ => return Err(CoreError::InvalidArg(format!("unknown synth option {key:?}"))),
            }
        }
        Ok(spec)
    } else {
        let path = PathBuf::from(input);
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "input".into());
        Ok(DatasetSpec {
            name,
            path: Some(path),
            columns: columns.to_vec(),
            delimiter: delimiter.to_string(),
            has_header,
            synth: None,
            ..DatasetSpec::default()
        })
    }
}

fn bad_value(key: &str, value: &str) -> CoreError {
    CoreError::InvalidArg(format!("cannot parse {key}={value:?}"))
}

fn check_task(task: TaskKind, scenario: &str) -> Result<()> {
    let spec = ScenarioSpec::from_id(scenario, 0)?;
    if spec.task != task {
        return Err(CoreError::InvalidArg(format!(
            "scenario {scenario} is a {:?} scenario, not {task:?}",
            spec.task
        )));
    }
    Ok(())
}

/// Run a single (input, scenario, method, seed) and write outputs.
pub fn run_single(
    task: TaskKind,
    dataset: &DatasetSpec,
    scenario: &str,
    method_name: &str,
    seed: u64,
    cfg: &BenchConfig,
    out_dir: &Path,
) -> Result<ScoreRow> {
    check_task(task, scenario)?;
    let method = Method::parse(method_name)?;
    let spec0 = ScenarioSpec::from_id(scenario, 0)?;
    if !method.applies_to(spec0.task) {
        return Err(CoreError::InvalidArg(format!(
            "method {method_name} does not apply to {:?}",
            spec0.task
        )));
    }
    let series: Series = dataset.load()?;

    let base = cfg.solver.seed;
    let scenario_spec = ScenarioSpec::from_id(
        scenario,
        RngStream::seeded(base).split(&format!("single|{}|{scenario}|{seed}", dataset.name)).seed(),
    )?;
    let corrupted = make_scenario(&series.values, &scenario_spec)?;

    let tuned = tune_method(method, scenario, &cfg.grids)?;
    let mut solver = cfg.solver.clone();
    solver.seed = seed;
    solver.net.in_channels = series.values.channels();
    solver.net.out_channels = series.values.channels();

    let started = std::time::Instant::now();
    let run = run_method(method, &corrupted, &tuned, &solver)?;
    let wall = started.elapsed().as_secs_f64();
    let metrics = score(&corrupted.ground_truth, &run.estimate)?;

    std::fs::create_dir_all(out_dir)?;
    let stem = format!("{}_{scenario}_{method_name}_{seed}", dataset.name);
    let manifest = serde_json::json!({
        "dataset": dataset,
        "scenario": scenario_spec,
        "method": method_name,
        "seed": seed,
        "solver": solver,
        "tuned": tuned,
        "operator": corrupted.operator_descriptor,
        "metrics": metrics,
        "wall_time_s": wall,
    });
    std::fs::write(
        out_dir.join(format!("{stem}.json")),
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| CoreError::InvalidArg(e.to_string()))?,
    )?;
    let observed = if corrupted.y.length() == corrupted.ground_truth.length() {
        Some(corrupted.y.channel(0))
    } else {
        None
    };
    overlay_svg(
        &out_dir.join(format!("{stem}.svg")),
        &stem,
        corrupted.ground_truth.channel(0),
        observed,
        run.estimate.channel(0),
    )?;
    if let Some(trace) = &run.loss_trace {
        let mut text = String::from("iteration,loss\n");
        for (i, l) in trace.iter().enumerate() {
            text.push_str(&format!("{i},{l}\n"));
        }
        std::fs::write(out_dir.join(format!("{stem}_trace.csv")), text)?;
        trace_svg(&out_dir.join(format!("{stem}_trace.svg")), &stem, trace)?;
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_input_spec_parses() {
        let spec = parse_input("synth:sines:n=256:seed=9", &[0], ',', false).unwrap();
        assert_eq!(spec.synth.as_deref(), Some("sines"));
        assert_eq!(spec.length, 256);
        assert_eq!(spec.seed, 9);
        assert!(parse_input("synth:sines:n=x", &[0], ',', false).is_err());
    }

    #[test]
    fn csv_input_spec_parses() {
        let spec = parse_input("data/foo.csv", &[1, 2], ';', true).unwrap();
        assert_eq!(spec.columns, vec![1, 2]);
        assert_eq!(spec.delimiter, ";");
        assert!(spec.has_header);
        assert_eq!(spec.name, "foo");
    }

    #[test]
    fn task_scenario_consistency() {
        assert!(check_task(TaskKind::Denoise, "d1").is_ok());
        assert!(check_task(TaskKind::Denoise, "i1").is_err());
        assert!(check_task(TaskKind::Impute, "i2").is_ok());
        assert!(check_task(TaskKind::CompressedSensing, "cs20").is_ok());
    }
}
