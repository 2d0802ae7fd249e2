//! Per-(scenario, method) baseline hyperparameter selection by grid search
//! on a held-out synthetic signal, never on the evaluation data.

use rinst_core::corruption::{make_scenario, ScenarioSpec};
use rinst_core::data::{synth, SynthKind, SynthParams};
use rinst_core::error::Result;
use rinst_core::metrics::snr_db;
use rinst_core::solver::SolverConfig;

use crate::config::BaselineGrids;
use crate::methods::{run_method, Method, TunedParams};

/// Grid-search one method's hyperparameter on the held-out signal under
/// the given scenario, maximizing SNR. Methods without hyperparameters
/// return the defaults unchanged.
pub fn tune_method(
    method: Method,
    scenario_id: &str,
    grids: &BaselineGrids,
) -> Result<TunedParams> {
    let mut tuned = TunedParams {
        wavelet_levels: *grids.wavelet_levels.last().unwrap_or(&5),
        ..TunedParams::default()
    };
    let candidates: Vec<TunedParams> = match method {
        Method::Gaussian => grids
            .gaussian_sigma
            .iter()
            .map(|&v| TunedParams { gaussian_sigma: v, ..tuned })
            .collect(),
        Method::Median => grids
            .median_window
            .iter()
            .map(|&v| TunedParams { median_window: v, ..tuned })
            .collect(),
        Method::Wiener => grids
            .wiener_window
            .iter()
            .map(|&v| TunedParams { wiener_window: v, ..tuned })
            .collect(),
        Method::Tv => grids
            .tv_lambda
            .iter()
            .map(|&v| TunedParams { tv_lambda: v, ..tuned })
            .collect(),
        Method::Wavelet => grids
            .wavelet_levels
            .iter()
            .map(|&v| TunedParams { wavelet_levels: v, ..tuned })
            .collect(),
        Method::Mean | Method::MedianImp => grids
            .impute_window
            .iter()
            .map(|&v| TunedParams { impute_window: v, ..tuned })
            .collect(),
        // no hyperparameters to search
        _ => return Ok(tuned),
    };
    if candidates.is_empty() {
        return Ok(tuned);
    }

    let holdout = synth(
        SynthKind::SeasonalTrend,
        1024,
        grids.holdout_seed,
        &SynthParams::default(),
    )?;
    let spec = ScenarioSpec::from_id(scenario_id, grids.holdout_seed ^ 0x9e37)?;
    let corrupted = make_scenario(&holdout.values, &spec)?;
    let solver_cfg = SolverConfig::default();

    let mut best_snr = f64::NEG_INFINITY;
    for cand in candidates {
        let run = match run_method(method, &corrupted, &cand, &solver_cfg) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let s = snr_db(corrupted.ground_truth.data(), run.estimate.data())?;
        if s > best_snr {
            best_snr = s;
            tuned = cand;
        }
    }
    Ok(tuned)
}
