//! Method registry: name parsing, task applicability, and dispatch.

use rinst_core::baselines::{
    gaussian_filter, impute_mean, impute_median, impute_spline, impute_zero, median_filter,
    tv_denoise, wavelet_denoise, wiener_filter, ThresholdRule, WaveletSpec,
};
use rinst_core::corruption::{Corrupted, TaskKind};
use rinst_core::error::{CoreError, Result};
use rinst_core::solver::{solve, solve_dip, SolverConfig};
use rinst_core::tensor::TensorBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// The corrupted observation itself, as a reference row.
    Noisy,
    Gaussian,
    Median,
    Wiener,
    Wavelet,
    Tv,
    Zero,
    Mean,
    MedianImp,
    Spline,
    Dip,
    Rinst,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::Noisy,
        Method::Gaussian,
        Method::Median,
        Method::Wiener,
        Method::Wavelet,
        Method::Tv,
        Method::Zero,
        Method::Mean,
        Method::MedianImp,
        Method::Spline,
        Method::Dip,
        Method::Rinst,
    ];

    pub fn parse(name: &str) -> Result<Method> {
        Ok(match name {
            "noisy" => Method::Noisy,
            "gaussian" => Method::Gaussian,
            "median" => Method::Median,
            "wiener" => Method::Wiener,
            "wavelet" => Method::Wavelet,
            "tv" => Method::Tv,
            "zero" => Method::Zero,
            "mean" => Method::Mean,
            "median-imp" => Method::MedianImp,
            "spline" => Method::Spline,
            "dip" => Method::Dip,
            "rinst" => Method::Rinst,
            other => return Err(CoreError::InvalidArg(format!("unknown method {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Noisy => "noisy",
            Method::Gaussian => "gaussian",
            Method::Median => "median",
            Method::Wiener => "wiener",
            Method::Wavelet => "wavelet",
            Method::Tv => "tv",
            Method::Zero => "zero",
            Method::Mean => "mean",
            Method::MedianImp => "median-imp",
            Method::Spline => "spline",
            Method::Dip => "dip",
            Method::Rinst => "rinst",
        }
    }

    pub fn applies_to(&self, task: TaskKind) -> bool {
        match self {
            Method::Noisy | Method::Gaussian | Method::Median | Method::Wiener
            | Method::Wavelet | Method::Tv => task == TaskKind::Denoise,
            Method::Zero | Method::Mean | Method::MedianImp | Method::Spline => {
                task == TaskKind::Impute
            }
            Method::Dip | Method::Rinst => true,
        }
    }

    pub fn is_solver(&self) -> bool {
        matches!(self, Method::Dip | Method::Rinst)
    }
}

/// Baseline hyperparameters after grid selection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TunedParams {
    pub gaussian_sigma: f64,
    pub median_window: usize,
    pub wiener_window: usize,
    pub tv_lambda: f64,
    pub wavelet_levels: usize,
    pub impute_window: usize,
}

impl Default for TunedParams {
    fn default() -> Self {
        TunedParams {
            gaussian_sigma: 2.0,
            median_window: 5,
            wiener_window: 9,
            tv_lambda: 0.2,
            wavelet_levels: 5,
            impute_window: 15,
        }
    }
}

fn per_channel(
    y: &TensorBuf,
    f: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<TensorBuf> {
    let mut out = y.clone();
    out.clear_grad();
    for ch in 0..y.channels() {
        let row = f(y.channel(ch))?;
        out.channel_mut(ch).copy_from_slice(&row);
    }
    Ok(out)
}

/// Output of one method run.
pub struct MethodRun {
    pub estimate: TensorBuf,
    pub loss_trace: Option<Vec<f64>>,
}

/// Run a method on a corrupted instance. `solver_cfg` must already carry
/// the per-cell seed and channel counts.
pub fn run_method(
    method: Method,
    corrupted: &Corrupted,
    tuned: &TunedParams,
    solver_cfg: &SolverConfig,
) -> Result<MethodRun> {
    let y = &corrupted.y;
    let task = match corrupted.operator {
        rinst_core::operators::ForwardOperator::Identity { .. } => TaskKind::Denoise,
        rinst_core::operators::ForwardOperator::Mask { .. } => TaskKind::Impute,
        rinst_core::operators::ForwardOperator::Dense { .. } => TaskKind::CompressedSensing,
    };
    if !method.applies_to(task) {
        return Err(CoreError::InvalidArg(format!(
            "method {} does not apply to {task:?}",
            method.name()
        )));
    }
    let estimate = match method {
        Method::Noisy => {
            let mut e = y.clone();
            e.clear_grad();
            e
        }
        Method::Gaussian => per_channel(y, |row| gaussian_filter(row, tuned.gaussian_sigma))?,
        Method::Median => per_channel(y, |row| median_filter(row, tuned.median_window))?,
        Method::Wiener => per_channel(y, |row| wiener_filter(row, tuned.wiener_window, None))?,
        Method::Wavelet => per_channel(y, |row| {
            wavelet_denoise(
                row,
                &WaveletSpec { levels: tuned.wavelet_levels, rule: ThresholdRule::Universal },
            )
        })?,
        Method::Tv => per_channel(y, |row| tv_denoise(row, tuned.tv_lambda))?,
        Method::Zero | Method::Mean | Method::MedianImp | Method::Spline => {
            let mask = corrupted
                .mask
                .as_ref()
                .ok_or_else(|| CoreError::InvalidArg("imputation needs a mask".into()))?;
            per_channel(y, |row| match method {
                Method::Zero => impute_zero(row, mask),
                Method::Mean => impute_mean(row, mask, tuned.impute_window),
                Method::MedianImp => impute_median(row, mask, tuned.impute_window),
                Method::Spline => impute_spline(row, mask),
                _ => unreachable!(),
            })?
        }
        Method::Dip | Method::Rinst => {
            let result = if method == Method::Dip {
                solve_dip(y, &corrupted.operator, solver_cfg)?
            } else {
                solve(y, &corrupted.operator, solver_cfg)?
            };
            return Ok(MethodRun { estimate: result.x_hat, loss_trace: Some(result.loss_trace) });
        }
    };
    Ok(MethodRun { estimate, loss_trace: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rinst_core::corruption::{make_scenario, ScenarioSpec};
    use rinst_core::data::{synth, SynthKind, SynthParams};

    #[test]
    fn parse_all_names() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("nope").is_err());
    }

    #[test]
    fn applicability_matrix() {
        assert!(Method::Tv.applies_to(TaskKind::Denoise));
        assert!(!Method::Tv.applies_to(TaskKind::Impute));
        assert!(Method::Spline.applies_to(TaskKind::Impute));
        assert!(!Method::Spline.applies_to(TaskKind::Denoise));
        assert!(Method::Rinst.applies_to(TaskKind::CompressedSensing));
        assert!(!Method::Gaussian.applies_to(TaskKind::CompressedSensing));
    }

    #[test]
    fn baselines_run_on_scenarios() {
        let clean = synth(SynthKind::Sines, 128, 3, &SynthParams::default()).unwrap().values;
        let tuned = TunedParams::default();
        let cfg = SolverConfig::default();

        let d = make_scenario(&clean, &ScenarioSpec::from_id("d1", 5).unwrap()).unwrap();
        for m in [Method::Noisy, Method::Gaussian, Method::Median, Method::Wiener, Method::Wavelet, Method::Tv] {
            let run = run_method(m, &d, &tuned, &cfg).unwrap();
            assert_eq!(run.estimate.length(), 128, "{}", m.name());
        }

        let i = make_scenario(&clean, &ScenarioSpec::from_id("i1", 5).unwrap()).unwrap();
        for m in [Method::Zero, Method::Mean, Method::MedianImp, Method::Spline] {
            let run = run_method(m, &i, &tuned, &cfg).unwrap();
            assert_eq!(run.estimate.length(), 128, "{}", m.name());
        }

        // wrong-task dispatch is rejected
        assert!(run_method(Method::Tv, &i, &tuned, &cfg).is_err());
    }
}
