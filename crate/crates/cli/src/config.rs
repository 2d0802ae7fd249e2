//! Benchmark configuration: a flat TOML file with dotted keys mirroring
//! the library types. `BenchConfig::default()` is the embedded desk-scale
//! suite used by `rinst bench --default`.

use std::path::{Path, PathBuf};

use rinst_core::data::{load_series_csv, minmax_normalize, segment, synth, CsvSpec, Series, SynthParams};
use rinst_core::error::{CoreError, Result};
use rinst_core::solver::SolverConfig;

/// One dataset: either a CSV path or a synthetic spec.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub name: String,
    /// CSV path; leave empty to use `synth`.
    pub path: Option<PathBuf>,
    pub columns: Vec<usize>,
    pub delimiter: String,
    pub has_header: bool,
    /// Synthetic kind: sines | seasonal_trend | piecewise | multichannel.
    pub synth: Option<String>,
    pub length: usize,
    pub channels: usize,
    pub seed: u64,
    pub segment_start: Option<usize>,
    pub segment_len: Option<usize>,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            name: "seasonal".into(),
            path: None,
            columns: vec![0],
            delimiter: ",".into(),
            has_header: false,
            synth: Some("seasonal_trend".into()),
            length: 1024,
            channels: 1,
            seed: 7,
            segment_start: None,
            segment_len: None,
        }
    }
}

impl DatasetSpec {
    /// Load (or generate) the series, min-max normalized to [0, 1].
    pub fn load(&self) -> Result<Series> {
        let mut series = match (&self.path, &self.synth) {
            (Some(path), _) => {
                let spec = CsvSpec {
                    columns: self.columns.clone(),
                    delimiter: self.delimiter.chars().next().unwrap_or(','),
                    has_header: self.has_header,
                };
                load_series_csv(path, &spec)?
            }
            (None, Some(kind)) => {
                let kind = kind.parse()?;
                synth(kind, self.length, self.seed, &SynthParams { channels: self.channels })?
            }
            (None, None) => {
                return Err(CoreError::InvalidArg(format!(
                    "dataset {}: neither path nor synth given",
                    self.name
                )))
            }
        };
        series.name = self.name.clone();
        if let (Some(start), Some(len)) = (self.segment_start, self.segment_len) {
            series = segment(&series, start, len)?;
        }
        let (normalized, _params) = minmax_normalize(&series)?;
        Ok(normalized)
    }
}

/// Hyperparameter grids searched per (scenario, method) on a held-out
/// synthetic signal.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BaselineGrids {
    pub gaussian_sigma: Vec<f64>,
    pub median_window: Vec<usize>,
    pub wiener_window: Vec<usize>,
    pub tv_lambda: Vec<f64>,
    pub wavelet_levels: Vec<usize>,
    pub impute_window: Vec<usize>,
    /// Seed of the held-out tuning signal.
    pub holdout_seed: u64,
}

impl Default for BaselineGrids {
    fn default() -> Self {
        BaselineGrids {
            gaussian_sigma: vec![1.0, 2.0, 3.0, 5.0, 8.0],
            median_window: vec![3, 5, 7, 9, 13],
            wiener_window: vec![5, 9, 15, 21],
            tv_lambda: vec![0.05, 0.1, 0.2, 0.4, 0.8, 1.6],
            wavelet_levels: vec![3, 4, 5],
            impute_window: vec![9, 15, 21],
            holdout_seed: 0x5eed_0u64,
        }
    }
}

/// Whole benchmark run description.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub out_dir: PathBuf,
    pub datasets: Vec<DatasetSpec>,
    pub scenarios: Vec<String>,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub grids: BaselineGrids,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            out_dir: PathBuf::from("out/bench"),
            datasets: vec![
                DatasetSpec::default(),
                DatasetSpec {
                    name: "sines".into(),
                    synth: Some("sines".into()),
                    seed: 11,
                    ..DatasetSpec::default()
                },
            ],
            scenarios: vec!["d1".into(), "d3".into(), "i1".into(), "cs50".into()],
            methods: vec![
                "noisy".into(),
                "gaussian".into(),
                "median".into(),
                "wiener".into(),
                "wavelet".into(),
                "tv".into(),
                "zero".into(),
                "mean".into(),
                "median-imp".into(),
                "spline".into(),
                "dip".into(),
                "rinst".into(),
            ],
            seeds: vec![0, 1, 2, 3, 4],
            solver: SolverConfig::default(),
            grids: BaselineGrids::default(),
        }
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<BenchConfig> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| CoreError::InvalidArg(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() || self.scenarios.is_empty() || self.methods.is_empty() {
            return Err(CoreError::InvalidArg(
                "datasets, scenarios, and methods must be non-empty".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(CoreError::InvalidArg("need at least one seed".into()));
        }
        self.solver.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = BenchConfig::default();
        let text = cfg.to_toml();
        let back: BenchConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.scenarios, cfg.scenarios);
        assert_eq!(back.solver, cfg.solver);
        assert_eq!(back.seeds, cfg.seeds);
    }

    #[test]
    fn solver_keys_are_snake_case_names() {
        let text = BenchConfig::default().to_toml();
        for key in [
            "iterations",
            "huber_lambda",
            "alpha",
            "perturb_sigma",
            "guide_sigma",
            "guided_input",
            "perturbation",
            "convex_combo",
            "num_encoder_layers",
            "encoder_channel_sizes",
            "decoder_channel_sizes",
            "skip_channel_sizes",
            "encoder_kernel_size",
            "skip_kernel_size",
            "activation_slope",
            "upsample_mode",
            "downsample_mode",
        ] {
            assert!(text.contains(key), "missing key {key} in:\n{text}");
        }
    }

    #[test]
    fn synthetic_dataset_loads_normalized() {
        let ds = DatasetSpec::default();
        let s = ds.load().unwrap();
        assert_eq!(s.values.length(), 1024);
        let mn = s.values.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let mx = s.values.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(mn >= 0.0 && mx <= 1.0);
    }
}
