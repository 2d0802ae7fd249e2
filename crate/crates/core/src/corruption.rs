//! Corruption scenario generators: Gaussian noise with optional clipping,
//! outlier injection, MCAR missingness, and corrupted compressed
//! measurements. Every scenario is bit-reproducible from (clean, spec).

use crate::error::{CoreError, Result};
use crate::operators::{make_gaussian_matrix, make_random_mask, ForwardOperator, OperatorDescriptor};
use crate::rng::RngStream;
use crate::tensor::TensorBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Denoise,
    Impute,
    CompressedSensing,
}

/// Full description of one corruption pipeline.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub task: TaskKind,
    pub gaussian_sigma: f64,
    pub clip: bool,
    pub outlier_fraction: f64,
    pub missing_rate: f64,
    pub compression_ratio: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Build one of the named scenarios: `d1 d2 d3 i1 i2 cs20 cs50`.
    pub fn from_id(id: &str, seed: u64) -> Result<ScenarioSpec> {
        let base = ScenarioSpec {
            id: id.to_string(),
            task: TaskKind::Denoise,
            gaussian_sigma: 0.0,
            clip: false,
            outlier_fraction: 0.0,
            missing_rate: 0.0,
            compression_ratio: 1.0,
            seed,
        };
        Ok(match id {
            "d1" => ScenarioSpec { gaussian_sigma: 0.1, clip: true, ..base },
            "d2" => ScenarioSpec { gaussian_sigma: 0.3, clip: true, ..base },
            "d3" => ScenarioSpec { gaussian_sigma: 0.1, outlier_fraction: 0.1, ..base },
            "i1" => ScenarioSpec {
                task: TaskKind::Impute,
                missing_rate: 0.2,
                outlier_fraction: 0.1,
                ..base
            },
            "i2" => ScenarioSpec {
                task: TaskKind::Impute,
                missing_rate: 0.5,
                outlier_fraction: 0.1,
                ..base
            },
            "cs20" => ScenarioSpec {
                task: TaskKind::CompressedSensing,
                compression_ratio: 0.2,
                outlier_fraction: 0.1,
                ..base
            },
            "cs50" => ScenarioSpec {
                task: TaskKind::CompressedSensing,
                compression_ratio: 0.5,
                outlier_fraction: 0.1,
                ..base
            },
            other => {
                // parametrized missingness, e.g. i:35 for a 35% MCAR rate
                if let Some(pct) = other.strip_prefix("i:") {
                    let pct: f64 = pct
                        .parse()
                        .map_err(|_| CoreError::InvalidArg(format!("bad scenario {other:?}")))?;
                    if !(0.0..=100.0).contains(&pct) {
                        return Err(CoreError::InvalidArg(format!(
                            "missing rate {pct}% out of range"
                        )));
                    }
                    return Ok(ScenarioSpec {
                        task: TaskKind::Impute,
                        missing_rate: pct / 100.0,
                        outlier_fraction: 0.1,
                        ..base
                    });
                }
                return Err(CoreError::InvalidArg(format!("unknown scenario {other:?}")));
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.gaussian_sigma < 0.0
            || !in_unit(self.outlier_fraction)
            || !in_unit(self.missing_rate)
            || !(self.compression_ratio > 0.0 && self.compression_ratio <= 1.0)
        {
            return Err(CoreError::InvalidArg(format!("scenario {:?} out of range", self.id)));
        }
        Ok(())
    }
}

/// An observation generated from a clean series, along with everything
/// needed to score and replay it.
#[derive(Debug, Clone)]
pub struct Corrupted {
    pub y: TensorBuf,
    pub ground_truth: TensorBuf,
    pub operator: ForwardOperator,
    pub operator_descriptor: OperatorDescriptor,
    /// Flat indices (channel-major) of replaced entries in `y`.
    pub outlier_indices: Vec<usize>,
    /// Observation mask when the task is imputation.
    pub mask: Option<Vec<f64>>,
}

/// Add i.i.d. zero-mean Gaussian noise of the given standard deviation.
pub fn add_gaussian_noise(x: &[f64], sigma: f64, rng: &mut RngStream) -> Result<Vec<f64>> {
    if sigma < 0.0 {
        return Err(CoreError::InvalidArg("sigma must be non-negative".into()));
    }
    Ok(x.iter().map(|&v| v + sigma * rng.normal()).collect())
}

/// Clamp every element to [0, 1].
pub fn clip_unit(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.clamp(0.0, 1.0)).collect()
}

/// Replace exactly round(fraction * n) entries, sampled without
/// replacement, by uniform [0, 1) draws. Returns the modified vector and
/// the sorted replaced indices.
pub fn inject_outliers(
    x: &[f64],
    fraction: f64,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CoreError::InvalidArg(format!("outlier fraction {fraction} not in [0,1]")));
    }
    let count = (fraction * x.len() as f64).round() as usize;
    let mut out = x.to_vec();
    let mut idx = rng.sample_indices(x.len(), count);
    idx.sort_unstable();
    for &i in &idx {
        out[i] = rng.uniform();
    }
    Ok((out, idx))
}

/// Replace round(fraction * pool.len()) entries chosen from the given
/// index pool.
fn inject_outliers_in_pool(
    x: &mut [f64],
    pool: &[usize],
    fraction: f64,
    rng: &mut RngStream,
) -> Vec<usize> {
    let count = (fraction * pool.len() as f64).round() as usize;
    let mut picked: Vec<usize> =
        rng.sample_indices(pool.len(), count).into_iter().map(|i| pool[i]).collect();
    picked.sort_unstable();
    for &i in &picked {
        x[i] = rng.uniform();
    }
    picked
}

/// Run the full corruption pipeline for a scenario. The clean series is
/// expected in [0, 1].
pub fn make_scenario(clean: &TensorBuf, spec: &ScenarioSpec) -> Result<Corrupted> {
    spec.validate()?;
    let (c, n) = (clean.channels(), clean.length());
    let rng = RngStream::seeded(spec.seed).split("scenario").split(&spec.id);

    match spec.task {
        TaskKind::Denoise => {
            let operator = ForwardOperator::Identity { n };
            let mut y = TensorBuf::zeros(c, n);
            let mut outliers = Vec::new();
            for ch in 0..c {
                let mut stream = rng.split_indexed("noise", ch as u64);
                let mut row = add_gaussian_noise(clean.channel(ch), spec.gaussian_sigma, &mut stream)?;
                if spec.outlier_fraction > 0.0 {
                    let mut ostream = rng.split_indexed("outliers", ch as u64);
                    let (replaced, idx) = inject_outliers(&row, spec.outlier_fraction, &mut ostream)?;
                    row = replaced;
                    outliers.extend(idx.into_iter().map(|i| ch * n + i));
                }
                if spec.clip {
                    row = clip_unit(&row);
                }
                y.channel_mut(ch).copy_from_slice(&row);
            }
            Ok(Corrupted {
                y,
                ground_truth: clean.clone(),
                operator,
                operator_descriptor: OperatorDescriptor::Identity { n },
                outlier_indices: outliers,
                mask: None,
            })
        }
        TaskKind::Impute => {
            let mask_seed = rng.split("mask").seed();
            let operator =
                make_random_mask(n, spec.missing_rate, &mut RngStream::seeded(mask_seed))?;
            let mask = match &operator {
                ForwardOperator::Mask { mask } => mask.clone(),
                _ => unreachable!(),
            };
            let observed: Vec<usize> =
                (0..n).filter(|&i| mask[i] == 1.0).collect();
            if observed.is_empty() {
                return Err(CoreError::InvalidArg("scenario leaves no observed entries".into()));
            }
            let mut y = operator.apply(clean)?;
            let mut outliers = Vec::new();
            for ch in 0..c {
                let mut ostream = rng.split_indexed("outliers", ch as u64);
                let idx = inject_outliers_in_pool(
                    y.channel_mut(ch),
                    &observed,
                    spec.outlier_fraction,
                    &mut ostream,
                );
                outliers.extend(idx.into_iter().map(|i| ch * n + i));
            }
            Ok(Corrupted {
                y,
                ground_truth: clean.clone(),
                operator,
                operator_descriptor: OperatorDescriptor::RandomMask {
                    n,
                    missing_rate: spec.missing_rate,
                    seed: mask_seed,
                },
                outlier_indices: outliers,
                mask: Some(mask),
            })
        }
        TaskKind::CompressedSensing => {
            let m = (spec.compression_ratio * n as f64).round() as usize;
            if m == 0 {
                return Err(CoreError::InvalidArg("compression ratio leaves no measurements".into()));
            }
            let matrix_seed = rng.split("matrix").seed();
            let operator = make_gaussian_matrix(m, n, matrix_seed)?;
            let mut y = operator.apply(clean)?;
            let mut outliers = Vec::new();
            for ch in 0..c {
                let mut ostream = rng.split_indexed("outliers", ch as u64);
                let (replaced, idx) =
                    inject_outliers(y.channel(ch), spec.outlier_fraction, &mut ostream)?;
                y.channel_mut(ch).copy_from_slice(&replaced);
                outliers.extend(idx.into_iter().map(|i| ch * m + i));
            }
            Ok(Corrupted {
                y,
                ground_truth: clean.clone(),
                operator,
                operator_descriptor: OperatorDescriptor::Gaussian { m, n, seed: matrix_seed },
                outlier_indices: outliers,
                mask: None,
            })
        }
    }
}
