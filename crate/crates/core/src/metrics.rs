//! Reconstruction scoring: RMSE, MAE, and SNR in dB against ground truth.
//! Multichannel inputs are flattened; imputation and denoising are scored
//! over the full signal.

use crate::error::{CoreError, Result};
use crate::tensor::TensorBuf;

/// One scored reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreRow {
    pub rmse: f64,
    pub mae: f64,
    pub snr_db: f64,
    pub n: usize,
}

fn check_lengths(x: &[f64], x_hat: &[f64]) -> Result<()> {
    if x.len() != x_hat.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "metric inputs of lengths {} and {}",
            x.len(),
            x_hat.len()
        )));
    }
    Ok(())
}

pub fn rmse(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_lengths(x, x_hat)?;
    let ms = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64;
    Ok(ms.sqrt())
}

pub fn mae(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_lengths(x, x_hat)?;
    Ok(x.iter().zip(x_hat).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64)
}

/// 10 log10(signal power / error power). Exact reconstruction returns the
/// +infinity sentinel; an all-zero reference is rejected.
pub fn snr_db(x: &[f64], x_hat: &[f64]) -> Result<f64> {
    check_lengths(x, x_hat)?;
    let sig: f64 = x.iter().map(|v| v * v).sum();
    if sig == 0.0 {
        return Err(CoreError::InvalidArg("snr undefined for all-zero reference".into()));
    }
    let err: f64 = x.iter().zip(x_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (sig / err).log10())
}

/// Score a reconstruction against ground truth (flattening channels).
pub fn score(truth: &TensorBuf, estimate: &TensorBuf) -> Result<ScoreRow> {
    let (x, x_hat) = (truth.data(), estimate.data());
    Ok(ScoreRow {
        rmse: rmse(x, x_hat)?,
        mae: mae(x, x_hat)?,
        snr_db: snr_db(x, x_hat)?,
        n: x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.5);
        assert!(rmse(&[0.0; 3], &[0.0; 4]).is_err());
    }

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
    }

    #[test]
    fn snr_cases() {
        assert_eq!(snr_db(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), f64::INFINITY);
        assert_eq!(snr_db(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(snr_db(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn snr_rmse_identity() {
        let mut rng = RngStream::seeded(8);
        for _ in 0..100 {
            let n = 16 + rng.below(100);
            let x: Vec<f64> = (0..n).map(|_| rng.normal() + 0.5).collect();
            let xh: Vec<f64> = x.iter().map(|v| v + 0.1 * rng.normal()).collect();
            let lhs = snr_db(&x, &xh).unwrap();
            let mean_pow = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
            let rhs = 10.0 * mean_pow.log10() - 20.0 * rmse(&x, &xh).unwrap().log10();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(seed in 0u64..300) {
            let mut rng = RngStream::seeded(seed);
            let n = 8 + rng.below(64);
            let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            prop_assert!(mae(&x, &y).unwrap() <= rmse(&x, &y).unwrap() + 1e-12);
        }

        #[test]
        fn snr_scale_invariant(seed in 0u64..300, c in prop::sample::select(
            vec![-3.0f64, -0.5, 0.25, 2.0, 10.0]
        )) {
            let mut rng = RngStream::seeded(seed);
            let n = 8 + rng.below(64);
            let x: Vec<f64> = (0..n).map(|_| rng.normal() + 1.0).collect();
            let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng.normal()).collect();
            let base = snr_db(&x, &y).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| c * v).collect();
            let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
            prop_assert!((snr_db(&xs, &ys).unwrap() - base).abs() < 1e-9);
        }
    }
}
