//! Linear degradation operators for the three tasks: identity (denoising),
//! diagonal binary mask (imputation), dense random projection (compressed
//! sensing). Multichannel inputs are mapped channel by channel.

use crate::error::{CoreError, Result};
use crate::rng::RngStream;
use crate::tensor::TensorBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum ForwardOperator {
    Identity {
        n: usize,
    },
    /// Diagonal binary mask; 1 = observed, 0 = missing. Output keeps
    /// length n with zeros at missing positions.
    Mask {
        mask: Vec<f64>,
    },
    /// Dense m x n matrix, row-major.
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        seed: u64,
    },
}

/// Compact, replayable description of an operator for run manifests.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorDescriptor {
    Identity { n: usize },
    RandomMask { n: usize, missing_rate: f64, seed: u64 },
    Gaussian { m: usize, n: usize, seed: u64 },
}

impl OperatorDescriptor {
    pub fn build(&self) -> Result<ForwardOperator> {
        match *self {
            OperatorDescriptor::Identity { n } => Ok(ForwardOperator::Identity { n }),
            OperatorDescriptor::RandomMask { n, missing_rate, seed } => {
                make_random_mask(n, missing_rate, &mut RngStream::seeded(seed))
            }
            OperatorDescriptor::Gaussian { m, n, seed } => make_gaussian_matrix(m, n, seed),
        }
    }
}

impl ForwardOperator {
    /// Signal-space length n.
    pub fn input_len(&self) -> usize {
        match self {
            ForwardOperator::Identity { n } => *n,
            ForwardOperator::Mask { mask } => mask.len(),
            ForwardOperator::Dense { cols, .. } => *cols,
        }
    }

    /// Measurement-space length m.
    pub fn output_len(&self) -> usize {
        match self {
            ForwardOperator::Identity { n } => *n,
            ForwardOperator::Mask { mask } => mask.len(),
            ForwardOperator::Dense { rows, .. } => *rows,
        }
    }

    /// Apply the operator channelwise.
    pub fn apply(&self, x: &TensorBuf) -> Result<TensorBuf> {
        if x.length() != self.input_len() {
            return Err(CoreError::ShapeMismatch(format!(
                "operator expects length {}, got {}",
                self.input_len(),
                x.length()
            )));
        }
        let c = x.channels();
        match self {
            ForwardOperator::Identity { .. } => Ok(x.clone()),
            ForwardOperator::Mask { mask } => {
                let mut out = x.clone();
                out.clear_grad();
                for ch in 0..c {
                    for (v, m) in out.channel_mut(ch).iter_mut().zip(mask) {
                        *v *= m;
                    }
                }
                Ok(out)
            }
            ForwardOperator::Dense { rows, cols, data, .. } => {
                let mut out = TensorBuf::zeros(c, *rows);
                for ch in 0..c {
                    let xr = x.channel(ch);
                    let or = out.channel_mut(ch);
                    for (i, o) in or.iter_mut().enumerate() {
                        let row = &data[i * cols..(i + 1) * cols];
                        *o = row.iter().zip(xr).map(|(a, b)| a * b).sum();
                    }
                }
                Ok(out)
            }
        }
    }

    /// Adjoint (transpose) applied channelwise; backprojection into
    /// signal space.
    pub fn adjoint(&self, y: &TensorBuf) -> Result<TensorBuf> {
        if y.length() != self.output_len() {
            return Err(CoreError::ShapeMismatch(format!(
                "adjoint expects length {}, got {}",
                self.output_len(),
                y.length()
            )));
        }
        let c = y.channels();
        match self {
            ForwardOperator::Identity { .. } => Ok(y.clone()),
            ForwardOperator::Mask { .. } => self.apply(y), // self-adjoint
            ForwardOperator::Dense { rows, cols, data, .. } => {
                let mut out = TensorBuf::zeros(c, *cols);
                for ch in 0..c {
                    let yr = y.channel(ch);
                    let or = out.channel_mut(ch);
                    for i in 0..*rows {
                        let row = &data[i * cols..(i + 1) * cols];
                        let yi = yr[i];
                        for (o, a) in or.iter_mut().zip(row) {
                            *o += a * yi;
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Observed measurement count over total signal length, for dense
    /// projections.
    pub fn compression_ratio(&self) -> Result<f64> {
        match self {
            ForwardOperator::Dense { rows, cols, .. } => Ok(*rows as f64 / *cols as f64),
            _ => Err(CoreError::InvalidArg(
                "compression ratio is defined for dense operators only".into(),
            )),
        }
    }
}

/// Mask with exactly round(missing_rate * n) zeros at positions sampled
/// without replacement.
pub fn make_random_mask(
    n: usize,
    missing_rate: f64,
    rng: &mut RngStream,
) -> Result<ForwardOperator> {
    if !(0.0..=1.0).contains(&missing_rate) {
        return Err(CoreError::InvalidArg(format!("missing rate {missing_rate} not in [0,1]")));
    }
    let zeros = (missing_rate * n as f64).round() as usize;
    let mut mask = vec![1.0; n];
    for i in rng.sample_indices(n, zeros) {
        mask[i] = 0.0;
    }
    Ok(ForwardOperator::Mask { mask })
}

/// Dense i.i.d. Gaussian matrix with entries of standard deviation
/// 1/sqrt(m), so measurements keep the data's scale.
pub fn make_gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<ForwardOperator> {
    if m == 0 || m > n {
        return Err(CoreError::InvalidArg(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    let std = 1.0 / (m as f64).sqrt();
    let mut rng = RngStream::seeded(seed);
    let data = (0..m * n).map(|_| std * rng.normal()).collect();
    Ok(ForwardOperator::Dense { rows: m, cols: n, data, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn identity_passthrough() {
        let op = ForwardOperator::Identity { n: 3 };
        let x = TensorBuf::from_vec(vec![5.0, 7.0, 9.0]);
        assert_eq!(op.apply(&x).unwrap().data(), x.data());
        assert_eq!(op.adjoint(&x).unwrap().data(), x.data());
    }

    #[test]
    fn mask_zeroes_missing() {
        let op = ForwardOperator::Mask { mask: vec![1.0, 0.0, 1.0] };
        let x = TensorBuf::from_vec(vec![5.0, 7.0, 9.0]);
        assert_eq!(op.apply(&x).unwrap().data(), &[5.0, 0.0, 9.0]);
    }

    #[test]
    fn dense_matvec_and_transpose() {
        let op = ForwardOperator::Dense {
            rows: 2,
            cols: 3,
            data: vec![1.0, 0.0, 1.0, 0.0, 2.0, 0.0],
            seed: 0,
        };
        let x = TensorBuf::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(op.apply(&x).unwrap().data(), &[4.0, 4.0]);
        let y = TensorBuf::from_vec(vec![1.0, 1.0]);
        assert_eq!(op.adjoint(&y).unwrap().data(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let op = ForwardOperator::Identity { n: 4 };
        let x = TensorBuf::from_vec(vec![1.0; 3]);
        assert!(op.apply(&x).is_err());
    }

    #[test]
    fn mask_counts_exact() {
        let rng = RngStream::seeded(1);
        for (rate, expect) in [(0.0, 0usize), (1.0, 1000), (0.5, 500)] {
            let op = make_random_mask(1000, rate, &mut rng.split(&format!("{rate}"))).unwrap();
            if let ForwardOperator::Mask { mask } = op {
                let zeros = mask.iter().filter(|&&m| m == 0.0).count();
                assert_eq!(zeros, expect, "rate {rate}");
            } else {
                panic!("expected mask");
            }
        }
    }

    #[test]
    fn gaussian_matrix_deterministic_and_ratio() {
        let a = make_gaussian_matrix(200, 1000, 9).unwrap();
        let b = make_gaussian_matrix(200, 1000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.compression_ratio().unwrap(), 0.2);
        assert_eq!(
            make_gaussian_matrix(50, 100, 0).unwrap().compression_ratio().unwrap(),
            0.5
        );
        assert!(make_gaussian_matrix(101, 100, 0).is_err());
        assert!(ForwardOperator::Identity { n: 3 }.compression_ratio().is_err());
    }

    #[test]
    fn gaussian_matrix_near_isometry() {
        let op = make_gaussian_matrix(64, 64, 3).unwrap();
        let mut rng = RngStream::seeded(4);
        let mut ratio_sum = 0.0;
        let trials = 200;
        for _ in 0..trials {
            let x = TensorBuf::from_vec((0..64).map(|_| rng.normal()).collect());
            let y = op.apply(&x).unwrap();
            let nx: f64 = x.data().iter().map(|v| v * v).sum();
            let ny: f64 = y.data().iter().map(|v| v * v).sum();
            ratio_sum += ny / nx;
        }
        let mean_ratio = ratio_sum / trials as f64;
        assert!((mean_ratio - 1.0).abs() < 0.05, "mean energy ratio {mean_ratio}");
    }

    #[test]
    fn adjoint_inner_product_identity() {
        let rng = RngStream::seeded(77);
        for trial in 0..100 {
            let mut r = rng.split_indexed("t", trial);
            let n = 8 + r.below(24);
            let op = match trial % 3 {
                0 => ForwardOperator::Identity { n },
                1 => make_random_mask(n, 0.3, &mut r.split("mask")).unwrap(),
                _ => make_gaussian_matrix(1 + r.below(n), n, r.below(1 << 30) as u64).unwrap(),
            };
            let m = op.output_len();
            let x = TensorBuf::from_vec((0..n).map(|_| r.normal()).collect());
            let y = TensorBuf::from_vec((0..m).map(|_| r.normal()).collect());
            let lhs = dot(op.apply(&x).unwrap().data(), y.data());
            let rhs = dot(x.data(), op.adjoint(&y).unwrap().data());
            assert!((lhs - rhs).abs() < 1e-10, "trial {trial}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let d = OperatorDescriptor::Gaussian { m: 16, n: 32, seed: 5 };
        let op1 = d.build().unwrap();
        let op2 = d.build().unwrap();
        assert_eq!(op1, op2);
        let d = OperatorDescriptor::RandomMask { n: 20, missing_rate: 0.25, seed: 3 };
        assert_eq!(d.build().unwrap(), d.build().unwrap());
    }

    proptest! {
        #[test]
        fn apply_is_linear(seed in 0u64..500, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut rng = RngStream::seeded(seed);
            let n = 12;
            let op = match seed % 3 {
                0 => ForwardOperator::Identity { n },
                1 => make_random_mask(n, 0.4, &mut rng.split("m")).unwrap(),
                _ => make_gaussian_matrix(6, n, seed).unwrap(),
            };
            let x = TensorBuf::from_vec((0..n).map(|_| rng.normal()).collect());
            let y = TensorBuf::from_vec((0..n).map(|_| rng.normal()).collect());
            let mix = TensorBuf::from_vec(
                x.data().iter().zip(y.data()).map(|(u, v)| a * u + b * v).collect(),
            );
            let lhs = op.apply(&mix).unwrap();
            let (ax, ay) = (op.apply(&x).unwrap(), op.apply(&y).unwrap());
            for i in 0..lhs.len() {
                let rhs = a * ax.data()[i] + b * ay.data()[i];
                prop_assert!((lhs.data()[i] - rhs).abs() < 1e-12);
            }
        }

        #[test]
        fn mask_idempotent(seed in 0u64..200) {
            let mut rng = RngStream::seeded(seed);
            let op = make_random_mask(30, 0.5, &mut rng).unwrap();
            let x = TensorBuf::from_vec((0..30).map(|_| rng.normal()).collect());
            let once = op.apply(&x).unwrap();
            let twice = op.apply(&once).unwrap();
            prop_assert_eq!(once.data(), twice.data());
        }
    }
}
