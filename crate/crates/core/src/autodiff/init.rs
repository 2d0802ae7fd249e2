use crate::autodiff::param::{ParamId, ParamSet, ParamShape};
use crate::error::Result;
use crate::rng::RngStream;

/// Fan-in standard deviation for a conv kernel bank: sqrt(2 / (cin * k)).
pub fn kernel_std(cin: usize, k: usize) -> f64 {
    (2.0 / (cin * k) as f64).sqrt()
}

/// Gaussian kernel-bank draw with fan-in scaling. Deterministic given the
/// stream; consumes cout*cin*k draws in row-major order.
pub fn gaussian_kernel(rng: &mut RngStream, cout: usize, cin: usize, k: usize) -> Vec<f64> {
    let std = kernel_std(cin, k);
    (0..cout * cin * k).map(|_| std * rng.normal()).collect()
}

/// Add a freshly initialized conv layer (kernel + zero bias) to the set.
pub fn add_conv_layer(
    params: &mut ParamSet,
    rng: &mut RngStream,
    name: &str,
    cout: usize,
    cin: usize,
    k: usize,
) -> Result<(ParamId, ParamId)> {
    let w = params.add(
        &format!("{name}.weight"),
        ParamShape::Conv { cout, cin, k },
        gaussian_kernel(rng, cout, cin, k),
    )?;
    let b = params.add(
        &format!("{name}.bias"),
        ParamShape::PerChannel { c: cout },
        vec![0.0; cout],
    )?;
    Ok((w, b))
}

/// Add a channel-norm affine pair (scale = 1, shift = 0).
pub fn add_norm_layer(
    params: &mut ParamSet,
    name: &str,
    c: usize,
) -> Result<(ParamId, ParamId)> {
    let scale =
        params.add(&format!("{name}.scale"), ParamShape::PerChannel { c }, vec![1.0; c])?;
    let shift =
        params.add(&format!("{name}.shift"), ParamShape::PerChannel { c }, vec![0.0; c])?;
    Ok((scale, shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let mut a = RngStream::seeded(11);
        let mut b = RngStream::seeded(11);
        assert_eq!(gaussian_kernel(&mut a, 4, 3, 3), gaussian_kernel(&mut b, 4, 3, 3));
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = RngStream::seeded(11);
        let mut b = RngStream::seeded(12);
        assert_ne!(gaussian_kernel(&mut a, 4, 3, 3), gaussian_kernel(&mut b, 4, 3, 3));
    }

    #[test]
    fn sample_statistics_match_rule() {
        let mut rng = RngStream::seeded(5);
        let (cin, k) = (8, 3);
        let n = 100_000;
        // cout chosen so the draw count is n
        let draws = gaussian_kernel(&mut rng, n / (cin * k), cin, k);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let std = (draws.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let rule = kernel_std(cin, k);
        assert!(mean.abs() < 3.0 * rule / n.sqrt(), "mean {mean}");
        assert!((std - rule).abs() < 0.02 * rule, "std {std} vs rule {rule}");
    }
}
