//! Exact 1D total-variation denoising:
//! argmin_x 0.5 ||x - y||^2 + lambda * sum |x_{i+1} - x_i|
//! via a direct single-pass taut-string sweep. Runs in O(n) and returns
//! the exact minimizer of the strictly convex objective.

use crate::error::{CoreError, Result};

/// Regularization weight for `tv_denoise`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TvSpec {
    pub tv_lambda: f64,
}

/// Direct 1D total-variation denoiser.
pub fn tv_denoise(y: &[f64], tv_lambda: f64) -> Result<Vec<f64>> {
    if tv_lambda < 0.0 {
        return Err(CoreError::InvalidArg(format!("tv lambda {tv_lambda} must be >= 0")));
    }
    let n = y.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if tv_lambda == 0.0 || n == 1 {
        return Ok(y.to_vec());
    }

    let lambda = tv_lambda;
    let mut x = vec![0.0; n];

    // Single left-to-right sweep maintaining the current segment
    // [k0, k] with candidate levels vmin/vmax and running slacks
    // umin/umax; jumps are emitted when a slack leaves its tube.
    let mut k: usize = 0;
    let mut k0: usize = 0;
    let mut kminus: usize = 0;
    let mut kplus: usize = 0;
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    let mut umin = lambda;
    let mut umax = -lambda;

    loop {
        while k == n - 1 {
            if umin < 0.0 {
                // level vmin is too high; a negative jump closes the segment
                loop {
                    x[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k;
                vmin = y[kminus];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                // level vmax is too low; a positive jump closes the segment
                loop {
                    x[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k;
                vmax = y[kplus];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                loop {
                    x[k0] = vmin;
                    k0 += 1;
                    if k0 > k {
                        break;
                    }
                }
                return Ok(x);
            }
        }

        umin += y[k + 1] - vmin;
        if umin < -lambda {
            // negative jump necessary
            loop {
                x[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k;
            kplus = k;
            vmin = y[k];
            vmax = vmin + 2.0 * lambda;
            umin = lambda;
            umax = -lambda;
        } else {
            umax += y[k + 1] - vmax;
            if umax > lambda {
                // positive jump necessary
                loop {
                    x[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kminus = k;
                kplus = k;
                vmax = y[k];
                vmin = vmax - 2.0 * lambda;
                umin = lambda;
                umax = -lambda;
            } else {
                // no jump: absorb the sample, tightening levels as the
                // slacks hit their bounds
                k += 1;
                if umin >= lambda {
                    kminus = k;
                    vmin += (umin - lambda) / (k - k0 + 1) as f64;
                    umin = lambda;
                }
                if umax <= -lambda {
                    kplus = k;
                    vmax += (umax + lambda) / (k - k0 + 1) as f64;
                    umax = -lambda;
                }
            }
        }
    }
}

/// Objective value, for tests and tuning.
pub fn tv_objective(x: &[f64], y: &[f64], tv_lambda: f64) -> f64 {
    let fit: f64 = x.iter().zip(y).map(|(a, b)| 0.5 * (a - b) * (a - b)).sum();
    let tv: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    fit + tv_lambda * tv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn lambda_zero_returns_input() {
        let y = vec![0.3, -1.0, 2.5, 0.0];
        assert_eq!(tv_denoise(&y, 0.0).unwrap(), y);
    }

    #[test]
    fn two_point_analytic() {
        // For y = [0, 1] and lambda <= 1/2 the minimizer shrinks the jump
        // by 2 lambda: [lambda, 1 - lambda].
        let x = tv_denoise(&[0.0, 1.0], 0.25).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-12);
        assert!((x[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn large_lambda_gives_mean() {
        let mut rng = RngStream::seeded(31);
        let y: Vec<f64> = (0..40).map(|_| rng.uniform()).collect();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let x = tv_denoise(&y, 40.0).unwrap();
        for v in &x {
            assert!((v - mean).abs() < 1e-9, "{v} vs mean {mean}");
        }
    }

    #[test]
    fn preserves_big_steps_shrinks_small_noise() {
        let mut y = vec![0.0; 32];
        y[16..].iter_mut().for_each(|v| *v = 10.0);
        let x = tv_denoise(&y, 0.5).unwrap();
        assert!(x[15] < 1.0 && x[16] > 9.0, "step destroyed: {} {}", x[15], x[16]);
    }

    #[test]
    fn constant_signal_fixed_point() {
        let y = vec![1.5; 17];
        for v in tv_denoise(&y, 0.7).unwrap() {
            assert!((v - 1.5).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_never_above_competitors() {
        // the exact solution must beat y itself and the constant mean
        let mut rng = RngStream::seeded(32);
        for trial in 0..50 {
            let n = 3 + rng.below(14);
            let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let lam = 0.05 + 0.5 * rng.uniform();
            let x = tv_denoise(&y, lam).unwrap();
            let fx = tv_objective(&x, &y, lam);
            let fy = tv_objective(&y, &y, lam);
            let mean = y.iter().sum::<f64>() / n as f64;
            let fm = tv_objective(&vec![mean; n], &y, lam);
            assert!(fx <= fy + 1e-12 && fx <= fm + 1e-12, "trial {trial}");
        }
    }
}
