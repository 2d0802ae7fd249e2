//! Classical smoothing filters: Gaussian, median, and local Wiener.

use crate::error::{CoreError, Result};

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i >= n {
            i = 2 * n - 2 - i;
        } else {
            return i as usize;
        }
    }
}

fn replicate(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Sampled Gaussian kernel truncated at +/- ceil(4 sigma) and renormalized
/// to sum one; reflection boundary.
pub fn gaussian_filter(x: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 {
        return Err(CoreError::InvalidArg(format!("gaussian sigma {sigma} must be positive")));
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64) * (i as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let z: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= z);

    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &k) in kernel.iter().enumerate() {
            let src = i as isize + j as isize - radius;
            acc += k * x[reflect(src, n)];
        }
        *o = acc;
    }
    Ok(out)
}

fn median_of(buf: &mut [f64]) -> f64 {
    buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Sliding-window median with replicate boundary. Window must be odd.
pub fn median_filter(x: &[f64], window: usize) -> Result<Vec<f64>> {
    if window % 2 == 0 || window == 0 {
        return Err(CoreError::InvalidArg(format!("median window {window} must be odd")));
    }
    let half = (window / 2) as isize;
    let n = x.len();
    let mut out = vec![0.0; n];
    let mut buf = vec![0.0; window];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, slot) in buf.iter_mut().enumerate() {
            *slot = x[replicate(i as isize + j as isize - half, n)];
        }
        *o = median_of(&mut buf);
    }
    Ok(out)
}

/// Local Wiener filter: out = mu + max(v - nv, 0) / max(v, nv) * (x - mu)
/// with window statistics mu, v and noise variance nv (estimated as the
/// mean local variance when not supplied). Reflection boundary.
pub fn wiener_filter(x: &[f64], window: usize, noise_var: Option<f64>) -> Result<Vec<f64>> {
    if window % 2 == 0 || window == 0 {
        return Err(CoreError::InvalidArg(format!("wiener window {window} must be odd")));
    }
    let half = (window / 2) as isize;
    let n = x.len();
    let wf = window as f64;
    let mut mean = vec![0.0; n];
    let mut var = vec![0.0; n];
    for i in 0..n {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for j in -half..=half {
            let v = x[reflect(i as isize + j, n)];
            s += v;
            s2 += v * v;
        }
        mean[i] = s / wf;
        var[i] = (s2 / wf - mean[i] * mean[i]).max(0.0);
    }
    let nv = noise_var.unwrap_or_else(|| var.iter().sum::<f64>() / n as f64);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let gain = if var[i].max(nv) > 0.0 {
            (var[i] - nv).max(0.0) / var[i].max(nv)
        } else {
            0.0
        };
        out[i] = mean[i] + gain * (x[i] - mean[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_fixes_constants() {
        let x = vec![0.7; 64];
        let y = gaussian_filter(&x, 2.0).unwrap();
        for v in y {
            assert!((v - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_impulse_response_is_kernel() {
        let mut x = vec![0.0; 65];
        x[32] = 1.0;
        let y = gaussian_filter(&x, 1.0).unwrap();
        let center = y[32];
        assert!(y.iter().all(|&v| v <= center));
        // center weight = phi(0) / Z with Z the truncated sampled-kernel sum
        let phi = |t: f64| 0.398942280401432678 * (-0.5 * t * t).exp();
        let z: f64 = (-4..=4).map(|i| phi(i as f64)).sum();
        assert!((center - phi(0.0) / z).abs() < 1e-12);
    }

    #[test]
    fn median_hand_case() {
        // replicate edges: windows [1,1,100],[1,100,2],[100,2,3],[2,3,3]
        let y = median_filter(&[1.0, 100.0, 2.0, 3.0], 3).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn median_keeps_monotone_removes_impulse() {
        let mono: Vec<f64> = (0..16).map(|i| i as f64).collect();
        assert_eq!(median_filter(&mono, 3).unwrap(), mono);
        let mut imp = vec![1.0; 16];
        imp[8] = 50.0;
        assert_eq!(median_filter(&imp, 3).unwrap(), vec![1.0; 16]);
        assert!(median_filter(&imp, 4).is_err());
    }

    #[test]
    fn wiener_constant_and_zero_noise() {
        let x = vec![0.4; 32];
        assert_eq!(wiener_filter(&x, 5, None).unwrap(), x);
        let noisy = vec![0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.45, 0.55];
        for (a, b) in wiener_filter(&noisy, 3, Some(0.0)).unwrap().iter().zip(&noisy) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(wiener_filter(&noisy, 4, None).is_err());
    }

    #[test]
    fn wiener_hand_interior_case() {
        // x=[0,2,0], w=3, nv=1: interior mu=2/3, v=8/9 < nv -> gain 0
        let y = wiener_filter(&[0.0, 2.0, 0.0], 3, Some(1.0)).unwrap();
        assert!((y[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn filters_shift_consistent_in_interior() {
        let x: Vec<f64> = (0..64)
            .map(|i| (std::f64::consts::TAU * 3.0 * i as f64 / 64.0).sin())
            .collect();
        let shifted: Vec<f64> = x[4..].to_vec();
        let fx = gaussian_filter(&x, 1.5).unwrap();
        let fs = gaussian_filter(&shifted, 1.5).unwrap();
        for i in 10..40 {
            assert!((fx[i + 4] - fs[i]).abs() < 1e-12);
        }
        let mx = median_filter(&x, 5).unwrap();
        let ms = median_filter(&shifted, 5).unwrap();
        for i in 10..40 {
            assert!((mx[i + 4] - ms[i]).abs() < 1e-12);
        }
    }
}
