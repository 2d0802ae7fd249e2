//! Imputation baselines: zero fill, windowed mean/median over observed
//! neighbors, and natural cubic spline interpolation. Observed entries are
//! always returned unchanged.

use crate::error::{CoreError, Result};

fn check_mask(y: &[f64], mask: &[f64]) -> Result<Vec<usize>> {
    if y.len() != mask.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "mask length {} vs data {}",
            mask.len(),
            y.len()
        )));
    }
    let observed: Vec<usize> = (0..mask.len()).filter(|&i| mask[i] != 0.0).collect();
    if observed.is_empty() {
        return Err(CoreError::InvalidArg("all entries missing".into()));
    }
    Ok(observed)
}

/// Missing entries become zero.
pub fn impute_zero(y: &[f64], mask: &[f64]) -> Result<Vec<f64>> {
    check_mask(y, mask)?;
    Ok(y.iter().zip(mask).map(|(&v, &m)| if m != 0.0 { v } else { 0.0 }).collect())
}

fn windowed_statistic(
    y: &[f64],
    mask: &[f64],
    window: usize,
    stat: impl Fn(&mut Vec<f64>) -> f64,
) -> Result<Vec<f64>> {
    if window % 2 == 0 {
        return Err(CoreError::InvalidArg(format!("window {window} must be odd")));
    }
    check_mask(y, mask)?;
    let n = y.len();
    let mut out = y.to_vec();
    for i in 0..n {
        if mask[i] != 0.0 {
            continue;
        }
        // grow the window symmetrically until an observed entry appears
        let mut half = window / 2;
        loop {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let mut vals: Vec<f64> =
                (lo..hi).filter(|&j| mask[j] != 0.0).map(|j| y[j]).collect();
            if !vals.is_empty() {
                out[i] = stat(&mut vals);
                break;
            }
            half *= 2;
        }
    }
    Ok(out)
}

/// Centered-window mean over observed entries only.
pub fn impute_mean(y: &[f64], mask: &[f64], window: usize) -> Result<Vec<f64>> {
    windowed_statistic(y, mask, window, |v| v.iter().sum::<f64>() / v.len() as f64)
}

/// Centered-window median over observed entries only.
pub fn impute_median(y: &[f64], mask: &[f64], window: usize) -> Result<Vec<f64>> {
    windowed_statistic(y, mask, window, |v| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    })
}

/// Natural cubic spline through the observed points, held constant beyond
/// the first and last observed index.
pub fn impute_spline(y: &[f64], mask: &[f64]) -> Result<Vec<f64>> {
    let observed = check_mask(y, mask)?;
    if observed.len() < 2 {
        return Err(CoreError::InvalidArg("spline needs at least two observed entries".into()));
    }
    let k = observed.len();
    let xs: Vec<f64> = observed.iter().map(|&i| i as f64).collect();
    let ys: Vec<f64> = observed.iter().map(|&i| y[i]).collect();

    // second derivatives by the standard natural-spline tridiagonal solve
    let mut m = vec![0.0; k];
    if k > 2 {
        let mut sub = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut sup = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 1..k - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            sub[i] = h0;
            diag[i] = 2.0 * (h0 + h1);
            sup[i] = h1;
            rhs[i] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
        }
        // forward elimination on the interior rows
        for i in 2..k - 1 {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..k - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
    }

    let mut out = y.to_vec();
    let (first, last) = (observed[0], observed[k - 1]);
    let mut seg = 0;
    for i in 0..y.len() {
        if mask[i] != 0.0 {
            continue;
        }
        if i < first {
            out[i] = ys[0];
            continue;
        }
        if i > last {
            out[i] = ys[k - 1];
            continue;
        }
        let t = i as f64;
        while xs[seg + 1] < t {
            seg += 1;
        }
        let h = xs[seg + 1] - xs[seg];
        let a = (xs[seg + 1] - t) / h;
        let b = (t - xs[seg]) / h;
        out[i] = a * ys[seg]
            + b * ys[seg + 1]
            + ((a * a * a - a) * m[seg] + (b * b * b - b) * m[seg + 1]) * h * h / 6.0;
    }
    Ok(out)
}
