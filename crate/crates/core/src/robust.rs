//! Robust data-fit mathematics: Huber loss, the proximal map of the scaled
//! l1 norm, a grid-infimum envelope oracle, and the contamination-level
//! calibration linking the Huber threshold to an outlier fraction.

use crate::error::{CoreError, Result};

/// Huber penalty of a scalar residual: quadratic inside the threshold,
/// linear outside.
pub fn huber_scalar(v: f64, lambda: f64) -> f64 {
    let a = v.abs();
    if a <= lambda {
        0.5 * v * v
    } else {
        lambda * a - 0.5 * lambda * lambda
    }
}

/// Derivative of `huber_scalar`; continuous at |v| = lambda and clipped to
/// +/- lambda on the linear branches.
pub fn huber_grad_scalar(v: f64, lambda: f64) -> f64 {
    if v.abs() <= lambda {
        v
    } else {
        lambda * v.signum()
    }
}

/// Huber parameters; threshold defaults to 0.001 for unit-normalized data.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HuberParams {
    pub lambda: f64,
}

impl Default for HuberParams {
    fn default() -> Self {
        HuberParams { lambda: 0.001 }
    }
}

impl HuberParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 {
            Ok(HuberParams { lambda })
        } else {
            Err(CoreError::InvalidArg(format!("huber lambda {lambda} must be positive")))
        }
    }
}

/// Sum of elementwise Huber penalties over a residual vector.
pub fn huber_value(v: &[f64], lambda: f64) -> Result<f64> {
    if lambda <= 0.0 {
        return Err(CoreError::InvalidArg("huber lambda must be positive".into()));
    }
    Ok(v.iter().map(|&x| huber_scalar(x, lambda)).sum())
}

/// Elementwise Huber gradient.
pub fn huber_grad(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if lambda <= 0.0 {
        return Err(CoreError::InvalidArg("huber lambda must be positive".into()));
    }
    Ok(v.iter().map(|&x| huber_grad_scalar(x, lambda)).collect())
}

/// Proximal map of lambda * |.|: shrink toward zero with dead zone
/// (-lambda, lambda).
pub fn soft_threshold_scalar(v: f64, lambda: f64) -> f64 {
    if v >= lambda {
        v - lambda
    } else if v <= -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Elementwise soft threshold.
pub fn soft_threshold(v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if lambda < 0.0 {
        return Err(CoreError::InvalidArg("soft threshold lambda must be >= 0".into()));
    }
    Ok(v.iter().map(|&x| soft_threshold_scalar(x, lambda)).collect())
}

/// Grid infimum of lambda*|v| + (t - v)^2 / 2 over v. Independent route to
/// the Huber value; kept as a diagnostic oracle, not a training-path call.
/// The grid spans [t - 3*lambda - 3, t + 3*lambda + 3] at the given step.
pub fn moreau_envelope_oracle(t: f64, lambda: f64, step: f64) -> f64 {
    assert!(step > 0.0 && step <= 1e-4, "oracle grid step must be in (0, 1e-4]");
    let lo = t - 3.0 * lambda - 3.0;
    let hi = t + 3.0 * lambda + 3.0;
    let n = ((hi - lo) / step).ceil() as usize;
    let mut best = f64::INFINITY;
    for i in 0..=n {
        let v = lo + i as f64 * step;
        let val = lambda * v.abs() + 0.5 * (t - v) * (t - v);
        if val < best {
            best = val;
        }
    }
    best
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Contamination fraction implied by a Huber threshold. `out_of_model` is
/// set when the implied fraction reaches 1/2, where the mixture family is
/// no longer defined; small thresholds land there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    pub out_of_model: bool,
}

fn contamination_ratio(lambda: f64) -> f64 {
    // epsilon / (1 - epsilon) as a function of the threshold
    (2.0 / lambda) * normal_pdf(lambda) - 2.0 * normal_cdf(-lambda)
}

/// Solve epsilon/(1-epsilon) = (2/lambda) phi(lambda) - 2 Phi(-lambda)
/// for the outlier fraction epsilon.
pub fn epsilon_from_lambda(lambda: f64) -> Result<EpsilonEstimate> {
    if lambda <= 0.0 {
        return Err(CoreError::InvalidArg("lambda must be positive".into()));
    }
    let r = contamination_ratio(lambda);
    let epsilon = r / (1.0 + r);
    Ok(EpsilonEstimate { epsilon, out_of_model: epsilon >= 0.5 })
}

/// Invert `epsilon_from_lambda` by bisection on the strictly decreasing
/// ratio; tolerance 1e-10 on lambda.
pub fn lambda_from_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(CoreError::InvalidArg(format!("epsilon {epsilon} must be in (0, 0.5)")));
    }
    let target = epsilon / (1.0 - epsilon);
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while contamination_ratio(hi) > target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(CoreError::Numerical {
                iter: 0,
                msg: "lambda bracket expansion failed".into(),
            });
        }
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if contamination_ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Calibrated (epsilon, lambda) pair for the contaminated-Gaussian noise
/// family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminatedGaussian {
    pub epsilon: f64,
    pub lambda: f64,
}

impl ContaminatedGaussian {
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        let e = epsilon_from_lambda(lambda)?;
        if e.out_of_model {
            return Err(CoreError::InvalidArg(format!(
                "lambda {lambda} implies contamination >= 1/2"
            )));
        }
        Ok(ContaminatedGaussian { epsilon: e.epsilon, lambda })
    }

    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        Ok(ContaminatedGaussian { epsilon, lambda: lambda_from_epsilon(epsilon)? })
    }
}

/// Least-favorable density (1-eps) * phi-scale * exp(-Huber(t)); integrates
/// to one exactly when (eps, lambda) form a calibrated pair.
pub fn lfd_density(t: f64, lambda: f64, epsilon: f64) -> f64 {
    (1.0 - epsilon) / (2.0 * std::f64::consts::PI).sqrt()
        * (-huber_scalar(t, lambda)).exp()
}
