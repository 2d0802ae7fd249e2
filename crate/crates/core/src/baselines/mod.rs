//! Classical comparison methods: smoothing filters, wavelet shrinkage,
//! exact 1D total-variation denoising, and imputation rules.

mod filters;
mod impute;
mod tv;
mod wavelet;

pub use filters::{gaussian_filter, median_filter, wiener_filter};
pub use impute::{impute_mean, impute_median, impute_spline, impute_zero};
pub use tv::{tv_denoise, tv_objective, TvSpec};
pub use wavelet::{
    dwt, idwt, universal_threshold, wavelet_denoise, ThresholdRule, WaveletPyramid,
    WaveletSpec, SYM4_LO,
};
