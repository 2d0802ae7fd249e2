//! The robust recovery loop: guided input, per-iteration input
//! perturbation, Huber data fit, Adam updates, and a convex running
//! combination of outputs as the returned estimate. The plain
//! least-squares deep-prior baseline is a preset of the same loop.

use std::time::Instant;

use crate::autodiff::{adam_step, AdamState, LossKind};
use crate::baselines::gaussian_filter;
use crate::error::{CoreError, Result};
use crate::net::{random_net_input, NetConfig, PriorNet};
use crate::operators::ForwardOperator;
use crate::rng::RngStream;
use crate::tensor::TensorBuf;

/// Data-fit choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossTag {
    #[default]
    Huber,
    LeastSquares,
}

/// Full solver settings; `Default` is the reference configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub iterations: usize,
    pub lr: f64,
    pub huber_lambda: f64,
    /// Convex-combination weight on the previous running estimate.
    pub alpha: f64,
    pub perturb_sigma: f64,
    /// Gaussian-filter width (in samples) for the guided input.
    pub guide_sigma: f64,
    pub loss: LossTag,
    pub guided_input: bool,
    pub perturbation: bool,
    pub convex_combo: bool,
    pub net: NetConfig,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 3000,
            lr: 0.01,
            huber_lambda: 0.001,
            alpha: 0.5,
            perturb_sigma: 0.05,
            guide_sigma: 5.0,
            loss: LossTag::Huber,
            guided_input: true,
            perturbation: true,
            convex_combo: true,
            net: NetConfig::default(),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(CoreError::InvalidArg("iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(CoreError::InvalidArg(format!("alpha {} not in [0,1]", self.alpha)));
        }
        if self.perturb_sigma < 0.0 {
            return Err(CoreError::InvalidArg("perturb sigma must be >= 0".into()));
        }
        if self.guide_sigma <= 0.0 {
            return Err(CoreError::InvalidArg("guide sigma must be positive".into()));
        }
        if self.huber_lambda <= 0.0 {
            return Err(CoreError::InvalidArg("huber lambda must be positive".into()));
        }
        self.net.validate()
    }

    /// The plain deep-prior baseline: least-squares fit from a fixed
    /// random input, no perturbation, no output combination. Same
    /// architecture.
    pub fn dip_preset(&self) -> SolverConfig {
        SolverConfig {
            loss: LossTag::LeastSquares,
            guided_input: false,
            perturbation: false,
            convex_combo: false,
            ..self.clone()
        }
    }
}

/// Solver output: the running combined estimate, the last raw network
/// output, and the loss trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_hat: TensorBuf,
    pub raw_final: TensorBuf,
    pub loss_trace: Vec<f64>,
    pub wall_time_s: f64,
    pub iterations_run: usize,
}

/// Linearly interpolate across missing runs; edge runs hold the nearest
/// observed value.
fn interpolate_missing(y: &[f64], mask: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let observed: Vec<usize> = (0..n).filter(|&i| mask[i] != 0.0).collect();
    if observed.is_empty() {
        return Err(CoreError::InvalidArg("mask leaves no observed entries".into()));
    }
    let mut out = y.to_vec();
    let (first, last) = (observed[0], observed[observed.len() - 1]);
    for i in 0..first {
        out[i] = y[first];
    }
    for i in last + 1..n {
        out[i] = y[last];
    }
    for w in observed.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a + 1..b {
            let t = (i - a) as f64 / (b - a) as f64;
            out[i] = y[a] + t * (y[b] - y[a]);
        }
    }
    Ok(out)
}

/// Affinely rescale a slice to [0, 1]; constant slices map to 1/2.
fn rescale_unit(row: &mut [f64]) {
    let mn = row.iter().cloned().fold(f64::INFINITY, f64::min);
    let mx = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx > mn {
        row.iter_mut().for_each(|v| *v = (*v - mn) / (mx - mn));
    } else {
        row.iter_mut().for_each(|v| *v = 0.5);
    }
}

/// Smoothed signal-space initialization from the observation: direct
/// smoothing for identity, interpolate-then-smooth for masks, and
/// rescaled adjoint backprojection for dense projections.
pub fn guided_input(
    y: &TensorBuf,
    op: &ForwardOperator,
    guide_sigma: f64,
) -> Result<TensorBuf> {
    if guide_sigma <= 0.0 {
        return Err(CoreError::InvalidArg("guide sigma must be positive".into()));
    }
    let c = y.channels();
    match op {
        ForwardOperator::Identity { .. } => {
            let mut out = y.clone();
            out.clear_grad();
            for ch in 0..c {
                let sm = gaussian_filter(y.channel(ch), guide_sigma)?;
                out.channel_mut(ch).copy_from_slice(&sm);
            }
            Ok(out)
        }
        ForwardOperator::Mask { mask } => {
            let mut out = y.clone();
            out.clear_grad();
            for ch in 0..c {
                let filled = interpolate_missing(y.channel(ch), mask)?;
                let sm = gaussian_filter(&filled, guide_sigma)?;
                out.channel_mut(ch).copy_from_slice(&sm);
            }
            Ok(out)
        }
        ForwardOperator::Dense { .. } => {
            let mut back = op.adjoint(y)?;
            for ch in 0..c {
                rescale_unit(back.channel_mut(ch));
                let sm = gaussian_filter(back.channel(ch), guide_sigma)?;
                back.channel_mut(ch).copy_from_slice(&sm);
            }
            Ok(back)
        }
    }
}

/// Fresh Gaussian perturbation of the base input.
pub fn perturb(u: &TensorBuf, sigma: f64, rng: &mut RngStream) -> TensorBuf {
    if sigma == 0.0 {
        let mut z = u.clone();
        z.clear_grad();
        return z;
    }
    let data = u.data().iter().map(|&v| v + sigma * rng.normal()).collect();
    TensorBuf::new(u.channels(), u.length(), data).expect("perturb shape")
}

fn loss_kind(cfg: &SolverConfig) -> LossKind {
    match cfg.loss {
        LossTag::Huber => LossKind::Huber { lambda: cfg.huber_lambda },
        LossTag::LeastSquares => LossKind::LeastSquares,
    }
}

/// Run the full optimization loop for an observation and operator.
pub fn solve(y: &TensorBuf, op: &ForwardOperator, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if y.length() != op.output_len() {
        return Err(CoreError::ShapeMismatch(format!(
            "observation length {} vs operator output {}",
            y.length(),
            op.output_len()
        )));
    }
    if y.channels() != cfg.net.in_channels || y.channels() != cfg.net.out_channels {
        return Err(CoreError::ShapeMismatch(format!(
            "observation has {} channels but the net maps {} -> {}",
            y.channels(),
            cfg.net.in_channels,
            cfg.net.out_channels
        )));
    }
    y.check_finite("observation")?;

    let start = Instant::now();
    let n = op.input_len();
    let rng = RngStream::seeded(cfg.seed);

    let mut net_cfg = cfg.net.clone();
    net_cfg.seed = rng.split("net-init").seed();
    let mut net = PriorNet::build(&net_cfg)?;
    let mut adam = AdamState::new(net.params());

    let base_input = if cfg.guided_input {
        guided_input(y, op, cfg.guide_sigma)?
    } else {
        random_net_input(cfg.net.in_channels, n, &mut rng.split("random-input"))
    };
    let mut perturb_rng = rng.split("perturb");
    let kind = loss_kind(cfg);

    let mut ema: Option<TensorBuf> = None;
    let mut raw_final = TensorBuf::zeros(y.channels(), n);
    let mut trace = Vec::with_capacity(cfg.iterations);

    for iter in 0..cfg.iterations {
        let z_t = if cfg.perturbation {
            perturb(&base_input, cfg.perturb_sigma, &mut perturb_rng)
        } else {
            let mut z = base_input.clone();
            z.clear_grad();
            z
        };
        let (mut tape, out) = net.forward(&z_t)?;
        let loss = tape.data_fit(out, op, y, kind)?;
        let loss_value = tape.value(loss).scalar();
        if !loss_value.is_finite() {
            return Err(CoreError::Numerical { iter, msg: format!("loss {loss_value}") });
        }
        trace.push(loss_value);

        let x_t = tape.value(out).clone();
        tape.backward(net.params_mut(), loss)?;
        adam_step(net.params_mut(), &mut adam, cfg.lr)?;

        if cfg.convex_combo {
            ema = Some(match ema.take() {
                // the running estimate starts at the first raw output
                None => x_t.clone(),
                Some(mut prev) => {
                    for (e, &x) in prev.data_mut().iter_mut().zip(x_t.data()) {
                        *e = cfg.alpha * *e + (1.0 - cfg.alpha) * x;
                    }
                    prev
                }
            });
        }
        raw_final = x_t;
    }
    raw_final.clear_grad();
    let mut x_hat = match ema {
        Some(e) => e,
        None => raw_final.clone(),
    };
    x_hat.clear_grad();

    Ok(SolveResult {
        x_hat,
        raw_final,
        loss_trace: trace,
        wall_time_s: start.elapsed().as_secs_f64(),
        iterations_run: cfg.iterations,
    })
}

/// The least-squares deep-prior baseline (see `SolverConfig::dip_preset`).
pub fn solve_dip(y: &TensorBuf, op: &ForwardOperator, cfg: &SolverConfig) -> Result<SolveResult> {
    solve(y, op, &cfg.dip_preset())
}

/// Replay check used in tests: the running estimate must satisfy
/// ema_t = alpha * ema_{t-1} + (1 - alpha) * x_t given the raw outputs.
pub fn replay_convex_combination(raw_outputs: &[Vec<f64>], alpha: f64) -> Vec<f64> {
    let mut ema = raw_outputs[0].clone();
    for x in &raw_outputs[1..] {
        for (e, &v) in ema.iter_mut().zip(x) {
            *e = alpha * *e + (1.0 - alpha) * v;
        }
    }
    ema
}
