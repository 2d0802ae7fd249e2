//! Finite-difference gradient checks. The numeric side is central
//! differences on a loss closure and never touches the reverse pass, so it
//! stays an independent oracle for `Tape::backward`.

use crate::autodiff::{LossKind, PadMode, ParamSet, ParamShape, Tape};
use crate::error::Result;
use crate::net::{NetConfig, PriorNet};
use crate::operators::{make_gaussian_matrix, make_random_mask, ForwardOperator};
use crate::rng::RngStream;
use crate::tensor::TensorBuf;

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub name: String,
    pub max_rel_err: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Central-difference step used throughout.
pub const FD_STEP: f64 = 1e-5;

/// Relative-error tolerance for all checks.
pub const FD_TOL: f64 = 1e-4;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-3)
}

/// Compare an analytic gradient against central differences of `eval`.
pub fn central_diff_check(
    name: &str,
    theta: &[f64],
    analytic: &[f64],
    eval: impl Fn(&[f64]) -> f64,
) -> GradCheckReport {
    assert_eq!(theta.len(), analytic.len());
    let mut work = theta.to_vec();
    let mut max_rel: f64 = 0.0;
    for i in 0..theta.len() {
        let saved = work[i];
        work[i] = saved + FD_STEP;
        let up = eval(&work);
        work[i] = saved - FD_STEP;
        let dn = eval(&work);
        work[i] = saved;
        let numeric = (up - dn) / (2.0 * FD_STEP);
        max_rel = max_rel.max(rel_err(analytic[i], numeric));
    }
    GradCheckReport { name: name.to_string(), max_rel_err: max_rel, checked: theta.len() }
}

/// An op scenario: `theta` is every perturbable scalar (activations first,
/// then parameters); `eval` rebuilds the scalar loss from scratch.
struct Scenario {
    name: &'static str,
    theta: Vec<f64>,
    analytic: Vec<f64>,
    eval: Box<dyn Fn(&[f64]) -> f64>,
}

fn run_scenario(s: Scenario) -> GradCheckReport {
    central_diff_check(s.name, &s.theta, &s.analytic, s.eval.as_ref())
}

// Draw values away from the activation kinks so central differences are
// valid.
fn kink_free(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let v = rng.normal();
            if v.abs() < 1e-2 {
                v + 0.05f64.copysign(v)
            } else {
                v
            }
        })
        .collect()
}

fn elementwise_scenario(
    name: &'static str,
    rng: &mut RngStream,
    apply: &'static (dyn Fn(&mut Tape, usize) -> usize + Sync),
) -> Scenario {
    let n = 24;
    let x = kink_free(rng, n);
    let w: Vec<f64> = (0..apply_output_len(apply, &x)).map(|_| rng.normal()).collect();

    let eval_w = w.clone();
    let eval = move |theta: &[f64]| {
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::new(2, theta.len() / 2, theta.to_vec()).unwrap());
        let out = apply(&mut tape, id);
        let loss = tape.dot_const(out, &eval_w).unwrap();
        tape.value(loss).scalar()
    };

    let mut tape = Tape::new();
    let id = tape.input(TensorBuf::new(2, n / 2, x.clone()).unwrap());
    let out = apply(&mut tape, id);
    let loss = tape.dot_const(out, &w).unwrap();
    let mut params = ParamSet::new();
    tape.backward(&mut params, loss).unwrap();
    let analytic = tape.grad(id).unwrap().to_vec();

    Scenario { name, theta: x, analytic, eval: Box::new(eval) }
}

fn apply_output_len(apply: &(dyn Fn(&mut Tape, usize) -> usize + Sync), x: &[f64]) -> usize {
    let mut tape = Tape::new();
    let id = tape.input(TensorBuf::new(2, x.len() / 2, x.to_vec()).unwrap());
    let out = apply(&mut tape, id);
    tape.value(out).len()
}

fn conv_scenario(name: &'static str, stride: usize, pad: PadMode, seed: u64) -> Scenario {
    let mut rng = RngStream::seeded(seed);
    let (cin, cout, k, l) = (2usize, 3usize, 3usize, 12usize);
    let x: Vec<f64> = (0..cin * l).map(|_| rng.normal()).collect();
    let wk: Vec<f64> = (0..cout * cin * k).map(|_| 0.5 * rng.normal()).collect();
    let bias: Vec<f64> = (0..cout).map(|_| 0.1 * rng.normal()).collect();
    let lout = (l + 2 * ((k - 1) / 2) - k) / stride + 1;
    let probe: Vec<f64> = (0..cout * lout).map(|_| rng.normal()).collect();

    let build = move |x: &[f64], wk: &[f64], bias: &[f64], probe: &[f64]| -> (Tape, usize, usize, ParamSet) {
        let mut params = ParamSet::new();
        let w = params.add("w", ParamShape::Conv { cout, cin, k }, wk.to_vec()).unwrap();
        let b = params.add("b", ParamShape::PerChannel { c: cout }, bias.to_vec()).unwrap();
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::new(cin, l, x.to_vec()).unwrap());
        let out = tape.conv1d(&params, id, w, b, stride, pad).unwrap();
        let loss = tape.dot_const(out, probe).unwrap();
        (tape, id, loss, params)
    };

    // theta layout: x, then kernel, then bias
    let mut theta = x.clone();
    theta.extend_from_slice(&wk);
    theta.extend_from_slice(&bias);

    let (nx, nw) = (x.len(), wk.len());
    let probe_eval = probe.clone();
    let eval = move |t: &[f64]| {
        let (xs, rest) = t.split_at(nx);
        let (ws, bs) = rest.split_at(nw);
        let (tape, _, loss, _) = build(xs, ws, bs, &probe_eval);
        tape.value(loss).scalar()
    };

    let (mut tape, id, loss, mut params) = build(&x, &wk, &bias, &probe);
    tape.backward(&mut params, loss).unwrap();
    let mut analytic = tape.grad(id).unwrap().to_vec();
    analytic.extend_from_slice(params.grad(0));
    analytic.extend_from_slice(params.grad(1));

    Scenario { name, theta, analytic, eval: Box::new(eval) }
}

fn channel_norm_scenario(seed: u64) -> Scenario {
    let mut rng = RngStream::seeded(seed);
    let (c, l) = (3usize, 10usize);
    let x: Vec<f64> = (0..c * l).map(|_| rng.normal()).collect();
    let scale: Vec<f64> = (0..c).map(|_| 1.0 + 0.3 * rng.normal()).collect();
    let shift: Vec<f64> = (0..c).map(|_| 0.2 * rng.normal()).collect();
    let probe: Vec<f64> = (0..c * l).map(|_| rng.normal()).collect();
    let eps = 1e-6;

    let build = move |x: &[f64], sc: &[f64], sh: &[f64], probe: &[f64]| {
        let mut params = ParamSet::new();
        let s = params.add("s", ParamShape::PerChannel { c }, sc.to_vec()).unwrap();
        let h = params.add("h", ParamShape::PerChannel { c }, sh.to_vec()).unwrap();
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::new(c, l, x.to_vec()).unwrap());
        let out = tape.channel_norm(&params, id, s, h, eps).unwrap();
        let loss = tape.dot_const(out, probe).unwrap();
        (tape, id, loss, params)
    };

    let mut theta = x.clone();
    theta.extend_from_slice(&scale);
    theta.extend_from_slice(&shift);
    let (nx, nc) = (x.len(), c);
    let probe_eval = probe.clone();
    let eval = move |t: &[f64]| {
        let (xs, rest) = t.split_at(nx);
        let (sc, sh) = rest.split_at(nc);
        let (tape, _, loss, _) = build(xs, sc, sh, &probe_eval);
        tape.value(loss).scalar()
    };

    let (mut tape, id, loss, mut params) = build(&x, &scale, &shift, &probe);
    tape.backward(&mut params, loss).unwrap();
    let mut analytic = tape.grad(id).unwrap().to_vec();
    analytic.extend_from_slice(params.grad(0));
    analytic.extend_from_slice(params.grad(1));

    Scenario { name: "channel_norm", theta, analytic, eval: Box::new(eval) }
}

fn data_fit_scenario(
    name: &'static str,
    op: ForwardOperator,
    kind: LossKind,
    seed: u64,
) -> Scenario {
    let mut rng = RngStream::seeded(seed);
    let n = op.input_len();
    let m = op.output_len();
    let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let y = TensorBuf::from_vec((0..m).map(|_| rng.normal()).collect());

    let op_eval = op.clone();
    let y_eval = y.clone();
    let eval = move |t: &[f64]| {
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::from_vec(t.to_vec()));
        let loss = tape.data_fit(id, &op_eval, &y_eval, kind).unwrap();
        tape.value(loss).scalar()
    };

    let mut tape = Tape::new();
    let id = tape.input(TensorBuf::from_vec(x.clone()));
    let loss = tape.data_fit(id, &op, &y, kind).unwrap();
    let mut params = ParamSet::new();
    tape.backward(&mut params, loss).unwrap();
    let analytic = tape.grad(id).unwrap().to_vec();

    Scenario { name, theta: x, analytic, eval: Box::new(eval) }
}

/// Full-network check: perturb every trainable parameter of a small
/// configuration under a Huber data fit.
fn full_net_scenario(seed: u64) -> Scenario {
    let cfg = NetConfig {
        encoder_channel_sizes: vec![5, 5],
        decoder_channel_sizes: vec![5, 5],
        skip_channel_sizes: vec![2, 2],
        sigmoid_output: true,
        seed,
        ..NetConfig::default()
    };
    let mut rng = RngStream::seeded(seed ^ 0x5eed);
    let l = 16;
    let z = TensorBuf::from_vec((0..l).map(|_| 0.1 * rng.uniform()).collect());
    let y = TensorBuf::from_vec((0..l).map(|_| rng.uniform()).collect());
    let op = ForwardOperator::Identity { n: l };
    let kind = LossKind::Huber { lambda: 0.05 };

    let net = PriorNet::build(&cfg).unwrap();
    let theta: Vec<f64> = net.params().iter().flat_map(|p| p.value.iter().copied()).collect();

    let cfg_eval = cfg.clone();
    let (z_eval, y_eval, op_eval) = (z.clone(), y.clone(), op.clone());
    let eval = move |t: &[f64]| {
        let mut net = PriorNet::build(&cfg_eval).unwrap();
        let mut offset = 0;
        for i in 0..net.params().len() {
            let p = net.params_mut().get_mut(i);
            let len = p.value.len();
            p.value.copy_from_slice(&t[offset..offset + len]);
            offset += len;
        }
        let (mut tape, out) = net.forward(&z_eval).unwrap();
        let loss = tape.data_fit(out, &op_eval, &y_eval, kind).unwrap();
        tape.value(loss).scalar()
    };

    let mut net = PriorNet::build(&cfg).unwrap();
    let (mut tape, out) = net.forward(&z).unwrap();
    let loss = tape.data_fit(out, &op, &y, kind).unwrap();
    tape.backward(net.params_mut(), loss).unwrap();
    let analytic: Vec<f64> =
        net.params().iter().flat_map(|p| p.grad.iter().copied()).collect();

    Scenario { name: "prior_net_full", theta, analytic, eval: Box::new(eval) }
}

/// Run the complete finite-difference suite.
pub fn run_gradchecks(seed: u64) -> Result<Vec<GradCheckReport>> {
    let rng = RngStream::seeded(seed);
    let mut reports = Vec::new();

    reports.push(run_scenario(elementwise_scenario(
        "leaky_relu",
        &mut rng.split("lrelu"),
        &|t, x| t.leaky_relu(x, 0.01).unwrap(),
    )));
    reports.push(run_scenario(elementwise_scenario(
        "sigmoid",
        &mut rng.split("sigmoid"),
        &|t, x| t.sigmoid(x),
    )));
    reports.push(run_scenario(elementwise_scenario(
        "upsample_nearest",
        &mut rng.split("up"),
        &|t, x| t.upsample_nearest(x),
    )));
    reports.push(run_scenario(elementwise_scenario(
        "crop_length",
        &mut rng.split("crop"),
        &|t, x| t.crop_length(x, 7).unwrap(),
    )));
    reports.push(run_scenario(elementwise_scenario(
        "concat_channels",
        &mut rng.split("concat"),
        &|t, x| {
            let other = t.crop_length(x, 12).unwrap();
            let same = t.crop_length(x, 12).unwrap();
            t.concat_channels(other, same).unwrap()
        },
    )));
    reports.push(run_scenario(elementwise_scenario(
        "half_sum_squares",
        &mut rng.split("hss"),
        &|t, x| t.half_sum_squares(x),
    )));

    reports.push(run_scenario(conv_scenario("conv1d_s1_reflect", 1, PadMode::Reflect, seed ^ 1)));
    reports.push(run_scenario(conv_scenario("conv1d_s2_reflect", 2, PadMode::Reflect, seed ^ 2)));
    reports.push(run_scenario(conv_scenario("conv1d_s1_zero", 1, PadMode::Zero, seed ^ 3)));
    reports.push(run_scenario(channel_norm_scenario(seed ^ 4)));

    let n = 14;
    reports.push(run_scenario(data_fit_scenario(
        "data_fit_huber_identity",
        ForwardOperator::Identity { n },
        LossKind::Huber { lambda: 0.5 },
        seed ^ 5,
    )));
    reports.push(run_scenario(data_fit_scenario(
        "data_fit_huber_mask",
        make_random_mask(n, 0.3, &mut rng.split("mask"))?,
        LossKind::Huber { lambda: 0.5 },
        seed ^ 6,
    )));
    reports.push(run_scenario(data_fit_scenario(
        "data_fit_huber_dense",
        make_gaussian_matrix(8, n, seed ^ 7)?,
        LossKind::Huber { lambda: 0.5 },
        seed ^ 8,
    )));
    reports.push(run_scenario(data_fit_scenario(
        "data_fit_ls_dense",
        make_gaussian_matrix(8, n, seed ^ 9)?,
        LossKind::LeastSquares,
        seed ^ 10,
    )));

    reports.push(run_scenario(full_net_scenario(seed ^ 11)));
    Ok(reports)
}
