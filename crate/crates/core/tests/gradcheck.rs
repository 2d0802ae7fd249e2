//! Finite-difference oracle over every differentiable operation and the
//! full prior network, plus adjoint-consistency checks for the linear ops.

use rinst_core::autodiff::{ParamSet, ParamShape, PadMode, Tape};
use rinst_core::diagnostics::{run_gradchecks, FD_TOL};
use rinst_core::rng::RngStream;
use rinst_core::tensor::TensorBuf;

#[test]
fn all_ops_and_full_net_match_finite_differences() {
    let reports = run_gradchecks(2024).unwrap();
    assert!(reports.len() >= 15, "suite shrank to {}", reports.len());
    let mut failed = Vec::new();
    for r in &reports {
        eprintln!("gradcheck {:28} rel_err {:.3e} over {} components", r.name, r.max_rel_err, r.checked);
        if !r.passed(FD_TOL) {
            failed.push(r.name.clone());
        }
    }
    assert!(failed.is_empty(), "gradchecks failed: {failed:?}");
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// <op(x), y> must equal <x, op^T(y)> for the linear tape ops; op^T(y) is
/// obtained by differentiating the linear functional <op(x), y>.
#[test]
fn linear_ops_satisfy_adjoint_identity() {
    let rng = RngStream::seeded(404);
    for trial in 0..20 {
        let mut r = rng.split_indexed("trial", trial);
        let (cin, l) = (2usize, 16usize);
        let x: Vec<f64> = (0..cin * l).map(|_| r.normal()).collect();

        // conv with fixed weights, zero bias
        let (cout, k) = (3usize, 3usize);
        let mut params = ParamSet::new();
        let w = params
            .add(
                "w",
                ParamShape::Conv { cout, cin, k },
                (0..cout * cin * k).map(|_| r.normal()).collect(),
            )
            .unwrap();
        let b = params.add("b", ParamShape::PerChannel { c: cout }, vec![0.0; cout]).unwrap();
        let stride = if trial % 2 == 0 { 1 } else { 2 };
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::new(cin, l, x.clone()).unwrap());
        let out = tape.conv1d(&params, id, w, b, stride, PadMode::Reflect).unwrap();
        let y: Vec<f64> = (0..tape.value(out).len()).map(|_| r.normal()).collect();
        let loss = tape.dot_const(out, &y).unwrap();
        let lhs = tape.value(loss).scalar();
        tape.backward(&mut params, loss).unwrap();
        let rhs = dot(&x, tape.grad(id).unwrap());
        assert!((lhs - rhs).abs() < 1e-10, "conv adjoint: {lhs} vs {rhs}");

        // upsample
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::new(cin, l, x.clone()).unwrap());
        let out = tape.upsample_nearest(id);
        let y: Vec<f64> = (0..tape.value(out).len()).map(|_| r.normal()).collect();
        let loss = tape.dot_const(out, &y).unwrap();
        let lhs = tape.value(loss).scalar();
        let mut params = ParamSet::new();
        tape.backward(&mut params, loss).unwrap();
        let rhs = dot(&x, tape.grad(id).unwrap());
        assert!((lhs - rhs).abs() < 1e-10, "upsample adjoint: {lhs} vs {rhs}");

        // concat followed by implicit slice (gradient split)
        let x2: Vec<f64> = (0..cin * l).map(|_| r.normal()).collect();
        let mut tape = Tape::new();
        let a = tape.input(TensorBuf::new(cin, l, x.clone()).unwrap());
        let bb = tape.input(TensorBuf::new(cin, l, x2.clone()).unwrap());
        let out = tape.concat_channels(a, bb).unwrap();
        let y: Vec<f64> = (0..tape.value(out).len()).map(|_| r.normal()).collect();
        let loss = tape.dot_const(out, &y).unwrap();
        let lhs = tape.value(loss).scalar();
        let mut params = ParamSet::new();
        tape.backward(&mut params, loss).unwrap();
        let rhs = dot(&x, tape.grad(a).unwrap()) + dot(&x2, tape.grad(bb).unwrap());
        assert!((lhs - rhs).abs() < 1e-10, "concat adjoint: {lhs} vs {rhs}");
    }
}

/// Stride-1 same-padding convolutions preserve length for every L >= k.
#[test]
fn conv_stride1_preserves_length() {
    let mut rng = RngStream::seeded(11);
    for k in [1usize, 3, 5, 7] {
        for l in k.max(2)..40 {
            let mut params = ParamSet::new();
            let w = params
                .add(
                    "w",
                    ParamShape::Conv { cout: 1, cin: 1, k },
                    (0..k).map(|_| rng.normal()).collect(),
                )
                .unwrap();
            let b = params.add("b", ParamShape::PerChannel { c: 1 }, vec![0.0]).unwrap();
            let mut tape = Tape::new();
            let id = tape.input(TensorBuf::from_vec((0..l).map(|_| rng.normal()).collect()));
            let out = tape.conv1d(&params, id, w, b, 1, PadMode::Reflect).unwrap();
            assert_eq!(tape.value(out).length(), l, "k={k}, l={l}");
        }
    }
}

/// Stride-2 halves length, rounding up.
#[test]
fn conv_stride2_halves_length() {
    let mut rng = RngStream::seeded(12);
    for l in 3usize..40 {
        let mut params = ParamSet::new();
        let w = params
            .add(
                "w",
                ParamShape::Conv { cout: 1, cin: 1, k: 3 },
                (0..3).map(|_| rng.normal()).collect(),
            )
            .unwrap();
        let b = params.add("b", ParamShape::PerChannel { c: 1 }, vec![0.0]).unwrap();
        let mut tape = Tape::new();
        let id = tape.input(TensorBuf::from_vec((0..l).map(|_| rng.normal()).collect()));
        let out = tape.conv1d(&params, id, w, b, 2, PadMode::Reflect).unwrap();
        assert_eq!(tape.value(out).length(), l.div_ceil(2), "l={l}");
    }
}
