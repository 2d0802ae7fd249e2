//! Reverse-mode tape over the handful of operations the prior network needs.
//!
//! Nodes are recorded in creation order, which is a valid topological order
//! of the DAG; `backward` walks it in reverse. Saved intermediates on each
//! node are sufficient for its backward rule, so nothing is recomputed.

use crate::autodiff::param::{ParamId, ParamSet, ParamShape};
use crate::error::{CoreError, Result};
use crate::operators::ForwardOperator;
use crate::robust::{huber_grad_scalar, huber_scalar};
use crate::tensor::TensorBuf;

/// Identifier of a node on the tape.
pub type NodeId = usize;

/// Boundary handling for `conv1d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    #[default]
    Reflect,
    Zero,
}

/// Data-fit flavor of the `data_fit` node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// Sum of elementwise Huber penalties of the residual.
    Huber { lambda: f64 },
    /// Half squared norm of the residual.
    LeastSquares,
}

#[derive(Debug)]
enum Op {
    Input,
    Conv1d { x: NodeId, w: ParamId, b: ParamId, stride: usize, pad: PadMode },
    LeakyRelu { x: NodeId, slope: f64 },
    Sigmoid { x: NodeId },
    UpsampleNearest { x: NodeId },
    ConcatChannels { a: NodeId, b: NodeId },
    ChannelNorm { x: NodeId, scale: ParamId, shift: ParamId, mean: Vec<f64>, istd: Vec<f64> },
    CropLength { x: NodeId },
    Sum { x: NodeId },
    HalfSumSquares { x: NodeId },
    DotConst { x: NodeId, weights: Vec<f64> },
    /// Loss of the residual `y - A x`; the pullback `d loss / d x` is
    /// computed at forward time via the operator adjoint and saved.
    DataFit { x: NodeId, grad_x: Vec<f64> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Conv1d { .. } => "conv1d",
            Op::LeakyRelu { .. } => "leaky_relu",
            Op::Sigmoid { .. } => "sigmoid",
            Op::UpsampleNearest { .. } => "upsample_nearest",
            Op::ConcatChannels { .. } => "concat_channels",
            Op::ChannelNorm { .. } => "channel_norm",
            Op::CropLength { .. } => "crop_length",
            Op::Sum { .. } => "sum",
            Op::HalfSumSquares { .. } => "half_sum_squares",
            Op::DotConst { .. } => "dot_const",
            Op::DataFit { .. } => "data_fit",
        }
    }
}

struct Node {
    op: Op,
    out: TensorBuf,
}

/// The recording tape. One tape per forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn reflect_index(src: isize, len: usize) -> usize {
    let n = len as isize;
    let mut i = src;
    // Fold until inside; for the kernel sizes used here one fold suffices,
    // but large smoothing radii can need more.
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

/// Pad each channel by `p` samples per side. Returns a [channels x (len+2p)]
/// row-major buffer.
fn pad_channels(x: &TensorBuf, p: usize, mode: PadMode) -> Vec<f64> {
    let (c, l) = (x.channels(), x.length());
    let lp = l + 2 * p;
    let mut out = vec![0.0; c * lp];
    for ch in 0..c {
        let row = x.channel(ch);
        let dst = &mut out[ch * lp..(ch + 1) * lp];
        for (q, slot) in dst.iter_mut().enumerate() {
            let src = q as isize - p as isize;
            *slot = if (0..l as isize).contains(&src) {
                row[src as usize]
            } else {
                match mode {
                    PadMode::Reflect => row[reflect_index(src, l)],
                    PadMode::Zero => 0.0,
                }
            };
        }
    }
    out
}

/// Scatter gradients of the padded buffer back onto the unpadded signal.
fn unpad_grad(dxpad: &[f64], c: usize, l: usize, p: usize, mode: PadMode, dx: &mut [f64]) {
    let lp = l + 2 * p;
    for ch in 0..c {
        let src_row = &dxpad[ch * lp..(ch + 1) * lp];
        let dst_row = &mut dx[ch * l..(ch + 1) * l];
        for (q, &g) in src_row.iter().enumerate() {
            let src = q as isize - p as isize;
            if (0..l as isize).contains(&src) {
                dst_row[src as usize] += g;
            } else if mode == PadMode::Reflect {
                dst_row[reflect_index(src, l)] += g;
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &TensorBuf {
        &self.nodes[id].out
    }

    /// Gradient of a node, available after `backward`.
    pub fn grad(&self, id: NodeId) -> Option<&[f64]> {
        self.nodes[id].out.grad()
    }

    fn push(&mut self, op: Op, out: TensorBuf) -> NodeId {
        self.nodes.push(Node { op, out });
        self.nodes.len() - 1
    }

    /// Register a leaf activation (e.g. the network input).
    pub fn input(&mut self, t: TensorBuf) -> NodeId {
        self.push(Op::Input, t)
    }

    /// 1D convolution with odd kernel, same-padding of (k-1)/2 per side,
    /// stride 1 or 2. Output length is floor((L + 2p - k)/stride) + 1.
    pub fn conv1d(
        &mut self,
        params: &ParamSet,
        x: NodeId,
        w: ParamId,
        b: ParamId,
        stride: usize,
        pad: PadMode,
    ) -> Result<NodeId> {
        let (cout, cin, k) = match params.get(w).shape {
            ParamShape::Conv { cout, cin, k } => (cout, cin, k),
            _ => return Err(CoreError::InvalidArg("conv1d weight must be a kernel bank".into())),
        };
        if k % 2 == 0 {
            return Err(CoreError::InvalidArg(format!("kernel size {k} must be odd")));
        }
        if !(stride == 1 || stride == 2) {
            return Err(CoreError::InvalidArg(format!("stride {stride} not supported")));
        }
        let xt = &self.nodes[x].out;
        if xt.channels() != cin {
            return Err(CoreError::ShapeMismatch(format!(
                "conv1d: input has {} channels, kernel expects {cin}",
                xt.channels()
            )));
        }
        let l = xt.length();
        if l < 2 && k > 1 {
            return Err(CoreError::ShapeMismatch(format!(
                "conv1d: input length {l} too short for kernel {k}"
            )));
        }
        match params.get(b).shape {
            ParamShape::PerChannel { c } if c == cout => {}
            _ => return Err(CoreError::ShapeMismatch("conv1d: bias shape".into())),
        }

        let p = (k - 1) / 2;
        let lp = l + 2 * p;
        let lout = (lp - k) / stride + 1;
        let xpad = pad_channels(xt, p, pad);
        let wv = params.value(w);
        let bv = params.value(b);

        let mut out = vec![0.0; cout * lout];
        for co in 0..cout {
            let orow = &mut out[co * lout..(co + 1) * lout];
            orow.iter_mut().for_each(|v| *v = bv[co]);
            for ci in 0..cin {
                let xrow = &xpad[ci * lp..(ci + 1) * lp];
                for t in 0..k {
                    let wkt = wv[(co * cin + ci) * k + t];
                    if stride == 1 {
                        for (j, o) in orow.iter_mut().enumerate() {
                            *o += wkt * xrow[j + t];
                        }
                    } else {
                        for (j, o) in orow.iter_mut().enumerate() {
                            *o += wkt * xrow[2 * j + t];
                        }
                    }
                }
            }
        }
        let out = TensorBuf::new(cout, lout, out)?;
        Ok(self.push(Op::Conv1d { x, w, b, stride, pad }, out))
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> Result<NodeId> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(CoreError::InvalidArg(format!("leaky_relu slope {slope} not in (0,1)")));
        }
        let out = self.nodes[x].out.map(|v| if v > 0.0 { v } else { slope * v });
        Ok(self.push(Op::LeakyRelu { x, slope }, out))
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let out = self.nodes[x].out.map(|v| 1.0 / (1.0 + (-v).exp()));
        self.push(Op::Sigmoid { x }, out)
    }

    /// Duplicate every sample, doubling the length.
    pub fn upsample_nearest(&mut self, x: NodeId) -> NodeId {
        let xt = &self.nodes[x].out;
        let (c, l) = (xt.channels(), xt.length());
        let mut out = vec![0.0; c * 2 * l];
        for ch in 0..c {
            let row = xt.channel(ch);
            let orow = &mut out[ch * 2 * l..(ch + 1) * 2 * l];
            for (i, &v) in row.iter().enumerate() {
                orow[2 * i] = v;
                orow[2 * i + 1] = v;
            }
        }
        let out = TensorBuf::new(c, 2 * l, out).expect("upsample shape");
        self.push(Op::UpsampleNearest { x }, out)
    }

    pub fn concat_channels(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (at, bt) = (&self.nodes[a].out, &self.nodes[b].out);
        if at.length() != bt.length() {
            return Err(CoreError::ShapeMismatch(format!(
                "concat_channels: lengths {} vs {}",
                at.length(),
                bt.length()
            )));
        }
        let mut data = Vec::with_capacity(at.len() + bt.len());
        data.extend_from_slice(at.data());
        data.extend_from_slice(bt.data());
        let out = TensorBuf::new(at.channels() + bt.channels(), at.length(), data)?;
        Ok(self.push(Op::ConcatChannels { a, b }, out))
    }

    /// Normalize each channel over the length axis (population variance),
    /// then apply per-channel affine scale and shift.
    pub fn channel_norm(
        &mut self,
        params: &ParamSet,
        x: NodeId,
        scale: ParamId,
        shift: ParamId,
        eps: f64,
    ) -> Result<NodeId> {
        let xt = &self.nodes[x].out;
        let (c, l) = (xt.channels(), xt.length());
        if l < 2 {
            return Err(CoreError::InvalidArg("channel_norm needs length >= 2".into()));
        }
        if eps <= 0.0 {
            return Err(CoreError::InvalidArg("channel_norm eps must be positive".into()));
        }
        for (pid, what) in [(scale, "scale"), (shift, "shift")] {
            match params.get(pid).shape {
                ParamShape::PerChannel { c: pc } if pc == c => {}
                _ => {
                    return Err(CoreError::ShapeMismatch(format!(
                        "channel_norm: {what} must be per-channel of {c}"
                    )))
                }
            }
        }
        let sv = params.value(scale);
        let hv = params.value(shift);
        let mut mean = vec![0.0; c];
        let mut istd = vec![0.0; c];
        let mut out = vec![0.0; c * l];
        for ch in 0..c {
            let row = xt.channel(ch);
            let m = row.iter().sum::<f64>() / l as f64;
            let var = row.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / l as f64;
            let is = 1.0 / (var + eps).sqrt();
            mean[ch] = m;
            istd[ch] = is;
            let orow = &mut out[ch * l..(ch + 1) * l];
            for (o, &v) in orow.iter_mut().zip(row) {
                *o = (v - m) * is * sv[ch] + hv[ch];
            }
        }
        let out = TensorBuf::new(c, l, out)?;
        Ok(self.push(Op::ChannelNorm { x, scale, shift, mean, istd }, out))
    }

    /// Keep the first `keep` samples of every channel.
    pub fn crop_length(&mut self, x: NodeId, keep: usize) -> Result<NodeId> {
        let xt = &self.nodes[x].out;
        let (c, l) = (xt.channels(), xt.length());
        if keep == 0 || keep > l {
            return Err(CoreError::InvalidArg(format!("crop to {keep} of length {l}")));
        }
        let mut data = Vec::with_capacity(c * keep);
        for ch in 0..c {
            data.extend_from_slice(&xt.channel(ch)[..keep]);
        }
        let out = TensorBuf::new(c, keep, data)?;
        Ok(self.push(Op::CropLength { x }, out))
    }

    /// Scalar sum of all elements.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let s = self.nodes[x].out.data().iter().sum();
        self.push(Op::Sum { x }, TensorBuf::from_vec(vec![s]))
    }

    /// Scalar 0.5 * sum of squares.
    pub fn half_sum_squares(&mut self, x: NodeId) -> NodeId {
        let s = 0.5 * self.nodes[x].out.data().iter().map(|v| v * v).sum::<f64>();
        self.push(Op::HalfSumSquares { x }, TensorBuf::from_vec(vec![s]))
    }

    /// Scalar inner product with a constant weight vector.
    pub fn dot_const(&mut self, x: NodeId, weights: &[f64]) -> Result<NodeId> {
        let xt = &self.nodes[x].out;
        if weights.len() != xt.len() {
            return Err(CoreError::ShapeMismatch("dot_const weight length".into()));
        }
        let s = xt.data().iter().zip(weights).map(|(a, b)| a * b).sum();
        let weights = weights.to_vec();
        Ok(self.push(Op::DotConst { x, weights }, TensorBuf::from_vec(vec![s])))
    }

    /// Scalar data-fit loss of the residual `y - A x`.
    pub fn data_fit(
        &mut self,
        x: NodeId,
        op: &ForwardOperator,
        y: &TensorBuf,
        kind: LossKind,
    ) -> Result<NodeId> {
        let xt = &self.nodes[x].out;
        let ax = op.apply(xt)?;
        if ax.channels() != y.channels() || ax.length() != y.length() {
            return Err(CoreError::ShapeMismatch(format!(
                "data_fit: operator output {}x{} vs observation {}x{}",
                ax.channels(),
                ax.length(),
                y.channels(),
                y.length()
            )));
        }
        let residual: Vec<f64> =
            y.data().iter().zip(ax.data()).map(|(yi, ai)| yi - ai).collect();
        let (loss, psi): (f64, Vec<f64>) = match kind {
            LossKind::Huber { lambda } => {
                if lambda <= 0.0 {
                    return Err(CoreError::InvalidArg("huber lambda must be positive".into()));
                }
                let loss = residual.iter().map(|&r| huber_scalar(r, lambda)).sum();
                let psi = residual.iter().map(|&r| huber_grad_scalar(r, lambda)).collect();
                (loss, psi)
            }
            LossKind::LeastSquares => {
                let loss = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();
                (loss, residual.clone())
            }
        };
        // d loss / d x = -A^T psi(r)
        let psi_t = TensorBuf::new(y.channels(), y.length(), psi)?;
        let mut grad_x = op.adjoint(&psi_t)?;
        grad_x.data_mut().iter_mut().for_each(|g| *g = -*g);
        let grad_x = grad_x.data().to_vec();
        Ok(self.push(Op::DataFit { x, grad_x }, TensorBuf::from_vec(vec![loss])))
    }

    /// Reverse pass from a scalar loss node. Populates the grad slot of
    /// every tape node and accumulates parameter gradients into `params`.
    pub fn backward(&mut self, params: &mut ParamSet, loss: NodeId) -> Result<()> {
        let lt = &self.nodes[loss].out;
        if lt.len() != 1 {
            return Err(CoreError::InvalidArg("backward: loss must be scalar".into()));
        }
        if !lt.scalar().is_finite() {
            // Identify the first offending node in forward order.
            for (id, node) in self.nodes.iter().enumerate() {
                if node.out.data().iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::NonFinite(format!(
                        "backward: first non-finite node is #{id} ({})",
                        node.op.name()
                    )));
                }
            }
            return Err(CoreError::NonFinite("backward: loss non-finite".into()));
        }

        let mut grads: Vec<Vec<f64>> =
            self.nodes.iter().map(|n| vec![0.0; n.out.len()]).collect();
        grads[loss][0] = 1.0;

        for id in (0..=loss).rev() {
            // Detach this node's gradient so inputs can be written freely.
            let g = std::mem::take(&mut grads[id]);
            if g.iter().all(|&v| v == 0.0) {
                grads[id] = g;
                continue;
            }
            match &self.nodes[id].op {
                Op::Input => {}
                Op::Conv1d { x, w, b, stride, pad } => {
                    self.backward_conv1d(params, *x, *w, *b, *stride, *pad, id, &g, &mut grads);
                }
                Op::LeakyRelu { x, slope } => {
                    let xv = self.nodes[*x].out.data();
                    let gx = &mut grads[*x];
                    for i in 0..g.len() {
                        gx[i] += g[i] * if xv[i] > 0.0 { 1.0 } else { *slope };
                    }
                }
                Op::Sigmoid { x } => {
                    let sv = self.nodes[id].out.data();
                    let gx = &mut grads[*x];
                    for i in 0..g.len() {
                        gx[i] += g[i] * sv[i] * (1.0 - sv[i]);
                    }
                }
                Op::UpsampleNearest { x } => {
                    let xt = &self.nodes[*x].out;
                    let (c, l) = (xt.channels(), xt.length());
                    let gx = &mut grads[*x];
                    for ch in 0..c {
                        for i in 0..l {
                            gx[ch * l + i] +=
                                g[ch * 2 * l + 2 * i] + g[ch * 2 * l + 2 * i + 1];
                        }
                    }
                }
                Op::ConcatChannels { a, b } => {
                    let na = self.nodes[*a].out.len();
                    let (a, b) = (*a, *b);
                    for (i, &v) in g[..na].iter().enumerate() {
                        grads[a][i] += v;
                    }
                    for (i, &v) in g[na..].iter().enumerate() {
                        grads[b][i] += v;
                    }
                }
                Op::ChannelNorm { x, scale, shift, mean, istd } => {
                    let (x, scale, shift) = (*x, *scale, *shift);
                    let xt = &self.nodes[x].out;
                    let (c, l) = (xt.channels(), xt.length());
                    let ln = l as f64;
                    let sv = params.value(scale).to_vec();
                    let mut dscale = vec![0.0; c];
                    let mut dshift = vec![0.0; c];
                    for ch in 0..c {
                        let row = xt.channel(ch);
                        let grow = &g[ch * l..(ch + 1) * l];
                        let (m, is) = (mean[ch], istd[ch]);
                        let mut sum_dy = 0.0;
                        let mut sum_dy_xhat = 0.0;
                        for i in 0..l {
                            let xhat = (row[i] - m) * is;
                            sum_dy += grow[i];
                            sum_dy_xhat += grow[i] * xhat;
                        }
                        dshift[ch] = sum_dy;
                        dscale[ch] = sum_dy_xhat;
                        let gx = &mut grads[x][ch * l..(ch + 1) * l];
                        let s = sv[ch];
                        for i in 0..l {
                            let xhat = (row[i] - m) * is;
                            // d/dx of the normalized affine output
                            gx[i] += s * is
                                * (grow[i] - sum_dy / ln - xhat * sum_dy_xhat / ln);
                        }
                    }
                    add_assign(&mut params.get_mut(scale).grad, &dscale);
                    add_assign(&mut params.get_mut(shift).grad, &dshift);
                }
                Op::CropLength { x } => {
                    let xt = &self.nodes[*x].out;
                    let (c, l) = (xt.channels(), xt.length());
                    let keep = self.nodes[id].out.length();
                    let gx = &mut grads[*x];
                    for ch in 0..c {
                        for i in 0..keep {
                            gx[ch * l + i] += g[ch * keep + i];
                        }
                    }
                }
                Op::Sum { x } => {
                    let gx = &mut grads[*x];
                    gx.iter_mut().for_each(|v| *v += g[0]);
                }
                Op::HalfSumSquares { x } => {
                    let xv = self.nodes[*x].out.data();
                    let gx = &mut grads[*x];
                    for i in 0..gx.len() {
                        gx[i] += g[0] * xv[i];
                    }
                }
                Op::DotConst { x, weights } => {
                    let gx = &mut grads[*x];
                    for i in 0..gx.len() {
                        gx[i] += g[0] * weights[i];
                    }
                }
                Op::DataFit { x, grad_x } => {
                    let gx = &mut grads[*x];
                    for i in 0..gx.len() {
                        gx[i] += g[0] * grad_x[i];
                    }
                }
            }
            grads[id] = g;
        }

        for (node, g) in self.nodes.iter_mut().zip(grads) {
            node.out.grad_mut().copy_from_slice(&g);
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn backward_conv1d(
        &self,
        params: &mut ParamSet,
        x: NodeId,
        w: ParamId,
        b: ParamId,
        stride: usize,
        pad: PadMode,
        out_id: NodeId,
        dout: &[f64],
        grads: &mut [Vec<f64>],
    ) {
        let (cout, cin, k) = match params.get(w).shape {
            ParamShape::Conv { cout, cin, k } => (cout, cin, k),
            _ => unreachable!("checked at forward"),
        };
        let xt = &self.nodes[x].out;
        let l = xt.length();
        let p = (k - 1) / 2;
        let lp = l + 2 * p;
        let lout = self.nodes[out_id].out.length();
        let xpad = pad_channels(xt, p, pad);
        let wv = params.value(w).to_vec();

        let mut dxpad = vec![0.0; cin * lp];
        let mut dw = vec![0.0; cout * cin * k];
        let mut db = vec![0.0; cout];
        for co in 0..cout {
            let gout = &dout[co * lout..(co + 1) * lout];
            db[co] += gout.iter().sum::<f64>();
            for ci in 0..cin {
                let xrow = &xpad[ci * lp..(ci + 1) * lp];
                let dxrow = &mut dxpad[ci * lp..(ci + 1) * lp];
                for t in 0..k {
                    let wkt = wv[(co * cin + ci) * k + t];
                    let mut acc = 0.0;
                    if stride == 1 {
                        for (j, &gj) in gout.iter().enumerate() {
                            dxrow[j + t] += wkt * gj;
                            acc += xrow[j + t] * gj;
                        }
                    } else {
                        for (j, &gj) in gout.iter().enumerate() {
                            dxrow[2 * j + t] += wkt * gj;
                            acc += xrow[2 * j + t] * gj;
                        }
                    }
                    dw[(co * cin + ci) * k + t] += acc;
                }
            }
        }
        unpad_grad(&dxpad, cin, l, p, pad, &mut grads[x]);
        add_assign(&mut params.get_mut(w).grad, &dw);
        add_assign(&mut params.get_mut(b).grad, &db);
    }
}

fn add_assign(dst: &mut [f64], src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
