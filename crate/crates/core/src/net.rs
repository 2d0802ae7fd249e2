//! The untrained hierarchical 1D encoder/decoder network with skip
//! connections. Strided convolutions downsample, nearest-neighbor
//! upsampling restores length, and 1x1 skip convolutions carry encoder
//! features across. Wiring for depth D:
//!
//!   e[0] = act(norm(conv_s2(z)))          e[i] = act(norm(conv_s2(e[i-1])))
//!   s[i] = act(norm(conv_1x1(e[i])))
//!   d[D-1] = act(norm(conv(s[D-1])))
//!   d[i] = act(norm(conv(concat(up2(d[i+1]), s[i]))))
//!   out  = conv(up2(d[0])), then sigmoid when enabled
//!
//! The output convolution uses the decoder kernel size: a 1x1 kernel after
//! nearest upsampling would leave outputs constant on sample pairs, a
//! resolution floor that dominates the fit error on smooth targets.
//!
//! Input length is right reflection-padded to a multiple of 2^D and the
//! output cropped back, so arbitrary lengths are accepted.

use crate::autodiff::{
    adam_step, add_conv_layer, add_norm_layer, AdamState, LossKind, NodeId, PadMode, ParamId,
    ParamSet, Tape,
};
use crate::error::{CoreError, Result};
use crate::operators::ForwardOperator;
use crate::rng::RngStream;
use crate::tensor::TensorBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpsampleMode {
    #[default]
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownsampleMode {
    #[default]
    Stride,
}

/// Network hyperparameters; the defaults are the reference configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub num_encoder_layers: usize,
    pub num_decoder_layers: usize,
    pub num_skip_layers: usize,
    pub encoder_channel_sizes: Vec<usize>,
    pub decoder_channel_sizes: Vec<usize>,
    pub skip_channel_sizes: Vec<usize>,
    pub encoder_kernel_size: usize,
    pub decoder_kernel_size: usize,
    pub skip_kernel_size: usize,
    pub activation_slope: f64,
    pub upsample_mode: UpsampleMode,
    pub downsample_mode: DownsampleMode,
    pub norm_enabled: bool,
    pub sigmoid_output: bool,
    pub norm_eps: f64,
    pub pad_mode: PadMode,
    pub in_channels: usize,
    pub out_channels: usize,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            num_encoder_layers: 2,
            num_decoder_layers: 2,
            num_skip_layers: 2,
            encoder_channel_sizes: vec![64, 64],
            decoder_channel_sizes: vec![64, 64],
            skip_channel_sizes: vec![4, 4],
            encoder_kernel_size: 3,
            decoder_kernel_size: 3,
            skip_kernel_size: 1,
            activation_slope: 0.01,
            upsample_mode: UpsampleMode::Nearest,
            downsample_mode: DownsampleMode::Stride,
            norm_enabled: true,
            sigmoid_output: true,
            norm_eps: 1e-6,
            pad_mode: PadMode::Reflect,
            in_channels: 1,
            out_channels: 1,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn depth(&self) -> usize {
        self.num_encoder_layers
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.num_encoder_layers;
        if d == 0 {
            return Err(CoreError::InvalidArg("need at least one encoder layer".into()));
        }
        if self.num_decoder_layers != d || self.num_skip_layers != d {
            return Err(CoreError::InvalidArg(
                "encoder, decoder, and skip layer counts must agree".into(),
            ));
        }
        for (name, list, count) in [
            ("encoder", &self.encoder_channel_sizes, self.num_encoder_layers),
            ("decoder", &self.decoder_channel_sizes, self.num_decoder_layers),
            ("skip", &self.skip_channel_sizes, self.num_skip_layers),
        ] {
            if list.len() != count {
                return Err(CoreError::InvalidArg(format!(
                    "{name} channel list length {} does not match layer count {count}",
                    list.len()
                )));
            }
            if list.iter().any(|&c| c == 0) {
                return Err(CoreError::InvalidArg(format!("{name} channels must be positive")));
            }
        }
        for (name, k) in [
            ("encoder", self.encoder_kernel_size),
            ("decoder", self.decoder_kernel_size),
            ("skip", self.skip_kernel_size),
        ] {
            if k % 2 == 0 || k == 0 {
                return Err(CoreError::InvalidArg(format!("{name} kernel size {k} must be odd")));
            }
        }
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(CoreError::InvalidArg("channel counts must be positive".into()));
        }
        if !(self.activation_slope > 0.0 && self.activation_slope < 1.0) {
            return Err(CoreError::InvalidArg("activation slope must be in (0,1)".into()));
        }
        Ok(())
    }

    /// Closed-form trainable parameter count.
    pub fn param_count(&self) -> usize {
        let d = self.depth();
        let enc = &self.encoder_channel_sizes;
        let dec = &self.decoder_channel_sizes;
        let skip = &self.skip_channel_sizes;
        let mut total = 0;
        for i in 0..d {
            let cin = if i == 0 { self.in_channels } else { enc[i - 1] };
            total += enc[i] * cin * self.encoder_kernel_size + enc[i];
            total += skip[i] * enc[i] * self.skip_kernel_size + skip[i];
            let dec_in = if i == d - 1 { skip[i] } else { dec[i + 1] + skip[i] };
            total += dec[i] * dec_in * self.decoder_kernel_size + dec[i];
        }
        total += self.out_channels * dec[0] * self.decoder_kernel_size + self.out_channels;
        if self.norm_enabled {
            let normed: usize =
                enc.iter().sum::<usize>() + dec.iter().sum::<usize>() + skip.iter().sum::<usize>();
            total += 2 * normed;
        }
        total
    }
}

struct ConvIds {
    w: ParamId,
    b: ParamId,
    norm: Option<(ParamId, ParamId)>,
}

/// Built network: deterministic parameters bound to the fixed wiring.
pub struct PriorNet {
    cfg: NetConfig,
    params: ParamSet,
    enc: Vec<ConvIds>,
    skip: Vec<ConvIds>,
    dec: Vec<ConvIds>,
    out: ConvIds,
}

impl PriorNet {
    /// Deterministically initialize all parameters from `cfg.seed`.
    pub fn build(cfg: &NetConfig) -> Result<PriorNet> {
        cfg.validate()?;
        let mut rng = RngStream::seeded(cfg.seed).split("net-init");
        let mut params = ParamSet::new();
        let d = cfg.depth();
        let enc_ch = &cfg.encoder_channel_sizes;
        let dec_ch = &cfg.decoder_channel_sizes;
        let skip_ch = &cfg.skip_channel_sizes;

        let conv = |params: &mut ParamSet,
                        rng: &mut RngStream,
                        name: &str,
                        cout: usize,
                        cin: usize,
                        k: usize,
                        normed: bool|
         -> Result<ConvIds> {
            let (w, b) = add_conv_layer(params, rng, name, cout, cin, k)?;
            let norm = if normed && cfg.norm_enabled {
                Some(add_norm_layer(params, &format!("{name}.norm"), cout)?)
            } else {
                None
            };
            Ok(ConvIds { w, b, norm })
        };

        let mut enc = Vec::with_capacity(d);
        let mut skip = Vec::with_capacity(d);
        let mut dec = Vec::with_capacity(d);
        for i in 0..d {
            let cin = if i == 0 { cfg.in_channels } else { enc_ch[i - 1] };
            enc.push(conv(
                &mut params,
                &mut rng,
                &format!("enc{i}"),
                enc_ch[i],
                cin,
                cfg.encoder_kernel_size,
                true,
            )?);
            skip.push(conv(
                &mut params,
                &mut rng,
                &format!("skip{i}"),
                skip_ch[i],
                enc_ch[i],
                cfg.skip_kernel_size,
                true,
            )?);
        }
        for i in 0..d {
            let cin = if i == d - 1 { skip_ch[i] } else { dec_ch[i + 1] + skip_ch[i] };
            dec.push(conv(
                &mut params,
                &mut rng,
                &format!("dec{i}"),
                dec_ch[i],
                cin,
                cfg.decoder_kernel_size,
                true,
            )?);
        }
        let out = conv(
            &mut params,
            &mut rng,
            "out",
            cfg.out_channels,
            dec_ch[0],
            cfg.decoder_kernel_size,
            false,
        )?;

        Ok(PriorNet { cfg: cfg.clone(), params, enc, skip, dec, out })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Right reflection pad to a multiple of 2^depth.
    fn pad_input(&self, z: &TensorBuf) -> TensorBuf {
        let block = 1usize << self.cfg.depth();
        let l = z.length();
        let target = l.div_ceil(block) * block;
        if target == l {
            return z.clone();
        }
        let c = z.channels();
        let mut data = Vec::with_capacity(c * target);
        for ch in 0..c {
            let row = z.channel(ch);
            data.extend_from_slice(row);
            for q in l..target {
                let src = (2 * l as isize - 2 - q as isize).clamp(0, l as isize - 1);
                data.push(row[src as usize]);
            }
        }
        TensorBuf::new(c, target, data).expect("pad shape")
    }

    fn stage(
        &self,
        tape: &mut Tape,
        ids: &ConvIds,
        x: NodeId,
        stride: usize,
        label: &str,
    ) -> Result<NodeId> {
        let mut cur = tape.conv1d(&self.params, x, ids.w, ids.b, stride, self.cfg.pad_mode)?;
        if let Some((scale, shift)) = ids.norm {
            cur = tape.channel_norm(&self.params, cur, scale, shift, self.cfg.norm_eps)?;
        }
        let cur = tape.leaky_relu(cur, self.cfg.activation_slope)?;
        tape.value(cur)
            .check_finite(label)
            .map_err(|e| CoreError::NonFinite(format!("net stage {label}: {e}")))?;
        Ok(cur)
    }

    /// Run the network on a tape; returns the tape and the output node
    /// (length exactly `z.length()`).
    pub fn forward(&self, z: &TensorBuf) -> Result<(Tape, NodeId)> {
        if z.channels() != self.cfg.in_channels {
            return Err(CoreError::ShapeMismatch(format!(
                "input has {} channels, net expects {}",
                z.channels(),
                self.cfg.in_channels
            )));
        }
        let l = z.length();
        if l < 8 {
            return Err(CoreError::InvalidArg(format!("input length {l} below minimum 8")));
        }
        let d = self.cfg.depth();
        let mut tape = Tape::new();
        let padded = self.pad_input(z);
        let z_id = tape.input(padded);

        let mut enc_out = Vec::with_capacity(d);
        let mut cur = z_id;
        for i in 0..d {
            cur = self.stage(&mut tape, &self.enc[i], cur, 2, &format!("enc{i}"))?;
            enc_out.push(cur);
        }
        let mut skips = Vec::with_capacity(d);
        for i in 0..d {
            skips.push(self.stage(&mut tape, &self.skip[i], enc_out[i], 1, &format!("skip{i}"))?);
        }
        let mut dec_cur =
            self.stage(&mut tape, &self.dec[d - 1], skips[d - 1], 1, &format!("dec{}", d - 1))?;
        for i in (0..d - 1).rev() {
            let up = tape.upsample_nearest(dec_cur);
            let joined = tape.concat_channels(up, skips[i])?;
            dec_cur = self.stage(&mut tape, &self.dec[i], joined, 1, &format!("dec{i}"))?;
        }
        let up = tape.upsample_nearest(dec_cur);
        let mut out =
            tape.conv1d(&self.params, up, self.out.w, self.out.b, 1, self.cfg.pad_mode)?;
        if self.cfg.sigmoid_output {
            out = tape.sigmoid(out);
        }
        tape.value(out)
            .check_finite("out")
            .map_err(|e| CoreError::NonFinite(format!("net stage out: {e}")))?;
        let cropped = tape.crop_length(out, l)?;
        Ok((tape, cropped))
    }

    /// Forward pass returning only the output values.
    pub fn forward_value(&self, z: &TensorBuf) -> Result<TensorBuf> {
        let (tape, out) = self.forward(z)?;
        let mut v = tape.value(out).clone();
        v.clear_grad();
        Ok(v)
    }
}

/// Fixed random network input: uniform draws scaled to [0, 0.1].
pub fn random_net_input(
    channels: usize,
    length: usize,
    rng: &mut RngStream,
) -> TensorBuf {
    let data = (0..channels * length).map(|_| 0.1 * rng.uniform()).collect();
    TensorBuf::new(channels, length, data).expect("input shape")
}

/// Fit the network to a fixed target from a fixed random input and return
/// the per-iteration least-squares loss trace. Probes how quickly the
/// architecture fits structure versus noise.
pub fn fit_capacity_probe(
    cfg: &NetConfig,
    target: &TensorBuf,
    iters: usize,
    lr: f64,
) -> Result<Vec<f64>> {
    if target.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(CoreError::InvalidArg("probe target must lie in [0,1]".into()));
    }
    if target.channels() != cfg.out_channels || target.channels() != cfg.in_channels {
        return Err(CoreError::ShapeMismatch(
            "probe target channels must match net channels".into(),
        ));
    }
    let mut net = PriorNet::build(cfg)?;
    let mut rng = RngStream::seeded(cfg.seed).split("probe-input");
    let z = random_net_input(cfg.in_channels, target.length(), &mut rng);
    let op = ForwardOperator::Identity { n: target.length() };
    let mut adam = AdamState::new(net.params());
    let mut trace = Vec::with_capacity(iters);
    for iter in 0..iters {
        let (mut tape, out) = net.forward(&z)?;
        let loss = tape.data_fit(out, &op, target, LossKind::LeastSquares)?;
        let loss_value = tape.value(loss).scalar();
        if !loss_value.is_finite() {
            return Err(CoreError::Numerical { iter, msg: "probe loss non-finite".into() });
        }
        tape.backward(net.params_mut(), loss)?;
        adam_step(net.params_mut(), &mut adam, lr)?;
        trace.push(loss_value);
    }
    Ok(trace)
}
