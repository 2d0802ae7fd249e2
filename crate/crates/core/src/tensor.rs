//! Dense [channels x length] buffer, the unit of all network computation.

use crate::error::{CoreError, Result};

/// Dense real-valued buffer, row-major by channel, with an optional
/// gradient slot of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorBuf {
    channels: usize,
    length: usize,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl TensorBuf {
    pub fn new(channels: usize, length: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(CoreError::InvalidArg(format!(
                "tensor dims must be positive, got {channels}x{length}"
            )));
        }
        if data.len() != channels * length {
            return Err(CoreError::ShapeMismatch(format!(
                "expected {} elements for {channels}x{length}, got {}",
                channels * length,
                data.len()
            )));
        }
        Ok(TensorBuf { channels, length, data, grad: None })
    }

    pub fn zeros(channels: usize, length: usize) -> Self {
        TensorBuf { channels, length, data: vec![0.0; channels * length], grad: None }
    }

    /// Single-channel buffer.
    pub fn from_vec(data: Vec<f64>) -> Self {
        let length = data.len();
        assert!(length > 0, "empty tensor");
        TensorBuf { channels: 1, length, data, grad: None }
    }

    /// Multi-channel buffer from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(CoreError::InvalidArg("no rows".into()));
        }
        let length = rows[0].len();
        if rows.iter().any(|r| r.len() != length) {
            return Err(CoreError::ShapeMismatch("rows of unequal length".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * length);
        for r in rows {
            data.extend_from_slice(r);
        }
        TensorBuf::new(rows.len(), length, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn get(&self, c: usize, i: usize) -> f64 {
        self.data[c * self.length + i]
    }

    pub fn set(&mut self, c: usize, i: usize, v: f64) {
        self.data[c * self.length + i] = v;
    }

    /// Allocate the gradient slot (zeroed) if absent, and return it.
    pub fn grad_mut(&mut self) -> &mut [f64] {
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self.grad.as_mut().unwrap().as_mut_slice()
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    /// Reject any NaN/Inf element; `what` names the producing operation.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(CoreError::NonFinite(format!(
                "{what}: element {} of {}x{} is {}",
                i, self.channels, self.length, self.data[i]
            ))),
        }
    }

    pub fn scalar(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1, "expected scalar tensor");
        self.data[0]
    }

    /// Apply `f` to every element, producing a new buffer.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> TensorBuf {
        TensorBuf {
            channels: self.channels,
            length: self.length,
            data: self.data.iter().map(|&v| f(v)).collect(),
            grad: None,
        }
    }
}
