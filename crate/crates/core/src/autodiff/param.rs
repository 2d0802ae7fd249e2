use crate::error::{CoreError, Result};

/// Shape of a trainable parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamShape {
    /// Kernel bank [cout x cin x k], row-major.
    Conv { cout: usize, cin: usize, k: usize },
    /// Per-channel vector (bias, norm scale, norm shift).
    PerChannel { c: usize },
}

impl ParamShape {
    pub fn len(&self) -> usize {
        match *self {
            ParamShape::Conv { cout, cin, k } => cout * cin * k,
            ParamShape::PerChannel { c } => c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Identifier of a parameter within a `ParamSet`.
pub type ParamId = usize;

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub shape: ParamShape,
    pub value: Vec<f64>,
    /// Gradient slot, same length as `value`; zeroed between steps.
    pub grad: Vec<f64>,
}

/// Ordered collection of trainable parameters. Order is creation order and
/// is part of the determinism contract.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    entries: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, shape: ParamShape, value: Vec<f64>) -> Result<ParamId> {
        if value.len() != shape.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "param {name}: {} values for shape of {}",
                value.len(),
                shape.len()
            )));
        }
        let grad = vec![0.0; value.len()];
        self.entries.push(Param { name: name.to_string(), shape, value, grad });
        Ok(self.entries.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total scalar count across all parameters.
    pub fn total_len(&self) -> usize {
        self.entries.iter().map(|p| p.value.len()).sum()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.entries[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.entries[id]
    }

    pub fn value(&self, id: ParamId) -> &[f64] {
        &self.entries[id].value
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id].grad
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.entries.iter()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.entries {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }
}
