use crate::autodiff::param::ParamSet;
use crate::error::{CoreError, Result};

/// Adam moment buffers, one pair per parameter in the set.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        AdamState {
            m: params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update with bias-corrected moments, reading each parameter's
/// grad slot. Grads are zeroed afterwards.
pub fn adam_step(params: &mut ParamSet, state: &mut AdamState, lr: f64) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(CoreError::ShapeMismatch(
            "adam state does not match parameter set".into(),
        ));
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for i in 0..params.len() {
        let p = params.get_mut(i);
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for j in 0..p.value.len() {
            let g = p.grad[j];
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            p.value[j] -= lr * m_hat / (v_hat.sqrt() + state.eps);
            p.grad[j] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::param::ParamShape;

    fn scalar_param(v: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.add("theta", ParamShape::PerChannel { c: 1 }, vec![v]).unwrap();
        ps
    }

    #[test]
    fn first_step_moves_by_lr() {
        // Bias correction makes the first step exactly lr in magnitude
        // (up to eps): m_hat = g, v_hat = g^2.
        let mut ps = scalar_param(0.0);
        ps.get_mut(0).grad[0] = 1.0;
        let mut st = AdamState::new(&ps);
        adam_step(&mut ps, &mut st, 0.01).unwrap();
        assert!((ps.value(0)[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn zero_grad_zero_state_no_move() {
        let mut ps = scalar_param(1.5);
        let mut st = AdamState::new(&ps);
        adam_step(&mut ps, &mut st, 0.01).unwrap();
        assert_eq!(ps.value(0)[0], 1.5);
    }

    #[test]
    fn two_constant_steps() {
        let mut ps = scalar_param(0.0);
        let mut st = AdamState::new(&ps);
        for _ in 0..2 {
            ps.get_mut(0).grad[0] = 1.0;
            adam_step(&mut ps, &mut st, 0.01).unwrap();
        }
        assert!((ps.value(0)[0] + 0.02).abs() < 1e-6);
        assert_eq!(st.step_count(), 2);
    }

    #[test]
    fn second_moment_nonnegative() {
        let mut ps = scalar_param(0.0);
        let mut st = AdamState::new(&ps);
        for s in 0..10 {
            ps.get_mut(0).grad[0] = if s % 2 == 0 { -3.0 } else { 2.0 };
            adam_step(&mut ps, &mut st, 0.01).unwrap();
            assert!(st.v[0][0] >= 0.0);
        }
    }
}
