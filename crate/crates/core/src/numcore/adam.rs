//! Adam optimizer state and update rule.

use crate::error::{Error, Result};

/// Per-tensor Adam state: first/second moment estimates and a step counter.
///
/// The update is the standard bias-corrected rule with defaults
/// `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    /// Fresh state for a parameter tensor with `len` entries.
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One Adam step, updating `params` in place from `grads`.
    ///
    ///   m <- b1 m + (1-b1) g        v <- b2 v + (1-b2) g^2
    ///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::shape(format!(
                "adam state holds {} entries, got params {} grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if lr < 0.0 {
            return Err(Error::domain(format!("learning rate must be >= 0, got {lr}")));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut state = AdamState::new(3);
        let mut params = vec![1.0, -2.0, 0.5];
        let before = params.clone();
        for _ in 0..10 {
            state.step(&mut params, &[0.0, 0.0, 0.0], 0.01).unwrap();
        }
        assert_eq!(params, before);
        assert_eq!(state.step_count(), 10);
    }

    #[test]
    fn first_step_moves_by_about_lr() {
        // Scalar p=0, g=1, fresh state: bias correction makes m_hat=1, v_hat=1,
        // so the step is lr / (1 + eps) which is about -0.001.
        let mut state = AdamState::new(1);
        let mut p = vec![0.0];
        state.step(&mut p, &[1.0], 0.001).unwrap();
        assert!((p[0] + 0.001).abs() < 1e-9, "p = {}", p[0]);
    }

    #[test]
    fn zero_lr_is_identity_but_counts() {
        let mut state = AdamState::new(2);
        let mut p = vec![3.0, -1.0];
        state.step(&mut p, &[0.7, -0.2], 0.0).unwrap();
        assert_eq!(p, vec![3.0, -1.0]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut state = AdamState::new(2);
        let mut p = vec![0.0, 0.0, 0.0];
        assert!(state.step(&mut p, &[1.0, 1.0, 1.0], 0.1).is_err());
    }

    #[test]
    fn second_moment_stays_nonnegative() {
        let mut state = AdamState::new(1);
        let mut p = vec![0.0];
        for g in [-3.0, 2.0, -0.5, 0.0, 10.0] {
            state.step(&mut p, &[g], 0.01).unwrap();
            assert!(state.v[0] >= 0.0);
        }
    }
}
