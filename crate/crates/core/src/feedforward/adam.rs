use crate::error::{Error, Result};

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

    /// Fresh state with lr 0.001, betas (0.9, 0.999), epsilon 1e-8.
    pub fn new(n_params: usize) -> Self {
        Self::with_learning_rate(n_params, Self::DEFAULT_LEARNING_RATE)
    }

    pub fn with_learning_rate(n_params: usize, learning_rate: f64) -> Self {
        Self {
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        for found in [params.len(), grads.len()] {
            if found != self.m.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.m.len(),
                    found,
                });
            }
        }
        self.t += 1;
        let t = self.t as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.step(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = g and v_hat = g^2 after one step, so the move is lr * g / (|g| + eps).
        let mut s = AdamState::new(1);
        let mut p = [0.0];
        s.step(&mut p, &[1.0]).unwrap();
        let expected = -1e-3 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-18);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut s = AdamState::new(3);
        let mut p = [1.0, -2.0, 3.0];
        for _ in 0..5 {
            s.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn deterministic() {
        let mut a = AdamState::new(2);
        let mut b = a.clone();
        let (mut pa, mut pb) = ([0.5, 0.5], [0.5, 0.5]);
        a.step(&mut pa, &[0.3, -0.7]).unwrap();
        b.step(&mut pb, &[0.3, -0.7]).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(a, b);
        assert!(a.v.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2);
        assert!(s.step(&mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(s.step(&mut [0.0; 2], &[0.0; 1]).is_err());
        assert_eq!(s.t, 0);
    }
}
