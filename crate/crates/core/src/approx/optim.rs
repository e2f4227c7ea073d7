use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adaptive-moment (Adam) state over one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_stab: f64,
}

impl OptimState {
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps_stab: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// A non-finite gradient leaves parameters and moments untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.first_moment.len() {
            return Err(Error::dim("optimizer params", self.first_moment.len(), params.len()));
        }
        if grads.len() != params.len() {
            return Err(Error::dim("optimizer grads", params.len(), grads.len()));
        }
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient entry {i}")));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("lr", "learning rate must be positive"));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps_stab);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut st = OptimState::new(2, 1e-3);
        let mut p = vec![1.0, -2.0];
        st.step(&mut p, &[0.5, 0.5]).unwrap();
        let before = p.clone();
        let m_before = st.first_moment.clone();
        st.step(&mut p, &[0.0, 0.0]).unwrap();
        // m decays but is nonzero so params still drift slightly; with fresh
        // state a zero gradient changes nothing.
        assert!(st.first_moment.iter().zip(&m_before).all(|(a, b)| a.abs() < b.abs()));
        let mut fresh = OptimState::new(2, 1e-3);
        let mut q = before.clone();
        fresh.step(&mut q, &[0.0, 0.0]).unwrap();
        assert_eq!(q, before);
        assert_eq!(fresh.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut st = OptimState::new(1, 1e-3);
        let mut p = vec![0.0];
        st.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] + 1e-3).abs() < 1e-10);
    }

    #[test]
    fn non_finite_gradient_skips_update() {
        let mut st = OptimState::new(1, 1e-3);
        let mut p = vec![0.5];
        assert!(st.step(&mut p, &[f64::NAN]).is_err());
        assert_eq!(p, vec![0.5]);
        assert_eq!(st.step_count, 0);
    }

    #[test]
    fn quadratic_descent_is_monotone() {
        let mut st = OptimState::new(1, 1e-3);
        let mut w = vec![1.0f64];
        let mut prev = w[0].abs();
        for _ in 0..100 {
            let g = 2.0 * w[0];
            st.step(&mut w, &[g]).unwrap();
            assert!(w[0].abs() < prev);
            prev = w[0].abs();
        }
        assert_eq!(st.step_count, 100);
    }
}
