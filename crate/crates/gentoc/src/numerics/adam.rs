use crate::{GentocError, Result};

use super::param::ParamBundle;

/// Adaptive-moment-estimation optimizer over a [`ParamBundle`].
pub struct Adam {
    pub lr: f32,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(bundle: &ParamBundle, lr: f32) -> Self {
        let m = bundle.iter().map(|p| vec![0.0; p.value.len()]).collect();
        let v = bundle.iter().map(|p| vec![0.0; p.value.len()]).collect();
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m, v }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update: `w -= lr * mhat / (sqrt(vhat) + eps)`. Clears gradients
    /// and bumps the step counter.
    pub fn step(&mut self, bundle: &mut ParamBundle) -> Result<()> {
        if !bundle.grads_ready() {
            return Err(GentocError::InvalidInput(
                "optimizer step without populated gradients".into(),
            ));
        }
        if bundle.len() != self.m.len() {
            return Err(GentocError::InvalidInput(format!(
                "optimizer state tracks {} parameters, bundle has {}",
                self.m.len(),
                bundle.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (pi, p) in bundle.params_mut().iter_mut().enumerate() {
            let (m, v) = (&mut self.m[pi], &mut self.v[pi]);
            for i in 0..p.value.len() {
                let g = p.grad[i] as f64;
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p.value[i] = (p.value[i] as f64 - self.lr as f64 * mhat / (vhat.sqrt() + self.eps)) as f32;
            }
        }
        bundle.zero_grads();
        Ok(())
    }
}
