use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{GentocError, Result};

/// Named trainable tensor: row-major `f32` values plus a same-shape gradient
/// buffer.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f32>,
    pub grad: Vec<f32>,
}

/// Initialization scheme for a new parameter.
#[derive(Debug, Clone, Copy)]
pub enum Init {
    /// Uniform on `[-sqrt(6/(fan_in+fan_out)), +..]`.
    Xavier,
    /// Gaussian with the given standard deviation.
    Normal(f32),
    Zeros,
    Ones,
}

/// Ordered collection of parameters with unique names.
#[derive(Debug, Clone, Default)]
pub struct ParamBundle {
    params: Vec<Parameter>,
    index: HashMap<String, usize>,
    grads_ready: bool,
}

impl ParamBundle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        name: &str,
        rows: usize,
        cols: usize,
        init: Init,
        rng: &mut ChaCha8Rng,
    ) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(GentocError::InvalidInput(format!("duplicate parameter name {name:?}")));
        }
        let n = rows * cols;
        let value = match init {
            Init::Xavier => {
                let limit = (6.0 / (rows + cols) as f32).sqrt();
                (0..n).map(|_| rng.gen_range(-limit..limit)).collect()
            }
            Init::Normal(std) => (0..n).map(|_| sample_normal(rng) * std).collect(),
            Init::Zeros => vec![0.0; n],
            Init::Ones => vec![1.0; n],
        };
        self.params.push(Parameter { name: name.to_string(), rows, cols, value, grad: vec![0.0; n] });
        let idx = self.params.len() - 1;
        self.index.insert(name.to_string(), idx);
        Ok(idx)
    }

    /// Register a parameter with explicit values (checkpoint loading).
    pub fn add_raw(&mut self, name: &str, rows: usize, cols: usize, value: Vec<f32>) -> Result<usize> {
        if self.index.contains_key(name) {
            return Err(GentocError::InvalidInput(format!("duplicate parameter name {name:?}")));
        }
        if value.len() != rows * cols {
            return Err(GentocError::InvalidInput(format!(
                "parameter {name:?}: {} values for shape {}x{}",
                value.len(),
                rows,
                cols
            )));
        }
        let n = value.len();
        self.params.push(Parameter { name: name.to_string(), rows, cols, value, grad: vec![0.0; n] });
        let idx = self.params.len() - 1;
        self.index.insert(name.to_string(), idx);
        Ok(idx)
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, idx: usize) -> &Parameter {
        &self.params[idx]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub(crate) fn accumulate_grad(&mut self, idx: usize, delta: &[f32]) {
        for (g, &d) in self.params[idx].grad.iter_mut().zip(delta) {
            *g += d;
        }
    }

    pub(crate) fn mark_grads_ready(&mut self) {
        self.grads_ready = true;
    }

    pub fn grads_ready(&self) -> bool {
        self.grads_ready
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
        self.grads_ready = false;
    }

    pub(crate) fn params_mut(&mut self) -> &mut [Parameter] {
        &mut self.params
    }
}

/// Box-Muller standard normal sample.
fn sample_normal(rng: &mut ChaCha8Rng) -> f32 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    ((-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()) as f32
}
