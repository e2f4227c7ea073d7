//! Dense multilayer perceptron with tanh hidden layers and a linear output.
//!
//! Parameters live in one flat buffer so optimizers, checkpoints and
//! finite-difference checks can treat them uniformly. Layer `l` occupies a
//! contiguous block: the `out x in` weight matrix (row-major) followed by the
//! `out` biases.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward_trace`], input first, output last.
#[derive(Debug, Clone)]
pub struct Trace {
    pub activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; param_count(layer_sizes)],
        })
    }

    /// Uniform Glorot initialization, zero biases.
    pub fn glorot<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut offset = 0;
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_flat(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let expected = param_count(layer_sizes);
        if params.len() != expected {
            return Err(Error::dim("flat parameter vector", expected, params.len()));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("parameter {i}")));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offsets of layer `l`'s weight block and bias block in the flat buffer.
    pub fn layer_offsets(&self, layer: usize) -> (usize, usize) {
        let mut offset = 0;
        for w in self.layer_sizes.windows(2).take(layer) {
            offset += w[0] * w[1] + w[1];
        }
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        (offset, offset + n_in * n_out)
    }

    /// Weight `(row = output unit, col = input unit)` of layer `l`.
    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        let (w, _) = self.layer_offsets(layer);
        self.params[w + row * self.layer_sizes[layer] + col]
    }

    pub fn bias(&self, layer: usize, row: usize) -> f64 {
        let (_, b) = self.layer_offsets(layer);
        self.params[b + row]
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::dim("mlp input", self.input_dim(), input.len()));
        }
        let mut x = input.to_vec();
        for layer in 0..self.num_layers() {
            x = self.layer_forward(layer, &x);
        }
        Ok(x)
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<Trace> {
        if input.len() != self.input_dim() {
            return Err(Error::dim("mlp input", self.input_dim(), input.len()));
        }
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(input.to_vec());
        for layer in 0..self.num_layers() {
            let next = self.layer_forward(layer, activations.last().unwrap());
            activations.push(next);
        }
        Ok(Trace { activations })
    }

    fn layer_forward(&self, layer: usize, x: &[f64]) -> Vec<f64> {
        let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
        let (w_off, b_off) = self.layer_offsets(layer);
        let weights = &self.params[w_off..b_off];
        let biases = &self.params[b_off..b_off + n_out];
        let hidden = layer + 1 < self.num_layers();
        weights
            .chunks_exact(n_in)
            .zip(biases)
            .map(|(row, b)| {
                let z = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
                if hidden {
                    z.tanh()
                } else {
                    z
                }
            })
            .collect()
    }

    /// Gradient of `grad_output . output` with respect to every parameter.
    pub fn backward(&self, input: &[f64], grad_output: &[f64]) -> Result<Vec<f64>> {
        let trace = self.forward_trace(input)?;
        let mut grads = vec![0.0; self.params.len()];
        self.backward_accumulate(&trace, grad_output, &mut grads)?;
        Ok(grads)
    }

    /// Adds the parameter gradient for one traced sample into `grads`.
    /// Returns the gradient with respect to the input.
    pub fn backward_accumulate(
        &self,
        trace: &Trace,
        grad_output: &[f64],
        grads: &mut [f64],
    ) -> Result<Vec<f64>> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::dim("mlp grad_output", self.output_dim(), grad_output.len()));
        }
        if grads.len() != self.params.len() {
            return Err(Error::dim("mlp gradient buffer", self.params.len(), grads.len()));
        }
        let mut delta = grad_output.to_vec();
        for layer in (0..self.num_layers()).rev() {
            let (n_in, n_out) = (self.layer_sizes[layer], self.layer_sizes[layer + 1]);
            let (w_off, b_off) = self.layer_offsets(layer);
            let x = &trace.activations[layer];
            if layer + 1 < self.num_layers() {
                // tanh'(z) = 1 - a^2
                let a = &trace.activations[layer + 1];
                for (d, ai) in delta.iter_mut().zip(a) {
                    *d *= 1.0 - ai * ai;
                }
            }
            if let Some(j) = delta.iter().position(|d| !d.is_finite()) {
                return Err(Error::NonFinite(format!("backward layer {layer}, unit {j}")));
            }
            let mut next = vec![0.0; n_in];
            for (j, &dj) in delta.iter().enumerate() {
                grads[b_off + j] += dj;
                if dj == 0.0 {
                    continue;
                }
                let row = w_off + j * n_in;
                for i in 0..n_in {
                    grads[row + i] += dj * x[i];
                    next[i] += dj * self.params[row + i];
                }
            }
            debug_assert_eq!(n_out, delta.len());
            delta = next;
        }
        Ok(delta)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::config("layer_sizes", "need at least input and output sizes"));
    }
    if sizes.contains(&0) {
        return Err(Error::config("layer_sizes", "layer sizes must be positive"));
    }
    Ok(())
}
