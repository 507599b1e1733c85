//! Fully connected ReLU network with a flat parameter buffer.
//!
//! Layer `i` stores its weights input-major (`W[k][j]` at `k·fan_out + j`)
//! followed by its bias, so the forward pass is a sequence of axpy updates
//! and the result for one input never depends on what else is evaluated in
//! the same batch.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Layer {
    weights: usize,
    bias: usize,
    fan_in: usize,
    fan_out: usize,
}

/// Hidden layers use ReLU; the output layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

impl Mlp {
    /// Zero-initialized network with the given layer widths (input first).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::param(format!("invalid layer sizes {sizes:?}")));
        }
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            layers.push(Layer {
                weights: offset,
                bias: offset + fan_in * fan_out,
                fan_in,
                fan_out,
            });
            offset += fan_in * fan_out + fan_out;
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            layers,
            params: vec![0.0; offset],
        })
    }

    /// He-uniform weights, zero biases.
    pub fn random(sizes: &[usize], rng: &mut impl Rng) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in net.layers.clone() {
            let bound = (6.0 / layer.fan_in as f64).sqrt();
            for w in &mut net.params[layer.weights..layer.bias] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        if params.len() != net.params.len() {
            return Err(Error::structure(format!(
                "network {sizes:?} has {} parameters, got {}",
                net.params.len(),
                params.len()
            )));
        }
        net.params = params;
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Zeroes the output layer so the network starts as the constant 0.
    pub fn zero_output_layer(&mut self) {
        let last = *self.layers.last().unwrap();
        let end = last.bias + last.fan_out;
        self.params[last.weights..end].fill(0.0);
    }

    /// Length of the activation buffer used by [`Mlp::forward`].
    pub fn activation_len(&self) -> usize {
        self.sizes[1..].iter().sum()
    }

    /// Weight matrix of layer `i` as `(fan_in, fan_out, row-major slice)`.
    pub fn layer_weights(&self, i: usize) -> (usize, usize, &[f64]) {
        let l = self.layers[i];
        (l.fan_in, l.fan_out, &self.params[l.weights..l.bias])
    }

    pub fn layer_bias(&self, i: usize) -> &[f64] {
        let l = self.layers[i];
        &self.params[l.bias..l.bias + l.fan_out]
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Evaluates the network, writing every layer's output (post-ReLU for
    /// hidden layers, raw for the last) into `acts`. Returns the output.
    pub fn forward<'a>(&self, input: &[f64], acts: &'a mut [f64]) -> &'a [f64] {
        debug_assert_eq!(input.len(), self.sizes[0]);
        debug_assert_eq!(acts.len(), self.activation_len());
        let mut start = 0;
        let n = self.layers.len();
        for (li, layer) in self.layers.iter().enumerate() {
            let (prev, rest) = acts.split_at_mut(start);
            let x: &[f64] = if li == 0 { input } else { &prev[start - layer.fan_in..] };
            let out = &mut rest[..layer.fan_out];
            out.copy_from_slice(&self.params[layer.bias..layer.bias + layer.fan_out]);
            let w = &self.params[layer.weights..layer.bias];
            for (k, xk) in x.iter().enumerate() {
                if *xk == 0.0 {
                    continue;
                }
                let row = &w[k * layer.fan_out..(k + 1) * layer.fan_out];
                for (o, wv) in out.iter_mut().zip(row) {
                    *o += xk * wv;
                }
            }
            if li + 1 < n {
                for o in out.iter_mut() {
                    if *o < 0.0 {
                        *o = 0.0;
                    }
                }
            }
            start += layer.fan_out;
        }
        &acts[start - self.output_dim()..]
    }

    /// Back-propagates `d_out` through the activations recorded by
    /// [`Mlp::forward`]. Parameter gradients are accumulated into `grad`
    /// when given, the input gradient written to `d_input` when given.
    pub fn backward(
        &self,
        input: &[f64],
        acts: &[f64],
        d_out: &[f64],
        mut grad: Option<&mut [f64]>,
        d_input: Option<&mut [f64]>,
        scratch: &mut Vec<f64>,
    ) {
        let widest = *self.sizes.iter().max().unwrap();
        scratch.clear();
        scratch.resize(2 * widest, 0.0);
        let (delta_buf, next_buf) = scratch.split_at_mut(widest);
        let out_dim = self.output_dim();
        delta_buf[..out_dim].copy_from_slice(d_out);

        let mut end = acts.len();
        let mut d_input = d_input;
        for li in (0..self.layers.len()).rev() {
            let layer = self.layers[li];
            let act_start = end - layer.fan_out;
            let x: &[f64] = if li == 0 {
                input
            } else {
                &acts[act_start - layer.fan_in..act_start]
            };
            let delta = &delta_buf[..layer.fan_out];
            let w = &self.params[layer.weights..layer.bias];

            if let Some(g) = grad.as_deref_mut() {
                let (gw, gb) = g[layer.weights..layer.bias + layer.fan_out].split_at_mut(layer.fan_in * layer.fan_out);
                for (b, d) in gb.iter_mut().zip(delta) {
                    *b += d;
                }
                for (k, xk) in x.iter().enumerate() {
                    if *xk == 0.0 {
                        continue;
                    }
                    let row = &mut gw[k * layer.fan_out..(k + 1) * layer.fan_out];
                    for (gv, d) in row.iter_mut().zip(delta) {
                        *gv += xk * d;
                    }
                }
            }

            let want_input = li > 0 || d_input.is_some();
            if want_input {
                let next = &mut next_buf[..layer.fan_in];
                for (k, n) in next.iter_mut().enumerate() {
                    let row = &w[k * layer.fan_out..(k + 1) * layer.fan_out];
                    *n = row.iter().zip(delta).map(|(a, b)| a * b).sum();
                }
                if li > 0 {
                    // ReLU derivative from the recorded post-activation.
                    for (n, a) in next.iter_mut().zip(x) {
                        if *a <= 0.0 {
                            *n = 0.0;
                        }
                    }
                    delta_buf[..layer.fan_in].copy_from_slice(next);
                } else if let Some(dx) = d_input.as_deref_mut() {
                    dx.copy_from_slice(next);
                }
            }
            end = act_start;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 8, 2]).unwrap();
        let mut acts = vec![0.0; net.activation_len()];
        assert_eq!(net.forward(&[1.0, 2.0, 3.0], &mut acts), &[0.0, 0.0]);
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::random(&[4, 16, 16, 3], &mut rng).unwrap();
        let x = [0.3, -0.7, 0.25, 0.9];
        let w = [0.5, -1.0, 2.0];
        let f = |x: &[f64]| {
            let mut acts = vec![0.0; net.activation_len()];
            let y = net.forward(x, &mut acts);
            y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut acts = vec![0.0; net.activation_len()];
        net.forward(&x, &mut acts);
        let mut dx = [0.0; 4];
        let mut scratch = Vec::new();
        net.backward(&x, &acts, &w, None, Some(&mut dx), &mut scratch);
        for i in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += 1e-6;
            xm[i] -= 1e-6;
            let fd = (f(&xp) - f(&xm)) / 2e-6;
            assert!((fd - dx[i]).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn rejects_mismatched_parameter_count() {
        assert!(matches!(
            Mlp::from_params(&[2, 2], vec![0.0; 5]),
            Err(Error::Structure(_))
        ));
    }
}
