//! Fully connected feed-forward regressor.
//!
//! Architecture: input -> hidden ReLU layers -> single identity output.
//! Training: mini-batch SGD on the Huber loss with inverted dropout on
//! the hidden activations. Dropout only exists during training; saved
//! weights already carry the 1/(1-p) rescaling, so prediction is a
//! plain forward pass.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub hidden: Vec<usize>,
    /// Probability of zeroing a hidden activation during training.
    pub dropout: f64,
    pub huber_delta: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub seed: u64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            hidden: vec![128, 64, 32],
            dropout: 0.1,
            huber_delta: 1.0,
            epochs: 20,
            batch_size: 64,
            step_size: 0.01,
            seed: 0,
        }
    }
}

/// Huber loss of a single residual.
pub fn huber(residual: f64, delta: f64) -> f64 {
    let a = residual.abs();
    if a <= delta {
        0.5 * residual * residual
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// d huber / d residual: the residual clamped to [-delta, delta].
pub fn huber_grad(residual: f64, delta: f64) -> f64 {
    residual.clamp(-delta, delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Layer widths from input to output, output always 1.
    pub sizes: Vec<usize>,
    /// weights[l][j][i] connects unit i of layer l to unit j of layer l+1.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    /// Rate the network was trained with; inert at prediction time.
    pub dropout: f64,
    pub huber_delta: f64,
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl Network {
    /// All-zero parameters; the forward pass of this network is
    /// identically zero.
    pub fn zeros(sizes: Vec<usize>) -> Network {
        let weights = sizes
            .windows(2)
            .map(|w| vec![vec![0.0; w[0]]; w[1]])
            .collect();
        let biases = sizes.iter().skip(1).map(|&s| vec![0.0; s]).collect();
        Network {
            sizes,
            weights,
            biases,
            dropout: 0.0,
            huber_delta: 1.0,
        }
    }

    /// Xavier-uniform initialization: each weight drawn from
    /// U(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)),
    /// biases zero.
    pub fn xavier(sizes: Vec<usize>, huber_delta: f64, rng: &mut ChaCha8Rng) -> Network {
        let mut net = Network::zeros(sizes);
        net.huber_delta = huber_delta;
        for (l, layer) in net.weights.iter_mut().enumerate() {
            let fan_in = net.sizes[l] as f64;
            let fan_out = net.sizes[l + 1] as f64;
            let limit = (6.0 / (fan_in + fan_out)).sqrt();
            for row in layer.iter_mut() {
                for w in row.iter_mut() {
                    *w = rng.random_range(-limit..limit);
                }
            }
        }
        net
    }

    fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Pre-activations and activations for every layer; activations[0]
    /// is the input. Masks, when given, multiply the hidden activations
    /// (inverted-dropout scaling baked into the mask values).
    fn forward_full(
        &self,
        x: &[f64],
        masks: Option<&[Vec<f64>]>,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.layer_count();
        let mut zs = Vec::with_capacity(layers);
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let input = &acts[l];
            let z: Vec<f64> = self.weights[l]
                .iter()
                .zip(&self.biases[l])
                .map(|(row, b)| row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + b)
                .collect();
            let a = if l + 1 < self.sizes.len() - 1 {
                let mut h: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
                if let Some(m) = masks {
                    for (v, &s) in h.iter_mut().zip(&m[l]) {
                        *v *= s;
                    }
                }
                h
            } else {
                z.clone()
            };
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        let (_, acts) = self.forward_full(features, None);
        acts.last().unwrap()[0]
    }

    /// Mean Huber loss over a dataset, dropout inactive.
    pub fn loss(&self, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let total: f64 = x
            .iter()
            .zip(y)
            .map(|(row, &t)| huber(self.predict(row) - t, self.huber_delta))
            .sum();
        total / x.len() as f64
    }

    /// Mean analytic gradient of the Huber loss over a dataset, dropout
    /// inactive. Matches central finite differences of `loss`.
    pub fn gradients(&self, x: &[Vec<f64>], y: &[f64]) -> Gradients {
        let mut acc = Gradients::zeros_like(self);
        for (row, &t) in x.iter().zip(y) {
            self.backprop_into(row, t, None, &mut acc);
        }
        acc.scale(1.0 / x.len() as f64);
        acc
    }

    /// Accumulates one sample's parameter gradient into `acc` and
    /// returns the (possibly dropout-perturbed) prediction.
    fn backprop_into(
        &self,
        x: &[f64],
        y: f64,
        masks: Option<&[Vec<f64>]>,
        acc: &mut Gradients,
    ) -> f64 {
        let layers = self.layer_count();
        let (zs, acts) = self.forward_full(x, masks);
        let pred = acts[layers][0];

        // delta = dL/dz for the current layer, starting at the output
        let mut delta = vec![huber_grad(pred - y, self.huber_delta)];
        for l in (0..layers).rev() {
            for (j, &d) in delta.iter().enumerate() {
                acc.biases[l][j] += d;
                for (i, &a) in acts[l].iter().enumerate() {
                    acc.weights[l][j][i] += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let mut next = vec![0.0; self.sizes[l]];
            for (j, &d) in delta.iter().enumerate() {
                for (i, slot) in next.iter_mut().enumerate() {
                    *slot += self.weights[l][j][i] * d;
                }
            }
            // through the hidden nonlinearity (and its dropout mask)
            for (i, slot) in next.iter_mut().enumerate() {
                let relu_grad = if zs[l - 1][i] > 0.0 { 1.0 } else { 0.0 };
                let mask = masks.map_or(1.0, |m| m[l - 1][i]);
                *slot *= relu_grad * mask;
            }
            delta = next;
        }
        pred
    }

    fn apply_update(&mut self, grads: &Gradients, step: f64) {
        for (wl, gl) in self.weights.iter_mut().zip(&grads.weights) {
            for (wr, gr) in wl.iter_mut().zip(gl) {
                for (w, g) in wr.iter_mut().zip(gr) {
                    *w -= step * g;
                }
            }
        }
        for (bl, gl) in self.biases.iter_mut().zip(&grads.biases) {
            for (b, g) in bl.iter_mut().zip(gl) {
                *b -= step * g;
            }
        }
    }
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Gradients {
        Gradients {
            weights: net
                .sizes
                .windows(2)
                .map(|w| vec![vec![0.0; w[0]]; w[1]])
                .collect(),
            biases: net.sizes.iter().skip(1).map(|&s| vec![0.0; s]).collect(),
        }
    }

    fn scale(&mut self, factor: f64) {
        for layer in &mut self.weights {
            for row in layer {
                for g in row {
                    *g *= factor;
                }
            }
        }
        for layer in &mut self.biases {
            for g in layer {
                *g *= factor;
            }
        }
    }
}

pub fn fit_network(x: &[Vec<f64>], y: &[f64], params: &NetworkParams) -> Result<Network> {
    crate::predict::tree::validate_dataset(x, y)?;
    if params.hidden.is_empty() || params.hidden.contains(&0) {
        return Err(Error::validation(
            "hidden layer widths must all be positive",
        ));
    }
    if !(0.0..1.0).contains(&params.dropout) {
        return Err(Error::validation(format!(
            "dropout must be in [0, 1), got {}",
            params.dropout
        )));
    }
    if params.epochs == 0 || params.batch_size == 0 {
        return Err(Error::validation(
            "epochs and batch_size must be at least 1",
        ));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(params.step_size) || !positive(params.huber_delta) {
        return Err(Error::validation(
            "step_size and huber_delta must be positive",
        ));
    }

    let d = x[0].len();
    let mut sizes = Vec::with_capacity(params.hidden.len() + 2);
    sizes.push(d);
    sizes.extend(&params.hidden);
    sizes.push(1);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut net = Network::xavier(sizes, params.huber_delta, &mut rng);
    net.dropout = params.dropout;

    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    let keep_scale = 1.0 / (1.0 - params.dropout);

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let mut grads = Gradients::zeros_like(&net);
            let mut batch_loss = 0.0;
            for &i in batch {
                let masks: Option<Vec<Vec<f64>>> = if params.dropout > 0.0 {
                    Some(
                        net.sizes[1..net.sizes.len() - 1]
                            .iter()
                            .map(|&width| {
                                (0..width)
                                    .map(|_| {
                                        if rng.random::<f64>() < params.dropout {
                                            0.0
                                        } else {
                                            keep_scale
                                        }
                                    })
                                    .collect()
                            })
                            .collect(),
                    )
                } else {
                    None
                };
                let pred = net.backprop_into(&x[i], y[i], masks.as_deref(), &mut grads);
                batch_loss += huber(pred - y[i], params.huber_delta);
            }
            batch_loss /= batch.len() as f64;
            if !batch_loss.is_finite() {
                return Err(Error::runtime(format!(
                    "training diverged: non-finite loss in epoch {epoch}"
                )));
            }
            grads.scale(1.0 / batch.len() as f64);
            net.apply_update(&grads, params.step_size);
        }
    }
    Ok(net)
}
