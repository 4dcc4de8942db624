//! Fully-connected networks with hand-written backpropagation, plus the
//! adaptive-moment optimizer.
//!
//! Parameters live in one flat vector (per layer: row-major weights, then
//! biases) so optimizers, checkpoints and the gradient check all see the
//! same layout. Hidden layers use tanh; the output layer is linear.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Four-lane unrolled dot product. The accumulation order is fixed, so
/// results stay bit-identical across runs while the lanes vectorize.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() & !3;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Post-activation values of every layer plus backprop scratch space.
/// Reusable across passes to keep the hot path allocation-free.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("cache holds at least the input")
    }
}

impl Mlp {
    /// Xavier-uniform initialization over the given sizes, e.g.
    /// `[16, 64, 64, 8]` for two hidden layers.
    pub fn new(layer_sizes: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(layer_sizes.len() >= 2, "network needs input and output sizes");
        let mut params = Vec::new();
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.random_range(-scale..scale));
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self { layer_sizes: layer_sizes.to_vec(), params }
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

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Offset of layer `l`'s weights in the flat parameter vector.
    fn layer_offset(&self, l: usize) -> usize {
        let mut off = 0;
        for w in self.layer_sizes.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        off
    }

    /// Preallocated cache matching this network's layer widths.
    pub fn make_cache(&self) -> ForwardCache {
        let widest = *self.layer_sizes.iter().max().unwrap();
        ForwardCache {
            activations: self.layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            delta: vec![0.0; widest],
            next_delta: vec![0.0; widest],
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.input_dim());
        let layers = self.layer_count();
        let widest = *self.layer_sizes.iter().max().unwrap();
        let mut current = Vec::with_capacity(widest);
        let mut next = vec![0.0; widest];
        current.extend_from_slice(input);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let z = biases[o] + dot(row, &current);
                next[o] = if l + 1 < layers { z.tanh() } else { z };
            }
            current.clear();
            current.extend_from_slice(&next[..n_out]);
        }
        current
    }

    pub fn forward_cached(&self, input: &[f64]) -> ForwardCache {
        let mut cache = self.make_cache();
        self.forward_into(input, &mut cache);
        cache
    }

    /// Forward pass writing activations into a reusable cache.
    pub fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) {
        debug_assert_eq!(input.len(), self.input_dim());
        let layers = self.layer_count();
        cache.activations[0].copy_from_slice(input);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let (before, after) = cache.activations.split_at_mut(l + 1);
            let prev = &before[l];
            let next = &mut after[0];
            for o in 0..n_out {
                let row = &weights[o * n_in..(o + 1) * n_in];
                let z = biases[o] + dot(row, prev);
                next[o] = if l + 1 < layers { z.tanh() } else { z };
            }
        }
    }

    /// Accumulate dLoss/dParams into `grads` given dLoss/dOutput, walking
    /// the cached forward pass backwards. Only the cache's scratch buffers
    /// are mutated.
    pub fn backward(&self, cache: &mut ForwardCache, output_grad: &[f64], grads: &mut [f64]) {
        debug_assert_eq!(grads.len(), self.params.len());
        debug_assert_eq!(output_grad.len(), self.output_dim());
        let layers = self.layer_count();
        cache.delta[..output_grad.len()].copy_from_slice(output_grad);
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let offset = self.layer_offset(l);
            // Hidden layers carry tanh: dz = da * (1 - a^2).
            if l + 1 < layers {
                for (d, a) in cache.delta[..n_out].iter_mut().zip(&cache.activations[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let prev = &cache.activations[l];
            let weights = &self.params[offset..offset + n_in * n_out];
            let (w_grads, b_grads) =
                grads[offset..offset + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            cache.next_delta[..n_in].fill(0.0);
            for o in 0..n_out {
                let d = cache.delta[o];
                b_grads[o] += d;
                let row = &weights[o * n_in..(o + 1) * n_in];
                let grow = &mut w_grads[o * n_in..(o + 1) * n_in];
                for ((g, nd), (p, w)) in grow
                    .iter_mut()
                    .zip(cache.next_delta[..n_in].iter_mut())
                    .zip(prev.iter().zip(row))
                {
                    *g += d * p;
                    *nd += d * w;
                }
            }
            std::mem::swap(&mut cache.delta, &mut cache.next_delta);
        }
    }
}

/// Adam with the standard moment coefficients. A zero learning rate leaves
/// parameters bit-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Adam {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bias1 = 1.0 - self.beta1.powi(self.t as i32);
        let bias2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}
