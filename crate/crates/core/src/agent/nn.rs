use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::sim::RngStream;

/// A differentiable function approximator over a flat parameter vector.
pub trait Approximator {
    type Cache;

    fn input_len(&self) -> usize;
    fn output_len(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn forward(&self, x: &[f64]) -> Self::Cache;
    fn output<'a>(&self, cache: &'a Self::Cache) -> &'a [f64];
    /// Accumulates `(∂out/∂params)ᵀ · d_out` into `grad`.
    fn backward(&self, cache: &Self::Cache, d_out: &[f64], grad: &mut [f64]);
}

/// Fully connected network with tanh hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    /// `acts[0]` is the input, `acts[l]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    /// Glorot-uniform hidden layers; the output layer is scaled by
    /// `out_scale` and its biases set to `out_bias`.
    pub fn new(sizes: &[usize], out_scale: f64, out_bias: &[f64], rng: &mut RngStream) -> Self {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
        let mut mlp = Mlp::zeros(sizes);
        let layers = sizes.len() - 1;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt()
                * if l + 1 == layers { out_scale } else { 1.0 };
            let (w, b) = mlp.offsets(l);
            if bound > 0.0 {
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                for p in &mut mlp.params[w..b] {
                    *p = dist.sample(rng);
                }
            }
            if l + 1 == layers {
                for (i, &bias) in out_bias.iter().enumerate().take(fan_out) {
                    mlp.params[b + i] = bias;
                }
            }
        }
        mlp
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
        }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Offsets of layer `l`'s weights (row-major `out × in`) and biases.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let w: usize = self.sizes.windows(2).take(l).map(|w| w[0] * w[1] + w[1]).sum();
        (w, w + self.sizes[l] * self.sizes[l + 1])
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).acts.pop().expect("output layer")
    }
}

impl Approximator for Mlp {
    type Cache = MlpCache;

    fn input_len(&self) -> usize {
        self.sizes[0]
    }

    fn output_len(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> MlpCache {
        assert_eq!(x.len(), self.sizes[0], "input width");
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(x.to_vec());
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.offsets(l);
            let input = &acts[l];
            let mut out = self.params[b..b + n_out].to_vec();
            for (o, acc) in out.iter_mut().enumerate() {
                let row = &self.params[w + o * n_in..w + (o + 1) * n_in];
                *acc += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            }
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        MlpCache { acts }
    }

    fn output<'a>(&self, cache: &'a MlpCache) -> &'a [f64] {
        cache.acts.last().expect("output layer")
    }

    fn backward(&self, cache: &MlpCache, d_out: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut delta = d_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w, b) = self.offsets(l);
            let input = &cache.acts[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grad[b + o] += d;
                for (g, x) in grad[w + o * n_in..w + (o + 1) * n_in].iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, wv) in prev.iter_mut().zip(&self.params[w + o * n_in..w + (o + 1) * n_in]) {
                    *p += d * wv;
                }
            }
            // Hidden activations are tanh outputs.
            for (p, a) in prev.iter_mut().zip(input) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Descends along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let c2 = 1.0 - self.beta2.powi(self.t.min(i32::MAX as u64) as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}
