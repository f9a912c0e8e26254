use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::nn::{Adam, Approximator, Mlp};
use super::LearnError;
use crate::sim::RngStream;

/// One observed decision: the supervised state, the raw action played, and
/// which action components were in use.
#[derive(Debug, Clone, PartialEq)]
pub struct SlSample {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub dims: Vec<usize>,
}

/// Sliding window of the most recent samples.
#[derive(Debug, Clone)]
pub struct SlMemory {
    cap: usize,
    samples: VecDeque<SlSample>,
}

impl SlMemory {
    pub fn new(cap: usize) -> Self {
        assert!(cap > 0);
        SlMemory {
            cap,
            samples: VecDeque::with_capacity(cap.min(1 << 16)),
        }
    }

    pub fn push(&mut self, s: SlSample) {
        if self.samples.len() == self.cap {
            self.samples.pop_front();
        }
        self.samples.push_back(s);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn get(&self, i: usize) -> &SlSample {
        &self.samples[i]
    }
}

/// Regression from supervised state to raw action, trained with Adam on
/// squared error over the components in use.
#[derive(Debug, Clone)]
pub struct SlModel {
    pub mlp: Mlp,
    adam: Adam,
    pub batch: usize,
}

impl SlModel {
    pub fn new(mlp: Mlp, lr: f64, batch: usize) -> Self {
        let n = mlp.params().len();
        SlModel {
            mlp,
            adam: Adam::new(n, lr),
            batch,
        }
    }

    pub fn predict(&self, state: &[f64]) -> Vec<f64> {
        self.mlp.predict(state)
    }

    fn accumulate(&self, s: &SlSample, grad: &mut [f64]) -> f64 {
        let cache = self.mlp.forward(&s.state);
        let out = self.mlp.output(&cache);
        let mut d_out = vec![0.0; out.len()];
        let mut loss = 0.0;
        for &i in &s.dims {
            let e = out[i] - s.action[i];
            loss += 0.5 * e * e;
            d_out[i] = e;
        }
        self.mlp.backward(&cache, &d_out, grad);
        loss
    }

    fn apply(&mut self, indices: &[usize], memory: &SlMemory) -> f64 {
        let mut grad = vec![0.0; self.mlp.params().len()];
        let mut loss = 0.0;
        for &i in indices {
            loss += self.accumulate(memory.get(i), &mut grad);
        }
        let scale = 1.0 / indices.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        self.adam.step(self.mlp.params_mut(), &grad);
        loss * scale
    }

    /// One minibatch drawn uniformly with replacement.
    pub fn train_step(&mut self, memory: &SlMemory, rng: &mut RngStream) -> Result<f64, LearnError> {
        if memory.len() < self.batch {
            return Err(LearnError::InsufficientData {
                have: memory.len(),
                need: self.batch,
            });
        }
        let idx: Vec<usize> = (0..self.batch).map(|_| rng.random_range(0..memory.len())).collect();
        Ok(self.apply(&idx, memory))
    }

    /// Mean per-sample loss over the whole memory.
    pub fn loss(&self, memory: &SlMemory) -> f64 {
        let mut scratch = vec![0.0; self.mlp.params().len()];
        let total: f64 = (0..memory.len())
            .map(|i| self.accumulate(memory.get(i), &mut scratch))
            .sum();
        total / memory.len().max(1) as f64
    }
}

/// Shuffled minibatch epochs over the memory; returns the full-memory loss
/// after each epoch.
pub fn sl_train(
    model: &mut SlModel,
    memory: &SlMemory,
    epochs: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>, LearnError> {
    if memory.len() < model.batch || memory.is_empty() {
        return Err(LearnError::InsufficientData {
            have: memory.len(),
            need: model.batch,
        });
    }
    let mut order: Vec<usize> = (0..memory.len()).collect();
    let mut history = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in order.chunks(model.batch) {
            model.apply(chunk, memory);
        }
        history.push(model.loss(memory));
    }
    Ok(history)
}
