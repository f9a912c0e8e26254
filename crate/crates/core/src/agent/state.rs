//! Fixed-width numeric encoding of what a bidder observes.
//!
//! One step (width `6K + 4` for `K` service types), each feature scaled into
//! a bounded range:
//!
//! | block | per type / scalar | features |
//! |---|---|---|
//! | requests | per type | present, estimate / max_units, remaining / max_deadline, rebids / MP |
//! | env | scalar | present bidders / roster, utilization, phase within the second |
//! | prices | per type | min(p / budget, 2), present |
//! | utility | scalar | clamp(u / utility_scale, −1, 1) |
//!
//! The supervised model sees the request and env blocks only.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::auction::TypeIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScales {
    pub types: usize,
    pub max_units: f64,
    pub max_deadline_ms: f64,
    pub max_rebids: f64,
    pub budget: f64,
    pub utility_scale: f64,
    pub roster: f64,
}

impl FeatureScales {
    pub fn step_width(&self) -> usize {
        6 * self.types + 4
    }

    pub fn sl_width(&self) -> usize {
        4 * self.types + 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RequestView {
    pub service_type: TypeIndex,
    pub estimate: f64,
    pub remaining_ms: f64,
    pub rebid_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvView {
    pub bidders: usize,
    pub utilization: f64,
    /// Position within the current second, in [0, 1).
    pub phase: f64,
}

/// Inputs to one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// At most one request per type.
    pub requests: Vec<RequestView>,
    pub env: EnvView,
    /// Last payment seen per type, `None` when the bidder did not bid on it.
    pub prices_prev: Vec<Option<f64>>,
    pub utility_prev: f64,
}

fn push_requests_env(out: &mut Vec<f64>, obs: &Observation, s: &FeatureScales) {
    let start = out.len();
    out.resize(start + 4 * s.types, 0.0);
    for r in &obs.requests {
        let base = start + 4 * r.service_type;
        out[base] = 1.0;
        out[base + 1] = (r.estimate / s.max_units).clamp(0.0, 2.0);
        out[base + 2] = (r.remaining_ms / s.max_deadline_ms).clamp(0.0, 1.0);
        out[base + 3] = (f64::from(r.rebid_count) / s.max_rebids.max(1.0)).clamp(0.0, 1.0);
    }
    out.push((obs.env.bidders as f64 / s.roster.max(1.0)).clamp(0.0, 1.0));
    out.push(obs.env.utilization.clamp(0.0, 1.0));
    out.push(obs.env.phase.clamp(0.0, 1.0));
}

pub fn build_rl_step(obs: &Observation, s: &FeatureScales) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.step_width());
    push_requests_env(&mut out, obs, s);
    for k in 0..s.types {
        match obs.prices_prev.get(k).copied().flatten() {
            Some(p) => {
                out.push((p / s.budget).clamp(0.0, 2.0));
                out.push(1.0);
            }
            None => out.extend([0.0, 0.0]),
        }
    }
    out.push((obs.utility_prev / s.utility_scale).clamp(-1.0, 1.0));
    debug_assert_eq!(out.len(), s.step_width());
    out
}

pub fn build_sl_state(obs: &Observation, s: &FeatureScales) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.sl_width());
    push_requests_env(&mut out, obs, s);
    out
}

/// The `ν` most recent steps, zero-padded at the start.
#[derive(Debug, Clone, PartialEq)]
pub struct RlWindow {
    steps: VecDeque<Vec<f64>>,
    width: usize,
}

impl RlWindow {
    pub fn new(nu: usize, width: usize) -> Self {
        assert!(nu > 0);
        RlWindow {
            steps: std::iter::repeat_n(vec![0.0; width], nu).collect(),
            width,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = &[f64]> {
        self.steps.iter().map(Vec::as_slice)
    }

    pub fn push(&mut self, step: Vec<f64>) {
        assert_eq!(step.len(), self.width, "step width");
        self.steps.pop_front();
        self.steps.push_back(step);
    }

    /// Oldest step first.
    pub fn flatten(&self) -> Vec<f64> {
        self.steps.iter().flatten().copied().collect()
    }
}
