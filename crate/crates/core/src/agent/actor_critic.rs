use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::gaussian::{log_density_grad_raw, policy_from_raw, GaussianPolicy};
use super::nn::{Approximator, Mlp};

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("need at least {need} samples, have {have}")]
    InsufficientData { have: usize, need: usize },
    #[error("non-finite {0} gradient")]
    NumericalInstability(&'static str),
}

/// Actor and critic over the flattened window plus the average-reward
/// estimate. The actor's output is `[μ, L entries]` for a `dim`-dimensional
/// action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub dim: usize,
    pub avg_reward: f64,
}

pub fn actor_forward(actor: &Mlp, window: &[f64], dim: usize) -> GaussianPolicy {
    policy_from_raw(&actor.predict(window), dim)
}

pub fn critic_eval(critic: &Mlp, window: &[f64]) -> f64 {
    critic.predict(window)[0]
}

/// Value and `∂V̂/∂w`.
pub fn critic_grad(critic: &Mlp, window: &[f64]) -> (f64, Vec<f64>) {
    let cache = critic.forward(window);
    let v = critic.output(&cache)[0];
    let mut grad = vec![0.0; critic.params().len()];
    critic.backward(&cache, &[1.0], &mut grad);
    (v, grad)
}

pub fn td_error(u: f64, avg_reward: f64, v_next: f64, v_now: f64) -> f64 {
    u - avg_reward + v_next - v_now
}

/// `ū ← λ ū + (1 − λ) u`.
pub fn update_avg_reward(avg_reward: f64, u: f64, decay: f64) -> f64 {
    decay * avg_reward + (1.0 - decay) * u
}

/// `ln π(x | window)` over the components `dims` and its gradient in the
/// actor's parameters.
pub fn log_policy_grad(actor: &Mlp, window: &[f64], dim: usize, x: &[f64], dims: &[usize]) -> (f64, Vec<f64>) {
    let cache = actor.forward(window);
    let (logp, d_raw) = log_density_grad_raw(actor.output(&cache), dim, x, dims);
    let mut grad = vec![0.0; actor.params().len()];
    actor.backward(&cache, &d_raw, &mut grad);
    (logp, grad)
}

fn ascend(params: &mut [f64], grad: &[f64], step: f64, clip: f64, what: &'static str) -> Result<f64, LearnError> {
    let norm = grad.iter().map(|g| (g * step) * (g * step)).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(LearnError::NumericalInstability(what));
    }
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (p, g) in params.iter_mut().zip(grad) {
        *p += step * scale * g;
    }
    Ok(norm)
}

/// `θ ← θ + γ δ ∇ln π(x)`, with the step's norm clipped to `clip`.
/// Returns the unclipped step norm.
#[allow(clippy::too_many_arguments)]
pub fn actor_update(
    actor: &mut Mlp,
    delta: f64,
    window: &[f64],
    dim: usize,
    x: &[f64],
    dims: &[usize],
    lr: f64,
    clip: f64,
) -> Result<f64, LearnError> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    if !actor.predict(window).iter().chain(x).all(|v| v.is_finite()) {
        return Err(LearnError::NumericalInstability("actor output"));
    }
    let (_, grad) = log_policy_grad(actor, window, dim, x, dims);
    ascend(actor.params_mut(), &grad, lr * delta, clip, "actor")
}

/// `w ← w + γ δ ∇V̂`, clipped like the actor step.
pub fn critic_update(critic: &mut Mlp, delta: f64, window: &[f64], lr: f64, clip: f64) -> Result<f64, LearnError> {
    let (_, grad) = critic_grad(critic, window);
    ascend(critic.params_mut(), &grad, lr * delta, clip, "critic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive_stream;

    #[test]
    fn td_examples() {
        assert_eq!(td_error(1.0, 1.0, 2.0, 2.0), 0.0);
        assert_eq!(td_error(1.0, 0.0, 2.0, 2.0), 1.0);
    }

    #[test]
    fn avg_reward_converges_geometrically() {
        let mut avg = 0.0;
        for n in 1..=500 {
            avg = update_avg_reward(avg, 3.0, 0.99);
            assert!(((avg - 3.0).abs() - 3.0 * 0.99f64.powi(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_critic_is_zero() {
        let c = Mlp::zeros(&[6, 4, 4, 1]);
        assert_eq!(critic_eval(&c, &[1.0; 6]), 0.0);
    }

    #[test]
    fn zero_delta_leaves_actor_unchanged() {
        let mut rng = derive_stream(1, "agent/0");
        let mut actor = Mlp::new(&[4, 6, 6, 2 + 3], 0.5, &[], &mut rng);
        let before = actor.clone();
        actor_update(&mut actor, 0.0, &[0.1, 0.2, 0.3, 0.4], 2, &[0.0, 1.0], &[0, 1], 0.1, 10.0).unwrap();
        assert_eq!(actor, before);
    }
}
