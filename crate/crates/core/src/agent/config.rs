use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub bidder: usize,
    pub budget: f64,
    pub valuation_slope: f64,
    pub valuation_intercept: f64,
    /// Cost of a lost bid.
    pub lost_bid_cost: f64,
    /// Reward for backing off.
    pub backoff_cost: f64,
    pub utilization_weight: f64,
    pub backoff_threshold: f64,
    pub max_backoff_ms: u64,
    pub active: bool,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.budget > 0.0) {
            return Err("budget must be > 0".into());
        }
        if !(self.valuation_slope >= 0.0) {
            return Err("valuation_slope must be >= 0".into());
        }
        if !(self.lost_bid_cost >= 0.0) || !(self.utilization_weight >= 0.0) {
            return Err("lost_bid_cost and utilization_weight must be >= 0".into());
        }
        if !(self.backoff_threshold > 0.0 && self.backoff_threshold < 1.0) {
            return Err("backoff_threshold must lie in (0, 1)".into());
        }
        if self.max_backoff_ms == 0 {
            return Err("max_backoff_ms must be > 0".into());
        }
        Ok(())
    }
}

/// Linear in the estimated work, capped by the budget.
pub fn valuation(resource_estimate: f64, cfg: &AgentConfig) -> f64 {
    debug_assert!(resource_estimate > 0.0);
    let v = (cfg.valuation_slope * resource_estimate + cfg.valuation_intercept).min(cfg.budget);
    debug_assert!(v > 0.0, "valuation must be positive");
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningConfig {
    /// Steps in the RL window.
    pub window: usize,
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Decay of the average-reward EMA: `ū ← λ ū + (1 − λ) u`.
    pub avg_reward_decay: f64,
    pub sl_hidden: Vec<usize>,
    pub sl_lr: f64,
    pub sl_batch: usize,
    pub sl_memory: usize,
    /// Decisions between supervised minibatch updates.
    pub sl_train_every: u64,
    pub eta_floor: f64,
    pub eta_floor_after: u64,
    /// Gradient-norm clip applied to actor and critic steps.
    pub grad_clip: f64,
    pub init_backoff_mean: f64,
    pub init_price_mean: f64,
    /// Raw (pre-softplus) bias of the covariance diagonal.
    pub init_diag_raw: f64,
    /// Scale of the initial output-layer weights.
    pub init_out_scale: f64,
    pub utility_scale: f64,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            window: 8,
            hidden: vec![32, 32],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            avg_reward_decay: 0.99,
            sl_hidden: vec![32, 32],
            sl_lr: 1e-3,
            sl_batch: 32,
            sl_memory: 10_000,
            sl_train_every: 1,
            eta_floor: 0.01,
            eta_floor_after: 100,
            grad_clip: 10.0,
            init_backoff_mean: 2.0,
            init_price_mean: 0.5,
            init_diag_raw: -1.0,
            init_out_scale: 0.1,
            utility_scale: 100.0,
        }
    }
}

impl LearningConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.window == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err("window and hidden sizes must be > 0".into());
        }
        if self.sl_hidden.is_empty() || self.sl_hidden.contains(&0) {
            return Err("sl_hidden sizes must be > 0".into());
        }
        if !(0.0..1.0).contains(&self.avg_reward_decay) {
            return Err("avg_reward_decay must lie in [0, 1)".into());
        }
        if self.sl_batch == 0 || self.sl_memory < self.sl_batch || self.sl_train_every == 0 {
            return Err("need 0 < sl_batch <= sl_memory and sl_train_every > 0".into());
        }
        if !(0.0..=1.0).contains(&self.eta_floor) {
            return Err("eta_floor must lie in [0, 1]".into());
        }
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("sl_lr", self.sl_lr),
            ("grad_clip", self.grad_clip),
            ("utility_scale", self.utility_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be finite and > 0"));
            }
        }
        Ok(())
    }
}
