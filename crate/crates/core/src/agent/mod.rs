//! The bidder: valuation and utility, state encoding, an average-reward
//! actor-critic over a correlated Gaussian action, a supervised model of the
//! bidder's own past play, and the fictitious-self-play mix of the two.

mod actor_critic;
mod bidder;
mod config;
mod fsp;
mod gaussian;
mod linalg;
mod nn;
mod sl;
mod state;
mod utility;

pub use actor_critic::{
    actor_forward, actor_update, critic_eval, critic_grad, critic_update, log_policy_grad, td_error,
    update_avg_reward, ActorCritic, LearnError,
};
pub use bidder::{Bidder, Decision, Diagnostics, TypeAction};
pub use config::{valuation, AgentConfig, LearningConfig};
pub use fsp::FspSchedule;
pub use gaussian::{
    log_density, log_density_grad_raw, policy_from_raw, sample_action, sigmoid, softplus,
    squash, GaussianPolicy, Squashed,
};
pub use linalg::cholesky;
pub use nn::{Adam, Approximator, Mlp, MlpCache};
pub use sl::{sl_train, SlMemory, SlModel, SlSample};
pub use state::{
    build_rl_step, build_sl_state, EnvView, FeatureScales, Observation, RequestView, RlWindow,
};
pub use utility::{utility_per_type, utility_total};
