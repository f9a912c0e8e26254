use super::actor_critic::{
    actor_forward, actor_update, critic_eval, critic_update, td_error, update_avg_reward,
    ActorCritic, LearnError,
};
use super::config::{valuation, AgentConfig, LearningConfig};
use super::fsp::FspSchedule;
use super::gaussian::{sample_action, squash, tri_len};
use super::nn::Mlp;
use super::sl::{SlMemory, SlModel, SlSample};
use super::state::{build_rl_step, build_sl_state, EnvView, FeatureScales, Observation, RequestView, RlWindow};
use crate::auction::TypeIndex;
use crate::sim::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeAction {
    pub service_type: TypeIndex,
    pub backoff: f64,
    pub price: f64,
    pub valuation: f64,
    pub submit: bool,
    /// Deferral when not submitting: `round(backoff · max_backoff_ms)`.
    pub backoff_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub actions: Vec<TypeAction>,
    pub best_response: bool,
}

/// Learning trace of one update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub step: u64,
    pub utility: f64,
    pub delta: f64,
    pub avg_reward: f64,
    pub actor_step_norm: f64,
    pub critic_step_norm: f64,
    pub eta: f64,
}

#[derive(Debug, Clone)]
struct Previous {
    input: Vec<f64>,
    raw: Vec<f64>,
    dims: Vec<usize>,
    best_response: bool,
}

/// One bidder. Passive bidders always submit at their valuation; active
/// bidders mix a supervised model of their own play with an actor-critic
/// best response.
#[derive(Debug, Clone)]
pub struct Bidder {
    pub cfg: AgentConfig,
    pub learning: LearningConfig,
    pub scales: FeatureScales,
    pub model: ActorCritic,
    pub sl: SlModel,
    memory: SlMemory,
    window: RlWindow,
    fsp: FspSchedule,
    step: u64,
    pending_utility: f64,
    last_utility: f64,
    last_utilization: f64,
    previous: Option<Previous>,
    frozen: bool,
    rng: RngStream,
    last_diagnostics: Option<Diagnostics>,
}

impl Bidder {
    pub fn new(cfg: AgentConfig, learning: LearningConfig, scales: FeatureScales, mut rng: RngStream) -> Self {
        let k = scales.types;
        let dim = 2 * k;
        let mut head_bias = Vec::with_capacity(dim + tri_len(dim));
        for _ in 0..k {
            head_bias.extend([learning.init_backoff_mean, learning.init_price_mean]);
        }
        let mut sl_bias = head_bias.clone();
        for i in 0..dim {
            for j in 0..=i {
                head_bias.push(if i == j { learning.init_diag_raw } else { 0.0 });
            }
        }
        let input = learning.window * scales.step_width();
        let sizes = |hidden: &[usize], out: usize, first: usize| {
            let mut s = vec![first];
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let actor = Mlp::new(
            &sizes(&learning.hidden, head_bias.len(), input),
            learning.init_out_scale,
            &head_bias,
            &mut rng,
        );
        let critic = Mlp::new(&sizes(&learning.hidden, 1, input), learning.init_out_scale, &[0.0], &mut rng);
        sl_bias.truncate(dim);
        let sl_mlp = Mlp::new(
            &sizes(&learning.sl_hidden, dim, scales.sl_width()),
            learning.init_out_scale,
            &sl_bias,
            &mut rng,
        );
        Bidder {
            model: ActorCritic {
                actor,
                critic,
                dim,
                avg_reward: 0.0,
            },
            sl: SlModel::new(sl_mlp, learning.sl_lr, learning.sl_batch),
            memory: SlMemory::new(learning.sl_memory),
            window: RlWindow::new(learning.window, scales.step_width()),
            fsp: FspSchedule {
                floor: learning.eta_floor,
                floor_after: learning.eta_floor_after,
            },
            step: 0,
            pending_utility: 0.0,
            last_utility: 0.0,
            last_utilization: 0.0,
            previous: None,
            frozen: false,
            rng,
            last_diagnostics: None,
            cfg,
            learning,
            scales,
        }
    }

    pub fn is_active(&self) -> bool {
        self.cfg.active
    }

    /// Stops all parameter updates; decisions continue with the same mixing.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn eta(&self) -> f64 {
        self.fsp.eta(self.step.max(1))
    }

    pub fn last_diagnostics(&self) -> Option<Diagnostics> {
        self.last_diagnostics
    }

    /// Adds a per-type or backoff utility earned since the last decision.
    pub fn add_utility(&mut self, u: f64) {
        self.pending_utility += u;
    }

    pub fn note_utilization(&mut self, beta: f64) {
        self.last_utilization = beta;
    }

    /// Takes one decision step covering `requests` (at most one per type).
    /// The utility gathered since the previous step, plus the utilization
    /// term, closes that step and drives the learning update.
    pub fn decide(
        &mut self,
        requests: Vec<RequestView>,
        env: EnvView,
        prices_prev: Vec<Option<f64>>,
    ) -> Result<Decision, LearnError> {
        let utility = self.pending_utility + self.cfg.utilization_weight * (1.0 - self.last_utilization);
        self.pending_utility = 0.0;
        if !self.cfg.active {
            self.last_utility = utility;
            let actions = requests
                .iter()
                .map(|r| {
                    let v = valuation(r.estimate, &self.cfg);
                    TypeAction {
                        service_type: r.service_type,
                        backoff: 1.0,
                        price: v,
                        valuation: v,
                        submit: true,
                        backoff_ms: 0,
                    }
                })
                .collect();
            return Ok(Decision {
                actions,
                best_response: false,
            });
        }

        let obs = Observation {
            requests,
            env,
            prices_prev,
            utility_prev: utility,
        };
        self.window.push(build_rl_step(&obs, &self.scales));
        let input = self.window.flatten();
        self.step += 1;

        if let (Some(prev), false) = (self.previous.take(), self.frozen) {
            self.learn(&prev, &input, utility)?;
        }
        self.last_utility = utility;

        let eta = self.fsp.eta(self.step);
        let best_response = self.rng.uniform() < eta;
        let sl_state = build_sl_state(&obs, &self.scales);
        let raw = if best_response {
            let policy = actor_forward(&self.model.actor, &input, self.model.dim);
            sample_action(&policy, &mut self.rng)
        } else {
            self.sl.predict(&sl_state)
        };
        let dims: Vec<usize> = obs
            .requests
            .iter()
            .flat_map(|r| [2 * r.service_type, 2 * r.service_type + 1])
            .collect();

        if !self.frozen {
            self.memory.push(SlSample {
                state: sl_state,
                action: raw.clone(),
                dims: dims.clone(),
            });
            if self.step % self.learning.sl_train_every == 0 && self.memory.len() >= self.sl.batch {
                self.sl.train_step(&self.memory, &mut self.rng)?;
            }
        }

        let actions = obs
            .requests
            .iter()
            .map(|r| {
                let k = r.service_type;
                let s = squash(raw[2 * k], raw[2 * k + 1], self.cfg.budget);
                let submit = s.backoff > self.cfg.backoff_threshold;
                TypeAction {
                    service_type: k,
                    backoff: s.backoff,
                    price: s.price,
                    valuation: valuation(r.estimate, &self.cfg),
                    submit,
                    backoff_ms: if submit {
                        0
                    } else {
                        (s.backoff * self.cfg.max_backoff_ms as f64).round() as u64
                    },
                }
            })
            .collect();
        self.previous = Some(Previous {
            input,
            raw,
            dims,
            best_response,
        });
        Ok(Decision {
            actions,
            best_response,
        })
    }

    fn learn(&mut self, prev: &Previous, next_input: &[f64], utility: f64) -> Result<(), LearnError> {
        let v_now = critic_eval(&self.model.critic, &prev.input);
        let v_next = critic_eval(&self.model.critic, next_input);
        let delta = td_error(utility, self.model.avg_reward, v_next, v_now);
        self.model.avg_reward = update_avg_reward(self.model.avg_reward, utility, self.learning.avg_reward_decay);
        let critic_step = critic_update(
            &mut self.model.critic,
            delta,
            &prev.input,
            self.learning.critic_lr,
            self.learning.grad_clip,
        )?;
        // The actor is updated only on steps that played its own sample.
        let actor_step = if prev.best_response {
            actor_update(
                &mut self.model.actor,
                delta,
                &prev.input,
                self.model.dim,
                &prev.raw,
                &prev.dims,
                self.learning.actor_lr,
                self.learning.grad_clip,
            )?
        } else {
            0.0
        };
        self.last_diagnostics = Some(Diagnostics {
            step: self.step,
            utility,
            delta,
            avg_reward: self.model.avg_reward,
            actor_step_norm: actor_step,
            critic_step_norm: critic_step,
            eta: self.fsp.eta(self.step),
        });
        Ok(())
    }

    /// Replaces learned parameters, e.g. from a model file.
    pub fn load(&mut self, model: ActorCritic, sl: Mlp) {
        assert_eq!(model.dim, self.model.dim, "action width");
        self.model = model;
        self.sl.mlp = sl;
    }
}
