//! Model file: JSON holding every active bidder's learned parameters.
//!
//! ```text
//! { "format": "offload-model", "version": 1,
//!   "service_types": ["F1-300", ...],
//!   "agents": [ { "bidder": 0, "budget": 100.0,
//!                 "actor_critic": { "actor": {...}, "critic": {...}, "dim": 16, "avg_reward": 0.4 },
//!                 "sl": {...} }, ... ] }
//! ```
//!
//! Networks are stored as layer sizes plus flat weight and bias arrays.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{ActorCritic, Bidder, Mlp};

pub const MODEL_FORMAT: &str = "offload-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentModel {
    pub bidder: usize,
    pub budget: f64,
    pub actor_critic: ActorCritic,
    pub sl: Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub service_types: Vec<String>,
    pub agents: Vec<AgentModel>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model file i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file is not valid: {0}")]
    Format(String),
}

impl ModelFile {
    pub fn from_bidders(service_types: Vec<String>, bidders: &[Bidder]) -> Self {
        let agents = bidders
            .iter()
            .filter(|b| b.is_active())
            .map(|b| AgentModel {
                bidder: b.cfg.bidder,
                budget: b.cfg.budget,
                actor_critic: b.model.clone(),
                sl: b.sl.mlp.clone(),
            })
            .collect();
        ModelFile { format: MODEL_FORMAT.into(), version: MODEL_VERSION, service_types, agents }
    }

    /// Agent models indexed by bidder; gaps for passive bidders are filled
    /// with `None`.
    pub fn by_bidder(&self) -> Vec<Option<AgentModel>> {
        let n = self.agents.iter().map(|a| a.bidder + 1).max().unwrap_or(0);
        let mut out = vec![None; n];
        for a in &self.agents {
            out[a.bidder] = Some(a.clone());
        }
        out
    }

    pub fn check(&self, service_types: &[String]) -> Result<(), ModelError> {
        if self.format != MODEL_FORMAT || self.version != MODEL_VERSION {
            return Err(ModelError::Format(format!("unsupported {} v{}", self.format, self.version)));
        }
        if self.service_types != service_types {
            return Err(ModelError::Format("service types differ from the scenario catalog".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let text = serde_json::to_string(self).map_err(|e| ModelError::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| ModelError::Format(e.to_string()))
    }
}
