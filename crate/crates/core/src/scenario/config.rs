use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::LearningConfig;
use crate::operator::SiteConfig;
use crate::workload::{synthetic_catalog, Catalog, JunctionParams, MmppParams, ServiceTypeSpec, TaskSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation { field: field.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Evaluate,
    #[default]
    Compare,
}

/// Full experiment description. Every section has defaults; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration_ms: u64,
    pub mode: Mode,
    /// Maximum rebids per request.
    pub max_rebids: u32,
    /// Train mode stops once the fleet has taken this many decisions
    /// (0 = run for `duration_ms`).
    pub train_steps: u64,
    /// Requests created before this time are left out of the metrics.
    pub warmup_ms: u64,
    /// Model file loaded by evaluate and compare modes.
    pub model: Option<PathBuf>,
    pub fleet: FleetConfig,
    pub catalog: CatalogConfig,
    pub arrivals: ArrivalConfig,
    pub sites: Vec<SiteConfig>,
    pub operator: OperatorConfig,
    pub agents: AgentDefaults,
    pub learning: LearningConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            duration_ms: 60_000,
            mode: Mode::Compare,
            max_rebids: 1,
            train_steps: 0,
            warmup_ms: 0,
            model: None,
            fleet: FleetConfig::default(),
            catalog: CatalogConfig::default(),
            arrivals: ArrivalConfig::default(),
            sites: vec![
                SiteConfig { site_id: "edge".into(), capacity: 25.0, report_delay_ms: 0, profile: BTreeMap::new() },
                SiteConfig { site_id: "remote".into(), capacity: 25.0, report_delay_ms: 50, profile: BTreeMap::new() },
            ],
            operator: OperatorConfig::default(),
            agents: AgentDefaults::default(),
            learning: LearningConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetConfig {
    /// Constant fleet, always in coverage, zero transmission latency.
    pub vehicles: usize,
    /// Mobility CSV; when set, vehicles come and go and transmissions take
    /// time according to their distance.
    pub mobility_trace: Option<PathBuf>,
    /// Generate a junction trace instead of reading one.
    pub junction: Option<JunctionParams>,
}

impl Default for FleetConfig {
    fn default() -> Self {
        FleetConfig { vehicles: 10, mobility_trace: None, junction: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogConfig {
    /// `synthetic` or `realistic`; ignored when `types` is given.
    pub preset: String,
    pub types: Vec<ServiceTypeSpec>,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig { preset: "synthetic".into(), types: Vec::new() }
    }
}

impl CatalogConfig {
    pub fn build(&self) -> Result<Catalog, ConfigError> {
        if !self.types.is_empty() {
            return Catalog::new(self.types.clone()).map_err(|e| invalid("catalog.types", e.to_string()));
        }
        match self.preset.as_str() {
            "synthetic" => Ok(synthetic_catalog()),
            "realistic" => Ok(realistic_catalog()),
            other => Err(invalid("catalog.preset", format!("unknown preset `{other}`"))),
        }
    }
}

/// Two periodic service types of 80 units each with uplink and downlink
/// payloads, for the junction setup.
pub fn realistic_catalog() -> Catalog {
    let types = vec![
        ServiceTypeSpec {
            type_id: "F1-100".into(),
            task_chain: vec![TaskSpec { task_id: "F1".into(), resource_units: 80.0 }],
            deadline_ms: 100,
            probability: 0.5,
            uplink_bits: 0.4e6,
            downlink_bits: 0.0,
            period_ms: Some(100),
        },
        ServiceTypeSpec {
            type_id: "F2-500".into(),
            task_chain: vec![TaskSpec { task_id: "F2".into(), resource_units: 80.0 }],
            deadline_ms: 500,
            probability: 0.5,
            uplink_bits: 4e6,
            downlink_bits: 0.4e6,
            period_ms: Some(500),
        },
    ];
    Catalog::new(types).expect("realistic catalog is valid")
}

/// Per-vehicle MMPP arrivals; rate ranges are in requests per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrivalConfig {
    pub lambda_high_per_s: (f64, f64),
    pub lambda_low_per_s: (f64, f64),
    pub p_high: f64,
    pub p_low: f64,
    pub epoch_ms: u64,
    /// Multiplies both rate ranges.
    pub scale: f64,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        let m = MmppParams::default();
        ArrivalConfig {
            lambda_high_per_s: m.lambda_high_per_s,
            lambda_low_per_s: m.lambda_low_per_s,
            p_high: m.p_high,
            p_low: m.p_low,
            epoch_ms: m.epoch_ms,
            scale: 1.0,
        }
    }
}

impl ArrivalConfig {
    pub fn scaled(&self) -> MmppParams {
        let s = self.scale;
        MmppParams {
            lambda_high_per_s: (self.lambda_high_per_s.0 * s, self.lambda_high_per_s.1 * s),
            lambda_low_per_s: (self.lambda_low_per_s.0 * s, self.lambda_low_per_s.1 * s),
            p_high: self.p_high,
            p_low: self.p_low,
            epoch_ms: self.epoch_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    pub auction_interval_ms: u64,
    /// How often each site measures its utilization.
    pub report_interval_ms: u64,
    pub delay_sigma_ms: f64,
    pub util_sigma: f64,
    /// Relative noise on the work a request actually needs.
    pub work_sigma: f64,
    pub price_exponent: f64,
    /// EMA rate for learned per-type work estimates.
    pub estimate_rate: f64,
    /// Window over which believed free capacity is counted as free work.
    pub admission_horizon_ms: f64,
    /// Most resource units one request can use at a time.
    pub unit_cap: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            auction_interval_ms: 10,
            report_interval_ms: 10,
            delay_sigma_ms: 5.0,
            util_sigma: 0.02,
            work_sigma: 0.05,
            price_exponent: 2.0,
            estimate_rate: 0.1,
            admission_horizon_ms: 10.0,
            unit_cap: 1.0,
        }
    }
}

/// Template for every bidder; budgets are drawn per vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentDefaults {
    pub active: bool,
    pub budget_high: f64,
    pub budget_low: f64,
    /// Probability that a vehicle gets the high budget.
    pub high_fraction: f64,
    pub valuation_slope: f64,
    pub valuation_intercept: f64,
    pub lost_bid_cost: f64,
    pub backoff_cost: f64,
    pub utilization_weight: f64,
    pub backoff_threshold: f64,
    pub max_backoff_ms: u64,
    /// Charged when a request finally fails (dropped, expired or rejected
    /// for good).
    pub failure_cost: f64,
}

impl Default for AgentDefaults {
    fn default() -> Self {
        AgentDefaults {
            active: true,
            budget_high: 100.0,
            budget_low: 30.0,
            high_fraction: 0.5,
            valuation_slope: 1.0,
            valuation_intercept: 0.0,
            lost_bid_cost: 1.0,
            backoff_cost: 0.1,
            utilization_weight: 1.0,
            backoff_threshold: 0.5,
            max_backoff_ms: 100,
            failure_cost: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads, resolves relative paths against the file's directory and
    /// validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.fleet.mobility_trace, &mut cfg.model].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.duration_ms == 0 {
            return Err(invalid("duration_ms", "must be > 0"));
        }
        if self.max_rebids == 0 {
            return Err(invalid("max_rebids", "must be >= 1"));
        }
        if self.fleet.mobility_trace.is_none() && self.fleet.junction.is_none() && self.fleet.vehicles == 0 {
            return Err(invalid("fleet.vehicles", "must be > 0"));
        }
        if let Some(p) = &self.fleet.mobility_trace {
            if !p.exists() {
                return Err(invalid("fleet.mobility_trace", format!("{} does not exist", p.display())));
            }
        }
        if let Some(p) = &self.model {
            if self.mode != Mode::Train && !p.exists() {
                return Err(invalid("model", format!("{} does not exist", p.display())));
            }
        }
        let catalog = self.catalog.build()?;
        let periodic = catalog.types().iter().filter(|t| t.period_ms.is_some()).count();
        if periodic != 0 && periodic != catalog.len() {
            return Err(invalid("catalog.types", "period_ms must be set on all types or on none"));
        }
        self.arrivals.scaled().validate().map_err(|m| invalid("arrivals", m))?;
        if !(self.arrivals.scale > 0.0) {
            return Err(invalid("arrivals.scale", "must be > 0"));
        }
        if self.sites.is_empty() {
            return Err(invalid("sites", "at least one site is required"));
        }
        for (i, s) in self.sites.iter().enumerate() {
            if !(s.capacity > 0.0) {
                return Err(invalid(&format!("sites[{i}].capacity"), "must be > 0"));
            }
            if self.sites[..i].iter().any(|o| o.site_id == s.site_id) {
                return Err(invalid(&format!("sites[{i}].site_id"), "duplicate id"));
            }
        }
        let op = &self.operator;
        if op.auction_interval_ms == 0 || op.report_interval_ms == 0 {
            return Err(invalid("operator", "intervals must be > 0"));
        }
        for (name, v) in [("operator.unit_cap", op.unit_cap), ("operator.admission_horizon_ms", op.admission_horizon_ms)] {
            if !(v > 0.0) {
                return Err(invalid(name, "must be > 0"));
            }
        }
        for (name, v) in [
            ("operator.delay_sigma_ms", op.delay_sigma_ms),
            ("operator.util_sigma", op.util_sigma),
            ("operator.work_sigma", op.work_sigma),
            ("operator.price_exponent", op.price_exponent),
        ] {
            if !(v >= 0.0) {
                return Err(invalid(name, "must be >= 0"));
            }
        }
        if !(op.estimate_rate > 0.0 && op.estimate_rate <= 1.0) {
            return Err(invalid("operator.estimate_rate", "must lie in (0, 1]"));
        }
        let a = &self.agents;
        if !(a.budget_low > 0.0 && a.budget_high >= a.budget_low) {
            return Err(invalid("agents.budget_low", "need 0 < budget_low <= budget_high"));
        }
        if !(0.0..=1.0).contains(&a.high_fraction) {
            return Err(invalid("agents.high_fraction", "must lie in [0, 1]"));
        }
        if !(a.failure_cost >= 0.0) {
            return Err(invalid("agents.failure_cost", "must be >= 0"));
        }
        self.learning.validate().map_err(|m| invalid("learning", m))?;
        Ok(())
    }
}
