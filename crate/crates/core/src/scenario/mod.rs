//! Scenario configuration, the simulated world that ties bidders, the
//! operator and the sites together, run orchestration and metrics.

mod config;
mod metrics;
mod model;
mod runner;
mod world;

pub use config::{
    realistic_catalog, AgentDefaults, ArrivalConfig, CatalogConfig, ConfigError, FleetConfig, Mode, OperatorConfig,
    ScenarioConfig,
};
pub use metrics::{
    backoff_price_analysis, compute_individual_ofr_cdf, compute_ofr, compute_rebidding_stats, compute_utilization,
    summarize, BackoffGroup, CdfPoint, Distribution, RebidStats, RunSummary, SiteUtilization, SummaryDelta,
    VehicleStats,
};
pub use model::{AgentModel, ModelError, ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use runner::{
    evaluate, load_models, prepare, run_compare, run_scenario, train, CompareReport, Prepared, RunError, RunOptions,
    RunOutcome,
};
pub use world::{DiagnosticsRow, Ev, FinalStatus, Seeds, World};
