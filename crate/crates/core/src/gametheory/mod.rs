//! Static-game oracles: the low-contention potential function, brute-force
//! pure equilibria on discretized games, best-response curves against a
//! linear opponent, fairness-constrained allocation optimality, and welfare.

mod best_response;
mod equilibrium;
mod pareto;
mod potential;
mod report;
mod welfare;

use thiserror::Error;

pub use best_response::{best_response_curve, expected_utility, fit_line, interior_points, BestResponseSetup, CurvePoint, LineFit};
pub use equilibrium::{enumerate_pure_ne, static_utility, PlayerAction, Profile, StaticGame, StaticPlayer};
pub use pareto::{
    allocation_stats, brute_force_optimum, fit_allocation_rule, pareto_fairness_check, AllocationRule, AllocationStats,
    ParetoReport, ValuationMap,
};
pub use potential::{check_potential_identity, low_contention_utility, potential_value};
pub use report::OracleRecord;
pub use welfare::{welfare, WelfareEntry};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("joint action space has {0} profiles, above the 10^6 limit")]
    TooLarge(u128),
    #[error("no allocation meets the fairness target within tolerance")]
    InfeasibleFairness,
    #[error("invalid game: {0}")]
    Invalid(String),
}
