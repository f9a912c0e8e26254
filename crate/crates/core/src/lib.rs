//! Decentralized computation offloading through repeated second-price
//! auctions.
//!
//! Vehicles (bidders) decide per service type whether to back off and what
//! to bid; an admission-control unit clears per-type second-price auctions
//! over the slots it believes the computing sites can still absorb, and sites
//! execute the admitted task chains while reporting utilization with delay
//! and noise. Learning bidders combine a supervised model of their own past
//! play with an average-reward actor-critic best response.
//!
//! * [`sim`]: deterministic event engine, random streams, run trace.
//! * [`workload`]: service catalog, MMPP arrivals, mobility traces, radio latency.
//! * [`auction`]: per-type second-price clearing and feedback.
//! * [`operator`]: admission control, RIAL-style assignment, site execution.
//! * [`agent`]: utilities, state encoding, actor-critic, supervised model, mixing.
//! * [`gametheory`]: static-game oracles (potential, equilibria, best responses).
//! * [`scenario`]: configuration, the simulated world, metrics and experiment drivers.

pub mod agent;
pub mod auction;
pub mod gametheory;
pub mod operator;
pub mod scenario;
pub mod sim;
pub mod workload;
