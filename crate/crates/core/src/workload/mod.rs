//! Service-request generation: the service-type catalog, MMPP arrival
//! processes, mobility-trace ingestion and the distance-based radio model.

mod catalog;
mod latency;
mod mmpp;
mod mobility;

pub use catalog::{
    sample_service_request, synthetic_catalog, Catalog, CatalogError, ServiceTypeSpec, TaskSpec,
};
pub use latency::{throughput_at, transmission_delay, LatencyError, COVERAGE_RADIUS_M};
pub use mmpp::{mmpp_next_arrival, MmppParams, MmppState, Regime};
pub use mobility::{
    generate_junction_trace, load_mobility_trace, parse_mobility_trace, write_mobility_trace,
    JunctionParams, MobilityError, MobilityIndex, MobilitySample,
};
