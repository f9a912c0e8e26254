//! Operating side: computing sites with processor-shared execution, delayed
//! noisy utilization reports, and the admission-control/assignment unit with
//! its RIAL-style pricing.

mod aca;
mod report;
mod site;

pub use aca::{
    admit, compute_slots, rial_assign, rial_price, Aca, AdmissionDecision, AdmissionReason,
    OperatorError,
};
pub use report::{report_utilization, ReportNoise, UtilizationReport};
pub use site::{update_service_estimate, Finished, Job, JobEnd, Site, SiteConfig};
