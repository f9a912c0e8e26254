use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::Site;
use crate::sim::{RngStream, SimTime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub site: usize,
    pub measured_at: SimTime,
    pub arrives_at: SimTime,
    pub utilization: f64,
    /// Additive utilization noise before clamping.
    pub noise_applied: f64,
    /// The noise-free value, kept for metrics; the ACA never reads it.
    pub true_utilization: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportNoise {
    pub delay_sigma_ms: f64,
    pub util_sigma: f64,
}

/// Snapshot of the site's true utilization, perturbed and time-stamped for
/// delivery after the site's report delay plus Gaussian jitter.
pub fn report_utilization(
    site: &Site,
    now: SimTime,
    noise: ReportNoise,
    rng: &mut RngStream,
) -> UtilizationReport {
    let gauss = |sigma: f64, rng: &mut RngStream| {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
        } else {
            0.0
        }
    };
    let delay = (site.config.report_delay_ms as f64 + gauss(noise.delay_sigma_ms, rng))
        .round()
        .max(0.0);
    let noise_applied = gauss(noise.util_sigma, rng);
    UtilizationReport {
        site: site.index,
        measured_at: now,
        arrives_at: now + delay as u64,
        utilization: (site.utilization() + noise_applied).clamp(0.0, 1.0),
        noise_applied,
        true_utilization: site.utilization(),
    }
}
