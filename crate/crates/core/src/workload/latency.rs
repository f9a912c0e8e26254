use thiserror::Error;

pub const COVERAGE_RADIUS_M: f64 = 65.0;

#[derive(Debug, Error, PartialEq)]
pub enum LatencyError {
    #[error("distance {0} m outside the {COVERAGE_RADIUS_M} m coverage radius")]
    OutOfRange(f64),
    #[error("n_sharing must be at least 1")]
    NoSharers,
    #[error("zero link rate: vehicle is out of coverage")]
    ZeroRate,
}

/// Per-vehicle link rate in Mbps at `distance_m` when `n_sharing` vehicles
/// transmit to the ACA unit.
pub fn throughput_at(distance_m: f64, n_sharing: u32) -> Result<f64, LatencyError> {
    if !(0.0..=COVERAGE_RADIUS_M).contains(&distance_m) {
        return Err(LatencyError::OutOfRange(distance_m));
    }
    if n_sharing == 0 {
        return Err(LatencyError::NoSharers);
    }
    Ok((-26.0 * distance_m + 1690.0).max(0.0) / f64::from(n_sharing))
}

/// Milliseconds to move `bits` at `rate_mbps`, rounded up to the next tick.
/// An infinite rate models a zero-latency link.
pub fn transmission_delay(bits: f64, rate_mbps: f64) -> Result<u64, LatencyError> {
    if bits <= 0.0 {
        return Ok(0);
    }
    if !(rate_mbps > 0.0) {
        return Err(LatencyError::ZeroRate);
    }
    Ok((bits / (rate_mbps * 1000.0)).ceil() as u64)
}
