use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::sim::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    High,
    Low,
}

/// Per-vehicle MMPP configuration. Rates are given in requests per second
/// and drawn uniformly from the ranges once per vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmppParams {
    pub lambda_high_per_s: (f64, f64),
    pub lambda_low_per_s: (f64, f64),
    /// Probability of leaving High at an epoch boundary.
    pub p_high: f64,
    /// Probability of leaving Low at an epoch boundary.
    pub p_low: f64,
    pub epoch_ms: u64,
}

impl Default for MmppParams {
    fn default() -> Self {
        MmppParams {
            lambda_high_per_s: (0.48, 0.6),
            lambda_low_per_s: (0.0, 0.12),
            p_high: 0.6,
            p_low: 0.6,
            epoch_ms: 1000,
        }
    }
}

impl MmppParams {
    pub fn validate(&self) -> Result<(), String> {
        let (hl, hh) = self.lambda_high_per_s;
        let (ll, lh) = self.lambda_low_per_s;
        if !(0.0 <= ll && ll <= lh && lh <= hl && hl <= hh && hh.is_finite()) || hh <= 0.0 {
            return Err("rate ranges must satisfy 0 <= low_min <= low_max <= high_min <= high_max, high_max > 0".into());
        }
        for p in [self.p_high, self.p_low] {
            if !(0.0..=1.0).contains(&p) {
                return Err("switch probabilities must lie in [0, 1]".into());
            }
        }
        if self.epoch_ms == 0 {
            return Err("epoch_ms must be > 0".into());
        }
        Ok(())
    }
}

/// Two-state MMPP. Rates are per millisecond. The regime is re-sampled at
/// every epoch boundary; `until_switch_ms` is the time left in the current
/// epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct MmppState {
    pub regime: Regime,
    pub lambda_high: f64,
    pub lambda_low: f64,
    pub p_high: f64,
    pub p_low: f64,
    pub epoch_ms: f64,
    pub until_switch_ms: f64,
}

impl MmppState {
    /// Draws the per-vehicle rates and an initial regime from the chain's
    /// stationary distribution.
    pub fn sample_for_vehicle(params: &MmppParams, rng: &mut RngStream) -> Self {
        let draw = |(lo, hi): (f64, f64), rng: &mut RngStream| lo + (hi - lo) * rng.uniform();
        let lambda_high = draw(params.lambda_high_per_s, rng) / 1000.0;
        let lambda_low = draw(params.lambda_low_per_s, rng) / 1000.0;
        let denom = params.p_high + params.p_low;
        let stationary_high = if denom > 0.0 { params.p_low / denom } else { 0.5 };
        let regime = if rng.uniform() < stationary_high {
            Regime::High
        } else {
            Regime::Low
        };
        MmppState {
            regime,
            lambda_high,
            lambda_low,
            p_high: params.p_high,
            p_low: params.p_low,
            epoch_ms: params.epoch_ms as f64,
            until_switch_ms: params.epoch_ms as f64,
        }
    }

    pub fn rate(&self) -> f64 {
        match self.regime {
            Regime::High => self.lambda_high,
            Regime::Low => self.lambda_low,
        }
    }

    /// Moves to the next epoch boundary, possibly switching regime.
    pub fn advance_epoch(&mut self, rng: &mut RngStream) {
        let leave = match self.regime {
            Regime::High => self.p_high,
            Regime::Low => self.p_low,
        };
        if rng.uniform() < leave {
            self.regime = match self.regime {
                Regime::High => Regime::Low,
                Regime::Low => Regime::High,
            };
        }
        self.until_switch_ms = self.epoch_ms;
    }
}

/// Time to the next arrival, in fractional ms. Arrivals within an epoch are
/// Poisson at the current regime's rate; by memorylessness an exponential
/// draw that overshoots the epoch boundary is discarded and redrawn after the
/// switch. Gaps are capped at `cap_ms` so a zero rate cannot stall the caller.
pub fn mmpp_next_arrival(state: &MmppState, rng: &mut RngStream, cap_ms: f64) -> (f64, MmppState) {
    let mut s = state.clone();
    let mut elapsed = 0.0;
    loop {
        let rate = s.rate();
        if rate > 0.0 {
            let gap = Exp::new(rate).expect("positive rate").sample(rng);
            if gap <= s.until_switch_ms {
                s.until_switch_ms -= gap;
                return ((elapsed + gap).min(cap_ms), s);
            }
        }
        elapsed += s.until_switch_ms;
        if elapsed >= cap_ms {
            return (cap_ms, s);
        }
        s.advance_epoch(rng);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive_stream;

    fn fixed_high(rate_per_s: f64) -> MmppState {
        MmppState {
            regime: Regime::High,
            lambda_high: rate_per_s / 1000.0,
            lambda_low: 0.0,
            p_high: 0.0,
            p_low: 0.0,
            epoch_ms: 1000.0,
            until_switch_ms: 1000.0,
        }
    }

    #[test]
    fn high_regime_mean_interarrival() {
        let mut s = fixed_high(0.54);
        let mut rng = derive_stream(5, "vehicle/0");
        let n = 100_000;
        let mut total = 0.0;
        for _ in 0..n {
            let (gap, next) = mmpp_next_arrival(&s, &mut rng, f64::INFINITY);
            total += gap;
            s = next;
        }
        let mean = total / n as f64;
        let expected = 1000.0 / 0.54;
        assert!((mean - expected).abs() / expected < 0.02, "{mean}");
    }

    #[test]
    fn zero_rate_is_capped() {
        let mut s = fixed_high(0.0);
        s.regime = Regime::Low;
        let mut rng = derive_stream(5, "vehicle/0");
        let (gap, _) = mmpp_next_arrival(&s, &mut rng, 60_000.0);
        assert_eq!(gap, 60_000.0);
    }

    #[test]
    fn symmetric_chain_occupancy() {
        let params = MmppParams::default();
        let mut rng = derive_stream(9, "vehicle/0");
        let mut s = MmppState::sample_for_vehicle(&params, &mut rng);
        let n = 100_000;
        let mut high = 0;
        for _ in 0..n {
            s.advance_epoch(&mut rng);
            high += usize::from(s.regime == Regime::High);
        }
        let frac = high as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "{frac}");
    }

    #[test]
    fn sampled_rates_fall_in_ranges() {
        let params = MmppParams::default();
        for i in 0..50 {
            let mut rng = derive_stream(1, &format!("vehicle/{i}"));
            let s = MmppState::sample_for_vehicle(&params, &mut rng);
            assert!((0.00048..=0.0006).contains(&s.lambda_high));
            assert!((0.0..=0.00012).contains(&s.lambda_low));
        }
    }
}
