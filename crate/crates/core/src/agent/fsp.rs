use crate::sim::RngStream;

/// Probability of playing the best-response output: `η = 1/t`, optionally
/// held at `floor` once `t > floor_after`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FspSchedule {
    pub floor: f64,
    pub floor_after: u64,
}

impl FspSchedule {
    pub const STRICT: FspSchedule = FspSchedule {
        floor: 0.0,
        floor_after: 0,
    };

    pub fn eta(&self, t: u64) -> f64 {
        let base = 1.0 / t.max(1) as f64;
        if t > self.floor_after {
            base.max(self.floor)
        } else {
            base
        }
    }

    /// True when step `t` should play the best response.
    pub fn pick_best_response(&self, t: u64, rng: &mut RngStream) -> bool {
        rng.uniform() < self.eta(t)
    }
}
