use crate::agent::utility_per_type;
use crate::auction::AuctionOutcome;

/// One bidder's stake in one service type for a round.
#[derive(Debug, Clone, PartialEq)]
pub struct WelfareEntry {
    pub bidder: usize,
    pub service_type: usize,
    pub valuation: f64,
    pub lost_cost: f64,
    /// Reward collected when the bidder backs off this type.
    pub backoff_reward: f64,
    pub submitted: bool,
}

/// Sum of realized per-type utilities over all bidders in a cleared round.
pub fn welfare(outcome: &AuctionOutcome, entries: &[WelfareEntry]) -> f64 {
    entries
        .iter()
        .map(|e| {
            let won = e.submitted && outcome.won(e.bidder, e.service_type);
            let pay = outcome.payment(e.service_type).unwrap_or(0.0);
            utility_per_type(won, e.valuation, pay, e.lost_cost, e.backoff_reward, e.submitted)
        })
        .sum()
}
