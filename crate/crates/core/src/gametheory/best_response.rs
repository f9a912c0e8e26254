use crate::agent::utility_per_type;

/// Two bidders, one service type. The opponent's valuation is uniform on
/// `[v1_low, v1_high]` and it bids linearly from `bid_low` to `bid_high`
/// over that range.
#[derive(Debug, Clone)]
pub struct BestResponseSetup {
    pub v1_low: f64,
    pub v1_high: f64,
    pub bid_low: f64,
    pub bid_high: f64,
    /// Bidder 2's cost of a lost bid.
    pub lost_cost: f64,
    pub budget: Option<f64>,
    pub valuations: Vec<f64>,
    pub prices: Vec<f64>,
    /// Midpoint-rule nodes over the opponent's valuation range.
    pub nodes: usize,
}

impl BestResponseSetup {
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn opponent_bid(&self, v1: f64) -> f64 {
        let t = (v1 - self.v1_low) / (self.v1_high - self.v1_low);
        self.bid_low + (self.bid_high - self.bid_low) * t
    }

    pub fn price_step(&self) -> f64 {
        self.prices
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub valuation: f64,
    pub bid: f64,
    pub utility: f64,
}

/// Expected utility of bidding `bid` with valuation `v2`: win pays the
/// opponent's bid, loss costs `lost_cost`, exact ties split evenly.
pub fn expected_utility(setup: &BestResponseSetup, v2: f64, bid: f64) -> f64 {
    let n = setup.nodes.max(1);
    let width = (setup.v1_high - setup.v1_low) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let v1 = setup.v1_low + width * (i as f64 + 0.5);
        let x = setup.opponent_bid(v1);
        let win = utility_per_type(true, v2, x, setup.lost_cost, 0.0, true);
        let lose = utility_per_type(false, v2, x, setup.lost_cost, 0.0, true);
        total += if bid > x {
            win
        } else if bid < x {
            lose
        } else {
            0.5 * (win + lose)
        };
    }
    total / n as f64
}

/// Grid best response for every valuation. Near-ties (within 1e-12 of the
/// best) resolve to the lowest price.
pub fn best_response_curve(setup: &BestResponseSetup) -> Vec<CurvePoint> {
    let allowed: Vec<f64> = setup
        .prices
        .iter()
        .copied()
        .filter(|&p| setup.budget.is_none_or(|b| p <= b))
        .collect();
    setup
        .valuations
        .iter()
        .map(|&v2| {
            let utilities: Vec<f64> = allowed.iter().map(|&b| expected_utility(setup, v2, b)).collect();
            let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let idx = utilities
                .iter()
                .position(|&u| u >= best - 1e-12 * best.abs().max(1.0))
                .unwrap_or(0);
            CurvePoint { valuation: v2, bid: allowed[idx], utility: utilities[idx] }
        })
        .collect()
}

/// Points whose best bid lies strictly inside the opponent's bid range (and
/// under the budget) by more than one price step.
pub fn interior_points(setup: &BestResponseSetup, curve: &[CurvePoint]) -> Vec<CurvePoint> {
    let step = setup.price_step();
    let upper = setup.budget.map_or(setup.bid_high, |b| b.min(setup.bid_high));
    curve
        .iter()
        .copied()
        .filter(|p| p.bid > setup.bid_low + step && p.bid < upper - step)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of bid on valuation.
pub fn fit_line(points: &[CurvePoint]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.valuation).sum::<f64>() / n;
    let my = points.iter().map(|p| p.bid).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.valuation - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.valuation - mx) * (p.bid - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.bid - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared })
}
