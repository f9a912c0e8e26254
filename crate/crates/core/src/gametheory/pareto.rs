use super::GameError;

/// Allocation of one unit between two bidders by comparing linear
/// best-response bids: bidder 1 wins iff `j1·v1 + d1 ≥ j2·v2 + d2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationRule {
    pub j1: f64,
    pub d1: f64,
    pub j2: f64,
    pub d2: f64,
    /// Target ratio of bidder 1's to bidder 2's allocated resource.
    pub gamma: f64,
    pub lambda_star: f64,
}

/// Linear valuation maps `v_i = g_i·ω_i + k_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuationMap {
    pub g1: f64,
    pub k1: f64,
    pub g2: f64,
    pub k2: f64,
}

impl AllocationRule {
    pub fn bidder1_wins(&self, map: &ValuationMap, (w1, w2): (f64, f64)) -> bool {
        let v1 = map.g1 * w1 + map.k1;
        let v2 = map.g2 * w2 + map.k2;
        self.j1 * v1 + self.d1 >= self.j2 * v2 + self.d2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationStats {
    /// Mean allocated resource `E[ω1·1{A=1} + ω2·1{A=2}]`.
    pub welfare: f64,
    /// `E[ω1·1{A=1}] / E[ω2·1{A=2}]`; infinite when bidder 2 never wins.
    pub ratio: f64,
    pub wins1: usize,
}

pub fn allocation_stats(samples: &[(f64, f64)], to_first: &[bool]) -> AllocationStats {
    let (mut s1, mut s2, mut wins1) = (0.0, 0.0, 0);
    for (&(w1, w2), &first) in samples.iter().zip(to_first) {
        if first {
            s1 += w1;
            wins1 += 1;
        } else {
            s2 += w2;
        }
    }
    let n = samples.len().max(1) as f64;
    let ratio = if s2 > 0.0 { s1 / s2 } else { f64::INFINITY };
    AllocationStats { welfare: (s1 + s2) / n, ratio, wins1 }
}

fn feasible(stats: &AllocationStats, samples: usize, gamma: f64, tol: f64) -> bool {
    if samples == 1 {
        return true;
    }
    stats.wins1 > 0 && stats.wins1 < samples && (stats.ratio - gamma).abs() <= tol
}

/// Slopes separating every distinct ordering of `ω1 − κ·ω2` over the
/// sample: midpoints between consecutive critical slopes plus both ends.
fn slope_candidates(critical: &mut Vec<f64>) -> Vec<f64> {
    critical.retain(|k| k.is_finite() && *k > 0.0);
    critical.sort_by(f64::total_cmp);
    critical.dedup();
    let mut out = Vec::with_capacity(critical.len() + 2);
    match (critical.first(), critical.last()) {
        (Some(&lo), Some(&hi)) => {
            out.push(lo / 2.0);
            out.extend(critical.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            out.push(hi * 2.0);
        }
        _ => out.push(1.0),
    }
    out
}

/// Best fairness-feasible welfare over every affine threshold rule
/// `ω1 ≥ κ·ω2 + τ` (κ > 0), found by enumerating all distinct splits of
/// the sample. Returns the allocation attaining it.
pub fn brute_force_optimum(samples: &[(f64, f64)], gamma: f64, tol: f64) -> Result<(AllocationStats, Vec<bool>), GameError> {
    let n = samples.len();
    if n == 1 {
        let first = samples[0].0 >= samples[0].1;
        return Ok((allocation_stats(samples, &[first]), vec![first]));
    }
    let mut critical = Vec::with_capacity(n * n / 2);
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (samples[i], samples[j]);
            critical.push((a.0 - b.0) / (a.1 - b.1));
        }
    }
    let mut best: Option<(AllocationStats, f64, usize)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for kappa in slope_candidates(&mut critical) {
        let score = |i: usize| samples[i].0 - kappa * samples[i].1;
        order.sort_by(|&a, &b| score(b).total_cmp(&score(a)));
        // Bidder 1 takes the `m` highest scores.
        let total2: f64 = samples.iter().map(|s| s.1).sum();
        let (mut s1, mut s2) = (0.0, total2);
        for m in 0..=n {
            if m > 0 {
                let i = order[m - 1];
                s1 += samples[i].0;
                s2 -= samples[i].1;
            }
            let stats = AllocationStats {
                welfare: (s1 + s2) / n as f64,
                ratio: if s2 > 0.0 { s1 / s2 } else { f64::INFINITY },
                wins1: m,
            };
            if feasible(&stats, n, gamma, tol) && best.is_none_or(|(b, _, _)| stats.welfare > b.welfare) {
                best = Some((stats, kappa, m));
            }
        }
    }
    let (stats, kappa, m) = best.ok_or(GameError::InfeasibleFairness)?;
    let score = |i: usize| samples[i].0 - kappa * samples[i].1;
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)));
    let mut alloc = vec![false; n];
    for &i in &order[..m] {
        alloc[i] = true;
    }
    Ok((stats, alloc))
}

/// Chooses the multiplier of the fairness constraint: among ratio rules
/// `ω1·(1+λ) ≥ ω2·(1−γλ)` meeting the target, the one with the most
/// allocated resource. Bidder 2's coefficients are then set so that the
/// bid comparison implements it.
pub fn fit_allocation_rule(
    samples: &[(f64, f64)],
    gamma: f64,
    tol: f64,
    map: &ValuationMap,
    j1: f64,
    d1: f64,
) -> Result<AllocationRule, GameError> {
    if !(gamma > 0.0 && j1 > 0.0 && map.g1 > 0.0 && map.g2 > 0.0) {
        return Err(GameError::Invalid("gamma, j1, g1 and g2 must be positive".into()));
    }
    let n = samples.len();
    let mut critical: Vec<f64> = samples.iter().map(|s| s.0 / s.1).collect();
    let mut best: Option<(f64, f64)> = None;
    for kappa in slope_candidates(&mut critical) {
        let alloc: Vec<bool> = samples.iter().map(|s| s.0 >= kappa * s.1).collect();
        let stats = allocation_stats(samples, &alloc);
        if feasible(&stats, n, gamma, tol) && best.is_none_or(|(w, _)| stats.welfare > w) {
            best = Some((stats.welfare, kappa));
        }
        if n == 1 {
            // Fairness is vacuous on one sample; the unconstrained rule is κ = 1.
            best = Some((stats.welfare, 1.0));
            break;
        }
    }
    let (_, kappa) = best.ok_or(GameError::InfeasibleFairness)?;
    let lambda_star = (1.0 - kappa) / (kappa + gamma);
    // j1·(g1ω1 + k1) + d1 ≥ j2·(g2ω2 + k2) + d2  ⇔  ω1 ≥ κ·ω2
    let j2 = j1 * map.g1 * kappa / map.g2;
    let d2 = j1 * map.k1 + d1 - j2 * map.k2;
    Ok(AllocationRule { j1, d1, j2, d2, gamma, lambda_star })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoReport {
    pub rule: AllocationStats,
    pub optimum: AllocationStats,
    /// `rule.welfare / optimum.welfare`.
    pub efficiency: f64,
    pub pass: bool,
}

/// Compares the rule's allocation on the sample against the brute-force
/// fairness-constrained optimum. Passes when the rule meets the fairness
/// target and its welfare is within `tol_welfare` (relative) of the optimum.
pub fn pareto_fairness_check(
    rule: &AllocationRule,
    samples: &[(f64, f64)],
    map: &ValuationMap,
    tol_fair: f64,
    tol_welfare: f64,
) -> Result<ParetoReport, GameError> {
    if samples.is_empty() {
        return Err(GameError::Invalid("no samples".into()));
    }
    let alloc: Vec<bool> = samples.iter().map(|&s| rule.bidder1_wins(map, s)).collect();
    let stats = allocation_stats(samples, &alloc);
    if samples.len() > 1 && (stats.wins1 == 0 || stats.wins1 == samples.len()) {
        return Err(GameError::Invalid("one bidder never wins under the rule".into()));
    }
    let (optimum, _) = brute_force_optimum(samples, rule.gamma, tol_fair)?;
    let efficiency = stats.welfare / optimum.welfare;
    let pass = feasible(&stats, samples.len(), rule.gamma, tol_fair) && efficiency >= 1.0 - tol_welfare;
    Ok(ParetoReport { rule: stats, optimum, efficiency, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYM: ValuationMap = ValuationMap { g1: 2.0, k1: 1.0, g2: 2.0, k2: 1.0 };

    #[test]
    fn symmetric_rule_gives_to_larger_and_matches_brute_force() {
        let mut samples = Vec::new();
        for a in 1..=8 {
            for b in 1..=8 {
                if a != b {
                    samples.push((a as f64, b as f64 + 0.0));
                }
            }
        }
        let rule = fit_allocation_rule(&samples, 1.0, 0.02, &SYM, 1.0, 0.0).unwrap();
        assert!(rule.lambda_star.abs() < 0.1);
        for &s in &samples {
            assert_eq!(rule.bidder1_wins(&SYM, s), s.0 > s.1);
        }
        let report = pareto_fairness_check(&rule, &samples, &SYM, 0.02, 0.0).unwrap();
        assert_eq!(report.rule.welfare, report.optimum.welfare);
        assert!(report.pass);
    }

    #[test]
    fn single_sample_matches_brute_force() {
        let samples = [(3.0, 5.0)];
        let rule = fit_allocation_rule(&samples, 1.0, 0.02, &SYM, 1.0, 0.0).unwrap();
        let report = pareto_fairness_check(&rule, &samples, &SYM, 0.02, 0.0).unwrap();
        assert_eq!(report.rule, report.optimum);
    }

    #[test]
    fn unreachable_target_is_infeasible() {
        let samples = [(1.0, 1.0), (1.0, 1.0)];
        assert_eq!(brute_force_optimum(&samples, 5.0, 0.01).unwrap_err(), GameError::InfeasibleFairness);
    }
}
