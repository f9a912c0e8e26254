//! Run metrics, computed only from trace rows so that a serialized trace
//! reproduces them exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{EventKind, TraceRow};

fn vehicle_of(row: &TraceRow) -> Option<usize> {
    row.entity.strip_prefix("vehicle/")?.parse().ok()
}

fn num<T: std::str::FromStr>(row: &TraceRow, key: &str) -> Option<T> {
    row.attr(key)?.parse().ok()
}

/// Terminal record of one request.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    vehicle: usize,
    success: bool,
    admitted: bool,
    rebids: u32,
}

fn outcomes(rows: &[TraceRow], warmup_ms: u64) -> impl Iterator<Item = Outcome> + '_ {
    rows.iter().filter_map(move |r| {
        let status = r.attr("final")?;
        if num::<u64>(r, "created")? < warmup_ms {
            return None;
        }
        Some(Outcome {
            vehicle: vehicle_of(r)?,
            success: status == "success",
            admitted: r.attr("admitted") == Some("1"),
            rebids: num(r, "rebids")?,
        })
    })
}

/// Budget level per vehicle, as announced on its arrivals.
fn budgets(rows: &[TraceRow]) -> BTreeMap<usize, String> {
    let mut out = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == EventKind::ServiceArrival) {
        if let (Some(v), Some(b)) = (vehicle_of(r), r.attr("budget")) {
            out.entry(v).or_insert_with(|| b.to_string());
        }
    }
    out
}

/// Failed requests over requests that reached a final status. A request
/// that succeeds on a rebid counts as a success.
pub fn compute_ofr(rows: &[TraceRow], warmup_ms: u64) -> f64 {
    let (mut total, mut failed) = (0usize, 0usize);
    for o in outcomes(rows, warmup_ms) {
        total += 1;
        failed += usize::from(!o.success);
    }
    if total == 0 {
        0.0
    } else {
        failed as f64 / total as f64
    }
}

/// Box-plot summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Distribution {
    pub fn of(values: &[f64]) -> Distribution {
        if values.is_empty() {
            return Distribution { count: 0, mean: 0.0, median: 0.0, q1: 0.0, q3: 0.0, min: 0.0, max: 0.0 };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Distribution {
            count: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(&v, 0.5),
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
            min: v[0],
            max: v[v.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebidStats {
    /// Mean rebids per request, one entry per vehicle with requests.
    pub per_vehicle: Vec<(usize, f64)>,
    pub summary: Distribution,
}

pub fn compute_rebidding_stats(rows: &[TraceRow], warmup_ms: u64) -> RebidStats {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for o in outcomes(rows, warmup_ms) {
        let e = acc.entry(o.vehicle).or_default();
        e.0 += f64::from(o.rebids);
        e.1 += 1;
    }
    let per_vehicle: Vec<(usize, f64)> = acc.into_iter().map(|(v, (s, n))| (v, s / n as f64)).collect();
    let values: Vec<f64> = per_vehicle.iter().map(|p| p.1).collect();
    RebidStats { summary: Distribution::of(&values), per_vehicle }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub budget: String,
    pub ofr: f64,
    pub cumulative: f64,
}

/// Empirical CDF of per-vehicle OFR, separately for each budget level.
/// Equal OFRs collapse into one point.
pub fn compute_individual_ofr_cdf(rows: &[TraceRow], warmup_ms: u64) -> Vec<CdfPoint> {
    let levels = budgets(rows);
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (v, ofr) in per_vehicle_ofr(rows, warmup_ms) {
        let level = levels.get(&v).cloned().unwrap_or_else(|| "unknown".into());
        groups.entry(level).or_default().push(ofr);
    }
    let mut out = Vec::new();
    for (budget, mut ofrs) in groups {
        ofrs.sort_by(f64::total_cmp);
        let n = ofrs.len() as f64;
        for (i, &x) in ofrs.iter().enumerate() {
            if ofrs.get(i + 1) == Some(&x) {
                continue;
            }
            out.push(CdfPoint { budget: budget.clone(), ofr: x, cumulative: (i + 1) as f64 / n });
        }
    }
    out
}

fn per_vehicle_ofr(rows: &[TraceRow], warmup_ms: u64) -> Vec<(usize, f64)> {
    let mut acc: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for o in outcomes(rows, warmup_ms) {
        let e = acc.entry(o.vehicle).or_default();
        e.0 += 1;
        e.1 += usize::from(!o.success);
    }
    acc.into_iter().map(|(v, (n, f))| (v, f as f64 / n as f64)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackoffGroup {
    /// `high` or `low` price group.
    pub group: String,
    pub deadline_ms: u64,
    pub bids: usize,
    pub mean_backoff_ms: f64,
}

struct BidRow {
    vehicle: usize,
    price: f64,
    backoff_ms: f64,
    deadline_ms: u64,
}

fn bid_rows(rows: &[TraceRow], warmup_ms: u64) -> impl Iterator<Item = BidRow> + '_ {
    rows.iter().filter(move |r| r.kind == EventKind::BidSubmission && r.time_ms >= warmup_ms).filter_map(|r| {
        Some(BidRow {
            vehicle: vehicle_of(r)?,
            price: num(r, "price")?,
            backoff_ms: num(r, "backoff_ms")?,
            deadline_ms: num(r, "deadline_ms")?,
        })
    })
}

fn mean_price_by_vehicle(rows: &[TraceRow], warmup_ms: u64) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for b in bid_rows(rows, warmup_ms) {
        let e = acc.entry(b.vehicle).or_default();
        e.0 += b.price;
        e.1 += 1;
    }
    acc.into_iter().map(|(v, (s, n))| (v, s / n as f64)).collect()
}

/// Splits vehicles by whether their mean bid is below the mean of all
/// vehicles' mean bids (`low`) or not (`high`, which also takes ties), then
/// averages the backoff preceding each bid per group and deadline class.
pub fn backoff_price_analysis(rows: &[TraceRow], warmup_ms: u64) -> Vec<BackoffGroup> {
    let means = mean_price_by_vehicle(rows, warmup_ms);
    if means.is_empty() {
        return Vec::new();
    }
    let overall = means.values().sum::<f64>() / means.len() as f64;
    let mut acc: BTreeMap<(String, u64), (f64, usize)> = BTreeMap::new();
    for b in bid_rows(rows, warmup_ms) {
        let group = if means[&b.vehicle] < overall { "low" } else { "high" };
        let e = acc.entry((group.to_string(), b.deadline_ms)).or_default();
        e.0 += b.backoff_ms;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|((group, deadline_ms), (s, n))| BackoffGroup { group, deadline_ms, bids: n, mean_backoff_ms: s / n as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteUtilization {
    pub site: usize,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
}

/// Mean and population standard deviation of each site's measured
/// (noise-free) utilization.
pub fn compute_utilization(rows: &[TraceRow], warmup_ms: u64) -> Vec<SiteUtilization> {
    let mut acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.kind == EventKind::UtilizationReportArrival) {
        let (Some(site), Some(at), Some(u)) = (
            r.entity.strip_prefix("site/").and_then(|s| s.parse().ok()),
            num::<u64>(r, "measured_at"),
            num::<f64>(r, "true_utilization"),
        ) else {
            continue;
        };
        if at >= warmup_ms {
            acc.entry(site).or_default().push(u);
        }
    }
    acc.into_iter()
        .map(|(site, v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            SiteUtilization { site, samples: v.len(), mean, std: var.sqrt() }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleStats {
    pub vehicle: usize,
    pub budget: String,
    pub requests: usize,
    pub ofr: f64,
    pub mean_rebids: f64,
    pub mean_price: Option<f64>,
    pub mean_backoff_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub requests: usize,
    pub failures: usize,
    pub ofr: f64,
    /// Admitted requests that finished before their deadline, over all
    /// admitted requests.
    pub reliability: f64,
    pub utilization: Vec<SiteUtilization>,
    pub rebids: Distribution,
    pub vehicles: Vec<VehicleStats>,
}

pub fn summarize(rows: &[TraceRow], warmup_ms: u64) -> RunSummary {
    let all: Vec<Outcome> = outcomes(rows, warmup_ms).collect();
    let failures = all.iter().filter(|o| !o.success).count();
    let admitted = all.iter().filter(|o| o.admitted).count();
    let admitted_ok = all.iter().filter(|o| o.admitted && o.success).count();
    let rebid_stats = compute_rebidding_stats(rows, warmup_ms);
    let levels = budgets(rows);
    let prices = mean_price_by_vehicle(rows, warmup_ms);
    let mut backoff: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for b in bid_rows(rows, warmup_ms) {
        let e = backoff.entry(b.vehicle).or_default();
        e.0 += b.backoff_ms;
        e.1 += 1;
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for o in &all {
        *counts.entry(o.vehicle).or_default() += 1;
    }
    let ofrs: BTreeMap<usize, f64> = per_vehicle_ofr(rows, warmup_ms).into_iter().collect();
    let rebids: BTreeMap<usize, f64> = rebid_stats.per_vehicle.iter().copied().collect();
    let vehicles = levels
        .iter()
        .map(|(&v, level)| VehicleStats {
            vehicle: v,
            budget: level.clone(),
            requests: counts.get(&v).copied().unwrap_or(0),
            ofr: ofrs.get(&v).copied().unwrap_or(0.0),
            mean_rebids: rebids.get(&v).copied().unwrap_or(0.0),
            mean_price: prices.get(&v).copied(),
            mean_backoff_ms: backoff.get(&v).map(|(s, n)| s / *n as f64),
        })
        .collect();
    RunSummary {
        requests: all.len(),
        failures,
        ofr: if all.is_empty() { 0.0 } else { failures as f64 / all.len() as f64 },
        reliability: if admitted == 0 { 1.0 } else { admitted_ok as f64 / admitted as f64 },
        utilization: compute_utilization(rows, warmup_ms),
        rebids: rebid_stats.summary,
        vehicles,
    }
}

/// Differences `active − passive` of the headline metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDelta {
    pub ofr: f64,
    pub reliability: f64,
    pub mean_rebids: f64,
    /// Per site: (mean, std) differences.
    pub utilization: Vec<(usize, f64, f64)>,
}

impl SummaryDelta {
    pub fn between(active: &RunSummary, passive: &RunSummary) -> SummaryDelta {
        SummaryDelta {
            ofr: active.ofr - passive.ofr,
            reliability: active.reliability - passive.reliability,
            mean_rebids: active.rebids.mean - passive.rebids.mean,
            utilization: active
                .utilization
                .iter()
                .zip(&passive.utilization)
                .map(|(a, p)| (a.site, a.mean - p.mean, a.std - p.std))
                .collect(),
        }
    }
}
