use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Site, UtilizationReport};
use crate::auction::{AuctionOutcome, Bid, BidderId, TypeIndex};
use crate::sim::SimTime;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OperatorError {
    #[error("no site can take the request")]
    NoFeasibleSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdmissionReason {
    Won,
    NoSlot,
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionDecision {
    pub request_id: u64,
    pub bidder: BidderId,
    pub service_type: TypeIndex,
    pub admitted: bool,
    pub assigned_site: Option<usize>,
    pub reason: AdmissionReason,
}

/// Slots per type: believed free work across all sites divided by the type's
/// work estimate, rounded down.
pub fn compute_slots(
    believed_free: &[f64],
    estimates: &BTreeMap<TypeIndex, f64>,
) -> BTreeMap<TypeIndex, u32> {
    let free: f64 = believed_free.iter().map(|f| f.max(0.0)).sum();
    estimates
        .iter()
        .map(|(&k, &est)| {
            debug_assert!(est > 0.0);
            (k, (free / est).floor().clamp(0.0, u32::MAX as f64) as u32)
        })
        .collect()
}

/// Marks each bid `Won` if the auction selected it, otherwise `NoSlot`. The
/// returned decisions follow `ordered_bids`; assignment happens afterwards.
pub fn admit(ordered_bids: &[Bid], outcome: &AuctionOutcome) -> Vec<AdmissionDecision> {
    ordered_bids
        .iter()
        .map(|b| {
            let won = outcome.won(b.bidder, b.service_type);
            AdmissionDecision {
                request_id: b.request_id,
                bidder: b.bidder,
                service_type: b.service_type,
                admitted: won,
                assigned_site: None,
                reason: if won {
                    AdmissionReason::Won
                } else {
                    AdmissionReason::NoSlot
                },
            }
        })
        .collect()
}

/// Minimum-price site among those whose believed free work covers the
/// request's estimate there; ties go to the lexicographically first id.
pub fn rial_assign(
    estimate_at: &[f64],
    believed_free: &[f64],
    prices: &[f64],
    site_ids: &[&str],
) -> Result<usize, OperatorError> {
    (0..prices.len())
        .filter(|&s| believed_free[s] >= estimate_at[s])
        .min_by(|&a, &b| {
            prices[a]
                .total_cmp(&prices[b])
                .then_with(|| site_ids[a].cmp(site_ids[b]))
        })
        .ok_or(OperatorError::NoFeasibleSite)
}

pub fn rial_price(utilization: f64, exponent: f64) -> f64 {
    utilization.clamp(0.0, 1.0).powf(exponent)
}

/// The admission-control and assignment unit. It only knows what the latest
/// arrived utilization reports say.
#[derive(Debug, Clone)]
pub struct Aca {
    latest: Vec<Option<UtilizationReport>>,
    capacities: Vec<f64>,
    pub horizon_ms: f64,
    pub price_exponent: f64,
    pub unit_cap: f64,
}

impl Aca {
    pub fn new(capacities: Vec<f64>, horizon_ms: f64, price_exponent: f64, unit_cap: f64) -> Self {
        Aca {
            latest: vec![None; capacities.len()],
            capacities,
            horizon_ms,
            price_exponent,
            unit_cap,
        }
    }

    /// Keeps the freshest measurement per site; late arrivals of older
    /// measurements are ignored.
    pub fn receive(&mut self, report: UtilizationReport) {
        let slot = &mut self.latest[report.site];
        if slot.as_ref().is_none_or(|r| r.measured_at <= report.measured_at) {
            *slot = Some(report);
        }
    }

    pub fn believed_utilization(&self, site: usize) -> f64 {
        self.latest[site].as_ref().map_or(0.0, |r| r.utilization)
    }

    /// Free work, in unit-ms, the ACA believes each site can absorb over the
    /// admission horizon.
    pub fn believed_free(&self) -> Vec<f64> {
        (0..self.capacities.len())
            .map(|s| self.capacities[s] * (1.0 - self.believed_utilization(s)) * self.horizon_ms)
            .collect()
    }

    /// Capacity-weighted mean of the latest reports.
    pub fn system_utilization(&self) -> f64 {
        let total: f64 = self.capacities.iter().sum();
        (0..self.capacities.len())
            .map(|s| self.capacities[s] * self.believed_utilization(s))
            .sum::<f64>()
            / total
    }

    pub fn update_prices(&self, sites: &mut [Site]) {
        for s in sites {
            s.price = rial_price(self.believed_utilization(s.index), self.price_exponent);
        }
    }

    /// Work estimate for type `k` at `site`: the site's learned value if it
    /// has one, otherwise the bidder's.
    pub fn estimate_at(site: &Site, k: TypeIndex, bidder_estimate: f64) -> f64 {
        site.estimates[k].unwrap_or(bidder_estimate * site.multipliers[k])
    }

    /// Work estimate used for slot computation: capacity-weighted mean of
    /// learned site estimates, falling back to the bidder's estimate.
    pub fn demand_estimate(sites: &[Site], k: TypeIndex, bidder_estimate: f64) -> f64 {
        let (num, den) = sites
            .iter()
            .filter_map(|s| s.estimates[k].map(|e| (e * s.capacity(), s.capacity())))
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        if den > 0.0 {
            num / den
        } else {
            bidder_estimate
        }
    }

    /// Assigns the `Won` decisions in order, consuming believed free work.
    /// Winners that cannot finish before their deadline even at full
    /// allocation, or that fit nowhere, become `Rejected`.
    pub fn assign(
        &self,
        now: SimTime,
        decisions: &mut [AdmissionDecision],
        bids: &[Bid],
        sites: &[Site],
    ) {
        let mut free = self.believed_free();
        let prices: Vec<f64> = sites.iter().map(|s| s.price).collect();
        let ids: Vec<&str> = sites.iter().map(|s| s.config.site_id.as_str()).collect();
        for (d, b) in decisions.iter_mut().zip(bids) {
            if d.reason != AdmissionReason::Won {
                continue;
            }
            let est: Vec<f64> = sites
                .iter()
                .map(|s| Self::estimate_at(s, b.service_type, b.resource_estimate))
                .collect();
            let fits_deadline: Vec<f64> = sites
                .iter()
                .enumerate()
                .map(|(i, _)| {
                    let finish = now.after_ms_f64(est[i] / self.unit_cap);
                    if finish <= b.deadline {
                        free[i]
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            match rial_assign(&est, &fits_deadline, &prices, &ids) {
                Ok(s) => {
                    free[s] -= est[s];
                    d.assigned_site = Some(s);
                }
                Err(OperatorError::NoFeasibleSite) => {
                    d.admitted = false;
                    d.reason = AdmissionReason::Rejected;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::clear_auction;
    use crate::operator::{report_utilization, ReportNoise, SiteConfig};
    use crate::sim::derive_stream;

    #[test]
    fn slot_examples() {
        let est = BTreeMap::from([(0, 30.0), (1, 3.0)]);
        assert_eq!(compute_slots(&[60.0], &est)[&0], 2);
        assert_eq!(compute_slots(&[0.0], &est), BTreeMap::from([(0, 0), (1, 0)]));
    }

    #[test]
    fn stale_report_overcommits() {
        let cfg = SiteConfig {
            site_id: "remote".into(),
            capacity: 3.0,
            report_delay_ms: 50,
            profile: Default::default(),
        };
        let mut site = Site::new(0, cfg, &["a".to_string()], 1.0);
        let noise = ReportNoise { delay_sigma_ms: 0.0, util_sigma: 0.0 };
        let mut rng = derive_stream(1, "site/remote");
        let idle = report_utilization(&site, SimTime::ZERO, noise, &mut rng);
        let mut aca = Aca::new(vec![3.0], 10.0, 2.0, 1.0);
        aca.receive(idle);
        // A burst fills the site, but its report is still in flight.
        for id in 0..3 {
            site.start(SimTime::ZERO, crate::operator::Job::new(id, 0, 0, vec![30.0], SimTime::from_ms(300), SimTime::ZERO));
        }
        let busy = report_utilization(&site, SimTime::ZERO, noise, &mut rng);
        assert_eq!(busy.utilization, 1.0);
        assert_eq!(busy.arrives_at, SimTime::from_ms(50));
        let slots = compute_slots(&aca.believed_free(), &BTreeMap::from([(0, 3.0)]));
        assert_eq!(slots[&0], 10);
        aca.receive(busy);
        let slots = compute_slots(&aca.believed_free(), &BTreeMap::from([(0, 3.0)]));
        assert_eq!(slots[&0], 0);
    }

    #[test]
    fn admission_examples() {
        let bid = |bidder: usize, price: f64, created: u64| Bid {
            request_id: bidder as u64,
            bidder,
            service_type: 0,
            price,
            resource_estimate: 3.0,
            deadline: SimTime::from_ms(300),
            rebid_count: 0,
            created: SimTime::from_ms(created),
        };
        let bids = vec![bid(0, 5.0, 0), bid(1, 3.0, 0), bid(2, 1.0, 0)];
        let mut rng = derive_stream(1, "auction");
        let one = clear_auction(SimTime::ZERO, &bids, &BTreeMap::from([(0, 1)]), &mut rng).unwrap();
        let d = admit(&bids, &one);
        assert_eq!(d.iter().filter(|d| d.reason == AdmissionReason::Won).count(), 1);
        assert_eq!(d.iter().filter(|d| d.reason == AdmissionReason::NoSlot).count(), 2);
        let five = clear_auction(SimTime::ZERO, &bids[..2], &BTreeMap::from([(0, 5)]), &mut rng).unwrap();
        assert!(admit(&bids[..2], &five).iter().all(|d| d.admitted));
    }

    #[test]
    fn rial_examples() {
        let ids = ["edge", "remote"];
        assert_eq!(rial_assign(&[3.0, 3.0], &[10.0, 10.0], &[0.2, 0.8], &ids), Ok(0));
        assert_eq!(rial_assign(&[3.0, 3.0], &[0.0, 10.0], &[0.2, 0.8], &ids), Ok(1));
        assert_eq!(rial_assign(&[3.0, 3.0], &[10.0, 10.0], &[0.5, 0.5], &["b", "a"]), Ok(1));
        assert_eq!(
            rial_assign(&[3.0, 3.0], &[0.0, 0.0], &[0.5, 0.5], &ids),
            Err(OperatorError::NoFeasibleSite)
        );
        assert_eq!(rial_price(0.0, 2.0), 0.0);
        assert_eq!(rial_price(1.0, 2.0), 1.0);
        assert_eq!(rial_price(0.5, 2.0), 0.25);
    }
}
