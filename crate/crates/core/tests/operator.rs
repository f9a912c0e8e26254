use std::collections::BTreeMap;

use offload_core::auction::{clear_auction, Bid};
use offload_core::operator::{
    admit, compute_slots, report_utilization, Aca, Job, JobEnd, ReportNoise, Site, SiteConfig,
};
use offload_core::sim::{derive_stream, SimTime};
use proptest::prelude::*;

fn site(index: usize, capacity: f64, unit_cap: f64) -> Site {
    let cfg = SiteConfig {
        site_id: format!("s{index}"),
        capacity,
        report_delay_ms: 0,
        profile: Default::default(),
    };
    Site::new(index, cfg, &["a".to_string(), "b".to_string()], unit_cap)
}

proptest! {
    /// Jobs start at arbitrary ticks; at every step the units handed out
    /// never exceed capacity, every job ends exactly once, and a job counts
    /// as completed exactly when it finished by its deadline.
    #[test]
    fn processor_sharing_conserves_capacity(
        capacity in 1.0f64..12.0,
        unit_cap in 0.5f64..4.0,
        jobs in prop::collection::vec((0u64..40, 1.0f64..40.0, 5u64..120), 1..12),
    ) {
        let mut s = site(0, capacity, unit_cap);
        let mut starts: Vec<(u64, f64, u64)> = jobs.clone();
        starts.sort_by_key(|j| j.0);
        let mut ended = BTreeMap::new();
        let mut next = 0;
        for t in 0..=1200u64 {
            let now = SimTime::from_ms(t);
            for f in s.advance(now) {
                prop_assert!(ended.insert(f.job.request_id, (f.end, f.at)).is_none());
            }
            while next < starts.len() && starts[next].0 == t {
                let (_, work, deadline) = starts[next];
                s.start(now, Job::new(next as u64, 0, 0, vec![work], now + deadline, now));
                next += 1;
            }
            prop_assert!(s.allocation() * s.in_flight.len() as f64 <= capacity + 1e-9);
            prop_assert!(s.allocation() <= unit_cap);
        }
        prop_assert!(s.in_flight.is_empty());
        prop_assert_eq!(ended.len(), jobs.len());
        for (id, (end, at)) in ended {
            let (start, _, deadline) = starts[id as usize];
            prop_assert_eq!(end == JobEnd::Completed, at.as_ms() <= start + deadline);
        }
    }

    /// With fresh, noise-free reports, the work assigned in one clear fits
    /// in what the sites really have free over the admission horizon.
    #[test]
    fn exact_reports_never_overcommit(
        caps in prop::collection::vec(2.0f64..30.0, 1..4),
        busy in prop::collection::vec(0usize..20, 1..4),
        prices in prop::collection::vec((0usize..2, 1.0f64..10.0), 1..12),
        horizon in 5.0f64..40.0,
    ) {
        let noise = ReportNoise { delay_sigma_ms: 0.0, util_sigma: 0.0 };
        let mut sites: Vec<Site> = caps.iter().enumerate().map(|(i, &c)| site(i, c, 1.0)).collect();
        let mut aca = Aca::new(caps.clone(), horizon, 2.0, 1.0);
        let mut rng = derive_stream(1, "site/report");
        for (i, s) in sites.iter_mut().enumerate() {
            for j in 0..busy[i % busy.len()] {
                s.start(SimTime::ZERO, Job::new(1000 + j as u64, 9, 0, vec![500.0], SimTime::from_ms(900), SimTime::ZERO));
            }
            aca.receive(report_utilization(s, SimTime::ZERO, noise, &mut rng));
        }
        let true_free: f64 = sites.iter().map(|s| (s.capacity() - s.allocation() * s.in_flight.len() as f64) * horizon).sum();
        let bids: Vec<Bid> = prices.iter().enumerate().map(|(i, &(k, p))| Bid {
            request_id: i as u64,
            bidder: i,
            service_type: k,
            price: p,
            resource_estimate: if k == 0 { 3.0 } else { 30.0 },
            deadline: SimTime::from_ms(300),
            rebid_count: 0,
            created: SimTime::ZERO,
        }).collect();
        let estimates: BTreeMap<usize, f64> = bids.iter().map(|b| (b.service_type, b.resource_estimate)).collect();
        let slots = compute_slots(&aca.believed_free(), &estimates);
        let outcome = clear_auction(SimTime::ZERO, &bids, &slots, &mut derive_stream(2, "auction")).unwrap();
        let mut ordered = bids.clone();
        ordered.sort_by(|a, b| b.price.total_cmp(&a.price));
        let mut decisions = admit(&ordered, &outcome);
        aca.assign(SimTime::ZERO, &mut decisions, &ordered, &sites);
        let load: f64 = decisions.iter().zip(&ordered).filter(|(d, _)| d.assigned_site.is_some()).map(|(_, b)| b.resource_estimate).sum();
        prop_assert!(load <= true_free + 1e-9, "load {} free {}", load, true_free);
    }
}
