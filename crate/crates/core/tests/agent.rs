use offload_core::agent::{
    squash, utility_per_type, utility_total, AgentConfig, Bidder, EnvView, FeatureScales, LearningConfig, RequestView,
};
use offload_core::sim::derive_stream;
use proptest::prelude::*;

fn agent_cfg(budget: f64, active: bool) -> AgentConfig {
    AgentConfig {
        bidder: 0,
        budget,
        valuation_slope: 1.0,
        valuation_intercept: 0.0,
        lost_bid_cost: 1.0,
        backoff_cost: 0.1,
        utilization_weight: 0.0,
        backoff_threshold: 0.5,
        max_backoff_ms: 100,
        active,
    }
}

fn scales(budget: f64) -> FeatureScales {
    FeatureScales {
        types: 1,
        max_units: 30.0,
        max_deadline_ms: 300.0,
        max_rebids: 1.0,
        budget,
        utility_scale: 100.0,
        roster: 1.0,
    }
}

fn request() -> Vec<RequestView> {
    vec![RequestView { service_type: 0, estimate: 20.0, remaining_ms: 300.0, rebid_count: 0 }]
}

const ENV: EnvView = EnvView { bidders: 1, utilization: 0.5, phase: 0.0 };

/// One type, one bidder, a fixed competing price: winning costs that price,
/// losing costs `c`, backing off earns `q`. Returns the mean utility of the
/// first and last tenth of the run.
fn bandit(seed: u64, steps: usize) -> (f64, f64) {
    let competing = 40.0;
    let budget = 100.0;
    let cfg = agent_cfg(budget, true);
    let learning = LearningConfig {
        eta_floor: 1.0,
        eta_floor_after: 0,
        actor_lr: 1e-3,
        sl_train_every: 1_000_000,
        ..LearningConfig::default()
    };
    let mut bidder = Bidder::new(cfg.clone(), learning, scales(budget), derive_stream(seed, "agent/0"));
    let mut utilities = Vec::with_capacity(steps);
    let mut prev = vec![None];
    for _ in 0..steps {
        let d = bidder.decide(request(), ENV, prev.clone()).unwrap();
        let a = d.actions[0];
        let u = if a.submit {
            let won = a.price >= competing;
            prev = vec![Some(competing)];
            utility_per_type(won, a.valuation, competing, cfg.lost_bid_cost, cfg.backoff_cost, true)
        } else {
            utility_per_type(false, a.valuation, 0.0, 0.0, cfg.backoff_cost, false)
        };
        bidder.add_utility(u);
        utilities.push(u);
    }
    let tenth = steps / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    (mean(&utilities[..tenth]), mean(&utilities[steps - tenth..]))
}

#[test]
fn bandit_utility_improves() {
    let improved = (1..=5)
        .filter(|&seed| {
            let (first, last) = bandit(seed, 100_000);
            last > first
        })
        .count();
    assert!(improved >= 4, "{improved}/5 seeds improved");
}

#[test]
fn passive_actions_are_constant() {
    let mut b = Bidder::new(agent_cfg(30.0, false), LearningConfig::default(), scales(30.0), derive_stream(1, "agent/0"));
    for i in 0..50 {
        let prev = vec![if i % 2 == 0 { None } else { Some(i as f64) }];
        let d = b.decide(request(), ENV, prev).unwrap();
        let a = d.actions[0];
        assert!(a.submit && a.backoff == 1.0 && a.backoff_ms == 0);
        assert_eq!(a.price, 20.0);
        b.add_utility(-1.0);
    }
    assert!(b.last_diagnostics().is_none());
}

proptest! {
    #[test]
    fn prices_stay_within_budget(raw_b in -50.0f64..50.0, raw_p in -50.0f64..50.0, budget in 0.1f64..500.0) {
        let s = squash(raw_b, raw_p, budget);
        prop_assert!((0.0..=budget).contains(&s.price));
        prop_assert!((0.0..=1.0).contains(&s.backoff));
    }

    #[test]
    fn active_prices_stay_within_budget(seed in 0u64..200, budget in 1.0f64..200.0) {
        let mut b = Bidder::new(agent_cfg(budget, true), LearningConfig::default(), scales(budget), derive_stream(seed, "agent/0"));
        for _ in 0..20 {
            let d = b.decide(request(), ENV, vec![None]).unwrap();
            prop_assert!(d.actions.iter().all(|a| a.price >= 0.0 && a.price <= budget));
            b.add_utility(1.0);
        }
    }

    #[test]
    fn total_is_sum_plus_utilization_term(
        per_type in prop::collection::vec(-50.0f64..50.0, 0..6),
        beta in 0.0f64..1.0,
        w in 0.0f64..3.0,
    ) {
        let sum: f64 = per_type.iter().sum();
        prop_assert_eq!(utility_total(&per_type, beta, w), sum + w * (1.0 - beta));
    }
}
