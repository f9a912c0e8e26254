//! The acceptance gate. Runs every criterion, prints one line each, and
//! exits non-zero if any fails. The end-to-end criteria train real bidders
//! and dominate the runtime.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use offload_core::agent::{
    actor_forward, critic_grad, log_policy_grad, policy_from_raw, sample_action, Approximator, FspSchedule, Mlp,
};
use offload_core::auction::{clear_auction, Bid};
use offload_core::gametheory::{
    allocation_stats, best_response_curve, check_potential_identity, fit_allocation_rule, fit_line, interior_points,
    pareto_fairness_check, BestResponseSetup, StaticGame, StaticPlayer, ValuationMap,
};
use offload_core::scenario::{
    evaluate, prepare, run_scenario, train, RunOptions, RunSummary, ScenarioConfig, Seeds,
};
use offload_core::sim::{derive_stream, RunTrace, SimTime};
use offload_core::workload::{mmpp_next_arrival, throughput_at, MmppParams, MmppState, Regime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// 1 ------------------------------------------------------------------------

fn potential_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=5);
        let types = rng.random_range(1..=3);
        let players: Vec<StaticPlayer> = (0..n)
            .map(|_| StaticPlayer {
                q: (0..types).map(|_| rng.random_range(0.0..3.0)).collect(),
                omega: (0..types).map(|_| rng.random_range(0.1..5.0)).collect(),
                v: (0..types).map(|_| rng.random_range(0.0..10.0)).collect(),
                c: rng.random_range(0.0..2.0),
                budget: 20.0,
            })
            .collect();
        let game = StaticGame::low_contention(players, rng.random_range(1.0..50.0), rng.random_range(0.0..5.0));
        let alpha: Vec<Vec<u8>> = (0..n).map(|_| (0..types).map(|_| rng.random_range(0..=1)).collect()).collect();
        let deviator = rng.random_range(0..n);
        let new_alpha: Vec<u8> = (0..types).map(|_| rng.random_range(0..=1)).collect();
        let (pass, residual) = check_potential_identity(&game, &alpha, deviator, &new_alpha);
        ok += usize::from(pass);
        worst = worst.max(residual);
    }
    outcome(ok == 1000, format!("{ok}/1000 deviations, max residual {worst:.2e}"))
}

// 2 ------------------------------------------------------------------------

const GRID: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// Straight sort-and-slice clearing of one type: who must win, who competes
/// at the boundary price, how many boundary winners, and the payment.
fn brute_force_type(prices: &[(usize, f64)], n: usize) -> (Vec<usize>, Vec<usize>, usize, f64) {
    let mut sorted: Vec<f64> = prices.iter().map(|p| p.1).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if prices.len() <= n {
        return (prices.iter().map(|p| p.0).collect(), vec![], 0, 0.0);
    }
    if n == 0 {
        return (vec![], vec![], 0, sorted[0]);
    }
    let cut = sorted[n - 1];
    let sure: Vec<usize> = prices.iter().filter(|p| p.1 > cut).map(|p| p.0).collect();
    let boundary: Vec<usize> = prices.iter().filter(|p| p.1 == cut).map(|p| p.0).collect();
    (sure.clone(), boundary, n - sure.len(), sorted[n])
}

fn auction_grid(bidders: usize, types: usize) -> Result<usize, String> {
    let combos = GRID.len().pow((bidders * types) as u32);
    let mut rng = derive_stream(5, "auction");
    let mut checked = 0;
    for code in 0..combos {
        let mut c = code;
        let mut bids = Vec::with_capacity(bidders * types);
        for b in 0..bidders {
            for k in 0..types {
                bids.push(Bid {
                    request_id: (b * types + k) as u64,
                    bidder: b,
                    service_type: k,
                    price: GRID[c % GRID.len()],
                    resource_estimate: 1.0,
                    deadline: SimTime::from_ms(50),
                    rebid_count: 0,
                    created: SimTime::ZERO,
                });
                c /= GRID.len();
            }
        }
        for n in 0..=3u32 {
            // Slot counts differ across types so every type sees every count.
            let slots: BTreeMap<usize, u32> = (0..types).map(|k| (k, (n + k as u32) % 4)).collect();
            let out = clear_auction(SimTime::ZERO, &bids, &slots, &mut rng).map_err(|e| e.to_string())?;
            for k in 0..types {
                let prices: Vec<(usize, f64)> =
                    bids.iter().filter(|b| b.service_type == k).map(|b| (b.bidder, b.price)).collect();
                let (sure, boundary, room, payment) = brute_force_type(&prices, slots[&k] as usize);
                let got = &out.per_type[&k];
                let from_boundary = got.winners.iter().filter(|w| boundary.contains(w)).count();
                let ok = sure.iter().all(|s| got.winners.contains(s))
                    && got.winners.iter().all(|w| sure.contains(w) || boundary.contains(w))
                    && from_boundary == room
                    && got.winners.len() == sure.len() + room
                    && got.payment == payment;
                if !ok {
                    return Err(format!("mismatch on {bids:?} slots {slots:?}"));
                }
                checked += 1;
            }
        }
    }
    Ok(checked)
}

fn auction_equivalence() -> Outcome {
    // Types clear independently, so one type is covered exhaustively up to
    // five bidders and the joint grid as far as 4^9 price assignments.
    let shapes = [(1, 1), (2, 1), (3, 1), (4, 1), (5, 1), (1, 2), (2, 2), (3, 2), (4, 2), (1, 3), (2, 3), (3, 3)];
    let mut total = 0;
    for (bidders, types) in shapes {
        match auction_grid(bidders, types) {
            Ok(n) => total += n,
            Err(e) => return outcome(false, e),
        }
    }
    outcome(true, format!("{total} type clearings match"))
}

// 3, 4 ---------------------------------------------------------------------

fn truthful_best_response() -> Outcome {
    let setup = BestResponseSetup {
        v1_low: 0.0,
        v1_high: 10.0,
        bid_low: 0.0,
        bid_high: 10.0,
        lost_cost: 0.0,
        budget: None,
        valuations: BestResponseSetup::linspace(0.5, 9.5, 50),
        prices: BestResponseSetup::linspace(0.0, 12.0, 241),
        nodes: 2000,
    };
    let step = setup.price_step();
    let curve = best_response_curve(&setup);
    let worst = curve.iter().map(|p| (p.bid - p.valuation).abs()).fold(0.0, f64::max);
    outcome(curve.len() == 50 && worst <= step + 1e-9, format!("max |b − v| {worst:.4}, grid step {step:.4}"))
}

fn linear_best_response() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst: f64 = 1.0;
    let mut ok = 0;
    for _ in 0..20 {
        let v1_low = rng.random_range(0.0..3.0);
        let v1_high = v1_low + rng.random_range(5.0..15.0);
        let bid_low = rng.random_range(0.0..2.0);
        let bid_high = bid_low + rng.random_range(5.0..15.0);
        let cost = rng.random_range(0.1..2.0);
        let setup = BestResponseSetup {
            v1_low,
            v1_high,
            bid_low,
            bid_high,
            lost_cost: cost,
            budget: None,
            valuations: BestResponseSetup::linspace(bid_low, bid_high, 60),
            prices: BestResponseSetup::linspace(0.0, bid_high + 2.0 * cost + 2.0, 300),
            nodes: 2000,
        };
        let curve = best_response_curve(&setup);
        let inner = interior_points(&setup, &curve);
        let r2 = fit_line(&inner).map_or(0.0, |f| f.r_squared);
        ok += usize::from(inner.len() >= 10 && r2 >= 0.99);
        worst = worst.min(r2);
    }
    outcome(ok == 20, format!("{ok}/20 fits, min R² {worst:.5}"))
}

// 5 ------------------------------------------------------------------------

fn fairness_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: f64 = 1.0;
    let mut ok = 0;
    for _ in 0..100 {
        let n = rng.random_range(10..=40);
        // Resource demands on a coarse grid.
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.random_range(1..=10) as f64, rng.random_range(1..=10) as f64))
            .collect();
        // A fairness target that some ratio rule reaches exactly.
        let kappa = rng.random_range(0.5..2.0);
        let reference: Vec<bool> = samples.iter().map(|s| s.0 >= kappa * s.1).collect();
        let stats = allocation_stats(&samples, &reference);
        if stats.wins1 == 0 || stats.wins1 == n {
            ok += 1;
            continue;
        }
        let map = ValuationMap {
            g1: rng.random_range(0.5..2.0),
            k1: rng.random_range(0.0..2.0),
            g2: rng.random_range(0.5..2.0),
            k2: rng.random_range(0.0..2.0),
        };
        let rule = match fit_allocation_rule(&samples, stats.ratio, 0.02, &map, 1.0, 0.0) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("rule: {e}")),
        };
        match pareto_fairness_check(&rule, &samples, &map, 0.02, 0.01) {
            Ok(report) => {
                ok += usize::from(report.pass);
                worst = worst.min(report.efficiency);
            }
            Err(e) => return outcome(false, format!("check: {e}")),
        }
    }
    outcome(ok == 100, format!("{ok}/100 instances, min efficiency {worst:.4}"))
}

// 6 ------------------------------------------------------------------------

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn finite_difference(net: &Mlp, f: impl Fn(&Mlp) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let mut probe = net.clone();
    (0..net.params().len())
        .map(|i| {
            let p = probe.params()[i];
            probe.params_mut()[i] = p + h;
            let up = f(&probe);
            probe.params_mut()[i] = p - h;
            let down = f(&probe);
            probe.params_mut()[i] = p;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn gradient_checks() -> Outcome {
    let dim = 2;
    let input = 6;
    let mut worst_pi: f64 = 0.0;
    let mut worst_v: f64 = 0.0;
    for case in 0..100u64 {
        let mut rng = derive_stream(case, "agent/0");
        let actor = Mlp::new(&[input, 5, dim + dim * (dim + 1) / 2], 0.5, &[], &mut rng);
        let critic = Mlp::new(&[input, 5, 1], 0.5, &[], &mut rng);
        let window: Vec<f64> = (0..input).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let policy = actor_forward(&actor, &window, dim);
        let x = sample_action(&policy, &mut rng);
        let dims: Vec<usize> = if case % 3 == 0 { vec![1] } else { vec![0, 1] };
        let (_, g) = log_policy_grad(&actor, &window, dim, &x, &dims);
        let fd = finite_difference(&actor, |a| log_policy_grad(a, &window, dim, &x, &dims).0);
        worst_pi = worst_pi.max(relative_error(&g, &fd));
        let (_, gv) = critic_grad(&critic, &window);
        let fdv = finite_difference(&critic, |c| critic_grad(c, &window).0);
        worst_v = worst_v.max(relative_error(&gv, &fdv));
    }
    outcome(
        worst_pi <= 1e-4 && worst_v <= 1e-4,
        format!("max relative error ∇ln π {worst_pi:.2e}, ∇V {worst_v:.2e}"),
    )
}

// 7 ------------------------------------------------------------------------

fn sampler_covariance() -> Outcome {
    let dim = 3;
    let n = 100_000;
    let mut worst: f64 = 0.0;
    for case in 0..10u64 {
        let mut rng = derive_stream(700 + case, "agent/0");
        let raw: Vec<f64> = (0..dim + dim * (dim + 1) / 2).map(|_| rng.uniform() * 2.0 - 1.0).collect();
        let policy = policy_from_raw(&raw, dim);
        let target = policy.covariance();
        let mut sum = vec![0.0; dim];
        let mut cross = vec![0.0; dim * dim];
        for _ in 0..n {
            let x = sample_action(&policy, &mut rng);
            for i in 0..dim {
                sum[i] += x[i];
                for j in 0..dim {
                    cross[i * dim + j] += x[i] * x[j];
                }
            }
        }
        let nf = n as f64;
        for i in 0..dim {
            for j in 0..dim {
                let cov = (cross[i * dim + j] - sum[i] * sum[j] / nf) / (nf - 1.0);
                worst = worst.max((cov - target[i * dim + j]).abs());
            }
        }
    }
    outcome(worst <= 0.05, format!("max entry error {worst:.4}"))
}

// 8 ------------------------------------------------------------------------

fn fsp_mixing() -> Outcome {
    let t_max = 10_000u64;
    let mut rng = derive_stream(8, "agent/0");
    let picks = (1..=t_max).filter(|&t| FspSchedule::STRICT.pick_best_response(t, &mut rng)).count() as f64;
    let harmonic: f64 = (1..=t_max).map(|t| 1.0 / t as f64).sum();
    let var: f64 = (1..=t_max).map(|t| 1.0 / t as f64 * (1.0 - 1.0 / t as f64)).sum();
    let z = (picks - harmonic) / var.sqrt();
    outcome(z.abs() <= 3.0, format!("{picks} picks vs H(T) = {harmonic:.3}, z = {z:.2}"))
}

// 9 ------------------------------------------------------------------------

fn ks_exponential(mut gaps: Vec<f64>, lambda: f64) -> f64 {
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len() as f64;
    gaps.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = 1.0 - (-lambda * x).exp();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn mmpp_checks() -> Outcome {
    let params = MmppParams { p_high: 0.3, p_low: 0.3, ..MmppParams::default() };
    let mut rng = derive_stream(9, "vehicle/0/arrivals");
    let mut state = MmppState::sample_for_vehicle(&params, &mut rng);
    let epochs = 100_000;
    let mut high = 0;
    for _ in 0..epochs {
        state.advance_epoch(&mut rng);
        high += usize::from(state.regime == Regime::High);
    }
    let occupancy = high as f64 / epochs as f64;

    // Kolmogorov critical value at significance 0.001.
    let n = 10_000;
    let critical = 1.9495 / (n as f64).sqrt();
    let mut worst_d: f64 = 0.0;
    for (regime, rate) in [(Regime::High, 40.0), (Regime::Low, 5.0)] {
        let fixed = MmppParams {
            lambda_high_per_s: (rate, rate),
            lambda_low_per_s: (rate, rate),
            p_high: 0.0,
            p_low: 0.0,
            epoch_ms: 1000,
        };
        let mut rng = derive_stream(19, "vehicle/1/arrivals");
        let mut s = MmppState::sample_for_vehicle(&fixed, &mut rng);
        s.regime = regime;
        let mut gaps = Vec::with_capacity(n);
        for _ in 0..n {
            let (gap, next) = mmpp_next_arrival(&s, &mut rng, f64::INFINITY);
            gaps.push(gap);
            s = next;
        }
        worst_d = worst_d.max(ks_exponential(gaps, rate / 1000.0));
    }
    outcome(
        (occupancy - 0.5).abs() <= 0.05 && worst_d < critical,
        format!("High occupancy {occupancy:.4}, KS D {worst_d:.4} < {critical:.4}"),
    )
}

// 10 -----------------------------------------------------------------------

fn latency_values() -> Outcome {
    let got = [throughput_at(0.0, 1), throughput_at(65.0, 1), throughput_at(25.0, 4)];
    let pass = got == [Ok(1690.0), Ok(0.0), Ok(260.0)];
    outcome(pass, format!("{got:?}"))
}

// 11 -----------------------------------------------------------------------

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    let text = std::fs::read_to_string(scenario_dir().join(name)).expect("scenario file");
    let mut cfg = ScenarioConfig::from_toml(&text).expect("scenario parses");
    if let Some(path) = cfg.fleet.mobility_trace.as_mut() {
        if path.is_relative() {
            *path = scenario_dir().join(&*path);
        }
    }
    cfg.validate().expect("scenario validates");
    cfg
}

fn trace_csv(cfg: &ScenarioConfig, seed: u64) -> String {
    let seeds = Seeds::from_seed(seed);
    let prepared = prepare(cfg, seeds).expect("prepare");
    let mut trace = RunTrace::default();
    run_scenario(cfg, &prepared, seeds, None, RunOptions::default(), &mut trace).expect("run");
    trace.to_csv()
}

fn determinism() -> Outcome {
    let mut checked = Vec::new();
    for name in ["synthetic.toml", "junction.toml"] {
        let mut cfg = load(name);
        cfg.duration_ms = cfg.duration_ms.min(5_000);
        let a = trace_csv(&cfg, cfg.seed);
        let b = trace_csv(&cfg, cfg.seed);
        if a != b {
            return outcome(false, format!("{name}: traces differ"));
        }
        checked.push(format!("{name} {} rows", a.lines().count() - 1));
    }
    outcome(true, checked.join(", "))
}

// 12, 13 -------------------------------------------------------------------

const SEEDS: u64 = 5;
const CAPACITIES: [f64; 3] = [20.0, 35.0, 50.0];

fn with_capacity(cfg: &ScenarioConfig, capacity: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    for s in &mut c.sites {
        s.capacity = capacity;
    }
    c
}

/// Trains on the run's own workload, then evaluates the frozen models and
/// the passive baseline on a fresh workload with the same fleet.
fn train_and_compare(train_cfg: &ScenarioConfig, eval_cfg: &ScenarioConfig, seed: u64) -> (RunSummary, RunSummary, offload_core::scenario::ModelFile) {
    let (models, _) = train(train_cfg, Seeds::from_seed(seed), false).expect("training");
    let (active, passive) = compare_frozen(eval_cfg, seed, &models);
    (active, passive, models)
}

fn compare_frozen(cfg: &ScenarioConfig, seed: u64, models: &offload_core::scenario::ModelFile) -> (RunSummary, RunSummary) {
    let seeds = Seeds::for_evaluation(seed);
    let prepared = prepare(cfg, seeds).expect("prepare");
    let by_bidder = models.by_bidder();
    let (active, _) = evaluate(cfg, &prepared, seeds, Some(&by_bidder), true).expect("active evaluation");
    let (passive, _) = evaluate(cfg, &prepared, seeds, None, false).expect("passive evaluation");
    (active, passive)
}

fn remote_std(s: &RunSummary, site: usize) -> f64 {
    s.utilization.iter().find(|u| u.site == site).map_or(f64::NAN, |u| u.std)
}

struct EndToEnd {
    ofr: Outcome,
    rebids: Outcome,
    remote: Outcome,
    generalization: Outcome,
}

fn end_to_end() -> EndToEnd {
    let base = load("acceptance.toml");
    let mut train_base = base.clone();
    // Training stops on the decision budget; the duration only caps it.
    train_base.duration_ms = 3_600_000;
    // The last configured site is the remote one.
    let remote = base.sites.len() - 1;
    let remote_site = base.sites[remote].site_id.clone();
    let high_contention = CAPACITIES[0];
    let low_contention = CAPACITIES[CAPACITIES.len() - 1];

    let mut ofr_lines = Vec::new();
    let mut ofr_pass = true;
    let mut remote_wins = 0;
    let mut remote_line = Vec::new();
    let mut low_models = Vec::new();
    for &cap in &CAPACITIES {
        let mut wins = 0;
        let mut pairs = Vec::new();
        for seed in 1..=SEEDS {
            let (a, p, models) = train_and_compare(&with_capacity(&train_base, cap), &with_capacity(&base, cap), seed);
            wins += usize::from(a.ofr <= p.ofr);
            pairs.push(format!("{:.4}/{:.4}", a.ofr, p.ofr));
            if cap == high_contention {
                let (sa, sp) = (remote_std(&a, remote), remote_std(&p, remote));
                remote_wins += usize::from(sa < sp);
                remote_line.push(format!("{sa:.4}/{sp:.4}"));
            }
            if cap == low_contention {
                low_models.push(models);
            }
        }
        ofr_pass &= wins >= 4;
        ofr_lines.push(format!("cap {cap}: {wins}/5 [{}]", pairs.join(" ")));
    }

    let mut rebid_wins = 0;
    let mut rebid_line = Vec::new();
    let mut mp5_train = with_capacity(&train_base, high_contention);
    mp5_train.max_rebids = 5;
    let mut mp5_eval = with_capacity(&base, high_contention);
    mp5_eval.max_rebids = 5;
    for seed in 1..=SEEDS {
        let (a, p, _) = train_and_compare(&mp5_train, &mp5_eval, seed);
        rebid_wins += usize::from(a.rebids.mean < p.rebids.mean);
        rebid_line.push(format!("{:.3}/{:.3}", a.rebids.mean, p.rebids.mean));
    }

    // Low-contention models under halved capacity and doubled arrivals.
    let mut stressed = with_capacity(&base, low_contention / 2.0);
    stressed.arrivals.scale *= 2.0;
    let mut gen_wins = 0;
    let mut gen_line = Vec::new();
    for (seed, models) in (1..=SEEDS).zip(&low_models) {
        let (a, p) = compare_frozen(&stressed, seed, models);
        gen_wins += usize::from(a.ofr <= p.ofr);
        gen_line.push(format!("{:.4}/{:.4}", a.ofr, p.ofr));
    }

    EndToEnd {
        ofr: outcome(ofr_pass, format!("(a) active/passive OFR {}", ofr_lines.join("; "))),
        rebids: outcome(rebid_wins >= 4, format!("(b) MP=5 mean rebids {rebid_wins}/5 [{}]", rebid_line.join(" "))),
        remote: outcome(
            remote_wins >= 4,
            format!("(c) {remote_site} utilization std at cap {high_contention} {remote_wins}/5 [{}]", remote_line.join(" ")),
        ),
        generalization: outcome(gen_wins >= 3, format!("OFR at cap {} with doubled arrivals {gen_wins}/5 [{}]", low_contention / 2.0, gen_line.join(" "))),
    }
}

fn report(n: usize, name: &str, started: Instant, o: &Outcome) -> bool {
    println!(
        "criterion {n:>2}: {} {name} ({:.1}s) {}",
        if o.pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        o.detail
    );
    o.pass
}

fn main() {
    // `cargo test -- --list` and filters from the test harness.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let quick = std::env::var_os("ACCEPTANCE_SKIP_END_TO_END").is_some();

    let fast: [(&str, fn() -> Outcome); 11] = [
        ("potential identity", potential_identity),
        ("auction oracle equivalence", auction_equivalence),
        ("truthful best response", truthful_best_response),
        ("linear best response", linear_best_response),
        ("fairness-constrained optimality", fairness_optimality),
        ("policy and value gradients", gradient_checks),
        ("gaussian sampler covariance", sampler_covariance),
        ("fsp mixing count", fsp_mixing),
        ("mmpp occupancy and interarrivals", mmpp_checks),
        ("latency model", latency_values),
        ("determinism", determinism),
    ];
    let mut all = true;
    for (i, (name, check)) in fast.iter().enumerate() {
        let t = Instant::now();
        all &= report(i + 1, name, t, &check());
    }
    if quick {
        println!("criteria 12-13 skipped (ACCEPTANCE_SKIP_END_TO_END set)");
        std::process::exit(if all { 0 } else { 1 });
    }
    let t = Instant::now();
    let e2e = end_to_end();
    all &= report(12, "end-to-end directional", t, &e2e.ofr);
    all &= report(12, "end-to-end directional", t, &e2e.rebids);
    all &= report(12, "end-to-end directional", t, &e2e.remote);
    all &= report(13, "generalization", t, &e2e.generalization);
    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILED" });
    if !all {
        std::process::exit(1);
    }
}
