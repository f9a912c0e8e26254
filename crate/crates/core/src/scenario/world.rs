use std::collections::{BTreeMap, HashMap, VecDeque};

use rand_distr::{Distribution, Normal};

use super::config::ScenarioConfig;
use super::model::AgentModel;
use crate::agent::{utility_per_type, AgentConfig, Bidder, EnvView, FeatureScales, RequestView};
use crate::auction::{clear_auction, Bid};
use crate::operator::{
    admit, compute_slots, report_utilization, Aca, AdmissionReason, Finished, Job, JobEnd, ReportNoise, Site,
    UtilizationReport,
};
use crate::sim::{
    derive_stream, Engine, Event, EventKind, EventPayload, Handler, RngStream, SimTime, TraceRow, TraceSink,
};
use crate::workload::{mmpp_next_arrival, throughput_at, transmission_delay, Catalog, MmppState, MobilityIndex};

/// Seeds of one run. Workload and operator randomness come from
/// `workload`; budgets and initial policies from `fleet`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub workload: u64,
    pub fleet: u64,
}

#[derive(Debug, Clone)]
pub enum Ev {
    Arrival { vehicle: usize, service_type: usize, budget: &'static str },
    Clear,
    Dispatch { request: u64, site: usize },
    Complete { site: usize, generation: u64 },
    Expiry { request: u64, site: usize },
    Report(UtilizationReport),
    BackoffEnd { request: u64, vehicle: usize },
}

impl EventPayload for Ev {
    fn kind(&self) -> EventKind {
        match self {
            Ev::Arrival { .. } => EventKind::ServiceArrival,
            Ev::Clear => EventKind::AuctionClear,
            Ev::Dispatch { .. } => EventKind::AssignmentDispatch,
            Ev::Complete { .. } => EventKind::ExecutionComplete,
            Ev::Expiry { .. } => EventKind::DeadlineExpiry,
            Ev::Report(_) => EventKind::UtilizationReportArrival,
            Ev::BackoffEnd { .. } => EventKind::BackoffExpiry,
        }
    }

    fn entity(&self) -> String {
        match self {
            Ev::Arrival { vehicle, .. } | Ev::BackoffEnd { vehicle, .. } => format!("vehicle/{vehicle}"),
            Ev::Clear => "aca".into(),
            Ev::Dispatch { site, .. } | Ev::Complete { site, .. } | Ev::Expiry { site, .. } => format!("site/{site}"),
            Ev::Report(r) => format!("site/{}", r.site),
        }
    }

    fn describe(&self, attrs: &mut Vec<(String, String)>) {
        let mut put = |k: &str, v: String| attrs.push((k.to_string(), v));
        match self {
            Ev::Arrival { service_type, budget, .. } => {
                put("type", service_type.to_string());
                put("budget", budget.to_string());
            }
            Ev::Dispatch { request, .. } | Ev::Expiry { request, .. } | Ev::BackoffEnd { request, .. } => {
                put("request", request.to_string())
            }
            Ev::Complete { generation, .. } => put("generation", generation.to_string()),
            Ev::Report(r) => report_attrs(r, attrs),
            Ev::Clear => {}
        }
    }
}

fn report_attrs(r: &UtilizationReport, attrs: &mut Vec<(String, String)>) {
    attrs.push(("measured_at".into(), r.measured_at.as_ms().to_string()));
    attrs.push(("utilization".into(), r.utilization.to_string()));
    attrs.push(("true_utilization".into(), r.true_utilization.to_string()));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Queued,
    Ready,
    Backoff,
    /// Backoff over; bids at the next clear with the price chosen earlier.
    Armed,
    Bidding,
}

#[derive(Debug, Clone)]
struct Request {
    id: u64,
    vehicle: usize,
    service_type: usize,
    created: SimTime,
    deadline: SimTime,
    rebids: u32,
    stage: Stage,
    price: f64,
    valuation: f64,
    backoff_ms: u64,
    downlink_ms: u64,
    admitted: bool,
}

/// Terminal status of a request as recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalStatus {
    Success,
    Dropped,
    Rejected,
}

impl FinalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FinalStatus::Success => "success",
            FinalStatus::Dropped => "dropped",
            FinalStatus::Rejected => "rejected",
        }
    }
}

struct Vehicle {
    budget_level: &'static str,
    queues: Vec<VecDeque<u64>>,
    mmpp: Option<MmppState>,
    arrivals: RngStream,
    prices_prev: Vec<Option<f64>>,
}

/// One learning-diagnostics row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub time_ms: u64,
    pub bidder: usize,
    pub diagnostics: crate::agent::Diagnostics,
}

/// The simulated system: vehicles with their bidders, the admission and
/// assignment unit, and the computing sites.
pub struct World {
    cfg: ScenarioConfig,
    catalog: Catalog,
    pub sites: Vec<Site>,
    pub aca: Aca,
    pub bidders: Vec<Bidder>,
    vehicles: Vec<Vehicle>,
    requests: HashMap<u64, Request>,
    mobility: Option<MobilityIndex>,
    next_request: u64,
    auction_rng: RngStream,
    report_rngs: Vec<RngStream>,
    work_rngs: Vec<RngStream>,
    decisions: u64,
    admitted: Vec<(u64, usize)>,
    pub diagnostics: Option<Vec<DiagnosticsRow>>,
    pub error: Option<String>,
}

fn budget_level(cfg: &ScenarioConfig, fleet_seed: u64, i: usize) -> &'static str {
    let mut rng = derive_stream(fleet_seed, &format!("fleet/{i}/budget"));
    if rng.uniform() < cfg.agents.high_fraction {
        "high"
    } else {
        "low"
    }
}

impl World {
    /// Builds the world and schedules the initial events. `models`, when
    /// given, replaces the freshly initialized parameters of active bidders.
    pub fn new(
        cfg: &ScenarioConfig,
        catalog: Catalog,
        mobility: Option<MobilityIndex>,
        seeds: Seeds,
        models: Option<&[Option<AgentModel>]>,
        engine: &mut Engine<Ev>,
    ) -> World {
        let n = mobility.as_ref().map_or(cfg.fleet.vehicles, |m| m.vehicles().len());
        let k = catalog.len();
        let type_ids: Vec<String> = catalog.types().iter().map(|t| t.type_id.clone()).collect();
        let unit_cap = cfg.operator.unit_cap;
        let sites: Vec<Site> = cfg
            .sites
            .iter()
            .enumerate()
            .map(|(i, s)| Site::new(i, s.clone(), &type_ids, unit_cap))
            .collect();
        let aca = Aca::new(
            cfg.sites.iter().map(|s| s.capacity).collect(),
            cfg.operator.admission_horizon_ms,
            cfg.operator.price_exponent,
            unit_cap,
        );
        let scales = FeatureScales {
            types: k,
            max_units: catalog.max_units(),
            max_deadline_ms: catalog.max_deadline_ms() as f64,
            max_rebids: cfg.max_rebids as f64,
            budget: cfg.agents.budget_high,
            utility_scale: cfg.learning.utility_scale,
            roster: n as f64,
        };
        let mmpp = cfg.arrivals.scaled();
        let periodic = catalog.types().iter().all(|t| t.period_ms.is_some());
        let mut vehicles = Vec::with_capacity(n);
        let mut bidders = Vec::with_capacity(n);
        for i in 0..n {
            let level = budget_level(cfg, seeds.fleet, i);
            let a = &cfg.agents;
            let agent_cfg = AgentConfig {
                bidder: i,
                budget: if level == "high" { a.budget_high } else { a.budget_low },
                valuation_slope: a.valuation_slope,
                valuation_intercept: a.valuation_intercept,
                lost_bid_cost: a.lost_bid_cost,
                backoff_cost: a.backoff_cost,
                utilization_weight: a.utilization_weight,
                backoff_threshold: a.backoff_threshold,
                max_backoff_ms: a.max_backoff_ms,
                active: a.active,
            };
            let mut scales = scales;
            scales.budget = agent_cfg.budget;
            let mut bidder = Bidder::new(
                agent_cfg,
                cfg.learning.clone(),
                scales,
                derive_stream(seeds.fleet, &format!("agent/{i}")),
            );
            if let Some(m) = models.and_then(|ms| ms.get(i)).and_then(Option::as_ref) {
                if bidder.is_active() {
                    bidder.load(m.actor_critic.clone(), m.sl.clone());
                }
            }
            bidders.push(bidder);
            let mut arrivals = derive_stream(seeds.workload, &format!("vehicle/{i}/arrivals"));
            let state = (!periodic).then(|| MmppState::sample_for_vehicle(&mmpp, &mut arrivals));
            vehicles.push(Vehicle {
                budget_level: level,
                queues: vec![VecDeque::new(); k],
                mmpp: state,
                arrivals,
                prices_prev: vec![None; k],
            });
        }
        let report_rngs = cfg
            .sites
            .iter()
            .map(|s| derive_stream(seeds.workload, &format!("site/{}/report", s.site_id)))
            .collect();
        let work_rngs = cfg
            .sites
            .iter()
            .map(|s| derive_stream(seeds.workload, &format!("site/{}/work", s.site_id)))
            .collect();
        let mut world = World {
            cfg: cfg.clone(),
            catalog,
            sites,
            aca,
            bidders,
            vehicles,
            requests: HashMap::new(),
            mobility,
            next_request: 0,
            auction_rng: derive_stream(seeds.workload, "auction"),
            report_rngs,
            work_rngs,
            decisions: 0,
            admitted: Vec::new(),
            diagnostics: None,
            error: None,
        };
        for i in 0..n {
            if periodic {
                for t in 0..k {
                    let period = world.catalog.types()[t].period_ms.unwrap_or(1).max(1);
                    let phase = (world.vehicles[i].arrivals.uniform() * period as f64) as u64;
                    if let Some(at) = world.next_present(i, SimTime::from_ms(phase), period) {
                        let budget = world.vehicles[i].budget_level;
                        engine.schedule(at, Ev::Arrival { vehicle: i, service_type: t, budget }).expect("future");
                    }
                }
            } else {
                world.schedule_mmpp(i, engine);
            }
        }
        engine.schedule(SimTime::ZERO, Ev::Clear).expect("future");
        world
    }

    pub fn decisions(&self) -> u64 {
        self.decisions
    }

    pub fn freeze_all(&mut self) {
        for b in &mut self.bidders {
            b.freeze();
        }
    }

    fn present(&self, vehicle: usize, t: SimTime) -> bool {
        self.mobility.as_ref().is_none_or(|m| m.distance(vehicle, t).is_some())
    }

    fn present_count(&self, t: SimTime) -> usize {
        self.mobility.as_ref().map_or(self.vehicles.len(), |m| m.present_count(t))
    }

    /// First time at or after `from`, stepping by `period`, when the vehicle
    /// is in coverage; `None` past the run.
    fn next_present(&self, vehicle: usize, from: SimTime, period: u64) -> Option<SimTime> {
        let mut t = from;
        while t.as_ms() <= self.cfg.duration_ms {
            if self.present(vehicle, t) {
                return Some(t);
            }
            t = t + period;
        }
        None
    }

    fn schedule_mmpp(&mut self, i: usize, engine: &mut Engine<Ev>) {
        let cap = self.cfg.duration_ms as f64 + 1.0;
        let v = &mut self.vehicles[i];
        let Some(state) = v.mmpp.as_ref() else { return };
        let (gap, next) = mmpp_next_arrival(state, &mut v.arrivals, cap);
        v.mmpp = Some(next);
        let service_type = self.catalog.sample_index(&mut v.arrivals);
        let at = engine.now().after_ms_f64(gap);
        if at.as_ms() <= self.cfg.duration_ms {
            let budget = v.budget_level;
            engine.schedule(at, Ev::Arrival { vehicle: i, service_type, budget }).expect("future");
        }
    }

    fn nominal_units(&self, k: usize) -> f64 {
        self.catalog.types()[k].total_units()
    }

    fn final_row(&self, now: SimTime, kind: EventKind, r: &Request, status: FinalStatus) -> TraceRow {
        TraceRow::new(now.as_ms(), kind, format!("vehicle/{}", r.vehicle))
            .with("request", r.id)
            .with("type", r.service_type)
            .with("created", r.created.as_ms())
            .with("rebids", r.rebids)
            .with("admitted", u8::from(r.admitted))
            .with("final", status.as_str())
    }

    /// Closes a request that never reached a site, removing it from its
    /// vehicle's queue.
    fn finish_unplaced(&mut self, now: SimTime, id: u64, kind: EventKind, status: FinalStatus, trace: &mut dyn TraceSink) {
        let Some(r) = self.requests.remove(&id) else { return };
        let q = &mut self.vehicles[r.vehicle].queues[r.service_type];
        if let Some(pos) = q.iter().position(|&x| x == id) {
            q.remove(pos);
        }
        if status != FinalStatus::Success {
            self.bidders[r.vehicle].add_utility(-self.cfg.agents.failure_cost);
        }
        if trace.enabled() {
            trace.record(self.final_row(now, kind, &r, status));
        }
    }

    /// Serves site `s` up to `now`, settles finished jobs and schedules the
    /// next completion check.
    fn settle_site(&mut self, s: usize, now: SimTime, engine: &mut Engine<Ev>, trace: &mut dyn TraceSink) {
        let finished = self.sites[s].advance(now);
        for f in finished {
            self.settle_job(s, now, f, trace);
        }
        self.schedule_completion(s, engine);
    }

    fn schedule_completion(&mut self, s: usize, engine: &mut Engine<Ev>) {
        if let Some(t) = self.sites[s].next_completion() {
            let at = t.max(engine.now());
            let generation = self.sites[s].generation;
            engine.schedule(at, Ev::Complete { site: s, generation }).expect("future");
        }
    }

    fn settle_job(&mut self, s: usize, now: SimTime, f: Finished, trace: &mut dyn TraceSink) {
        let Some(r) = self.requests.remove(&f.job.request_id) else { return };
        let status = match f.end {
            JobEnd::Completed => {
                let rate = self.cfg.operator.estimate_rate;
                self.sites[s].learn(r.service_type, f.job.total_work(), rate);
                FinalStatus::Success
            }
            JobEnd::Dropped => {
                self.bidders[r.vehicle].add_utility(-self.cfg.agents.failure_cost);
                FinalStatus::Dropped
            }
        };
        if trace.enabled() {
            let kind = if status == FinalStatus::Success {
                EventKind::ExecutionComplete
            } else {
                EventKind::DeadlineExpiry
            };
            trace.record(self.final_row(now, kind, &r, status).with("site", s));
        }
    }

    fn measure(&mut self, now: SimTime, engine: &mut Engine<Ev>, trace: &mut dyn TraceSink) {
        let noise = ReportNoise {
            delay_sigma_ms: self.cfg.operator.delay_sigma_ms,
            util_sigma: self.cfg.operator.util_sigma,
        };
        for s in 0..self.sites.len() {
            self.settle_site(s, now, engine, trace);
            let report = report_utilization(&self.sites[s], now, noise, &mut self.report_rngs[s]);
            if report.arrives_at <= now {
                if trace.enabled() {
                    let mut row = TraceRow::new(now.as_ms(), EventKind::UtilizationReportArrival, format!("site/{s}"));
                    report_attrs(&report, &mut row.attrs);
                    trace.record(row);
                }
                self.aca.receive(report);
            } else {
                engine.schedule(report.arrives_at, Ev::Report(report)).expect("future");
            }
        }
    }

    /// Fails every waiting request whose deadline has passed.
    fn expire_waiting(&mut self, now: SimTime, trace: &mut dyn TraceSink) {
        let mut expired = Vec::new();
        for v in &self.vehicles {
            for q in &v.queues {
                for id in q {
                    if self.requests.get(id).is_some_and(|r| r.deadline <= now) {
                        expired.push(*id);
                    }
                }
            }
        }
        for id in expired {
            self.finish_unplaced(now, id, EventKind::DeadlineExpiry, FinalStatus::Dropped, trace);
        }
    }

    fn decide_all(&mut self, now: SimTime, engine: &mut Engine<Ev>) {
        let beta = self.aca.system_utilization();
        let env = EnvView {
            bidders: self.present_count(now),
            utilization: beta,
            phase: (now.as_ms() % 1000) as f64 / 1000.0,
        };
        for i in 0..self.vehicles.len() {
            let mut ready = Vec::new();
            for q in &self.vehicles[i].queues {
                let Some(&head) = q.front() else { continue };
                let r = self.requests.get_mut(&head).expect("queued request");
                if r.stage == Stage::Queued {
                    r.stage = Stage::Ready;
                }
                if r.stage == Stage::Ready {
                    ready.push(head);
                }
            }
            if ready.is_empty() {
                continue;
            }
            let views: Vec<RequestView> = ready
                .iter()
                .map(|id| {
                    let r = &self.requests[id];
                    RequestView {
                        service_type: r.service_type,
                        estimate: self.nominal_units(r.service_type),
                        remaining_ms: r.deadline.saturating_sub(now) as f64,
                        rebid_count: r.rebids,
                    }
                })
                .collect();
            let prices_prev = self.vehicles[i].prices_prev.clone();
            let decision = match self.bidders[i].decide(views.clone(), env, prices_prev.clone()) {
                Ok(d) => d,
                Err(e) => {
                    self.error.get_or_insert_with(|| format!("bidder {i}: {e}"));
                    self.bidders[i].freeze();
                    self.bidders[i].decide(views, env, prices_prev).expect("frozen bidders do not learn")
                }
            };
            if self.bidders[i].is_active() {
                self.decisions += 1;
                if let (Some(rows), Some(d)) = (self.diagnostics.as_mut(), self.bidders[i].last_diagnostics()) {
                    // Only steps whose decision closed a learning update.
                    if d.step == self.bidders[i].steps() {
                        rows.push(DiagnosticsRow { time_ms: now.as_ms(), bidder: i, diagnostics: d });
                    }
                }
            }
            for (id, a) in ready.iter().zip(&decision.actions) {
                let r = self.requests.get_mut(id).expect("ready request");
                r.price = a.price;
                r.valuation = a.valuation;
                if a.submit || a.backoff_ms == 0 {
                    r.stage = Stage::Bidding;
                    r.backoff_ms = 0;
                } else {
                    r.stage = Stage::Backoff;
                    r.backoff_ms = a.backoff_ms;
                    let q = self.cfg.agents.backoff_cost;
                    self.bidders[i].add_utility(utility_per_type(false, a.valuation, 0.0, 0.0, q, false));
                    engine.schedule_in(a.backoff_ms, Ev::BackoffEnd { request: *id, vehicle: i });
                }
            }
        }
    }

    fn uplink_ms(&self, r: &Request, now: SimTime) -> Result<(u64, u64), ()> {
        let Some(m) = &self.mobility else { return Ok((0, 0)) };
        let spec = &self.catalog.types()[r.service_type];
        let d = m.distance(r.vehicle, now).ok_or(())?;
        let sharing = m.present_count(now).max(1) as u32;
        let rate = throughput_at(d.min(crate::workload::COVERAGE_RADIUS_M), sharing).map_err(|_| ())?;
        let up = transmission_delay(spec.uplink_bits, rate).map_err(|_| ())?;
        let down = transmission_delay(spec.downlink_bits, rate).map_err(|_| ())?;
        Ok((up, down))
    }

    fn clear(&mut self, now: SimTime, engine: &mut Engine<Ev>, trace: &mut dyn TraceSink) {
        if now.as_ms() % self.cfg.operator.report_interval_ms == 0 {
            self.measure(now, engine, trace);
        }
        self.expire_waiting(now, trace);
        self.decide_all(now, engine);

        let mut ids: Vec<u64> = Vec::new();
        for v in &self.vehicles {
            for q in &v.queues {
                if let Some(&head) = q.front() {
                    if matches!(self.requests[&head].stage, Stage::Bidding | Stage::Armed) {
                        ids.push(head);
                    }
                }
            }
        }
        if !ids.is_empty() {
            self.run_auction(now, ids, trace);
        }
        let beta = self.aca.system_utilization();
        for b in &mut self.bidders {
            b.note_utilization(beta);
        }
        engine.schedule_in(self.cfg.operator.auction_interval_ms, Ev::Clear);
        self.pending_dispatches(now, engine, trace);
    }

    fn run_auction(&mut self, now: SimTime, ids: Vec<u64>, trace: &mut dyn TraceSink) {
        let mut bids: Vec<Bid> = ids
            .iter()
            .map(|id| {
                let r = &self.requests[id];
                Bid {
                    request_id: r.id,
                    bidder: r.vehicle,
                    service_type: r.service_type,
                    price: r.price,
                    resource_estimate: self.nominal_units(r.service_type),
                    deadline: r.deadline,
                    rebid_count: r.rebids,
                    created: r.created,
                }
            })
            .collect();
        if trace.enabled() {
            for b in &bids {
                let r = &self.requests[&b.request_id];
                trace.record(
                    TraceRow::new(now.as_ms(), EventKind::BidSubmission, format!("vehicle/{}", b.bidder))
                        .with("request", b.request_id)
                        .with("type", b.service_type)
                        .with("price", b.price)
                        .with("backoff_ms", r.backoff_ms)
                        .with("deadline_ms", self.catalog.types()[b.service_type].deadline_ms)
                        .with("rebids", b.rebid_count),
                );
            }
        }
        let mut estimates = BTreeMap::new();
        for b in &bids {
            estimates
                .entry(b.service_type)
                .or_insert_with(|| Aca::demand_estimate(&self.sites, b.service_type, b.resource_estimate));
        }
        let slots = compute_slots(&self.aca.believed_free(), &estimates);
        let outcome = clear_auction(now, &bids, &slots, &mut self.auction_rng).expect("bids are well formed");
        if trace.enabled() {
            for (k, c) in &outcome.per_type {
                let winners: Vec<String> = c.winners.iter().map(|w| format!("v{w}")).collect();
                trace.record(
                    TraceRow::new(now.as_ms(), EventKind::AuctionClear, format!("type/{}", self.catalog.types()[*k].type_id))
                        .with("slots", c.slots)
                        .with("bids", c.bid_count)
                        .with("winners", winners.join("|"))
                        .with("payment", c.payment),
                );
            }
        }
        // Passive bidders carry a constant priority, so among them the ACA
        // falls back to arrival order.
        let priority = |b: &Bid| if self.bidders[b.bidder].is_active() { b.price } else { 0.0 };
        bids.sort_by(|a, b| {
            priority(b)
                .total_cmp(&priority(a))
                .then(a.created.cmp(&b.created))
                .then(a.request_id.cmp(&b.request_id))
        });
        let mut decisions = admit(&bids, &outcome);
        self.aca.update_prices(&mut self.sites);
        self.aca.assign(now, &mut decisions, &bids, &self.sites);

        let mp = self.cfg.max_rebids;
        for d in decisions {
            let payment = outcome.payment(d.service_type).unwrap_or(0.0);
            let (vehicle, k) = (d.bidder, d.service_type);
            self.vehicles[vehicle].prices_prev[k] = Some(payment);
            let (valuation, rebids, deadline) = {
                let r = &self.requests[&d.request_id];
                (r.valuation, r.rebids, r.deadline)
            };
            let a = &self.cfg.agents;
            let u = utility_per_type(d.admitted, valuation, payment, a.lost_bid_cost, a.backoff_cost, true);
            self.bidders[vehicle].add_utility(u);
            let outcome_label = match d.reason {
                AdmissionReason::Won => "won",
                AdmissionReason::NoSlot => "noslot",
                AdmissionReason::Rejected => "rejected",
            };
            if trace.enabled() {
                let mut row = TraceRow::new(now.as_ms(), EventKind::FeedbackDelivery, format!("vehicle/{vehicle}"))
                    .with("request", d.request_id)
                    .with("type", k)
                    .with("outcome", outcome_label)
                    .with("payment", payment);
                if let Some(s) = d.assigned_site {
                    row = row.with("site", s);
                }
                trace.record(row);
            }
            if let Some(s) = d.assigned_site {
                let r = self.requests.get_mut(&d.request_id).expect("bid request");
                r.admitted = true;
                let q = &mut self.vehicles[vehicle].queues[k];
                debug_assert_eq!(q.front(), Some(&d.request_id));
                q.pop_front();
                self.admitted.push((d.request_id, s));
            } else if rebids < mp && deadline > now {
                let r = self.requests.get_mut(&d.request_id).expect("bid request");
                r.rebids += 1;
                r.stage = Stage::Ready;
            } else {
                self.finish_unplaced(now, d.request_id, EventKind::FeedbackDelivery, FinalStatus::Rejected, trace);
            }
        }
    }

    fn pending_dispatches(&mut self, now: SimTime, engine: &mut Engine<Ev>, trace: &mut dyn TraceSink) {
        for (id, s) in std::mem::take(&mut self.admitted) {
            let r = &self.requests[&id];
            match self.uplink_ms(r, now) {
                Ok((up, down)) => {
                    self.requests.get_mut(&id).expect("admitted").downlink_ms = down;
                    engine.schedule_in(up, Ev::Dispatch { request: id, site: s });
                }
                Err(()) => {
                    let r = self.requests.remove(&id).expect("admitted");
                    self.bidders[r.vehicle].add_utility(-self.cfg.agents.failure_cost);
                    if trace.enabled() {
                        trace.record(self.final_row(now, EventKind::AssignmentDispatch, &r, FinalStatus::Dropped).with("reason", "coverage"));
                    }
                }
            }
        }
    }

    fn dispatch(&mut self, now: SimTime, id: u64, s: usize, engine: &mut Engine<Ev>, trace: &mut dyn TraceSink) {
        self.settle_site(s, now, engine, trace);
        let Some(r) = self.requests.get(&id) else { return };
        // The result still has to travel back before the deadline.
        let site_deadline = SimTime::from_ms(r.deadline.as_ms().saturating_sub(r.downlink_ms));
        if now >= site_deadline {
            let r = self.requests.remove(&id).expect("present");
            self.bidders[r.vehicle].add_utility(-self.cfg.agents.failure_cost);
            if trace.enabled() {
                trace.record(self.final_row(now, EventKind::DeadlineExpiry, &r, FinalStatus::Dropped).with("site", s));
            }
            return;
        }
        let spec = &self.catalog.types()[r.service_type];
        let mult = self.sites[s].multipliers[r.service_type];
        let sigma = self.cfg.operator.work_sigma;
        let rng = &mut self.work_rngs[s];
        let work: Vec<f64> = spec
            .task_chain
            .iter()
            .map(|t| {
                let noise = if sigma > 0.0 { Normal::new(0.0, sigma).expect("finite").sample(rng) } else { 0.0 };
                t.resource_units * mult * (1.0 + noise).max(0.1)
            })
            .collect();
        let job = Job::new(id, r.vehicle, r.service_type, work, site_deadline, now);
        self.sites[s].start(now, job);
        engine.schedule(site_deadline, Ev::Expiry { request: id, site: s }).expect("future");
        self.schedule_completion(s, engine);
    }

    fn arrival(&mut self, now: SimTime, vehicle: usize, k: usize, engine: &mut Engine<Ev>) {
        let spec = &self.catalog.types()[k];
        if let Some(period) = spec.period_ms {
            if let Some(at) = self.next_present(vehicle, now + period, period) {
                let budget = self.vehicles[vehicle].budget_level;
                engine.schedule(at, Ev::Arrival { vehicle, service_type: k, budget }).expect("future");
            }
        } else {
            self.schedule_mmpp(vehicle, engine);
        }
        if !self.present(vehicle, now) {
            return;
        }
        let id = self.next_request;
        self.next_request += 1;
        let deadline = now + self.catalog.types()[k].deadline_ms;
        self.requests.insert(
            id,
            Request {
                id,
                vehicle,
                service_type: k,
                created: now,
                deadline,
                rebids: 0,
                stage: Stage::Queued,
                price: 0.0,
                valuation: 0.0,
                backoff_ms: 0,
                downlink_ms: 0,
                admitted: false,
            },
        );
        self.vehicles[vehicle].queues[k].push_back(id);
    }
}

impl Handler<Ev> for World {
    fn handle(&mut self, event: Event<Ev>, engine: &mut Engine<Ev>, trace: &mut dyn TraceSink) {
        let now = event.time;
        match event.payload {
            Ev::Arrival { vehicle, service_type, .. } => self.arrival(now, vehicle, service_type, engine),
            Ev::Clear => self.clear(now, engine, trace),
            Ev::Dispatch { request, site } => self.dispatch(now, request, site, engine, trace),
            Ev::Complete { site, generation } => {
                if generation == self.sites[site].generation {
                    self.settle_site(site, now, engine, trace);
                }
            }
            Ev::Expiry { request, site } => {
                self.settle_site(site, now, engine, trace);
                if let Some(f) = self.sites[site].expire(request, now) {
                    self.settle_job(site, now, f, trace);
                    self.schedule_completion(site, engine);
                }
            }
            Ev::Report(r) => self.aca.receive(r),
            Ev::BackoffEnd { request, .. } => {
                if let Some(r) = self.requests.get_mut(&request) {
                    if r.stage == Stage::Backoff {
                        r.stage = Stage::Armed;
                    }
                }
            }
        }
    }
}
