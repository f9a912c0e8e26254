use serde::{Deserialize, Serialize};

use crate::auction::{BidderId, TypeIndex};
use crate::sim::SimTime;

const WORK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub site_id: String,
    /// Resource units.
    pub capacity: f64,
    #[serde(default)]
    pub report_delay_ms: u64,
    /// Execution-work multiplier per service type id; missing types use 1.
    #[serde(default)]
    pub profile: std::collections::BTreeMap<String, f64>,
}

/// An admitted request executing at a site.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub request_id: u64,
    pub bidder: BidderId,
    pub service_type: TypeIndex,
    /// Actual work per task of the chain, in order.
    pub task_work: Vec<f64>,
    pub task: usize,
    pub remaining_in_task: f64,
    /// Execution must finish by this time to count as success.
    pub deadline: SimTime,
    pub started: SimTime,
}

impl Job {
    pub fn new(
        request_id: u64,
        bidder: BidderId,
        service_type: TypeIndex,
        task_work: Vec<f64>,
        deadline: SimTime,
        started: SimTime,
    ) -> Self {
        assert!(!task_work.is_empty() && task_work.iter().all(|&w| w > 0.0));
        let first = task_work[0];
        Job {
            request_id,
            bidder,
            service_type,
            task_work,
            task: 0,
            remaining_in_task: first,
            deadline,
            started,
        }
    }

    pub fn total_work(&self) -> f64 {
        self.task_work.iter().sum()
    }

    pub fn remaining(&self) -> f64 {
        self.remaining_in_task + self.task_work[self.task + 1..].iter().sum::<f64>()
    }

    fn serve(&mut self, mut work: f64) {
        while work > 0.0 && self.task < self.task_work.len() {
            if work < self.remaining_in_task {
                self.remaining_in_task -= work;
                return;
            }
            work -= self.remaining_in_task;
            self.task += 1;
            self.remaining_in_task = self.task_work.get(self.task).copied().unwrap_or(0.0);
        }
    }

    fn done(&self) -> bool {
        self.task >= self.task_work.len()
            || (self.task + 1 == self.task_work.len() && self.remaining_in_task <= WORK_EPS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobEnd {
    Completed,
    Dropped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finished {
    pub job: Job,
    pub end: JobEnd,
    pub at: SimTime,
}

/// A computing site. Capacity is shared equally among running jobs, with
/// each job receiving at most `unit_cap` resource units.
#[derive(Debug, Clone)]
pub struct Site {
    pub index: usize,
    pub config: SiteConfig,
    pub unit_cap: f64,
    /// Work multiplier per catalog index.
    pub multipliers: Vec<f64>,
    pub in_flight: Vec<Job>,
    /// Learned per-type work estimates.
    pub estimates: Vec<Option<f64>>,
    pub price: f64,
    /// Bumped whenever the next-completion time may change.
    pub generation: u64,
    last_update: SimTime,
}

impl Site {
    pub fn new(index: usize, config: SiteConfig, type_ids: &[String], unit_cap: f64) -> Self {
        assert!(config.capacity > 0.0 && unit_cap > 0.0);
        let multipliers = type_ids
            .iter()
            .map(|id| config.profile.get(id).copied().unwrap_or(1.0))
            .collect();
        Site {
            index,
            config,
            unit_cap,
            multipliers,
            in_flight: Vec::new(),
            estimates: vec![None; type_ids.len()],
            price: 0.0,
            generation: 0,
            last_update: SimTime::ZERO,
        }
    }

    pub fn capacity(&self) -> f64 {
        self.config.capacity
    }

    /// Units given to each running job.
    pub fn allocation(&self) -> f64 {
        match self.in_flight.len() {
            0 => 0.0,
            n => self.unit_cap.min(self.capacity() / n as f64),
        }
    }

    /// `(capacity - free units) / capacity`.
    pub fn utilization(&self) -> f64 {
        (self.allocation() * self.in_flight.len() as f64 / self.capacity()).clamp(0.0, 1.0)
    }

    /// Serves running jobs up to `now` and removes those that finished.
    /// A job finishing after its deadline is reported as dropped.
    pub fn advance(&mut self, now: SimTime) -> Vec<Finished> {
        let dt = now.saturating_sub(self.last_update) as f64;
        self.last_update = self.last_update.max(now);
        if dt > 0.0 {
            let alloc = self.allocation();
            for job in &mut self.in_flight {
                job.serve(alloc * dt);
            }
        }
        let mut finished = Vec::new();
        let mut i = 0;
        while i < self.in_flight.len() {
            if self.in_flight[i].done() {
                let job = self.in_flight.remove(i);
                let end = if now > job.deadline {
                    JobEnd::Dropped
                } else {
                    JobEnd::Completed
                };
                finished.push(Finished { job, end, at: now });
            } else {
                i += 1;
            }
        }
        if !finished.is_empty() {
            self.generation += 1;
        }
        finished
    }

    /// Starts a job; call [`Site::advance`] for the same instant first.
    pub fn start(&mut self, now: SimTime, job: Job) {
        debug_assert!(self.last_update == now || self.in_flight.is_empty());
        self.last_update = self.last_update.max(now);
        self.in_flight.push(job);
        self.generation += 1;
    }

    /// Removes a job that missed its deadline.
    pub fn expire(&mut self, request_id: u64, now: SimTime) -> Option<Finished> {
        let pos = self.in_flight.iter().position(|j| j.request_id == request_id)?;
        let job = self.in_flight.remove(pos);
        self.generation += 1;
        Some(Finished {
            job,
            end: JobEnd::Dropped,
            at: now,
        })
    }

    /// Earliest tick at which a running job completes under the current
    /// allocation; fractional times round up.
    pub fn next_completion(&self) -> Option<SimTime> {
        let alloc = self.allocation();
        let min_remaining = self
            .in_flight
            .iter()
            .map(Job::remaining)
            .fold(f64::INFINITY, f64::min);
        min_remaining
            .is_finite()
            .then(|| self.last_update.after_ms_f64((min_remaining / alloc - WORK_EPS).max(0.0)))
    }

    pub fn learn(&mut self, service_type: TypeIndex, observed: f64, rate: f64) {
        update_service_estimate(&mut self.estimates[service_type], observed, rate);
    }
}

/// Exponential moving average; the first observation initializes.
pub fn update_service_estimate(estimate: &mut Option<f64>, observed: f64, rate: f64) {
    debug_assert!(observed > 0.0);
    *estimate = Some(match *estimate {
        None => observed,
        Some(e) => e + rate * (observed - e),
    });
}
