use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::latency::COVERAGE_RADIUS_M;
use crate::sim::{RngStream, SimTime};

const COLUMNS: [&str; 4] = ["time_ms", "vehicle_id", "distance_m", "present"];

#[derive(Debug, Clone, PartialEq)]
pub struct MobilitySample {
    pub time_ms: SimTime,
    pub vehicle_id: String,
    pub distance_m: f64,
    pub present: bool,
}

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("reading mobility trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("mobility trace line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("mobility trace schema: {0}")]
    Schema(String),
}

pub fn load_mobility_trace(path: &Path) -> Result<Vec<MobilitySample>, MobilityError> {
    parse_mobility_trace(File::open(path)?)
}

/// Parses and validates a mobility CSV. Output is stably sorted by time, so
/// each vehicle's samples are time-ordered.
pub fn parse_mobility_trace(input: impl Read) -> Result<Vec<MobilitySample>, MobilityError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| MobilityError::Parse { line: 1, message: e.to_string() })?
        .clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let position = |name: &str| headers.iter().position(|h| h == name);
    let missing: Vec<&str> = COLUMNS.iter().copied().filter(|c| position(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(MobilityError::Schema(format!("missing columns: {}", missing.join(", "))));
    }
    let idx: Vec<usize> = COLUMNS.iter().map(|c| position(c).expect("checked")).collect();

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| MobilityError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |message: String| MobilityError::Parse { line, message };
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let time_ms: u64 = field(0)
            .parse()
            .map_err(|_| parse_err(format!("bad time_ms `{}`", field(0))))?;
        let vehicle_id = field(1).to_string();
        if vehicle_id.is_empty() || vehicle_id.contains([',', ';', '=', '|']) {
            return Err(parse_err(format!("bad vehicle_id `{vehicle_id}`")));
        }
        let distance_m: f64 = field(2)
            .parse()
            .map_err(|_| parse_err(format!("bad distance_m `{}`", field(2))))?;
        let present = match field(3) {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(parse_err(format!("bad present `{other}`"))),
        };
        if present && !(0.0..=COVERAGE_RADIUS_M).contains(&distance_m) {
            return Err(MobilityError::Schema(format!(
                "line {line}: distance {distance_m} m outside the {COVERAGE_RADIUS_M} m radius"
            )));
        }
        samples.push(MobilitySample {
            time_ms: SimTime::from_ms(time_ms),
            vehicle_id,
            distance_m,
            present,
        });
    }
    samples.sort_by_key(|s| s.time_ms);
    Ok(samples)
}

pub fn write_mobility_trace(samples: &[MobilitySample], out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for s in samples {
        w.write_record([
            s.time_ms.as_ms().to_string(),
            s.vehicle_id.clone(),
            s.distance_m.to_string(),
            u8::from(s.present).to_string(),
        ])?;
    }
    w.flush()
}

/// Piecewise-constant view of a mobility trace: a vehicle's state at `t` is
/// its latest sample at or before `t`; before its first sample it is absent.
#[derive(Debug, Clone, Default)]
pub struct MobilityIndex {
    vehicles: Vec<String>,
    tracks: Vec<Vec<(u64, Option<f64>)>>,
}

impl MobilityIndex {
    pub fn new(samples: &[MobilitySample]) -> Self {
        let mut by_vehicle: BTreeMap<&str, usize> = BTreeMap::new();
        let mut index = MobilityIndex::default();
        for s in samples {
            let slot = *by_vehicle.entry(&s.vehicle_id).or_insert_with(|| {
                index.vehicles.push(s.vehicle_id.clone());
                index.tracks.push(Vec::new());
                index.vehicles.len() - 1
            });
            index.tracks[slot].push((s.time_ms.as_ms(), s.present.then_some(s.distance_m)));
        }
        index
    }

    /// Vehicle ids in order of first appearance.
    pub fn vehicles(&self) -> &[String] {
        &self.vehicles
    }

    /// Distance of vehicle `i` at `t`, or `None` when absent.
    pub fn distance(&self, i: usize, t: SimTime) -> Option<f64> {
        let track = &self.tracks[i];
        let pos = track.partition_point(|&(time, _)| time <= t.as_ms());
        pos.checked_sub(1).and_then(|p| track[p].1)
    }

    pub fn present_count(&self, t: SimTime) -> usize {
        (0..self.tracks.len())
            .filter(|&i| self.distance(i, t).is_some())
            .count()
    }

    /// Presence intervals `[enter, leave)` of vehicle `i`; `leave` is `None`
    /// when the vehicle stays until the end of the trace.
    pub fn presence_intervals(&self, i: usize) -> Vec<(u64, Option<u64>)> {
        let mut out = Vec::new();
        let mut open: Option<u64> = None;
        for &(time, d) in &self.tracks[i] {
            match (open, d.is_some()) {
                (None, true) => open = Some(time),
                (Some(start), false) => {
                    out.push((start, Some(time)));
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(start) = open {
            out.push((start, None));
        }
        out
    }
}

/// Parameters of the synthetic four-way junction: vehicles enter on one of
/// four approaches at the coverage edge, drive to the stop line, wait for
/// green, cross the centre and leave on the opposite side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JunctionParams {
    pub duration_ms: u64,
    pub sample_ms: u64,
    /// Mean gap between vehicle spawns across all approaches.
    pub mean_spawn_gap_ms: f64,
    pub speed_mps: f64,
    /// Length of each green phase; the two axes alternate.
    pub green_ms: u64,
    pub stop_line_m: f64,
}

impl Default for JunctionParams {
    fn default() -> Self {
        JunctionParams {
            duration_ms: 120_000,
            sample_ms: 100,
            mean_spawn_gap_ms: 4_000.0,
            speed_mps: 10.0,
            green_ms: 20_000,
            stop_line_m: 5.0,
        }
    }
}

#[derive(Clone, Copy)]
enum Leg {
    Approach,
    Depart,
}

pub fn generate_junction_trace(params: &JunctionParams, rng: &mut RngStream) -> Vec<MobilitySample> {
    struct Car {
        id: String,
        axis: u64,
        leg: Leg,
        distance: f64,
    }
    let green_axis = |t: u64| (t / params.green_ms.max(1)) % 2;
    let spawn_gap = Exp::new(1.0 / params.mean_spawn_gap_ms.max(1.0)).expect("positive rate");
    let step_m = params.speed_mps * params.sample_ms as f64 / 1000.0;

    let mut cars: Vec<Car> = Vec::new();
    let mut samples = Vec::new();
    let mut next_spawn = spawn_gap.sample(rng);
    let mut spawned = 0usize;
    let mut t = 0u64;
    while t <= params.duration_ms {
        while next_spawn <= t as f64 {
            let axis = u64::from(rng.uniform() < 0.5);
            cars.push(Car {
                id: format!("veh{spawned}"),
                axis,
                leg: Leg::Approach,
                distance: COVERAGE_RADIUS_M,
            });
            spawned += 1;
            next_spawn += spawn_gap.sample(rng);
        }
        let mut leaving = Vec::new();
        for (i, car) in cars.iter_mut().enumerate() {
            samples.push(MobilitySample {
                time_ms: SimTime::from_ms(t),
                vehicle_id: car.id.clone(),
                distance_m: car.distance,
                present: true,
            });
            match car.leg {
                Leg::Approach => {
                    let target = if green_axis(t) == car.axis { 0.0 } else { params.stop_line_m };
                    if car.distance > params.stop_line_m || green_axis(t) == car.axis {
                        car.distance = (car.distance - step_m).max(target);
                    }
                    if car.distance <= 0.0 {
                        car.leg = Leg::Depart;
                    }
                }
                Leg::Depart => {
                    car.distance += step_m;
                    if car.distance > COVERAGE_RADIUS_M {
                        leaving.push(i);
                    }
                }
            }
        }
        for &i in leaving.iter().rev() {
            let car = cars.remove(i);
            samples.push(MobilitySample {
                time_ms: SimTime::from_ms(t + params.sample_ms),
                vehicle_id: car.id,
                distance_m: COVERAGE_RADIUS_M,
                present: false,
            });
        }
        t += params.sample_ms.max(1);
    }
    samples.sort_by_key(|s| s.time_ms);
    samples
}
