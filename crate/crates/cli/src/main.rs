use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use offload_core::scenario::{
    backoff_price_analysis, compute_individual_ofr_cdf, compute_rebidding_stats, load_models, prepare, run_scenario,
    summarize, AgentModel, DiagnosticsRow, Mode, Prepared, RunOptions, RunSummary, ScenarioConfig, Seeds,
    SummaryDelta,
};
use offload_core::sim::{read_trace_csv, CsvTraceWriter, TraceRow};

#[derive(Parser)]
#[command(name = "offload", version, about = "Auction-based edge offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write per-step learning diagnostics.
        #[arg(long)]
        diagnostics: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Train,
    Evaluate,
    Compare,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Train => Mode::Train,
            ModeArg::Evaluate => Mode::Evaluate,
            ModeArg::Compare => Mode::Compare,
        }
    }
}

#[derive(Serialize)]
struct CatalogEntry {
    type_id: String,
    configured_weight: f64,
    probability: f64,
    deadline_ms: u64,
    units: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    mode: &'static str,
    seeds: SeedsOut,
    config: &'a ScenarioConfig,
    catalog: Vec<CatalogEntry>,
    catalog_renormalized: bool,
    decisions: u64,
    end_ms: u64,
    runs: Vec<(String, RunSummary)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<SummaryDelta>,
}

#[derive(Serialize)]
struct SeedsOut {
    workload: u64,
    fleet: u64,
}

fn main() -> Result<()> {
    let Command::Run { scenario, seed, mode, out, diagnostics } = Cli::parse().command;
    let mut cfg = ScenarioConfig::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.mode = m.into();
    }
    cfg.validate()?;
    std::fs::create_dir_all(out.join("metrics")).with_context(|| format!("creating {}", out.display()))?;
    run(&cfg, &out, diagnostics)
}

/// Runs one fleet, streaming its trace to `trace_path`.
fn traced_run(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    seeds: Seeds,
    models: Option<&[Option<AgentModel>]>,
    opts: RunOptions,
    trace_path: &Path,
) -> Result<offload_core::scenario::RunOutcome> {
    let file = File::create(trace_path).with_context(|| format!("creating {}", trace_path.display()))?;
    let mut writer = CsvTraceWriter::new(file)?;
    let outcome = run_scenario(cfg, prepared, seeds, models, opts, &mut writer)?;
    writer.finish().context("writing trace")?;
    Ok(outcome)
}

fn read_rows(path: &Path) -> Result<Vec<TraceRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_trace_csv(BufReader::new(file))?)
}

fn run(cfg: &ScenarioConfig, out: &Path, diagnostics: bool) -> Result<()> {
    let train_seeds = Seeds::from_seed(cfg.seed);
    let prepared = prepare(cfg, train_seeds)?;
    let models = match cfg.mode {
        Mode::Train => None,
        _ => load_models(cfg, &prepared)?,
    };
    let models = models.as_deref();
    let seeds = if models.is_some() { Seeds::for_evaluation(cfg.seed) } else { train_seeds };
    let prepared = if seeds == train_seeds { prepared } else { prepare(cfg, seeds)? };

    let trace_path = out.join("trace.csv");
    let (outcome, mut runs, delta) = match cfg.mode {
        Mode::Train => {
            let opts = RunOptions {
                active: Some(true),
                learn: true,
                stop_after_decisions: cfg.train_steps,
                diagnostics,
            };
            let outcome = traced_run(cfg, &prepared, seeds, None, opts, &trace_path)?;
            (outcome, vec![("active".to_string(), trace_path)], None)
        }
        Mode::Evaluate => {
            let opts = RunOptions { active: None, learn: false, stop_after_decisions: 0, diagnostics };
            let outcome = traced_run(cfg, &prepared, seeds, models, opts, &trace_path)?;
            let label = if cfg.agents.active { "active" } else { "passive" };
            (outcome, vec![(label.to_string(), trace_path)], None)
        }
        Mode::Compare => {
            let opts = RunOptions { active: Some(true), learn: models.is_none(), stop_after_decisions: 0, diagnostics };
            let outcome = traced_run(cfg, &prepared, seeds, models, opts, &trace_path)?;
            let passive_path = out.join("trace_passive.csv");
            let opts = RunOptions { active: Some(false), learn: false, stop_after_decisions: 0, diagnostics: false };
            traced_run(cfg, &prepared, seeds, None, opts, &passive_path)?;
            (outcome, vec![("active".to_string(), trace_path), ("passive".to_string(), passive_path)], Some(()))
        }
    };

    let mut summaries = Vec::new();
    let mut metrics = MetricsWriter::new(&out.join("metrics"))?;
    for (label, path) in runs.drain(..) {
        let rows = read_rows(&path)?;
        let summary = summarize(&rows, cfg.warmup_ms);
        metrics.add(&label, &rows, &summary, cfg.warmup_ms)?;
        summaries.push((label, summary));
    }
    metrics.finish()?;
    let delta = delta.map(|()| SummaryDelta::between(&summaries[0].1, &summaries[1].1));

    // Compare runs without a model learn online; keep what they learned.
    if cfg.mode == Mode::Train || (cfg.mode == Mode::Compare && models.is_none()) {
        outcome.model_file(&prepared).save(&out.join("model.json"))?;
    }
    if diagnostics {
        write_diagnostics(&out.join("diagnostics.csv"), &outcome.diagnostics)?;
    }

    let catalog = prepared
        .catalog
        .types()
        .iter()
        .zip(prepared.catalog.configured_weights())
        .map(|(t, &w)| CatalogEntry {
            type_id: t.type_id.clone(),
            configured_weight: w,
            probability: t.probability,
            deadline_ms: t.deadline_ms,
            units: t.total_units(),
        })
        .collect();
    let summary = Summary {
        mode: cfg.mode.as_str(),
        seeds: SeedsOut { workload: seeds.workload, fleet: seeds.fleet },
        config: cfg,
        catalog,
        catalog_renormalized: prepared.catalog.was_renormalized(),
        decisions: outcome.decisions,
        end_ms: outcome.end_ms,
        runs: summaries,
        delta,
    };
    let path = out.join("summary.json");
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.write_all(b"\n")?;
    w.flush()?;

    for (label, s) in &summary.runs {
        println!(
            "{label}: requests={} ofr={:.4} reliability={:.4} mean_rebids={:.4}",
            s.requests, s.ofr, s.reliability, s.rebids.mean
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn write_diagnostics(path: &Path, rows: &[DiagnosticsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_ms", "bidder", "step", "utility", "delta", "avg_reward", "actor_step_norm", "critic_step_norm", "eta"])?;
    for r in rows {
        let d = &r.diagnostics;
        w.write_record([
            r.time_ms.to_string(),
            r.bidder.to_string(),
            d.step.to_string(),
            d.utility.to_string(),
            d.delta.to_string(),
            d.avg_reward.to_string(),
            d.actor_step_norm.to_string(),
            d.critic_step_norm.to_string(),
            d.eta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Tidy metric tables, one observation per row, with a `fleet` column
/// telling the runs apart.
struct MetricsWriter {
    overall: csv::Writer<File>,
    vehicles: csv::Writer<File>,
    rebids: csv::Writer<File>,
    ofr_cdf: csv::Writer<File>,
    backoff: csv::Writer<File>,
    utilization: csv::Writer<File>,
}

impl MetricsWriter {
    fn new(dir: &Path) -> Result<Self> {
        let open = |name: &str, header: &[&str]| -> Result<csv::Writer<File>> {
            let mut w = csv::Writer::from_path(dir.join(name))?;
            w.write_record(header)?;
            Ok(w)
        };
        Ok(MetricsWriter {
            overall: open("overall.csv", &["fleet", "requests", "failures", "ofr", "reliability"])?,
            vehicles: open(
                "vehicles.csv",
                &["fleet", "vehicle", "budget", "requests", "ofr", "mean_rebids", "mean_price", "mean_backoff_ms"],
            )?,
            rebids: open("rebids.csv", &["fleet", "vehicle", "mean_rebids"])?,
            ofr_cdf: open("ofr_cdf.csv", &["fleet", "budget", "ofr", "cumulative"])?,
            backoff: open("backoff_price.csv", &["fleet", "group", "deadline_ms", "bids", "mean_backoff_ms"])?,
            utilization: open("utilization.csv", &["fleet", "site", "samples", "mean", "std"])?,
        })
    }

    fn add(&mut self, fleet: &str, rows: &[TraceRow], s: &RunSummary, warmup_ms: u64) -> Result<()> {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        self.overall.write_record([
            fleet.to_string(),
            s.requests.to_string(),
            s.failures.to_string(),
            s.ofr.to_string(),
            s.reliability.to_string(),
        ])?;
        for v in &s.vehicles {
            self.vehicles.write_record([
                fleet.to_string(),
                v.vehicle.to_string(),
                v.budget.clone(),
                v.requests.to_string(),
                v.ofr.to_string(),
                v.mean_rebids.to_string(),
                opt(v.mean_price),
                opt(v.mean_backoff_ms),
            ])?;
        }
        for (v, m) in compute_rebidding_stats(rows, warmup_ms).per_vehicle {
            self.rebids.write_record([fleet.to_string(), v.to_string(), m.to_string()])?;
        }
        for p in compute_individual_ofr_cdf(rows, warmup_ms) {
            self.ofr_cdf.write_record([fleet.to_string(), p.budget, p.ofr.to_string(), p.cumulative.to_string()])?;
        }
        for g in backoff_price_analysis(rows, warmup_ms) {
            self.backoff.write_record([
                fleet.to_string(),
                g.group,
                g.deadline_ms.to_string(),
                g.bids.to_string(),
                g.mean_backoff_ms.to_string(),
            ])?;
        }
        for u in &s.utilization {
            self.utilization.write_record([
                fleet.to_string(),
                u.site.to_string(),
                u.samples.to_string(),
                u.mean.to_string(),
                u.std.to_string(),
            ])?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        for w in [&mut self.overall, &mut self.vehicles, &mut self.rebids, &mut self.ofr_cdf, &mut self.backoff, &mut self.utilization] {
            w.flush()?;
        }
        Ok(())
    }
}
