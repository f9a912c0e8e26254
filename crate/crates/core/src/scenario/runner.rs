use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, Mode, ScenarioConfig};
use super::metrics::{summarize, RunSummary, SummaryDelta};
use super::model::{AgentModel, ModelError, ModelFile};
use super::world::{DiagnosticsRow, Ev, Seeds, World};
use crate::sim::{derive_stream, Engine, NullTrace, RunTrace, SimError, SimTime, TraceRow, TraceSink};
use crate::workload::{generate_junction_trace, load_mobility_trace, Catalog, MobilityError, MobilityIndex};

const CHUNK_MS: u64 = 1_000;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("learning diverged: {0}")]
    Learning(String),
}

impl Seeds {
    /// Both streams from one scenario seed.
    pub fn from_seed(seed: u64) -> Seeds {
        Seeds { workload: seed, fleet: seed }
    }

    /// Same fleet as training on `seed`, fresh workload.
    pub fn for_evaluation(seed: u64) -> Seeds {
        Seeds { workload: derive_stream(seed, "evaluation").next_u64(), fleet: seed }
    }
}

/// Catalog and mobility of a scenario, built once per workload seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub catalog: Catalog,
    pub mobility: Option<MobilityIndex>,
}

pub fn prepare(cfg: &ScenarioConfig, seeds: Seeds) -> Result<Prepared, RunError> {
    let catalog = cfg.catalog.build()?;
    let mobility = if let Some(path) = &cfg.fleet.mobility_trace {
        Some(MobilityIndex::new(&load_mobility_trace(path)?))
    } else {
        cfg.fleet.junction.as_ref().map(|params| {
            let mut rng = derive_stream(seeds.workload, "junction");
            MobilityIndex::new(&generate_junction_trace(params, &mut rng))
        })
    };
    Ok(Prepared { catalog, mobility })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Overrides `agents.active` for every bidder.
    pub active: Option<bool>,
    /// Update parameters during the run.
    pub learn: bool,
    /// Stop once this many active decisions were taken (0: run the full
    /// duration).
    pub stop_after_decisions: u64,
    pub diagnostics: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { active: None, learn: true, stop_after_decisions: 0, diagnostics: false }
    }
}

pub struct RunOutcome {
    pub world: World,
    pub end_ms: u64,
    pub decisions: u64,
    pub diagnostics: Vec<DiagnosticsRow>,
}

impl RunOutcome {
    pub fn model_file(&self, prepared: &Prepared) -> ModelFile {
        let types = prepared.catalog.types().iter().map(|t| t.type_id.clone()).collect();
        ModelFile::from_bidders(types, &self.world.bidders)
    }
}

pub fn run_scenario(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    seeds: Seeds,
    models: Option<&[Option<AgentModel>]>,
    opts: RunOptions,
    trace: &mut dyn TraceSink,
) -> Result<RunOutcome, RunError> {
    let mut cfg = cfg.clone();
    if let Some(active) = opts.active {
        cfg.agents.active = active;
    }
    let mut engine: Engine<Ev> = Engine::new();
    let mut world = World::new(&cfg, prepared.catalog.clone(), prepared.mobility.clone(), seeds, models, &mut engine);
    if !opts.learn {
        world.freeze_all();
    }
    if opts.diagnostics {
        world.diagnostics = Some(Vec::new());
    }
    let mut t = 0;
    while t < cfg.duration_ms {
        t = (t + CHUNK_MS).min(cfg.duration_ms);
        engine.run_until(SimTime::from_ms(t), &mut world, trace)?;
        if let Some(e) = world.error.take() {
            return Err(RunError::Learning(e));
        }
        if opts.stop_after_decisions > 0 && world.decisions() >= opts.stop_after_decisions {
            break;
        }
    }
    let diagnostics = world.diagnostics.take().unwrap_or_default();
    Ok(RunOutcome { decisions: world.decisions(), end_ms: t, world, diagnostics })
}

/// Trains active bidders from scratch. Stops after `train_steps` decisions
/// when set, and after `duration_ms` at the latest.
pub fn train(cfg: &ScenarioConfig, seeds: Seeds, diagnostics: bool) -> Result<(ModelFile, RunOutcome), RunError> {
    let prepared = prepare(cfg, seeds)?;
    let opts = RunOptions {
        active: Some(true),
        learn: true,
        stop_after_decisions: cfg.train_steps,
        diagnostics,
    };
    let outcome = run_scenario(cfg, &prepared, seeds, None, opts, &mut NullTrace)?;
    Ok((outcome.model_file(&prepared), outcome))
}

pub fn load_models(cfg: &ScenarioConfig, prepared: &Prepared) -> Result<Option<Vec<Option<AgentModel>>>, RunError> {
    let Some(path) = &cfg.model else { return Ok(None) };
    let file = ModelFile::load(path)?;
    let types: Vec<String> = prepared.catalog.types().iter().map(|t| t.type_id.clone()).collect();
    file.check(&types)?;
    Ok(Some(file.by_bidder()))
}

/// One run with frozen bidders, recording the trace in memory.
pub fn evaluate(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    seeds: Seeds,
    models: Option<&[Option<AgentModel>]>,
    active: bool,
) -> Result<(RunSummary, Vec<TraceRow>), RunError> {
    let mut trace = RunTrace::default();
    let opts = RunOptions { active: Some(active), learn: false, ..RunOptions::default() };
    run_scenario(cfg, prepared, seeds, models, opts, &mut trace)?;
    let rows = trace.into_rows();
    Ok((summarize(&rows, cfg.warmup_ms), rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub active: RunSummary,
    pub passive: RunSummary,
    pub delta: SummaryDelta,
}

/// Active and passive fleets on the same seeds. Active bidders use the
/// given models frozen; without models they learn during the run.
pub fn run_compare(
    cfg: &ScenarioConfig,
    prepared: &Prepared,
    seeds: Seeds,
    models: Option<&[Option<AgentModel>]>,
) -> Result<CompareReport, RunError> {
    let mut trace = RunTrace::default();
    let opts = RunOptions { active: Some(true), learn: models.is_none(), ..RunOptions::default() };
    run_scenario(cfg, prepared, seeds, models, opts, &mut trace)?;
    let active = summarize(trace.rows(), cfg.warmup_ms);
    let (passive, _) = evaluate(cfg, prepared, seeds, None, false)?;
    let delta = SummaryDelta::between(&active, &passive);
    Ok(CompareReport { active, passive, delta })
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Evaluate => "evaluate",
            Mode::Compare => "compare",
        }
    }
}
