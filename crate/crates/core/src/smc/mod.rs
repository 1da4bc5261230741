//! Statistical estimation of property probabilities by simulation.

mod bounds;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::channel_system::{ChannelSystem, CsState};
use crate::error::ModelError;
use crate::kernel::{EventRecord, Observation, Rational, Rng};
use crate::mtl::{label, online_update, OracleState, PropertySet, Verdict};
use crate::program_graph::{Step, TimeGrid, UniformResolver};

pub use bounds::required_samples;

/// Share of inconclusive trials above which an estimate is flagged.
pub const INCONCLUSIVE_LIMIT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmcConfig {
    /// Half-width of the confidence interval.
    pub epsilon: Rational,
    /// The interval holds with probability at least `1 - delta`.
    pub delta: Rational,
    /// Trials dispatched at most.
    pub max_samples: u64,
    /// Steps per trial at most.
    pub max_trace_length: u64,
    pub seed: u64,
    pub workers: usize,
    pub grid: TimeGrid,
}

impl Default for SmcConfig {
    fn default() -> Self {
        SmcConfig {
            epsilon: Rational::new(1, 20).unwrap(),
            delta: Rational::new(1, 20).unwrap(),
            max_samples: 100_000,
            max_trace_length: 10_000,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            grid: TimeGrid::default(),
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let half = Rational::new(1, 2)?;
        if self.epsilon <= Rational::ZERO || self.epsilon >= half {
            return Err(ModelError::Argument(format!("epsilon must lie in (0, 1/2), got {}", self.epsilon)));
        }
        if self.delta <= Rational::ZERO || self.delta >= Rational::ONE {
            return Err(ModelError::Argument(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.max_samples == 0 || self.max_trace_length == 0 || self.workers == 0 {
            return Err(ModelError::Argument(
                "max samples, max trace length and workers must be positive".into(),
            ));
        }
        self.grid.validate()
    }

    /// Trials simulated between two stopping checks.
    pub fn batch_size(&self) -> u64 {
        64.max(self.workers as u64 * 8)
    }
}

/// One simulated execution from a uniformly drawn initial state, under the uniform
/// resolver, with its random stream fixed by `(seed, trial)`.
pub struct Run<'a> {
    cs: &'a ChannelSystem,
    state: CsState,
    now: Rational,
    steps: u64,
    rng: Rng,
    resolver: UniformResolver,
    grid: TimeGrid,
}

/// Outcome of [`Run::step`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStep {
    Fired { event: EventRecord, time: Rational },
    Terminal,
    TimeLocked,
}

impl<'a> Run<'a> {
    /// `initial` must be non-empty; see [`ChannelSystem::initial_states`].
    pub fn new(cs: &'a ChannelSystem, initial: &[CsState], seed: u64, trial: u64, grid: TimeGrid) -> Self {
        let mut rng = Rng::for_trial(seed, trial);
        let state = initial[rng.below(initial.len())].clone();
        Run {
            cs,
            state,
            now: Rational::ZERO,
            steps: 0,
            rng,
            resolver: UniformResolver,
            grid,
        }
    }

    pub fn state(&self) -> &CsState {
        &self.state
    }

    pub fn now(&self) -> Rational {
        self.now
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self) -> Result<RunStep, ModelError> {
        match self
            .cs
            .step(&self.state, self.now, &mut self.rng, &mut self.resolver, self.grid)?
        {
            Step::Fired { state, event, time } => {
                self.state = state;
                self.now = time;
                self.steps += 1;
                Ok(RunStep::Fired { event, time })
            }
            Step::Terminal => Ok(RunStep::Terminal),
            Step::TimeLocked => Ok(RunStep::TimeLocked),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    PropertyResolved,
    TraceComplete,
    LengthCap,
    TimeLock,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialResult {
    /// One verdict per property, in declaration order.
    pub verdicts: Vec<Verdict>,
    pub trace_length: u64,
    pub wall_time: Duration,
    pub reason: TerminalReason,
}

/// Simulates trial number `trial`.
pub fn run_trial(cs: &ChannelSystem, props: &PropertySet, cfg: &SmcConfig, trial: u64) -> Result<TrialResult, ModelError> {
    let initial = cs.initial_states()?;
    trial_from(cs, &initial, props, cfg, trial)
}

fn feed(oracles: &mut [OracleState], verdicts: &mut [Verdict], obs: Observation) -> Result<(), ModelError> {
    for (o, v) in oracles.iter_mut().zip(verdicts.iter_mut()) {
        if !v.is_conclusive() {
            if let Some(done) = online_update(o, obs.clone())? {
                *v = done;
            }
        }
    }
    Ok(())
}

/// Feeds every observation to each property's monitor. A property stops being fed
/// once its verdict is conclusive; the trial ends when every property is.
fn trial_from(
    cs: &ChannelSystem,
    initial: &[CsState],
    props: &PropertySet,
    cfg: &SmcConfig,
    trial: u64,
) -> Result<TrialResult, ModelError> {
    let start = Instant::now();
    let mut run = Run::new(cs, initial, cfg.seed, trial, cfg.grid);
    let mut oracles: Vec<OracleState> = props.properties.iter().map(|p| OracleState::new(&p.formula)).collect();
    let mut verdicts = vec![Verdict::Unknown; oracles.len()];
    // The initial state is the first observation, at time 0.
    let labels = label(&props.atoms, run.state(), None)?;
    feed(&mut oracles, &mut verdicts, Observation { time: run.now(), event: None, labels })?;
    let reason = loop {
        if verdicts.iter().all(|v| v.is_conclusive()) {
            break TerminalReason::PropertyResolved;
        }
        if run.steps() >= cfg.max_trace_length {
            break TerminalReason::LengthCap;
        }
        let step = run
            .step()
            .map_err(|e| e.context(format!("trial {trial}, step {}", run.steps() + 1)))?;
        let end = match step {
            RunStep::Fired { event, time } => {
                let labels = label(&props.atoms, run.state(), Some(&event))?;
                feed(&mut oracles, &mut verdicts, Observation { time, event: Some(event), labels })?;
                continue;
            }
            RunStep::Terminal => TerminalReason::TraceComplete,
            RunStep::TimeLocked => TerminalReason::TimeLock,
        };
        for (o, v) in oracles.iter_mut().zip(verdicts.iter_mut()) {
            if !v.is_conclusive() {
                *v = o.end_of_trace();
            }
        }
        break end;
    };
    Ok(TrialResult {
        verdicts,
        trace_length: run.steps(),
        wall_time: start.elapsed(),
        reason,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyEstimate {
    pub name: String,
    /// Conclusive trials counted.
    pub samples: u64,
    /// Trials in which the property held.
    pub successes: u64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
    /// Trials that ended without a verdict while this property was being counted.
    pub inconclusive: u64,
    /// Samples required at the final estimate.
    pub required: u64,
    pub converged: bool,
    pub inconclusive_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmcReport {
    pub properties: Vec<PropertyEstimate>,
    pub trials: u64,
    pub epsilon: Rational,
    pub delta: Rational,
    pub seed: u64,
    pub budget_exhausted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Counter {
    n: u64,
    k: u64,
    unknown: u64,
    done: bool,
}

impl Counter {
    fn p_hat(&self) -> Option<f64> {
        (self.n > 0).then(|| self.k as f64 / self.n as f64)
    }

    fn required(&self, eps: f64, delta: f64) -> u64 {
        required_samples(eps, delta, self.p_hat())
    }
}

/// Estimates the probability of every property.
///
/// Trials run in batches on `cfg.workers` threads but are accounted strictly in
/// trial order, and each property's counter closes at the first trial after which
/// its sample count reaches the adaptive bound. The report is therefore the same
/// for any number of workers.
pub fn estimate(cs: &ChannelSystem, props: &PropertySet, cfg: &SmcConfig) -> Result<SmcReport, ModelError> {
    cfg.validate()?;
    let start = Instant::now();
    let initial = cs.initial_states()?;
    let eps = cfg.epsilon.to_f64();
    let delta = cfg.delta.to_f64();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| ModelError::Argument(format!("cannot start worker pool: {e}")))?;
    let mut counters = vec![Counter::default(); props.properties.len()];
    let mut trials = 0u64;
    'outer: while trials < cfg.max_samples && counters.iter().any(|c| !c.done) {
        let end = (trials + cfg.batch_size()).min(cfg.max_samples);
        let results: Vec<Result<TrialResult, ModelError>> = pool.install(|| {
            (trials..end)
                .into_par_iter()
                .map(|t| trial_from(cs, &initial, props, cfg, t))
                .collect()
        });
        for r in results {
            let r = r?;
            trials += 1;
            for (c, v) in counters.iter_mut().zip(&r.verdicts) {
                if c.done {
                    continue;
                }
                match v {
                    Verdict::True => {
                        c.n += 1;
                        c.k += 1;
                    }
                    Verdict::False => c.n += 1,
                    Verdict::Unknown => c.unknown += 1,
                }
                c.done = c.n > 0 && c.n >= c.required(eps, delta);
            }
            if counters.iter().all(|c| c.done) {
                break 'outer;
            }
        }
    }
    let properties = props
        .properties
        .iter()
        .zip(&counters)
        .map(|(p, c)| {
            let est = c.p_hat().unwrap_or(0.0);
            let seen = c.n + c.unknown;
            PropertyEstimate {
                name: p.name.clone(),
                samples: c.n,
                successes: c.k,
                estimate: est,
                lower: (est - eps).max(0.0),
                upper: (est + eps).min(1.0),
                confidence: 1.0 - delta,
                inconclusive: c.unknown,
                required: c.required(eps, delta),
                converged: c.done,
                inconclusive_flag: seen > 0 && c.unknown as f64 > INCONCLUSIVE_LIMIT * seen as f64,
            }
        })
        .collect();
    Ok(SmcReport {
        properties,
        trials,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        seed: cfg.seed,
        budget_exhausted: counters.iter().any(|c| !c.done),
        wall_time_secs: Some(start.elapsed().as_secs_f64()),
    })
}
