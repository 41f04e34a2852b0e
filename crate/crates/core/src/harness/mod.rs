//! Scenario configuration, engine dispatch, transition detection and sweeps.
//!
//! A [`Scenario`] names an initial state, noise, an optional pulse sequence
//! and one of three engines:
//!
//! - `analytic`: the closed-form dephasing flow (BD state, white noise, no pulses);
//! - `ff`: filter-function decay `c1, c2 → c1, c2 · e^{−χ1−χ2}` with `c3` fixed
//!   (BD state, ideal pulses);
//! - `mc`: the Monte-Carlo density-matrix engine.
//!
//! Correlations are reported for the Bell-diagonal part of each state. The
//! `ff` engine works in the toggling frame; local pulse rotations leave
//! `C`, `D` and `I` unchanged.

mod output;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use output::{emit_plot_data, read_plot_data, write_scenario_outputs, write_sweep_csv, OutputFiles};

use crate::correlations::TrajectoryPoint;
use crate::ddseq::{
    builtin_sequence, compile_dsl, decay_exponents_time_domain, schedule_timing, DslBindings, PulseErrorModel,
    PulseEvent, PulseSchedule, SequenceKind,
};
use crate::engine::{ensemble_average, InitialState, NoiseModel, SimConfig, SpinSystem};
use crate::error::{Error, Result};
use crate::qstate::{bd_params_of, bd_state, fidelity, BDParams, DensityMatrix};
use crate::tomography::{reconstruct, MeasurementRecord};

/// Plateau tolerance for closed-form and filter-function data.
pub const ANALYTIC_PLATEAU_DELTA: f64 = 1e-6;
/// Plateau tolerance for Monte-Carlo data.
pub const MC_PLATEAU_DELTA: f64 = 0.02;
/// Default sample grid: this many points over `[0, DEFAULT_HORIZON]`.
pub const DEFAULT_GRID_POINTS: usize = 50;
pub const DEFAULT_HORIZON: f64 = 0.3;
/// Default spacing of samples under a pulse sequence, in cycles.
pub const DEFAULT_CYCLES_PER_SAMPLE: u32 = 5;
pub const DEFAULT_TRAJECTORIES: usize = 1000;
/// Upper bound on the Monte-Carlo time step when no sequence sets a finer one.
pub const DEFAULT_TIME_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EngineKind {
    #[serde(rename = "analytic")]
    Analytic,
    #[serde(rename = "mc", alias = "monte_carlo")]
    MonteCarlo,
    #[serde(rename = "ff", alias = "filter_function")]
    FilterFunction,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Analytic => "analytic",
            EngineKind::MonteCarlo => "mc",
            EngineKind::FilterFunction => "ff",
        }
    }

    pub fn plateau_delta(self) -> f64 {
        match self {
            EngineKind::MonteCarlo => MC_PLATEAU_DELTA,
            EngineKind::Analytic | EngineKind::FilterFunction => ANALYTIC_PLATEAU_DELTA,
        }
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for EngineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "analytic" => Ok(EngineKind::Analytic),
            "mc" | "monte_carlo" => Ok(EngineKind::MonteCarlo),
            "ff" | "filter_function" => Ok(EngineKind::FilterFunction),
            _ => Err(Error::Config(format!(
                "unknown engine `{s}` (expected analytic, mc or ff)"
            ))),
        }
    }
}

/// Pulse sequence of a scenario. `cycles` defaults to enough repetitions to
/// cover the sample grid; `tau` defaults to the sequence's experimental delay.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    #[default]
    None,
    Builtin {
        name: SequenceKind,
        #[serde(default)]
        tau: Option<f64>,
        #[serde(default)]
        cycles: Option<u32>,
    },
    Dsl {
        text: String,
        #[serde(default)]
        tau: Option<f64>,
        #[serde(default)]
        cycles: Option<u32>,
    },
    Explicit {
        schedule: PulseSchedule,
    },
}

impl ScheduleSpec {
    pub fn builtin(kind: SequenceKind) -> Self {
        ScheduleSpec::Builtin {
            name: kind,
            tau: None,
            cycles: None,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ScheduleSpec::None)
    }

    /// Short name for labels and plot headers.
    pub fn name(&self) -> String {
        match self {
            ScheduleSpec::None => "none".into(),
            ScheduleSpec::Builtin { name, .. } => name.to_string(),
            ScheduleSpec::Dsl { .. } => "custom".into(),
            ScheduleSpec::Explicit { schedule } => schedule.name.clone(),
        }
    }

    /// The concrete schedule, repeated often enough to reach `horizon`
    /// under `error`'s pulse lengths.
    pub fn resolve(&self, horizon: f64, error: &PulseErrorModel) -> Result<Option<PulseSchedule>> {
        let cover = |s: &PulseSchedule| {
            let period = schedule_timing(s, error);
            if period > 0.0 {
                ((horizon / period).ceil() as u32).saturating_add(1)
            } else {
                1
            }
        };
        Ok(match self {
            ScheduleSpec::None => None,
            ScheduleSpec::Builtin { name, tau, cycles } => {
                let one = builtin_sequence(*name, tau.unwrap_or_else(|| name.experimental_tau()))?;
                let n = cycles.unwrap_or_else(|| cover(&one));
                Some(one.with_repetitions(n))
            }
            ScheduleSpec::Dsl { text, tau, cycles } => {
                let probe = compile_dsl(
                    text,
                    &DslBindings {
                        tau: *tau,
                        repetitions: Some(1),
                    },
                )?;
                let n = cycles.unwrap_or_else(|| cover(&probe));
                Some(compile_dsl(
                    text,
                    &DslBindings {
                        tau: *tau,
                        repetitions: Some(n),
                    },
                )?)
            }
            ScheduleSpec::Explicit { schedule } => Some(schedule.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleGrid {
    /// `points` evenly spaced times from `start` to `end` inclusive.
    Uniform {
        start: f64,
        end: f64,
        points: usize,
    },
    /// Every `cycles` sequence cycles from 0 up to `end`.
    EveryCycles {
        cycles: u32,
        end: f64,
    },
    Explicit {
        times: Vec<f64>,
    },
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid::Uniform {
            start: 0.0,
            end: DEFAULT_HORIZON,
            points: DEFAULT_GRID_POINTS,
        }
    }
}

impl SampleGrid {
    pub fn end(&self) -> f64 {
        match self {
            SampleGrid::Uniform { end, .. } | SampleGrid::EveryCycles { end, .. } => *end,
            SampleGrid::Explicit { times } => times.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Sample times; `period` is the cycle length for [`SampleGrid::EveryCycles`].
    pub fn times(&self, period: Option<f64>) -> Result<Vec<f64>> {
        match *self {
            SampleGrid::Uniform { start, end, points } => {
                if points == 0 || !(start >= 0.0 && end >= start) {
                    return Err(Error::Config(format!(
                        "bad uniform grid [{start}, {end}] with {points} points"
                    )));
                }
                if points == 1 {
                    return Ok(vec![start]);
                }
                let step = (end - start) / (points - 1) as f64;
                Ok((0..points).map(|k| start + k as f64 * step).collect())
            }
            SampleGrid::EveryCycles { cycles, end } => {
                let period = period.filter(|p| *p > 0.0).ok_or_else(|| {
                    Error::Config("an every-cycles grid needs a pulse sequence with a positive cycle time".into())
                })?;
                if cycles == 0 || !(end >= 0.0) {
                    return Err(Error::Config(format!(
                        "bad every-cycles grid: {cycles} cycles up to {end}"
                    )));
                }
                let step = period * cycles as f64;
                let n = (end / step * (1.0 + 1e-12)).floor() as usize;
                Ok((0..=n).map(|k| k as f64 * step).collect())
            }
            SampleGrid::Explicit { ref times } => {
                if times.is_empty() || times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(Error::Config("explicit grid needs finite non-negative times".into()));
                }
                let mut t = times.clone();
                t.sort_by(f64::total_cmp);
                t.dedup();
                Ok(t)
            }
        }
    }
}

/// Simulated tomography of the state at chosen times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographySpec {
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    /// Times to reconstruct; empty means the first and last sample.
    #[serde(default)]
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub engine: EngineKind,
    pub initial: InitialState,
    #[serde(default)]
    pub system: SpinSystem,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub sequence: ScheduleSpec,
    #[serde(default)]
    pub error: PulseErrorModel,
    /// Defaults to 50 points over [0, 0.3 s], or every 5 cycles when a
    /// sequence is present.
    #[serde(default)]
    pub grid: Option<SampleGrid>,
    #[serde(default = "default_trajectories")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Monte-Carlo step; defaults to `min(1e-4 s, τ/10)`.
    #[serde(default)]
    pub time_step: Option<f64>,
    /// Overrides the engine's plateau tolerance.
    #[serde(default)]
    pub plateau_delta: Option<f64>,
    /// Times at which the summary reports discord; added to the sample grid.
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub tomography: Option<TomographySpec>,
    /// Where the command-line tool writes this scenario's files when no
    /// output directory is given on the command line.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_trajectories() -> usize {
    DEFAULT_TRAJECTORIES
}

impl Scenario {
    pub fn new(label: impl Into<String>, engine: EngineKind, initial: InitialState) -> Self {
        Scenario {
            label: label.into(),
            engine,
            initial,
            system: SpinSystem::default(),
            noise: NoiseModel::noiseless(),
            sequence: ScheduleSpec::None,
            error: PulseErrorModel::default(),
            grid: None,
            n_trajectories: DEFAULT_TRAJECTORIES,
            base_seed: 0,
            time_step: None,
            plateau_delta: None,
            checkpoints: Vec::new(),
            tomography: None,
            output_dir: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("parsing TOML scenario", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("parsing JSON scenario", e))
    }

    pub fn grid(&self) -> SampleGrid {
        self.grid.clone().unwrap_or_else(|| {
            if self.sequence.is_none() {
                SampleGrid::default()
            } else {
                SampleGrid::EveryCycles {
                    cycles: DEFAULT_CYCLES_PER_SAMPLE,
                    end: DEFAULT_HORIZON,
                }
            }
        })
    }

    pub fn plateau_delta(&self) -> f64 {
        self.plateau_delta.unwrap_or_else(|| self.engine.plateau_delta())
    }

    /// Checks that the engine can handle the rest of the configuration.
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::Config(format!("scenario `{}`: {why}", self.label)));
        self.noise.validate()?;
        self.error.validate()?;
        self.initial.density_matrix()?;
        if let Some(d) = self.plateau_delta {
            if !(0.0..1.0).contains(&d) {
                return bad("plateau_delta must lie in [0, 1)");
            }
        }
        if self.checkpoints.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("checkpoints must be finite and non-negative");
        }
        match self.engine {
            EngineKind::Analytic => {
                if self.initial.bd_params().is_none() {
                    return bad("the analytic engine needs a Bell-diagonal initial state");
                }
                if !self.noise.is_white() {
                    return bad("the analytic engine needs white noise");
                }
                if !self.sequence.is_none() {
                    return bad("the analytic engine does not apply pulse sequences");
                }
                if !self.system.is_on_resonance() {
                    return bad("the analytic engine needs zero resonance offsets");
                }
            }
            EngineKind::FilterFunction => {
                if self.initial.bd_params().is_none() {
                    return bad("the filter-function engine needs a Bell-diagonal initial state");
                }
                if !self.system.is_on_resonance() {
                    return bad("the filter-function engine needs zero resonance offsets");
                }
                if self.error.flip_angle_error != 0.0 || self.error.offset_hz != 0.0 {
                    return bad("the filter-function engine needs ideal pulses");
                }
            }
            EngineKind::MonteCarlo => {
                if self.n_trajectories == 0 {
                    return bad("n_trajectories must be at least 1");
                }
            }
        }
        Ok(())
    }

    /// Schedule and sample times after applying defaults.
    fn resolve(&self) -> Result<(Option<PulseSchedule>, Vec<f64>)> {
        let grid = self.grid();
        let horizon = grid.end().max(self.checkpoints.iter().copied().fold(0.0, f64::max));
        let schedule = self.sequence.resolve(horizon, &self.error)?;
        let period = schedule.as_ref().map(|s| schedule_timing(s, &self.error));
        let mut times = grid.times(period)?;
        times.extend(&self.checkpoints);
        times.sort_by(f64::total_cmp);
        times.dedup();
        Ok((schedule, times))
    }

    /// Monte-Carlo configuration for this scenario.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let (schedule, times) = self.resolve()?;
        let mut cfg = SimConfig::new(self.initial.clone(), times);
        cfg.system = self.system;
        cfg.noise = self.noise;
        cfg.error = self.error;
        cfg.n_trajectories = self.n_trajectories;
        cfg.base_seed = self.base_seed;
        cfg.schedule = schedule;
        cfg.time_step = self.time_step.unwrap_or_else(|| match cfg.schedule_tau() {
            Some(tau) => DEFAULT_TIME_STEP.min(tau / 10.0),
            None => DEFAULT_TIME_STEP,
        });
        Ok(cfg)
    }
}

/// Detected end of the discord plateau.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    /// Last sample time with `D ≥ (1−δ)·D(0)`.
    pub t_bar: f64,
    /// True when the plateau criterion held at every sample, so the real
    /// transition lies beyond the grid.
    pub censored: bool,
    pub delta: f64,
}

/// Plateau end on sampled data: the last index where `D(t) ≥ (1−δ)·D(0)`
/// before the first failure.
pub fn detect_transition(points: &[TrajectoryPoint], delta: f64) -> Option<Transition> {
    let d0 = points.first()?.triple.discord;
    let floor = (1.0 - delta) * d0;
    let fail = points.iter().position(|p| p.triple.discord < floor);
    let last = match fail {
        Some(0) => return None,
        Some(k) => k - 1,
        None => points.len() - 1,
    };
    Some(Transition {
        t_bar: points[last].t,
        censored: fail.is_none(),
        delta,
    })
}

/// One simulated tomograph.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDump {
    pub t: f64,
    pub record: MeasurementRecord,
    pub reconstructed: DensityMatrix,
    pub fidelity: f64,
    pub linear_min_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub label: String,
    pub engine: EngineKind,
    pub sequence: String,
    pub points: Vec<TrajectoryPoint>,
    /// Full states at every sample (toggling frame for the `ff` engine).
    pub states: Vec<DensityMatrix>,
    /// Standard errors of `(c1, c2, c3)` for Monte-Carlo runs.
    pub stderr: Option<Vec<[f64; 3]>>,
    pub transition: Option<Transition>,
    /// Uhlmann fidelity between the initial and final states.
    pub final_fidelity: f64,
    /// `(t, D(t))` at each requested checkpoint.
    pub checkpoints: Vec<(f64, f64)>,
    pub tomography: Vec<TomographyDump>,
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult> {
    s.validate()?;
    let (states, stderr, schedule) = match s.engine {
        EngineKind::Analytic => {
            let (_, times) = s.resolve()?;
            (analytic_states(s, &times)?, None, None)
        }
        EngineKind::FilterFunction => {
            let (schedule, times) = s.resolve()?;
            (filter_function_states(s, schedule.as_ref(), &times)?, None, schedule)
        }
        EngineKind::MonteCarlo => {
            let cfg = s.sim_config()?;
            let r = ensemble_average(&cfg)?;
            let se = r.pauli_stderr.iter().map(|p| [p[1][1], p[2][2], p[3][3]]).collect();
            let states = r.times.iter().copied().zip(r.states).collect();
            (states, Some(se), cfg.schedule)
        }
    };
    let points: Vec<TrajectoryPoint> = states
        .iter()
        .map(|(t, rho)| TrajectoryPoint::new(*t, bd_params_of(rho)))
        .collect();
    let rho0 = s.initial.density_matrix()?;
    let final_fidelity = match states.last() {
        Some((_, rho)) => fidelity(&rho0, rho)?,
        None => 1.0,
    };
    let checkpoints = s
        .checkpoints
        .iter()
        .filter_map(|&c| points.iter().find(|p| p.t == c).map(|p| (c, p.triple.discord)))
        .collect();
    let tomography = match &s.tomography {
        Some(spec) => run_tomography(spec, &states)?,
        None => Vec::new(),
    };
    Ok(ScenarioResult {
        label: s.label.clone(),
        engine: s.engine,
        sequence: schedule.map_or_else(|| s.sequence.name(), |x| x.name),
        transition: detect_transition(&points, s.plateau_delta()),
        points,
        states: states.into_iter().map(|(_, rho)| rho).collect(),
        stderr,
        final_fidelity,
        checkpoints,
        tomography,
    })
}

fn analytic_states(s: &Scenario, times: &[f64]) -> Result<Vec<(f64, DensityMatrix)>> {
    let c0 = s.initial.bd_params().expect("validated");
    let NoiseModel::White { gamma } = s.noise else {
        unreachable!("validated")
    };
    let rates = crate::channels::DephasingRates::new(gamma[0], gamma[1])?;
    times
        .iter()
        .map(|&t| Ok((t, bd_state(crate::channels::dephase_bd(c0, &rates, t))?)))
        .collect()
}

fn filter_function_states(
    s: &Scenario,
    schedule: Option<&PulseSchedule>,
    times: &[f64],
) -> Result<Vec<(f64, DensityMatrix)>> {
    let c0 = s.initial.bd_params().expect("validated");
    // place pulses where the Monte-Carlo engine puts them
    let timed = match schedule {
        Some(x) => stretch_pulses(x, s.error.event_duration()),
        None => PulseSchedule::free_evolution(),
    };
    let mut chi = vec![0.0; times.len()];
    for q in 0..2 {
        let per_qubit = decay_exponents_time_domain(&timed, &s.noise.qubit(q), times)?;
        chi.iter_mut().zip(per_qubit).for_each(|(a, b)| *a += b);
    }
    times
        .iter()
        .zip(chi)
        .map(|(&t, chi)| {
            let decay = (-chi).exp();
            Ok((t, bd_state(BDParams::new(c0.c1 * decay, c0.c2 * decay, c0.c3))?))
        })
        .collect()
}

/// Copy of `s` with every pulse at least `min_pulse` long.
fn stretch_pulses(s: &PulseSchedule, min_pulse: f64) -> PulseSchedule {
    let mut out = s.clone();
    for e in &mut out.events {
        if let PulseEvent::Pulse { duration, .. } = e {
            *duration = duration.max(min_pulse);
        }
    }
    out
}

fn run_tomography(spec: &TomographySpec, states: &[(f64, DensityMatrix)]) -> Result<Vec<TomographyDump>> {
    let picks: Vec<usize> = if spec.at.is_empty() {
        let mut v = vec![0, states.len().saturating_sub(1)];
        v.dedup();
        v
    } else {
        spec.at
            .iter()
            .map(|&t| {
                // nearest sample
                (0..states.len())
                    .min_by(|&a, &b| (states[a].0 - t).abs().total_cmp(&(states[b].0 - t).abs()))
                    .ok_or_else(|| Error::Config("no samples to reconstruct".into()))
            })
            .collect::<Result<_>>()?
    };
    picks
        .into_iter()
        .enumerate()
        .map(|(k, i)| {
            let (t, rho) = &states[i];
            let r = reconstruct(rho, spec.shots, spec.seed.wrapping_add(k as u64))?;
            Ok(TomographyDump {
                t: *t,
                record: r.record,
                reconstructed: r.state,
                fidelity: r.fidelity,
                linear_min_eigenvalue: r.linear_min_eigenvalue,
            })
        })
        .collect()
}

/// One row of a sweep summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub label: String,
    pub engine: EngineKind,
    pub sequence: String,
    pub t_bar: Option<f64>,
    pub censored: bool,
    /// `(t, D(t))` at the scenario's checkpoints.
    pub checkpoints: Vec<(f64, f64)>,
    pub final_fidelity: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn from_outcome(s: &Scenario, outcome: &Result<ScenarioResult>) -> Self {
        match outcome {
            Ok(r) => SweepRow {
                label: r.label.clone(),
                engine: r.engine,
                sequence: r.sequence.clone(),
                t_bar: r.transition.map(|x| x.t_bar),
                censored: r.transition.is_some_and(|x| x.censored),
                checkpoints: r.checkpoints.clone(),
                final_fidelity: Some(r.final_fidelity),
                error: None,
            },
            Err(e) => SweepRow {
                label: s.label.clone(),
                engine: s.engine,
                sequence: s.sequence.name(),
                t_bar: None,
                censored: false,
                checkpoints: Vec::new(),
                final_fidelity: None,
                error: Some(e.to_string()),
            },
        }
    }
}

/// Results of a sweep, in scenario order.
#[derive(Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub results: Vec<Result<ScenarioResult>>,
}

/// Runs every scenario on up to `parallelism` workers (0 = all cores). A
/// failing scenario yields a row with its error and does not stop the rest.
pub fn sweep(scenarios: &[Scenario], parallelism: usize) -> Result<SweepReport> {
    if scenarios.is_empty() {
        return Err(Error::Config("a sweep needs at least one scenario".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::Config(format!("building worker pool: {e}")))?;
    let results: Vec<Result<ScenarioResult>> = pool.install(|| scenarios.par_iter().map(run_scenario).collect());
    let rows = scenarios
        .iter()
        .zip(&results)
        .map(|(s, r)| SweepRow::from_outcome(s, r))
        .collect();
    Ok(SweepReport { rows, results })
}

/// Scenario list file: `[[scenarios]]` tables in TOML or `{"scenarios": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scenarios: Vec<Scenario>,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("parsing TOML sweep", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("parsing JSON sweep", e))
    }
}

/// Per-qubit OU variances `σ_i² = k·γ_i/τ_c` with `k` chosen so that free
/// evolution crosses `|c1(t)| = |c3|` at the white-noise transition time
/// `ln|c1/c3| / (γ_1 + γ_2)`.
pub fn calibrate_ou(c0: BDParams, gamma: [f64; 2], tau_c: f64) -> Result<NoiseModel> {
    if !(tau_c > 0.0 && tau_c.is_finite()) {
        return Err(Error::Config(format!("tau_c must be positive, got {tau_c}")));
    }
    let rates = crate::channels::DephasingRates::new(gamma[0], gamma[1])?;
    let t_bar = crate::channels::transition_time(c0, rates.mean())?;
    let x = t_bar / tau_c;
    let g = if x < 1e-4 {
        x * x * (0.5 - x / 6.0)
    } else {
        x - 1.0 + (-x).exp()
    };
    let log_ratio = (c0.c1.abs() / c0.c3.abs()).ln();
    let k = log_ratio / ((gamma[0] + gamma[1]) * tau_c * g);
    Ok(NoiseModel::OrnsteinUhlenbeck {
        sigma: gamma.map(|gi| (k * gi / tau_c).sqrt()),
        tau_c: [tau_c; 2],
    })
}

/// `base` once without pulses and once per built-in sequence at its
/// experimental delay, labelled `none`, `XY4S`, … .
pub fn dd_comparison(base: &Scenario) -> Vec<Scenario> {
    let mut out = Vec::with_capacity(1 + SequenceKind::ALL.len());
    let mut none = base.clone();
    none.label = "none".into();
    none.sequence = ScheduleSpec::None;
    out.push(none);
    for kind in SequenceKind::ALL {
        let mut s = base.clone();
        s.label = kind.name().into();
        s.sequence = ScheduleSpec::builtin(kind);
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{transition_time, DephasingRates};

    const CHLOROFORM_C: BDParams = BDParams::new(1.0, 0.7, -0.7);

    fn chloroform_rates() -> DephasingRates {
        DephasingRates::from_t2_star(0.41, 0.19).unwrap()
    }

    fn analytic() -> Scenario {
        let mut s = Scenario::new("free", EngineKind::Analytic, InitialState::Bd(CHLOROFORM_C));
        s.noise = NoiseModel::white(&chloroform_rates());
        s
    }

    #[test]
    fn analytic_transition_within_one_grid_step() {
        let r = run_scenario(&analytic()).unwrap();
        assert_eq!(r.points.len(), DEFAULT_GRID_POINTS);
        let tr = r.transition.unwrap();
        let exact = transition_time(CHLOROFORM_C, chloroform_rates().mean()).unwrap();
        let step = DEFAULT_HORIZON / (DEFAULT_GRID_POINTS - 1) as f64;
        assert!(!tr.censored);
        assert!(tr.t_bar <= exact && exact - tr.t_bar < step, "{} vs {exact}", tr.t_bar);
    }

    #[test]
    fn analytic_plateau_is_flat() {
        let r = run_scenario(&analytic()).unwrap();
        let tr = r.transition.unwrap();
        let d0 = r.points[0].triple.discord;
        for p in r.points.iter().filter(|p| p.t <= tr.t_bar) {
            assert!((p.triple.discord - d0).abs() < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_matches_analytic_transition() {
        let mut s = analytic();
        s.engine = EngineKind::MonteCarlo;
        s.n_trajectories = 2000;
        s.grid = Some(SampleGrid::Uniform {
            start: 0.0,
            end: 0.12,
            points: 41,
        });
        s.time_step = Some(1e-3);
        s.base_seed = 5;
        let mc = run_scenario(&s).unwrap().transition.unwrap();
        let exact = transition_time(CHLOROFORM_C, chloroform_rates().mean()).unwrap();
        // a 2% band on D lets a few samples past the true crossing through
        assert!((mc.t_bar - exact).abs() < 0.015, "{} vs {exact}", mc.t_bar);
    }

    #[test]
    fn engine_preconditions() {
        let mut s = analytic();
        s.initial = InitialState::Matrix(DensityMatrix::maximally_mixed());
        assert!(matches!(run_scenario(&s), Err(Error::Config(_))));
        let mut s = analytic();
        s.sequence = ScheduleSpec::builtin(SequenceKind::XY4S);
        assert!(run_scenario(&s).is_err());
        let mut s = analytic();
        s.engine = EngineKind::FilterFunction;
        s.error.flip_angle_error = 0.05;
        assert!(run_scenario(&s).is_err());
        let mut s = analytic();
        s.system.offset1_hz = 5.0;
        assert!(run_scenario(&s).is_err());
    }

    #[test]
    fn filter_function_engine_matches_analytic_without_pulses() {
        let a = run_scenario(&analytic()).unwrap();
        let mut s = analytic();
        s.engine = EngineKind::FilterFunction;
        let f = run_scenario(&s).unwrap();
        for (p, q) in a.points.iter().zip(&f.points) {
            assert!((p.triple.discord - q.triple.discord).abs() < 1e-12);
            assert!((p.params.c1 - q.params.c1).abs() < 1e-12);
        }
        assert_eq!(a.transition, f.transition);
    }

    #[test]
    fn white_noise_pulses_do_not_move_the_transition() {
        let mut s = analytic();
        s.engine = EngineKind::FilterFunction;
        s.sequence = ScheduleSpec::builtin(SequenceKind::XY8S);
        s.grid = Some(SampleGrid::Uniform {
            start: 0.0,
            end: 0.3,
            points: 50,
        });
        let dd = run_scenario(&s).unwrap();
        let free = run_scenario(&analytic()).unwrap();
        assert_eq!(dd.transition.unwrap().t_bar, free.transition.unwrap().t_bar);
    }

    #[test]
    fn ou_calibration_reproduces_free_transition() {
        let rates = chloroform_rates();
        for tau_c in [1e-3, 1e-2, 1.0] {
            let noise = calibrate_ou(CHLOROFORM_C, rates.as_array(), tau_c).unwrap();
            let t_bar = transition_time(CHLOROFORM_C, rates.mean()).unwrap();
            let chi: f64 = (0..2).map(|q| noise.qubit(q).free_decay_exponent(t_bar)).sum();
            assert!((chi - (1.0f64 / 0.7).ln()).abs() < 1e-12, "τc={tau_c}");
        }
    }

    #[test]
    fn dd_grid_samples_every_five_cycles() {
        let mut s = analytic();
        s.engine = EngineKind::FilterFunction;
        s.error = PulseErrorModel::chloroform();
        s.sequence = ScheduleSpec::builtin(SequenceKind::XY4S);
        let cfg = s.sim_config().unwrap();
        let period = schedule_timing(cfg.schedule.as_ref().unwrap(), &s.error);
        assert!((cfg.sample_times[1] - 5.0 * period).abs() < 1e-15);
        assert!(*cfg.sample_times.last().unwrap() <= DEFAULT_HORIZON);
        assert!(period * cfg.schedule.unwrap().repetitions as f64 >= DEFAULT_HORIZON);
        assert!((cfg.time_step - 0.58e-4).abs() < 1e-18);
    }

    #[test]
    fn checkpoints_join_the_grid() {
        let mut s = analytic();
        s.checkpoints = vec![0.1234];
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.points.len(), DEFAULT_GRID_POINTS + 1);
        assert_eq!(r.checkpoints.len(), 1);
        assert_eq!(r.checkpoints[0].0, 0.1234);
    }

    #[test]
    fn sweep_rows_keep_order_and_errors() {
        let mut bad = analytic();
        bad.label = "bad".into();
        bad.initial = InitialState::Matrix(DensityMatrix::maximally_mixed());
        let list = vec![analytic(), bad];
        let report = sweep(&list, 2).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.rows[0].error.is_none());
        assert!(report.rows[1].error.as_deref().unwrap().contains("Bell-diagonal"));
        let single = sweep(&list[..1], 1).unwrap();
        assert_eq!(single.results[0].as_ref().unwrap(), &run_scenario(&list[0]).unwrap());
        assert!(sweep(&[], 1).is_err());
    }

    #[test]
    fn sweep_is_permutation_invariant() {
        let mut base = analytic();
        base.engine = EngineKind::FilterFunction;
        base.noise = calibrate_ou(CHLOROFORM_C, chloroform_rates().as_array(), 1e-2).unwrap();
        let list = dd_comparison(&base);
        let mut rev = list.clone();
        rev.reverse();
        let mut a = sweep(&list, 1).unwrap().rows;
        let mut b = sweep(&rev, 3).unwrap().rows;
        a.sort_by(|x, y| x.label.cmp(&y.label));
        b.sort_by(|x, y| x.label.cmp(&y.label));
        assert_eq!(a, b);
    }

    #[test]
    fn tomography_dumps_first_and_last() {
        let mut s = analytic();
        s.tomography = Some(TomographySpec {
            shots: 100_000,
            seed: 1,
            at: vec![],
        });
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.tomography.len(), 2);
        assert_eq!(r.tomography[1].t, DEFAULT_HORIZON);
        assert!(r.tomography.iter().all(|d| d.fidelity > 0.99));
    }

    #[test]
    fn scenario_toml() {
        let text = r#"
            label = "xy16"
            engine = "filter_function"
            initial = { bd = { c1 = 1.0, c2 = 0.7, c3 = -0.7 } }
            noise = { kind = "ornstein_uhlenbeck", sigma = [10.0, 12.0], tau_c = [0.01, 0.01] }
            sequence = { kind = "builtin", name = "XY16S", tau = 1.45e-4 }
            grid = { kind = "every_cycles", cycles = 10, end = 0.1 }
        "#;
        let s = Scenario::from_toml(text).unwrap();
        assert_eq!(s.engine, EngineKind::FilterFunction);
        assert_eq!(s.n_trajectories, DEFAULT_TRAJECTORIES);
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.sequence, "XY16S");
        let back = Scenario::from_json(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!("monte-carlo".parse::<EngineKind>().is_ok());
        assert!("exact".parse::<EngineKind>().is_err());
    }

    #[test]
    fn dsl_sequence_covers_the_grid() {
        let spec = ScheduleSpec::Dsl {
            text: "[tau/2 P(x) tau P(y) tau P(x) tau P(y) tau/2]^N".into(),
            tau: Some(1e-3),
            cycles: None,
        };
        let s = spec.resolve(0.1, &PulseErrorModel::default()).unwrap().unwrap();
        assert!(s.total_duration() >= 0.1);
        assert_eq!(s.repetitions, 26);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn transition_is_a_sample_and_precedes_failure(d in proptest::collection::vec(0.0f64..1.0, 1..40), delta in 0.0f64..0.5) {
            let points: Vec<TrajectoryPoint> = d
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let mut p = TrajectoryPoint::new(k as f64, CHLOROFORM_C);
                    p.triple.discord = x;
                    p
                })
                .collect();
            let floor = (1.0 - delta) * d[0];
            let tr = detect_transition(&points, delta).unwrap();
            let k = tr.t_bar as usize;
            proptest::prop_assert!(d[..=k].iter().all(|&x| x >= floor));
            proptest::prop_assert_eq!(tr.censored, k + 1 == d.len());
            if k + 1 < d.len() {
                proptest::prop_assert!(d[k + 1] < floor);
            }
        }
    }
}
