//! Monte-Carlo density-matrix evolution of the two-spin system under
//! stochastic dephasing and timed pulses.
//!
//! Between pulses the Hamiltonian
//!
//! ```text
//! H(t) = 2π [(ν1 + δ1(t)/2π) Iz1 + (ν2 + δ2(t)/2π) Iz2 + J Iz1 Iz2]
//! ```
//!
//! is diagonal in the computational basis, so a trajectory only accumulates
//! phases; noise values `δ_i` (rad/s) are held constant within each step.
//! Pulses act instantaneously at their centers as `U1 ⊗ U2` from
//! [`pulse_unitary`](crate::ddseq::pulse_unitary).
//!
//! Trajectory `k` draws its noise from `ChaCha8Rng::seed_from_u64(base_seed)`
//! switched to stream `k`, so results do not depend on how trajectories are
//! distributed over threads.

mod noise;
mod sim;

use serde::{Deserialize, Serialize};

pub use noise::{calibrate_white_noise, ou_path, NoiseModel, QubitNoise};
pub use sim::{ensemble_average, simulate_trajectory, EnsembleResult, TRAJECTORY_BLOCK};

use crate::ddseq::{PulseErrorModel, PulseSchedule};
use crate::error::{Error, Result};
use crate::qstate::{bd_state, BDParams, DensityMatrix};

/// Rotating-frame offsets and scalar coupling, all in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SpinSystem {
    pub offset1_hz: f64,
    pub offset2_hz: f64,
    pub j_coupling_hz: f64,
}

impl SpinSystem {
    pub fn is_on_resonance(&self) -> bool {
        self.offset1_hz == 0.0 && self.offset2_hz == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum InitialState {
    Bd(BDParams),
    Matrix(DensityMatrix),
}

impl InitialState {
    pub fn density_matrix(&self) -> Result<DensityMatrix> {
        match self {
            InitialState::Bd(c) => bd_state(*c),
            InitialState::Matrix(m) => Ok(*m),
        }
    }

    pub fn bd_params(&self) -> Option<BDParams> {
        match self {
            InitialState::Bd(c) => Some(*c),
            InitialState::Matrix(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub initial: InitialState,
    #[serde(default)]
    pub system: SpinSystem,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub schedule: Option<PulseSchedule>,
    #[serde(default)]
    pub error: PulseErrorModel,
    pub sample_times: Vec<f64>,
    pub n_trajectories: usize,
    #[serde(default)]
    pub base_seed: u64,
    pub time_step: f64,
}

impl SimConfig {
    /// Noise-free, pulse-free configuration sampling `sample_times`.
    pub fn new(initial: InitialState, sample_times: Vec<f64>) -> Self {
        SimConfig {
            initial,
            system: SpinSystem::default(),
            noise: NoiseModel::noiseless(),
            schedule: None,
            error: PulseErrorModel::default(),
            sample_times,
            n_trajectories: 1,
            base_seed: 0,
            time_step: 1e-4,
        }
    }

    /// Shortest delay between pulses, used to bound the time step.
    pub fn schedule_tau(&self) -> Option<f64> {
        let s = self.schedule.as_ref()?;
        s.tau.or_else(|| {
            s.delays()
                .into_iter()
                .filter(|&d| d > 0.0)
                .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories < 1 {
            return Err(Error::Config("n_trajectories must be at least 1".into()));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::Config(format!(
                "time_step must be positive, got {}",
                self.time_step
            )));
        }
        if let Some(tau) = self.schedule_tau() {
            if self.time_step > tau / 10.0 * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "time_step {} exceeds tau/10 = {} for the pulse schedule",
                    self.time_step,
                    tau / 10.0
                )));
            }
        }
        if self.sample_times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("sample times must be finite and non-negative".into()));
        }
        if self.sample_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("sample times must be sorted ascending".into()));
        }
        let s = &self.system;
        if ![s.offset1_hz, s.offset2_hz, s.j_coupling_hz]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::Config("spin-system frequencies must be finite".into()));
        }
        self.noise.validate()?;
        self.error.validate()?;
        self.initial.density_matrix()?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format("parsing TOML simulation config", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::format("parsing JSON simulation config", e))
    }
}
