//! Classical dephasing noise: frequency fluctuations `δ_i(t)` in rad/s.
//!
//! Spectra use the convention `S(ω) = ∫ ⟨δ(0)δ(τ)⟩ e^{iωτ} dτ`, so white
//! noise with rate `γ` has `S = 2γ` and an Ornstein-Uhlenbeck process with
//! variance `σ²` and correlation time `τ_c` has `S = 2σ²τ_c / (1 + ω²τ_c²)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::DephasingRates;
use crate::error::{Error, Result};

/// Per-qubit noise for both qubits of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    White { gamma: [f64; 2] },
    OrnsteinUhlenbeck { sigma: [f64; 2], tau_c: [f64; 2] },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel::White { gamma: [0.0, 0.0] }
    }

    pub fn white(rates: &DephasingRates) -> Self {
        NoiseModel::White {
            gamma: rates.as_array(),
        }
    }

    pub fn qubit(&self, i: usize) -> QubitNoise {
        let i = i.min(1);
        match *self {
            NoiseModel::White { gamma } => QubitNoise::White { gamma: gamma[i] },
            NoiseModel::OrnsteinUhlenbeck { sigma, tau_c } => QubitNoise::OrnsteinUhlenbeck {
                sigma: sigma[i],
                tau_c: tau_c[i],
            },
        }
    }

    pub fn is_white(&self) -> bool {
        matches!(self, NoiseModel::White { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        match *self {
            NoiseModel::White { gamma } if gamma.iter().all(|&g| ok(g)) => Ok(()),
            NoiseModel::White { gamma } => Err(Error::Config(format!(
                "white-noise rates must be non-negative, got {gamma:?}"
            ))),
            NoiseModel::OrnsteinUhlenbeck { sigma, tau_c } => {
                if !sigma.iter().all(|&s| ok(s)) {
                    return Err(Error::Config(format!(
                        "OU standard deviations must be non-negative, got {sigma:?}"
                    )));
                }
                if !tau_c.iter().all(|&t| t.is_finite() && t > 0.0) {
                    return Err(Error::Config(format!(
                        "OU correlation times must be positive, got {tau_c:?}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Noise acting on a single qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QubitNoise {
    White { gamma: f64 },
    OrnsteinUhlenbeck { sigma: f64, tau_c: f64 },
}

impl QubitNoise {
    pub fn spectrum(&self, omega: f64) -> f64 {
        self.flat_level() + self.colored(omega)
    }

    /// Frequency-independent part of the spectrum.
    pub(crate) fn flat_level(&self) -> f64 {
        match *self {
            QubitNoise::White { gamma } => 2.0 * gamma,
            QubitNoise::OrnsteinUhlenbeck { .. } => 0.0,
        }
    }

    /// Frequency-dependent part of the spectrum.
    pub(crate) fn colored(&self, omega: f64) -> f64 {
        match *self {
            QubitNoise::White { .. } => 0.0,
            QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } => {
                let x = omega * tau_c;
                2.0 * sigma * sigma * tau_c / (1.0 + x * x)
            }
        }
    }

    pub(crate) fn has_colored_part(&self) -> bool {
        matches!(self, QubitNoise::OrnsteinUhlenbeck { sigma, .. } if *sigma > 0.0)
    }

    pub(crate) fn correlation_time(&self) -> Option<f64> {
        match *self {
            QubitNoise::White { .. } => None,
            QubitNoise::OrnsteinUhlenbeck { tau_c, .. } => Some(tau_c),
        }
    }

    /// `∫_Ω^∞ S_colored(ω) / ω² dω`.
    pub(crate) fn colored_tail(&self, big_omega: f64) -> f64 {
        match *self {
            QubitNoise::White { .. } => 0.0,
            QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } => {
                // 1/Ω − τ_c·atan(1/(Ωτ_c)), expanded for large Ωτ_c to avoid cancellation
                let x = big_omega * tau_c;
                let bracket = if x > 1e3 {
                    let y = 1.0 / (x * x);
                    y * (1.0 / 3.0 - y * (1.0 / 5.0 - y / 7.0)) / big_omega
                } else {
                    1.0 / big_omega - tau_c * (1.0 / x).atan()
                };
                2.0 * sigma * sigma * tau_c * bracket
            }
        }
    }

    /// Decay exponent without pulses: `γt` or `σ²τ_c²(t/τ_c − 1 + e^{−t/τ_c})`.
    pub fn free_decay_exponent(&self, t: f64) -> f64 {
        match *self {
            QubitNoise::White { gamma } => gamma * t,
            QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } => {
                let x = t / tau_c;
                // x − 1 + e^{−x} = x²/2 − x³/6 + … for small x
                let g = if x < 1e-4 {
                    x * x * (0.5 - x / 6.0)
                } else {
                    x - 1.0 + (-x).exp()
                };
                sigma * sigma * tau_c * tau_c * g
            }
        }
    }
}

/// Per-step Gaussian phase standard deviation `√(2γΔt)` that makes the
/// ensemble coherence decay as `e^{−γt}`.
pub fn calibrate_white_noise(gamma: f64, time_step: f64) -> f64 {
    (2.0 * gamma.max(0.0) * time_step.max(0.0)).sqrt()
}

/// Exact one-step update of a stationary OU process over `dt`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OuStep {
    decay: f64,
    kick: f64,
}

impl OuStep {
    pub(crate) fn new(sigma: f64, tau_c: f64, dt: f64) -> Self {
        let decay = (-dt / tau_c).exp();
        OuStep {
            decay,
            // 1 − e^{−2x} loses precision for tiny x; use expm1
            kick: sigma * (-(-2.0 * dt / tau_c).exp_m1()).sqrt(),
        }
    }

    pub(crate) fn advance(&self, x: f64, xi: f64) -> f64 {
        x * self.decay + self.kick * xi
    }
}

/// Samples `x_0 … x_n` of a stationary OU path at spacing `time_step` over
/// `duration`, with `x_0 ~ N(0, σ²)`.
pub fn ou_path(sigma: f64, tau_c: f64, time_step: f64, duration: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && tau_c > 0.0 && time_step > 0.0 && duration >= 0.0) {
        return Err(Error::Config(format!(
            "ou_path needs sigma ≥ 0 and positive tau_c, time_step (got {sigma}, {tau_c}, {time_step})"
        )));
    }
    let n = (duration / time_step).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = OuStep::new(sigma, tau_c, time_step);
    let mut x = sigma * rng.sample::<f64, _>(StandardNormal);
    let mut path = Vec::with_capacity(n + 1);
    path.push(x);
    for _ in 0..n {
        x = step.advance(x, rng.sample(StandardNormal));
        path.push(x);
    }
    Ok(path)
}
