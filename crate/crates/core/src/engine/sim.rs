use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::noise::{OuStep, QubitNoise};
use super::SimConfig;
use crate::ddseq::pulse_unitary;
use crate::error::{Error, Result};
use crate::qstate::{pauli_table, ComplexMatrix4, DensityMatrix};

/// Trajectories per reduction block of [`ensemble_average`].
pub const TRAJECTORY_BLOCK: usize = 64;

/// `m = ±½` for bit 0 / 1 of each qubit, indexed by basis state.
const SPIN: [[f64; 2]; 4] = [[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]];

#[derive(Debug, Clone, Copy)]
enum Action {
    Pulse(usize),
    Sample(usize),
}

/// Everything a trajectory needs, derived once from a [`SimConfig`].
struct Plan {
    rho0: ComplexMatrix4,
    stops: Vec<(f64, Action)>,
    pulses: Vec<ComplexMatrix4>,
    offsets: [f64; 2],
    j_coupling: f64,
    noise: [QubitNoise; 2],
    time_step: f64,
    n_samples: usize,
}

impl Plan {
    fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let t_end = cfg.sample_times.last().copied().unwrap_or(0.0);
        let mut stops: Vec<(f64, Action)> = Vec::new();
        let mut pulses = Vec::new();
        if let Some(schedule) = &cfg.schedule {
            let layout = schedule.layout(cfg.error.event_duration());
            pulses = layout
                .pulses
                .iter()
                .map(|slot| {
                    let u1 = pulse_unitary(slot.phase, &cfg.error, 0);
                    let u2 = pulse_unitary(slot.phase, &cfg.error, 1);
                    u1.kron(&u2)
                })
                .collect();
            let per_cycle = layout.pulses.len();
            for (k, (center, _)) in layout.pulses_until(t_end).enumerate() {
                stops.push((center, Action::Pulse(k % per_cycle)));
            }
        }
        stops.extend(
            cfg.sample_times
                .iter()
                .enumerate()
                .map(|(k, &t)| (t, Action::Sample(k))),
        );
        // stable sort keeps pulses ahead of samples at equal times
        stops.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Plan {
            rho0: cfg.initial.density_matrix()?.into_matrix(),
            stops,
            pulses,
            offsets: [cfg.system.offset1_hz, cfg.system.offset2_hz],
            j_coupling: cfg.system.j_coupling_hz,
            noise: [cfg.noise.qubit(0), cfg.noise.qubit(1)],
            time_step: cfg.time_step,
            n_samples: cfg.sample_times.len(),
        })
    }

    /// Runs trajectory `index`, calling `record(k, ρ)` at sample `k`.
    fn run(&self, base_seed: u64, index: u64, mut record: impl FnMut(usize, &ComplexMatrix4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(index);
        let mut field = [0.0; 2];
        for (q, noise) in self.noise.iter().enumerate() {
            if let QubitNoise::OrnsteinUhlenbeck { sigma, .. } = *noise {
                field[q] = sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let full_steps = self.noise.map(|n| match n {
            QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } => Some(OuStep::new(sigma, tau_c, self.time_step)),
            QubitNoise::White { .. } => None,
        });

        let mut rho = self.rho0;
        let mut now = 0.0;
        for &(t, action) in &self.stops {
            let angles = self.advance(&mut rng, &mut field, &full_steps, t - now);
            now = t;
            apply_phases(&mut rho, angles);
            match action {
                Action::Pulse(k) => rho = rho.conjugate_by(&self.pulses[k]),
                Action::Sample(k) => record(k, &rho),
            }
        }
    }

    /// Accumulated single-qubit phases and the coupling phase over `span`.
    fn advance(
        &self,
        rng: &mut ChaCha8Rng,
        field: &mut [f64; 2],
        full_steps: &[Option<OuStep>; 2],
        span: f64,
    ) -> [f64; 3] {
        let mut angle = [
            2.0 * PI * self.offsets[0] * span,
            2.0 * PI * self.offsets[1] * span,
            2.0 * PI * self.j_coupling * span,
        ];
        let mut left = span;
        while left > 0.0 {
            let h = if left < self.time_step * (1.0 + 1e-9) {
                left
            } else {
                self.time_step
            };
            left -= h;
            if left < 1e-15 * span {
                left = 0.0;
            }
            for q in 0..2 {
                match self.noise[q] {
                    QubitNoise::White { gamma } if gamma > 0.0 => {
                        let xi: f64 = rng.sample(StandardNormal);
                        angle[q] += xi * (2.0 * gamma * h).sqrt();
                    }
                    QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } if sigma > 0.0 => {
                        angle[q] += field[q] * h;
                        let step = if h == self.time_step {
                            full_steps[q].expect("OU step precomputed")
                        } else {
                            OuStep::new(sigma, tau_c, h)
                        };
                        field[q] = step.advance(field[q], rng.sample(StandardNormal));
                    }
                    _ => {}
                }
            }
        }
        angle
    }
}

/// `ρ ← UρU†` for `U = diag(e^{−iθ_b})`, `θ_b = a1·m1 + a2·m2 + aJ·m1·m2`.
fn apply_phases(rho: &mut ComplexMatrix4, angles: [f64; 3]) {
    let theta: [f64; 4] = std::array::from_fn(|b| {
        let [m1, m2] = SPIN[b];
        angles[0] * m1 + angles[1] * m2 + angles[2] * m1 * m2
    });
    for a in 0..4 {
        for b in 0..4 {
            if a != b {
                rho.0[a][b] *= C64::from_polar(1.0, theta[b] - theta[a]);
            }
        }
    }
}

/// States of one trajectory at every sample time.
pub fn simulate_trajectory(cfg: &SimConfig, traj_index: u64) -> Result<Vec<DensityMatrix>> {
    let plan = Plan::new(cfg)?;
    let mut out = vec![ComplexMatrix4::zeros(); plan.n_samples];
    plan.run(cfg.base_seed, traj_index, |k, rho| out[k] = *rho);
    out.into_iter()
        .map(|m| DensityMatrix::new(m).map_err(|e| Error::NumericalFailure(format!("trajectory {traj_index}: {e}"))))
        .collect()
}

/// Ensemble mean state and Pauli statistics at each sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `⟨σ_a⊗σ_b⟩` indexed `[sample][a][b]`.
    pub pauli_mean: Vec<[[f64; 4]; 4]>,
    /// Standard error of each mean over trajectories.
    pub pauli_stderr: Vec<[[f64; 4]; 4]>,
    pub n_trajectories: usize,
}

struct Sums {
    rho: Vec<ComplexMatrix4>,
    pauli: Vec<[[f64; 4]; 4]>,
    pauli_sq: Vec<[[f64; 4]; 4]>,
}

impl Sums {
    fn new(n: usize) -> Self {
        Sums {
            rho: vec![ComplexMatrix4::zeros(); n],
            pauli: vec![[[0.0; 4]; 4]; n],
            pauli_sq: vec![[[0.0; 4]; 4]; n],
        }
    }

    fn add_sample(&mut self, k: usize, rho: &ComplexMatrix4) {
        self.rho[k] = self.rho[k] + *rho;
        let p = pauli_table(rho);
        for a in 0..4 {
            for b in 0..4 {
                self.pauli[k][a][b] += p[a][b];
                self.pauli_sq[k][a][b] += p[a][b] * p[a][b];
            }
        }
    }

    fn merge(&mut self, other: &Sums) {
        for k in 0..self.rho.len() {
            self.rho[k] = self.rho[k] + other.rho[k];
            for a in 0..4 {
                for b in 0..4 {
                    self.pauli[k][a][b] += other.pauli[k][a][b];
                    self.pauli_sq[k][a][b] += other.pauli_sq[k][a][b];
                }
            }
        }
    }
}

/// Mean over `cfg.n_trajectories` trajectories. Trajectories are summed in
/// index order within blocks of [`TRAJECTORY_BLOCK`] and the blocks are
/// combined in order, so the result is bit-identical for any thread count.
pub fn ensemble_average(cfg: &SimConfig) -> Result<EnsembleResult> {
    let plan = Plan::new(cfg)?;
    let n = cfg.n_trajectories;
    let n_blocks = n.div_ceil(TRAJECTORY_BLOCK);
    let blocks: Vec<Sums> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut sums = Sums::new(plan.n_samples);
            let first = block * TRAJECTORY_BLOCK;
            for traj in first..(first + TRAJECTORY_BLOCK).min(n) {
                plan.run(cfg.base_seed, traj as u64, |k, rho| sums.add_sample(k, rho));
            }
            sums
        })
        .collect();
    let mut total = Sums::new(plan.n_samples);
    for b in &blocks {
        total.merge(b);
    }

    let nf = n as f64;
    let mut states = Vec::with_capacity(plan.n_samples);
    let mut pauli_mean = Vec::with_capacity(plan.n_samples);
    let mut pauli_stderr = Vec::with_capacity(plan.n_samples);
    for k in 0..plan.n_samples {
        let mean = total.rho[k].scale_re(1.0 / nf).hermitian_part();
        states.push(
            DensityMatrix::new(mean)
                .map_err(|e| Error::NumericalFailure(format!("ensemble mean at sample {k}: {e}")))?,
        );
        let mut m = [[0.0; 4]; 4];
        let mut se = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let mu = total.pauli[k][a][b] / nf;
                m[a][b] = mu;
                if n > 1 {
                    let var = ((total.pauli_sq[k][a][b] - nf * mu * mu) / (nf - 1.0)).max(0.0);
                    se[a][b] = (var / nf).sqrt();
                }
            }
        }
        pauli_mean.push(m);
        pauli_stderr.push(se);
    }
    Ok(EnsembleResult {
        times: cfg.sample_times.clone(),
        states,
        pauli_mean,
        pauli_stderr,
        n_trajectories: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{dephase_bd, DephasingRates};
    use crate::ddseq::{builtin_sequence, filter_decay_exponent, PulseErrorModel, SequenceKind};
    use crate::engine::{InitialState, NoiseModel, SpinSystem};
    use crate::qstate::{bd_params_of, bd_state, pauli_expectation, BDParams, Pauli};

    const CHLOROFORM_C: BDParams = BDParams::new(1.0, 0.7, -0.7);

    fn plus_zero() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::product_pure(
            [C64::new(s, 0.0), C64::new(s, 0.0)],
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn noiseless_bd_state_is_stationary() {
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.0, 0.01, 0.1]);
        cfg.system.j_coupling_hz = 215.0;
        let rho0 = bd_state(CHLOROFORM_C).unwrap();
        for rho in simulate_trajectory(&cfg, 0).unwrap() {
            assert!(rho.matrix().max_abs_diff(rho0.matrix()) < 1e-12);
        }
    }

    #[test]
    fn offset_rotates_coherence() {
        let mut cfg = SimConfig::new(InitialState::Matrix(plus_zero()), vec![2.5e-3]);
        cfg.system.offset1_hz = 100.0;
        let rho = simulate_trajectory(&cfg, 0).unwrap()[0];
        // ρ_{0x,1x} picks up e^{−i(θ_0 − θ_1)} = e^{−i·2π·100·t}; ⟨X⟩ → 0, ⟨Y⟩ → 1
        assert!(pauli_expectation(rho, Pauli::X, Pauli::I).abs() < 1e-12);
        assert!((pauli_expectation(rho, Pauli::Y, Pauli::I) - 1.0).abs() < 1e-12);
        let phase = rho.matrix()[(0, 2)].arg();
        assert!((phase.abs() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ideal_xy4_cycles_return_the_state() {
        let tau = 0.58e-3;
        let s = builtin_sequence(SequenceKind::XY4S, tau).unwrap().with_repetitions(3);
        let period = s.cycle_duration();
        let mut cfg = SimConfig::new(
            InitialState::Matrix(plus_zero()),
            vec![period, 2.0 * period, 3.0 * period],
        );
        cfg.schedule = Some(s);
        cfg.time_step = tau / 10.0;
        let rho0 = plus_zero();
        for rho in simulate_trajectory(&cfg, 0).unwrap() {
            assert!(rho.matrix().max_abs_diff(rho0.matrix()) < 1e-12);
        }
    }

    #[test]
    fn single_trajectory_ensemble() {
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.0, 0.02, 0.05]);
        cfg.noise = NoiseModel::OrnsteinUhlenbeck {
            sigma: [20.0, 30.0],
            tau_c: [1e-2, 1e-2],
        };
        cfg.base_seed = 9;
        let single = simulate_trajectory(&cfg, 0).unwrap();
        let ens = ensemble_average(&cfg).unwrap();
        for (a, b) in single.iter().zip(&ens.states) {
            assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-15);
        }
        assert!(ens.pauli_stderr.iter().all(|t| t.iter().flatten().all(|&s| s == 0.0)));
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.0]);
        cfg.n_trajectories = 0;
        assert!(matches!(ensemble_average(&cfg), Err(Error::Config(_))));
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.0]);
        cfg.schedule = Some(builtin_sequence(SequenceKind::XY4S, 1e-3).unwrap());
        cfg.time_step = 2e-4;
        assert!(matches!(simulate_trajectory(&cfg, 0), Err(Error::Config(_))));
        let cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.1, 0.0]);
        assert!(simulate_trajectory(&cfg, 0).is_err());
        let cfg = SimConfig::new(InitialState::Bd(BDParams::new(1.0, 1.0, 1.0)), vec![0.0]);
        assert!(matches!(
            simulate_trajectory(&cfg, 0),
            Err(Error::UnphysicalParams { .. })
        ));
    }

    #[test]
    fn white_noise_single_qubit_coherence() {
        let gamma = 3.8511;
        let mut cfg = SimConfig::new(InitialState::Matrix(plus_zero()), vec![0.1]);
        cfg.noise = NoiseModel::White { gamma: [gamma, 0.0] };
        cfg.n_trajectories = 10_000;
        cfg.time_step = 1e-3;
        cfg.base_seed = 1;
        let r = ensemble_average(&cfg).unwrap();
        let x = r.pauli_mean[0][1][0];
        let se = r.pauli_stderr[0][1][0];
        let expect = (-gamma * 0.1f64).exp();
        assert!((expect - 0.680).abs() < 1e-3);
        assert!((x - expect).abs() < 0.02 && (x - expect).abs() < 4.0 * se, "{x} ± {se}");
    }

    #[test]
    fn white_noise_reproduces_bd_flow() {
        let rates = DephasingRates::from_t2_star(0.41, 0.19).unwrap();
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.0463]);
        cfg.noise = NoiseModel::white(&rates);
        cfg.n_trajectories = 10_000;
        cfg.time_step = 1e-3;
        cfg.base_seed = 3;
        let r = ensemble_average(&cfg).unwrap();
        let c = bd_params_of(r.states[0]);
        assert!((c.c1 - 0.70).abs() < 0.02, "{c}");
        let flow = dephase_bd(CHLOROFORM_C, &rates, 0.0463);
        assert!((c.c2 - flow.c2).abs() < 0.02);
        assert!((c.c3 - flow.c3).abs() < 1e-12);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = builtin_sequence(SequenceKind::XY8S, 0.29e-3)
            .unwrap()
            .with_repetitions(10);
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.005, 0.02]);
        cfg.noise = NoiseModel::OrnsteinUhlenbeck {
            sigma: [20.0, 30.0],
            tau_c: [1e-2, 5e-3],
        };
        cfg.schedule = Some(s);
        cfg.error = PulseErrorModel::chloroform().with_flip_error(0.02);
        cfg.time_step = 2.9e-5;
        cfg.n_trajectories = 3 * TRAJECTORY_BLOCK + 5;
        cfg.base_seed = 77;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_average(&cfg).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
        cfg.base_seed = 78;
        assert_ne!(ensemble_average(&cfg).unwrap().states, a.states);
    }

    #[test]
    fn ideal_dd_stays_bell_diagonal() {
        let s = builtin_sequence(SequenceKind::XY4S, 0.58e-3)
            .unwrap()
            .with_repetitions(40);
        let times: Vec<f64> = (1..=8).map(|k| k as f64 * 0.01).collect();
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), times);
        cfg.noise = NoiseModel::OrnsteinUhlenbeck {
            sigma: [20.0, 30.0],
            tau_c: [1e-2, 1e-2],
        };
        cfg.schedule = Some(s);
        cfg.time_step = 5.8e-5;
        cfg.n_trajectories = 400;
        let r = ensemble_average(&cfg).unwrap();
        let off = [
            (Pauli::X, Pauli::Y),
            (Pauli::Z, Pauli::I),
            (Pauli::I, Pauli::X),
            (Pauli::Y, Pauli::X),
        ];
        for k in 0..r.times.len() {
            for (a, b) in off {
                let (m, se) = (
                    r.pauli_mean[k][a.index()][b.index()],
                    r.pauli_stderr[k][a.index()][b.index()],
                );
                assert!(m.abs() <= 3.0 * se + 1e-12, "⟨{a}{b}⟩ = {m} ± {se} at t={}", r.times[k]);
            }
        }
    }

    #[test]
    fn ensemble_matches_filter_function() {
        let tau = 0.29e-3;
        let s = builtin_sequence(SequenceKind::XY8S, tau).unwrap().with_repetitions(40);
        let noise = NoiseModel::White { gamma: [5.0, 0.0] };
        let times = vec![0.01, 0.03, 0.07];
        let mut cfg = SimConfig::new(InitialState::Matrix(plus_zero()), times.clone());
        cfg.noise = noise;
        cfg.schedule = Some(s.clone());
        cfg.time_step = tau / 10.0;
        cfg.n_trajectories = 2000;
        let r = ensemble_average(&cfg).unwrap();
        for (k, &t) in times.iter().enumerate() {
            // the π pulses flip qubit 1's coherence, so compare its magnitude
            let x = r.pauli_mean[k][1][0];
            let y = r.pauli_mean[k][2][0];
            let mag = (x * x + y * y).sqrt();
            let se = r.pauli_stderr[k][1][0].max(r.pauli_stderr[k][2][0]);
            let expect = (-filter_decay_exponent(&s, &noise.qubit(0), t)).exp();
            assert!(
                (mag - expect).abs() < 3.0 * se + 1e-3,
                "t={t}: {mag} vs {expect} ± {se}"
            );
        }
    }

    #[test]
    fn offsets_do_not_break_validity() {
        let mut cfg = SimConfig::new(InitialState::Bd(CHLOROFORM_C), vec![0.01, 0.02]);
        cfg.system = SpinSystem {
            offset1_hz: 30.0,
            offset2_hz: -12.0,
            j_coupling_hz: 215.0,
        };
        cfg.schedule = Some(
            builtin_sequence(SequenceKind::KDDXY, 0.116e-3)
                .unwrap()
                .with_repetitions(20),
        );
        cfg.error = PulseErrorModel {
            flip_angle_error: 0.05,
            offset_hz: 500.0,
            pulse_duration: [15.1e-6, 26.8e-6],
        };
        cfg.time_step = 1e-5;
        cfg.noise = NoiseModel::White { gamma: [2.0, 5.0] };
        for rho in simulate_trajectory(&cfg, 4).unwrap() {
            assert!(rho.matrix().hermiticity_error() < 1e-10);
            assert!((rho.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }
}
