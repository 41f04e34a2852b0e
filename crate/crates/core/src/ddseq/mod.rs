//! Dynamical-decoupling pulse sequences.
//!
//! A [`PulseSchedule`] is one cycle of timed events repeated `repetitions`
//! times. The built-in sequences are the time-symmetric XY4, XY8, XY16 and
//! the Knill-pulse based KDD_xy, all with `τ/2` edge delays and `τ` between
//! consecutive π pulses.

mod dsl;
mod filter;
mod pulse;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dsl::{compile_dsl, parse_dsl, print_dsl, DslBindings, DslError};
pub use filter::{decay_exponents_time_domain, filter_decay_exponent, FilterFunction, QUADRATURE_REL_TOL};
pub use pulse::pulse_unitary;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseEvent {
    Delay {
        duration: f64,
    },
    Pulse {
        phase: f64,
        duration: f64,
        nominal_flip: f64,
    },
}

impl PulseEvent {
    pub fn delay(duration: f64) -> Self {
        PulseEvent::Delay { duration }
    }

    /// Instantaneous π pulse about `cos φ x + sin φ y`, phase wrapped to `[0, 2π)`.
    pub fn pi(phase: f64) -> Self {
        PulseEvent::Pulse {
            phase: wrap_phase(phase),
            duration: 0.0,
            nominal_flip: PI,
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            PulseEvent::Delay { duration } | PulseEvent::Pulse { duration, .. } => duration,
        }
    }

    pub fn is_pulse(&self) -> bool {
        matches!(self, PulseEvent::Pulse { .. })
    }
}

pub(crate) fn wrap_phase(phase: f64) -> f64 {
    let w = phase.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative input
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// Serializes as `{name, tau_s, events: [{kind, duration_s, phase_rad}], repetitions}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleJson", into = "ScheduleJson")]
pub struct PulseSchedule {
    pub name: String,
    /// Inter-pulse delay the schedule was built with, if any.
    pub tau: Option<f64>,
    pub events: Vec<PulseEvent>,
    pub repetitions: u32,
}

impl PulseSchedule {
    /// No pulses at all: the toggling function is `+1` everywhere.
    pub fn free_evolution() -> Self {
        PulseSchedule {
            name: "none".into(),
            tau: None,
            events: Vec::new(),
            repetitions: 0,
        }
    }

    pub fn pulses_per_cycle(&self) -> usize {
        self.events.iter().filter(|e| e.is_pulse()).count()
    }

    /// Sum of event durations in one cycle.
    pub fn cycle_duration(&self) -> f64 {
        self.events.iter().map(PulseEvent::duration).sum()
    }

    pub fn total_duration(&self) -> f64 {
        self.repetitions as f64 * self.cycle_duration()
    }

    pub fn delays(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter_map(|e| match *e {
                PulseEvent::Delay { duration } => Some(duration),
                PulseEvent::Pulse { .. } => None,
            })
            .collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.events
            .iter()
            .filter_map(|e| match *e {
                PulseEvent::Pulse { phase, .. } => Some(phase),
                PulseEvent::Delay { .. } => None,
            })
            .collect()
    }

    /// True when the event durations read the same forwards and backwards.
    pub fn is_time_symmetric(&self) -> bool {
        let d: Vec<f64> = self.events.iter().map(PulseEvent::duration).collect();
        d.iter()
            .zip(d.iter().rev())
            .all(|(a, b)| (a - b).abs() <= 1e-15 * a.abs().max(b.abs()))
    }

    pub fn with_repetitions(mut self, repetitions: u32) -> Self {
        self.repetitions = repetitions;
        self
    }

    /// Sets every pulse's duration; used to give ideal schedules finite pulses.
    pub fn with_pulse_duration(mut self, duration: f64) -> Self {
        for e in &mut self.events {
            if let PulseEvent::Pulse { duration: d, .. } = e {
                *d = duration;
            }
        }
        self
    }

    /// Pulse centers within one cycle when each pulse lasts at least
    /// `min_pulse` seconds, together with the resulting cycle period.
    pub fn layout(&self, min_pulse: f64) -> CycleLayout {
        let mut t = 0.0;
        let mut pulses = Vec::new();
        for e in &self.events {
            match *e {
                PulseEvent::Delay { duration } => t += duration,
                PulseEvent::Pulse {
                    phase,
                    duration,
                    nominal_flip,
                } => {
                    let d = duration.max(min_pulse);
                    pulses.push(PulseSlot {
                        center: t + 0.5 * d,
                        duration: d,
                        phase,
                        nominal_flip,
                    });
                    t += d;
                }
            }
        }
        CycleLayout {
            period: t,
            pulses,
            repetitions: self.repetitions,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&ScheduleJson::from(self)).map_err(|e| Error::format("serializing schedule", e))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ScheduleJson = serde_json::from_str(text).map_err(|e| Error::format("parsing schedule JSON", e))?;
        raw.try_into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSlot {
    pub center: f64,
    pub duration: f64,
    pub phase: f64,
    pub nominal_flip: f64,
}

/// Absolute pulse timing of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleLayout {
    pub period: f64,
    pub pulses: Vec<PulseSlot>,
    pub repetitions: u32,
}

impl CycleLayout {
    pub fn total_duration(&self) -> f64 {
        self.period * self.repetitions as f64
    }

    /// Every pulse center (with its slot) up to and including time `t`.
    pub fn pulses_until(&self, t: f64) -> impl Iterator<Item = (f64, &PulseSlot)> + '_ {
        let period = self.period;
        (0..self.repetitions)
            .take_while(move |&r| r as f64 * period <= t)
            .flat_map(move |r| self.pulses.iter().map(move |p| (r as f64 * period + p.center, p)))
            .take_while(move |&(c, _)| c <= t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SequenceKind {
    XY4S,
    XY8S,
    XY16S,
    KDDXY,
}

impl SequenceKind {
    pub const ALL: [SequenceKind; 4] = [
        SequenceKind::XY4S,
        SequenceKind::XY8S,
        SequenceKind::XY16S,
        SequenceKind::KDDXY,
    ];

    pub fn pulse_count(self) -> usize {
        match self {
            SequenceKind::XY4S => 4,
            SequenceKind::XY8S => 8,
            SequenceKind::XY16S => 16,
            SequenceKind::KDDXY => 20,
        }
    }

    /// Inter-pulse delay used in the chloroform experiments.
    pub fn experimental_tau(self) -> f64 {
        match self {
            SequenceKind::XY4S => 0.58e-3,
            SequenceKind::XY8S => 0.29e-3,
            SequenceKind::XY16S => 0.145e-3,
            SequenceKind::KDDXY => 0.116e-3,
        }
    }

    pub fn phases(self) -> Vec<f64> {
        let (x, y) = (0.0, FRAC_PI_2);
        let xy8 = vec![x, y, x, y, y, x, y, x];
        match self {
            SequenceKind::XY4S => vec![x, y, x, y],
            SequenceKind::XY8S => xy8,
            SequenceKind::XY16S => xy8.iter().copied().chain(xy8.iter().map(|p| p + PI)).collect(),
            SequenceKind::KDDXY => {
                let kdd = |phi: f64| [PI / 6.0 + phi, phi, FRAC_PI_2 + phi, phi, PI / 6.0 + phi];
                let block: Vec<f64> = kdd(0.0).into_iter().chain(kdd(FRAC_PI_2)).collect();
                block.iter().chain(block.iter()).copied().collect()
            }
        }
        .into_iter()
        .map(wrap_phase)
        .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::XY4S => "XY4S",
            SequenceKind::XY8S => "XY8S",
            SequenceKind::XY16S => "XY16S",
            SequenceKind::KDDXY => "KDDXY",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            SequenceKind::XY4S => "symmetrized XY4: x y x y",
            SequenceKind::XY8S => "XY8: x y x y y x y x",
            SequenceKind::XY16S => "XY16: XY8 followed by its phase-inverted copy",
            SequenceKind::KDDXY => "KDD_xy: [KDD_0 KDD_pi/2]^2, KDD_phi = (pi/6+phi, phi, pi/2+phi, phi, pi/6+phi)",
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match key.as_str() {
            "XY4S" | "XY4" => Ok(SequenceKind::XY4S),
            "XY8S" | "XY8" => Ok(SequenceKind::XY8S),
            "XY16S" | "XY16" => Ok(SequenceKind::XY16S),
            "KDDXY" | "KDD" => Ok(SequenceKind::KDDXY),
            _ => Err(Error::UnknownSequence(s.to_string())),
        }
    }
}

/// One cycle of a built-in sequence with ideal (zero-length) π pulses.
pub fn builtin_sequence(kind: SequenceKind, tau: f64) -> Result<PulseSchedule> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let phases = kind.phases();
    let mut events = Vec::with_capacity(2 * phases.len() + 1);
    events.push(PulseEvent::delay(tau / 2.0));
    for (k, &phase) in phases.iter().enumerate() {
        events.push(PulseEvent::pi(phase));
        events.push(PulseEvent::delay(if k + 1 == phases.len() { tau / 2.0 } else { tau }));
    }
    Ok(PulseSchedule {
        name: kind.name().into(),
        tau: Some(tau),
        events,
        repetitions: 1,
    })
}

pub fn builtin_by_name(name: &str, tau: f64) -> Result<PulseSchedule> {
    builtin_sequence(name.parse()?, tau)
}

/// Flip-angle, resonance-offset and finite-duration imperfections of π pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseErrorModel {
    /// Fractional flip error ε: the actual rotation is `π(1+ε)`.
    pub flip_angle_error: f64,
    /// Resonance offset during the pulse, Hz.
    pub offset_hz: f64,
    /// Pulse length per qubit, seconds.
    pub pulse_duration: [f64; 2],
}

impl Default for PulseErrorModel {
    fn default() -> Self {
        PulseErrorModel {
            flip_angle_error: 0.0,
            offset_hz: 0.0,
            pulse_duration: [0.0, 0.0],
        }
    }
}

impl PulseErrorModel {
    /// Ideal pulses with the proton/carbon π lengths used experimentally.
    pub fn chloroform() -> Self {
        PulseErrorModel {
            pulse_duration: [15.1e-6, 26.8e-6],
            ..Default::default()
        }
    }

    pub fn with_flip_error(mut self, eps: f64) -> Self {
        self.flip_angle_error = eps;
        self
    }

    /// Length of a simultaneous pulse on both qubits.
    pub fn event_duration(&self) -> f64 {
        self.pulse_duration[0].max(self.pulse_duration[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.pulse_duration.iter().any(|d| !(*d >= 0.0)) {
            return Err(Error::Config("pulse durations must be non-negative".into()));
        }
        if !self.flip_angle_error.is_finite() || !self.offset_hz.is_finite() {
            return Err(Error::Config("pulse error parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Duration of one cycle: delays plus each pulse at the longer of its own
/// and the error model's pulse length.
pub fn schedule_timing(s: &PulseSchedule, err: &PulseErrorModel) -> f64 {
    s.layout(err.event_duration()).period
}

/// `+1` or `−1`: the sign of the dephasing field in the toggling frame at
/// time `t`, flipping at every pulse center not later than `t`.
pub fn toggling_function(s: &PulseSchedule, t: f64) -> i8 {
    let flips = s.layout(0.0).pulses_until(t).count();
    if flips.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventJson {
    kind: String,
    duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase_rad: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleJson {
    name: String,
    tau_s: Option<f64>,
    events: Vec<EventJson>,
    repetitions: u32,
}

impl From<&PulseSchedule> for ScheduleJson {
    fn from(s: &PulseSchedule) -> Self {
        ScheduleJson {
            name: s.name.clone(),
            tau_s: s.tau,
            events: s
                .events
                .iter()
                .map(|e| match *e {
                    PulseEvent::Delay { duration } => EventJson {
                        kind: "delay".into(),
                        duration_s: duration,
                        phase_rad: None,
                    },
                    PulseEvent::Pulse { phase, duration, .. } => EventJson {
                        kind: "pulse".into(),
                        duration_s: duration,
                        phase_rad: Some(phase),
                    },
                })
                .collect(),
            repetitions: s.repetitions,
        }
    }
}

impl From<PulseSchedule> for ScheduleJson {
    fn from(s: PulseSchedule) -> Self {
        ScheduleJson::from(&s)
    }
}

impl TryFrom<ScheduleJson> for PulseSchedule {
    type Error = Error;

    fn try_from(raw: ScheduleJson) -> Result<Self> {
        let events = raw
            .events
            .into_iter()
            .map(|e| {
                if !(e.duration_s >= 0.0) {
                    return Err(Error::Config(format!("negative event duration {}", e.duration_s)));
                }
                match (e.kind.as_str(), e.phase_rad) {
                    ("delay", _) => Ok(PulseEvent::delay(e.duration_s)),
                    ("pulse", Some(phase)) => Ok(PulseEvent::Pulse {
                        phase: wrap_phase(phase),
                        duration: e.duration_s,
                        nominal_flip: PI,
                    }),
                    ("pulse", None) => Err(Error::Config("pulse event without phase_rad".into())),
                    (other, _) => Err(Error::Config(format!("unknown event kind `{other}`"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PulseSchedule {
            name: raw.name,
            tau: raw.tau_s,
            events,
            repetitions: raw.repetitions,
        })
    }
}
