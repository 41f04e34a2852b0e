//! Filter-function decay exponents.
//!
//! With the toggling function `f` of a schedule,
//!
//! ```text
//! F(ω, t) = ∫_0^t f(t') e^{iωt'} dt'
//! χ_f(t)  = (1/2π) ∫_0^∞ S(ω) |F(ω, t)|² dω
//! ```
//!
//! and a coherence multiplier `e^{−χ_f}`; white noise `S = 2γ` gives
//! `χ_f = γt` for every schedule. The flat part of a spectrum is integrated
//! exactly through `∫_0^∞ |F|² dω = π ∫_0^t f² = πt`. The remaining
//! frequency-dependent part is integrated with adaptive Gauss-Kronrod
//! panels and an analytic high-frequency tail.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::PulseSchedule;
use crate::engine::QubitNoise;
use crate::error::{Error, Result};

/// Target relative accuracy of the frequency integral.
pub const QUADRATURE_REL_TOL: f64 = 1e-6;

/// Stop extending the frequency range once the analytic tail is below this
/// fraction of the accumulated integral. The tail replaces `|ω F|²` by its
/// mean, which is off by a few percent of the tail itself.
const TAIL_REL_TOL: f64 = 1e-7;
const MAX_PANEL_DEPTH: u32 = 24;
/// Quadrature error budget per frequency chunk, relative to the running total.
const PANEL_REL_TOL: f64 = 1e-8;
const MAX_OMEGA: f64 = 1e12;

/// Piecewise-constant toggling function on `[0, t]`, stored as one cycle
/// pattern repeated `full_cycles` times followed by a partial tail.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterFunction {
    t: f64,
    period: f64,
    /// `(start, end, sign)` segments of one cycle, starting at sign `+1`.
    cycle: Vec<(f64, f64, f64)>,
    /// Sign after one cycle: `(−1)^{pulses per cycle}`.
    cycle_sign: f64,
    full_cycles: u32,
    /// Segments after the full cycles, times relative to `full_cycles·period`,
    /// signs relative to the sign at that point.
    tail: Vec<(f64, f64, f64)>,
    /// Pulses applied in `[0, t]`.
    pulse_count: usize,
}

fn segments(centers: &[f64], end: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(centers.len() + 1);
    let (mut start, mut sign) = (0.0, 1.0);
    for &c in centers.iter().filter(|&&c| c <= end) {
        if c > start {
            out.push((start, c, sign));
        }
        start = c;
        sign = -sign;
    }
    if end > start {
        out.push((start, end, sign));
    }
    out
}

/// `∫_a^b e^{iωt} dt`, stable as `ω → 0`.
fn segment_integral(a: f64, b: f64, omega: f64) -> C64 {
    let half = 0.5 * omega * (b - a);
    let sinc = if half.abs() < 1e-8 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    C64::from_polar((b - a) * sinc, 0.5 * omega * (a + b))
}

fn pattern_integral(segs: &[(f64, f64, f64)], omega: f64) -> C64 {
    segs.iter().map(|&(a, b, s)| segment_integral(a, b, omega) * s).sum()
}

/// `Σ_{r=0}^{n−1} e^{irx}`.
fn geometric_sum(x: f64, n: u32) -> C64 {
    if n == 0 {
        return C64::new(0.0, 0.0);
    }
    let x = (x + PI).rem_euclid(2.0 * PI) - PI;
    let n_f = n as f64;
    let ratio = if x.abs() < 1e-9 {
        n_f
    } else {
        (0.5 * n_f * x).sin() / (0.5 * x).sin()
    };
    C64::from_polar(ratio, 0.5 * x * (n_f - 1.0))
}

impl FilterFunction {
    /// Toggling function of `schedule` on `[0, t]` with ideal pulses at
    /// their centers. After the last repetition the sign stays constant.
    pub fn new(schedule: &PulseSchedule, t: f64) -> Self {
        let t = t.max(0.0);
        let layout = schedule.layout(0.0);
        let centers: Vec<f64> = layout.pulses.iter().map(|p| p.center).collect();
        let n_cycle = centers.len();
        let period = layout.period;
        let cycle_sign = if n_cycle.is_multiple_of(2) { 1.0 } else { -1.0 };

        if layout.repetitions == 0 || n_cycle == 0 || period <= 0.0 {
            // no cycle structure to exploit
            let applied = if period <= 0.0 {
                n_cycle * layout.repetitions as usize
            } else {
                0
            };
            let sign = if applied % 2 == 0 { 1.0 } else { -1.0 };
            return FilterFunction {
                t,
                period: 0.0,
                cycle: Vec::new(),
                cycle_sign,
                full_cycles: 0,
                tail: if t > 0.0 { vec![(0.0, t, sign)] } else { Vec::new() },
                pulse_count: applied,
            };
        }

        let full_cycles = ((t / period).floor() as u64).min(layout.repetitions as u64) as u32;
        let rest = t - full_cycles as f64 * period;
        let mut pulse_count = full_cycles as usize * n_cycle;
        let tail = if full_cycles < layout.repetitions {
            pulse_count += centers.iter().filter(|&&c| c <= rest).count();
            segments(&centers, rest)
        } else if rest > 0.0 {
            vec![(0.0, rest, 1.0)]
        } else {
            Vec::new()
        };
        FilterFunction {
            t,
            period,
            cycle: segments(&centers, period),
            cycle_sign,
            full_cycles,
            tail,
            pulse_count,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t
    }

    pub fn pulse_count(&self) -> usize {
        self.pulse_count
    }

    /// `F(ω, t)`.
    pub fn amplitude(&self, omega: f64) -> C64 {
        let mut total = C64::new(0.0, 0.0);
        if self.full_cycles > 0 {
            let phase = omega * self.period + if self.cycle_sign < 0.0 { PI } else { 0.0 };
            total += pattern_integral(&self.cycle, omega) * geometric_sum(phase, self.full_cycles);
        }
        if !self.tail.is_empty() {
            let offset = self.full_cycles as f64 * self.period;
            let sign = if self.cycle_sign < 0.0 && self.full_cycles % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            total += pattern_integral(&self.tail, omega) * C64::from_polar(sign, omega * offset);
        }
        total
    }

    /// `|F(ω, t)|²`.
    pub fn power(&self, omega: f64) -> f64 {
        self.amplitude(omega).norm_sqr()
    }

    /// Average of `ω²|F|²` at high frequency: the sum of squared jumps of
    /// the toggling function, `2 + 4·(pulses)`.
    fn jump_energy(&self) -> f64 {
        if self.t > 0.0 {
            2.0 + 4.0 * self.pulse_count as f64
        } else {
            0.0
        }
    }

    /// `χ_f` for `noise`.
    pub fn decay_exponent(&self, noise: &QubitNoise) -> f64 {
        if self.t <= 0.0 {
            return 0.0;
        }
        // flat part through Parseval: (1/2π)·S·πt
        let flat = 0.5 * noise.flat_level() * self.t;
        if !noise.has_colored_part() {
            return flat;
        }
        let tau_c = noise.correlation_time().unwrap_or(self.t);
        let colored = self.colored_integral(|w| noise.colored(w), |big| noise.colored_tail(big), tau_c);
        flat + colored / (2.0 * PI)
    }

    /// `χ_f` evaluated in the time domain, `χ = ∫_0^t dt1 f(t1) ∫_0^{t1} dt2
    /// f(t2) C(t1 − t2)` with `C(d) = σ² e^{−d/τ_c}` for the OU part. Exact
    /// for the spectra of [`QubitNoise`] and linear in the number of pulses,
    /// whereas the frequency integral grows with the number of fringes.
    pub fn decay_exponent_time_domain(&self, noise: &QubitNoise) -> f64 {
        let flat = 0.5 * noise.flat_level() * self.t;
        let (sigma, tau_c) = match *noise {
            QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } if sigma > 0.0 && self.t > 0.0 => (sigma, tau_c),
            _ => return flat,
        };
        // h(t1) = ∫_0^{t1} f(t2) e^{−(t1−t2)/τ_c} dt2, carried segment to segment
        let (mut h, mut sum) = (0.0, 0.0);
        self.for_each_segment(|len, sign| {
            let x = len / tau_c;
            let one_minus_e = -(-x).exp_m1();
            let g = if x < 1e-4 {
                x * x * (0.5 - x / 6.0)
            } else {
                x - one_minus_e
            };
            sum += sign * h * tau_c * one_minus_e + tau_c * tau_c * g;
            h = h * (1.0 - one_minus_e) + sign * tau_c * one_minus_e;
        });
        flat + sigma * sigma * sum
    }

    /// Calls `visit(length, sign)` for every constant piece of `f` in time order.
    fn for_each_segment(&self, mut visit: impl FnMut(f64, f64)) {
        let mut sign = 1.0;
        for _ in 0..self.full_cycles {
            for &(a, b, s) in &self.cycle {
                visit(b - a, sign * s);
            }
            sign *= self.cycle_sign;
        }
        for &(a, b, s) in &self.tail {
            visit(b - a, sign * s);
        }
    }

    /// `∫_0^∞ S(ω)|F|² dω` for a spectrum decaying at least like `1/ω²`,
    /// with `tail(Ω) = ∫_Ω^∞ S/ω²` and `scale` the spectrum's correlation time.
    fn colored_integral(&self, s: impl Fn(f64) -> f64, tail: impl Fn(f64) -> f64, scale: f64) -> f64 {
        let integrand = |w: f64| s(w) * self.power(w);
        // panels narrow enough to resolve both |F|² fringes and the spectrum
        let width = 0.5 * (2.0 * PI / self.t).min(1.0 / scale);
        let first = 64.0 * width;
        let mut total = integrate_panels(&integrand, 0.0, first, width, 0.0, PANEL_REL_TOL);
        let mut lo = first;
        loop {
            let hi = 2.0 * lo;
            total += integrate_panels(&integrand, lo, hi, width.max(lo / 4096.0), total, PANEL_REL_TOL);
            let rest = self.jump_energy() * tail(hi);
            if rest < TAIL_REL_TOL * total || hi >= MAX_OMEGA {
                return total + rest;
            }
            lo = hi;
        }
    }
}

/// `χ` at each of the ascending `times` in one pass over the pulses, using
/// the same time-domain recursion as
/// [`FilterFunction::decay_exponent_time_domain`]. Cost grows with the
/// number of pulses up to the last time plus the number of times.
pub fn decay_exponents_time_domain(schedule: &PulseSchedule, noise: &QubitNoise, times: &[f64]) -> Result<Vec<f64>> {
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("times must be finite, non-negative and ascending".into()));
    }
    let flat = 0.5 * noise.flat_level();
    let (sigma, tau_c) = match *noise {
        QubitNoise::OrnsteinUhlenbeck { sigma, tau_c } if sigma > 0.0 => (sigma, tau_c),
        _ => return Ok(times.iter().map(|t| flat * t).collect()),
    };
    let t_end = times.last().copied().unwrap_or(0.0);
    let layout = schedule.layout(0.0);
    let mut centers = layout.pulses_until(t_end).map(|(c, _)| c).peekable();
    // contribution of a piece of length `len` with sign `sign` entered with state `h`
    let piece = |h: f64, len: f64, sign: f64| {
        let x = len / tau_c;
        let one_minus_e = -(-x).exp_m1();
        let g = if x < 1e-4 {
            x * x * (0.5 - x / 6.0)
        } else {
            x - one_minus_e
        };
        (
            sign * h * tau_c * one_minus_e + tau_c * tau_c * g,
            h * (1.0 - one_minus_e) + sign * tau_c * one_minus_e,
        )
    };
    let (mut start, mut sign, mut h, mut sum) = (0.0, 1.0, 0.0, 0.0);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while let Some(&c) = centers.peek() {
            if c > t {
                break;
            }
            let (ds, h_next) = piece(h, c - start, sign);
            sum += ds;
            h = h_next;
            start = c;
            sign = -sign;
            centers.next();
        }
        let (ds, _) = piece(h, t - start, sign);
        out.push(flat * t + sigma * sigma * (sum + ds));
    }
    Ok(out)
}

/// `χ_f(t)` of `schedule` under single-qubit `noise`, by frequency-domain
/// quadrature.
pub fn filter_decay_exponent(schedule: &PulseSchedule, noise: &QubitNoise, t: f64) -> f64 {
    FilterFunction::new(schedule, t).decay_exponent(noise)
}

// 15-point Kronrod nodes on [0, 1] (symmetric half) with the embedded
// 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and its difference from the Gauss estimate.
fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, estimate: (f64, f64), tol: f64, depth: u32) -> f64 {
    let (value, err) = estimate;
    if depth >= MAX_PANEL_DEPTH || err <= tol {
        return value;
    }
    let mid = 0.5 * (a + b);
    let (left, right) = (gauss_kronrod(f, a, mid), gauss_kronrod(f, mid, b));
    adaptive(f, a, mid, left, 0.5 * tol, depth + 1) + adaptive(f, mid, b, right, 0.5 * tol, depth + 1)
}

/// Integral over `[a, b]` split into panels no wider than `width`. Panels
/// are refined until each one's error is below its share of
/// `rel_tol·|known + this integral|`, so `known` carries the part of a larger
/// integral already accumulated.
fn integrate_panels(f: &impl Fn(f64) -> f64, a: f64, b: f64, width: f64, known: f64, rel_tol: f64) -> f64 {
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let panels: Vec<(f64, (f64, f64))> = (0..n)
        .map(|k| {
            let lo = a + k as f64 * h;
            (lo, gauss_kronrod(f, lo, lo + h))
        })
        .collect();
    let crude: f64 = panels.iter().map(|p| p.1 .0).sum();
    let tol = rel_tol * (known + crude).abs() / n as f64;
    if tol == 0.0 {
        return crude;
    }
    panels
        .into_iter()
        .map(|(lo, est)| adaptive(f, lo, lo + h, est, tol, 0))
        .sum()
}
