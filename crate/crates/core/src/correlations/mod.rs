//! Classical correlation, mutual information and quantum discord of
//! Bell-diagonal states, in bits.
//!
//! The closed forms use `χ = max |c_i|`:
//!
//! ```text
//! C = (1−χ)/2 · log2(1−χ) + (1+χ)/2 · log2(1+χ)
//! I = 2 + Σ_k λ_k log2 λ_k          (λ_k the Bell-basis eigenvalues)
//! D = I − C
//! ```
//!
//! When `c2 = −c1·c3` the eigenvalues factorize as `(1±c1)(1±c3)/4` and `I`
//! reduces to `h(c1) + h(c3)` with `h` the same binary term as in `C`;
//! [`total_correlation_factorized`] evaluates that reduced form.

mod bruteforce;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use bruteforce::{discord_bruteforce, mutual_information, DEFAULT_GRID};

use crate::channels::{dephase_bd, DephasingRates};
use crate::error::{Error, Result};
use crate::qstate::{entropy_bits, BDParams};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub classical: f64,
    pub discord: f64,
    pub total: f64,
}

/// `χ = max(|c1|, |c2|, |c3|)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Chi(pub f64);

impl Chi {
    pub fn of(c: &BDParams) -> Self {
        Chi(c.chi())
    }
}

/// `Σ_{s=±1} (1+s·x)/2 · log2(1+s·x)` with `0·log 0 = 0`.
fn binary_term(x: f64) -> f64 {
    let x = x.abs().min(1.0);
    let term = |y: f64| if y > 0.0 { 0.5 * y * y.log2() } else { 0.0 };
    term(1.0 + x) + term(1.0 - x)
}

pub fn classical_correlation(c: &BDParams) -> f64 {
    binary_term(c.chi())
}

pub fn total_correlation(c: &BDParams) -> f64 {
    let lambdas = c.bell_eigenvalues().map(|l| l.max(0.0));
    let norm: f64 = lambdas.iter().sum();
    let lambdas = lambdas.map(|l| l / norm);
    (2.0 - entropy_bits(&lambdas)).max(0.0)
}

/// `h(c1) + h(c3)`: the mutual information on the family `c2 = −c1·c3`.
pub fn total_correlation_factorized(c: &BDParams) -> f64 {
    binary_term(c.c1) + binary_term(c.c3)
}

pub fn discord(c: &BDParams) -> f64 {
    total_correlation(c) - classical_correlation(c)
}

/// Correlations of possibly noisy coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub triple: CorrelationTriple,
    pub chi: Chi,
    /// Set when some `|c_i|` exceeded one or a Bell eigenvalue was negative
    /// and had to be clamped.
    pub clamped: bool,
}

pub fn correlations(c: &BDParams) -> CorrelationReport {
    let clamped = c.chi() > 1.0 || c.min_bell_eigenvalue() < 0.0;
    let classical = classical_correlation(c);
    let total = total_correlation(c);
    CorrelationReport {
        triple: CorrelationTriple {
            classical,
            discord: total - classical,
            total,
        },
        chi: Chi(c.chi().min(1.0)),
        clamped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub params: BDParams,
    pub chi: f64,
    pub triple: CorrelationTriple,
}

impl TrajectoryPoint {
    pub fn new(t: f64, params: BDParams) -> Self {
        let report = correlations(&params);
        TrajectoryPoint {
            t,
            params,
            chi: report.chi.0,
            triple: report.triple,
        }
    }
}

/// Correlations along the analytic dephasing flow at each of `times`.
pub fn correlation_trajectory(c0: BDParams, rates: &DephasingRates, times: &[f64]) -> Result<Vec<TrajectoryPoint>> {
    c0.check_physical()?;
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Config("sample times must be sorted ascending".into()));
    }
    Ok(times
        .iter()
        .map(|&t| TrajectoryPoint::new(t, dephase_bd(c0, rates, t)))
        .collect())
}

/// CSV with columns `t, C, D, I, chi, c1, c2, c3`.
pub fn write_trajectory_csv<W: Write>(points: &[TrajectoryPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ctx = "writing trajectory CSV";
    w.write_record(["t", "C", "D", "I", "chi", "c1", "c2", "c3"])
        .map_err(|e| Error::format(ctx, e))?;
    for p in points {
        let row = [
            p.t,
            p.triple.classical,
            p.triple.discord,
            p.triple.total,
            p.chi,
            p.params.c1,
            p.params.c2,
            p.params.c3,
        ];
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(|e| Error::format(ctx, e))?;
    }
    w.flush().map_err(|e| Error::io(ctx, e))?;
    Ok(())
}
