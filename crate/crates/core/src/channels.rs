//! Local dephasing of Bell-diagonal states.
//!
//! Convention: a single-qubit coherence on qubit `i` decays as
//! `exp(-γ_i t)`. The coefficients `c1`, `c2` of a Bell-diagonal state are
//! products of both qubits' coherences and therefore decay as
//! `exp(-(γ_h + γ_c) t) = exp(-2 γ̄ t)` with `γ̄` the mean rate; `c3` is a
//! population quantity and is untouched.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{BDParams, ComplexMatrix2, ComplexMatrix4, DensityMatrix};

/// Kraus pairs with completeness error above this are rejected.
pub const KRAUS_COMPLETENESS_TOL: f64 = 1e-10;

/// Per-qubit dephasing rates in 1/s (qubit 1 = proton, qubit 2 = carbon).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingRates {
    pub gamma_h: f64,
    pub gamma_c: f64,
}

impl DephasingRates {
    pub fn new(gamma_h: f64, gamma_c: f64) -> Result<Self> {
        if !(gamma_h >= 0.0 && gamma_c >= 0.0) {
            return Err(Error::Config(format!(
                "dephasing rates must be non-negative, got ({gamma_h}, {gamma_c})"
            )));
        }
        Ok(DephasingRates { gamma_h, gamma_c })
    }

    /// Rates `1/T2*` for each qubit.
    pub fn from_t2_star(t2_h: f64, t2_c: f64) -> Result<Self> {
        if !(t2_h > 0.0 && t2_c > 0.0) {
            return Err(Error::Config("T2* values must be positive".into()));
        }
        Self::new(1.0 / t2_h, 1.0 / t2_c)
    }

    /// Two-qubit rate `γ̄ = (γ_h + γ_c)/2 = (T2*H + T2*C) / (2 T2*H T2*C)`.
    pub fn mean(&self) -> f64 {
        0.5 * (self.gamma_h + self.gamma_c)
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.gamma_h, self.gamma_c]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausPair {
    pub k0: ComplexMatrix2,
    pub k1: ComplexMatrix2,
}

impl KrausPair {
    pub fn identity() -> Self {
        KrausPair {
            k0: ComplexMatrix2::identity(),
            k1: ComplexMatrix2::zeros(),
        }
    }

    /// Max-entry deviation of `K0†K0 + K1†K1` from the identity.
    pub fn completeness_error(&self) -> f64 {
        let sum = self.k0.adjoint() * self.k0 + self.k1.adjoint() * self.k1;
        sum.max_abs_diff(&ComplexMatrix2::identity())
    }
}

/// Coefficient flow under independent phase damping for a time `t`.
pub fn dephase_bd(c0: BDParams, rates: &DephasingRates, t: f64) -> BDParams {
    let decay = (-(rates.gamma_h + rates.gamma_c) * t).exp();
    BDParams {
        c1: c0.c1 * decay,
        c2: c0.c2 * decay,
        c3: c0.c3,
    }
}

/// Phase-damping Kraus pair with `λ = 1 − exp(−2γt)`, so the coherence
/// factor is `√(1−λ) = exp(−γt)`.
pub fn phase_damp_kraus(gamma: f64, t: f64) -> KrausPair {
    let keep = (-2.0 * gamma * t).exp();
    let lambda = 1.0 - keep;
    KrausPair {
        k0: ComplexMatrix2::diag(C64::new(1.0, 0.0), C64::new(keep.sqrt(), 0.0)),
        k1: ComplexMatrix2::diag(C64::new(0.0, 0.0), C64::new(lambda.max(0.0).sqrt(), 0.0)),
    }
}

/// `ρ' = Σ_ij (K_i⊗K_j) ρ (K_i⊗K_j)†` with `kraus1` on the first qubit.
pub fn apply_local_channel(rho: &DensityMatrix, kraus1: &KrausPair, kraus2: &KrausPair) -> Result<DensityMatrix> {
    for pair in [kraus1, kraus2] {
        let deviation = pair.completeness_error();
        if !(deviation <= KRAUS_COMPLETENESS_TOL) {
            return Err(Error::IncompleteKraus { deviation });
        }
    }
    let mut out = ComplexMatrix4::zeros();
    for a in [&kraus1.k0, &kraus1.k1] {
        for b in [&kraus2.k0, &kraus2.k1] {
            let k = a.kron(b);
            out = out + rho.matrix().conjugate_by(&k);
        }
    }
    Ok(DensityMatrix::new_unchecked(out))
}

/// Time at which `|c1(t)| = |c3|` under the flow `c1(t) = c1(0)exp(−2γt)`:
/// `t̄ = ln|c1(0)/c3| / (2γ)`.
pub fn transition_time(c0: BDParams, gamma: f64) -> Result<f64> {
    let (a1, a3) = (c0.c1.abs(), c0.c3.abs());
    if !(gamma > 0.0) {
        return Err(Error::Config(format!("damping rate must be positive, got {gamma}")));
    }
    if !(a1 > a3) || a3 == 0.0 {
        return Err(Error::NoTransition { c1_abs: a1, c3_abs: a3 });
    }
    Ok((a1 / a3).ln() / (2.0 * gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{bd_params_of, bd_state};

    const CHLOROFORM_GAMMA: f64 = 3.8511;

    fn chloroform_rates() -> DephasingRates {
        DephasingRates::from_t2_star(0.41, 0.19).unwrap()
    }

    #[test]
    fn mean_rate_matches_t2_formula() {
        let r = chloroform_rates();
        let direct = (0.41 + 0.19) / (2.0 * 0.41 * 0.19);
        assert!((r.mean() - direct).abs() < 1e-12);
        assert!((r.mean() - CHLOROFORM_GAMMA).abs() < 1e-4);
    }

    #[test]
    fn flow_examples() {
        let c0 = BDParams::new(1.0, 0.7, -0.7);
        let rates = DephasingRates::new(CHLOROFORM_GAMMA, CHLOROFORM_GAMMA).unwrap();
        assert_eq!(dephase_bd(c0, &rates, 0.0), c0);

        // e^{-2γ̄t} = 0.7 by construction
        let t = (1.0f64 / 0.7).ln() / (2.0 * CHLOROFORM_GAMMA);
        assert!((t - 0.046309).abs() < 1e-6);
        let c = dephase_bd(c0, &rates, t);
        assert!((c.c1 - 0.7).abs() < 1e-12);
        assert!((c.c2 - 0.49).abs() < 1e-12);
        assert_eq!(c.c3, -0.7);

        let classical = BDParams::new(0.0, 0.0, 0.4);
        assert_eq!(dephase_bd(classical, &chloroform_rates(), 3.0), classical);
    }

    #[test]
    fn kraus_limits() {
        let k = phase_damp_kraus(2.0, 0.0);
        assert!(k.k0.max_abs_diff(&ComplexMatrix2::identity()) < 1e-15);
        assert!(k.k1.max_abs_diff(&ComplexMatrix2::zeros()) < 1e-15);

        let full = phase_damp_kraus(1.0, 1e3);
        assert!(full.k0.0[1][1].norm() < 1e-15);
        assert!((full.k1.0[1][1].re - 1.0).abs() < 1e-15);
        assert!(full.completeness_error() < 1e-12);
    }

    #[test]
    fn identity_channel_is_noop() {
        let rho = bd_state(BDParams::new(0.3, -0.2, 0.5)).unwrap();
        let id = KrausPair::identity();
        let out = apply_local_channel(&rho, &id, &id).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn full_dephasing_kills_coherences() {
        let rho = bd_state(BDParams::new(1.0, 0.7, -0.7)).unwrap();
        let k = phase_damp_kraus(1.0, 1e3);
        let out = apply_local_channel(&rho, &k, &k).unwrap();
        let m = out.matrix();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(m.0[i][j].norm() < 1e-15);
                }
            }
        }
        assert!((m.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incomplete_kraus_rejected() {
        let rho = DensityMatrix::maximally_mixed();
        let bad = KrausPair {
            k0: ComplexMatrix2::identity(),
            k1: ComplexMatrix2::identity(),
        };
        let err = apply_local_channel(&rho, &bad, &KrausPair::identity()).unwrap_err();
        assert!(matches!(err, Error::IncompleteKraus { .. }));
    }

    #[test]
    fn channel_matches_flow() {
        let c0 = BDParams::new(1.0, 0.7, -0.7);
        let rates = chloroform_rates();
        for t in [0.0, 0.01, 0.0463, 0.2] {
            let out = apply_local_channel(
                &bd_state(c0).unwrap(),
                &phase_damp_kraus(rates.gamma_h, t),
                &phase_damp_kraus(rates.gamma_c, t),
            )
            .unwrap();
            let expect = bd_state(dephase_bd(c0, &rates, t)).unwrap();
            assert!(out.matrix().max_abs_diff(expect.matrix()) < 1e-12);
        }
    }

    #[test]
    fn transition_time_examples() {
        let c0 = BDParams::new(1.0, 0.7, -0.7);
        let t = transition_time(c0, CHLOROFORM_GAMMA).unwrap();
        assert!((t - 0.04631).abs() < 1e-5);
        // the reported experimental value is within 15% of the formula
        assert!(((0.052 - t) / t).abs() < 0.15);

        let err = transition_time(BDParams::new(0.5, 0.2, -0.7), CHLOROFORM_GAMMA).unwrap_err();
        assert!(matches!(err, Error::NoTransition { .. }));
        assert!(transition_time(BDParams::new(1.0, 0.0, 0.0), CHLOROFORM_GAMMA).is_err());
    }

    #[test]
    fn at_transition_c1_equals_c3() {
        let rates = chloroform_rates();
        for c0 in [
            BDParams::new(1.0, 0.7, -0.7),
            BDParams::new(-0.9, 0.3, 0.3),
            BDParams::new(0.8, -0.1, 0.05),
        ] {
            let t = transition_time(c0, rates.mean()).unwrap();
            let c = dephase_bd(c0, &rates, t);
            assert!((c.c1.abs() - c0.c3.abs()).abs() < 1e-9);
        }
    }

    proptest::proptest! {
        #[test]
        fn kraus_path_equals_flow(
            c in proptest::array::uniform3(-1.0f64..1.0),
            gh in 0.0f64..20.0,
            gc in 0.0f64..20.0,
            t in 0.0f64..0.5,
        ) {
            let c0 = BDParams::new(c[0], c[1], c[2]);
            proptest::prop_assume!(c0.is_physical());
            let rates = DephasingRates::new(gh, gc).unwrap();
            let rho = bd_state(c0).unwrap();
            let k1 = phase_damp_kraus(gh, t);
            let k2 = phase_damp_kraus(gc, t);
            proptest::prop_assert!(k1.completeness_error() < 1e-12);
            let out = apply_local_channel(&rho, &k1, &k2).unwrap();
            let flow = dephase_bd(c0, &rates, t);
            proptest::prop_assert!(out.matrix().max_abs_diff(&crate::qstate::bd_matrix(flow)) < 1e-10);
            proptest::prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
            proptest::prop_assert!(out.matrix().hermiticity_error() < 1e-12);
            proptest::prop_assert!(flow.is_physical());
            let back = bd_params_of(out);
            proptest::prop_assert!((back.c3 - c0.c3).abs() < 1e-12);
        }

        #[test]
        fn flow_is_monotone(c1 in -1.0f64..1.0, t1 in 0.0f64..1.0, dt in 0.0f64..1.0) {
            let c0 = BDParams::new(c1, 0.5 * c1, 0.1);
            let rates = chloroform_rates();
            let a = dephase_bd(c0, &rates, t1);
            let b = dephase_bd(c0, &rates, t1 + dt);
            proptest::prop_assert!(b.c1.abs() <= a.c1.abs());
            proptest::prop_assert!(b.c2.abs() <= a.c2.abs());
            proptest::prop_assert_eq!(b.c3, c0.c3);
        }
    }
}
