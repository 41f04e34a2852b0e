use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::PulseErrorModel;
use crate::qstate::{ComplexMatrix2, Pauli};

/// Propagator of a rectangular π pulse with phase `phase` on qubit
/// `qubit` (0 or 1):
///
/// `U = exp[−i (Ω/2 · (cos φ σx + sin φ σy) + π·Δ·σz) · t_p]`, `Ω = π(1+ε)/t_p`,
///
/// with `ε` the flip error, `Δ` the resonance offset in Hz and `t_p` the
/// qubit's pulse length. A zero-length pulse is the ideal rotation by
/// `π(1+ε)`, for which the offset has no time to act.
pub fn pulse_unitary(phase: f64, err: &PulseErrorModel, qubit: usize) -> ComplexMatrix2 {
    let angle = PI * (1.0 + err.flip_angle_error);
    let tp = err.pulse_duration[qubit.min(1)];
    // field vector (rad/s) in units where H = v·σ
    let (v, t) = if tp > 0.0 {
        let half_rabi = 0.5 * angle / tp;
        (
            [half_rabi * phase.cos(), half_rabi * phase.sin(), PI * err.offset_hz],
            tp,
        )
    } else {
        ([0.5 * angle * phase.cos(), 0.5 * angle * phase.sin(), 0.0], 1.0)
    };
    su2_exp(v, t)
}

/// `exp(−i t v·σ)`.
pub(crate) fn su2_exp(v: [f64; 3], t: f64) -> ComplexMatrix2 {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm == 0.0 {
        return ComplexMatrix2::identity();
    }
    let (s, c) = (norm * t).sin_cos();
    let n = v.map(|x| x / norm);
    let generator = Pauli::X.matrix().scale(n[0].into())
        + Pauli::Y.matrix().scale(n[1].into())
        + Pauli::Z.matrix().scale(n[2].into());
    ComplexMatrix2::identity().scale(c.into()) + generator.scale(C64::new(0.0, -s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn is_unitary(u: &ComplexMatrix2) -> bool {
        (u.adjoint() * *u).max_abs_diff(&ComplexMatrix2::identity()) < 1e-12
    }

    /// Equal up to a global phase.
    fn same_operator(a: &ComplexMatrix2, b: &ComplexMatrix2) -> bool {
        let overlap = (a.adjoint() * *b).trace();
        (overlap.norm() - 2.0).abs() < 1e-12
    }

    #[test]
    fn ideal_pi_x() {
        let u = pulse_unitary(0.0, &PulseErrorModel::default(), 0);
        let expect = Pauli::X.matrix().scale(C64::new(0.0, -1.0));
        assert!(u.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn ideal_pi_y_is_sigma_y() {
        let u = pulse_unitary(FRAC_PI_2, &PulseErrorModel::default(), 1);
        assert!(same_operator(&u, &Pauli::Y.matrix()));
    }

    #[test]
    fn flip_error_rotation_angle() {
        let err = PulseErrorModel::default().with_flip_error(0.05);
        let u = pulse_unitary(0.0, &err, 0);
        // Tr U = 2 cos(θ/2)
        let theta = 2.0 * (u.trace().re / 2.0).acos();
        assert!((theta - PI * 1.05).abs() < 1e-12);
    }

    #[test]
    fn finite_pulse_without_offset_is_the_same_rotation() {
        let err = PulseErrorModel::chloroform();
        for q in 0..2 {
            let u = pulse_unitary(0.3, &err, q);
            let ideal = pulse_unitary(0.3, &PulseErrorModel::default(), q);
            assert!(u.max_abs_diff(&ideal) < 1e-12);
        }
    }

    #[test]
    fn two_pi_pulses_are_identity() {
        let u = pulse_unitary(0.0, &PulseErrorModel::default(), 0);
        assert!(same_operator(&(u * u), &ComplexMatrix2::identity()));
    }

    #[test]
    fn offset_tilts_the_axis() {
        let err = PulseErrorModel {
            offset_hz: 2000.0,
            ..PulseErrorModel::chloroform()
        };
        let u = pulse_unitary(0.0, &err, 1);
        assert!(is_unitary(&u));
        assert!(!same_operator(&u, &Pauli::X.matrix()));
        // z component of the rotation axis is nonzero
        assert!(u.0[0][0].im.abs() > 1e-3);
    }

    proptest::proptest! {
        #[test]
        fn always_unitary(phase in 0.0f64..6.3, eps in -0.2f64..0.2, off in -5e3f64..5e3, tp in 0.0f64..5e-5) {
            let err = PulseErrorModel { flip_angle_error: eps, offset_hz: off, pulse_duration: [tp, tp] };
            proptest::prop_assert!(is_unitary(&pulse_unitary(phase, &err, 0)));
        }
    }
}
