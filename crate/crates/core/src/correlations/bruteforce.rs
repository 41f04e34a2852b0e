//! Discord from its definition: mutual information minus the classical
//! correlation maximized over projective measurements on the second qubit.
//!
//! Independent of the Bell-diagonal closed forms; works for any two-qubit
//! state.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::qstate::{
    eigenvalues2, entropy_bits, von_neumann_entropy, ComplexMatrix2, ComplexMatrix4, DensityMatrix, Pauli,
};

pub const DEFAULT_GRID: usize = 256;

fn entropy2(m: &ComplexMatrix2) -> f64 {
    let tr = m.trace().re;
    if tr <= 0.0 {
        return 0.0;
    }
    let [a, b] = eigenvalues2(m);
    entropy_bits(&[a / tr, b / tr])
}

/// `S(ρ_A) + S(ρ_B) − S(ρ_AB)` in bits.
pub fn mutual_information(rho: &DensityMatrix) -> Result<f64> {
    let m = rho.matrix();
    let s_a = entropy2(&m.partial_trace_second());
    let s_b = entropy2(&m.partial_trace_first());
    Ok(s_a + s_b - von_neumann_entropy(m)?)
}

/// Precomputed partial traces `Tr_B[(I⊗σ_k) ρ]`.
struct Measurement {
    rho_a: ComplexMatrix2,
    s_a: f64,
    moments: [ComplexMatrix2; 3],
}

impl Measurement {
    fn new(m: &ComplexMatrix4) -> Self {
        let rho_a = m.partial_trace_second();
        let moments = [Pauli::X, Pauli::Y, Pauli::Z].map(|p| (Pauli::I.kron(p) * *m).partial_trace_second());
        Measurement {
            rho_a,
            s_a: entropy2(&rho_a),
            moments,
        }
    }

    /// `S(ρ_A) − Σ_± p_± S(ρ_{A|±})` for a measurement along `(θ, φ)`.
    fn information_gain(&self, theta: f64, phi: f64) -> f64 {
        let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let mut proj = ComplexMatrix2::zeros();
        for k in 0..3 {
            proj = proj + self.moments[k].scale(n[k].into());
        }
        let mut conditional = 0.0;
        for sign in [1.0, -1.0] {
            let branch = (self.rho_a + proj.scale(sign.into())).scale(0.5.into());
            let p = branch.trace().re;
            if p > 0.0 {
                conditional += p * entropy2(&branch);
            }
        }
        self.s_a - conditional
    }
}

/// Brute-force discord: scans `grid_n × grid_n` measurement directions
/// uniform in `cos θ ∈ [0, 1]` and `φ ∈ [0, 2π)`, then refines the best one
/// with a Nelder-Mead pass.
pub fn discord_bruteforce(rho: &DensityMatrix, grid_n: usize) -> Result<f64> {
    if grid_n < 64 {
        return Err(Error::Config(format!("grid_n must be at least 64, got {grid_n}")));
    }
    let mutual = mutual_information(rho)?;
    let meas = Measurement::new(rho.matrix());

    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..grid_n {
        let cos_theta = i as f64 / (grid_n - 1) as f64;
        let theta = cos_theta.acos();
        for j in 0..grid_n {
            let phi = 2.0 * PI * j as f64 / grid_n as f64;
            let g = meas.information_gain(theta, phi);
            if g > best.0 {
                best = (g, theta, phi);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::NumericalFailure(
            "measurement scan produced no finite value".into(),
        ));
    }
    let step = PI / grid_n as f64;
    let refined = nelder_mead_max(|x| meas.information_gain(x[0], x[1]), [best.1, best.2], step);
    let classical = best.0.max(refined);
    Ok(mutual - classical)
}

/// Maximizes `f` over two variables starting from `x0`, returns the best value.
fn nelder_mead_max(f: impl Fn([f64; 2]) -> f64, x0: [f64; 2], step: f64) -> f64 {
    let neg = |x: [f64; 2]| -f(x);
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut values = simplex.map(neg);
    for _ in 0..200 {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (lo, mid, hi) = (idx[0], idx[1], idx[2]);
        if (values[hi] - values[lo]).abs() < 1e-14 {
            break;
        }
        let centroid = [
            0.5 * (simplex[lo][0] + simplex[mid][0]),
            0.5 * (simplex[lo][1] + simplex[mid][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[hi][0] - centroid[0]),
                centroid[1] + t * (simplex[hi][1] - centroid[1]),
            ]
        };
        let reflected = along(-1.0);
        let fr = neg(reflected);
        if fr < values[lo] {
            let expanded = along(-2.0);
            let fe = neg(expanded);
            if fe < fr {
                simplex[hi] = expanded;
                values[hi] = fe;
            } else {
                simplex[hi] = reflected;
                values[hi] = fr;
            }
        } else if fr < values[mid] {
            simplex[hi] = reflected;
            values[hi] = fr;
        } else {
            let contracted = along(0.5);
            let fc = neg(contracted);
            if fc < values[hi] {
                simplex[hi] = contracted;
                values[hi] = fc;
            } else {
                for k in [mid, hi] {
                    simplex[k] = [
                        0.5 * (simplex[k][0] + simplex[lo][0]),
                        0.5 * (simplex[k][1] + simplex[lo][1]),
                    ];
                    values[k] = neg(simplex[k]);
                }
            }
        }
    }
    -values.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::discord;
    use crate::qstate::{bd_state, BDParams};
    use num_complex::Complex64 as C64;

    #[test]
    fn product_state_has_no_discord() {
        let rho = DensityMatrix::basis_state(false, false);
        assert!(discord_bruteforce(&rho, 64).unwrap().abs() < 1e-6);
    }

    #[test]
    fn maximally_mixed_has_no_discord() {
        let rho = DensityMatrix::maximally_mixed();
        assert!(discord_bruteforce(&rho, 64).unwrap().abs() < 1e-12);
    }

    #[test]
    fn chloroform_state_matches_closed_form() {
        let c = BDParams::new(1.0, 0.7, -0.7);
        let d = discord_bruteforce(&bd_state(c).unwrap(), DEFAULT_GRID).unwrap();
        assert!((d - 0.39015).abs() < 1e-3);
        assert!((d - discord(&c)).abs() < 1e-6);
    }

    #[test]
    fn bell_state_has_one_bit() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure([C64::new(s, 0.0), 0.0.into(), 0.0.into(), C64::new(s, 0.0)]).unwrap();
        assert!((mutual_information(&rho).unwrap() - 2.0).abs() < 1e-9);
        assert!((discord_bruteforce(&rho, 64).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn off_axis_optimum_is_found() {
        // pure state cos a|00⟩ + sin a|11⟩ rotated on qubit B so the optimal
        // direction is off the grid axes; discord equals entanglement entropy
        let a: f64 = 0.4;
        let (ca, sa) = (a.cos(), a.sin());
        let (b, phi): (f64, f64) = (0.37, 1.1);
        let u0 = [C64::new((b / 2.0).cos(), 0.0), C64::from_polar((b / 2.0).sin(), phi)];
        let u1 = [C64::from_polar(-(b / 2.0).sin(), -phi), C64::new((b / 2.0).cos(), 0.0)];
        let psi = [ca * u0[0], ca * u0[1], sa * u1[0], sa * u1[1]];
        let rho = DensityMatrix::pure(psi).unwrap();
        let expect = entropy_bits(&[ca * ca, sa * sa]);
        let d = discord_bruteforce(&rho, 64).unwrap();
        assert!((d - expect).abs() < 1e-6, "{d} vs {expect}");
    }

    #[test]
    fn small_grid_rejected() {
        assert!(discord_bruteforce(&DensityMatrix::maximally_mixed(), 8).is_err());
    }
}
