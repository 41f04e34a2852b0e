//! Simulated two-qubit Pauli tomography: shot-noise measurement, linear
//! inversion and projection onto the nearest density matrix.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{eigh, fidelity, nontrivial_pairs, pauli_expectation, ComplexMatrix4, DensityMatrix, Pauli};

/// One estimated expectation value `⟨σ_a ⊗ σ_b⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliEstimate {
    pub pauli_1: Pauli,
    pub pauli_2: Pauli,
    pub expectation: f64,
    pub shots: u64,
}

/// Estimates for the fifteen non-identity Pauli pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementRecord {
    pub entries: Vec<PauliEstimate>,
}

impl MeasurementRecord {
    /// Noise-free record of `rho`.
    pub fn exact(rho: impl AsRef<ComplexMatrix4>) -> Self {
        let rho = rho.as_ref();
        MeasurementRecord {
            entries: nontrivial_pairs()
                .map(|(a, b)| PauliEstimate {
                    pauli_1: a,
                    pauli_2: b,
                    expectation: pauli_expectation(rho, a, b),
                    shots: 0,
                })
                .collect(),
        }
    }

    pub fn get(&self, a: Pauli, b: Pauli) -> Option<&PauliEstimate> {
        self.entries.iter().find(|e| e.pauli_1 == a && e.pauli_2 == b)
    }

    /// Expectations indexed `[a][b]`, with `⟨II⟩ = 1`; fails unless every
    /// non-identity pair appears exactly once.
    pub fn table(&self) -> Result<[[f64; 4]; 4]> {
        let mut table = [[0.0; 4]; 4];
        let mut seen = [[false; 4]; 4];
        table[0][0] = 1.0;
        for e in &self.entries {
            let (a, b) = (e.pauli_1.index(), e.pauli_2.index());
            if (a, b) == (0, 0) {
                return Err(Error::Format {
                    context: "measurement record".into(),
                    message: "the II entry is fixed and must not be listed".into(),
                });
            }
            if seen[a][b] {
                return Err(Error::Format {
                    context: "measurement record".into(),
                    message: format!("duplicate entry {}{}", e.pauli_1, e.pauli_2),
                });
            }
            seen[a][b] = true;
            table[a][b] = e.expectation;
        }
        let missing: Vec<String> = nontrivial_pairs()
            .filter(|(a, b)| !seen[a.index()][b.index()])
            .map(|(a, b)| format!("{a}{b}"))
            .collect();
        if !missing.is_empty() {
            return Err(Error::IncompleteRecord(missing.join(", ")));
        }
        Ok(table)
    }

    /// CSV with columns `pauli_1, pauli_2, expectation, shots`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.entries {
            w.serialize(e)
                .map_err(|e| Error::format("writing measurement CSV", e))?;
        }
        w.flush().map_err(|e| Error::io("writing measurement CSV", e))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let entries = r
            .deserialize()
            .collect::<std::result::Result<Vec<PauliEstimate>, _>>()
            .map_err(|e| Error::format("reading measurement CSV", e))?;
        Ok(MeasurementRecord { entries })
    }
}

/// Measures each Pauli pair `shots` times. The number of `+1` outcomes is
/// binomial with success probability `(1 + ⟨P⟩)/2`; operator `k` (in
/// [`nontrivial_pairs`] order) draws from stream `k` of a ChaCha generator
/// seeded with `seed`.
pub fn simulate_measurements(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<MeasurementRecord> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let entries = nontrivial_pairs()
        .enumerate()
        .map(|(k, (a, b))| {
            let p = (0.5 * (1.0 + pauli_expectation(rho, a, b))).clamp(0.0, 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let dist = Binomial::new(shots, p).map_err(|e| Error::NumericalFailure(e.to_string()))?;
            let ups = dist.sample(&mut rng);
            Ok(PauliEstimate {
                pauli_1: a,
                pauli_2: b,
                expectation: 2.0 * ups as f64 / shots as f64 - 1.0,
                shots,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasurementRecord { entries })
}

/// `(I⊗I + Σ m_P P) / 4`: Hermitian with unit trace, not necessarily PSD.
pub fn linear_inversion(m: &MeasurementRecord) -> Result<ComplexMatrix4> {
    let table = m.table()?;
    let mut rho = ComplexMatrix4::zeros();
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            let v = table[a.index()][b.index()];
            if v != 0.0 {
                rho = rho + a.kron(b).scale_re(0.25 * v);
            }
        }
    }
    Ok(rho)
}

/// Euclidean projection onto `{p ≥ 0, Σp = 1}`.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cumsum += x;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Nearest density matrix in Frobenius norm: eigenvalues projected onto the
/// probability simplex, eigenvectors kept.
pub fn mle_project(rho_hat: &ComplexMatrix4) -> Result<DensityMatrix> {
    let eig = eigh(&rho_hat.hermitian_part())?;
    let p = project_to_simplex(&eig.values);
    let mut out = ComplexMatrix4::zeros();
    for (k, &w) in p.iter().enumerate() {
        if w > 0.0 {
            out = out + ComplexMatrix4::outer(&eig.vector(k)).scale_re(w);
        }
    }
    DensityMatrix::new(out.hermitian_part())
}

/// Outcome of the measure / invert / project pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub record: MeasurementRecord,
    pub linear: ComplexMatrix4,
    /// Smallest eigenvalue of the linear estimate; negative values are
    /// expected under shot noise.
    pub linear_min_eigenvalue: f64,
    pub state: DensityMatrix,
    pub fidelity: f64,
}

impl Reconstruction {
    pub fn linear_was_unphysical(&self) -> bool {
        self.linear_min_eigenvalue < 0.0
    }
}

pub fn reconstruct(rho: &DensityMatrix, shots: u64, seed: u64) -> Result<Reconstruction> {
    let record = simulate_measurements(rho, shots, seed)?;
    let linear = linear_inversion(&record)?;
    let linear_min_eigenvalue = eigh(&linear)?.values[0];
    let state = mle_project(&linear)?;
    let fidelity = fidelity(rho, &state)?;
    Ok(Reconstruction {
        record,
        linear,
        linear_min_eigenvalue,
        state,
        fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{bd_params_of, bd_state, BDParams};
    use proptest::prelude::*;

    const CHLOROFORM_C: BDParams = BDParams::new(1.0, 0.7, -0.7);

    #[test]
    fn simplex_example() {
        let p = project_to_simplex(&[1.1, 0.2, -0.2, -0.1]);
        let expect = [0.95, 0.05, 0.0, 0.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_projection() {
        let m = ComplexMatrix4::from_diagonal([1.1, 0.2, -0.2, -0.1]);
        let rho = mle_project(&m).unwrap();
        let expect = ComplexMatrix4::from_diagonal([0.95, 0.05, 0.0, 0.0]);
        assert!(rho.matrix().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn exact_record_inverts_exactly() {
        let rho = bd_state(CHLOROFORM_C).unwrap();
        let lin = linear_inversion(&MeasurementRecord::exact(rho)).unwrap();
        assert!(lin.max_abs_diff(rho.matrix()) < 1e-12);
        let zeros = MeasurementRecord {
            entries: MeasurementRecord::exact(rho)
                .entries
                .into_iter()
                .map(|e| PauliEstimate { expectation: 0.0, ..e })
                .collect(),
        };
        let mixed = linear_inversion(&zeros).unwrap();
        assert!(mixed.max_abs_diff(DensityMatrix::maximally_mixed().matrix()) < 1e-15);
    }

    #[test]
    fn incomplete_record_rejected() {
        let mut rec = MeasurementRecord::exact(DensityMatrix::maximally_mixed());
        rec.entries
            .retain(|e| !(e.pauli_1 == Pauli::Y && e.pauli_2 == Pauli::Z));
        assert!(matches!(linear_inversion(&rec), Err(Error::IncompleteRecord(m)) if m == "YZ"));
        let mut dup = MeasurementRecord::exact(DensityMatrix::maximally_mixed());
        dup.entries.push(dup.entries[0]);
        assert!(linear_inversion(&dup).is_err());
    }

    #[test]
    fn eigenstate_measurements() {
        let rho = DensityMatrix::basis_state(false, false);
        let rec = simulate_measurements(&rho, 1000, 3).unwrap();
        assert_eq!(rec.entries.len(), 15);
        assert_eq!(rec.get(Pauli::Z, Pauli::Z).unwrap().expectation, 1.0);
        assert!(rec.get(Pauli::X, Pauli::X).unwrap().expectation.abs() < 0.15);
        assert_eq!(rec, simulate_measurements(&rho, 1000, 3).unwrap());
        assert_ne!(rec, simulate_measurements(&rho, 1000, 4).unwrap());
        assert!(simulate_measurements(&rho, 0, 3).is_err());
    }

    #[test]
    fn many_shots_concentrate() {
        let rho = bd_state(CHLOROFORM_C).unwrap();
        let exact = MeasurementRecord::exact(rho);
        let mut worst = 0.0f64;
        for seed in 0..5 {
            let rec = simulate_measurements(&rho, 1_000_000, seed).unwrap();
            for (e, x) in rec.entries.iter().zip(&exact.entries) {
                worst = worst.max((e.expectation - x.expectation).abs());
            }
        }
        assert!(worst < 5e-3, "{worst}");
    }

    #[test]
    fn pipeline_fidelity() {
        let rho = bd_state(CHLOROFORM_C).unwrap();
        let r = reconstruct(&rho, 100_000, 11).unwrap();
        assert!(r.fidelity >= 0.99, "{}", r.fidelity);
        // a rank-two state almost always reconstructs with a negative eigenvalue
        assert!(r.linear_was_unphysical());
        let c = bd_params_of(r.state);
        for (a, b) in c.as_array().iter().zip(CHLOROFORM_C.as_array()) {
            assert!((a - b).abs() < 0.02);
        }
    }

    #[test]
    fn csv_round_trip() {
        let rec = simulate_measurements(&bd_state(CHLOROFORM_C).unwrap(), 500, 1).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("pauli_1,pauli_2,expectation,shots\n"));
        assert_eq!(MeasurementRecord::read_csv(buf.as_slice()).unwrap(), rec);
    }

    fn arb_physical() -> impl Strategy<Value = DensityMatrix> {
        proptest::array::uniform4(proptest::array::uniform2(-1.0f64..1.0)).prop_flat_map(|a| {
            proptest::array::uniform4(0.0f64..1.0).prop_map(move |w| {
                // mixture of four random (unnormalized) pure states
                let mut m = ComplexMatrix4::zeros();
                for (k, &wk) in w.iter().enumerate() {
                    let psi: [num_complex::Complex64; 4] =
                        std::array::from_fn(|j| num_complex::Complex64::new(a[(j + k) % 4][0], a[(j + 2 * k) % 4][1]));
                    m = m + ComplexMatrix4::outer(&psi).scale_re(wk + 1e-3);
                }
                let tr = m.trace().re;
                DensityMatrix::new(m.scale_re(1.0 / tr)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(rho in arb_physical()) {
            let once = mle_project(rho.matrix()).unwrap();
            prop_assert!(once.matrix().max_abs_diff(rho.matrix()) < 1e-12);
            let twice = mle_project(once.matrix()).unwrap();
            prop_assert!(twice.matrix().max_abs_diff(once.matrix()) < 1e-12);
        }

        #[test]
        fn projection_does_not_move_away(rho in arb_physical(), target in arb_physical(), noise in proptest::array::uniform16(-0.2f64..0.2)) {
            // Hermitian, trace-preserving perturbation built from Pauli pairs
            let mut m = *rho.matrix();
            for (k, (a, b)) in nontrivial_pairs().enumerate() {
                m = m + a.kron(b).scale_re(0.25 * noise[k]);
            }
            let p = mle_project(&m).unwrap();
            let before = (m - *target.matrix()).frobenius_norm();
            let after = (*p.matrix() - *target.matrix()).frobenius_norm();
            prop_assert!(after <= before + 1e-12);
        }
    }
}
