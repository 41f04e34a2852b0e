//! Two-qubit states: Pauli algebra, Bell-diagonal states, physicality checks
//! and the Uhlmann-Jozsa fidelity.

mod eigen;
mod matrix;
mod pauli;

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use eigen::{eigenvalues, eigenvalues2, eigh, HermitianEigen};
pub use matrix::{ComplexMatrix2, ComplexMatrix4};
pub use pauli::{nontrivial_pairs, Pauli};

use crate::error::{Error, Result};

/// Hermiticity and trace tolerance for a valid density matrix.
pub const VALIDITY_TOL: f64 = 1e-10;
/// Slack allowed below zero for eigenvalues of a valid density matrix.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: VALIDITY_TOL,
            trace: VALIDITY_TOL,
            psd: PSD_TOL,
        }
    }
}

/// A validated two-qubit density matrix: Hermitian, unit trace, positive
/// semidefinite (all within [`Tolerances`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(ComplexMatrix4);

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix4) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: ComplexMatrix4, tol: &Tolerances) -> Result<Self> {
        let herm = matrix.hermiticity_error();
        if !(herm <= tol.hermitian) {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (max deviation {herm:.3e})"
            )));
        }
        let tr = matrix.trace();
        if !((tr.re - 1.0).abs() <= tol.trace && tr.im.abs() <= tol.trace) {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}, expected 1")));
        }
        let min = eigenvalues(&matrix)?[0];
        if min < -tol.psd {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix(matrix))
    }

    /// Wraps a matrix the caller already knows to be a state.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix4) -> Self {
        DensityMatrix(matrix)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(ComplexMatrix4::identity().scale_re(0.25))
    }

    /// `|b1 b2⟩⟨b1 b2|` for computational basis bits.
    pub fn basis_state(b1: bool, b2: bool) -> Self {
        let k = (b1 as usize) * 2 + b2 as usize;
        let mut d = [0.0; 4];
        d[k] = 1.0;
        DensityMatrix(ComplexMatrix4::from_diagonal(d))
    }

    /// Pure state `|ψ⟩⟨ψ|`, normalizing `psi`.
    pub fn pure(psi: [C64; 4]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let psi = psi.map(|z| z / norm);
        Ok(DensityMatrix(ComplexMatrix4::outer(&psi)))
    }

    /// Product of two single-qubit pure states.
    pub fn product_pure(a: [C64; 2], b: [C64; 2]) -> Result<Self> {
        Self::pure([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix4 {
        self.0
    }

    /// `U ρ U†` for a unitary `U`.
    pub fn evolve(&self, u: &ComplexMatrix4) -> Self {
        DensityMatrix(self.0.conjugate_by(u))
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }
}

impl AsRef<ComplexMatrix4> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix4 {
        &self.0
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix4::deserialize(deserializer)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Correlation coefficients `c_i = ⟨σ_i ⊗ σ_i⟩` of a Bell-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BDParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl BDParams {
    pub const fn new(c1: f64, c2: f64, c3: f64) -> Self {
        BDParams { c1, c2, c3 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    /// Eigenvalues on |Φ+⟩, |Ψ+⟩, |Φ−⟩, |Ψ−⟩.
    pub fn bell_eigenvalues(&self) -> [f64; 4] {
        let BDParams { c1, c2, c3 } = *self;
        [
            (1.0 + c1 - c2 + c3) / 4.0,
            (1.0 - c1 + c2 + c3) / 4.0,
            (1.0 + c1 + c2 - c3) / 4.0,
            (1.0 - c1 - c2 - c3) / 4.0,
        ]
    }

    pub fn min_bell_eigenvalue(&self) -> f64 {
        self.bell_eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn is_physical(&self) -> bool {
        self.as_array().iter().all(|c| c.is_finite()) && self.min_bell_eigenvalue() >= -PSD_TOL
    }

    pub fn check_physical(&self) -> Result<()> {
        if self.is_physical() {
            Ok(())
        } else {
            Err(Error::UnphysicalParams {
                c1: self.c1,
                c2: self.c2,
                c3: self.c3,
                min_eigenvalue: self.min_bell_eigenvalue(),
            })
        }
    }

    /// `max(|c1|, |c2|, |c3|)`
    pub fn chi(&self) -> f64 {
        self.c1.abs().max(self.c2.abs()).max(self.c3.abs())
    }
}

impl fmt::Display for BDParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.c1, self.c2, self.c3)
    }
}

/// `(I + Σ c_i σ_i⊗σ_i) / 4`
pub fn bd_state(c: BDParams) -> Result<DensityMatrix> {
    c.check_physical()?;
    Ok(DensityMatrix(bd_matrix(c)))
}

pub(crate) fn bd_matrix(c: BDParams) -> ComplexMatrix4 {
    let m = ComplexMatrix4::identity()
        + Pauli::X.kron(Pauli::X).scale_re(c.c1)
        + Pauli::Y.kron(Pauli::Y).scale_re(c.c2)
        + Pauli::Z.kron(Pauli::Z).scale_re(c.c3);
    m.scale_re(0.25)
}

/// `c_i = Tr(ρ σ_i⊗σ_i)`. Accepts any matrix so that raw tomographic
/// estimates can be inspected before projection.
pub fn bd_params_of(rho: impl AsRef<ComplexMatrix4>) -> BDParams {
    let rho = rho.as_ref();
    BDParams {
        c1: rho.trace_product(&Pauli::X.kron(Pauli::X)).re,
        c2: rho.trace_product(&Pauli::Y.kron(Pauli::Y)).re,
        c3: rho.trace_product(&Pauli::Z.kron(Pauli::Z)).re,
    }
}

/// `Tr(ρ σ_a⊗σ_b)`, real for Hermitian input.
pub fn pauli_expectation(rho: impl AsRef<ComplexMatrix4>, a: Pauli, b: Pauli) -> f64 {
    // σ_a⊗σ_b has exactly one nonzero entry per row, so sum directly.
    let m = rho.as_ref();
    let pa = a.matrix();
    let pb = b.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for row in 0..4 {
        let (i, k) = (row >> 1, row & 1);
        for col in 0..4 {
            let (j, l) = (col >> 1, col & 1);
            let p = pa.0[i][j] * pb.0[k][l];
            if p.re != 0.0 || p.im != 0.0 {
                acc += p * m.0[col][row];
            }
        }
    }
    acc.re
}

/// All sixteen expectations indexed `[a][b]` by [`Pauli::index`].
pub fn pauli_table(rho: impl AsRef<ComplexMatrix4>) -> [[f64; 4]; 4] {
    let rho = rho.as_ref();
    let mut out = [[0.0; 4]; 4];
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            out[a.index()][b.index()] = pauli_expectation(rho, a, b);
        }
    }
    out
}

/// Principal square root of a positive semidefinite matrix; eigenvalues
/// below zero are clamped before the root is taken.
pub fn sqrtm_psd(m: &ComplexMatrix4) -> Result<ComplexMatrix4> {
    Ok(eigh(m)?.reassemble(|x| x.max(0.0).sqrt()))
}

/// Uhlmann-Jozsa fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let s = sqrtm_psd(rho.matrix())?;
    let inner = s * *sigma.matrix() * s;
    let vals = eigenvalues(&inner)?;
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-14 * scale.max(1e-300);
    let root: f64 = vals.iter().filter(|&&v| v > floor).map(|v| v.sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(m: &ComplexMatrix4) -> Result<f64> {
    Ok(entropy_bits(&eigenvalues(m)?))
}

/// `-Σ p log2 p` over the positive entries; `0·log 0 = 0`.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}
