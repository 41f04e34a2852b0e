//! Fixed-size complex matrices for one and two qubits.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A 2×2 complex matrix, used for single-qubit operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2(pub [[C64; 2]; 2]);

/// A 4×4 complex matrix indexed in the computational basis |00⟩, |01⟩, |10⟩, |11⟩.
///
/// The first qubit is the most significant bit of the row/column index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix4(pub [[C64; 4]; 4]);

impl ComplexMatrix2 {
    pub const fn zeros() -> Self {
        ComplexMatrix2([[ZERO; 2]; 2])
    }

    pub const fn identity() -> Self {
        ComplexMatrix2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: C64, b: C64) -> Self {
        ComplexMatrix2([[a, ZERO], [ZERO, b]])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        ComplexMatrix2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &ComplexMatrix2) -> ComplexMatrix4 {
        let mut out = ComplexMatrix4::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out.0[2 * i + k][2 * j + l] = self.0[i][j] * rhs.0[k][l];
                    }
                }
            }
        }
        out
    }
}

impl Mul for ComplexMatrix2 {
    type Output = ComplexMatrix2;

    fn mul(self, rhs: Self) -> Self {
        let mut out = ComplexMatrix2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

impl Add for ComplexMatrix2 {
    type Output = ComplexMatrix2;

    fn add(mut self, rhs: Self) -> Self {
        for i in 0..2 {
            for j in 0..2 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl ComplexMatrix4 {
    pub const fn zeros() -> Self {
        ComplexMatrix4([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_diagonal(d: [f64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            m.0[i][i] = C64::new(d[i], 0.0);
        }
        m
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn outer(psi: &[C64; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = psi[i] * psi[j].conj();
            }
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `U · self · U†`
    pub fn conjugate_by(&self, u: &ComplexMatrix4) -> Self {
        *u * *self * u.adjoint()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &ComplexMatrix4) -> C64 {
        let mut acc = ZERO;
        for i in 0..4 {
            for k in 0..4 {
                acc += self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Symmetrize to `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    pub fn commutator(&self, other: &ComplexMatrix4) -> Self {
        *self * *other - *other * *self
    }

    /// Reduced state of the first qubit.
    pub fn partial_trace_second(&self) -> ComplexMatrix2 {
        let m = &self.0;
        ComplexMatrix2([
            [m[0][0] + m[1][1], m[0][2] + m[1][3]],
            [m[2][0] + m[3][1], m[2][2] + m[3][3]],
        ])
    }

    /// Reduced state of the second qubit.
    pub fn partial_trace_first(&self) -> ComplexMatrix2 {
        let m = &self.0;
        ComplexMatrix2([
            [m[0][0] + m[2][2], m[0][1] + m[2][3]],
            [m[1][0] + m[3][2], m[1][1] + m[3][3]],
        ])
    }

    pub fn to_pairs(&self) -> [[[f64; 2]; 4]; 4] {
        let mut out = [[[0.0; 2]; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = [self.0[i][j].re, self.0[i][j].im];
            }
        }
        out
    }

    pub fn from_pairs(pairs: &[[[f64; 2]; 4]; 4]) -> Self {
        let mut m = Self::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = C64::new(pairs[i][j][0], pairs[i][j][1]);
            }
        }
        m
    }
}

impl Default for ComplexMatrix4 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Index<(usize, usize)> for ComplexMatrix4 {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Mul for ComplexMatrix4 {
    type Output = ComplexMatrix4;

    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..4 {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl Add for ComplexMatrix4 {
    type Output = ComplexMatrix4;

    fn add(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl Sub for ComplexMatrix4 {
    type Output = ComplexMatrix4;

    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl AsRef<ComplexMatrix4> for ComplexMatrix4 {
    fn as_ref(&self) -> &ComplexMatrix4 {
        self
    }
}

// JSON form: nested arrays of [re, im] pairs, row-major.
impl Serialize for ComplexMatrix4 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_pairs().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix4 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = <[[[f64; 2]; 4]; 4]>::deserialize(deserializer)?;
        Ok(Self::from_pairs(&pairs))
    }
}
