use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix2, ComplexMatrix4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix2 {
        let o = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => ComplexMatrix2([[one, o], [o, one]]),
            Pauli::X => ComplexMatrix2([[o, one], [one, o]]),
            Pauli::Y => ComplexMatrix2([[o, -i], [i, o]]),
            Pauli::Z => ComplexMatrix2([[one, o], [o, -one]]),
        }
    }

    /// `σ_self ⊗ σ_other`
    pub fn kron(self, other: Pauli) -> ComplexMatrix4 {
        self.matrix().kron(&other.matrix())
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Pauli {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(format!("unknown Pauli label `{other}`")),
        }
    }
}

/// The fifteen non-identity two-qubit Pauli pairs in lexicographic order.
pub fn nontrivial_pairs() -> impl Iterator<Item = (Pauli, Pauli)> {
    Pauli::ALL
        .into_iter()
        .flat_map(|a| Pauli::ALL.into_iter().map(move |b| (a, b)))
        .filter(|&(a, b)| !(a == Pauli::I && b == Pauli::I))
}
