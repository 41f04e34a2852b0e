//! Cyclic Jacobi eigensolver for 4×4 Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot element with a diagonal
//! unitary and then applies a real Givens rotation, so the iteration is the
//! classic symmetric Jacobi method lifted to complex Hermitian input. Pivots
//! are visited in the fixed order (0,1), (0,2), (0,3), (1,2), (1,3), (2,3).

use num_complex::Complex64 as C64;

use super::matrix::ComplexMatrix4;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;
const OFF_DIAGONAL_TOL: f64 = 1e-15;

/// Eigenvalues in ascending order with the matching eigenvectors stored as
/// the columns of `vectors`.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen {
    pub values: [f64; 4],
    pub vectors: ComplexMatrix4,
}

impl HermitianEigen {
    /// Rebuilds `V · diag(g(λ)) · V†`.
    pub fn reassemble(&self, g: impl Fn(f64) -> f64) -> ComplexMatrix4 {
        let mut out = ComplexMatrix4::zeros();
        let v = &self.vectors.0;
        for k in 0..4 {
            let w = g(self.values[k]);
            if w == 0.0 {
                continue;
            }
            for i in 0..4 {
                for j in 0..4 {
                    out.0[i][j] += v[i][k] * v[j][k].conj() * w;
                }
            }
        }
        out
    }

    pub fn vector(&self, k: usize) -> [C64; 4] {
        let v = &self.vectors.0;
        [v[0][k], v[1][k], v[2][k], v[3][k]]
    }
}

fn off_diagonal_norm(a: &ComplexMatrix4) -> f64 {
    let mut s = 0.0;
    for p in 0..4 {
        for q in (p + 1)..4 {
            s += 2.0 * a.0[p][q].norm_sqr();
        }
    }
    s.sqrt()
}

/// Diagonalizes a Hermitian matrix. Only the Hermitian part of `m` is used.
pub fn eigh(m: &ComplexMatrix4) -> Result<HermitianEigen> {
    if m.0.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite matrix entry".into()));
    }
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix4::identity();
    let scale = a.frobenius_norm();

    let mut converged = scale == 0.0;
    let mut sweep = 0;
    while !converged && sweep < MAX_SWEEPS {
        for p in 0..4 {
            for q in (p + 1)..4 {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweep += 1;
        converged = off_diagonal_norm(&a) <= OFF_DIAGONAL_TOL * scale;
    }
    if !converged {
        return Err(Error::NumericalFailure(format!(
            "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a.0[i][i].re.total_cmp(&a.0[j][j].re));
    let mut values = [0.0; 4];
    let mut vectors = ComplexMatrix4::zeros();
    for (k, &src) in order.iter().enumerate() {
        values[k] = a.0[src][src].re;
        for i in 0..4 {
            vectors.0[i][k] = v.0[i][src];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

pub fn eigenvalues(m: &ComplexMatrix4) -> Result<[f64; 4]> {
    eigh(m).map(|e| e.values)
}

fn rotate(a: &mut ComplexMatrix4, v: &mut ComplexMatrix4, p: usize, q: usize) {
    let apq = a.0[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a.0[p][p].re;
    let aqq = a.0[q][q].re;
    // below roundoff of the diagonal: annihilate without rotating
    if mag < 1e-18 * (app.abs() + aqq.abs()) {
        a.0[p][q] = C64::new(0.0, 0.0);
        a.0[q][p] = C64::new(0.0, 0.0);
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // columns: A ← A·J, with J = diag-phase · Givens
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    for i in 0..4 {
        let aip = a.0[i][p];
        let aiq = a.0[i][q];
        a.0[i][p] = aip * jpp + aiq * jqp;
        a.0[i][q] = aip * jpq + aiq * jqq;
        let vip = v.0[i][p];
        let viq = v.0[i][q];
        v.0[i][p] = vip * jpp + viq * jqp;
        v.0[i][q] = vip * jpq + viq * jqq;
    }
    // rows: A ← J†·A
    for j in 0..4 {
        let apj = a.0[p][j];
        let aqj = a.0[q][j];
        a.0[p][j] = jpp.conj() * apj + jqp.conj() * aqj;
        a.0[q][j] = jpq.conj() * apj + jqq.conj() * aqj;
    }
    a.0[p][q] = C64::new(0.0, 0.0);
    a.0[q][p] = C64::new(0.0, 0.0);
    a.0[p][p] = C64::new(a.0[p][p].re, 0.0);
    a.0[q][q] = C64::new(a.0[q][q].re, 0.0);
}

/// Eigenvalues of a 2×2 Hermitian matrix, ascending.
pub fn eigenvalues2(m: &super::matrix::ComplexMatrix2) -> [f64; 2] {
    let a = m.0[0][0].re;
    let d = m.0[1][1].re;
    let b = 0.5 * (m.0[0][1] + m.0[1][0].conj());
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - r, mean + r]
}
