//! Cyclic Jacobi eigensolver for small Hermitian matrices.
//!
//! A Hermitian `H = A + iB` is embedded as the real symmetric block matrix
//! `[[A, −B], [B, A]]`, whose spectrum is that of `H` with every eigenvalue
//! doubled. The real matrix is then diagonalized by cyclic Jacobi sweeps.

use crate::error::{invalid, Error, Result};
use crate::operator::CMatrix;

/// Hermiticity tolerance accepted by the solver.
pub const HERMITIAN_TOL: f64 = 1e-10;

const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix stored row-major, ascending.
fn jacobi_symmetric(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < OFF_DIAGONAL_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(invalid("eigenvalues require a square matrix"));
    }
    let residual = m.hermitian_residual();
    if residual >= HERMITIAN_TOL {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.rows();
    let big = 2 * n;
    let mut a = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            // symmetrize so rounding-level non-Hermiticity cannot leak in
            let z = 0.5 * (m.get(i, j) + m.get(j, i).conj());
            a[i * big + j] = z.re;
            a[(i + n) * big + (j + n)] = z.re;
            a[i * big + (j + n)] = -z.im;
            a[(i + n) * big + j] = z.im;
        }
    }
    let doubled = jacobi_symmetric(a, big);
    Ok(doubled.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
}

/// max |λ| over the spectrum of a Hermitian matrix.
pub fn hermitian_extremal_eigenvalue(m: &CMatrix) -> Result<f64> {
    let eig = hermitian_eigenvalues(m)?;
    Ok(eig.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
}
