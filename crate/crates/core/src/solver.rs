//! Jacobi-preconditioned conjugate gradients for the implicit diffusion systems.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x0`
/// (zero when `None`). Converged means `‖b − A x‖ ≤ tol ‖b‖`.
pub fn solve_spd(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: b.len() });
    }
    let mut x = match x0 {
        Some(x0) if x0.len() == n => x0.to_vec(),
        Some(x0) => return Err(Error::SizeMismatch { expected: n, got: x0.len() }),
        None => vec![0.0; n],
    };
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut r = a.mul(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut rel = dot(&r, &r).sqrt() / b_norm;
    if rel <= tol {
        return Ok((x, SolveStats { iterations: 0, relative_residual: rel }));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverDiverged { iterations: it, residual: rel });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= tol {
            return Ok((x, SolveStats { iterations: it, relative_residual: rel }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged { iterations: max_iter, residual: rel })
}
