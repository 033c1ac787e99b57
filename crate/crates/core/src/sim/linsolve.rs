//! Preconditioned conjugate gradients for the symmetric five-point pressure operator.

use crate::error::{Error, Result};

/// Symmetric five-point operator on an `nx × nz` lattice:
/// `(A x)_c = diag_c x_c − Σ_neighbours coef · x_neighbour`.
#[derive(Debug, Clone)]
pub struct FivePoint {
    pub nx: usize,
    pub diag: Vec<f64>,
    /// Coupling between `c` and `c + 1`.
    pub east: Vec<f64>,
    /// Coupling between `c` and `c + nx`.
    pub south: Vec<f64>,
}

impl FivePoint {
    pub fn zeros(nx: usize, n: usize) -> Self {
        Self {
            nx,
            diag: vec![0.0; n],
            east: vec![0.0; n],
            south: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Matrix-vector product. Opposite neighbours are paired before summation so
    /// that a mirror-symmetric operator maps mirror-symmetric vectors to exactly
    /// mirror-symmetric results.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        let nx = self.nx;
        for c in 0..n {
            let e = if c + 1 < n { self.east[c] * x[c + 1] } else { 0.0 };
            let w = if c >= 1 { self.east[c - 1] * x[c - 1] } else { 0.0 };
            let s = if c + nx < n { self.south[c] * x[c + nx] } else { 0.0 };
            let nn = if c >= nx { self.south[c - nx] * x[c - nx] } else { 0.0 };
            y[c] = self.diag[c] * x[c] - ((w + e) + (nn + s));
        }
    }

    /// Sum of the couplings of cell `c`, paired the same way as in [`FivePoint::apply`].
    pub fn coupling_sum(&self, c: usize) -> f64 {
        let n = self.len();
        let nx = self.nx;
        let e = self.east[c];
        let w = if c >= 1 { self.east[c - 1] } else { 0.0 };
        let s = if c + nx < n { self.south[c] } else { 0.0 };
        let nn = if c >= nx { self.south[c - nx] } else { 0.0 };
        (w + e) + (nn + s)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` starting from `x = 0`. Converged when `‖r‖ ≤ rtol · ‖b‖`.
/// Returns the iteration count.
pub fn pcg(op: &FivePoint, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<usize> {
    let n = op.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let b_norm = dot(b, b).sqrt();
    if !b_norm.is_finite() {
        return Err(Error::Numerical("non-finite pressure right-hand side".into()));
    }
    if b_norm == 0.0 {
        return Ok(0);
    }
    let inv_diag: Vec<f64> = op.diag.iter().map(|&d| 1.0 / d).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = rtol * b_norm;
    for it in 1..=max_iter {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!(
                "pressure operator lost positive definiteness at CG iteration {it}"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= target {
            return Ok(it);
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
    Err(Error::Numerical(format!(
        "pressure solver did not reach rtol {rtol:e} in {max_iter} iterations"
    )))
}
