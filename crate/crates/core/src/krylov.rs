//! Unrestarted GMRES with modified Gram–Schmidt.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmresOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    /// Relative residual estimate `‖b − Ax_k‖/‖b‖` after each iteration,
    /// starting with the initial guess.
    pub residual_history: Vec<f64>,
    /// Recomputed `‖b − Ax‖/‖b‖` for the returned iterate.
    pub true_residual: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `Ax = b` from a zero initial guess.
///
/// Returns the iterate and report whether or not the tolerance was met;
/// callers decide what non-convergence means.
pub fn gmres<A: LinearOperator + ?Sized>(
    op: &A,
    b: &[f64],
    options: &GmresOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = op.dim();
    if b.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    if !(options.tolerance > 0.0) || options.max_iterations == 0 {
        return Err(Error::InvalidInput(
            "GMRES needs a positive tolerance and iteration cap".into(),
        ));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("right-hand side is not finite".into()));
    }
    let beta = norm(b);
    if beta == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                converged: true,
                tolerance: options.tolerance,
                residual_history: vec![0.0],
                true_residual: 0.0,
            },
        ));
    }

    let maxit = options.max_iterations.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(maxit + 1);
    basis.push(b.iter().map(|v| v / beta).collect());
    // Hessenberg columns after rotation, stored as upper-triangular R
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(maxit);
    let mut cs: Vec<f64> = Vec::with_capacity(maxit);
    let mut sn: Vec<f64> = Vec::with_capacity(maxit);
    let mut g = vec![beta];
    let mut history = vec![1.0];
    let mut converged = false;

    let mut w = vec![0.0; n];
    for j in 0..maxit {
        op.apply(&basis[j], &mut w)?;
        let mut h = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            h[i] = hij;
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= hij * vk;
            }
        }
        let hnext = norm(&w);
        h[j + 1] = hnext;

        for i in 0..j {
            let t = cs[i] * h[i] + sn[i] * h[i + 1];
            h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
            h[i] = t;
        }
        let denom = h[j].hypot(h[j + 1]);
        let (c, s) = if denom == 0.0 {
            (1.0, 0.0)
        } else {
            (h[j] / denom, h[j + 1] / denom)
        };
        cs.push(c);
        sn.push(s);
        h[j] = denom;
        h[j + 1] = 0.0;
        g.push(-s * g[j]);
        g[j] *= c;
        h.truncate(j + 1);
        r.push(h);

        let rel = g[j + 1].abs() / beta;
        history.push(rel);
        // hnext == 0 is a lucky breakdown: the iterate is exact
        if rel < options.tolerance || hnext == 0.0 {
            converged = true;
            break;
        }
        basis.push(w.iter().map(|x| x / hnext).collect());
    }

    let k = r.len();
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for l in i + 1..k {
            acc -= r[l][i] * y[l];
        }
        y[i] = if r[i][i] != 0.0 { acc / r[i][i] } else { 0.0 };
    }
    let mut x = vec![0.0; n];
    for (yi, v) in y.iter().zip(&basis) {
        for (xk, vk) in x.iter_mut().zip(v) {
            *xk += yi * vk;
        }
    }

    op.apply(&x, &mut w)?;
    let resid: Vec<f64> = b.iter().zip(&w).map(|(bi, ai)| bi - ai).collect();
    let true_residual = norm(&resid) / beta;

    Ok((
        x,
        SolveReport {
            iterations: k,
            converged,
            tolerance: options.tolerance,
            residual_history: history,
            true_residual,
        },
    ))
}

/// Dense row-major matrix as an operator; handy for tests and small systems.
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&self.data[i * self.n..(i + 1) * self.n], x);
        }
        Ok(())
    }
}
