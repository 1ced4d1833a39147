//! Boundary integral solve: density, piecewise constants and boundary values
//! of the complex potential.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiscretizedBoundary, Role};
use crate::gnk::KernelContext;
use crate::krylov::{gmres, GmresOptions, LinearOperator, SolveReport};
use crate::spectral::SpectralDiff;

pub const DEFAULT_NODES: usize = 512;
/// Interpolation sources taken on each side of a corner window.
pub const CORNER_SOURCES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct SolverOptions {
    pub gmres: GmresOptions,
    /// Half-width, in nodes, of the window around each square corner where
    /// the density is repaired. Defaults to `n/16`.
    pub corner_window: Option<usize>,
}


/// Output of [`solve_rh`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySolution {
    pub n: usize,
    /// Density from the integral equation.
    pub mu: Vec<f64>,
    /// Nodal values of the piecewise-constant function before averaging.
    pub h_nodal: Vec<f64>,
    /// One constant per component: inclusions, hole, outer.
    pub h: Vec<f64>,
    /// `max |h_nodal − mean|` per component, corner windows excluded.
    pub flatness: Vec<f64>,
    /// Additive real constant of the complex potential.
    pub c: f64,
    /// Inclusion temperatures followed by the stream-function constant on the hole.
    pub delta: Vec<f64>,
    /// Complex potential `f = U + iV` at every node.
    pub f: Vec<Complex64>,
    /// Largest discrepancy among the redundant parts of the Cauchy identities
    /// used to recover the hole and outer constants.
    pub cauchy_residual: f64,
    /// Corner window half-width actually used.
    pub corner_window: usize,
    pub report: SolveReport,
}

impl BoundarySolution {
    pub fn num_inclusions(&self) -> usize {
        self.h.len().saturating_sub(2)
    }

    /// Temperatures on the inclusions.
    pub fn inclusion_temperatures(&self) -> &[f64] {
        &self.delta[..self.num_inclusions()]
    }
}

/// `γ = Re η` on the outer boundary, zero elsewhere.
pub fn build_gamma(boundary: &DiscretizedBoundary) -> Vec<f64> {
    let mut gamma = vec![0.0; boundary.len()];
    for k in 0..boundary.num_components() {
        if boundary.role(k) == Role::Outer {
            for i in boundary.range(k) {
                gamma[i] = boundary.eta()[i].re;
            }
        }
    }
    gamma
}

struct IMinusN<'c, 'b> {
    ctx: &'c KernelContext<'b>,
}

impl LinearOperator for IMinusN<'_, '_> {
    fn dim(&self) -> usize {
        self.ctx.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let nx = self.ctx.apply_n(x)?;
        for ((yi, xi), ni) in y.iter_mut().zip(x).zip(nx) {
            *yi = xi - ni;
        }
        Ok(())
    }
}

/// Largest usable window for `n` nodes per component, so that windows and
/// their interpolation sources around neighbouring corners stay apart.
pub fn effective_corner_window(n: usize, requested: usize) -> usize {
    let room = (n / 4).saturating_sub(CORNER_SOURCES + 1) / 2;
    requested.min(room)
}

/// Replaces values within `half_width` of each square corner by the
/// interpolating polynomial through `CORNER_SOURCES` nodes on either side.
pub fn repair_corner_windows(
    boundary: &DiscretizedBoundary,
    values: &mut [f64],
    half_width: usize,
) -> Result<()> {
    if values.len() != boundary.len() {
        return Err(Error::Dimension {
            expected: boundary.len(),
            got: values.len(),
        });
    }
    if half_width == 0 {
        return Ok(());
    }
    let n = boundary.n() as isize;
    let j = half_width as isize;
    let offsets: Vec<isize> = (1..=CORNER_SOURCES as isize)
        .flat_map(|s| [j + s, -(j + s)])
        .collect();
    for k in 0..boundary.num_components() {
        let base = boundary.range(k).start;
        let at = |c: isize, off: isize| base + (c + off).rem_euclid(n) as usize;
        for corner in boundary.corner_nodes(k) {
            let c = corner as isize;
            let ys: Vec<f64> = offsets.iter().map(|&o| values[at(c, o)]).collect();
            for off in -j..=j {
                let x = off as f64;
                let mut acc = 0.0;
                for (i, (&xi, &yi)) in offsets.iter().zip(&ys).enumerate() {
                    let mut l = 1.0;
                    for (q, &xq) in offsets.iter().enumerate() {
                        if q != i {
                            l *= (x - xq as f64) / (xi as f64 - xq as f64);
                        }
                    }
                    acc += l * yi;
                }
                values[at(c, off)] = acc;
            }
        }
    }
    Ok(())
}

/// `(1/2πi) Σ w e^{iθ}(γ + iμ) η' / (η − z)`.
fn cauchy_of_known_part(
    boundary: &DiscretizedBoundary,
    theta: &[f64],
    gamma: &[f64],
    mu: &[f64],
    z: Complex64,
) -> Complex64 {
    let w = boundary.weight();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..boundary.len() {
        let base = Complex64::from_polar(1.0, theta[i]) * Complex64::new(gamma[i], mu[i]);
        acc += base * boundary.eta_prime()[i] / (boundary.eta()[i] - z);
    }
    acc * w / Complex64::new(0.0, 2.0 * PI)
}

/// Solves the Riemann–Hilbert problem on the discretized boundary.
///
/// Fails with [`Error::Convergence`] when GMRES misses its tolerance.
pub fn solve_rh(
    boundary: &DiscretizedBoundary,
    options: &SolverOptions,
) -> Result<BoundarySolution> {
    let ctx = KernelContext::new(boundary)?;
    let n = boundary.n();
    let ncomp = boundary.num_components();
    let gamma = build_gamma(boundary);
    let (n_gamma, m_gamma) = ctx.apply_nm(&gamma)?;
    let rhs: Vec<f64> = m_gamma.iter().map(|v| -v).collect();

    let (mu, report) = gmres(&IMinusN { ctx: &ctx }, &rhs, &options.gmres)?;
    if !report.converged {
        return Err(Error::Convergence { report });
    }
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::Geometry("density is not finite".into()));
    }

    // Densities right at a corner are unreliable, and the cotangent split in
    // M does not weight them by the vanishing speed. The split is applied to
    // a repaired density; the raw window values are added back through the
    // kernel itself.
    let window = effective_corner_window(n, options.corner_window.unwrap_or(n / 16));
    let mut repaired = mu.clone();
    repair_corner_windows(boundary, &mut repaired, window)?;
    let mask = boundary.corner_window_mask(window);
    let columns: Vec<usize> = (0..mu.len()).filter(|&i| mask[i]).collect();
    let diffs: Vec<f64> = columns.iter().map(|&i| mu[i] - repaired[i]).collect();

    let mut m_mu = ctx.apply_m(&repaired)?;
    for (v, d) in m_mu.iter_mut().zip(ctx.apply_m_columns(&columns, &diffs)?) {
        *v += d;
    }
    let h_nodal: Vec<f64> = (0..mu.len())
        .map(|i| 0.5 * (m_mu[i] - gamma[i] + n_gamma[i]))
        .collect();

    let mut h = vec![0.0; ncomp];
    let mut flatness = vec![0.0; ncomp];
    for k in 0..ncomp {
        let kept: Vec<f64> = boundary
            .range(k)
            .filter(|&i| !mask[i])
            .map(|i| h_nodal[i])
            .collect();
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        h[k] = mean;
        flatness[k] = kept.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    }

    // The hole and outer constants are read off Cauchy's formula at a point
    // of the ring and a point inside the hole; nodal averages there are
    // polluted by the corners.
    let theta = ctx.theta();
    let hole = ncomp - 2;
    let outer = ncomp - 1;
    let b_alpha = cauchy_of_known_part(boundary, theta, &gamma, &mu, boundary.alpha());
    h[outer] = -b_alpha.re;
    let z_hole = boundary.shapes()[hole].interior_point();
    let b_hole = cauchy_of_known_part(boundary, theta, &gamma, &mu, z_hole);
    h[hole] = b_hole.im;
    let cauchy_residual = b_alpha.im.abs().max((b_hole.re + h[outer]).abs());

    let c = -h[outer];
    let mut delta: Vec<f64> = h[..hole].iter().map(|hk| hk + c).collect();
    delta.push(h[hole]);

    let f = (0..mu.len())
        .map(|i| {
            let k = i / n;
            Complex64::from_polar(1.0, theta[i]) * Complex64::new(gamma[i] + h[k], mu[i]) + c
        })
        .collect();

    Ok(BoundarySolution {
        n,
        mu,
        h_nodal,
        h,
        flatness,
        c,
        delta,
        f,
        cauchy_residual,
        corner_window: window,
        report,
    })
}

/// Derivatives of the boundary values.
#[derive(Debug, Clone)]
pub struct BoundaryDerivative {
    /// `df/dt` from spectral differentiation, per node.
    pub df_dt: Vec<Complex64>,
    /// `f'(η) = (df/dt)/η'`; meaningless where `valid` is false.
    pub values: Vec<Complex64>,
    /// False inside corner windows and where `η'` vanishes.
    pub valid: Vec<bool>,
}

pub fn boundary_f_prime(
    boundary: &DiscretizedBoundary,
    solution: &BoundarySolution,
) -> Result<BoundaryDerivative> {
    if solution.f.len() != boundary.len() {
        return Err(Error::Dimension {
            expected: boundary.len(),
            got: solution.f.len(),
        });
    }
    let diff = SpectralDiff::new(boundary.n())?;
    let mask = boundary.corner_window_mask(solution.corner_window);
    let mut df_dt = Vec::with_capacity(boundary.len());
    let mut values = Vec::with_capacity(boundary.len());
    let mut valid = Vec::with_capacity(boundary.len());
    for k in 0..boundary.num_components() {
        let r = boundary.range(k);
        let d = diff.derivative(&solution.f[r.clone()])?;
        let dz = &boundary.eta_prime()[r.clone()];
        let scale = dz.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (i, (dv, z)) in r.zip(d.iter().zip(dz)) {
            let ok = !mask[i] && z.norm() > 1e-12 * scale;
            df_dt.push(*dv);
            values.push(if ok { dv / z } else { Complex64::new(f64::NAN, f64::NAN) });
            valid.push(ok);
        }
    }
    Ok(BoundaryDerivative {
        df_dt,
        values,
        valid,
    })
}
