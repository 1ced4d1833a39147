//! Generalized Neumann kernel and its conjugate, applied matrix-free.
//!
//! Both kernels come out of one complex Cauchy-type sum
//! `S_i = Σ_{j≠i} c_j / (η_j − η_i)`, so a single [`SummationBackend`] call
//! serves `N` and the off-diagonal part of `M`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DiscretizedBoundary, Role, Shape};

/// Relative speed below which a node counts as sitting on a corner.
pub const DEGENERATE_SPEED: f64 = 1e-14;

/// Sums of the form `Σ_j q_j / (x_j − z)`.
pub trait SummationBackend: Send + Sync {
    /// `out[i] = Σ_{j ≠ i} q_j / (x_j − x_i)`. Coincident points contribute nothing.
    fn self_sums(&self, points: &[Complex64], strengths: &[Complex64], out: &mut [Complex64]);

    /// `out[k] = Σ_j q_j / (x_j − z_k)`.
    fn target_sums(
        &self,
        points: &[Complex64],
        strengths: &[Complex64],
        targets: &[Complex64],
        out: &mut [Complex64],
    );
}

/// Direct `O(N·M)` summation, parallel over targets.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenseBackend;

struct Soa {
    xr: Vec<f64>,
    xi: Vec<f64>,
    qr: Vec<f64>,
    qi: Vec<f64>,
}

impl Soa {
    fn new(points: &[Complex64], strengths: &[Complex64]) -> Self {
        Self {
            xr: points.iter().map(|z| z.re).collect(),
            xi: points.iter().map(|z| z.im).collect(),
            qr: strengths.iter().map(|z| z.re).collect(),
            qi: strengths.iter().map(|z| z.im).collect(),
        }
    }

    #[inline]
    fn sum_at(&self, z: Complex64) -> Complex64 {
        let (mut sr, mut si) = (0.0, 0.0);
        for (((&xr, &xi), &qr), &qi) in self.xr.iter().zip(&self.xi).zip(&self.qr).zip(&self.qi) {
            let dx = xr - z.re;
            let dy = xi - z.im;
            let r2 = dx * dx + dy * dy;
            let inv = if r2 > 0.0 { 1.0 / r2 } else { 0.0 };
            sr += (qr * dx + qi * dy) * inv;
            si += (qi * dx - qr * dy) * inv;
        }
        Complex64::new(sr, si)
    }
}

impl SummationBackend for DenseBackend {
    fn self_sums(&self, points: &[Complex64], strengths: &[Complex64], out: &mut [Complex64]) {
        let soa = Soa::new(points, strengths);
        out.par_iter_mut()
            .zip(points.par_iter())
            .with_min_len(64)
            .for_each(|(o, &z)| *o = soa.sum_at(z));
    }

    fn target_sums(
        &self,
        points: &[Complex64],
        strengths: &[Complex64],
        targets: &[Complex64],
        out: &mut [Complex64],
    ) {
        let soa = Soa::new(points, strengths);
        out.par_iter_mut()
            .zip(targets.par_iter())
            .with_min_len(16)
            .for_each(|(o, &z)| *o = soa.sum_at(z));
    }
}

/// Rotation angle of the boundary condition on a component.
pub fn theta_for(role: Role) -> f64 {
    match role {
        Role::Hole => FRAC_PI_2,
        Role::Inclusion | Role::Outer => 0.0,
    }
}

/// Discrete conjugation operator on one component, alternate-point rule.
///
/// Maps `cos(kt)` to `sin(kt)` exactly for `k < n/2`.
#[derive(Debug, Clone)]
pub struct Conjugator {
    n: usize,
    // cot(πk/n) for k = 0..n, zero at k = 0
    cot: Vec<f64>,
}

impl Conjugator {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "conjugation needs an even, nonzero node count (got {n})"
            )));
        }
        let cot = (0..n)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    1.0 / (PI * k as f64 / n as f64).tan()
                }
            })
            .collect();
        Ok(Self { n, cot })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn cot_offset(&self, i: usize, j: usize) -> f64 {
        self.cot[(i + self.n - j) % self.n]
    }

    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: values.len(),
            });
        }
        let n = self.n;
        let scale = 2.0 / n as f64;
        Ok((0..n)
            .map(|i| {
                let mut acc = 0.0;
                let mut j = (i + 1) % n;
                for _ in 0..n / 2 {
                    acc += self.cot_offset(i, j) * values[j];
                    j = (j + 2) % n;
                }
                scale * acc
            })
            .collect())
    }

    /// `(1/n) Σ_{j≠i} cot(π(i−j)/n) v_j − (K v)_i`, the part of `M` that is
    /// added back after the cotangent singularity is split off.
    fn split_correction(&self, values: &[f64], out: &mut [f64]) {
        let n = self.n;
        let inv = 1.0 / n as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in values.iter().enumerate() {
                if j == i {
                    continue;
                }
                // even offsets: +1/n, odd offsets: 1/n − 2/n
                let s = if (i + n - j).is_multiple_of(2) { inv } else { -inv };
                acc += s * self.cot_offset(i, j) * v;
            }
            *o += acc;
        }
    }
}

/// Conjugation of periodic samples on a single component.
pub fn conjugation(values: &[f64]) -> Result<Vec<f64>> {
    Conjugator::new(values.len())?.apply(values)
}

/// Precomputed data for applying `N` and `M` on a discretized boundary.
pub struct KernelContext<'a> {
    boundary: &'a DiscretizedBoundary,
    theta: Vec<f64>,
    a: Vec<Complex64>,
    // (1/π)(η''/(2η') − η'/(η−α)), zero where η' vanishes
    diag: Vec<Complex64>,
    conj: Conjugator,
    backend: Arc<dyn SummationBackend>,
}

impl<'a> KernelContext<'a> {
    /// Dense sums for small systems, multipole summation for large ones.
    pub fn new(boundary: &'a DiscretizedBoundary) -> Result<Self> {
        Self::with_backend(boundary, Arc::new(crate::fmm::FmmBackend::default()))
    }

    pub fn with_backend(
        boundary: &'a DiscretizedBoundary,
        backend: Arc<dyn SummationBackend>,
    ) -> Result<Self> {
        let n = boundary.n();
        let alpha = boundary.alpha();
        let mut theta = Vec::with_capacity(boundary.len());
        for k in 0..boundary.num_components() {
            theta.extend(std::iter::repeat_n(theta_for(boundary.role(k)), n));
        }
        let eta = boundary.eta();
        let mut a = Vec::with_capacity(eta.len());
        for (z, th) in eta.iter().zip(&theta) {
            let d = z - alpha;
            if d.norm() == 0.0 {
                return Err(Error::Geometry("reference point lies on the boundary".into()));
            }
            a.push(Complex64::from_polar(1.0, -th) * d);
        }
        // Where the graded speed is below rounding level of the spectral
        // second derivative the diagonal is set to zero.
        let mut diag = Vec::with_capacity(eta.len());
        for k in 0..boundary.num_components() {
            let r = boundary.range(k);
            let d1s = &boundary.eta_prime()[r.clone()];
            let floor = DEGENERATE_SPEED * d1s.iter().map(|d| d.norm()).fold(0.0, f64::max);
            for i in r {
                let (z, d1, d2) = (eta[i], boundary.eta_prime()[i], boundary.eta_second()[i]);
                diag.push(if d1.norm() <= floor {
                    Complex64::new(0.0, 0.0)
                } else {
                    FRAC_1_PI * (d2 / (2.0 * d1) - d1 / (z - alpha))
                });
            }
        }
        Ok(Self {
            boundary,
            theta,
            a,
            diag,
            conj: Conjugator::new(n)?,
            backend,
        })
    }

    pub fn boundary(&self) -> &DiscretizedBoundary {
        self.boundary
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn a(&self) -> &[Complex64] {
        &self.a
    }

    pub fn backend(&self) -> &dyn SummationBackend {
        self.backend.as_ref()
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }

    fn offdiag(&self, s: usize, t: usize) -> Complex64 {
        let eta = self.boundary.eta();
        let d = eta[t] - eta[s];
        if d.norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        FRAC_1_PI * self.a[s] / self.a[t] * self.boundary.eta_prime()[t] / d
    }

    /// `Σ_t w M(s,t) v_t` over the listed columns only, with the kernel
    /// applied directly rather than through the cotangent split. Rows equal
    /// to a listed column get no contribution from it.
    pub fn apply_m_columns(&self, columns: &[usize], values: &[f64]) -> Result<Vec<f64>> {
        if columns.len() != values.len() {
            return Err(Error::Dimension {
                expected: columns.len(),
                got: values.len(),
            });
        }
        if let Some(&bad) = columns.iter().find(|&&t| t >= self.len()) {
            return Err(Error::InvalidInput(format!("column {bad} out of range")));
        }
        let w = self.boundary.weight();
        Ok((0..self.len())
            .into_par_iter()
            .with_min_len(256)
            .map(|s| {
                columns
                    .iter()
                    .zip(values)
                    .filter(|(&t, _)| t != s)
                    .map(|(&t, &v)| w * self.offdiag(s, t).re * v)
                    .sum()
            })
            .collect())
    }

    /// `(1/π) A(s) Σ_{t≠s} w μ_t η'_t / (A_t (η_t − η_s))` at every node.
    fn cauchy_part(&self, mu: &[f64]) -> Vec<Complex64> {
        let w = self.boundary.weight();
        let strengths: Vec<Complex64> = mu
            .iter()
            .zip(self.boundary.eta_prime())
            .zip(&self.a)
            .map(|((&m, &d), &a)| w * m * d / a)
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); mu.len()];
        self.backend
            .self_sums(self.boundary.eta(), &strengths, &mut out);
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o *= FRAC_1_PI * a;
        }
        out
    }

    fn finish_n(&self, sums: &[Complex64], mu: &[f64]) -> Vec<f64> {
        let w = self.boundary.weight();
        sums.iter()
            .zip(&self.diag)
            .zip(mu)
            .map(|((s, d), &m)| s.im + w * d.im * m)
            .collect()
    }

    fn finish_m(&self, sums: &[Complex64], mu: &[f64]) -> Vec<f64> {
        let w = self.boundary.weight();
        let mut out: Vec<f64> = sums
            .iter()
            .zip(&self.diag)
            .zip(mu)
            .map(|((s, d), &m)| s.re + w * d.re * m)
            .collect();
        for k in 0..self.boundary.num_components() {
            let r = self.boundary.range(k);
            self.conj.split_correction(&mu[r.clone()], &mut out[r]);
        }
        out
    }

    pub fn apply_n(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_len(mu.len())?;
        Ok(self.finish_n(&self.cauchy_part(mu), mu))
    }

    pub fn apply_m(&self, mu: &[f64]) -> Result<Vec<f64>> {
        self.check_len(mu.len())?;
        Ok(self.finish_m(&self.cauchy_part(mu), mu))
    }

    /// `(Nμ, Mμ)` from one summation pass.
    pub fn apply_nm(&self, mu: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_len(mu.len())?;
        let sums = self.cauchy_part(mu);
        Ok((self.finish_n(&sums, mu), self.finish_m(&sums, mu)))
    }
}

fn check_index(ctx: &KernelContext<'_>, i: usize) -> Result<()> {
    if i >= ctx.len() {
        return Err(Error::InvalidInput(format!(
            "node index {i} out of range for {} nodes",
            ctx.len()
        )));
    }
    Ok(())
}

/// Entry `N(s,t)` of the kernel at global node indices.
pub fn kernel_n(ctx: &KernelContext<'_>, s: usize, t: usize) -> Result<f64> {
    check_index(ctx, s)?;
    check_index(ctx, t)?;
    Ok(if s == t {
        ctx.diag[s].im
    } else {
        ctx.offdiag(s, t).im
    })
}

/// Entry `M(s,t)` for `s ≠ t`; the diagonal is singular.
pub fn kernel_m(ctx: &KernelContext<'_>, s: usize, t: usize) -> Result<f64> {
    check_index(ctx, s)?;
    check_index(ctx, t)?;
    if s == t {
        return Err(Error::InvalidInput(
            "the conjugate kernel is singular on the diagonal".into(),
        ));
    }
    Ok(ctx.offdiag(s, t).re)
}

/// `M(s,t) + (1/2π) cot((s−t)/2)` for two nodes on the same component.
pub fn kernel_m_regular(ctx: &KernelContext<'_>, s: usize, t: usize) -> Result<f64> {
    check_index(ctx, s)?;
    check_index(ctx, t)?;
    let b = ctx.boundary;
    if b.component_of(s) != b.component_of(t) {
        return Err(Error::InvalidInput(
            "the regularised kernel is defined within one component".into(),
        ));
    }
    if s == t {
        return Ok(ctx.diag[s].re);
    }
    let n = b.n();
    let cot = ctx.conj.cot_offset(s % n, t % n);
    Ok(ctx.offdiag(s, t).re + cot / (2.0 * PI))
}

/// Complex kernel `(1/π) A(s)/A(t) · η'(t)/(η(t) − η(s))` at continuous
/// parameters of a single curve, for `s ≠ t`.
pub fn kernel_continuous(
    shape: &Shape,
    theta: f64,
    alpha: Complex64,
    s: f64,
    t: f64,
) -> Complex64 {
    let (zs, _) = shape.eval(s);
    let (zt, dt) = shape.eval(t);
    let rot = Complex64::from_polar(1.0, -theta);
    let a_s = rot * (zs - alpha);
    let a_t = rot * (zt - alpha);
    FRAC_1_PI * a_s / a_t * dt / (zt - zs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Orientation, Segment};
    use std::f64::consts::TAU;

    fn annulus(n: usize) -> DiscretizedBoundary {
        DiscretizedBoundary::new(
            vec![
                Shape::Circle {
                    center: Complex64::new(0.0, 0.0),
                    radius: 0.5,
                    orientation: Orientation::Clockwise,
                },
                Shape::Circle {
                    center: Complex64::new(0.0, 0.0),
                    radius: 1.0,
                    orientation: Orientation::CounterClockwise,
                },
            ],
            Complex64::new(0.75, 0.0),
            n,
        )
        .unwrap()
    }

    #[test]
    fn conjugation_maps_cos_to_sin() {
        let n = 32;
        for k in 1..n / 2 {
            let c: Vec<f64> = (0..n).map(|j| (k as f64 * TAU * j as f64 / n as f64).cos()).collect();
            let s = conjugation(&c).unwrap();
            for (j, v) in s.iter().enumerate() {
                let want = (k as f64 * TAU * j as f64 / n as f64).sin();
                assert!((v - want).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn conjugation_kills_constants() {
        let s = conjugation(&[3.0; 16]).unwrap();
        assert!(s.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn conjugation_rejects_odd() {
        assert!(conjugation(&[1.0; 5]).is_err());
    }

    #[test]
    fn unit_circle_n_is_constant() {
        let b = DiscretizedBoundary::new(
            vec![
                Shape::Circle {
                    center: Complex64::new(0.0, 0.0),
                    radius: 0.2,
                    orientation: Orientation::Clockwise,
                },
                Shape::Circle {
                    center: Complex64::new(0.0, 0.0),
                    radius: 1.0,
                    orientation: Orientation::CounterClockwise,
                },
            ],
            Complex64::new(0.0, 0.0),
            16,
        )
        .unwrap();
        let ctx = KernelContext::new(&b).unwrap();
        for s in 16..32 {
            for t in 16..32 {
                let v = kernel_n(&ctx, s, t).unwrap();
                assert!((v + 1.0 / TAU).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn index_errors() {
        let b = annulus(16);
        let ctx = KernelContext::new(&b).unwrap();
        assert!(kernel_n(&ctx, 0, 99).is_err());
        assert!(kernel_m(&ctx, 3, 3).is_err());
        assert!(kernel_m_regular(&ctx, 0, 20).is_err());
        assert!(matches!(ctx.apply_n(&[0.0; 5]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn regular_kernel_is_smooth_across_the_diagonal() {
        let seg = Segment::new(Complex64::new(0.0, 0.7), 0.4, 0.3).unwrap();
        let b = DiscretizedBoundary::new(
            vec![
                Shape::Ellipse { segment: seg, aspect: 0.3 },
                Shape::Square { half_side: 0.3, orientation: Orientation::Clockwise, grading: 8 },
                Shape::Square { half_side: 1.0, orientation: Orientation::CounterClockwise, grading: 8 },
            ],
            Complex64::new(0.65, 0.0),
            64,
        )
        .unwrap();
        let ctx = KernelContext::new(&b).unwrap();
        let s = 10;
        let d = kernel_m_regular(&ctx, s, s).unwrap();
        let l = kernel_m_regular(&ctx, s, s - 1).unwrap();
        let r = kernel_m_regular(&ctx, s, s + 1).unwrap();
        assert!((d - 0.5 * (l + r)).abs() < 0.05 * (1.0 + d.abs()));
    }
}
