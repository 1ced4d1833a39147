//! Off-boundary evaluation of analytic functions from boundary samples.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiscretizedBoundary, Role};
use crate::solver::{BoundaryDerivative, BoundarySolution};

/// Winding sums further than this from an integer mark the point as too
/// close to the boundary to evaluate.
pub const WINDING_TOLERANCE: f64 = 0.25;

/// Boundary samples of a function analytic in the ring.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticBoundaryData<'a> {
    boundary: &'a DiscretizedBoundary,
    values: &'a [Complex64],
}

impl<'a> AnalyticBoundaryData<'a> {
    pub fn new(boundary: &'a DiscretizedBoundary, values: &'a [Complex64]) -> Result<Self> {
        if values.len() != boundary.len() {
            return Err(Error::Dimension {
                expected: boundary.len(),
                got: values.len(),
            });
        }
        Ok(Self { boundary, values })
    }

    pub fn boundary(&self) -> &DiscretizedBoundary {
        self.boundary
    }

    pub fn values(&self) -> &[Complex64] {
        self.values
    }
}

fn node_hit(boundary: &DiscretizedBoundary, z: Complex64) -> Option<usize> {
    boundary.eta().iter().position(|&e| e == z)
}

/// Normalized discrete Cauchy integral of the data at `z`.
pub fn cauchy_eval(data: &AnalyticBoundaryData<'_>, z: Complex64) -> Result<Complex64> {
    if let Some(i) = node_hit(data.boundary, z) {
        return Err(Error::InvalidInput(format!(
            "evaluation point coincides with boundary node {i}"
        )));
    }
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for ((&e, &d), &v) in data
        .boundary
        .eta()
        .iter()
        .zip(data.boundary.eta_prime())
        .zip(data.values)
    {
        let a = d / (e - z);
        num += a * v;
        den += a;
    }
    Ok(num / den)
}

/// Value and derivative of the barycentric interpolant at `z`.
///
/// `F'(z) = Σ a_j (f_j − F(z))/(η_j − z) / Σ a_j` with `a_j = η'_j/(η_j − z)`,
/// which differentiates the normalized Cauchy formula exactly.
pub fn cauchy_eval_with_derivative(
    data: &AnalyticBoundaryData<'_>,
    z: Complex64,
) -> Result<(Complex64, Complex64)> {
    if let Some(i) = node_hit(data.boundary, z) {
        return Err(Error::InvalidInput(format!(
            "evaluation point coincides with boundary node {i}"
        )));
    }
    let b = data.boundary;
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    for ((&e, &d), &v) in b.eta().iter().zip(b.eta_prime()).zip(data.values) {
        let a = d / (e - z);
        s0 += a;
        s1 += a * v;
    }
    let value = s1 / s0;
    let mut t = Complex64::new(0.0, 0.0);
    for ((&e, &d), &v) in b.eta().iter().zip(b.eta_prime()).zip(data.values) {
        let r = 1.0 / (e - z);
        t += d * r * r * (v - value);
    }
    Ok((value, t / s0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    RingInterior,
    InsideInclusion(usize),
    InsideInnerSquare,
    Outside,
    NearBoundary,
}

impl PointClass {
    /// Small integer code used by the grid exports.
    pub fn code(self) -> i64 {
        match self {
            PointClass::RingInterior => 0,
            PointClass::InsideInclusion(k) => 1 + k as i64,
            PointClass::InsideInnerSquare => -1,
            PointClass::Outside => -2,
            PointClass::NearBoundary => -3,
        }
    }

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(PointClass::RingInterior),
            -1 => Some(PointClass::InsideInnerSquare),
            -2 => Some(PointClass::Outside),
            -3 => Some(PointClass::NearBoundary),
            k if k > 0 => Some(PointClass::InsideInclusion(k as usize - 1)),
            _ => None,
        }
    }
}

/// Discrete winding number of each component about `z`.
pub fn component_windings(boundary: &DiscretizedBoundary, z: Complex64) -> Vec<f64> {
    let w = boundary.weight();
    (0..boundary.num_components())
        .map(|k| {
            let r = boundary.range(k);
            let s: Complex64 = boundary.eta()[r.clone()]
                .iter()
                .zip(&boundary.eta_prime()[r])
                .map(|(&e, &d)| d / (e - z))
                .sum();
            (s * w / Complex64::new(0.0, 2.0 * PI)).re
        })
        .collect()
}

/// Classifies `z` by rounding the per-component winding sums.
pub fn classify_point(boundary: &DiscretizedBoundary, z: Complex64) -> PointClass {
    if node_hit(boundary, z).is_some() {
        return PointClass::NearBoundary;
    }
    let winds = component_windings(boundary, z);
    if winds.iter().any(|v| !v.is_finite()) {
        return PointClass::NearBoundary;
    }
    let mut rounded = Vec::with_capacity(winds.len());
    for v in &winds {
        let r = v.round();
        if (v - r).abs() > WINDING_TOLERANCE {
            return PointClass::NearBoundary;
        }
        rounded.push(r as i64);
    }
    let outer = boundary.num_components() - 1;
    let hole = outer - 1;
    if rounded[outer] != 1 {
        return if rounded.iter().all(|&r| r == 0) {
            PointClass::Outside
        } else {
            PointClass::NearBoundary
        };
    }
    let inside: Vec<usize> = (0..outer).filter(|&k| rounded[k] != 0).collect();
    match inside.as_slice() {
        [] => PointClass::RingInterior,
        [k] if *k == hole && rounded[*k] == -1 => PointClass::InsideInnerSquare,
        [k] if boundary.role(*k) == Role::Inclusion && rounded[*k] == -1 => {
            PointClass::InsideInclusion(*k)
        }
        _ => PointClass::NearBoundary,
    }
}

/// Temperature and flux at one point of the ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldValue {
    pub u: f64,
    pub q: Complex64,
}

/// `U = Re F(z)`, `q = −conj F'(z)` with the barycentric derivative.
pub fn eval_temperature_and_flux(
    boundary: &DiscretizedBoundary,
    solution: &BoundarySolution,
    z: Complex64,
) -> Result<FieldValue> {
    match classify_point(boundary, z) {
        PointClass::RingInterior => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "point {z} is not inside the ring ({other:?})"
            )))
        }
    }
    let data = AnalyticBoundaryData::new(boundary, &solution.f)?;
    let (value, deriv) = cauchy_eval_with_derivative(&data, z)?;
    Ok(FieldValue {
        u: value.re,
        q: -deriv.conj(),
    })
}

/// Flux from the Cauchy integral of boundary derivative samples.
///
/// Corner-window nodes are left out of the numerator. Less accurate near the
/// boundary than [`eval_temperature_and_flux`]; kept for comparison.
pub fn eval_flux_from_boundary_derivative(
    boundary: &DiscretizedBoundary,
    fprime: &BoundaryDerivative,
    z: Complex64,
) -> Result<Complex64> {
    if fprime.df_dt.len() != boundary.len() {
        return Err(Error::Dimension {
            expected: boundary.len(),
            got: fprime.df_dt.len(),
        });
    }
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for i in 0..boundary.len() {
        let r = 1.0 / (boundary.eta()[i] - z);
        den += boundary.eta_prime()[i] * r;
        if fprime.valid[i] {
            // f' η' is the parameter derivative itself
            num += fprime.df_dt[i] * r;
        }
    }
    Ok(-(num / den).conj())
}

/// Classification plus field values for many points, in parallel.
pub fn evaluate_points(
    boundary: &DiscretizedBoundary,
    solution: &BoundarySolution,
    points: &[Complex64],
) -> Result<Vec<(PointClass, Option<FieldValue>)>> {
    let data = AnalyticBoundaryData::new(boundary, &solution.f)?;
    points
        .par_iter()
        .with_min_len(8)
        .map(|&z| {
            let class = classify_point(boundary, z);
            if class != PointClass::RingInterior {
                return Ok((class, None));
            }
            let (v, d) = cauchy_eval_with_derivative(&data, z)?;
            Ok((
                class,
                Some(FieldValue {
                    u: v.re,
                    q: -d.conj(),
                }),
            ))
        })
        .collect()
}

/// Externally supplied boundary correspondence between a canonical
/// `w`-plane domain and the physical `z`-plane, one curve per component.
///
/// Both curves of a component are sampled at the same `n` equispaced
/// parameter values; each `w`-curve must be oriented with its exterior on
/// the left.
#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    pub n: usize,
    pub w: Vec<Vec<Complex64>>,
    pub z: Vec<Vec<Complex64>>,
}

impl Correspondence {
    pub fn new(w: Vec<Vec<Complex64>>, z: Vec<Vec<Complex64>>) -> Result<Self> {
        if w.is_empty() || w.len() != z.len() {
            return Err(Error::InvalidInput(
                "correspondence needs matching, non-empty component lists".into(),
            ));
        }
        let n = w[0].len();
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "correspondence components need an even node count, got {n}"
            )));
        }
        for (a, b) in w.iter().zip(&z) {
            if a.len() != n || b.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: a.len().min(b.len()),
                });
            }
        }
        Ok(Self { n, w, z })
    }

    /// Reads whitespace-separated records `component w_re w_im z_re z_im`,
    /// one per node in parameter order. `#` starts a comment.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut w: Vec<Vec<Complex64>> = Vec::new();
        let mut z: Vec<Vec<Complex64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Validation(format!("{}: line {}: malformed record", path.display(), lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(bad());
            }
            let k: usize = fields[0].parse().map_err(|_| bad())?;
            let nums: Vec<f64> = fields[1..]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            if nums.iter().any(|v| !v.is_finite()) || k > w.len() {
                return Err(bad());
            }
            if k == w.len() {
                w.push(Vec::new());
                z.push(Vec::new());
            }
            w[k].push(Complex64::new(nums[0], nums[1]));
            z[k].push(Complex64::new(nums[2], nums[3]));
        }
        Self::new(w, z)
    }

    fn derivatives(curves: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
        let diff = crate::spectral::SpectralDiff::new(curves[0].len())?;
        curves.iter().map(|c| diff.derivative(c)).collect()
    }

    /// Forward map `Φ(w) = w + (1/2πi)∮ (Φ(τ) − τ)/(τ − w) dτ` for an
    /// unbounded canonical domain with `Φ(w) − w → 0` at infinity.
    pub fn forward(&self, w: Complex64) -> Result<Complex64> {
        Ok(w + self.exterior_cauchy(&self.w, &self.z, w)?)
    }

    /// Inverse map `Φ⁻¹(z) = z + (1/2πi)∮ (Φ⁻¹(ζ) − ζ)/(ζ − z) dζ` over the
    /// physical curves.
    pub fn inverse(&self, z: Complex64) -> Result<Complex64> {
        Ok(z + self.exterior_cauchy(&self.z, &self.w, z)?)
    }

    /// `(1/2πi) Σ_k Σ_j (2π/n) (g_kj − c_kj) c'_kj / (c_kj − p)` where `c` are
    /// the contour samples and `g` the image samples.
    fn exterior_cauchy(
        &self,
        contour: &[Vec<Complex64>],
        image: &[Vec<Complex64>],
        p: Complex64,
    ) -> Result<Complex64> {
        let dc = Self::derivatives(contour)?;
        let w = 2.0 * PI / self.n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for ((c, g), d) in contour.iter().zip(image).zip(&dc) {
            for j in 0..self.n {
                let den = c[j] - p;
                if den.norm() == 0.0 {
                    return Err(Error::InvalidInput("point lies on a correspondence node".into()));
                }
                acc += (g[j] - c[j]) * d[j] / den;
            }
        }
        Ok(acc * w / Complex64::new(0.0, 2.0 * PI))
    }

    /// `F'(z) = f'(Φ⁻¹(z)) / Φ'(Φ⁻¹(z))`, with `Φ'` from a central difference
    /// of the forward map.
    pub fn chain_derivative(
        &self,
        fprime_w: impl Fn(Complex64) -> Complex64,
        z: Complex64,
    ) -> Result<Complex64> {
        let w = self.inverse(z)?;
        let h = 1e-5;
        let dphi = (self.forward(w + h)? - self.forward(w - h)?) / (2.0 * h);
        Ok(fprime_w(w) / dphi)
    }
}
