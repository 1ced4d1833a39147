//! Inclusion segments, boundary parametrisations and the ring domain.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralDiff;

pub const DEFAULT_ASPECT: f64 = 0.01;
pub const DEFAULT_SEPARATION: f64 = 0.01;
pub const DEFAULT_CLEARANCE: f64 = 0.02;
/// Placement attempts allowed per requested inclusion.
pub const ATTEMPTS_PER_INCLUSION: usize = 10_000;
/// Exponent of the corner grading on square components.
pub const DEFAULT_GRADING_ORDER: u32 = 16;
/// Speed of the graded side parametrisation at mid-side, relative to
/// uniform spacing. Values above 1 move nodes towards the corners.
pub const GRADING_MID_SLOPE: f64 = 3.5;
/// Smallest admissible grading exponent.
pub const MIN_GRADING_ORDER: u32 = 4;

/// A straight inclusion, stored by midpoint, length and direction in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub center: Complex64,
    pub length: f64,
    pub angle: f64,
}

impl Segment {
    pub fn new(center: Complex64, length: f64, angle: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidInput(format!(
                "segment length must be positive and finite, got {length}"
            )));
        }
        if !(center.re.is_finite() && center.im.is_finite() && angle.is_finite()) {
            return Err(Error::InvalidInput("segment centre and angle must be finite".into()));
        }
        Ok(Self {
            center,
            length,
            angle: angle.rem_euclid(PI),
        })
    }

    pub fn direction(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }

    pub fn endpoints(&self) -> (Complex64, Complex64) {
        let half = 0.5 * self.length * self.direction();
        (self.center - half, self.center + half)
    }

    /// Distance from a point to the closed segment.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let (a, b) = self.endpoints();
        point_segment_distance(z, a, b)
    }
}

fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let s = ((z - a) * ab.conj()).re / len2;
    let s = s.clamp(0.0, 1.0);
    (z - (a + s * ab)).norm()
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> bool {
    let d1 = cross(a1 - a0, b0 - a0);
    let d2 = cross(a1 - a0, b1 - a0);
    let d3 = cross(b1 - b0, a0 - b0);
    let d4 = cross(b1 - b0, a1 - b0);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Euclidean distance between two closed segments; zero when they cross.
pub fn segment_min_distance(a: &Segment, b: &Segment) -> f64 {
    let (a0, a1) = a.endpoints();
    let (b0, b1) = b.endpoints();
    if segments_intersect(a0, a1, b0, b1) {
        return 0.0;
    }
    point_segment_distance(a0, b0, b1)
        .min(point_segment_distance(a1, b0, b1))
        .min(point_segment_distance(b0, a0, a1))
        .min(point_segment_distance(b1, a0, a1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Clockwise,
    CounterClockwise,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Orientation::Clockwise => -1.0,
            Orientation::CounterClockwise => 1.0,
        }
    }
}

/// Point and `t`-derivative of the clockwise thin ellipse around `seg`.
pub fn ellipse_param(seg: &Segment, aspect: f64, t: f64) -> (Complex64, Complex64) {
    let rot = 0.5 * seg.length * seg.direction();
    let (s, c) = t.sin_cos();
    (
        seg.center + rot * Complex64::new(c, -aspect * s),
        rot * Complex64::new(-s, -aspect * c),
    )
}

/// Graded side coordinate: maps `[0,1]` onto itself with all derivatives
/// up to order `p - 1` vanishing at both ends and slope
/// [`GRADING_MID_SLOPE`] at the middle of the side.
fn grading(sigma: f64, p: u32) -> (f64, f64) {
    let pf = p as f64;
    let b = GRADING_MID_SLOPE / (2.0 * pf);
    let u = 2.0 * sigma - 1.0;
    let v = (0.5 - b) * u * u * u + b * u + 0.5;
    let dv = 6.0 * (0.5 - b) * u * u + 2.0 * b;
    let vp = v.powi(p as i32);
    let wp = (1.0 - v).powi(p as i32);
    let den = vp + wp;
    let w = vp / den;
    let dw = pf * v.powi(p as i32 - 1) * (1.0 - v).powi(p as i32 - 1) / (den * den) * dv;
    (w, dw)
}

/// Square of half-side `half_side` centred at the origin. The parameter starts
/// at corner `(h, -h)`, corners sit at multiples of `π/2`, and the speed
/// vanishes at each corner.
pub fn square_param_graded(
    half_side: f64,
    t: f64,
    orientation: Orientation,
    order: u32,
) -> (Complex64, Complex64) {
    const CORNERS: [Complex64; 5] = [
        Complex64::new(1.0, -1.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(-1.0, 1.0),
        Complex64::new(-1.0, -1.0),
        Complex64::new(1.0, -1.0),
    ];
    let sign = orientation.sign();
    let q = (sign * t).rem_euclid(TAU) / FRAC_PI_2;
    let side = (q.floor() as usize).min(3);
    let sigma = (q - side as f64).clamp(0.0, 1.0);
    let (w, dw) = grading(sigma, order);
    let a = CORNERS[side];
    let b = CORNERS[side + 1];
    (
        half_side * (a + w * (b - a)),
        half_side * sign * dw * (b - a) / FRAC_PI_2,
    )
}

pub fn square_param(half_side: f64, t: f64, orientation: Orientation) -> (Complex64, Complex64) {
    square_param_graded(half_side, t, orientation, DEFAULT_GRADING_ORDER)
}

pub fn circle_param(
    center: Complex64,
    radius: f64,
    t: f64,
    orientation: Orientation,
) -> (Complex64, Complex64) {
    let e = Complex64::from_polar(1.0, orientation.sign() * t);
    (
        center + radius * e,
        Complex64::new(0.0, orientation.sign() * radius) * e,
    )
}

/// A closed boundary curve with its parametrisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ellipse { segment: Segment, aspect: f64 },
    Square { half_side: f64, orientation: Orientation, grading: u32 },
    Circle { center: Complex64, radius: f64, orientation: Orientation },
}

impl Shape {
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            Shape::Ellipse { segment, aspect } => ellipse_param(&segment, aspect, t),
            Shape::Square {
                half_side,
                orientation,
                grading,
            } => square_param_graded(half_side, t, orientation, grading),
            Shape::Circle {
                center,
                radius,
                orientation,
            } => circle_param(center, radius, t, orientation),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match *self {
            Shape::Ellipse { .. } => Orientation::Clockwise,
            Shape::Square { orientation, .. } | Shape::Circle { orientation, .. } => orientation,
        }
    }

    pub fn has_corners(&self) -> bool {
        matches!(self, Shape::Square { .. })
    }

    /// A point strictly inside the curve.
    pub fn interior_point(&self) -> Complex64 {
        match *self {
            Shape::Ellipse { segment, .. } => segment.center,
            Shape::Square { .. } => Complex64::new(0.0, 0.0),
            Shape::Circle { center, .. } => center,
        }
    }

    /// Whether `z` lies strictly inside the curve.
    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Shape::Ellipse { segment, aspect } => {
                let a = 0.5 * segment.length;
                let b = aspect * a;
                let local = (z - segment.center) * segment.direction().conj();
                (local.re / a).powi(2) + (local.im / b).powi(2) < 1.0
            }
            Shape::Square { half_side, .. } => z.re.abs() < half_side && z.im.abs() < half_side,
            Shape::Circle { center, radius, .. } => (z - center).norm() < radius,
        }
    }

    /// Distance from `z` to the curve. For ellipses this is a lower bound,
    /// exact up to the semi-minor axis.
    pub fn distance(&self, z: Complex64) -> f64 {
        match *self {
            Shape::Ellipse { segment, aspect } => {
                let b = 0.5 * aspect * segment.length;
                if self.contains(z) {
                    0.0
                } else {
                    (segment.distance_to(z) - b).max(0.0)
                }
            }
            Shape::Square { half_side, .. } => {
                let dx = z.re.abs() - half_side;
                let dy = z.im.abs() - half_side;
                if dx <= 0.0 && dy <= 0.0 {
                    -dx.max(dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            Shape::Circle { center, radius, .. } => ((z - center).norm() - radius).abs(),
        }
    }
}

/// Length distribution of generated inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LengthLaw {
    Fixed { length: f64 },
    Uniform { min: f64, max: f64 },
}

impl LengthLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthLaw::Fixed { length } if length.is_finite() && length > 0.0 => Ok(()),
            LengthLaw::Uniform { min, max }
                if min.is_finite() && max.is_finite() && min > 0.0 && min <= max =>
            {
                Ok(())
            }
            other => Err(Error::InvalidInput(format!("invalid length law {other:?}"))),
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            LengthLaw::Fixed { length } => length,
            LengthLaw::Uniform { min, max } if min == max => min,
            LengthLaw::Uniform { min, max } => rng.gen_range(min..max),
        }
    }
}

/// Placement constraints shared by generation and validation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementRules {
    pub inner_half_side: f64,
    pub aspect: f64,
    pub separation: f64,
    pub clearance: f64,
}

impl Default for PlacementRules {
    fn default() -> Self {
        Self {
            inner_half_side: 0.5,
            aspect: DEFAULT_ASPECT,
            separation: DEFAULT_SEPARATION,
            clearance: DEFAULT_CLEARANCE,
        }
    }
}

impl PlacementRules {
    pub fn validate(&self) -> Result<()> {
        let r = self.inner_half_side;
        if !(r.is_finite() && r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!(
                "inner half-side must lie in (0, 1), got {r}"
            )));
        }
        if !(self.aspect.is_finite() && self.aspect > 0.0 && self.aspect < 1.0) {
            return Err(Error::InvalidInput(format!(
                "aspect ratio must lie in (0, 1), got {}",
                self.aspect
            )));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::InvalidInput("separation must be non-negative".into()));
        }
        if !(self.clearance.is_finite() && self.clearance >= 0.0) {
            return Err(Error::InvalidInput("clearance must be non-negative".into()));
        }
        Ok(())
    }

    fn half_thickness(&self, seg: &Segment) -> f64 {
        0.5 * self.aspect * seg.length
    }

    /// First violated constraint for a single inclusion, if any.
    fn check_single(&self, seg: &Segment) -> Option<String> {
        let (a, b) = seg.endpoints();
        let pad = self.clearance + self.half_thickness(seg);
        for p in [a, b] {
            if p.re.abs() > 1.0 - pad || p.im.abs() > 1.0 - pad {
                return Some("too close to the outer square".into());
            }
        }
        let hole = Shape::Square {
            half_side: self.inner_half_side,
            orientation: Orientation::Clockwise,
            grading: DEFAULT_GRADING_ORDER,
        };
        if segment_square_distance(seg, self.inner_half_side) < pad || hole.contains(seg.center) {
            return Some("too close to the inner square".into());
        }
        None
    }

    fn pair_ok(&self, a: &Segment, b: &Segment) -> bool {
        segment_min_distance(a, b)
            >= self.separation + self.half_thickness(a) + self.half_thickness(b)
    }

    /// Checks every placement constraint, naming the first offending inclusion.
    pub fn check(&self, segments: &[Segment]) -> Result<()> {
        for (k, s) in segments.iter().enumerate() {
            if let Some(why) = self.check_single(s) {
                return Err(Error::Validation(format!("inclusion {k}: {why}")));
            }
            for (j, other) in segments[..k].iter().enumerate() {
                if !self.pair_ok(s, other) {
                    return Err(Error::Validation(format!(
                        "inclusions {j} and {k} are closer than the separation {}",
                        self.separation
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Distance from a segment to the boundary of the axis-aligned square of
/// half-side `h`, zero when the segment crosses it.
fn segment_square_distance(seg: &Segment, h: f64) -> f64 {
    let c = [
        Complex64::new(h, -h),
        Complex64::new(h, h),
        Complex64::new(-h, h),
        Complex64::new(-h, -h),
    ];
    (0..4)
        .map(|k| {
            let side = Segment {
                center: 0.5 * (c[k] + c[(k + 1) % 4]),
                length: 2.0 * h,
                angle: if k % 2 == 0 { FRAC_PI_2 } else { 0.0 },
            };
            segment_min_distance(seg, &side)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random sequential placement of `m` inclusions. Deterministic for a seed.
pub fn generate_cnts(
    m: usize,
    law: &LengthLaw,
    rules: &PlacementRules,
    seed: u64,
) -> Result<Vec<Segment>> {
    law.validate()?;
    rules.validate()?;
    let budget = ATTEMPTS_PER_INCLUSION.saturating_mul(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<Segment> = Vec::with_capacity(m);
    let mut attempts = 0usize;
    while placed.len() < m {
        if attempts >= budget {
            return Err(Error::Capacity {
                attempts,
                placed: placed.len(),
                requested: m,
            });
        }
        attempts += 1;
        let length = law.sample(&mut rng);
        let center = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let angle = rng.gen_range(0.0..PI);
        let seg = Segment::new(center, length, angle)?;
        if rules.check_single(&seg).is_some() {
            continue;
        }
        if placed.iter().all(|p| rules.pair_ok(&seg, p)) {
            placed.push(seg);
        }
    }
    Ok(placed)
}

/// The square ring with its inclusions and the interior reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub cnts: Vec<Segment>,
    pub rules: PlacementRules,
    pub alpha: Complex64,
    pub grading: u32,
}

impl Domain {
    pub fn new(cnts: Vec<Segment>, rules: PlacementRules) -> Result<Self> {
        rules.validate()?;
        rules.check(&cnts)?;
        let mut domain = Self {
            cnts,
            rules,
            alpha: Complex64::new(0.0, 0.0),
            grading: DEFAULT_GRADING_ORDER,
        };
        domain.alpha = domain.choose_alpha()?;
        Ok(domain)
    }

    pub fn with_grading(mut self, order: u32) -> Result<Self> {
        if order < MIN_GRADING_ORDER {
            return Err(Error::InvalidInput(format!(
                "corner grading order must be at least {MIN_GRADING_ORDER}, got {order}"
            )));
        }
        self.grading = order;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.cnts.len()
    }

    fn alpha_clear(&self, z: Complex64) -> bool {
        let shapes = self.shapes();
        let lim = self.rules.clearance;
        shapes[..self.m()]
            .iter()
            .all(|s| !s.contains(z) && s.distance(z) >= lim)
            && shapes[self.m()].distance(z) >= lim
            && !shapes[self.m()].contains(z)
            && shapes[self.m() + 1].distance(z) >= lim
    }

    /// Midpoint of the ring on the positive real axis, or the grid point
    /// farthest from every boundary when that one is crowded.
    fn choose_alpha(&self) -> Result<Complex64> {
        let h = self.rules.inner_half_side;
        let first = Complex64::new(0.5 * (1.0 + h), 0.0);
        if self.alpha_clear(first) {
            return Ok(first);
        }
        let shapes = self.shapes();
        let k = 41;
        let mut best: Option<(f64, Complex64)> = None;
        for i in 0..k {
            for j in 0..k {
                let z = Complex64::new(
                    -1.0 + 2.0 * (i as f64 + 0.5) / k as f64,
                    -1.0 + 2.0 * (j as f64 + 0.5) / k as f64,
                );
                if shapes.iter().take(self.m() + 1).any(|s| s.contains(z)) {
                    continue;
                }
                let d = shapes.iter().map(|s| s.distance(z)).fold(f64::INFINITY, f64::min);
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, z));
                }
            }
        }
        match best {
            Some((d, z)) if d >= self.rules.clearance => Ok(z),
            _ => Err(Error::Geometry(
                "no admissible interior reference point found".into(),
            )),
        }
    }

    /// Boundary curves ordered as inclusions, inner square, outer square.
    pub fn shapes(&self) -> Vec<Shape> {
        let mut out: Vec<Shape> = self
            .cnts
            .iter()
            .map(|&segment| Shape::Ellipse {
                segment,
                aspect: self.rules.aspect,
            })
            .collect();
        out.push(Shape::Square {
            half_side: self.rules.inner_half_side,
            orientation: Orientation::Clockwise,
            grading: self.grading,
        });
        out.push(Shape::Square {
            half_side: 1.0,
            orientation: Orientation::CounterClockwise,
            grading: self.grading,
        });
        out
    }

    pub fn discretize(&self, n: usize) -> Result<DiscretizedBoundary> {
        DiscretizedBoundary::new(self.shapes(), self.alpha, n)
    }
}

/// The problem geometry: the square ring with its inclusions, or the
/// concentric annulus whose solution is known in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    SquareRing(Domain),
    Annulus { inner_radius: f64 },
}

impl Layout {
    pub fn annulus(inner_radius: f64) -> Result<Self> {
        if !(inner_radius.is_finite() && inner_radius > 0.0 && inner_radius < 1.0) {
            return Err(Error::InvalidInput(format!(
                "annulus inner radius must lie in (0, 1), got {inner_radius}"
            )));
        }
        Ok(Layout::Annulus { inner_radius })
    }

    pub fn m(&self) -> usize {
        match self {
            Layout::SquareRing(d) => d.m(),
            Layout::Annulus { .. } => 0,
        }
    }

    pub fn discretize(&self, n: usize) -> Result<DiscretizedBoundary> {
        match self {
            Layout::SquareRing(d) => d.discretize(n),
            &Layout::Annulus { inner_radius } => {
                let origin = Complex64::new(0.0, 0.0);
                DiscretizedBoundary::new(
                    vec![
                        Shape::Circle {
                            center: origin,
                            radius: inner_radius,
                            orientation: Orientation::Clockwise,
                        },
                        Shape::Circle {
                            center: origin,
                            radius: 1.0,
                            orientation: Orientation::CounterClockwise,
                        },
                    ],
                    Complex64::new(0.5 * (1.0 + inner_radius), 0.0),
                    n,
                )
            }
        }
    }
}

/// What a boundary component represents in the boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Perfect conductor at an unknown constant temperature.
    Inclusion,
    /// Insulated inner boundary.
    Hole,
    /// Outer boundary with prescribed temperature `x`.
    Outer,
}

/// All components sampled at `t_j = 2πj/n`, stored contiguously.
#[derive(Debug, Clone)]
pub struct DiscretizedBoundary {
    n: usize,
    shapes: Vec<Shape>,
    alpha: Complex64,
    eta: Vec<Complex64>,
    eta_prime: Vec<Complex64>,
    eta_second: Vec<Complex64>,
}

impl DiscretizedBoundary {
    /// The last two shapes are the hole and the outer boundary.
    pub fn new(shapes: Vec<Shape>, alpha: Complex64, n: usize) -> Result<Self> {
        if shapes.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least a hole and an outer boundary".into(),
            ));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "nodes per component must be even and at least 8, got {n}"
            )));
        }
        if shapes.iter().any(Shape::has_corners) && !n.is_multiple_of(4) {
            return Err(Error::InvalidInput(format!(
                "square components need a node count divisible by 4, got {n}"
            )));
        }
        let diff = SpectralDiff::new(n)?;
        let total = shapes.len() * n;
        let mut eta = Vec::with_capacity(total);
        let mut eta_prime = Vec::with_capacity(total);
        let mut eta_second = Vec::with_capacity(total);
        for shape in &shapes {
            let start = eta_prime.len();
            for j in 0..n {
                let (z, dz) = shape.eval(TAU * j as f64 / n as f64);
                eta.push(z);
                eta_prime.push(dz);
            }
            eta_second.extend(diff.derivative(&eta_prime[start..])?);
        }
        if eta.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Geometry("non-finite boundary sample".into()));
        }
        for (k, shape) in shapes.iter().enumerate() {
            if !shape.has_corners()
                && eta_prime[k * n..(k + 1) * n].iter().any(|d| d.norm() == 0.0)
            {
                return Err(Error::Geometry(format!(
                    "component {k} has a vanishing tangent away from a corner"
                )));
            }
        }
        Ok(Self {
            n,
            shapes,
            alpha,
            eta,
            eta_prime,
            eta_second,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_components(&self) -> usize {
        self.shapes.len()
    }

    pub fn num_inclusions(&self) -> usize {
        self.shapes.len() - 2
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn role(&self, k: usize) -> Role {
        let m = self.num_inclusions();
        if k < m {
            Role::Inclusion
        } else if k == m {
            Role::Hole
        } else {
            Role::Outer
        }
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        k * self.n..(k + 1) * self.n
    }

    pub fn component_of(&self, index: usize) -> usize {
        index / self.n
    }

    pub fn weight(&self) -> f64 {
        TAU / self.n as f64
    }

    pub fn eta(&self) -> &[Complex64] {
        &self.eta
    }

    pub fn eta_prime(&self) -> &[Complex64] {
        &self.eta_prime
    }

    pub fn eta_second(&self) -> &[Complex64] {
        &self.eta_second
    }

    /// Local node indices of the corners of component `k`.
    pub fn corner_nodes(&self, k: usize) -> Vec<usize> {
        if self.shapes[k].has_corners() {
            (0..4).map(|c| c * self.n / 4).collect()
        } else {
            Vec::new()
        }
    }

    /// Flags, per node of the whole boundary, nodes within `half_width`
    /// of a corner.
    pub fn corner_window_mask(&self, half_width: usize) -> Vec<bool> {
        let n = self.n;
        let mut mask = vec![false; self.len()];
        for k in 0..self.num_components() {
            for c in self.corner_nodes(k) {
                for off in 0..=half_width.min(n / 2) {
                    mask[k * n + (c + off) % n] = true;
                    mask[k * n + (c + n - off) % n] = true;
                }
            }
        }
        mask
    }
}
