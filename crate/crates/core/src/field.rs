//! Field sampling on Cartesian grids and the diagnostics derived from it.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cauchy::{cauchy_eval_with_derivative, evaluate_points, AnalyticBoundaryData, PointClass};
use crate::error::{Error, Result};
use crate::geometry::{DiscretizedBoundary, Orientation, Segment, Shape};
use crate::solver::{boundary_f_prime, BoundarySolution};

/// Cells closer than this to a boundary are ignored by [`flux_amplification`].
pub const DEFAULT_STANDOFF: f64 = 0.02;

/// Magic bytes opening a binary grid file.
pub const BINARY_MAGIC: &[u8; 8] = b"CNTGRID1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for BBox {
    fn default() -> Self {
        Self {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        }
    }
}

impl BBox {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min <= self.x_max
            && self.y_min <= self.y_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid bounding box {self:?}")))
        }
    }
}

/// Grid coordinate `i` of `count` nodes spread over `[lo, hi]`, ends included.
/// A single node sits at the midpoint.
fn node(lo: f64, hi: f64, i: usize, count: usize) -> f64 {
    if count == 1 {
        0.5 * (lo + hi)
    } else {
        lo + (hi - lo) * i as f64 / (count - 1) as f64
    }
}

/// Temperature and flux on a row-major grid; row `j` has `y` increasing
/// with `j`. Cells that are not inside the ring carry NaN values.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub bbox: BBox,
    pub nx: usize,
    pub ny: usize,
    pub u: Vec<f64>,
    pub q: Vec<Complex64>,
    pub class: Vec<PointClass>,
    /// Distance to the nearest boundary curve; NaN on masked cells.
    pub wall_distance: Vec<f64>,
}

impl FieldGrid {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            node(self.bbox.x_min, self.bbox.x_max, i, self.nx),
            node(self.bbox.y_min, self.bbox.y_max, j, self.ny),
        )
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.class[idx] == PointClass::RingInterior
    }

    pub fn interior_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_interior(i)).count()
    }

    /// `(min U, max U)` over interior cells.
    pub fn extrema(&self) -> Option<(f64, f64)> {
        (0..self.len())
            .filter(|&i| self.is_interior(i))
            .map(|i| self.u[i])
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }

    /// How far interior values leave `[-1, 1]`; zero when they do not.
    pub fn max_principle_violation(&self) -> f64 {
        self.extrema()
            .map(|(lo, hi)| (-1.0 - lo).max(hi - 1.0).max(0.0))
            .unwrap_or(0.0)
    }

    /// Text export: a `#` header, then `x,y,mask,U,Re q,Im q` per cell.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: &[String]) -> Result<()> {
        self.write_csv_with(out, header, None)
    }

    /// Text export with an extra integer column, used for band grids.
    pub fn write_csv_with<W: Write>(
        &self,
        out: &mut W,
        header: &[String],
        extra: Option<(&str, &[i64])>,
    ) -> Result<()> {
        let io = |e| Error::io("<grid csv>", e);
        for line in header {
            writeln!(out, "# {line}").map_err(io)?;
        }
        write!(out, "x,y,mask,U,re_q,im_q").map_err(io)?;
        if let Some((name, _)) = extra {
            write!(out, ",{name}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let idx = self.index(i, j);
                let z = self.point(i, j);
                write!(
                    out,
                    "{},{},{},{},{},{}",
                    z.re,
                    z.im,
                    self.class[idx].code(),
                    self.u[idx],
                    self.q[idx].re,
                    self.q[idx].im
                )
                .map_err(io)?;
                if let Some((_, col)) = extra {
                    write!(out, ",{}", col[idx]).map_err(io)?;
                }
                writeln!(out).map_err(io)?;
            }
        }
        Ok(())
    }

    /// Little-endian binary export; the layout is described in the README.
    pub fn write_binary<W: Write>(&self, out: &mut W, config_hash: &str, seed: u64) -> Result<()> {
        let io = |e| Error::io("<grid binary>", e);
        let mut hash = [b' '; 64];
        let bytes = config_hash.as_bytes();
        let k = bytes.len().min(64);
        hash[..k].copy_from_slice(&bytes[..k]);

        let mut buf = Vec::with_capacity(128 + 28 * self.len());
        buf.extend_from_slice(BINARY_MAGIC);
        buf.extend_from_slice(&(self.nx as u32).to_le_bytes());
        buf.extend_from_slice(&(self.ny as u32).to_le_bytes());
        for v in [self.bbox.x_min, self.bbox.x_max, self.bbox.y_min, self.bbox.y_max] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&seed.to_le_bytes());
        buf.extend_from_slice(&hash);
        for idx in 0..self.len() {
            buf.extend_from_slice(&(self.class[idx].code() as i32).to_le_bytes());
            buf.extend_from_slice(&self.u[idx].to_le_bytes());
            buf.extend_from_slice(&self.q[idx].re.to_le_bytes());
            buf.extend_from_slice(&self.q[idx].im.to_le_bytes());
        }
        out.write_all(&buf).map_err(io)
    }

    /// Reads a binary export back; wall distances are not stored and come
    /// back as NaN. Returns the grid, the embedded hash and the seed.
    pub fn read_binary<R: Read>(input: &mut R) -> Result<(Self, String, u64)> {
        let mut buf = Vec::new();
        input
            .read_to_end(&mut buf)
            .map_err(|e| Error::io("<grid binary>", e))?;
        let bad = |msg: &str| Error::Validation(format!("binary grid: {msg}"));
        const HEADER: usize = 8 + 4 + 4 + 32 + 8 + 64;
        if buf.len() < HEADER || &buf[..8] != BINARY_MAGIC {
            return Err(bad("missing header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
        let nx = u32_at(8) as usize;
        let ny = u32_at(12) as usize;
        let bbox = BBox {
            x_min: f64_at(16),
            x_max: f64_at(24),
            y_min: f64_at(32),
            y_max: f64_at(40),
        };
        let seed = u64::from_le_bytes(buf[48..56].try_into().unwrap());
        let hash = String::from_utf8_lossy(&buf[56..120]).trim_end().to_string();
        let cells = nx * ny;
        if buf.len() != HEADER + 28 * cells {
            return Err(bad("size does not match the resolution"));
        }
        let mut grid = FieldGrid {
            bbox,
            nx,
            ny,
            u: Vec::with_capacity(cells),
            q: Vec::with_capacity(cells),
            class: Vec::with_capacity(cells),
            wall_distance: vec![f64::NAN; cells],
        };
        for c in 0..cells {
            let o = HEADER + 28 * c;
            let code = i32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
            let class = PointClass::from_code(code as i64)
                .ok_or_else(|| bad(&format!("unknown class code {code} at cell {c}")))?;
            grid.class.push(class);
            grid.u.push(f64_at(o + 4));
            grid.q.push(Complex64::new(f64_at(o + 12), f64_at(o + 20)));
        }
        Ok((grid, hash, seed))
    }
}

/// Classifies every grid node and evaluates `U` and `q` on the ring ones.
pub fn sample_grid(
    boundary: &DiscretizedBoundary,
    solution: &BoundarySolution,
    bbox: BBox,
    nx: usize,
    ny: usize,
) -> Result<FieldGrid> {
    bbox.validate()?;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidInput(format!(
            "grid resolution must be positive, got {nx}x{ny}"
        )));
    }
    let points: Vec<Complex64> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                Complex64::new(
                    node(bbox.x_min, bbox.x_max, i, nx),
                    node(bbox.y_min, bbox.y_max, j, ny),
                )
            })
        })
        .collect();
    let values = evaluate_points(boundary, solution, &points)?;
    let shapes = boundary.shapes();
    let wall_distance = points
        .par_iter()
        .zip(&values)
        .map(|(&z, (class, _))| {
            if *class == PointClass::RingInterior {
                shapes.iter().map(|s| s.distance(z)).fold(f64::INFINITY, f64::min)
            } else {
                f64::NAN
            }
        })
        .collect();
    let nan = Complex64::new(f64::NAN, f64::NAN);
    Ok(FieldGrid {
        bbox,
        nx,
        ny,
        u: values.iter().map(|(_, v)| v.map_or(f64::NAN, |v| v.u)).collect(),
        q: values.iter().map(|(_, v)| v.map_or(nan, |v| v.q)).collect(),
        class: values.iter().map(|(c, _)| *c).collect(),
        wall_distance,
    })
}

/// Increment of `Im f` around component `k`, as the trapezoidal sum of its
/// spectral parameter derivative.
///
/// For single-valued boundary data this vanishes up to rounding;
/// [`net_flux`] is the check that goes through the field.
pub fn conjugate_increment(
    boundary: &DiscretizedBoundary,
    solution: &BoundarySolution,
    k: usize,
) -> Result<f64> {
    check_component(boundary, k)?;
    let d = boundary_f_prime(boundary, solution)?;
    let w = boundary.weight();
    Ok(boundary.range(k).map(|i| w * d.df_dt[i].im).sum())
}

fn check_component(boundary: &DiscretizedBoundary, k: usize) -> Result<()> {
    if k >= boundary.num_components() {
        return Err(Error::InvalidInput(format!(
            "component {k} out of range (have {})",
            boundary.num_components()
        )));
    }
    Ok(())
}

/// A closed curve inside the ring that encloses component `k` and no other
/// boundary. Its distance to `k` is at most 0.45 of the gap to the nearest
/// other component.
pub fn enclosing_contour(boundary: &DiscretizedBoundary, k: usize) -> Result<Shape> {
    check_component(boundary, k)?;
    let shape = boundary.shapes()[k];
    let others = boundary
        .eta()
        .iter()
        .enumerate()
        .filter(|(i, _)| boundary.component_of(*i) != k);
    let gap_to = |dist: &dyn Fn(Complex64) -> f64| {
        others.clone().map(|(_, &z)| dist(z)).fold(f64::INFINITY, f64::min)
    };
    let ccw = Orientation::CounterClockwise;
    let last = boundary.num_components() - 1;
    match shape {
        Shape::Ellipse { segment, aspect } => {
            let gap = gap_to(&|z| segment.distance_to(z));
            let d = (0.25 * segment.length).min(0.45 * gap);
            let b = 0.5 * aspect * segment.length;
            if d <= 2.0 * b {
                return Err(Error::Geometry(format!(
                    "component {k} is too crowded for an enclosing contour"
                )));
            }
            let length = segment.length + 2.0 * d;
            Ok(Shape::Ellipse {
                segment: Segment {
                    length,
                    ..segment
                },
                aspect: 2.0 * d / length,
            })
        }
        Shape::Square {
            half_side, grading, ..
        } => {
            let gap = gap_to(&|z| shape.distance(z));
            let d = 0.45 * gap;
            let h = if k == last { half_side - d } else { half_side + d };
            Ok(Shape::Square {
                half_side: h,
                orientation: ccw,
                grading,
            })
        }
        Shape::Circle { center, radius, .. } => {
            let gap = gap_to(&|z| shape.distance(z));
            let d = 0.45 * gap;
            let r = if k == last { radius - d } else { radius + d };
            Ok(Shape::Circle {
                center,
                radius: r,
                orientation: ccw,
            })
        }
    }
}

/// Outward flux `∮ ∂U/∂n ds` through the enclosing contour of component
/// `k`, integrated from the evaluated flux `q`.
///
/// The contour quadrature is refined until two successive levels agree.
/// For inclusions and the inner square this is the heat the component
/// absorbs and should vanish; for the outer square it is the net heat
/// through the outer wall.
pub fn net_flux(
    boundary: &DiscretizedBoundary,
    solution: &BoundarySolution,
    k: usize,
) -> Result<f64> {
    let contour = enclosing_contour(boundary, k)?;
    let sign = match contour.orientation() {
        Orientation::CounterClockwise => 1.0,
        Orientation::Clockwise => -1.0,
    };
    let data = AnalyticBoundaryData::new(boundary, &solution.f)?;
    let integrate = |points: usize| -> Result<(f64, f64)> {
        let h = TAU / points as f64;
        let terms = (0..points)
            .into_par_iter()
            .map(|j| {
                let (z, dz) = contour.eval(j as f64 * h);
                let (_, fp) = cauchy_eval_with_derivative(&data, z)?;
                // ∂U/∂n ds = Im(F' dz) for a counter-clockwise curve
                Ok(((fp * dz).im, (fp * dz).norm()))
            })
            .collect::<Result<Vec<_>>>()?;
        let sum: f64 = terms.iter().map(|t| t.0).sum();
        let scale: f64 = terms.iter().map(|t| t.1).sum();
        Ok((sign * h * sum, h * scale))
    };
    let mut points = 128;
    let (mut prev, _) = integrate(points)?;
    loop {
        points *= 2;
        let (cur, scale) = integrate(points)?;
        if (cur - prev).abs() <= 1e-13 * scale.max(1.0) || points >= 16384 {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// Largest `|q|` over interior cells at least `standoff` from every
/// boundary, relative to the imposed unit gradient.
pub fn flux_amplification(grid: &FieldGrid, standoff: f64) -> Result<f64> {
    let best = (0..grid.len())
        .filter(|&i| grid.is_interior(i) && grid.wall_distance[i] >= standoff)
        .map(|i| grid.q[i].norm())
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    best.ok_or_else(|| {
        Error::InvalidInput(format!(
            "no interior cells at distance {standoff} or more from the boundary"
        ))
    })
}

/// Sorted inclusion temperatures and their straight-line fit against rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaStatistics {
    pub sorted: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    /// `max_residual` divided by the spread of the temperatures.
    pub relative_residual: f64,
}

pub fn delta_statistics(solution: &BoundarySolution) -> Result<DeltaStatistics> {
    let m = solution.num_inclusions();
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "delta statistics need at least two inclusions, got {m}"
        )));
    }
    let mut sorted = solution.inclusion_temperatures().to_vec();
    sorted.sort_by(f64::total_cmp);
    let mf = m as f64;
    let x_mean = (mf - 1.0) / 2.0;
    let y_mean = sorted.iter().sum::<f64>() / mf;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in sorted.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxy += dx * (y - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let max_residual = sorted
        .iter()
        .enumerate()
        .map(|(i, y)| (y - intercept - slope * i as f64).abs())
        .fold(0.0, f64::max);
    let range = sorted[m - 1] - sorted[0];
    Ok(DeltaStatistics {
        relative_residual: if range > 0.0 { max_residual / range } else { 0.0 },
        sorted,
        slope,
        intercept,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cauchy::eval_temperature_and_flux;
    use crate::solver::{solve_rh, SolverOptions};

    fn annulus(n: usize) -> (DiscretizedBoundary, BoundarySolution) {
        let b = DiscretizedBoundary::new(
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
        .unwrap();
        let s = solve_rh(&b, &SolverOptions::default()).unwrap();
        (b, s)
    }

    #[test]
    fn single_cell_grid_matches_direct_evaluation() {
        let (b, s) = annulus(64);
        let bbox = BBox {
            x_min: 0.7,
            x_max: 0.8,
            y_min: 0.0,
            y_max: 0.0,
        };
        let g = sample_grid(&b, &s, bbox, 1, 1).unwrap();
        let direct = eval_temperature_and_flux(&b, &s, Complex64::new(0.75, 0.0)).unwrap();
        assert_eq!(g.u[0], direct.u);
        assert_eq!(g.q[0], direct.q);
    }

    #[test]
    fn annulus_grid_masks_and_extrema() {
        let (b, s) = annulus(128);
        let g = sample_grid(&b, &s, BBox::default(), 41, 41).unwrap();
        assert_eq!(g.class[g.index(20, 20)], PointClass::InsideInnerSquare);
        assert_eq!(g.class[g.index(0, 0)], PointClass::Outside);
        let (lo, hi) = g.extrema().unwrap();
        assert!(lo >= -1.0 && hi <= 1.0);
        assert_eq!(g.max_principle_violation(), 0.0);
        for i in 0..g.len() {
            assert_eq!(g.is_interior(i), g.u[i].is_finite());
        }
    }

    #[test]
    fn annulus_fluxes_vanish() {
        let (b, s) = annulus(128);
        for k in 0..2 {
            assert!(net_flux(&b, &s, k).unwrap().abs() < 1e-10);
            assert!(conjugate_increment(&b, &s, k).unwrap().abs() < 1e-12);
        }
        assert!(net_flux(&b, &s, 2).is_err());
    }

    #[test]
    fn enclosing_contours_stay_in_the_ring() {
        let cnt = Segment::new(Complex64::new(0.7, 0.1), 0.2, 0.4).unwrap();
        let d = crate::geometry::Domain::new(vec![cnt], Default::default()).unwrap();
        let b = d.discretize(128).unwrap();
        for k in 0..3 {
            let c = enclosing_contour(&b, k).unwrap();
            for j in 0..64 {
                let (z, _) = c.eval(j as f64 * TAU / 64.0);
                assert_eq!(
                    crate::cauchy::classify_point(&b, z),
                    PointClass::RingInterior,
                    "component {k}, point {z}"
                );
            }
        }
    }

    #[test]
    fn amplification_requires_cells() {
        let (b, s) = annulus(64);
        let g = sample_grid(&b, &s, BBox::default(), 9, 9).unwrap();
        assert!(flux_amplification(&g, 10.0).is_err());
        let a = flux_amplification(&g, 0.05).unwrap();
        assert!(a.is_finite() && a > 0.0);
    }

    #[test]
    fn delta_statistics_on_two_points() {
        let (_, mut s) = annulus(32);
        assert!(delta_statistics(&s).is_err());
        s.delta = vec![0.3, -0.3, 0.0];
        s.h = vec![0.0; 4];
        let st = delta_statistics(&s).unwrap();
        assert_eq!(st.sorted, vec![-0.3, 0.3]);
        assert!(st.max_residual < 1e-15);
        assert!((st.slope - 0.6).abs() < 1e-15);
    }

    #[test]
    fn binary_round_trip() {
        let (b, s) = annulus(64);
        let g = sample_grid(&b, &s, BBox::default(), 7, 5).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf, "abc123", 42).unwrap();
        let (back, hash, seed) = FieldGrid::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(hash, "abc123");
        assert_eq!(seed, 42);
        assert_eq!(back.class, g.class);
        for i in 0..g.len() {
            assert_eq!(back.u[i].to_bits(), g.u[i].to_bits());
        }
        buf.truncate(buf.len() - 1);
        assert!(FieldGrid::read_binary(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn csv_has_header_and_one_row_per_cell() {
        let (b, s) = annulus(64);
        let g = sample_grid(&b, &s, BBox::default(), 4, 3).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf, &["seed=1".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed=1");
        assert_eq!(lines[1], "x,y,mask,U,re_q,im_q");
        assert_eq!(lines.len(), 2 + 12);
    }
}
