//! Rasters from sampled grids: flux phase portraits and temperature bands.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldGrid;

/// Colour of cells outside the ring.
pub const MASK_GRAY: [u8; 3] = [190, 190, 190];
/// Colour of cells where the flux vanishes and has no direction.
pub const ZERO_GRAY: [u8; 3] = [128, 128, 128];
/// Ratio of `|q|` across one brightness period of the phase portrait.
pub const MODULUS_STEP: f64 = SQRT_2;

const BRIGHTNESS_FLOOR: f64 = 0.55;

/// RGB raster stored top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Plain (ASCII) portable pixmap with optional `#` comment lines.
    pub fn write_ppm<W: Write>(&self, out: &mut W, comments: &[String]) -> Result<()> {
        let io = |e| Error::io("<ppm>", e);
        let mut text = String::with_capacity(12 * self.pixels.len() + 64);
        text.push_str("P3\n");
        for c in comments {
            text.push_str("# ");
            text.push_str(&c.replace('\n', " "));
            text.push('\n');
        }
        text.push_str(&format!("{} {}\n255\n", self.width, self.height));
        for row in self.pixels.chunks(self.width.max(1)) {
            let line: Vec<String> = row
                .iter()
                .map(|p| format!("{} {} {}", p[0], p[1], p[2]))
                .collect();
            text.push_str(&line.join(" "));
            text.push('\n');
        }
        out.write_all(text.as_bytes()).map_err(io)
    }
}

/// Hue in degrees for a flux direction: east is red, north green, west
/// cyan and south violet, linear in between.
pub fn hue_for_argument(arg: f64) -> f64 {
    const ANCHORS: [(f64, f64); 5] = [
        (0.0, 0.0),
        (FRAC_PI_2, 120.0),
        (PI, 180.0),
        (3.0 * FRAC_PI_2, 270.0),
        (2.0 * PI, 360.0),
    ];
    let a = arg.rem_euclid(2.0 * PI);
    for w in ANCHORS.windows(2) {
        let ((a0, h0), (a1, h1)) = (w[0], w[1]);
        if a <= a1 {
            return (h0 + (h1 - h0) * (a - a0) / (a1 - a0)) % 360.0;
        }
    }
    0.0
}

pub fn hsv_to_rgb(hue: f64, sat: f64, val: f64) -> [u8; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let c = val * sat;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = val - c;
    let to = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to(r), to(g), to(b)]
}

/// Hue of an RGB colour in degrees, `None` for grays.
pub fn rgb_hue(p: [u8; 3]) -> Option<f64> {
    let [r, g, b] = p.map(|v| v as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    if d == 0.0 {
        return None;
    }
    let h = if max == r {
        ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    Some(60.0 * h)
}

/// Colour of one flux value.
pub fn flux_color(q: Complex64) -> [u8; 3] {
    let r = q.norm();
    if !r.is_finite() {
        return MASK_GRAY;
    }
    if r == 0.0 {
        return ZERO_GRAY;
    }
    let phase = (r.ln() / MODULUS_STEP.ln()).rem_euclid(1.0);
    let val = BRIGHTNESS_FLOOR + (1.0 - BRIGHTNESS_FLOOR) * phase;
    hsv_to_rgb(hue_for_argument(q.arg()), 1.0, val)
}

fn rows_top_first(grid: &FieldGrid, mut f: impl FnMut(usize) -> [u8; 3]) -> RasterImage {
    let mut pixels = Vec::with_capacity(grid.len());
    for j in (0..grid.ny).rev() {
        for i in 0..grid.nx {
            pixels.push(f(grid.index(i, j)));
        }
    }
    RasterImage {
        width: grid.nx,
        height: grid.ny,
        pixels,
    }
}

/// Domain colouring of `q`: hue for direction, a brightness sawtooth for
/// the modulus.
pub fn phase_portrait(grid: &FieldGrid) -> RasterImage {
    rows_top_first(grid, |idx| {
        if grid.is_interior(idx) {
            flux_color(grid.q[idx])
        } else {
            MASK_GRAY
        }
    })
}

/// Band index of every cell with `[-1, 1]` cut into `levels` equal bands;
/// masked cells get `-1`.
pub fn contour_bands(grid: &FieldGrid, levels: usize) -> Result<Vec<i64>> {
    if levels < 2 {
        return Err(Error::InvalidInput(format!(
            "contour bands need at least 2 levels, got {levels}"
        )));
    }
    Ok((0..grid.len())
        .map(|idx| {
            if grid.is_interior(idx) {
                band_of(grid.u[idx], levels)
            } else {
                -1
            }
        })
        .collect())
}

pub fn band_of(u: f64, levels: usize) -> i64 {
    let b = ((u + 1.0) / 2.0 * levels as f64).floor();
    b.clamp(0.0, levels as f64 - 1.0) as i64
}

/// Bands drawn on a blue to red ramp.
pub fn contour_image(grid: &FieldGrid, levels: usize) -> Result<RasterImage> {
    let bands = contour_bands(grid, levels)?;
    Ok(rows_top_first(grid, |idx| {
        let b = bands[idx];
        if b < 0 {
            return MASK_GRAY;
        }
        let t = (b as f64 + 0.5) / levels as f64;
        hsv_to_rgb(240.0 * (1.0 - t), 0.75, 0.95)
    }))
}

/// Number of 4-connected clusters of cells that touch a different band.
pub fn band_boundary_components(bands: &[i64], nx: usize, ny: usize) -> usize {
    let at = |i: usize, j: usize| bands[j * nx + i];
    let mut edge = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let b = at(i, j);
            if b < 0 {
                continue;
            }
            let differs = |ii: usize, jj: usize| {
                let o = at(ii, jj);
                o >= 0 && o != b
            };
            edge[j * nx + i] = (i > 0 && differs(i - 1, j))
                || (i + 1 < nx && differs(i + 1, j))
                || (j > 0 && differs(i, j - 1))
                || (j + 1 < ny && differs(i, j + 1));
        }
    }
    let mut seen = vec![false; nx * ny];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..nx * ny {
        if !edge[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(c) = stack.pop() {
            let (i, j) = (c % nx, c / nx);
            let mut visit = |n: usize| {
                if edge[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(c - 1);
            }
            if i + 1 < nx {
                visit(c + 1);
            }
            if j > 0 {
                visit(c - nx);
            }
            if j + 1 < ny {
                visit(c + nx);
            }
        }
    }
    count
}
