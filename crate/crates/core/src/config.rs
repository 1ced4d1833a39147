//! Run configuration: one TOML file, optionally patched by `key=value`
//! overrides, validated before any work starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::BBox;
use crate::geometry::{
    LengthLaw, PlacementRules, DEFAULT_ASPECT, DEFAULT_CLEARANCE, DEFAULT_GRADING_ORDER,
    DEFAULT_SEPARATION, MIN_GRADING_ORDER,
};
use crate::krylov::{GmresOptions, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use crate::solver::{SolverOptions, DEFAULT_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    #[default]
    SquareRing,
    Annulus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmresConfig {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            maxit: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `[x_min, x_max, y_min, y_max]`
    pub bbox: [f64; 4],
    /// `[nx, ny]`
    pub resolution: [usize; 2],
    /// Number of temperature bands in the contour raster.
    pub levels: usize,
    /// Minimum distance from the boundary for the amplification maximum.
    pub standoff: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            bbox: [-1.0, 1.0, -1.0, 1.0],
            resolution: [500, 500],
            levels: 20,
            standoff: crate::field::DEFAULT_STANDOFF,
        }
    }
}

impl GridConfig {
    pub fn bbox(&self) -> BBox {
        let [x_min, x_max, y_min, y_max] = self.bbox;
        BBox {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }
}

/// Which artifacts to write, and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub grid_csv: bool,
    pub grid_binary: bool,
    pub bands_csv: bool,
    pub phase_portrait: bool,
    pub contours: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            grid_csv: true,
            grid_binary: false,
            bands_csv: false,
            phase_portrait: true,
            contours: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub m: usize,
    pub length_law: LengthLaw,
    pub geometry: GeometryKind,
    pub inner_half_side: f64,
    pub annulus_radius: f64,
    pub aspect: f64,
    pub separation: f64,
    pub clearance: f64,
    pub n: usize,
    pub grading: u32,
    /// Corner window half-width in nodes; `n/16` when absent.
    pub corner_window: Option<usize>,
    pub gmres: GmresConfig,
    pub grid: GridConfig,
    pub outputs: OutputConfig,
    pub probe_points: Vec<[f64; 2]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            m: 0,
            length_law: LengthLaw::Uniform { min: 0.1, max: 0.3 },
            geometry: GeometryKind::SquareRing,
            inner_half_side: 0.5,
            annulus_radius: 0.5,
            aspect: DEFAULT_ASPECT,
            separation: DEFAULT_SEPARATION,
            clearance: DEFAULT_CLEARANCE,
            n: DEFAULT_NODES,
            grading: DEFAULT_GRADING_ORDER,
            corner_window: None,
            gmres: GmresConfig::default(),
            grid: GridConfig::default(),
            outputs: OutputConfig::default(),
            probe_points: Vec::new(),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::Validation(msg)
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Applies one `dotted.key=value` override to a parsed document.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{assignment}` is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("override key `{key}` is malformed")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(invalid(format!("override key `{key}`: `{part}` is not a table"))),
        };
    }
    table.insert(
        parts[parts.len() - 1].to_string(),
        parse_override_value(raw.trim()),
    );
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table =
            toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e| invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn placement_rules(&self) -> PlacementRules {
        PlacementRules {
            inner_half_side: self.inner_half_side,
            aspect: self.aspect,
            separation: self.separation,
            clearance: self.clearance,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            gmres: GmresOptions {
                tolerance: self.gmres.tol,
                max_iterations: self.gmres.maxit,
            },
            corner_window: self.corner_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.length_law.validate().map_err(|e| invalid(e.to_string()))?;
        match self.geometry {
            GeometryKind::SquareRing => {
                self.placement_rules()
                    .validate()
                    .map_err(|e| invalid(e.to_string()))?;
                if self.grading < MIN_GRADING_ORDER {
                    return Err(invalid(format!(
                        "grading must be at least {MIN_GRADING_ORDER}, got {}",
                        self.grading
                    )));
                }
            }
            GeometryKind::Annulus => {
                let r = self.annulus_radius;
                if !(r.is_finite() && r > 0.0 && r < 1.0) {
                    return Err(invalid(format!("annulus_radius must lie in (0, 1), got {r}")));
                }
                if self.m != 0 {
                    return Err(invalid("the annulus geometry takes no inclusions (m = 0)".into()));
                }
            }
        }
        if self.n < 8 || !self.n.is_multiple_of(4) {
            return Err(invalid(format!(
                "n must be a multiple of 4 and at least 8, got {}",
                self.n
            )));
        }
        if !(self.gmres.tol.is_finite() && self.gmres.tol > 0.0 && self.gmres.tol < 1.0) {
            return Err(invalid(format!("gmres.tol must lie in (0, 1), got {}", self.gmres.tol)));
        }
        if self.gmres.maxit == 0 {
            return Err(invalid("gmres.maxit must be positive".into()));
        }
        self.grid.bbox().validate().map_err(|e| invalid(e.to_string()))?;
        if self.grid.resolution.contains(&0) {
            return Err(invalid("grid.resolution entries must be positive".into()));
        }
        if self.grid.levels < 2 {
            return Err(invalid(format!("grid.levels must be at least 2, got {}", self.grid.levels)));
        }
        if !(self.grid.standoff.is_finite() && self.grid.standoff >= 0.0) {
            return Err(invalid("grid.standoff must be non-negative".into()));
        }
        if let Some(p) = self
            .probe_points
            .iter()
            .find(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(invalid(format!("probe point {p:?} is not finite")));
        }
        Ok(())
    }

    /// Hex SHA-256 of everything that influences numeric results; the
    /// output section is left out.
    pub fn hash(&self) -> String {
        let mut numeric = self.clone();
        numeric.outputs = OutputConfig::default();
        let json = serde_json::to_string(&numeric).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
