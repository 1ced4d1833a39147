//! File formats: the geometry text file and the solution file.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Layout, PlacementRules, Segment};
use crate::solver::BoundarySolution;

pub const GEOMETRY_HEADER: &str = "# cnt-bie geometry v1";
pub const SOLUTION_FORMAT: &str = "cnt-bie-solution/1";

/// Where an output came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header_lines(&self) -> Vec<String> {
        vec![
            format!("config_hash {}", self.config_hash),
            format!("seed {}", self.seed),
        ]
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Geometry as text: `#` comments, one `key value` record per line, and
/// one `cnt x y length angle` record per inclusion.
pub fn geometry_to_text(layout: &Layout, prov: &Provenance) -> String {
    let mut s = String::new();
    s.push_str(GEOMETRY_HEADER);
    s.push('\n');
    for line in prov.header_lines() {
        let _ = writeln!(s, "# {line}");
    }
    match layout {
        Layout::Annulus { inner_radius } => {
            let _ = writeln!(s, "kind annulus");
            let _ = writeln!(s, "inner_radius {inner_radius}");
        }
        Layout::SquareRing(d) => {
            let r = &d.rules;
            let _ = writeln!(s, "kind square_ring");
            let _ = writeln!(s, "inner_half_side {}", r.inner_half_side);
            let _ = writeln!(s, "aspect {}", r.aspect);
            let _ = writeln!(s, "separation {}", r.separation);
            let _ = writeln!(s, "clearance {}", r.clearance);
            let _ = writeln!(s, "grading {}", d.grading);
            let _ = writeln!(s, "# cnt center_x center_y length angle");
            for c in &d.cnts {
                let _ = writeln!(
                    s,
                    "cnt {} {} {} {}",
                    c.center.re, c.center.im, c.length, c.angle
                );
            }
        }
    }
    s
}

fn parse_num<T: std::str::FromStr>(tok: &str, what: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| {
        Error::Validation(format!("record at line {line}: cannot parse {what} `{tok}`"))
    })
}

/// Parses a geometry file and validates it. Embedded provenance is returned
/// when present.
pub fn geometry_from_text(text: &str) -> Result<(Layout, Option<Provenance>)> {
    let mut kind: Option<String> = None;
    let mut rules = PlacementRules::default();
    let mut grading = crate::geometry::DEFAULT_GRADING_ORDER;
    let mut inner_radius: Option<f64> = None;
    let mut cnts: Vec<Segment> = Vec::new();
    let mut cnt_lines: Vec<usize> = Vec::new();
    let mut hash: Option<String> = None;
    let mut seed: Option<u64> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(c) = trimmed.strip_prefix('#') {
            let mut t = c.split_whitespace();
            match (t.next(), t.next()) {
                (Some("config_hash"), Some(h)) => hash = Some(h.to_string()),
                (Some("seed"), Some(v)) => seed = v.parse().ok(),
                _ => {}
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let want = |count: usize| -> Result<()> {
            if toks.len() == count {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "record at line {line} (`{trimmed}`): expected {} fields, found {}",
                    count,
                    toks.len()
                )))
            }
        };
        match toks[0] {
            "kind" => {
                want(2)?;
                kind = Some(toks[1].to_string());
            }
            "inner_half_side" => {
                want(2)?;
                rules.inner_half_side = parse_num(toks[1], "inner_half_side", line)?;
            }
            "aspect" => {
                want(2)?;
                rules.aspect = parse_num(toks[1], "aspect", line)?;
            }
            "separation" => {
                want(2)?;
                rules.separation = parse_num(toks[1], "separation", line)?;
            }
            "clearance" => {
                want(2)?;
                rules.clearance = parse_num(toks[1], "clearance", line)?;
            }
            "grading" => {
                want(2)?;
                grading = parse_num(toks[1], "grading", line)?;
            }
            "inner_radius" => {
                want(2)?;
                inner_radius = Some(parse_num(toks[1], "inner_radius", line)?);
            }
            "cnt" => {
                want(5)?;
                let x: f64 = parse_num(toks[1], "center_x", line)?;
                let y: f64 = parse_num(toks[2], "center_y", line)?;
                let len: f64 = parse_num(toks[3], "length", line)?;
                let ang: f64 = parse_num(toks[4], "angle", line)?;
                let seg = Segment::new(Complex64::new(x, y), len, ang).map_err(|e| {
                    Error::Validation(format!(
                        "inclusion {} (line {line}): {e}",
                        cnts.len()
                    ))
                })?;
                cnts.push(seg);
                cnt_lines.push(line);
            }
            other => {
                return Err(Error::Validation(format!(
                    "record at line {line}: unknown key `{other}`"
                )))
            }
        }
    }

    let layout = match kind.as_deref() {
        Some("annulus") => {
            if !cnts.is_empty() {
                return Err(Error::Validation(format!(
                    "record at line {}: the annulus geometry takes no inclusions",
                    cnt_lines[0]
                )));
            }
            let r = inner_radius
                .ok_or_else(|| Error::Validation("annulus geometry without inner_radius".into()))?;
            Layout::annulus(r).map_err(|e| Error::Validation(e.to_string()))?
        }
        Some("square_ring") => {
            rules.validate().map_err(|e| Error::Validation(e.to_string()))?;
            if let Err(e) = rules.check(&cnts) {
                // the shortest failing prefix ends at the offending record
                let (mut lo, mut hi) = (0, cnts.len());
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if rules.check(&cnts[..mid]).is_err() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Err(Error::Validation(format!(
                    "{} (record at line {})",
                    e.to_string().trim_start_matches("validation failed: "),
                    cnt_lines[hi - 1]
                )));
            }
            Layout::SquareRing(Domain::new(cnts, rules)?.with_grading(grading)?)
        }
        Some(other) => {
            return Err(Error::Validation(format!("unknown geometry kind `{other}`")))
        }
        None => return Err(Error::Validation("geometry file has no `kind` record".into())),
    };
    let prov = match (hash, seed) {
        (Some(config_hash), Some(seed)) => Some(Provenance { config_hash, seed }),
        _ => None,
    };
    Ok((layout, prov))
}

/// Everything needed to evaluate fields again without solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub format: String,
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of the geometry file the solve started from.
    pub geometry_hash: String,
    pub layout: Layout,
    pub solution: BoundarySolution,
}

impl SolutionFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SolutionFile = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("solution file: {e}")))?;
        if file.format != SOLUTION_FORMAT {
            return Err(Error::Validation(format!(
                "solution file: unsupported format `{}`",
                file.format
            )));
        }
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }
}
