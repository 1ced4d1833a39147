//! End-to-end stages driven by a [`RunConfig`]: geometry, solve, field.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cauchy::{evaluate_points, PointClass};
use crate::config::{GeometryKind, RunConfig};
use crate::error::Result;
use crate::field::{
    conjugate_increment, delta_statistics, flux_amplification, net_flux, sample_grid,
    DeltaStatistics, FieldGrid,
};
use crate::geometry::{generate_cnts, Domain, Layout, Role};
use crate::io::{
    geometry_from_text, geometry_to_text, read_text, sha256_hex, write_file, Provenance,
    SolutionFile, SOLUTION_FORMAT,
};
use crate::render::{contour_bands, contour_image, phase_portrait};
use crate::solver::{solve_rh, BoundarySolution};

/// Contour fluxes are computed for every inclusion up to this many; beyond
/// it only the two squares get one, the rest rely on the boundary sum.
pub const CONTOUR_FLUX_MAX_INCLUSIONS: usize = 20;

/// Flatness above this marks a solve as under-resolved in the report.
pub const FLATNESS_WARNING: f64 = 1e-6;

/// Tolerance on leaving `[-1, 1]` before the report flags the maximum principle.
pub const MAX_PRINCIPLE_TOLERANCE: f64 = 1e-6;

pub fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance {
        config_hash: cfg.hash(),
        seed: cfg.seed,
    }
}

/// The geometry a configuration describes, generating inclusions if needed.
pub fn build_layout(cfg: &RunConfig) -> Result<Layout> {
    match cfg.geometry {
        GeometryKind::Annulus => Layout::annulus(cfg.annulus_radius),
        GeometryKind::SquareRing => {
            let rules = cfg.placement_rules();
            let cnts = generate_cnts(cfg.m, &cfg.length_law, &rules, cfg.seed)?;
            Ok(Layout::SquareRing(
                Domain::new(cnts, rules)?.with_grading(cfg.grading)?,
            ))
        }
    }
}

/// Generates the geometry and writes it to `path`.
pub fn cmd_gen(cfg: &RunConfig, path: &Path) -> Result<Layout> {
    let layout = build_layout(cfg)?;
    write_file(path, geometry_to_text(&layout, &provenance(cfg)).as_bytes())?;
    Ok(layout)
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub file: SolutionFile,
    pub wall_time_s: f64,
    pub report: String,
}

/// Solves on the geometry file, writes the solution and a text report.
pub fn cmd_solve(
    cfg: &RunConfig,
    geometry: &Path,
    solution_path: &Path,
    report_path: &Path,
) -> Result<SolveOutcome> {
    let text = read_text(geometry)?;
    let (layout, _) = geometry_from_text(&text)?;
    let start = Instant::now();
    let boundary = layout.discretize(cfg.n)?;
    let solution = solve_rh(&boundary, &cfg.solver_options())?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let prov = provenance(cfg);
    let file = SolutionFile {
        format: SOLUTION_FORMAT.to_string(),
        config_hash: prov.config_hash.clone(),
        seed: prov.seed,
        geometry_hash: sha256_hex(text.as_bytes()),
        layout,
        solution,
    };
    write_file(solution_path, file.to_json().as_bytes())?;
    let report = solve_report(&file, wall_time_s);
    write_file(report_path, report.as_bytes())?;
    Ok(SolveOutcome {
        file,
        wall_time_s,
        report,
    })
}

pub fn solve_report(file: &SolutionFile, wall_time_s: f64) -> String {
    let s = &file.solution;
    let mut out = String::new();
    let _ = writeln!(out, "# solve report");
    let _ = writeln!(out, "# config_hash {}", file.config_hash);
    let _ = writeln!(out, "# seed {}", file.seed);
    let _ = writeln!(out, "# geometry_hash {}", file.geometry_hash);
    let _ = writeln!(out, "inclusions = {}", s.num_inclusions());
    let _ = writeln!(out, "nodes_per_component = {}", s.n);
    let _ = writeln!(out, "converged = {}", s.report.converged);
    let _ = writeln!(out, "iterations = {}", s.report.iterations);
    let _ = writeln!(out, "final_residual = {:.3e}", s.report.final_residual());
    let _ = writeln!(out, "true_residual = {:.3e}", s.report.true_residual);
    let _ = writeln!(out, "cauchy_residual = {:.3e}", s.cauchy_residual);
    let _ = writeln!(out, "corner_window = {}", s.corner_window);
    let _ = writeln!(out, "c = {:.15e}", s.c);
    let flat = s.flatness.iter().cloned().fold(0.0, f64::max);
    let _ = writeln!(out, "max_h_flatness = {flat:.3e}");
    if flat > FLATNESS_WARNING {
        let _ = writeln!(
            out,
            "warning = boundary values are not flat to {FLATNESS_WARNING:.0e}; increase n"
        );
    }
    let _ = writeln!(out, "wall_time_s = {wall_time_s:.3}");
    for (k, d) in s.delta.iter().enumerate() {
        let label = if k < s.num_inclusions() { "delta" } else { "delta_hole" };
        let _ = writeln!(out, "{label}[{}] = {d:.15e}", k + 1);
    }
    for (k, f) in s.flatness.iter().enumerate() {
        let _ = writeln!(out, "h_flatness[{}] = {f:.3e}", k + 1);
    }
    for (k, r) in s.report.residual_history.iter().enumerate() {
        let _ = writeln!(out, "residual[{k}] = {r:.3e}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFlux {
    pub index: usize,
    pub role: Role,
    /// Increment of the conjugate function over the boundary nodes.
    pub boundary_increment: f64,
    /// Flux through an enclosing contour, from the evaluated field.
    pub contour_flux: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub z: Complex64,
    pub class: PointClass,
    pub u: Option<f64>,
    pub q: Option<Complex64>,
}

/// Invariants and diagnostics of one sampled solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldReport {
    pub provenance: Provenance,
    pub solution_config_hash: String,
    pub nx: usize,
    pub ny: usize,
    pub interior_cells: usize,
    pub extrema: Option<(f64, f64)>,
    pub max_principle_violation: f64,
    pub fluxes: Vec<ComponentFlux>,
    pub amplification: Option<f64>,
    pub standoff: f64,
    pub deltas: Vec<f64>,
    pub delta_statistics: Option<DeltaStatistics>,
    pub probes: Vec<Probe>,
}

impl FieldReport {
    pub fn max_principle_holds(&self) -> bool {
        self.max_principle_violation <= MAX_PRINCIPLE_TOLERANCE
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# field report");
        for l in self.provenance.header_lines() {
            let _ = writeln!(out, "# {l}");
        }
        let _ = writeln!(out, "# solution_config_hash {}", self.solution_config_hash);
        let _ = writeln!(out, "grid = {}x{}", self.nx, self.ny);
        let _ = writeln!(out, "interior_cells = {}", self.interior_cells);
        if let Some((lo, hi)) = self.extrema {
            let _ = writeln!(out, "u_min = {lo:.12}");
            let _ = writeln!(out, "u_max = {hi:.12}");
        }
        let _ = writeln!(
            out,
            "max_principle = {} (violation {:.3e})",
            if self.max_principle_holds() { "pass" } else { "FAIL" },
            self.max_principle_violation
        );
        for f in &self.fluxes {
            let contour = f
                .contour_flux
                .map_or("-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                out,
                "net_flux[{}] role={:?} boundary={:.3e} contour={}",
                f.index + 1,
                f.role,
                f.boundary_increment,
                contour
            );
        }
        match self.amplification {
            Some(a) => {
                let _ = writeln!(out, "flux_amplification = {a:.6} (standoff {})", self.standoff);
            }
            None => {
                let _ = writeln!(out, "flux_amplification = - (no cells beyond the standoff)");
            }
        }
        for (k, d) in self.deltas.iter().enumerate() {
            let _ = writeln!(out, "delta[{}] = {d:.12}", k + 1);
        }
        if let Some(st) = &self.delta_statistics {
            let _ = writeln!(out, "delta_fit_slope = {:.6e}", st.slope);
            let _ = writeln!(out, "delta_fit_intercept = {:.6e}", st.intercept);
            let _ = writeln!(out, "delta_fit_max_residual = {:.3e}", st.max_residual);
            let _ = writeln!(out, "delta_fit_relative_residual = {:.3e}", st.relative_residual);
        }
        for p in &self.probes {
            match (p.u, p.q) {
                (Some(u), Some(q)) => {
                    let _ = writeln!(
                        out,
                        "probe ({}, {}) u = {u:.12} q = ({:.9}, {:.9})",
                        p.z.re, p.z.im, q.re, q.im
                    );
                }
                _ => {
                    let _ = writeln!(out, "probe ({}, {}) masked {:?}", p.z.re, p.z.im, p.class);
                }
            }
        }
        out
    }
}

/// Diagnostics of a solution on a sampled grid.
pub fn field_report(
    cfg: &RunConfig,
    file: &SolutionFile,
    grid: &FieldGrid,
) -> Result<FieldReport> {
    let boundary = file.layout.discretize(file.solution.n)?;
    let sol = &file.solution;
    let m = sol.num_inclusions();
    let mut fluxes = Vec::with_capacity(boundary.num_components());
    for k in 0..boundary.num_components() {
        let role = boundary.role(k);
        let contour = if role != Role::Inclusion || m <= CONTOUR_FLUX_MAX_INCLUSIONS {
            Some(net_flux(&boundary, sol, k)?)
        } else {
            None
        };
        fluxes.push(ComponentFlux {
            index: k,
            role,
            boundary_increment: conjugate_increment(&boundary, sol, k)?,
            contour_flux: contour,
        });
    }
    let points: Vec<Complex64> = cfg
        .probe_points
        .iter()
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let probes = evaluate_points(&boundary, sol, &points)?
        .into_iter()
        .zip(points)
        .map(|((class, v), z)| Probe {
            z,
            class,
            u: v.map(|v| v.u),
            q: v.map(|v| v.q),
        })
        .collect();
    Ok(FieldReport {
        provenance: provenance(cfg),
        solution_config_hash: file.config_hash.clone(),
        nx: grid.nx,
        ny: grid.ny,
        interior_cells: grid.interior_count(),
        extrema: grid.extrema(),
        max_principle_violation: grid.max_principle_violation(),
        fluxes,
        amplification: flux_amplification(grid, cfg.grid.standoff).ok(),
        standoff: cfg.grid.standoff,
        deltas: sol.inclusion_temperatures().to_vec(),
        delta_statistics: if m >= 2 { Some(delta_statistics(sol)?) } else { None },
        probes,
    })
}

#[derive(Debug, Clone)]
pub struct FieldOutcome {
    pub grid: FieldGrid,
    pub report: FieldReport,
    pub files: Vec<PathBuf>,
}

/// Samples, renders and reports a stored solution into `out_dir`.
pub fn cmd_field(cfg: &RunConfig, solution: &Path, out_dir: &Path) -> Result<FieldOutcome> {
    let file = SolutionFile::read(solution)?;
    let boundary = file.layout.discretize(file.solution.n)?;
    let [nx, ny] = cfg.grid.resolution;
    let grid = sample_grid(&boundary, &file.solution, cfg.grid.bbox(), nx, ny)?;
    let prov = provenance(cfg);
    let header = prov.header_lines();
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = out_dir.join(name);
        write_file(&path, &bytes)?;
        files.push(path);
        Ok(())
    };
    let outs = &cfg.outputs;
    if outs.grid_csv {
        let mut buf = Vec::new();
        grid.write_csv(&mut buf, &header)?;
        emit("field.csv", buf)?;
    }
    if outs.grid_binary {
        let mut buf = Vec::new();
        grid.write_binary(&mut buf, &prov.config_hash, prov.seed)?;
        emit("field.bin", buf)?;
    }
    if outs.bands_csv {
        let bands = contour_bands(&grid, cfg.grid.levels)?;
        let mut buf = Vec::new();
        grid.write_csv_with(&mut buf, &header, Some(("band", &bands)))?;
        emit("bands.csv", buf)?;
    }
    if outs.phase_portrait {
        let mut buf = Vec::new();
        phase_portrait(&grid).write_ppm(&mut buf, &header)?;
        emit("flux_phase.ppm", buf)?;
    }
    if outs.contours {
        let mut buf = Vec::new();
        contour_image(&grid, cfg.grid.levels)?.write_ppm(&mut buf, &header)?;
        emit("temperature_bands.ppm", buf)?;
    }
    let report = field_report(cfg, &file, &grid)?;
    emit("field_report.txt", report.to_text().into_bytes())?;
    Ok(FieldOutcome {
        grid,
        report,
        files,
    })
}

/// Paths of the artifacts a full run writes into the output directory.
pub struct RunPaths {
    pub geometry: PathBuf,
    pub solution: PathBuf,
    pub solve_report: PathBuf,
}

impl RunPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            geometry: dir.join("geometry.txt"),
            solution: dir.join("solution.json"),
            solve_report: dir.join("solve_report.txt"),
        }
    }
}

/// All three stages in sequence into the configured output directory.
pub fn cmd_run(cfg: &RunConfig) -> Result<(SolveOutcome, FieldOutcome)> {
    let dir = &cfg.outputs.dir;
    let paths = RunPaths::in_dir(dir);
    cmd_gen(cfg, &paths.geometry)?;
    let solved = cmd_solve(cfg, &paths.geometry, &paths.solution, &paths.solve_report)?;
    let field = cmd_field(cfg, &paths.solution, dir)?;
    Ok((solved, field))
}

/// Solution of a layout in memory, for callers that do not need files.
pub fn solve_layout(cfg: &RunConfig, layout: &Layout) -> Result<BoundarySolution> {
    let boundary = layout.discretize(cfg.n)?;
    solve_rh(&boundary, &cfg.solver_options())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus_cfg(dir: &Path) -> RunConfig {
        RunConfig::from_toml_str(
            &format!(
                "geometry = \"annulus\"\nn = 64\nprobe_points = [[0.75, 0.0], [0.0, 0.0]]\n\
                 [grid]\nresolution = [21, 21]\n[outputs]\ndir = \"{}\"\n\
                 grid_binary = true\nbands_csv = true\n",
                dir.display()
            ),
            &[],
        )
        .unwrap()
    }

    #[test]
    fn annulus_run_end_to_end() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = annulus_cfg(tmp.path());
        let (solved, field) = cmd_run(&cfg).unwrap();
        assert!(solved.file.solution.report.converged);
        assert!(solved.file.solution.inclusion_temperatures().is_empty());
        assert!(field.report.max_principle_holds());
        for f in &field.report.fluxes {
            assert!(f.contour_flux.unwrap().abs() < 1e-6);
        }
        let p = &field.report.probes[0];
        assert!((p.u.unwrap() - (0.75 + 0.25 / 0.75) / 1.25).abs() < 1e-9);
        assert_eq!(field.report.probes[1].class, PointClass::InsideInnerSquare);
        let text = field.report.to_text();
        assert!(text.contains(&cfg.hash()));
        assert!(text.contains("max_principle = pass"));
        for name in [
            "geometry.txt",
            "solution.json",
            "solve_report.txt",
            "field.csv",
            "field.bin",
            "bands.csv",
            "flux_phase.ppm",
            "temperature_bands.ppm",
            "field_report.txt",
        ] {
            assert!(tmp.path().join(name).exists(), "{name}");
        }
    }

    #[test]
    fn field_rerun_is_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = annulus_cfg(tmp.path());
        cmd_run(&cfg).unwrap();
        let first = std::fs::read(tmp.path().join("flux_phase.ppm")).unwrap();
        let again = tmp.path().join("again");
        cmd_field(&cfg, &tmp.path().join("solution.json"), &again).unwrap();
        assert_eq!(first, std::fs::read(again.join("flux_phase.ppm")).unwrap());
    }
}
