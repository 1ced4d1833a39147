//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::f64::consts::{FRAC_1_PI, FRAC_PI_4, TAU};
use std::time::Instant;

use cnt_bie::cauchy::{classify_point, eval_temperature_and_flux, PointClass};
use cnt_bie::config::RunConfig;
use cnt_bie::field::{flux_amplification, net_flux, sample_grid, BBox};
use cnt_bie::geometry::{DiscretizedBoundary, Domain, Layout, Orientation, PlacementRules, Segment, Shape};
use cnt_bie::gnk::{conjugation, kernel_continuous, KernelContext};
use cnt_bie::pipeline::cmd_run;
use cnt_bie::solver::{solve_rh, BoundarySolution, SolverOptions};
use cnt_bie::Complex64;
use common::dense::{dense_kernels, even_limit, max_diff, random_vector, smooth_ring};
use common::{annulus_f, annulus_f_prime, c, example_one, plain_ring, probe_grid};
use nalgebra::DVector;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn solve(b: &DiscretizedBoundary) -> BoundarySolution {
    solve_rh(b, &SolverOptions::default()).expect("solve")
}

/// Probe points of an `n × n` grid over `[-1, 1]²` inside the ring and at
/// least `margin` from every boundary.
fn probes(b: &DiscretizedBoundary, n: usize, margin: f64) -> Vec<Complex64> {
    probe_grid(n, n)
        .into_iter()
        .filter(|&z| {
            classify_point(b, z) == PointClass::RingInterior
                && b.shapes().iter().all(|s| s.distance(z) >= margin)
        })
        .collect()
}

fn annulus_oracle() -> Outcome {
    let rho = 0.5;
    let start = Instant::now();
    let b = Layout::annulus(rho).unwrap().discretize(256).unwrap();
    let s = solve(&b);
    let (mut eu, mut eq, mut count) = (0.0f64, 0.0f64, 0);
    for z in probe_grid(50, 50) {
        let r = z.norm();
        if r < rho + 0.05 || r > 0.95 {
            continue;
        }
        let v = eval_temperature_and_flux(&b, &s, z).unwrap();
        eu = eu.max((v.u - annulus_f(rho, z).re).abs());
        eq = eq.max((v.q + annulus_f_prime(rho, z).conj()).norm());
        count += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        eu < 1e-10 && eq < 1e-9 && secs < 10.0,
        format!("{count} probes, max |U err| {eu:.1e} (< 1e-10), max |q err| {eq:.1e} (< 1e-9), {secs:.2} s (< 10 s)"),
    )
}

fn square_ring_symmetry() -> Outcome {
    let b = plain_ring(0.5).discretize(512).unwrap();
    let s = solve(&b);
    let g = sample_grid(&b, &s, BBox::default(), 50, 50).unwrap();
    let (mut odd, mut even, mut count) = (0.0f64, 0.0f64, 0);
    for j in 0..50 {
        for i in 0..50 {
            let (a, mx, my) = (g.index(i, j), g.index(49 - i, j), g.index(i, 49 - j));
            if g.is_interior(a) && g.is_interior(mx) && g.is_interior(my) {
                odd = odd.max((g.u[a] + g.u[mx]).abs());
                even = even.max((g.u[a] - g.u[my]).abs());
                count += 1;
            }
        }
    }
    let viol = g.max_principle_violation();
    outcome(
        odd < 1e-6 && even < 1e-6 && viol < 1e-6,
        format!("{count} cells, odd in x {odd:.1e}, even in y {even:.1e}, max principle excess {viol:.1e} (all < 1e-6)"),
    )
}

fn example_one_run() -> Outcome {
    let dom = example_one(0.02);
    let start = Instant::now();
    let b = dom.discretize(512).unwrap();
    let s = solve(&b);
    let iters = s.report.iterations;
    let res = s.report.true_residual;
    let deltas = s.inclusion_temperatures().to_vec();
    let in_range = deltas.iter().all(|d| d.abs() <= 1.0);
    let flux = (0..dom.m())
        .map(|k| net_flux(&b, &s, k).unwrap().abs())
        .fold(0.0, f64::max);
    let g = sample_grid(&b, &s, BBox::default(), 400, 400).unwrap();
    let amp = flux_amplification(&g, 0.02).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let fine = solve(&dom.discretize(1024).unwrap());
    let drift = deltas
        .iter()
        .zip(fine.inclusion_temperatures())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let pass = s.report.converged
        && iters <= 100
        && res < 1e-12
        && in_range
        && flux < 1e-8
        && drift < 1e-8
        && (1.2..=3.0).contains(&amp)
        && secs < 60.0;
    outcome(
        pass,
        format!(
            "{iters} iterations, residual {res:.1e} (< 1e-12), delta {:?} in [-1, 1]: {in_range}, \
             max |net flux| {flux:.1e} (< 1e-8), |delta(512) - delta(1024)| {drift:.1e} (< 1e-8), \
             amplification {amp:.3} (in [1.2, 3]), {secs:.1} s (< 60 s)",
            deltas.iter().map(|d| format!("{d:.6}")).collect::<Vec<_>>()
        ),
    )
}

fn slit_limit() -> Outcome {
    let seg = Segment::new(c(0.65, 0.0), 0.3, FRAC_PI_4).unwrap();
    let points = [c(0.65, 0.3), c(0.85, -0.2), c(0.4, 0.6)];
    let aspects = [0.04, 0.02, 0.01, 0.005];
    let values: Vec<Vec<f64>> = aspects
        .iter()
        .map(|&aspect| {
            let rules = PlacementRules {
                inner_half_side: 0.3,
                aspect,
                ..PlacementRules::default()
            };
            let b = Domain::new(vec![seg], rules).unwrap().discretize(2048).unwrap();
            let s = solve(&b);
            let mut v = vec![s.delta[0]];
            v.extend(points.iter().map(|&z| eval_temperature_and_flux(&b, &s, z).unwrap().u));
            v
        })
        .collect();
    let mut pass = true;
    let mut rows = Vec::new();
    for q in 0..4 {
        let diffs: Vec<f64> = (1..aspects.len())
            .map(|i| (values[i][q] - values[i - 1][q]).abs())
            .collect();
        pass &= diffs.windows(2).all(|w| w[1] < w[0]);
        let name = if q == 0 { "delta".to_string() } else { format!("U(p{q})") };
        rows.push(format!(
            "{name} {:.8} diffs {}",
            values[3][q],
            diffs.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>().join(" > ")
        ));
    }
    outcome(pass, rows.join("; "))
}

fn large_m() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().display().to_string();
    let cfg = RunConfig::from_toml_str(
        include_str!("../../../configs/large_m.toml"),
        &[format!("outputs.dir={dir:?}")],
    )
    .unwrap();
    let start = Instant::now();
    let (solved, field) = match cmd_run(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("run failed: {e}")),
    };
    let secs = start.elapsed().as_secs_f64();
    let layout = &solved.file.layout;
    let b = layout.discretize(cfg.n).unwrap();
    let s = &solved.file.solution;
    let flux = (0..layout.m())
        .map(|k| net_flux(&b, s, k).unwrap().abs())
        .fold(0.0, f64::max);
    let st = field.report.delta_statistics.clone().unwrap();
    let rms = {
        let m = st.sorted.len() as f64;
        let ss: f64 = st
            .sorted
            .iter()
            .enumerate()
            .map(|(i, y)| (y - st.intercept - st.slope * i as f64).powi(2))
            .sum();
        (ss / m).sqrt() / (st.sorted[st.sorted.len() - 1] - st.sorted[0])
    };
    outcome(
        secs < 900.0 && st.relative_residual < 0.05 && flux < 1e-6,
        format!(
            "m = {}, {} iterations, run {secs:.1} s (< 900 s), sorted-delta fit max residual / range {:.4} (< 0.05; rms / range {rms:.4}), \
             max |net flux| {flux:.1e} (< 1e-6), max flatness {:.1e}",
            layout.m(),
            s.report.iterations,
            st.relative_residual,
            s.flatness.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn kernel_suite() -> Outcome {
    let n = 128;
    let mut conj_err = 0.0f64;
    for k in 0..n / 2 {
        let t = |j: usize| TAU * j as f64 / n as f64;
        let cos: Vec<f64> = (0..n).map(|j| (k as f64 * t(j)).cos()).collect();
        let out = conjugation(&cos).unwrap();
        for (j, v) in out.iter().enumerate() {
            conj_err = conj_err.max((v - (k as f64 * t(j)).sin()).abs());
        }
    }
    let mut op_err = 0.0f64;
    for n in [16, 32, 64] {
        let b = smooth_ring(n);
        let ctx = KernelContext::new(&b).unwrap();
        let (nd, md) = dense_kernels(&b, true);
        let mu = random_vector(b.len(), n as u64);
        let v = DVector::from_vec(mu.clone());
        op_err = op_err
            .max(max_diff(&ctx.apply_n(&mu).unwrap(), &(&nd * &v)))
            .max(max_diff(&ctx.apply_m(&mu).unwrap(), &(&md * &v)));
    }
    let unit = Shape::Circle {
        center: c(0.0, 0.0),
        radius: 1.0,
        orientation: Orientation::CounterClockwise,
    };
    let diag_err = [0.0, 1.1, 4.0]
        .iter()
        .map(|&t| {
            let lim = even_limit(|h| {
                0.5 * (kernel_continuous(&unit, 0.0, c(0.0, 0.0), t + h, t).im
                    + kernel_continuous(&unit, 0.0, c(0.0, 0.0), t - h, t).im)
            });
            (lim + 0.5 * FRAC_1_PI).abs()
        })
        .fold(0.0, f64::max);
    outcome(
        conj_err < 1e-12 && op_err < 1e-12 && diag_err < 1e-8,
        format!("conjugation {conj_err:.1e} (< 1e-12), N and M vs dense {op_err:.1e} (< 1e-12), unit-circle diagonal limit {diag_err:.1e} (< 1e-8)"),
    )
}

fn conservation() -> Outcome {
    let slit = Domain::new(
        vec![Segment::new(c(0.65, 0.0), 0.3, FRAC_PI_4).unwrap()],
        PlacementRules {
            inner_half_side: 0.3,
            aspect: 0.02,
            ..PlacementRules::default()
        },
    )
    .unwrap();
    let cases: Vec<(&str, DiscretizedBoundary)> = vec![
        ("annulus", Layout::annulus(0.5).unwrap().discretize(256).unwrap()),
        ("plain ring", plain_ring(0.5).discretize(512).unwrap()),
        ("four inclusions", example_one(0.02).discretize(512).unwrap()),
        ("single inclusion", slit.discretize(1024).unwrap()),
    ];
    let mut pass = true;
    let mut rows = Vec::new();
    for (name, b) in cases {
        let s = solve(&b);
        let outer = net_flux(&b, &s, b.num_components() - 1).unwrap().abs();
        let u = |z: Complex64| eval_temperature_and_flux(&b, &s, z).unwrap().u;
        let h = 1e-4;
        let grad_err = probes(&b, 21, 0.05)
            .into_iter()
            .map(|z| {
                let grad = c(
                    (u(z + h) - u(z - h)) / (2.0 * h),
                    (u(z + c(0.0, h)) - u(z - c(0.0, h))) / (2.0 * h),
                );
                (grad + eval_temperature_and_flux(&b, &s, z).unwrap().q).norm()
            })
            .fold(0.0, f64::max);
        pass &= outer < 1e-6 && grad_err < 1e-5;
        rows.push(format!("{name}: outer net flux {outer:.1e}, gradient {grad_err:.1e}"));
    }
    outcome(pass, format!("{} (< 1e-6, < 1e-5)", rows.join("; ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("annulus oracle", annulus_oracle),
        ("square-ring symmetry", square_ring_symmetry),
        ("four-inclusion run", example_one_run),
        ("slit limit", slit_limit),
        ("large m", large_m),
        ("kernel suite", kernel_suite),
        ("conservation and gradient", conservation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
