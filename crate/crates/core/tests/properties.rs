mod common;

use std::f64::consts::TAU;
use std::sync::Arc;

use cnt_bie::cauchy::{cauchy_eval, classify_point, component_windings, AnalyticBoundaryData, PointClass};
use cnt_bie::fmm::FmmBackend;
use cnt_bie::geometry::{generate_cnts, Domain, LengthLaw, PlacementRules, Role};
use cnt_bie::gnk::{conjugation, DenseBackend, KernelContext};
use cnt_bie::solver::{solve_rh, SolverOptions};
use cnt_bie::spectral::spectral_derivative;
use cnt_bie::Complex64;
use common::c;
use proptest::prelude::*;

fn random_domain(m: usize, hs: f64, aspect: f64, seed: u64) -> Domain {
    random_domain_with(m, hs, aspect, PlacementRules::default().clearance, seed)
}

fn random_domain_with(m: usize, hs: f64, aspect: f64, clearance: f64, seed: u64) -> Domain {
    let rules = PlacementRules {
        inner_half_side: hs,
        aspect,
        clearance,
        ..PlacementRules::default()
    };
    let law = LengthLaw::Uniform { min: 0.1, max: 0.3 };
    Domain::new(generate_cnts(m, &law, &rules, seed).unwrap(), rules).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generated_layouts_obey_the_rules(seed in any::<u64>(), m in 0usize..25, hs in 0.1..0.6f64) {
        let rules = PlacementRules { inner_half_side: hs, ..PlacementRules::default() };
        let law = LengthLaw::Uniform { min: 0.05, max: 0.25 };
        let cnts = generate_cnts(m, &law, &rules, seed).unwrap();
        prop_assert_eq!(cnts.len(), m);
        prop_assert!(rules.check(&cnts).is_ok());
        prop_assert_eq!(cnts, generate_cnts(m, &law, &rules, seed).unwrap());
    }

    #[test]
    fn conjugation_is_exact_on_trig_polynomials(
        coeffs in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..32),
    ) {
        let n = 64;
        let t = |j: usize| TAU * j as f64 / n as f64;
        let f: Vec<f64> = (0..n)
            .map(|j| coeffs.iter().enumerate().map(|(k, (a, b))| {
                let kt = k as f64 * t(j);
                a * kt.cos() + b * kt.sin()
            }).sum())
            .collect();
        let out = conjugation(&f).unwrap();
        for (j, v) in out.iter().enumerate() {
            let want: f64 = coeffs.iter().enumerate().skip(1).map(|(k, (a, b))| {
                let kt = k as f64 * t(j);
                a * kt.sin() - b * kt.cos()
            }).sum();
            prop_assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cauchy_sums_reproduce_constants(x in -0.98..0.98f64, y in -0.98..0.98f64, re in -5.0..5.0f64, im in -5.0..5.0f64) {
        let b = common::example_one(0.05).discretize(128).unwrap();
        let z = c(x, y);
        prop_assume!(classify_point(&b, z) == PointClass::RingInterior);
        let k = Complex64::new(re, im);
        let vals = vec![k; b.len()];
        let data = AnalyticBoundaryData::new(&b, &vals).unwrap();
        prop_assert!((cauchy_eval(&data, z).unwrap() - k).norm() <= 1e-14 * k.norm());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    // inclusions right at the outer wall need finer grids than this
    #[test]
    fn inclusion_temperatures_obey_the_maximum_principle(seed in any::<u64>(), m in 1usize..5) {
        let dom = random_domain_with(m, 0.4, 0.05, 0.1, seed);
        let s = solve_rh(&dom.discretize(512).unwrap(), &SolverOptions::default()).unwrap();
        prop_assert!(s.report.converged);
        for d in s.inclusion_temperatures() {
            prop_assert!(d.abs() <= 1.0);
        }
    }

    #[test]
    fn kernels_are_linear(seed in any::<u64>(), a in -3.0..3.0f64) {
        let b = random_domain(3, 0.5, 0.05, seed).discretize(64).unwrap();
        let ctx = KernelContext::new(&b).unwrap();
        let x = common::dense::random_vector(b.len(), seed);
        let y = common::dense::random_vector(b.len(), seed ^ 1);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(x, y)| a * x + y).collect();
        let (nx, mx) = ctx.apply_nm(&x).unwrap();
        let (ny, my) = ctx.apply_nm(&y).unwrap();
        let (nc, mc) = ctx.apply_nm(&combo).unwrap();
        let scale = 1.0 + a.abs();
        for i in 0..b.len() {
            let tol = 1e-12 * scale * (1.0 + nx[i].abs() + mx[i].abs() + ny[i].abs() + my[i].abs());
            prop_assert!((nc[i] - a * nx[i] - ny[i]).abs() < tol);
            prop_assert!((mc[i] - a * mx[i] - my[i]).abs() < tol);
        }
    }
}

#[test]
fn spectral_derivative_of_the_boundary_matches_its_tangent() {
    let b = random_domain(6, 0.5, 0.05, 4).discretize(256).unwrap();
    for k in 0..b.num_components() {
        let r = b.range(k);
        let d = spectral_derivative(&b.eta()[r.clone()]).unwrap();
        let scale = b.eta_prime()[r.clone()].iter().map(|z| z.norm()).fold(0.0, f64::max);
        let err = d
            .iter()
            .zip(&b.eta_prime()[r])
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10 * scale.max(1.0), "component {k}: {err}");
    }
}

#[test]
fn component_orientations() {
    let dom = random_domain(5, 0.5, 0.05, 9);
    let b = dom.discretize(256).unwrap();
    for k in 0..b.num_components() {
        let (z, want) = match b.role(k) {
            Role::Inclusion => (dom.cnts[k].center, -1.0),
            Role::Hole => (c(0.0, 0.0), -1.0),
            Role::Outer => (c(0.0, 0.0), 1.0),
        };
        let w = component_windings(&b, z)[k];
        assert!((w - want).abs() < 1e-3, "component {k}: {w}");
    }
}

#[test]
fn fast_and_dense_backends_agree_inside_the_solver() {
    let b = random_domain(40, 0.3, 0.05, 2).discretize(128).unwrap();
    let dense = KernelContext::with_backend(&b, Arc::new(DenseBackend)).unwrap();
    let fast = KernelContext::with_backend(
        &b,
        Arc::new(FmmBackend {
            dense_below: 0,
            ..FmmBackend::default()
        }),
    )
    .unwrap();
    let mu = common::dense::random_vector(b.len(), 8);
    let (n1, m1) = dense.apply_nm(&mu).unwrap();
    let (n2, m2) = fast.apply_nm(&mu).unwrap();
    let scale = n1.iter().chain(&m1).map(|v| v.abs()).fold(0.0, f64::max);
    for i in 0..b.len() {
        assert!((n1[i] - n2[i]).abs() < 1e-12 * scale);
        assert!((m1[i] - m2[i]).abs() < 1e-12 * scale);
    }
}

#[test]
fn repeated_solves_are_identical() {
    let b = random_domain(4, 0.5, 0.05, 12).discretize(256).unwrap();
    let a = solve_rh(&b, &SolverOptions::default()).unwrap();
    assert_eq!(a, solve_rh(&b, &SolverOptions::default()).unwrap());
}
