#![allow(dead_code)]

pub mod dense;

use cnt_bie::geometry::{Domain, PlacementRules, Segment};
use cnt_bie::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Four inclusions of different lengths in the ring with inner half-side 0.5.
pub fn example_one(aspect: f64) -> Domain {
    let cnts = [
        (c(0.6, 0.6), 0.3, 0.3),
        (c(-0.7, 0.1), 0.25, 1.2),
        (c(0.1, -0.75), 0.35, 2.5),
        (c(-0.5, 0.75), 0.2, 0.1),
    ]
    .iter()
    .map(|&(z, l, a)| Segment::new(z, l, a).unwrap())
    .collect();
    let rules = PlacementRules {
        aspect,
        ..PlacementRules::default()
    };
    Domain::new(cnts, rules).unwrap()
}

pub fn plain_ring(inner_half_side: f64) -> Domain {
    let rules = PlacementRules {
        inner_half_side,
        ..PlacementRules::default()
    };
    Domain::new(vec![], rules).unwrap()
}

/// Temperature in the annulus `ρ < |z| < 1` with `U = x` outside and an
/// insulated inner circle.
pub fn annulus_f(rho: f64, z: Complex64) -> Complex64 {
    (z + rho * rho / z) / (1.0 + rho * rho)
}

pub fn annulus_f_prime(rho: f64, z: Complex64) -> Complex64 {
    (1.0 - rho * rho / (z * z)) / (1.0 + rho * rho)
}

/// Nodes of an `nx × ny` grid over `[-1, 1]²`, ends included.
pub fn probe_grid(nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(c(
                -1.0 + 2.0 * i as f64 / (nx - 1) as f64,
                -1.0 + 2.0 * j as f64 / (ny - 1) as f64,
            ));
        }
    }
    out
}
