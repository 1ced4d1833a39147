//! Dense reference operators assembled entry by entry.

use std::f64::consts::{FRAC_1_PI, PI, TAU};

use cnt_bie::geometry::{DiscretizedBoundary, Orientation, Segment, Shape};
use cnt_bie::gnk::theta_for;
use cnt_bie::Complex64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::c;

/// Conjugation from its Fourier definition: `cos kt → sin kt` for
/// `0 < k < n/2`, constants and the Nyquist mode to zero.
pub fn fourier_conjugation(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let d = TAU * (i as f64 - j as f64) / n as f64;
        (1..n / 2).map(|k| (k as f64 * d).sin()).sum::<f64>() * 2.0 / n as f64
    })
}

pub fn smooth_ring(n: usize) -> DiscretizedBoundary {
    let seg = Segment::new(c(0.0, 0.62), 0.3, 0.4).unwrap();
    DiscretizedBoundary::new(
        vec![
            Shape::Ellipse {
                segment: seg,
                aspect: 0.2,
            },
            Shape::Circle {
                center: c(0.0, 0.0),
                radius: 0.4,
                orientation: Orientation::Clockwise,
            },
            Shape::Circle {
                center: c(0.0, 0.0),
                radius: 1.0,
                orientation: Orientation::CounterClockwise,
            },
        ],
        c(-0.7, 0.0),
        n,
    )
    .unwrap()
}

/// Dense `(N, M)` assembled entry by entry from the boundary arrays.
pub fn dense_kernels(b: &DiscretizedBoundary, analytic_second: bool) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = b.n();
    let len = b.len();
    let w = TAU / n as f64;
    let alpha = b.alpha();
    let (eta, d1) = (b.eta(), b.eta_prime());
    let a: Vec<Complex64> = (0..len)
        .map(|i| Complex64::from_polar(1.0, -theta_for(b.role(b.component_of(i)))) * (eta[i] - alpha))
        .collect();
    let k_block = fourier_conjugation(n);
    let mut nm = DMatrix::zeros(len, len);
    let mut mm = DMatrix::zeros(len, len);
    for s in 0..len {
        let ks = b.component_of(s);
        let speed_max = b.range(ks).map(|i| d1[i].norm()).fold(0.0, f64::max);
        for t in 0..len {
            let kt = b.component_of(t);
            if s == t {
                if d1[s].norm() <= 1e-14 * speed_max {
                    continue;
                }
                let d2 = if analytic_second {
                    // every smooth test curve satisfies η'' = −(η − centre)
                    -(eta[s] - b.shapes()[ks].interior_point())
                } else {
                    b.eta_second()[s]
                };
                let diag = FRAC_1_PI * (d2 / (2.0 * d1[s]) - d1[s] / (eta[s] - alpha));
                nm[(s, t)] = w * diag.im;
                mm[(s, t)] = w * diag.re;
                continue;
            }
            let kern = FRAC_1_PI * a[s] / a[t] * d1[t] / (eta[t] - eta[s]);
            nm[(s, t)] = w * kern.im;
            mm[(s, t)] = w * kern.re;
            if ks == kt {
                let (ls, lt) = (s % n, t % n);
                let cot = 1.0 / (PI * (ls as f64 - lt as f64) / n as f64).tan();
                mm[(s, t)] += w * cot / (2.0 * PI);
            }
        }
    }
    for k in 0..b.num_components() {
        let r = b.range(k);
        let mut block = mm.view_mut((r.start, r.start), (n, n));
        block -= &k_block;
    }
    (nm, mm)
}

pub fn random_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn max_diff(a: &[f64], b: &DVector<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Limit of `g(h)` as `h → 0` for an even function of `h`, by Richardson
/// extrapolation in `h²`.
pub fn even_limit(g: impl Fn(f64) -> f64) -> f64 {
    let hs = [0.04, 0.02, 0.01, 0.005];
    let mut table: Vec<f64> = hs.iter().map(|&h| g(h)).collect();
    for level in 1..hs.len() {
        let f = 4f64.powi(level as i32);
        for i in (level..hs.len()).rev() {
            table[i] = (f * table[i] - table[i - 1]) / (f - 1.0);
        }
    }
    table[hs.len() - 1]
}
