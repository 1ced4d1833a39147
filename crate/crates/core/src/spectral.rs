//! Differentiation of periodic samples through their trigonometric interpolant.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Cached forward/inverse transforms for one grid size.
///
/// Differentiating many components of the same size reuses the plans.
pub struct SpectralDiff {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralDiff {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "spectral differentiation needs an even, nonzero sample count (got {n})"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Derivative with respect to `t` of the degree `< n/2` interpolant of
    /// samples taken at `t_j = 2πj/n`. The Nyquist mode is dropped.
    pub fn derivative(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        if samples.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: samples.len(),
            });
        }
        let n = self.n;
        let mut buf = samples.to_vec();
        self.forward.process(&mut buf);
        let half = n / 2;
        let scale = 1.0 / n as f64;
        for (k, c) in buf.iter_mut().enumerate() {
            let freq = if k < half {
                k as f64
            } else if k == half {
                0.0
            } else {
                k as f64 - n as f64
            };
            *c *= Complex64::new(0.0, freq * scale);
        }
        self.inverse.process(&mut buf);
        Ok(buf)
    }

    pub fn derivative_real(&self, samples: &[f64]) -> Result<Vec<f64>> {
        let z: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Ok(self.derivative(&z)?.into_iter().map(|c| c.re).collect())
    }
}

/// One-shot convenience wrapper around [`SpectralDiff`].
pub fn spectral_derivative(samples: &[Complex64]) -> Result<Vec<Complex64>> {
    SpectralDiff::new(samples.len())?.derivative(samples)
}
