use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Sinusoidal embedding of a scalar: `dim/2` (sin, cos) pairs at angular
/// frequencies ω_k = base^(−2k/dim).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidConfig {
    dim: usize,
    base: f64,
}

impl SinusoidConfig {
    pub fn new(dim: usize, base: f64) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::invalid(format!("embedding dim {dim} must be even and positive")));
        }
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::invalid(format!("embedding base {base} must exceed 1")));
        }
        Ok(Self { dim, base })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.dim / 2)
            .map(|k| self.base.powf(-2.0 * k as f64 / self.dim as f64))
            .collect()
    }

    fn embed(&self, x: f64) -> Array1<f64> {
        self.frequencies()
            .iter()
            .flat_map(|w| {
                let (s, c) = (x * w).sin_cos();
                [s, c]
            })
            .collect()
    }
}

/// Pitch embedding; `pitch` may be fractional.
pub fn fme_embed(pitch: f64, cfg: &SinusoidConfig) -> Array1<f64> {
    cfg.embed(pitch)
}

/// Positional embedding of a time in seconds.
pub fn mpe_embed(time_seconds: f64, cfg: &SinusoidConfig) -> Array1<f64> {
    cfg.embed(time_seconds)
}

/// Block-diagonal R_s with `embed(x + s) = R_s · embed(x)`.
pub fn rotation(shift: f64, cfg: &SinusoidConfig) -> Array2<f64> {
    let mut r = Array2::zeros((cfg.dim, cfg.dim));
    for (k, w) in cfg.frequencies().iter().enumerate() {
        let (s, c) = (shift * w).sin_cos();
        let i = 2 * k;
        r[[i, i]] = c;
        r[[i, i + 1]] = s;
        r[[i + 1, i]] = -s;
        r[[i + 1, i + 1]] = c;
    }
    r
}
