use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SpectroTensor;

/// Magnitude compression `|x| → a |x|^c` with the phase kept.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    a: f64,
    c: f64,
}

impl ScalingConfig {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("scaling gain a must be positive, got {a}")));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "compression exponent c must lie in (0, 1], got {c}"
            )));
        }
        Ok(Self { a, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Scaled magnitude of a bin with magnitude `m`.
    pub fn compress(&self, m: f64) -> f64 {
        self.a * m.powf(self.c)
    }

    pub fn expand(&self, m: f64) -> f64 {
        (m / self.a).powf(1.0 / self.c)
    }
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { a: 0.15, c: 0.5 }
    }
}

fn remap(x: &SpectroTensor, f: impl Fn(f64) -> f64) -> SpectroTensor {
    let mut out = x.clone();
    let (re, im) = (x.re(), x.im());
    let gains = ndarray::Zip::from(re).and(im).map_collect(|&r, &i| {
        let m = r.hypot(i);
        if m == 0.0 { 0.0 } else { f(m) / m }
    });
    *out.re_mut() *= &gains;
    *out.im_mut() *= &gains;
    out
}

/// Applies the compression to every complex bin. Zero bins stay zero.
pub fn scale(x: &SpectroTensor, cfg: &ScalingConfig) -> SpectroTensor {
    remap(x, |m| cfg.compress(m))
}

/// Inverse of [`scale`].
pub fn unscale(x: &SpectroTensor, cfg: &ScalingConfig) -> SpectroTensor {
    remap(x, |m| cfg.expand(m))
}
