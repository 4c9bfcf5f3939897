use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::Waveform;
use crate::error::{Error, Result};
use crate::tensor::SpectroTensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    /// Square root of the periodic Hann window, used for analysis and synthesis.
    #[default]
    SqrtHann,
    /// Periodic Hann window.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        let hann = |n: usize| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos();
        (0..len)
            .map(|n| match self {
                WindowKind::SqrtHann => hann(n).sqrt(),
                WindowKind::Hann => hann(n),
                WindowKind::Rectangular => 1.0,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub frame: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Pad `frame / 2` zeros on both sides so frames are centred on samples.
    pub center: bool,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            frame: 510,
            hop: 128,
            window: WindowKind::SqrtHann,
            center: true,
        }
    }
}

/// Floor on the overlap-add window envelope; below it a sample cannot be recovered.
const ENVELOPE_FLOOR: f64 = 1e-10;

/// Short-time Fourier transform with weighted overlap-add inversion.
///
/// The same window is used for analysis and synthesis and the inverse divides
/// by `Σ_m w²(n − mH)`, so any configuration whose envelope stays positive
/// reconstructs exactly.
#[derive(Clone)]
pub struct Stft {
    cfg: StftConfig,
    window: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Stft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft").field("cfg", &self.cfg).finish()
    }
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        if !(cfg.frame > cfg.hop && cfg.hop > 0) {
            return Err(Error::StftConfig(format!(
                "need frame > hop > 0, got frame={}, hop={}",
                cfg.frame, cfg.hop
            )));
        }
        let window = cfg.window.coefficients(cfg.frame);
        // Steady-state envelope over one hop period.
        let min_env = (0..cfg.hop)
            .map(|n| {
                (n..cfg.frame)
                    .step_by(cfg.hop)
                    .map(|i| window[i] * window[i])
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        if min_env < ENVELOPE_FLOOR {
            return Err(Error::StftConfig(format!(
                "window {:?} with frame={} and hop={} leaves samples with zero overlap-add weight",
                cfg.window, cfg.frame, cfg.hop
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(cfg.frame),
            inverse: planner.plan_fft_inverse(cfg.frame),
            window,
            cfg,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Number of one-sided frequency bins, `frame / 2 + 1`.
    pub fn bins(&self) -> usize {
        self.cfg.frame / 2 + 1
    }

    fn pad(&self) -> usize {
        if self.cfg.center { self.cfg.frame / 2 } else { 0 }
    }

    /// Frame count for a signal of `len` samples.
    pub fn frames(&self, len: usize) -> usize {
        let padded = len + 2 * self.pad();
        if padded <= self.cfg.frame {
            1
        } else {
            1 + (padded - self.cfg.frame).div_ceil(self.cfg.hop)
        }
    }

    /// Spectrogram of `w`, shape `bins × frames`.
    pub fn forward(&self, w: &Waveform) -> Result<SpectroTensor> {
        self.forward_samples(w.samples())
    }

    pub fn forward_samples(&self, samples: &[f64]) -> Result<SpectroTensor> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("waveform has no samples"));
        }
        let (n, hop, pad) = (self.cfg.frame, self.cfg.hop, self.pad());
        let frames = self.frames(samples.len());
        let bins = self.bins();
        let mut re = Array2::zeros((bins, frames));
        let mut im = Array2::zeros((bins, frames));
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..frames {
            for (i, b) in buf.iter_mut().enumerate() {
                let v = (m * hop + i)
                    .checked_sub(pad)
                    .and_then(|j| samples.get(j))
                    .copied()
                    .unwrap_or(0.0);
                *b = Complex64::new(v * self.window[i], 0.0);
            }
            self.forward.process(&mut buf);
            for k in 0..bins {
                re[[k, m]] = buf[k].re;
                im[[k, m]] = buf[k].im;
            }
        }
        SpectroTensor::new(re, im)
    }

    /// Inverse transform producing exactly `len` samples.
    pub fn inverse(&self, x: &SpectroTensor, len: usize, sample_rate: u32) -> Result<Waveform> {
        Waveform::new(self.inverse_samples(x, len)?, sample_rate)
    }

    pub fn inverse_samples(&self, x: &SpectroTensor, len: usize) -> Result<Vec<f64>> {
        let (n, hop, pad) = (self.cfg.frame, self.cfg.hop, self.pad());
        let (bins, frames) = x.shape();
        if bins != self.bins() {
            return Err(Error::StftConfig(format!(
                "spectrogram has {bins} bins, frame {n} needs {}",
                self.bins()
            )));
        }
        if frames == 0 {
            return Err(Error::EmptyInput("spectrogram has no frames"));
        }
        let total = (frames - 1) * hop + n;
        if len + pad > total {
            return Err(Error::StftConfig(format!(
                "{frames} frames cannot cover {len} samples"
            )));
        }
        let mut acc = vec![0.0; total];
        let mut env = vec![0.0; total];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let scale = 1.0 / n as f64;
        for m in 0..frames {
            for (k, b) in buf.iter_mut().enumerate() {
                // Hermitian extension of the one-sided spectrum.
                *b = if k < bins {
                    Complex64::new(x.re()[[k, m]], x.im()[[k, m]])
                } else {
                    Complex64::new(x.re()[[n - k, m]], -x.im()[[n - k, m]])
                };
            }
            buf[0].im = 0.0;
            if n.is_multiple_of(2) {
                buf[n / 2].im = 0.0;
            }
            self.inverse.process(&mut buf);
            let start = m * hop;
            for i in 0..n {
                acc[start + i] += buf[i].re * scale * self.window[i];
                env[start + i] += self.window[i] * self.window[i];
            }
        }
        // Without centring, the first and last samples can sit under a window zero.
        Ok((pad..pad + len)
            .map(|j| if env[j] < ENVELOPE_FLOOR { 0.0 } else { acc[j] / env[j] })
            .collect())
    }

    /// `Σ_m w²(n − mH)` for every sample of a `len`-sample signal.
    pub fn envelope(&self, len: usize) -> Vec<f64> {
        let (n, hop, pad) = (self.cfg.frame, self.cfg.hop, self.pad());
        let frames = self.frames(len);
        let mut env = vec![0.0; (frames - 1) * hop + n];
        for m in 0..frames {
            for i in 0..n {
                env[m * hop + i] += self.window[i] * self.window[i];
            }
        }
        env[pad..pad + len].to_vec()
    }

    /// Two-sided spectral energy `(1/N) Σ_m Σ_k |X_m(k)|²` from the one-sided bins.
    ///
    /// By Parseval this equals `Σ_n env(n) x(n)²` with `env` from [`Stft::envelope`].
    pub fn spectral_energy(&self, x: &SpectroTensor) -> f64 {
        let n = self.cfg.frame;
        let (bins, _) = x.shape();
        let mut total = 0.0;
        for k in 0..bins {
            let w = if k == 0 || (n.is_multiple_of(2) && k == n / 2) { 1.0 } else { 2.0 };
            let row_re = x.re().row(k);
            let row_im = x.im().row(k);
            let e: f64 = row_re.iter().zip(row_im.iter()).map(|(r, i)| r * r + i * i).sum();
            total += w * e;
        }
        total / n as f64
    }
}
