//! Audio ingestion, STFT/iSTFT and spectral amplitude scaling.
//!
//! The diffusion code only ever sees scaled spectrograms: audio goes through
//! [`Stft::forward`] then [`scale`], and comes back through [`unscale`] then
//! [`Stft::inverse`].

mod scaling;
mod stft;
pub mod wav;

pub use scaling::{scale, unscale, ScalingConfig};
pub use stft::{Stft, StftConfig, WindowKind};
pub use wav::{load_wav, parse_wav, save_wav, write_wav, ChannelPolicy, SampleFormat};

use crate::error::{Error, Result};

/// Mono audio.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_validation() {
        assert!(Waveform::new(vec![0.0], 0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 16000).is_err());
        let w = Waveform::new(vec![0.0; 8000], 16000).unwrap();
        assert_eq!(w.duration_secs(), 0.5);
    }
}
