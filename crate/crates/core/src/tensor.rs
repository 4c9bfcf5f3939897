//! Complex spectrogram stored as two real channels.

use ndarray::{Array2, Zip};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex F×T spectrogram held as real and imaginary channels.
///
/// All diffusion arithmetic is entrywise over both channels, so the tensor
/// behaves like a real vector of length `2·F·T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroTensor {
    re: Array2<f64>,
    im: Array2<f64>,
}

impl SpectroTensor {
    pub fn new(re: Array2<f64>, im: Array2<f64>) -> Result<Self> {
        if re.dim() != im.dim() {
            return Err(Error::ShapeMismatch {
                left: re.dim(),
                right: im.dim(),
            });
        }
        let t = Self { re, im };
        t.check_finite()?;
        Ok(t)
    }

    pub fn zeros(freq: usize, time: usize) -> Self {
        Self {
            re: Array2::zeros((freq, time)),
            im: Array2::zeros((freq, time)),
        }
    }

    pub fn from_elem(freq: usize, time: usize, value: f64) -> Self {
        Self {
            re: Array2::from_elem((freq, time), value),
            im: Array2::from_elem((freq, time), value),
        }
    }

    /// Builds a tensor from a flat buffer: real channel row-major, then imaginary.
    pub fn from_flat(freq: usize, time: usize, data: &[f64]) -> Result<Self> {
        let n = freq * time;
        if data.len() != 2 * n {
            return Err(Error::LengthMismatch {
                left: data.len(),
                right: 2 * n,
            });
        }
        let re = Array2::from_shape_vec((freq, time), data[..n].to_vec())
            .expect("length checked above");
        let im = Array2::from_shape_vec((freq, time), data[n..].to_vec())
            .expect("length checked above");
        Self::new(re, im)
    }

    /// Standard normal entries, independently in both channels.
    pub fn standard_normal<R: Rng + ?Sized>(freq: usize, time: usize, rng: &mut R) -> Self {
        let mut draw = |_: (usize, usize)| rng.sample::<f64, _>(StandardNormal);
        let re = Array2::from_shape_fn((freq, time), &mut draw);
        let im = Array2::from_shape_fn((freq, time), &mut draw);
        Self { re, im }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.re.dim()
    }

    /// Number of real entries across both channels.
    pub fn len(&self) -> usize {
        2 * self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &Array2<f64> {
        &self.re
    }

    pub fn im(&self) -> &Array2<f64> {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut Array2<f64> {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut Array2<f64> {
        &mut self.im
    }

    /// Real channel row-major followed by imaginary channel row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.re.iter().chain(self.im.iter()).copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.re.iter().chain(self.im.iter())
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            })
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("spectrogram tensor"))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            re: self.re.mapv(&f),
            im: self.im.mapv(&f),
        }
    }

    /// `a·self + b·other`, entrywise.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        let comb = |x: &Array2<f64>, y: &Array2<f64>| {
            Zip::from(x).and(y).map_collect(|&x, &y| a * x + b * y)
        };
        Ok(Self {
            re: comb(&self.re, &other.re),
            im: comb(&self.im, &other.im),
        })
    }

    /// `self += a·other`, entrywise.
    pub fn scaled_add(&mut self, a: f64, other: &Self) -> Result<()> {
        self.check_same_shape(other)?;
        self.re.scaled_add(a, &other.re);
        self.im.scaled_add(a, &other.im);
        Ok(())
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.iter().zip(other.iter()).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn shape_mismatch_rejected() {
        let r = SpectroTensor::new(Array2::zeros((2, 3)), Array2::zeros((3, 2)));
        assert!(matches!(r, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        let r = SpectroTensor::new(array![[1.0, f64::NAN]], array![[0.0, 0.0]]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn flat_layout() {
        let t = SpectroTensor::from_flat(1, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(t.re(), &array![[1.0, 2.0]]);
        assert_eq!(t.im(), &array![[3.0, 4.0]]);
        assert_eq!(t.to_flat(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.len(), 4);
        assert!(SpectroTensor::from_flat(1, 2, &[1.0]).is_err());
    }

    #[test]
    fn arithmetic() {
        let a = SpectroTensor::from_flat(1, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = SpectroTensor::from_elem(1, 2, 1.0);
        let c = a.lin_comb(2.0, &b, -1.0).unwrap();
        assert_eq!(c.to_flat(), vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(a.dot(&b).unwrap(), 10.0);
        assert_eq!(a.norm_sq(), 30.0);
        assert_eq!(a.max_abs_diff(&b).unwrap(), 3.0);
        assert!(a.lin_comb(1.0, &SpectroTensor::zeros(2, 1), 1.0).is_err());
    }
}
