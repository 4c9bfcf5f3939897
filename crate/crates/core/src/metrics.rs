//! Scale-invariant SDR-family metrics and the initial-error report.
//!
//! The estimate ŝ is split by orthogonal projection into a target part (on
//! span{s}), an interference part (on span{s, n} minus the target) and an
//! artifact part (the rest):
//!
//! ```text
//! SI-SDR = 10 log10 ‖target‖² / ‖ŝ − target‖²
//! SI-SIR = 10 log10 ‖target‖² / ‖interf‖²
//! SI-SAR = 10 log10 ‖target + interf‖² / ‖artif‖²
//! ```
//!
//! A ratio whose denominator vanishes is `f64::INFINITY`; reports cap it at
//! [`INFINITE_DB_CAP`] and set an exactness flag.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::initial_error;
use crate::schedule::{Schedule, ScheduleKind};
use crate::tensor::SpectroTensor;

/// Reported value standing in for +∞ dB.
pub const INFINITE_DB_CAP: f64 = 300.0;

/// Residual energies at or below this fraction of the estimate energy count as zero.
pub const ZERO_ENERGY_RTOL: f64 = 1e-24;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn energy(a: &[f64]) -> f64 {
    dot(a, a)
}

fn ratio_db(num: f64, den: f64, reference: f64) -> f64 {
    if den <= ZERO_ENERGY_RTOL * reference {
        f64::INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput("metric input has no samples"));
    }
    Ok(())
}

/// Projection of `x` onto `s`, as the scalar coefficient.
fn project(x: &[f64], s: &[f64], s_energy: f64) -> f64 {
    dot(x, s) / s_energy
}

pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    check_lengths(estimate, reference)?;
    let ref_energy = energy(reference);
    if ref_energy == 0.0 {
        return Err(Error::DegenerateMetric("reference signal is all zeros"));
    }
    let alpha = project(estimate, reference, ref_energy);
    let (target, residual) = reference
        .iter()
        .zip(estimate)
        .map(|(&s, &e)| {
            let t = alpha * s;
            (t * t, (t - e) * (t - e))
        })
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(ratio_db(target, residual, energy(estimate).max(target)))
}

/// Orthogonal split of an estimate against a reference and an interference signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub target: Vec<f64>,
    pub interference: Vec<f64>,
    pub artifact: Vec<f64>,
}

impl Decomposition {
    pub fn new(estimate: &[f64], reference: &[f64], interference: &[f64]) -> Result<Self> {
        check_lengths(estimate, reference)?;
        check_lengths(estimate, interference)?;
        let ref_energy = energy(reference);
        if ref_energy == 0.0 {
            return Err(Error::DegenerateMetric("reference signal is all zeros"));
        }
        // Gram–Schmidt: component of n orthogonal to s.
        let c = project(interference, reference, ref_energy);
        let n_perp: Vec<f64> = interference
            .iter()
            .zip(reference)
            .map(|(&n, &s)| n - c * s)
            .collect();
        let perp_energy = energy(&n_perp);
        if perp_energy <= 1e-20 * energy(interference).max(ref_energy) {
            return Err(Error::DegenerateMetric(
                "reference and interference are linearly dependent",
            ));
        }
        let a = project(estimate, reference, ref_energy);
        let b = project(estimate, &n_perp, perp_energy);
        let target: Vec<f64> = reference.iter().map(|&s| a * s).collect();
        let interf: Vec<f64> = n_perp.iter().map(|&n| b * n).collect();
        let artifact = estimate
            .iter()
            .zip(&target)
            .zip(&interf)
            .map(|((&e, &t), &i)| e - t - i)
            .collect();
        Ok(Self {
            target,
            interference: interf,
            artifact,
        })
    }

    fn reference_energy(&self) -> f64 {
        energy(&self.target) + energy(&self.interference) + energy(&self.artifact)
    }

    pub fn si_sir(&self) -> f64 {
        ratio_db(energy(&self.target), energy(&self.interference), self.reference_energy())
    }

    pub fn si_sar(&self) -> f64 {
        let signal: Vec<f64> = self
            .target
            .iter()
            .zip(&self.interference)
            .map(|(t, i)| t + i)
            .collect();
        ratio_db(energy(&signal), energy(&self.artifact), self.reference_energy())
    }
}

pub fn si_sir(estimate: &[f64], reference: &[f64], interference: &[f64]) -> Result<f64> {
    Ok(Decomposition::new(estimate, reference, interference)?.si_sir())
}

pub fn si_sar(estimate: &[f64], reference: &[f64], interference: &[f64]) -> Result<f64> {
    Ok(Decomposition::new(estimate, reference, interference)?.si_sar())
}

/// A dB value as written to reports: finite, with a flag when it was +∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportedDb {
    pub value: f64,
    pub infinite: bool,
}

impl From<f64> for ReportedDb {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            Self {
                value: INFINITE_DB_CAP,
                infinite: true,
            }
        } else {
            Self {
                value: v.min(INFINITE_DB_CAP),
                infinite: false,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceMetrics {
    pub utterance_id: String,
    pub si_sdr: ReportedDb,
    pub si_sir: ReportedDb,
    pub si_sar: ReportedDb,
}

impl UtteranceMetrics {
    pub fn compute(
        utterance_id: impl Into<String>,
        estimate: &[f64],
        reference: &[f64],
        interference: &[f64],
    ) -> Result<Self> {
        let d = Decomposition::new(estimate, reference, interference)?;
        Ok(Self {
            utterance_id: utterance_id.into(),
            si_sdr: si_sdr(estimate, reference)?.into(),
            si_sir: d.si_sir().into(),
            si_sar: d.si_sar().into(),
        })
    }
}

/// Per-utterance metrics plus their corpus mean (capped values are averaged).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub utterances: Vec<UtteranceMetrics>,
}

impl MetricReport {
    pub fn push(&mut self, m: UtteranceMetrics) {
        self.utterances.push(m);
    }

    pub fn mean(&self) -> Option<(f64, f64, f64)> {
        if self.utterances.is_empty() {
            return None;
        }
        let n = self.utterances.len() as f64;
        let sum = self.utterances.iter().fold((0.0, 0.0, 0.0), |acc, u| {
            (acc.0 + u.si_sdr.value, acc.1 + u.si_sir.value, acc.2 + u.si_sar.value)
        });
        Some((sum.0 / n, sum.1 / n, sum.2 / n))
    }

    /// `utterance_id,si_sdr,si_sir,si_sar` rows followed by a `mean` row.
    ///
    /// Capped infinite values carry an `inf_*` flag column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("utterance_id,si_sdr,si_sir,si_sar,inf_sdr,inf_sir,inf_sar\n");
        for u in &self.utterances {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{},{},{}\n",
                u.utterance_id,
                u.si_sdr.value,
                u.si_sir.value,
                u.si_sar.value,
                u.si_sdr.infinite as u8,
                u.si_sir.infinite as u8,
                u.si_sar.infinite as u8
            ));
        }
        if let Some((a, b, c)) = self.mean() {
            out.push_str(&format!("mean,{a:.6},{b:.6},{c:.6},0,0,0\n"));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IeRow {
    pub schedule: String,
    /// ‖IE‖₂
    pub ie_norm: f64,
    pub alpha_1: f64,
    pub lambda_1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IeReport {
    pub rows: Vec<IeRow>,
    /// ‖IE_VP‖ / ‖IE_VE‖ for the first VP and VE schedules, when both are present.
    pub vp_ve_ratio: Option<f64>,
}

/// Initial error of each schedule for one clean/noisy pair.
pub fn ie_report(x0: &SpectroTensor, y: &SpectroTensor, schedules: &[ScheduleKind]) -> Result<IeReport> {
    x0.check_same_shape(y)?;
    let mut rows = Vec::with_capacity(schedules.len());
    let (mut vp, mut ve) = (None, None);
    for s in schedules {
        let ie = initial_error(x0, y, s)?.norm();
        match s {
            ScheduleKind::Vp(_) => vp = vp.or(Some(ie)),
            ScheduleKind::Ve(_) => ve = ve.or(Some(ie)),
            ScheduleKind::Idm(_) => {}
        }
        rows.push(IeRow {
            schedule: s.name().to_string(),
            ie_norm: ie,
            alpha_1: s.alpha(crate::Time::ONE),
            lambda_1: s.lambda(crate::Time::ONE),
        });
    }
    let vp_ve_ratio = match (vp, ve) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Ok(IeReport { rows, vp_ve_ratio })
}

impl IeReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("schedule,ie_norm,alpha_1,lambda_1\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:.9},{:.9}\n", r.schedule, r.ie_norm, r.alpha_1, r.lambda_1));
        }
        if let Some(r) = self.vp_ve_ratio {
            out.push_str(&format!("vp/ve ratio,{r:.9},,\n"));
        }
        out
    }
}
