//! Coefficient functions of the interpolation diffusion family.
//!
//! Every schedule describes the marginal
//!
//! ```text
//! x(t) = α_t [λ_t x0 + (1 − λ_t) y] + G(t) z
//! ```
//!
//! together with the diffusion rate g(t) of the matching SDE. G and g are
//! coupled through `d(G²)/dt = 2 G² (ln α_t λ_t)′ + g²`, which
//! [`ode_residual`] checks numerically.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// A diffusion time in the closed unit interval.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Time(f64);

impl Time {
    pub const ZERO: Time = Time(0.0);
    pub const ONE: Time = Time(1.0);

    pub fn new(t: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&t) {
            Ok(Time(t))
        } else {
            Err(Error::Domain {
                what: "t",
                value: t,
                domain: "[0, 1]",
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Closed-form coefficients of an interpolation diffusion.
///
/// Log-derivatives are analytic; nothing here differentiates numerically.
pub trait Schedule: Send + Sync + fmt::Debug {
    fn alpha(&self, t: Time) -> f64;

    /// (ln α_t)′
    fn dlog_alpha(&self, t: Time) -> f64;

    /// Interpolation weight λ_t, sliding the mean from clean (1) towards noisy (0).
    fn lambda(&self, t: Time) -> f64;

    /// (ln λ_t)′
    fn dlog_lambda(&self, t: Time) -> f64;

    /// G²(t), the marginal noise variance.
    fn big_g_sq(&self, t: Time) -> f64;

    fn big_g(&self, t: Time) -> f64 {
        self.big_g_sq(t).sqrt()
    }

    /// Diffusion rate g(t) of the forward SDE.
    fn small_g(&self, t: Time) -> Result<f64>;

    /// β(t) = −2 (ln α_t)′. Zero for schedules with constant α.
    fn beta(&self, t: Time) -> f64 {
        0.0 - 2.0 * self.dlog_alpha(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBeta {
    beta_min: f64,
    beta_max: f64,
}

impl LinearBeta {
    pub fn new(beta_min: f64, beta_max: f64) -> Result<Self> {
        if !(beta_min > 0.0 && beta_min <= beta_max && beta_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < beta_min <= beta_max, got beta_min={beta_min}, beta_max={beta_max}"
            )));
        }
        Ok(Self { beta_min, beta_max })
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn at(&self, t: Time) -> f64 {
        (self.beta_max - self.beta_min) * t.get() + self.beta_min
    }

    /// ∫₀ᵗ β(τ) dτ from the exact antiderivative.
    pub fn integral(&self, t: Time) -> f64 {
        let t = t.get();
        0.5 * (self.beta_max - self.beta_min) * t * t + self.beta_min * t
    }
}

impl Default for LinearBeta {
    fn default() -> Self {
        Self {
            beta_min: 0.1,
            beta_max: 2.0,
        }
    }
}

fn check_rate(name: &str, rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {rate}")))
    }
}

/// Variance-preserving interpolation schedule (VPIDM).
///
/// `α_t = exp(−½∫₀ᵗβ)`, `λ_t = exp(−λ t)` and `G²(t) = 1 − α_t²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VpSchedule {
    beta: LinearBeta,
    lambda_rate: f64,
}

impl VpSchedule {
    pub fn new(beta: LinearBeta, lambda_rate: f64) -> Result<Self> {
        check_rate("lambda", lambda_rate)?;
        Ok(Self { beta, lambda_rate })
    }

    pub fn beta_schedule(&self) -> LinearBeta {
        self.beta
    }

    pub fn lambda_rate(&self) -> f64 {
        self.lambda_rate
    }
}

impl Default for VpSchedule {
    fn default() -> Self {
        Self {
            beta: LinearBeta::default(),
            lambda_rate: 1.5,
        }
    }
}

impl Schedule for VpSchedule {
    fn alpha(&self, t: Time) -> f64 {
        (-0.5 * self.beta.integral(t)).exp()
    }

    fn dlog_alpha(&self, t: Time) -> f64 {
        -0.5 * self.beta.at(t)
    }

    fn lambda(&self, t: Time) -> f64 {
        (-self.lambda_rate * t.get()).exp()
    }

    fn dlog_lambda(&self, _t: Time) -> f64 {
        -self.lambda_rate
    }

    fn big_g_sq(&self, t: Time) -> f64 {
        // 1 − α² = 1 − e^{−∫β}
        -(-self.beta.integral(t)).exp_m1()
    }

    fn small_g(&self, t: Time) -> Result<f64> {
        let radicand = self.beta.at(t) + 2.0 * self.lambda_rate * self.big_g_sq(t);
        if radicand < 0.0 {
            return Err(Error::ScheduleInconsistency {
                t: t.get(),
                radicand,
            });
        }
        Ok(radicand.sqrt())
    }

    fn beta(&self, t: Time) -> f64 {
        self.beta.at(t)
    }
}

/// Variance-exploding interpolation schedule (VEIDM).
///
/// `α_t ≡ 1`, `λ_t = exp(−λ t)`, `g(t) = σ_min (σ_max/σ_min)^t √(2 ln(σ_max/σ_min))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VeSchedule {
    sigma_min: f64,
    sigma_max: f64,
    lambda_rate: f64,
}

impl VeSchedule {
    pub fn new(sigma_min: f64, sigma_max: f64, lambda_rate: f64) -> Result<Self> {
        if !(sigma_min > 0.0 && sigma_min < sigma_max && sigma_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < sigma_min < sigma_max, got sigma_min={sigma_min}, sigma_max={sigma_max}"
            )));
        }
        check_rate("lambda", lambda_rate)?;
        Ok(Self {
            sigma_min,
            sigma_max,
            lambda_rate,
        })
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma_max
    }

    pub fn lambda_rate(&self) -> f64 {
        self.lambda_rate
    }

    fn log_ratio(&self) -> f64 {
        (self.sigma_max / self.sigma_min).ln()
    }
}

impl Default for VeSchedule {
    fn default() -> Self {
        Self {
            sigma_min: 0.05,
            sigma_max: 0.5,
            lambda_rate: 1.5,
        }
    }
}

impl Schedule for VeSchedule {
    fn alpha(&self, _t: Time) -> f64 {
        1.0
    }

    fn dlog_alpha(&self, _t: Time) -> f64 {
        0.0
    }

    fn lambda(&self, t: Time) -> f64 {
        (-self.lambda_rate * t.get()).exp()
    }

    fn dlog_lambda(&self, _t: Time) -> f64 {
        -self.lambda_rate
    }

    fn big_g_sq(&self, t: Time) -> f64 {
        let t = t.get();
        let l = self.log_ratio();
        let growth = (2.0 * t * l).exp();
        let decay = (-2.0 * self.lambda_rate * t).exp();
        l * self.sigma_min * self.sigma_min * (growth - decay) / (self.lambda_rate + l)
    }

    fn small_g(&self, t: Time) -> Result<f64> {
        let l = self.log_ratio();
        Ok(self.sigma_min * (t.get() * l).exp() * (2.0 * l).sqrt())
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A general interpolation schedule given by its coefficient functions.
///
/// G(t) is not supplied directly; it is the solution of the coupling ODE
///
/// ```text
/// G²(t) = (α_t λ_t)² [G(0)² + ∫₀ᵗ g²(τ) / (α_τ λ_τ)² dτ]
/// ```
///
/// evaluated by adaptive quadrature.
#[derive(Clone)]
pub struct IdmSchedule {
    alpha_fn: ScalarFn,
    dlog_alpha_fn: ScalarFn,
    lambda_fn: ScalarFn,
    dlog_lambda_fn: ScalarFn,
    g_fn: ScalarFn,
    big_g0: f64,
    label: String,
}

/// Absolute quadrature tolerance used for the general-solution G².
pub const IDM_QUADRATURE_TOL: f64 = 1e-13;

impl IdmSchedule {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        label: impl Into<String>,
        alpha_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dlog_alpha_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lambda_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dlog_lambda_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_fn: impl Fn(f64) -> f64 + Send + Sync + 'static,
        big_g0: f64,
    ) -> Result<Self> {
        if !(big_g0 >= 0.0 && big_g0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "G(0) must be finite and non-negative, got {big_g0}"
            )));
        }
        Ok(Self {
            alpha_fn: Arc::new(alpha_fn),
            dlog_alpha_fn: Arc::new(dlog_alpha_fn),
            lambda_fn: Arc::new(lambda_fn),
            dlog_lambda_fn: Arc::new(dlog_lambda_fn),
            g_fn: Arc::new(g_fn),
            big_g0,
            label: label.into(),
        })
    }

    /// The VP schedule expressed through its coefficient functions only.
    pub fn from_vp(vp: VpSchedule) -> Self {
        let g = move |t: f64| vp.small_g(Time(t)).unwrap_or(f64::NAN);
        Self::new(
            "idm(vp)",
            move |t| vp.alpha(Time(t)),
            move |t| vp.dlog_alpha(Time(t)),
            move |t| vp.lambda(Time(t)),
            move |t| vp.dlog_lambda(Time(t)),
            g,
            0.0,
        )
        .expect("G(0) = 0 is valid")
    }

    /// The VE schedule expressed through its coefficient functions only.
    pub fn from_ve(ve: VeSchedule) -> Self {
        Self::new(
            "idm(ve)",
            |_| 1.0,
            |_| 0.0,
            move |t| ve.lambda(Time(t)),
            move |t| ve.dlog_lambda(Time(t)),
            move |t| ve.small_g(Time(t)).unwrap_or(f64::NAN),
            0.0,
        )
        .expect("G(0) = 0 is valid")
    }

    /// α ≡ 1, λ ≡ 1, g ≡ 0: the state never moves and G stays at `big_g0`.
    pub fn constant(big_g0: f64) -> Result<Self> {
        Self::new("idm(const)", |_| 1.0, |_| 0.0, |_| 1.0, |_| 0.0, |_| 0.0, big_g0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn big_g0(&self) -> f64 {
        self.big_g0
    }
}

impl fmt::Debug for IdmSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IdmSchedule")
            .field("label", &self.label)
            .field("big_g0", &self.big_g0)
            .finish_non_exhaustive()
    }
}

impl Schedule for IdmSchedule {
    fn alpha(&self, t: Time) -> f64 {
        (self.alpha_fn)(t.get())
    }

    fn dlog_alpha(&self, t: Time) -> f64 {
        (self.dlog_alpha_fn)(t.get())
    }

    fn lambda(&self, t: Time) -> f64 {
        (self.lambda_fn)(t.get())
    }

    fn dlog_lambda(&self, t: Time) -> f64 {
        (self.dlog_lambda_fn)(t.get())
    }

    fn big_g_sq(&self, t: Time) -> f64 {
        let scale = |tau: f64| (self.alpha_fn)(tau) * (self.lambda_fn)(tau);
        let integrand = |tau: f64| {
            let g = (self.g_fn)(tau);
            let s = scale(tau);
            g * g / (s * s)
        };
        let acc = quad::integrate(integrand, 0.0, t.get(), IDM_QUADRATURE_TOL);
        let s = scale(t.get());
        s * s * (self.big_g0 * self.big_g0 + acc)
    }

    fn small_g(&self, t: Time) -> Result<f64> {
        let g = (self.g_fn)(t.get());
        if g.is_finite() && g >= 0.0 {
            Ok(g)
        } else {
            Err(Error::ScheduleInconsistency {
                t: t.get(),
                radicand: g,
            })
        }
    }
}

/// The three schedule families behind one type.
///
/// The SDE drift dispatches on the variant so that each family keeps its own
/// closed form (see `sampler::drift`).
#[derive(Clone, Debug)]
pub enum ScheduleKind {
    Vp(VpSchedule),
    Ve(VeSchedule),
    Idm(IdmSchedule),
}

impl ScheduleKind {
    pub fn name(&self) -> &str {
        match self {
            ScheduleKind::Vp(_) => "vp",
            ScheduleKind::Ve(_) => "ve",
            ScheduleKind::Idm(s) => s.label(),
        }
    }

    fn inner(&self) -> &dyn Schedule {
        match self {
            ScheduleKind::Vp(s) => s,
            ScheduleKind::Ve(s) => s,
            ScheduleKind::Idm(s) => s,
        }
    }
}

impl From<VpSchedule> for ScheduleKind {
    fn from(s: VpSchedule) -> Self {
        ScheduleKind::Vp(s)
    }
}

impl From<VeSchedule> for ScheduleKind {
    fn from(s: VeSchedule) -> Self {
        ScheduleKind::Ve(s)
    }
}

impl From<IdmSchedule> for ScheduleKind {
    fn from(s: IdmSchedule) -> Self {
        ScheduleKind::Idm(s)
    }
}

impl Schedule for ScheduleKind {
    fn alpha(&self, t: Time) -> f64 {
        self.inner().alpha(t)
    }
    fn dlog_alpha(&self, t: Time) -> f64 {
        self.inner().dlog_alpha(t)
    }
    fn lambda(&self, t: Time) -> f64 {
        self.inner().lambda(t)
    }
    fn dlog_lambda(&self, t: Time) -> f64 {
        self.inner().dlog_lambda(t)
    }
    fn big_g_sq(&self, t: Time) -> f64 {
        self.inner().big_g_sq(t)
    }
    fn big_g(&self, t: Time) -> f64 {
        self.inner().big_g(t)
    }
    fn small_g(&self, t: Time) -> Result<f64> {
        self.inner().small_g(t)
    }
    fn beta(&self, t: Time) -> f64 {
        self.inner().beta(t)
    }
}

/// Default finite-difference step for [`ode_residual`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `|d(G²)/dt − [2 G² (ln α_t λ_t)′ + g²]|` with a centered difference for the
/// left-hand side.
pub fn ode_residual<S: Schedule + ?Sized>(s: &S, t: f64, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Domain {
            what: "h",
            value: h,
            domain: "(0, ∞)",
        });
    }
    let tm = Time::new(t - h)?;
    let tp = Time::new(t + h)?;
    let t = Time::new(t)?;
    let lhs = (s.big_g_sq(tp) - s.big_g_sq(tm)) / (2.0 * h);
    let g = s.small_g(t)?;
    let rhs = 2.0 * s.big_g_sq(t) * (s.dlog_alpha(t) + s.dlog_lambda(t)) + g * g;
    Ok((lhs - rhs).abs())
}

/// Absolute tolerance of the quadrature in [`ve_general_solution_check`].
pub const VE_CHECK_QUADRATURE_TOL: f64 = 1e-10;

/// Difference between the VE closed-form G²(t) and the general ODE solution
/// `λ_t² ∫₀ᵗ g²(τ)/λ_τ² dτ` (with α ≡ 1, G(0) = 0) evaluated by quadrature.
pub fn ve_general_solution_check(s: &VeSchedule, t: f64) -> Result<f64> {
    let t = Time::new(t)?;
    let integrand = |tau: f64| {
        let tau = Time(tau);
        let g = s.small_g(tau).expect("VE rate is always defined");
        let l = s.lambda(tau);
        g * g / (l * l)
    };
    let acc = quad::integrate(integrand, 0.0, t.get(), VE_CHECK_QUADRATURE_TOL);
    let l = s.lambda(t);
    Ok((s.big_g_sq(t) - l * l * acc).abs())
}

/// One row of a tabulated schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub t: f64,
    pub beta: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub big_g: f64,
    pub small_g: f64,
}

pub const DEFAULT_DUMP_POINTS: usize = 1000;

/// Evaluates every coefficient on `points` equally spaced times covering [0, 1].
pub fn tabulate<S: Schedule + ?Sized>(s: &S, points: usize) -> Result<Vec<ScheduleRow>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "schedule table needs at least 2 points, got {points}"
        )));
    }
    let last = (points - 1) as f64;
    (0..points)
        .map(|i| {
            let t = if i == points - 1 { Time::ONE } else { Time(i as f64 / last) };
            Ok(ScheduleRow {
                t: t.get(),
                beta: s.beta(t),
                alpha: s.alpha(t),
                lambda: s.lambda(t),
                big_g: s.big_g(t),
                small_g: s.small_g(t)?,
            })
        })
        .collect()
}

/// K ≈ [1/ε]: the number of reverse steps for a minimum time ε.
///
/// `1/ε` is rounded down to a multiple of five (never below one step), which
/// reproduces the published pairs ε = 0.01, 0.03, 0.04, 0.05, 0.06, 0.1 →
/// K = 100, 30, 25, 20, 15, 10.
pub fn steps_for_epsilon(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
            domain: "(0, 1)",
        });
    }
    // 1/0.05 and friends land a few ulps either side of an integer.
    let inv = 1.0 / epsilon + 1e-9;
    let k = 5 * (inv / 5.0).floor() as usize;
    Ok(if k == 0 { (inv.floor() as usize).max(1) } else { k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn t(v: f64) -> Time {
        Time::new(v).unwrap()
    }

    #[test]
    fn beta_values() {
        let s = VpSchedule::default();
        assert_eq!(s.beta(t(0.0)), 0.1);
        assert_eq!(s.beta(t(1.0)), 2.0);
        assert_abs_diff_eq!(s.beta(t(0.5)), 1.05, epsilon = 1e-15);
    }

    #[test]
    fn time_domain_is_enforced() {
        assert!(matches!(Time::new(-0.1), Err(Error::Domain { .. })));
        assert!(matches!(Time::new(1.0 + 1e-12), Err(Error::Domain { .. })));
        assert!(Time::new(f64::NAN).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(LinearBeta::new(0.0, 1.0).is_err());
        assert!(LinearBeta::new(2.0, 1.0).is_err());
        assert!(LinearBeta::new(1.0, 1.0).is_ok());
        assert!(VpSchedule::new(LinearBeta::default(), 0.0).is_err());
        assert!(VeSchedule::new(0.5, 0.5, 1.5).is_err());
        assert!(VeSchedule::new(-0.1, 0.5, 1.5).is_err());
        assert!(IdmSchedule::constant(-1.0).is_err());
    }

    #[test]
    fn vp_alpha_matches_quadrature() {
        // oracle: quadrature of β, then exponentiate
        let s = VpSchedule::default();
        for &(tv, expect) in &[(0.0, 1.0), (1.0, 0.59156), (0.5, 0.86611)] {
            let integral = quad::integrate(|x| 1.9 * x + 0.1, 0.0, tv, 1e-13);
            let oracle = (-0.5 * integral).exp();
            assert_abs_diff_eq!(s.alpha(t(tv)), oracle, epsilon = 1e-12);
            assert_abs_diff_eq!(s.alpha(t(tv)), expect, epsilon = 1e-5);
        }
        assert_abs_diff_eq!(s.alpha(t(1.0)), (-0.525f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.alpha(t(0.5)), (-0.14375f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn lambda_values() {
        let s = VpSchedule::default();
        assert_eq!(s.lambda(t(0.0)), 1.0);
        assert_abs_diff_eq!(s.lambda(t(1.0)), 0.22313, epsilon = 1e-5);
        assert_abs_diff_eq!(s.lambda(t(0.5)), 0.47237, epsilon = 1e-5);
    }

    #[test]
    fn big_g_values() {
        let vp = VpSchedule::default();
        assert_eq!(vp.big_g(t(0.0)), 0.0);
        assert_abs_diff_eq!(vp.big_g(t(1.0)), (-(-1.05f64).exp_m1()).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(vp.big_g(t(1.0)), 0.80623, epsilon = 1e-4);
        for ve in [VeSchedule::default(), VeSchedule::new(0.01, 2.0, 0.3).unwrap()] {
            assert_eq!(ve.big_g(t(0.0)), 0.0);
        }
    }

    #[test]
    fn small_g_values() {
        let vp = VpSchedule::default();
        assert_abs_diff_eq!(vp.small_g(t(0.0)).unwrap(), 0.1f64.sqrt(), epsilon = 1e-15);
        let expect = (2.0 + 3.0 * (1.0 - (-1.05f64).exp())).sqrt();
        assert_abs_diff_eq!(vp.small_g(t(1.0)).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(expect, 1.9875, epsilon = 1e-4);

        let ve = VeSchedule::default();
        let expect = 0.05 * (2.0 * 10f64.ln()).sqrt();
        assert_abs_diff_eq!(ve.small_g(t(0.0)).unwrap(), expect, epsilon = 1e-15);
    }

    #[test]
    fn vp_small_g_via_alpha_squared() {
        let vp = VpSchedule::default();
        for i in 0..=100 {
            let tt = t(i as f64 / 100.0);
            let a = vp.alpha(tt);
            let alt = (vp.beta(tt) + 2.0 * vp.lambda_rate() * (1.0 - a * a)).sqrt();
            assert_abs_diff_eq!(vp.small_g(tt).unwrap(), alt, epsilon = 1e-14);
        }
    }

    #[test]
    fn idm_rejects_negative_rate() {
        let s = IdmSchedule::new("bad", |_| 1.0, |_| 0.0, |_| 1.0, |_| 0.0, |_| -1.0, 0.0).unwrap();
        assert!(matches!(
            s.small_g(t(0.5)),
            Err(Error::ScheduleInconsistency { .. })
        ));
    }

    #[test]
    fn ode_residual_examples() {
        let vp = VpSchedule::default();
        assert!(ode_residual(&vp, 0.5, 1e-5).unwrap() < 1e-4);
        let ve = VeSchedule::default();
        assert!(ode_residual(&ve, 0.5, 1e-5).unwrap() < 1e-4);
        let c = IdmSchedule::constant(0.3).unwrap();
        assert_eq!(ode_residual(&c, 0.5, 1e-5).unwrap(), 0.0);
    }

    #[test]
    fn ode_residual_domain() {
        let vp = VpSchedule::default();
        assert!(ode_residual(&vp, 0.0, 1e-5).is_err());
        assert!(ode_residual(&vp, 0.5, 0.0).is_err());
    }

    #[test]
    fn idm_equivalents_reproduce_closed_forms() {
        let vp = VpSchedule::default();
        let ve = VeSchedule::default();
        let ivp = IdmSchedule::from_vp(vp);
        let ive = IdmSchedule::from_ve(ve);
        for i in 0..=20 {
            let tt = t(i as f64 / 20.0);
            assert_abs_diff_eq!(ivp.big_g_sq(tt), vp.big_g_sq(tt), epsilon = 1e-11);
            assert_abs_diff_eq!(ive.big_g_sq(tt), ve.big_g_sq(tt), epsilon = 1e-11);
        }
        assert!(ode_residual(&ivp, 0.3, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn ve_general_solution() {
        let ve = VeSchedule::default();
        assert_eq!(ve_general_solution_check(&ve, 0.0).unwrap(), 0.0);
        assert!(ve_general_solution_check(&ve, 1.0).unwrap() < 1e-8);
        assert!(ve_general_solution_check(&ve, 0.5).unwrap() < 1e-8);
    }

    #[test]
    fn tabulate_endpoints() {
        let rows = tabulate(&VpSchedule::default(), DEFAULT_DUMP_POINTS).unwrap();
        assert_eq!(rows.len(), 1000);
        assert_eq!(rows[0].t, 0.0);
        assert_eq!(rows[0].big_g, 0.0);
        assert_eq!(rows[999].t, 1.0);
        assert_abs_diff_eq!(rows[999].alpha, 0.59156, epsilon = 1e-5);
        let ve_rows = tabulate(&VeSchedule::default(), 11).unwrap();
        assert_eq!(ve_rows[0].big_g, 0.0);
        assert!(ve_rows.iter().all(|r| r.beta == 0.0 && r.alpha == 1.0));
        assert!(tabulate(&VpSchedule::default(), 1).is_err());
    }

    #[test]
    fn step_counts() {
        let eps = [1e-2, 3e-2, 4e-2, 5e-2, 6e-2, 1e-1];
        let k: Vec<_> = eps.iter().map(|&e| steps_for_epsilon(e).unwrap()).collect();
        assert_eq!(k, vec![100, 30, 25, 20, 15, 10]);
        assert_eq!(steps_for_epsilon(0.5).unwrap(), 2);
        assert_eq!(steps_for_epsilon(0.9).unwrap(), 1);
        assert!(steps_for_epsilon(0.0).is_err());
        assert!(steps_for_epsilon(1.0).is_err());
    }
}
