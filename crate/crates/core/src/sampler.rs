//! SDE coefficients, forward Euler–Maruyama and the reverse sampler.
//!
//! The forward SDE of every interpolation schedule is
//!
//! ```text
//! dx = [x (ln α_t λ_t)′ − y α_t (ln λ_t)′] dt + g(t) dw
//! ```
//!
//! and sampling integrates its time reversal
//! `dx = [f(x, y) − g² θ(x)] dt + g dw̄` from t = 1 down to t = ε on the grid
//! `t_k = (1 − ε) k / K + ε`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::ScoreModel;
use crate::error::{Error, Result};
use crate::schedule::{self, Schedule, ScheduleKind, Time, VeSchedule, VpSchedule};
use crate::tensor::SpectroTensor;

/// Reverse-time discretization grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerGrid {
    epsilon: f64,
    steps: usize,
}

impl SamplerGrid {
    pub fn new(epsilon: f64, steps: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::Domain {
                what: "epsilon",
                value: epsilon,
                domain: "[0, 1)",
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("step count K must be positive".into()));
        }
        Ok(Self { epsilon, steps })
    }

    /// Grid with K taken from [`schedule::steps_for_epsilon`].
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, schedule::steps_for_epsilon(epsilon)?)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Δ = (1 − ε) / K
    pub fn delta(&self) -> f64 {
        (1.0 - self.epsilon) / self.steps as f64
    }

    /// t_k; `t_0 = ε` and `t_K = 1` hold exactly.
    pub fn time(&self, k: usize) -> Result<Time> {
        if k > self.steps {
            return Err(Error::IndexOutOfRange {
                index: k,
                max: self.steps,
            });
        }
        if k == self.steps {
            return Ok(Time::ONE);
        }
        Time::new((1.0 - self.epsilon) * k as f64 / self.steps as f64 + self.epsilon)
    }
}

impl Default for SamplerGrid {
    fn default() -> Self {
        Self {
            epsilon: 0.04,
            steps: 25,
        }
    }
}

/// How the score term of the reverse update is weighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    /// `x_{k−1} = x_k − [f − g_k² θ] Δ + g_k z` with `g_k = g(t_k)√Δ`, read
    /// literally: the score enters with weight `g²(t_k) Δ²`. This does not
    /// converge to the reverse SDE as Δ → 0; kept for comparison.
    Paper,
    /// Plain Euler–Maruyama on the reverse SDE: score weight `g²(t_k) Δ`.
    #[default]
    Standard,
}

impl Discretization {
    fn score_weight(self, g: f64, delta: f64) -> f64 {
        match self {
            Discretization::Paper => g * g * delta,
            Discretization::Standard => g * g,
        }
    }
}

/// VPIDM drift: `−(½β(t) + λ) x + λ α_t y`.
pub fn vp_drift(s: &VpSchedule, xt: &SpectroTensor, y: &SpectroTensor, t: Time) -> Result<SpectroTensor> {
    let l = s.lambda_rate();
    xt.lin_comb(-(0.5 * s.beta(t) + l), y, l * s.alpha(t))
}

/// VEIDM drift: `λ (y − x)`.
pub fn ve_drift(s: &VeSchedule, xt: &SpectroTensor, y: &SpectroTensor, _t: Time) -> Result<SpectroTensor> {
    let l = s.lambda_rate();
    xt.lin_comb(-l, y, l)
}

/// General IDM drift: `x (ln α_t λ_t)′ − y α_t (ln λ_t)′`.
pub fn idm_drift<S: Schedule + ?Sized>(
    s: &S,
    xt: &SpectroTensor,
    y: &SpectroTensor,
    t: Time,
) -> Result<SpectroTensor> {
    let dl = s.dlog_lambda(t);
    xt.lin_comb(s.dlog_alpha(t) + dl, y, -s.alpha(t) * dl)
}

/// Drift f(x, y, t) in the closed form of each schedule family.
pub fn drift(s: &ScheduleKind, xt: &SpectroTensor, y: &SpectroTensor, t: Time) -> Result<SpectroTensor> {
    match s {
        ScheduleKind::Vp(vp) => vp_drift(vp, xt, y, t),
        ScheduleKind::Ve(ve) => ve_drift(ve, xt, y, t),
        ScheduleKind::Idm(idm) => idm_drift(idm, xt, y, t),
    }
}

fn validate_input(y: &SpectroTensor) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput("conditioner has no entries"));
    }
    y.check_finite()
}

/// Euler–Maruyama path of the forward SDE started from `x0` at `t_0 = ε`.
///
/// Returns the K + 1 states `x_0 … x_K`.
pub fn euler_forward<R: Rng + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &ScheduleKind,
    grid: &SamplerGrid,
    rng: &mut R,
) -> Result<Vec<SpectroTensor>> {
    let mut path = Vec::with_capacity(grid.steps() + 1);
    let last = forward_walk(x0, y, s, grid, rng, |x| path.push(x.clone()))?;
    path.push(last);
    Ok(path)
}

/// Like [`euler_forward`], keeping only the state at t = 1.
pub fn euler_forward_terminal<R: Rng + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &ScheduleKind,
    grid: &SamplerGrid,
    rng: &mut R,
) -> Result<SpectroTensor> {
    forward_walk(x0, y, s, grid, rng, |_| {})
}

fn forward_walk<R: Rng + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &ScheduleKind,
    grid: &SamplerGrid,
    rng: &mut R,
    mut visit: impl FnMut(&SpectroTensor),
) -> Result<SpectroTensor> {
    x0.check_same_shape(y)?;
    let delta = grid.delta();
    let sqrt_delta = delta.sqrt();
    let (f, n) = x0.shape();
    let mut x = x0.clone();
    for k in 0..grid.steps() {
        visit(&x);
        let t = grid.time(k)?;
        let fx = drift(s, &x, y, t)?;
        let g = s.small_g(t)?;
        let z = SpectroTensor::standard_normal(f, n, rng);
        x.scaled_add(delta, &fx)?;
        x.scaled_add(g * sqrt_delta, &z)?;
    }
    Ok(x)
}

/// Start of the reverse process: `α_1 y + G(1) z` (α_1 = 1 for VE).
pub fn initial_state<S: Schedule + ?Sized, R: Rng + ?Sized>(
    y: &SpectroTensor,
    s: &S,
    rng: &mut R,
) -> Result<SpectroTensor> {
    let (f, n) = y.shape();
    let z = SpectroTensor::standard_normal(f, n, rng);
    initial_state_with_noise(y, s, &z)
}

pub fn initial_state_with_noise<S: Schedule + ?Sized>(
    y: &SpectroTensor,
    s: &S,
    z: &SpectroTensor,
) -> Result<SpectroTensor> {
    y.lin_comb(s.alpha(Time::ONE), z, s.big_g(Time::ONE))
}

/// One reverse update at time `t` with step `delta`.
///
/// `noise = None` gives the deterministic update used for the last step.
#[allow(clippy::too_many_arguments)]
pub fn reverse_update(
    xk: &SpectroTensor,
    y: &SpectroTensor,
    theta: &SpectroTensor,
    s: &ScheduleKind,
    t: Time,
    delta: f64,
    discretization: Discretization,
    noise: Option<&SpectroTensor>,
) -> Result<SpectroTensor> {
    theta.check_same_shape(xk)?;
    let g = s.small_g(t)?;
    let fx = drift(s, xk, y, t)?;
    let w = discretization.score_weight(g, delta);
    // x − [f − w θ] Δ
    let mut next = xk.clone();
    next.scaled_add(-delta, &fx)?;
    next.scaled_add(w * delta, theta)?;
    if let Some(z) = noise {
        next.scaled_add(g * delta.sqrt(), z)?;
    }
    Ok(next)
}

/// x_k → x_{k−1} with fresh Gaussian noise, scored at t_k.
#[allow(clippy::too_many_arguments)]
pub fn reverse_step<R: Rng + ?Sized>(
    xk: &SpectroTensor,
    y: &SpectroTensor,
    theta: &SpectroTensor,
    s: &ScheduleKind,
    grid: &SamplerGrid,
    k: usize,
    discretization: Discretization,
    rng: &mut R,
) -> Result<SpectroTensor> {
    if k == 0 || k > grid.steps() {
        return Err(Error::IndexOutOfRange {
            index: k,
            max: grid.steps(),
        });
    }
    let (f, n) = xk.shape();
    let z = SpectroTensor::standard_normal(f, n, rng);
    reverse_update(xk, y, theta, s, grid.time(k)?, grid.delta(), discretization, Some(&z))
}

#[derive(Clone, Debug)]
pub struct ReverseOutput {
    pub estimate: SpectroTensor,
    /// `x_K, x_{K−1}, …, x_1, x̂_0` when recording was requested.
    pub path: Option<Vec<SpectroTensor>>,
}

/// Runs the full reverse sampler.
///
/// Starts from [`initial_state`], takes stochastic steps for k = K … 2 and a
/// final noise-free step from x_1.
pub fn reverse_trajectory<M: ScoreModel + ?Sized, R: Rng + ?Sized>(
    y: &SpectroTensor,
    s: &ScheduleKind,
    grid: &SamplerGrid,
    model: &M,
    discretization: Discretization,
    record: bool,
    rng: &mut R,
) -> Result<ReverseOutput> {
    validate_input(y)?;
    let mut x = initial_state(y, s, rng)?;
    let mut path = record.then(|| Vec::with_capacity(grid.steps() + 1));
    for k in (2..=grid.steps()).rev() {
        if let Some(p) = path.as_mut() {
            p.push(x.clone());
        }
        let theta = model.evaluate(&x, y, grid.time(k)?)?;
        x = reverse_step(&x, y, &theta, s, grid, k, discretization, rng)?;
    }
    if let Some(p) = path.as_mut() {
        p.push(x.clone());
    }
    let t1 = grid.time(1)?;
    let theta = model.evaluate(&x, y, t1)?;
    let estimate = reverse_update(&x, y, &theta, s, t1, grid.delta(), discretization, None)?;
    if let Some(p) = path.as_mut() {
        p.push(estimate.clone());
    }
    Ok(ReverseOutput { estimate, path })
}

/// Offset between the practical reverse start and the true terminal mean:
/// `α_1 λ_1 (y − x0)`. For VE (α ≡ 1) this is `λ_1 (y − x0)`.
pub fn initial_error<S: Schedule + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &S,
) -> Result<SpectroTensor> {
    let c = s.alpha(Time::ONE) * s.lambda(Time::ONE);
    Ok(y.sub(x0)?.scale(c))
}

/// Per-state summary used for trajectory export.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub k: usize,
    pub t: f64,
    pub norm: f64,
    pub mean: f64,
    pub max_abs: f64,
}

/// Summaries of a reverse path (`x_K … x_1, x̂_0`) or a forward path
/// (`x_0 … x_K`). The time index is read from the path direction.
pub fn summarize_path(path: &[SpectroTensor], grid: &SamplerGrid, reverse: bool) -> Result<Vec<StepSummary>> {
    path.iter()
        .enumerate()
        .map(|(i, x)| {
            let k = if reverse { grid.steps().saturating_sub(i) } else { i };
            let n = x.len().max(1) as f64;
            Ok(StepSummary {
                k,
                t: grid.time(k)?.get(),
                norm: x.norm(),
                mean: x.iter().sum::<f64>() / n,
                max_abs: x.max_abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{ConditionalOracle, ZeroScore};
    use crate::schedule::IdmSchedule;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vp() -> ScheduleKind {
        ScheduleKind::Vp(VpSchedule::default())
    }

    fn flat(v: &[f64]) -> SpectroTensor {
        SpectroTensor::from_flat(1, v.len() / 2, v).unwrap()
    }

    #[test]
    fn grid_endpoints() {
        for &(eps, k) in &[(0.04, 25), (0.03, 30), (0.1, 10), (0.0, 7), (1.0 / 3.0, 9)] {
            let g = SamplerGrid::new(eps, k).unwrap();
            assert_eq!(g.time(0).unwrap().get(), eps);
            assert_eq!(g.time(k).unwrap().get(), 1.0);
            assert_abs_diff_eq!(g.delta() * k as f64, 1.0 - eps, epsilon = 1e-15);
            assert!(g.time(k + 1).is_err());
        }
        assert!(SamplerGrid::new(1.0, 10).is_err());
        assert!(SamplerGrid::new(0.1, 0).is_err());
        assert_eq!(SamplerGrid::from_epsilon(0.04).unwrap(), SamplerGrid::default());
    }

    #[test]
    fn ve_fixed_point() {
        let s = ScheduleKind::Ve(VeSchedule::default());
        let y = flat(&[0.3, -1.2, 2.0, 0.1]);
        let d = drift(&s, &y, &y, Time::new(0.4).unwrap()).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn vp_drift_at_one() {
        let d = drift(&vp(), &flat(&[1.0, 0.0]), &flat(&[0.0, 0.0]), Time::ONE).unwrap();
        assert_abs_diff_eq!(d.re()[[0, 0]], -2.5, epsilon = 1e-15);
    }

    #[test]
    fn idm_drift_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vp_s = VpSchedule::default();
        let ve_s = VeSchedule::default();
        let idm_vp = ScheduleKind::Idm(IdmSchedule::from_vp(vp_s));
        let idm_ve = ScheduleKind::Idm(IdmSchedule::from_ve(ve_s));
        for _ in 0..50 {
            let x = SpectroTensor::standard_normal(3, 4, &mut rng);
            let y = SpectroTensor::standard_normal(3, 4, &mut rng);
            let t = Time::new(rng.random_range(0.0..=1.0)).unwrap();
            let a = drift(&ScheduleKind::Vp(vp_s), &x, &y, t).unwrap();
            let b = drift(&idm_vp, &x, &y, t).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
            let a = drift(&ScheduleKind::Ve(ve_s), &x, &y, t).unwrap();
            let b = drift(&idm_ve, &x, &y, t).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
        }
    }

    #[test]
    fn forward_degenerate_schedule_is_constant() {
        let s = ScheduleKind::Idm(IdmSchedule::constant(0.0).unwrap());
        let grid = SamplerGrid::new(0.0, 20).unwrap();
        let x0 = flat(&[1.0, 2.0, 3.0, 4.0]);
        let path = euler_forward(&x0, &flat(&[9.0, 9.0, 9.0, 9.0]), &s, &grid, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(path.len(), 21);
        assert!(path.iter().all(|p| *p == x0));
    }

    #[test]
    fn initial_state_examples() {
        let y = flat(&[1.0, 0.0]);
        let z0: f64 = ChaCha8Rng::seed_from_u64(8).sample(rand_distr::StandardNormal);
        let x = initial_state(&y, &VpSchedule::default(), &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_abs_diff_eq!(x.re()[[0, 0]], (-0.525f64).exp() + (-(-1.05f64).exp_m1()).sqrt() * z0, epsilon = 1e-14);
        let ve = VeSchedule::default();
        let x = initial_state(&y, &ve, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_abs_diff_eq!(x.re()[[0, 0]], 1.0 + ve.big_g(Time::ONE) * z0, epsilon = 1e-14);
        let zero = flat(&[0.0, 0.0]);
        assert_eq!(initial_state_with_noise(&zero, &ve, &zero).unwrap(), zero);
    }

    #[test]
    fn zero_delta_update_is_identity() {
        let x = flat(&[0.4, -0.7, 1.1, 0.2]);
        let y = flat(&[1.0, 1.0, 1.0, 1.0]);
        let theta = flat(&[5.0, 5.0, 5.0, 5.0]);
        let z = flat(&[1.0, -1.0, 2.0, 0.5]);
        let next = reverse_update(&x, &y, &theta, &vp(), Time::new(0.5).unwrap(), 0.0, Discretization::Paper, Some(&z)).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn zero_rate_step_is_pure_drift() {
        let s = ScheduleKind::Idm(
            IdmSchedule::new("drift-only", |_| 1.0, |_| 0.0, |t| (-2.0 * t).exp(), |_| -2.0, |_| 0.0, 0.0).unwrap(),
        );
        let grid = SamplerGrid::new(0.0, 10).unwrap();
        let x = flat(&[0.4, -0.7]);
        let y = flat(&[1.0, 3.0]);
        let next = reverse_step(&x, &y, &flat(&[0.0, 0.0]), &s, &grid, 5, Discretization::Paper, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        // f = −2 x + 2 y, Δ = 0.1
        assert_abs_diff_eq!(next.re()[[0, 0]], 0.4 - 0.1 * (-0.8 + 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(next.im()[[0, 0]], -0.7 - 0.1 * (1.4 + 6.0), epsilon = 1e-15);
    }

    #[test]
    fn step_index_range() {
        let grid = SamplerGrid::default();
        let x = flat(&[0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            reverse_step(&x, &x, &x, &vp(), &grid, 0, Discretization::Paper, &mut rng),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(reverse_step(&x, &x, &x, &vp(), &grid, 26, Discretization::Paper, &mut rng).is_err());
        assert!(reverse_step(&x, &x, &x, &vp(), &grid, 25, Discretization::Paper, &mut rng).is_ok());
    }

    #[test]
    fn trajectory_rejects_bad_input() {
        let grid = SamplerGrid::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = SpectroTensor::zeros(0, 0);
        assert!(matches!(
            reverse_trajectory(&empty, &vp(), &grid, &ZeroScore, Discretization::Paper, false, &mut rng),
            Err(Error::EmptyInput(_))
        ));
        let mut bad = flat(&[0.0, 0.0]);
        bad.re_mut()[[0, 0]] = f64::INFINITY;
        assert!(matches!(
            reverse_trajectory(&bad, &vp(), &grid, &ZeroScore, Discretization::Paper, false, &mut rng),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn trajectory_records_path_and_is_deterministic() {
        let grid = SamplerGrid::default();
        let x0 = flat(&[1.0, -1.0, 0.5, 0.25]);
        let y = flat(&[0.2, -0.3, 1.5, 0.0]);
        let oracle = ConditionalOracle::new(x0, VpSchedule::default());
        let run = |seed| {
            reverse_trajectory(&y, &vp(), &grid, &oracle, Discretization::Standard, true, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        };
        let a = run(3);
        let b = run(3);
        let path = a.path.as_ref().unwrap();
        assert_eq!(path.len(), 26);
        assert_eq!(path.last().unwrap(), &a.estimate);
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.path, b.path);
        let summary = summarize_path(path, &grid, true).unwrap();
        assert_eq!(summary[0].k, 25);
        assert_eq!(summary[0].t, 1.0);
        assert_eq!(summary[25].t, 0.04);
    }

    #[test]
    fn initial_error_examples() {
        let x0 = flat(&[0.0, 0.0]);
        let y = flat(&[1.0, 0.0]);
        let ve = initial_error(&x0, &y, &VeSchedule::default()).unwrap();
        let vpe = initial_error(&x0, &y, &VpSchedule::default()).unwrap();
        assert_abs_diff_eq!(ve.re()[[0, 0]], 0.22313, epsilon = 1e-5);
        assert_abs_diff_eq!(vpe.re()[[0, 0]], 0.13200, epsilon = 1e-5);
        assert_eq!(initial_error(&y, &y, &VpSchedule::default()).unwrap().max_abs(), 0.0);
    }
}
