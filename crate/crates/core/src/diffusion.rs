//! Forward process: marginals, conditional score, training tuples and loss.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{Schedule, ScheduleKind, Time, VpSchedule};
use crate::tensor::SpectroTensor;

/// The conditional score is refused below this G(t).
pub const G_FLOOR: f64 = 1e-6;

/// m(x0, y) = α_t [λ_t x0 + (1 − λ_t) y]
pub fn marginal_mean<S: Schedule + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &S,
    t: Time,
) -> Result<SpectroTensor> {
    let a = s.alpha(t);
    let l = s.lambda(t);
    x0.lin_comb(a * l, y, a * (1.0 - l))
}

/// Draws `x(t) = m + G(t) z` and returns `(x(t), z)`.
pub fn sample_marginal<S: Schedule + ?Sized, R: Rng + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &S,
    t: Time,
    rng: &mut R,
) -> Result<(SpectroTensor, SpectroTensor)> {
    let mut xt = marginal_mean(x0, y, s, t)?;
    let (f, n) = x0.shape();
    let z = SpectroTensor::standard_normal(f, n, rng);
    xt.scaled_add(s.big_g(t), &z)?;
    Ok((xt, z))
}

/// ∇ₓ ln p_t(x | x0, y) = −(x − m) / G²(t).
pub fn conditional_score<S: Schedule + ?Sized>(
    xt: &SpectroTensor,
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &S,
    t: Time,
) -> Result<SpectroTensor> {
    xt.check_same_shape(x0)?;
    let big_g = s.big_g(t);
    if big_g.is_nan() || big_g < G_FLOOR {
        return Err(Error::DegenerateTime {
            t: t.get(),
            big_g,
            floor: G_FLOOR,
        });
    }
    let m = marginal_mean(x0, y, s, t)?;
    xt.lin_comb(-1.0 / (big_g * big_g), &m, 1.0 / (big_g * big_g))
}

/// One tuple of the training stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub x0: SpectroTensor,
    pub y: SpectroTensor,
    pub t: Time,
    pub z: SpectroTensor,
    pub xt: SpectroTensor,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "epsilon",
            value: epsilon,
            domain: "(0, 1)",
        })
    }
}

/// Samples t ~ U(ε, 1], then x(t) from the closed-form marginal.
pub fn make_training_example<S: Schedule + ?Sized, R: Rng + ?Sized>(
    x0: &SpectroTensor,
    y: &SpectroTensor,
    s: &S,
    epsilon: f64,
    rng: &mut R,
) -> Result<TrainingExample> {
    check_epsilon(epsilon)?;
    x0.check_same_shape(y)?;
    let t = loop {
        let t = rng.random_range(epsilon..=1.0);
        if t > epsilon {
            break Time::new(t)?;
        }
    };
    let (xt, z) = sample_marginal(x0, y, s, t, rng)?;
    Ok(TrainingExample {
        x0: x0.clone(),
        y: y.clone(),
        t,
        z,
        xt,
    })
}

/// Builds one example per `(x0, y)` pair in parallel.
///
/// Example `b` draws from ChaCha stream `b` of `seed`, so the batch is the same
/// for any thread count.
pub fn make_training_batch<S: Schedule + ?Sized>(
    pairs: &[(SpectroTensor, SpectroTensor)],
    s: &S,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<TrainingExample>> {
    check_epsilon(epsilon)?;
    pairs
        .par_iter()
        .enumerate()
        .map(|(b, (x0, y))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            make_training_example(x0, y, s, epsilon, &mut rng)
        })
        .collect()
}

/// A score estimator θ(x(t), y, t).
///
/// Implementations must be usable from several threads at once.
pub trait ScoreModel: Send + Sync {
    fn evaluate(&self, xt: &SpectroTensor, y: &SpectroTensor, t: Time) -> Result<SpectroTensor>;
}

impl<F> ScoreModel for F
where
    F: Fn(&SpectroTensor, &SpectroTensor, Time) -> Result<SpectroTensor> + Send + Sync,
{
    fn evaluate(&self, xt: &SpectroTensor, y: &SpectroTensor, t: Time) -> Result<SpectroTensor> {
        self(xt, y, t)
    }
}

/// The exact conditional score, which needs the clean reference.
///
/// Only meaningful for validating samplers and losses.
#[derive(Clone, Debug)]
pub struct ConditionalOracle<S> {
    x0: SpectroTensor,
    schedule: S,
}

impl<S: Schedule> ConditionalOracle<S> {
    pub fn new(x0: SpectroTensor, schedule: S) -> Self {
        Self { x0, schedule }
    }
}

impl<S: Schedule> ScoreModel for ConditionalOracle<S> {
    fn evaluate(&self, xt: &SpectroTensor, y: &SpectroTensor, t: Time) -> Result<SpectroTensor> {
        conditional_score(xt, &self.x0, y, &self.schedule, t)
    }
}

/// θ ≡ 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroScore;

impl ScoreModel for ZeroScore {
    fn evaluate(&self, xt: &SpectroTensor, _y: &SpectroTensor, _t: Time) -> Result<SpectroTensor> {
        let (f, n) = xt.shape();
        Ok(SpectroTensor::zeros(f, n))
    }
}

/// (1/B) Σ_b ‖G(t_b) θ(x_b(t_b)) + z_b‖², summed over every entry of both channels.
pub fn batch_loss<S, M>(batch: &[TrainingExample], s: &S, model: &M) -> Result<f64>
where
    S: Schedule + ?Sized,
    M: ScoreModel + ?Sized,
{
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let total = batch
        .par_iter()
        .map(|ex| example_loss(ex, s, model))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<f64>();
    Ok(total / batch.len() as f64)
}

/// ‖G(t) θ(x(t)) + z‖² for a single example.
pub fn example_loss<S, M>(ex: &TrainingExample, s: &S, model: &M) -> Result<f64>
where
    S: Schedule + ?Sized,
    M: ScoreModel + ?Sized,
{
    let theta = model.evaluate(&ex.xt, &ex.y, ex.t)?;
    ex.xt.check_same_shape(&theta)?;
    Ok(theta.lin_comb(s.big_g(ex.t), &ex.z, 1.0)?.norm_sq())
}

/// Noise-to-signal level of x(t) near t = 0, in dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrOfT {
    /// 10 log₁₀ G²(t)
    pub exact: f64,
    /// 10 log₁₀(β_min t)
    pub approx: f64,
}

pub fn snr_of_t(s: &VpSchedule, t: f64) -> Result<SnrOfT> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::Domain {
            what: "t",
            value: t,
            domain: "(0, 1]",
        });
    }
    let tt = Time::new(t)?;
    let beta_min = s.beta_schedule().beta_min();
    Ok(SnrOfT {
        exact: 10.0 * s.big_g_sq(tt).log10(),
        approx: 10.0 * (beta_min.log10() + t.log10()),
    })
}

/// Inputs available when instantiating a score model for one utterance.
pub struct ModelContext<'a> {
    pub schedule: &'a ScheduleKind,
    /// Clean reference, when the caller has one (validation runs only).
    pub clean: Option<&'a SpectroTensor>,
}

pub type ScoreModelFactory =
    Box<dyn Fn(&ModelContext<'_>) -> Result<Box<dyn ScoreModel>> + Send + Sync>;

/// Named score-model constructors. A learned model registers here.
pub struct ScoreModelRegistry {
    factories: BTreeMap<String, ScoreModelFactory>,
}

impl ScoreModelRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// Registry with the built-in `oracle` and `zero` models.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("oracle", |ctx: &ModelContext<'_>| {
            let clean = ctx
                .clean
                .ok_or_else(|| Error::Model("the oracle score needs the clean reference".into()))?;
            Ok(Box::new(ConditionalOracle::new(clean.clone(), ctx.schedule.clone()))
                as Box<dyn ScoreModel>)
        });
        r.register("zero", |_: &ModelContext<'_>| {
            Ok(Box::new(ZeroScore) as Box<dyn ScoreModel>)
        });
        r
    }

    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn(&ModelContext<'_>) -> Result<Box<dyn ScoreModel>> + Send + Sync + 'static,
    {
        self.factories.insert(name.into(), Box::new(factory));
    }

    pub fn build(&self, name: &str, ctx: &ModelContext<'_>) -> Result<Box<dyn ScoreModel>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::Model(format!("no score model registered as {name:?}")))?;
        factory(ctx)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }
}

impl Default for ScoreModelRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for ScoreModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.factories.keys()).finish()
    }
}
