//! Objective functions.
//!
//! An [`Objective`] is a possibly stochastic scalar function over a box. Noisy
//! objectives draw from the stream passed to [`Objective::evaluate`]; nothing
//! here touches global random state.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("expected a {expected}-dimensional point, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point is outside the function domain: {0}")]
    Domain(String),
    #[error("invalid objective spec: {0}")]
    InvalidSpec(String),
    #[error("unknown objective `{0}`")]
    Unknown(String),
    #[error("objective evaluation failed: {0}")]
    Evaluation(String),
}

/// Closed interval `[lo, hi]` of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: String,
    pub dimension: usize,
    pub bounds: Vec<Interval>,
    pub stochastic: bool,
    /// Known global minimum, for diagnostics only.
    pub target: Option<f64>,
}

impl ObjectiveSpec {
    pub fn new(
        name: impl Into<String>,
        bounds: Vec<Interval>,
        stochastic: bool,
        target: Option<f64>,
    ) -> Result<Self, ObjectiveError> {
        let spec = Self {
            name: name.into(),
            dimension: bounds.len(),
            bounds,
            stochastic,
            target,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.dimension == 0 {
            return Err(ObjectiveError::InvalidSpec("dimension must be at least 1".into()));
        }
        if self.bounds.len() != self.dimension {
            return Err(ObjectiveError::InvalidSpec(format!(
                "{} bounds given for dimension {}",
                self.bounds.len(),
                self.dimension
            )));
        }
        for (i, b) in self.bounds.iter().enumerate() {
            if !(b.lo.is_finite() && b.hi.is_finite() && b.lo < b.hi) {
                return Err(ObjectiveError::InvalidSpec(format!(
                    "bound {i} must satisfy lo < hi, got [{}, {}]",
                    b.lo, b.hi
                )));
            }
        }
        Ok(())
    }

    pub fn check_point(&self, x: &[f64]) -> Result<(), ObjectiveError> {
        if x.len() != self.dimension {
            return Err(ObjectiveError::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn widths(&self) -> Vec<f64> {
        self.bounds.iter().map(Interval::width).collect()
    }
}

/// One archived objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub position: Vec<f64>,
    pub value: f64,
    pub iteration: usize,
    pub particle_id: usize,
    /// Random numbers consumed by the objective for this evaluation.
    pub rng_draws: u32,
}

pub trait Objective: Send + Sync {
    fn spec(&self) -> &ObjectiveSpec;

    fn evaluate(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<f64, ObjectiveError>;

    /// Random draws consumed per call to [`evaluate`](Objective::evaluate).
    fn rng_draws(&self) -> u32 {
        0
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn spec(&self) -> &ObjectiveSpec {
        (**self).spec()
    }

    fn evaluate(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        (**self).evaluate(x, rng)
    }

    fn rng_draws(&self) -> u32 {
        (**self).rng_draws()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn spec(&self) -> &ObjectiveSpec {
        (**self).spec()
    }

    fn evaluate(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        (**self).evaluate(x, rng)
    }

    fn rng_draws(&self) -> u32 {
        (**self).rng_draws()
    }
}

fn expect_dim(x: &[f64], n: usize) -> Result<(), ObjectiveError> {
    if x.len() == n {
        Ok(())
    } else {
        Err(ObjectiveError::DimensionMismatch {
            expected: n,
            actual: x.len(),
        })
    }
}

/// `-(1 + cos(12 r)) / (r^2 / 2 + 2)` with `r = |(x, y)|`.
pub fn dropwave(x: &[f64]) -> Result<f64, ObjectiveError> {
    expect_dim(x, 2)?;
    let r2 = x[0] * x[0] + x[1] * x[1];
    Ok(-(1.0 + (12.0 * r2.sqrt()).cos()) / (0.5 * r2 + 2.0))
}

pub fn griewangk(x: &[f64]) -> Result<f64, ObjectiveError> {
    if x.is_empty() {
        return Err(ObjectiveError::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let sum: f64 = x.iter().map(|v| v * v).sum();
    let prod: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
        .product();
    Ok(sum / 4000.0 - prod + 1.0)
}

/// Griewangk plus one `Uniform[0, 1)` draw from `rng`.
pub fn griewangk_noisy(x: &[f64], rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
    let base = griewangk(x)?;
    let u: f64 = rng.random();
    Ok(base + u)
}

/// `sin(120 / x) + cos(60 / y)`.
pub fn stochastic_trig(x: &[f64]) -> Result<f64, ObjectiveError> {
    expect_dim(x, 2)?;
    if x[0] == 0.0 || x[1] == 0.0 {
        return Err(ObjectiveError::Domain(format!(
            "sin(120/x) + cos(60/y) is singular at ({}, {})",
            x[0], x[1]
        )));
    }
    Ok((120.0 / x[0]).sin() + (60.0 / x[1]).cos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    Dropwave,
    Griewangk,
    GriewangkNoise,
    StochasticTrig,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] = [
        Benchmark::Dropwave,
        Benchmark::Griewangk,
        Benchmark::GriewangkNoise,
        Benchmark::StochasticTrig,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::Dropwave => "dropwave",
            Benchmark::Griewangk => "griewangk",
            Benchmark::GriewangkNoise => "griewangk_noise",
            Benchmark::StochasticTrig => "stochastic_trig",
        }
    }

    /// Dropwave and the trigonometric function are 2-D only.
    pub fn fixed_dimension(&self) -> Option<usize> {
        match self {
            Benchmark::Dropwave | Benchmark::StochasticTrig => Some(2),
            _ => None,
        }
    }

    pub fn default_interval(&self) -> Interval {
        match self {
            Benchmark::Dropwave => Interval::new(-5.12, 5.12),
            Benchmark::Griewangk | Benchmark::GriewangkNoise => Interval::new(-600.0, 600.0),
            Benchmark::StochasticTrig => Interval::new(1.0, 100.0),
        }
    }

    pub fn target(&self) -> Option<f64> {
        match self {
            Benchmark::Dropwave => Some(-1.0),
            Benchmark::Griewangk => Some(0.0),
            _ => None,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Benchmark::GriewangkNoise)
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ObjectiveError::Unknown(s.to_string()))
    }
}

/// A [`Benchmark`] bound to a concrete box.
#[derive(Debug, Clone)]
pub struct BenchmarkObjective {
    kind: Benchmark,
    spec: ObjectiveSpec,
}

impl BenchmarkObjective {
    /// Uses the conventional domain of the function.
    pub fn new(kind: Benchmark, dimension: usize) -> Result<Self, ObjectiveError> {
        Self::with_bounds(kind, vec![kind.default_interval(); dimension])
    }

    pub fn with_bounds(kind: Benchmark, bounds: Vec<Interval>) -> Result<Self, ObjectiveError> {
        if let Some(n) = kind.fixed_dimension() {
            if bounds.len() != n {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: n,
                    actual: bounds.len(),
                });
            }
        }
        if kind == Benchmark::StochasticTrig && bounds.iter().any(|b| b.contains(0.0)) {
            return Err(ObjectiveError::InvalidSpec(
                "stochastic_trig bounds must exclude 0".into(),
            ));
        }
        let spec = ObjectiveSpec::new(kind.name(), bounds, kind.is_stochastic(), kind.target())?;
        Ok(Self { kind, spec })
    }

    pub fn kind(&self) -> Benchmark {
        self.kind
    }
}

impl Objective for BenchmarkObjective {
    fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    fn evaluate(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        self.spec.check_point(x)?;
        match self.kind {
            Benchmark::Dropwave => dropwave(x),
            Benchmark::Griewangk => griewangk(x),
            Benchmark::GriewangkNoise => griewangk_noisy(x, rng),
            Benchmark::StochasticTrig => stochastic_trig(x),
        }
    }

    fn rng_draws(&self) -> u32 {
        u32::from(self.kind.is_stochastic())
    }
}

/// Wraps an objective and counts evaluations.
pub struct Counted<O> {
    inner: O,
    count: AtomicU64,
}

impl<O: Objective> Counted<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for Counted<O> {
    fn spec(&self) -> &ObjectiveSpec {
        self.inner.spec()
    }

    fn evaluate(&self, x: &[f64], rng: &mut dyn RngCore) -> Result<f64, ObjectiveError> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x, rng)
    }

    fn rng_draws(&self) -> u32 {
        self.inner.rng_draws()
    }
}

/// Total evaluations seen by a [`Counted`] handle since creation or the last reset.
pub fn count_evaluations<O: Objective>(handle: &Counted<O>) -> u64 {
    handle.count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use std::f64::consts::PI;

    /// Returns the same 64-bit word forever; `random::<f64>()` maps `w` to `(w >> 11) * 2^-53`.
    struct FixedWord(u64);

    impl RngCore for FixedWord {
        fn next_u32(&mut self) -> u32 {
            (self.0 >> 32) as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            for (i, b) in dst.iter_mut().enumerate() {
                *b = self.0.to_le_bytes()[i % 8];
            }
        }
    }

    #[test]
    fn dropwave_origin_and_symmetry() {
        assert_eq!(dropwave(&[0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(dropwave(&[0.3, -1.7]).unwrap(), dropwave(&[-1.7, 0.3]).unwrap());
        assert!(matches!(
            dropwave(&[1.0]),
            Err(ObjectiveError::DimensionMismatch { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn dropwave_at_one_one() {
        // -(1 + cos(12*sqrt(2))) / 3, evaluated with mpmath at 50 digits.
        let expected = -0.232_219_687_461_995_24;
        assert!((dropwave(&[1.0, 1.0]).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn griewangk_known_values() {
        for n in 1..6 {
            assert_eq!(griewangk(&vec![0.0; n]).unwrap(), 0.0);
        }
        let v = griewangk(&[PI]).unwrap();
        assert!((v - (PI * PI / 4000.0 + 2.0)).abs() < 1e-15);
        assert!(griewangk(&[]).is_err());
    }

    #[test]
    fn noisy_griewangk_uses_one_draw() {
        let mut zero = FixedWord(0);
        assert_eq!(griewangk_noisy(&[0.0, 0.0], &mut zero).unwrap(), 0.0);
        let mut half = FixedWord(1 << 63);
        assert_eq!(griewangk_noisy(&[0.0, 0.0], &mut half).unwrap(), 0.5);

        let mut a = rng::stream(3, &[]);
        let mut b = rng::stream(3, &[]);
        let x = [12.0, -40.0];
        assert_eq!(
            griewangk_noisy(&x, &mut a).unwrap(),
            griewangk_noisy(&x, &mut b).unwrap()
        );
        // exactly one draw consumed
        assert_eq!(a.random::<u64>(), b.random::<u64>());
        let mut c = rng::stream(3, &[]);
        let _ = griewangk_noisy(&x, &mut c).unwrap();
        let mut d = rng::stream(3, &[]);
        let _: f64 = d.random();
        assert_eq!(c.random::<u64>(), d.random::<u64>());
    }

    #[test]
    fn stochastic_trig_values() {
        // 120/x = -pi/2, 60/y = pi
        let x = -240.0 / PI;
        let y = 60.0 / PI;
        assert!((stochastic_trig(&[x, y]).unwrap() + 2.0).abs() < 1e-12);
        // 120/x = pi, 60/y = pi/2
        let v = stochastic_trig(&[120.0 / PI, 120.0 / PI]).unwrap();
        assert!(v.abs() < 1e-12);
        assert!(matches!(stochastic_trig(&[0.0, 1.0]), Err(ObjectiveError::Domain(_))));
        assert!(matches!(stochastic_trig(&[1.0, 0.0]), Err(ObjectiveError::Domain(_))));
    }

    #[test]
    fn benchmark_names_round_trip() {
        for b in Benchmark::ALL {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!("rastrigin".parse::<Benchmark>().is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(ObjectiveSpec::new("x", vec![], false, None).is_err());
        assert!(ObjectiveSpec::new("x", vec![Interval::new(1.0, 1.0)], false, None).is_err());
        assert!(BenchmarkObjective::new(Benchmark::Dropwave, 3).is_err());
        assert!(BenchmarkObjective::with_bounds(
            Benchmark::StochasticTrig,
            vec![Interval::new(-1.0, 1.0); 2]
        )
        .is_err());
        let obj = BenchmarkObjective::new(Benchmark::Griewangk, 5).unwrap();
        assert_eq!(obj.spec().dimension, 5);
        let mut r = rng::stream(0, &[]);
        assert!(obj.evaluate(&[0.0; 4], &mut r).is_err());
    }

    #[test]
    fn counter_semantics() {
        let obj = Counted::new(BenchmarkObjective::new(Benchmark::Griewangk, 2).unwrap());
        assert_eq!(count_evaluations(&obj), 0);
        let mut r = rng::stream(0, &[]);
        for _ in 0..3 {
            obj.evaluate(&[1.0, 2.0], &mut r).unwrap();
        }
        assert_eq!(count_evaluations(&obj), 3);
        obj.reset();
        assert_eq!(count_evaluations(&obj), 0);
    }
}
