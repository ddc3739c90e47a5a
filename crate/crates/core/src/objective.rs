//! The nine benchmark functions used to exercise the optimizer.
//!
//! All functions are minimized over a symmetric box and have a minimum value
//! of zero. Quartic adds one uniform draw from `[0, 1)` per evaluation, so it
//! takes its random source from the caller.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIMENSION: usize = 30;

/// Benchmark function identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Sphere,
    Griewank,
    Schwefel,
    Quartic,
    Rosenbrock,
    Yang,
    Zakharov,
    Step,
    Rastrigin,
}

impl Objective {
    pub const ALL: [Objective; 9] = [
        Objective::Sphere,
        Objective::Griewank,
        Objective::Schwefel,
        Objective::Quartic,
        Objective::Rosenbrock,
        Objective::Yang,
        Objective::Zakharov,
        Objective::Step,
        Objective::Rastrigin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Objective::Sphere => "Sphere",
            Objective::Griewank => "Griewank",
            Objective::Schwefel => "Schwefel",
            Objective::Quartic => "Quartic",
            Objective::Rosenbrock => "Rosenbrock",
            Objective::Yang => "Yang",
            Objective::Zakharov => "Zakharov",
            Objective::Step => "Step",
            Objective::Rastrigin => "Rastrigin",
        }
    }

    /// Half-width of the symmetric search box.
    pub fn half_range(self) -> f64 {
        match self {
            Objective::Sphere | Objective::Rastrigin => 5.12,
            Objective::Griewank => 600.0,
            Objective::Schwefel => 10.0,
            Objective::Quartic | Objective::Step => 100.0,
            Objective::Rosenbrock | Objective::Zakharov => 5.0,
            Objective::Yang => 2.0 * PI,
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Objective::Quartic)
    }

    /// Default `spec` at the given dimension.
    pub fn spec(self, dimension: usize) -> ObjectiveSpec {
        ObjectiveSpec::new(self, dimension)
    }

    /// The noise-free part of the function.
    fn deterministic_value(self, x: &[f64]) -> f64 {
        match self {
            Objective::Sphere => x.iter().map(|v| v * v).sum(),
            Objective::Griewank => {
                let sum: f64 = x.iter().map(|v| v * v / 4000.0).sum();
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                sum - prod + 1.0
            }
            Objective::Schwefel => {
                let sum: f64 = x.iter().map(|v| v.abs()).sum();
                let prod: f64 = x.iter().map(|v| v.abs()).product();
                sum + prod
            }
            Objective::Quartic => x
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * v.powi(4))
                .sum(),
            Objective::Rosenbrock => x
                .windows(2)
                .map(|w| (w[0] - 1.0).powi(2) + 100.0 * (w[1] - w[0] * w[0]).powi(2))
                .sum(),
            Objective::Yang => {
                let abs_sum: f64 = x.iter().map(|v| v.abs()).sum();
                let sin_sum: f64 = x.iter().map(|v| (v * v).sin()).sum();
                abs_sum * (-sin_sum).exp()
            }
            Objective::Zakharov => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                let weighted: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (i + 1) as f64 * v / 2.0)
                    .sum();
                sq + weighted.powi(2) + weighted.powi(4)
            }
            Objective::Step => x.iter().map(|v| (v + 0.5).floor().powi(2)).sum(),
            Objective::Rastrigin => x
                .iter()
                .map(|v| v * v - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum(),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = Error;

    /// Case-insensitive; "Step Function" is accepted as an alias for Step.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim();
        if key.eq_ignore_ascii_case("step function") || key.eq_ignore_ascii_case("step_function") {
            return Ok(Objective::Step);
        }
        Objective::ALL
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(key))
            .ok_or_else(|| Error::UnknownObjective(s.to_string()))
    }
}

/// A benchmark function bound to a dimension and search box.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub objective: Objective,
    pub dimension: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub known_min_value: f64,
    /// Point attaining `known_min_value`. For Quartic this is the minimizer of
    /// the noise-free part; for Step it is one point of the flat minimal region.
    pub known_minimizer: Option<Vec<f64>>,
    pub stochastic: bool,
}

impl ObjectiveSpec {
    pub fn new(objective: Objective, dimension: usize) -> Self {
        let half = objective.half_range();
        let minimizer = match objective {
            Objective::Rosenbrock => vec![1.0; dimension],
            _ => vec![0.0; dimension],
        };
        Self {
            objective,
            dimension,
            lower_bound: -half,
            upper_bound: half,
            known_min_value: 0.0,
            known_minimizer: Some(minimizer),
            stochastic: objective.is_stochastic(),
        }
    }

    pub fn by_name(name: &str, dimension: usize) -> Result<Self> {
        let spec = Self::new(name.parse()?, dimension);
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> &'static str {
        self.objective.name()
    }

    pub fn width(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if !(self.lower_bound < self.upper_bound) {
            return Err(Error::invalid(
                "bounds",
                format!(
                    "lower {} must be below upper {}",
                    self.lower_bound, self.upper_bound
                ),
            ));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { index, value });
        }
        Ok(())
    }

    /// Evaluates the function at `x`. `rng` is only drawn from for Quartic.
    pub fn evaluate<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        self.check_input(x)?;
        let value = self.objective.deterministic_value(x);
        if self.stochastic {
            Ok(value + rng.gen::<f64>())
        } else {
            Ok(value)
        }
    }

    /// Evaluates the function without its noise term (identical to
    /// [`evaluate`](Self::evaluate) for everything except Quartic).
    pub fn evaluate_deterministic(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.objective.deterministic_value(x))
    }

    pub fn clamp_into(&self, x: &mut [f64]) {
        for v in x {
            *v = v.clamp(self.lower_bound, self.upper_bound);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .all(|v| (self.lower_bound..=self.upper_bound).contains(v))
    }
}

/// All nine benchmarks at the default dimension.
pub fn list_suite() -> Vec<ObjectiveSpec> {
    Objective::ALL
        .into_iter()
        .map(|o| ObjectiveSpec::new(o, DEFAULT_DIMENSION))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn eval(o: Objective, x: &[f64]) -> f64 {
        o.spec(x.len()).evaluate(x, &mut rng()).unwrap()
    }

    #[test]
    fn sphere_values() {
        assert_eq!(eval(Objective::Sphere, &[0.0; 30]), 0.0);
        assert_eq!(eval(Objective::Sphere, &[1.0; 30]), 30.0);
    }

    #[test]
    fn rosenbrock_values() {
        assert_eq!(eval(Objective::Rosenbrock, &[1.0; 30]), 0.0);
        assert_eq!(eval(Objective::Rosenbrock, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn schwefel_step_rastrigin() {
        assert_eq!(eval(Objective::Schwefel, &[1.0, 1.0]), 3.0);
        assert_eq!(eval(Objective::Step, &[0.4, -0.4]), 0.0);
        assert_eq!(eval(Objective::Step, &[0.5, -0.6]), 2.0);
        assert_eq!(eval(Objective::Rastrigin, &[0.0; 30]), 0.0);
    }

    #[test]
    fn quartic_at_origin_is_pure_noise() {
        let spec = Objective::Quartic.spec(30);
        let mut r = rng();
        for _ in 0..100 {
            let v = spec.evaluate(&[0.0; 30], &mut r).unwrap();
            assert!((0.0..1.0).contains(&v));
        }
        assert_eq!(spec.evaluate_deterministic(&[0.0; 30]).unwrap(), 0.0);
    }

    #[test]
    fn griewank_matches_high_precision_value() {
        // 2/4000 - cos(1) cos(1/sqrt 2) + 1 at 40 digits
        let expected = 0.589_738_091_176_242_2_f64;
        assert!((eval(Objective::Griewank, &[1.0, 1.0]) - expected).abs() < 1e-15);
    }

    #[test]
    fn zakharov_and_yang_small_cases() {
        // s = 1/2 + 2/2 = 1.5 -> 2 + 2.25 + 5.0625
        assert!((eval(Objective::Zakharov, &[1.0, 1.0]) - 9.3125).abs() < 1e-12);
        let y = eval(Objective::Yang, &[1.0, -1.0]);
        assert!((y - 2.0 * (-2.0 * 1f64.sin()).exp()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_and_non_finite_are_errors() {
        let spec = Objective::Sphere.spec(3);
        assert!(matches!(
            spec.evaluate(&[0.0; 2], &mut rng()),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
        assert!(matches!(
            spec.evaluate(&[0.0, f64::NAN, 0.0], &mut rng()),
            Err(Error::NonFiniteInput { index: 1, .. })
        ));
    }

    #[test]
    fn names_parse_case_insensitively() {
        assert_eq!("sphere".parse::<Objective>().unwrap(), Objective::Sphere);
        assert_eq!(
            "RASTRIGIN".parse::<Objective>().unwrap(),
            Objective::Rastrigin
        );
        assert_eq!(
            "Step Function".parse::<Objective>().unwrap(),
            Objective::Step
        );
        assert!("ackley".parse::<Objective>().is_err());
    }

    #[test]
    fn suite_contents() {
        let suite = list_suite();
        assert_eq!(suite.len(), 9);
        let names: Vec<_> = suite.iter().map(|s| s.name()).collect();
        assert_eq!(
            names,
            [
                "Sphere",
                "Griewank",
                "Schwefel",
                "Quartic",
                "Rosenbrock",
                "Yang",
                "Zakharov",
                "Step",
                "Rastrigin"
            ]
        );
        assert!(suite
            .iter()
            .all(|s| s.dimension == 30 && s.validate().is_ok()));
        assert_eq!((suite[0].lower_bound, suite[0].upper_bound), (-5.12, 5.12));
        assert_eq!(
            (suite[1].lower_bound, suite[1].upper_bound),
            (-600.0, 600.0)
        );
        assert_eq!(suite.iter().filter(|s| s.stochastic).count(), 1);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(ObjectiveSpec::by_name("sphere", 0).is_err());
    }
}
