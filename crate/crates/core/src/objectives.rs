//! Static objective functions over a shared box-shaped search space.
//!
//! Every function is a minimization problem whose optimum is 0 at the
//! origin, so raw objective values double as distances from the ideal.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Axis-aligned search box, the same interval in every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lower: f64,
    pub upper: f64,
}

impl BoxBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self, Error> {
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::config(format!(
                "bounds must be finite with lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(BoxBounds { lower, upper })
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn clamp_slice(&self, x: &mut [f64]) {
        for v in x {
            *v = v.clamp(self.lower, self.upper);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lower && v <= self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl Default for BoxBounds {
    fn default() -> Self {
        BoxBounds {
            lower: -5.0,
            upper: 5.0,
        }
    }
}

/// Objective selector. Rosenbrock is shifted by +1 per coordinate so that,
/// like the other three, its minimum sits at the origin with value 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Sphere,
    Rastrigin,
    Ackley,
    Rosenbrock,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::Sphere,
        ObjectiveKind::Rastrigin,
        ObjectiveKind::Ackley,
        ObjectiveKind::Rosenbrock,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Sphere => "sphere",
            ObjectiveKind::Rastrigin => "rastrigin",
            ObjectiveKind::Ackley => "ackley",
            ObjectiveKind::Rosenbrock => "rosenbrock",
        }
    }

    /// Evaluate at `x`. `x` must be non-empty; callers fix the dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert!(!x.is_empty(), "objective evaluated on empty vector");
        match self {
            ObjectiveKind::Sphere => x.iter().map(|v| v * v).sum(),
            ObjectiveKind::Rastrigin => {
                let d = x.len() as f64;
                10.0 * d
                    + x.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
            ObjectiveKind::Ackley => {
                let d = x.len() as f64;
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            ObjectiveKind::Rosenbrock => {
                // Classical Rosenbrock evaluated at z = x + 1, optimum moved
                // from (1, ..., 1) to the origin.
                let z: Vec<f64> = x.iter().map(|v| v + 1.0).collect();
                z.windows(2)
                    .map(|w| {
                        let a = w[1] - w[0] * w[0];
                        let b = 1.0 - w[0];
                        100.0 * a * a + b * b
                    })
                    .sum()
            }
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sphere" => Ok(ObjectiveKind::Sphere),
            "rastrigin" => Ok(ObjectiveKind::Rastrigin),
            "ackley" => Ok(ObjectiveKind::Ackley),
            "rosenbrock" => Ok(ObjectiveKind::Rosenbrock),
            other => Err(Error::config(format!(
                "unknown objective '{other}', expected one of sphere|rastrigin|ackley|rosenbrock"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_functions_are_zero_at_origin() {
        let origin = vec![0.0; 30];
        for kind in ObjectiveKind::ALL {
            let v = kind.evaluate(&origin);
            assert!(v.abs() < 1e-12, "{kind} at origin gave {v}");
        }
    }

    #[test]
    fn sphere_known_value() {
        assert_eq!(ObjectiveKind::Sphere.evaluate(&[1.0, 2.0, 3.0]), 14.0);
    }

    #[test]
    fn rastrigin_known_value() {
        // 10 + 0.25 - 10*cos(pi) = 20.25
        let v = ObjectiveKind::Rastrigin.evaluate(&[0.5]);
        assert!((v - 20.25).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn ackley_known_value() {
        // One coordinate at 1: -20*exp(-0.2) - exp(cos(2*pi)) + 20 + e
        let expect = -20.0 * (-0.2f64).exp() - 1.0f64.exp() + 20.0 + E;
        let v = ObjectiveKind::Ackley.evaluate(&[1.0]);
        assert!((v - expect).abs() < 1e-12, "got {v}, expected {expect}");
    }

    #[test]
    fn rosenbrock_known_value() {
        // x = (1, 1) evaluates the classical function at z = (2, 2):
        // 100*(2 - 4)^2 + (1 - 2)^2 = 401
        assert_eq!(ObjectiveKind::Rosenbrock.evaluate(&[1.0, 1.0]), 401.0);
    }

    #[test]
    fn functions_are_nonnegative_on_box() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let bounds = BoxBounds::default();
        for _ in 0..500 {
            let x: Vec<f64> = (0..30)
                .map(|_| rng.random_range(bounds.lower..=bounds.upper))
                .collect();
            for kind in ObjectiveKind::ALL {
                let v = kind.evaluate(&x);
                assert!(v >= 0.0, "{kind} went negative: {v}");
            }
        }
    }

    #[test]
    fn bounds_validation_rejects_inverted_interval() {
        assert!(BoxBounds::new(1.0, -1.0).is_err());
        assert!(BoxBounds::new(0.0, f64::NAN).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for kind in ObjectiveKind::ALL {
            assert_eq!(kind.name().parse::<ObjectiveKind>().unwrap(), kind);
        }
        assert!("simplex".parse::<ObjectiveKind>().is_err());
    }

    #[test]
    #[should_panic(expected = "empty vector")]
    fn empty_input_is_a_contract_violation() {
        ObjectiveKind::Sphere.evaluate(&[]);
    }
}
