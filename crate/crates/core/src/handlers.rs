//! Constraint handling strategies for the selection duel.
//!
//! Every strategy answers one question per duel: does the trial replace the
//! target? Candidates are summarized as (objective, violation) pairs; ties
//! always keep the incumbent.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HandlerKind {
    Feasibility,
    Penalty,
    Epsilon,
}

impl HandlerKind {
    pub const ALL: [HandlerKind; 3] = [
        HandlerKind::Feasibility,
        HandlerKind::Penalty,
        HandlerKind::Epsilon,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HandlerKind::Feasibility => "feasibility",
            HandlerKind::Penalty => "penalty",
            HandlerKind::Epsilon => "epsilon",
        }
    }
}

impl fmt::Display for HandlerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HandlerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "feasibility" => Ok(HandlerKind::Feasibility),
            "penalty" => Ok(HandlerKind::Penalty),
            "epsilon" => Ok(HandlerKind::Epsilon),
            other => Err(Error::config(format!(
                "unknown handler '{other}', expected feasibility|penalty|epsilon"
            ))),
        }
    }
}

/// Feasibility rules over (objective, violation) pairs. Less means the
/// first argument is preferred: feasible beats infeasible, two feasible
/// points compare by objective, two infeasible points by violation.
pub fn feasibility_compare(a: (f64, f64), b: (f64, f64)) -> Ordering {
    match (a.1 == 0.0, b.1 == 0.0) {
        (true, true) => a.0.total_cmp(&b.0),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.1.total_cmp(&b.1),
    }
}

/// Relaxed feasibility rules: violations up to `eps` count as feasible.
/// With `eps = 0` this coincides with `feasibility_compare` on every input.
pub fn epsilon_compare(a: (f64, f64), b: (f64, f64), eps: f64) -> Ordering {
    match (a.1 <= eps, b.1 <= eps) {
        (true, true) => a.0.total_cmp(&b.0),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => a.1.total_cmp(&b.1),
    }
}

/// Normalization context for the adaptive penalty: feasible fraction and
/// objective/violation ranges of a reference point set.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyStats {
    rf: f64,
    f_min: f64,
    f_span: f64,
    phi_max: f64,
}

impl PenaltyStats {
    /// Statistics of `points`; the set every score is normalized against.
    pub fn from_points(points: &[(f64, f64)]) -> Self {
        assert!(!points.is_empty(), "penalty stats need at least one point");
        let n = points.len() as f64;
        let feasible = points.iter().filter(|p| p.1 == 0.0).count() as f64;
        let f_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let f_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        PenaltyStats {
            rf: feasible / n,
            f_min,
            f_span: f_max - f_min,
            phi_max: points.iter().map(|p| p.1).fold(0.0, f64::max),
        }
    }

    /// Adaptive penalty score of one (objective, violation) point against
    /// these statistics. Objectives and violations are normalized to the
    /// reference ranges, blended by the feasible fraction rf: the more
    /// feasible points exist, the more infeasible objectives are penalized,
    /// and with no feasible point the score reduces to the normalized
    /// violation. Points outside the reference ranges score off-scale, so a
    /// trial below the reference minimum can undercut every feasible score.
    /// Lower is better.
    pub fn score(&self, point: (f64, f64)) -> f64 {
        let (f, phi) = point;
        let f_hat = if self.f_span > 0.0 {
            (f - self.f_min) / self.f_span
        } else {
            0.0
        };
        let v = if self.phi_max > 0.0 {
            phi / self.phi_max
        } else {
            0.0
        };
        let d = if self.rf == 0.0 {
            v
        } else {
            (f_hat * f_hat + v * v).sqrt()
        };
        let x = if self.rf == 0.0 { 0.0 } else { v };
        let y = if phi == 0.0 { 0.0 } else { f_hat };
        d + (1.0 - self.rf) * x + self.rf * y
    }
}

/// Adaptive penalty fitness of each point in a set, normalized against the
/// set itself. Lower is better.
pub fn penalty_fitness(points: &[(f64, f64)]) -> Vec<f64> {
    let stats = PenaltyStats::from_points(points);
    points.iter().map(|&p| stats.score(p)).collect()
}

/// Tuning knobs for the epsilon schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EpsilonParams {
    /// Fraction of the population whose violation seeds the initial level.
    pub theta_frac: f64,
    /// Fraction of the decay horizon after which the level reaches 0.
    pub tc_frac: f64,
    /// Decay exponent.
    pub cp: f64,
}

impl Default for EpsilonParams {
    fn default() -> Self {
        EpsilonParams {
            theta_frac: 0.2,
            tc_frac: 0.2,
            cp: 5.0,
        }
    }
}

/// Decaying violation allowance. A reset seeds the level from the current
/// population while the decay keeps its horizon, so with change periods much
/// shorter than the horizon the allowance never reaches zero between resets:
/// `eps(g) = eps0 * (1 - g/tc)^cp` for g < tc, else 0.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonState {
    epsilon0: f64,
    tc: u64,
    cp: f64,
    gens_since_reset: u64,
}

impl EpsilonState {
    /// Seed the level from the population's violations: `eps0` is the
    /// violation of the theta-th least violating individual. The level
    /// decays to zero over the first `tc_frac * horizon_generations`
    /// generations after the reset.
    pub fn reset(violations: &[f64], horizon_generations: u64, params: &EpsilonParams) -> Self {
        assert!(!violations.is_empty(), "epsilon reset needs a population");
        let mut sorted = violations.to_vec();
        sorted.sort_by(f64::total_cmp);
        let theta = ((params.theta_frac * sorted.len() as f64).ceil() as usize)
            .clamp(1, sorted.len());
        let tc = (params.tc_frac * horizon_generations as f64).ceil() as u64;
        EpsilonState {
            epsilon0: sorted[theta - 1],
            tc: tc.max(1),
            cp: params.cp,
            gens_since_reset: 0,
        }
    }

    pub fn current(&self) -> f64 {
        if self.gens_since_reset >= self.tc {
            0.0
        } else {
            let frac = 1.0 - self.gens_since_reset as f64 / self.tc as f64;
            self.epsilon0 * frac.powf(self.cp)
        }
    }

    pub fn advance_generation(&mut self) {
        self.gens_since_reset += 1;
    }
}

/// Per-run handler state driving the selection duel.
#[derive(Debug, Clone)]
pub enum HandlerState {
    Feasibility,
    Penalty,
    Epsilon(EpsilonState),
}

impl HandlerState {
    pub fn new(
        kind: HandlerKind,
        params: &EpsilonParams,
        violations: &[f64],
        horizon_generations: u64,
    ) -> Self {
        match kind {
            HandlerKind::Feasibility => HandlerState::Feasibility,
            HandlerKind::Penalty => HandlerState::Penalty,
            HandlerKind::Epsilon => {
                HandlerState::Epsilon(EpsilonState::reset(violations, horizon_generations, params))
            }
        }
    }

    pub fn kind(&self) -> HandlerKind {
        match self {
            HandlerState::Feasibility => HandlerKind::Feasibility,
            HandlerState::Penalty => HandlerKind::Penalty,
            HandlerState::Epsilon(_) => HandlerKind::Epsilon,
        }
    }

    /// React to a detected change: adaptive state restarts from the fresh
    /// population.
    pub fn on_change(
        &mut self,
        params: &EpsilonParams,
        violations: &[f64],
        horizon_generations: u64,
    ) {
        if let HandlerState::Epsilon(state) = self {
            *state = EpsilonState::reset(violations, horizon_generations, params);
        }
    }

    pub fn on_generation_end(&mut self) {
        if let HandlerState::Epsilon(state) = self {
            state.advance_generation();
        }
    }

    /// Violation level currently treated as feasible.
    pub fn allowance(&self) -> f64 {
        match self {
            HandlerState::Epsilon(state) => state.current(),
            _ => 0.0,
        }
    }

    /// Decide the duel for population slot `i`. `snapshot` holds the
    /// (objective, violation) pairs of the current population; the penalty
    /// strategy scores target and trial against that population's
    /// statistics, so a trial outside the population's objective range is
    /// scored off-scale rather than re-anchoring the normalization.
    /// Returns true when the trial strictly wins.
    pub fn select(&self, i: usize, trial: (f64, f64), snapshot: &[(f64, f64)]) -> bool {
        let target = snapshot[i];
        match self {
            HandlerState::Feasibility => feasibility_compare(trial, target) == Ordering::Less,
            HandlerState::Epsilon(state) => {
                epsilon_compare(trial, target, state.current()) == Ordering::Less
            }
            HandlerState::Penalty => {
                let stats = PenaltyStats::from_points(snapshot);
                stats.score(trial) < stats.score(target)
            }
        }
    }

    /// Index of the best individual under this strategy. For the penalty
    /// strategy the scores are computed over `points` itself.
    pub fn best_index(&self, points: &[(f64, f64)]) -> usize {
        assert!(!points.is_empty());
        match self {
            HandlerState::Feasibility => (0..points.len())
                .min_by(|&i, &j| feasibility_compare(points[i], points[j]))
                .unwrap(),
            HandlerState::Epsilon(state) => {
                let eps = state.current();
                (0..points.len())
                    .min_by(|&i, &j| epsilon_compare(points[i], points[j], eps))
                    .unwrap()
            }
            HandlerState::Penalty => {
                let fitness = penalty_fitness(points);
                (0..fitness.len())
                    .min_by(|&i, &j| fitness[i].total_cmp(&fitness[j]))
                    .unwrap()
            }
        }
    }
}
