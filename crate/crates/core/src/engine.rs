//! Differential evolution (rand/1/bin) over a dynamic constrained instance.
//!
//! The environment swaps constraint frames behind the optimizer's back as
//! the trial-evaluation counter crosses the clock thresholds. The optimizer
//! only learns of a change by re-evaluating its two sentinel individuals,
//! then reacts by re-initializing the population. Sentinel and
//! re-initialization evaluations are free: the counter tracks trial vectors
//! alone.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSchedule, Frame};
use crate::error::{Error, Result};
use crate::handlers::{EpsilonParams, HandlerKind, HandlerState};
use crate::objectives::{BoxBounds, ObjectiveKind};

/// Detection threshold for sentinel re-evaluation differences.
pub const CHANGE_DETECTION_TOLERANCE: f64 = 1e-12;

/// Core DE parameters. The mutation scale is re-drawn uniformly from
/// `[f_low, f_high]` for every trial vector.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub np: usize,
    pub cr: f64,
    pub f_low: f64,
    pub f_high: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            np: 20,
            cr: 0.2,
            f_low: 0.2,
            f_high: 0.8,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.np < 4 {
            return Err(Error::config(format!(
                "rand/1 mutation needs np >= 4, got {}",
                self.np
            )));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::config(format!("cr must lie in [0, 1], got {}", self.cr)));
        }
        if !self.f_low.is_finite() || !self.f_high.is_finite() || self.f_low > self.f_high {
            return Err(Error::config(format!(
                "mutation scale range [{}, {}] is invalid",
                self.f_low, self.f_high
            )));
        }
        Ok(())
    }
}

/// Population member with its cached evaluation.
#[derive(Debug, Clone)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: f64,
    pub phi: f64,
    /// Time index presented by the environment when `f` and `phi` were
    /// computed. Values go stale when a change slips past the sentinels.
    pub evaluated_at: usize,
}

/// A static objective paired with a constraint schedule.
#[derive(Debug, Clone)]
pub struct Instance {
    pub objective: ObjectiveKind,
    pub schedule: ConstraintSchedule,
}

impl Instance {
    pub fn new(objective: ObjectiveKind, schedule: ConstraintSchedule) -> Result<Self> {
        schedule.validate()?;
        Ok(Instance {
            objective,
            schedule,
        })
    }

    pub fn dimension(&self) -> usize {
        self.schedule.dimension
    }

    pub fn bounds(&self) -> BoxBounds {
        self.schedule.bounds
    }

    /// Objective and violation of `x` under the frame active at time `t`.
    pub fn evaluate(&self, x: &[f64], t: usize) -> (f64, f64) {
        assert_eq!(x.len(), self.dimension(), "point/instance dimension mismatch");
        (
            self.objective.evaluate(x),
            self.schedule.frame(t).sum_violation(x),
        )
    }

    fn individual(&self, x: Vec<f64>, t: usize) -> Individual {
        let (f, phi) = self.evaluate(&x, t);
        Individual {
            x,
            f,
            phi,
            evaluated_at: t,
        }
    }
}

/// Uniform positions over the box, the shared initializer for fresh
/// populations.
pub fn sample_population(
    np: usize,
    dimension: usize,
    bounds: BoxBounds,
    rng: &mut impl Rng,
) -> Vec<Vec<f64>> {
    (0..np)
        .map(|_| {
            (0..dimension)
                .map(|_| rng.random_range(bounds.lower..=bounds.upper))
                .collect()
        })
        .collect()
}

fn init_population(instance: &Instance, t: usize, np: usize, rng: &mut impl Rng) -> Vec<Individual> {
    sample_population(np, instance.dimension(), instance.bounds(), rng)
        .into_iter()
        .map(|x| instance.individual(x, t))
        .collect()
}

/// rand/1 mutant for slot `i`: base plus scaled difference of two others,
/// all three distinct from each other and from `i`.
pub fn mutate(pop: &[Individual], i: usize, f: f64, rng: &mut impl Rng) -> Vec<f64> {
    let np = pop.len();
    assert!(np >= 4, "rand/1 mutation needs at least 4 individuals");
    let mut pick = |taken: &[usize]| loop {
        let r = rng.random_range(0..np);
        if r != i && !taken.contains(&r) {
            return r;
        }
    };
    let r0 = pick(&[]);
    let r1 = pick(&[r0]);
    let r2 = pick(&[r0, r1]);
    pop[r0]
        .x
        .iter()
        .zip(&pop[r1].x)
        .zip(&pop[r2].x)
        .map(|((&b, &p), &q)| b + f * (p - q))
        .collect()
}

/// Binomial crossover: each gene comes from the mutant with probability
/// `cr`, and one uniformly chosen position is always taken from the mutant.
pub fn crossover(target: &[f64], mutant: &[f64], cr: f64, rng: &mut impl Rng) -> Vec<f64> {
    assert_eq!(target.len(), mutant.len());
    let j_rand = rng.random_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&t, &m))| {
            let from_mutant = rng.random::<f64>() < cr || j == j_rand;
            if from_mutant {
                m
            } else {
                t
            }
        })
        .collect()
}

/// Re-evaluate the sentinels against `frame`; any cached objective or
/// violation drifting beyond the tolerance means the environment changed.
pub fn detect_change(sentinels: &[&Individual], frame: &Frame, objective: ObjectiveKind) -> bool {
    sentinels.iter().any(|s| {
        let f = objective.evaluate(&s.x);
        let phi = frame.sum_violation(&s.x);
        (f - s.f).abs() > CHANGE_DETECTION_TOLERANCE
            || (phi - s.phi).abs() > CHANGE_DETECTION_TOLERANCE
    })
}

/// Reaction to a detected change: a fresh uniform population evaluated
/// against the new frame, with adaptive handler state re-seeded from it.
pub fn react_to_change(
    instance: &Instance,
    t: usize,
    de: &DeConfig,
    params: &EpsilonParams,
    handler: &mut HandlerState,
    pop: &mut Vec<Individual>,
    rng: &mut impl Rng,
) {
    *pop = init_population(instance, t, de.np, rng);
    let violations: Vec<f64> = pop.iter().map(|ind| ind.phi).collect();
    // The allowance decay keeps the whole-run horizon; only its starting
    // level is re-seeded from the fresh population.
    let horizon = generations_per_period(de, instance.schedule.clock.total_budget());
    handler.on_change(params, &violations, horizon);
}

fn generations_per_period(de: &DeConfig, period_evals: u64) -> u64 {
    (period_evals / de.np as u64).max(1)
}

/// One generation's summary, written as one trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenRecord {
    pub generation: u64,
    /// Cumulative trial evaluations after this generation.
    pub eval_count: u64,
    /// Time index presented by the environment at the generation start.
    pub time_index: usize,
    /// Objective of the best individual under the run's handler.
    pub best_f: f64,
    /// Violation of that same individual.
    pub best_phi: f64,
    /// Worst objective in the population.
    pub worst_f: f64,
    /// Objective entering the per-generation error: the best individual's
    /// objective when that individual is feasible, the worst objective in
    /// the population otherwise.
    pub error_term: f64,
}

/// Best-by-handler solution at the last generation of one time period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalBest {
    pub t: usize,
    pub f: f64,
    pub phi: f64,
}

/// Full per-generation log of one run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub handler: HandlerKind,
    pub seed: u64,
    pub records: Vec<GenRecord>,
    pub final_bests: Vec<FinalBest>,
}

impl RunTrace {
    /// Rebuild the trace from raw records; the final best of each observed
    /// time index is the best-by-handler row of its last generation.
    pub fn from_records(handler: HandlerKind, seed: u64, records: Vec<GenRecord>) -> Self {
        let mut final_bests: Vec<FinalBest> = Vec::new();
        for r in &records {
            let fb = FinalBest {
                t: r.time_index,
                f: r.best_f,
                phi: r.best_phi,
            };
            match final_bests.last_mut() {
                Some(last) if last.t == r.time_index => *last = fb,
                _ => final_bests.push(fb),
            }
        }
        RunTrace {
            handler,
            seed,
            records,
            final_bests,
        }
    }

    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for record in &self.records {
            writer.serialize(record).map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(
        path: impl AsRef<std::path::Path>,
        handler: HandlerKind,
        seed: u64,
    ) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let mut records = Vec::new();
        for row in reader.deserialize() {
            records.push(row.map_err(|e| Error::csv(path, e))?);
        }
        Ok(Self::from_records(handler, seed, records))
    }
}

/// Run DE under `handler` until the trial budget is exhausted.
///
/// Aligned clocks (population size dividing the buffer and tau, the default
/// grid) consume the budget exactly; otherwise the final generation runs to
/// completion past it.
pub fn run(
    instance: &Instance,
    handler_kind: HandlerKind,
    params: &EpsilonParams,
    de: &DeConfig,
    seed: u64,
) -> Result<RunTrace> {
    de.validate()?;
    let clock = instance.schedule.clock;
    let budget = clock.total_budget();
    if budget == 0 {
        return Err(Error::config("clock budget is zero, nothing to run"));
    }
    let bounds = instance.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evals: u64 = 0;

    let t0 = clock.time_index(0);
    let mut pop = init_population(instance, t0, de.np, &mut rng);
    let violations: Vec<f64> = pop.iter().map(|ind| ind.phi).collect();
    let mut handler = HandlerState::new(
        handler_kind,
        params,
        &violations,
        generations_per_period(de, budget),
    );

    let mut records: Vec<GenRecord> = Vec::new();
    let mut generation: u64 = 0;
    while evals < budget {
        generation += 1;
        let t_now = clock.time_index(evals);
        let sentinels = [&pop[0], &pop[de.np / 2]];
        if detect_change(&sentinels, instance.schedule.frame(t_now), instance.objective) {
            react_to_change(instance, t_now, de, params, &mut handler, &mut pop, &mut rng);
        }

        // Winners replace their slot immediately (Algorithm 1 keeps a single
        // population array), so later mutants in the same generation already
        // draw from them.
        let mut pairs: Vec<(f64, f64)> = pop.iter().map(|ind| (ind.f, ind.phi)).collect();
        for i in 0..de.np {
            let f_scale = rng.random_range(de.f_low..=de.f_high);
            let mutant = mutate(&pop, i, f_scale, &mut rng);
            let mut trial_x = crossover(&pop[i].x, &mutant, de.cr, &mut rng);
            bounds.clamp_slice(&mut trial_x);
            let t_eval = clock.time_index(evals);
            let trial = instance.individual(trial_x, t_eval);
            evals += 1;
            if handler.select(i, (trial.f, trial.phi), &pairs) {
                pairs[i] = (trial.f, trial.phi);
                pop[i] = trial;
            }
        }
        let best = pairs[handler.best_index(&pairs)];
        let worst_f = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        // An infeasible incumbent forfeits its objective: the error tracks
        // the population's worst instead, so handlers that park on
        // attractive infeasible points pay for it.
        let error_term = if best.1 == 0.0 { best.0 } else { worst_f };
        records.push(GenRecord {
            generation,
            eval_count: evals,
            time_index: t_now,
            best_f: best.0,
            best_phi: best.1,
            worst_f,
            error_term,
        });
        handler.on_generation_end();
    }

    Ok(RunTrace::from_records(handler_kind, seed, records))
}
