//! Run quality measures and cross-handler comparisons.
//!
//! The central measure is the modified offline error: the per-generation
//! distance between the best known objective for the active frame and the
//! objective the population can vouch for (its best feasible point, or its
//! worst point while nothing is feasible). Comparisons across handlers use
//! rank statistics throughout because error distributions are heavy-tailed.

use std::cmp::Ordering;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::constraints::{sphere_optimum, ConstraintSchedule, Frame};
use crate::engine::{crossover, mutate, sample_population, DeConfig, Individual, RunTrace};
use crate::error::{Error, Result};
use crate::handlers::feasibility_compare;
use crate::objectives::ObjectiveKind;

/// Total constraint violation of `x` under `frame`.
pub fn sum_violation(frame: &Frame, x: &[f64]) -> f64 {
    frame.sum_violation(x)
}

/// Best objective value known for one time frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestKnownEntry {
    pub time: usize,
    pub objective: f64,
    /// False when the frame admits no feasible point in the box; the
    /// objective then belongs to the least-violating point found.
    pub feasible: bool,
}

/// Per-frame best known objectives for one schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestKnownTable {
    pub entries: Vec<BestKnownEntry>,
}

impl BestKnownTable {
    pub fn get(&self, t: usize) -> Option<&BestKnownEntry> {
        self.entries.iter().find(|e| e.time == t)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    /// Closed-form table for the sphere objective under a single linear
    /// constraint per frame. Exact, so preferred over the search-based
    /// table wherever it applies.
    pub fn analytic_sphere(schedule: &ConstraintSchedule) -> Result<Self> {
        let entries = schedule
            .frames
            .iter()
            .map(|frame| {
                if frame.constraints.len() != 1 {
                    return Err(Error::config(format!(
                        "analytic sphere table needs exactly one constraint per frame, time {} has {}",
                        frame.t,
                        frame.constraints.len()
                    )));
                }
                let opt = sphere_optimum(&frame.constraints[0], schedule.bounds);
                Ok(BestKnownEntry {
                    time: frame.t,
                    objective: opt.value,
                    feasible: opt.feasible,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BestKnownTable { entries })
    }
}

fn lex_compare(a: (f64, f64), b: (f64, f64)) -> Ordering {
    // Violation first, objective as tie-break: the least infeasible point
    // stands in for the optimum when nothing feasible exists.
    a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0))
}

/// Search-based best known table: an independent static DE run per frame
/// under feasibility rules, tracking the lexicographic best over every
/// point it evaluates.
pub fn best_known(
    schedule: &ConstraintSchedule,
    objective: ObjectiveKind,
    evals_per_frame: u64,
    seed: u64,
) -> Result<BestKnownTable> {
    if evals_per_frame == 0 {
        return Err(Error::config("best known search needs a nonzero budget"));
    }
    let entries = schedule
        .frames
        .par_iter()
        .map(|frame| {
            let (f, phi) = static_best(objective, frame, schedule, evals_per_frame, seed);
            BestKnownEntry {
                time: frame.t,
                objective: f,
                feasible: phi == 0.0,
            }
        })
        .collect();
    Ok(BestKnownTable { entries })
}

fn static_best(
    objective: ObjectiveKind,
    frame: &Frame,
    schedule: &ConstraintSchedule,
    evals: u64,
    seed: u64,
) -> (f64, f64) {
    let de = DeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame.t as u64);
    let eval = |x: &[f64]| (objective.evaluate(x), frame.sum_violation(x));
    let mut pop: Vec<Individual> = sample_population(de.np, schedule.dimension, schedule.bounds, &mut rng)
        .into_iter()
        .map(|x| {
            let (f, phi) = eval(&x);
            Individual {
                x,
                f,
                phi,
                evaluated_at: frame.t,
            }
        })
        .collect();
    let mut best = (f64::INFINITY, f64::INFINITY);
    for ind in &pop {
        let pair = (ind.f, ind.phi);
        if lex_compare(pair, best) == Ordering::Less {
            best = pair;
        }
    }
    let gens = evals / de.np as u64;
    for _ in 0..gens {
        let f_scale = rng.random_range(de.f_low..=de.f_high);
        for i in 0..de.np {
            let mutant = mutate(&pop, i, f_scale, &mut rng);
            let mut x = crossover(&pop[i].x, &mutant, de.cr, &mut rng);
            schedule.bounds.clamp_slice(&mut x);
            let (f, phi) = eval(&x);
            let pair = (f, phi);
            if lex_compare(pair, best) == Ordering::Less {
                best = pair;
            }
            if feasibility_compare(pair, (pop[i].f, pop[i].phi)) == Ordering::Less {
                pop[i] = Individual {
                    x,
                    f,
                    phi,
                    evaluated_at: frame.t,
                };
            }
        }
    }
    best
}

/// Mean over generations of the absolute gap between the best known
/// objective of the active frame and the trace's error term.
pub fn modified_offline_error(trace: &RunTrace, table: &BestKnownTable) -> Result<f64> {
    if trace.records.is_empty() {
        return Err(Error::stats("empty trace has no offline error"));
    }
    let mut total = 0.0;
    for record in &trace.records {
        let entry = table.get(record.time_index).ok_or_else(|| {
            Error::stats(format!(
                "best known table has no entry for time {}",
                record.time_index
            ))
        })?;
        total += (entry.objective - record.error_term).abs();
    }
    Ok(total / trace.records.len() as f64)
}

/// Ranks 1..=n with tied items sharing the mean of their positions.
pub fn average_ranks_by<T, F>(items: &[T], cmp: F) -> Vec<f64>
where
    F: Fn(&T, &T) -> Ordering,
{
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| cmp(&items[a], &items[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && cmp(&items[order[start]], &items[order[end]]) == Ordering::Equal {
            end += 1;
        }
        // Positions are 1-based; a tie block spanning positions s+1..=e
        // shares their mean.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Handler ranking across time frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    /// `per_time[t][h]`: rank of handler `h` in frame `t`.
    pub per_time: Vec<Vec<f64>>,
    /// Ranks summed over frames, per handler.
    pub aggregate: Vec<f64>,
    /// Handler indices from best (lowest aggregate) to worst.
    pub order: Vec<usize>,
}

/// Rank handlers within each time frame by violation first and objective
/// second, then order them by the sum of ranks over frames.
pub fn lexicographic_rank(per_time: &[Vec<(f64, f64)>]) -> Result<RankingReport> {
    let handlers = per_time.first().map(|row| row.len()).unwrap_or(0);
    if handlers == 0 {
        return Err(Error::stats("ranking needs at least one handler and one frame"));
    }
    if per_time.iter().any(|row| row.len() != handlers) {
        return Err(Error::stats("ranking rows must cover the same handlers"));
    }
    let per_time_ranks: Vec<Vec<f64>> = per_time
        .iter()
        .map(|row| average_ranks_by(row, |a, b| lex_compare(*a, *b)))
        .collect();
    let mut aggregate = vec![0.0; handlers];
    for row in &per_time_ranks {
        for (h, r) in row.iter().enumerate() {
            aggregate[h] += r;
        }
    }
    let mut order: Vec<usize> = (0..handlers).collect();
    order.sort_by(|&a, &b| aggregate[a].total_cmp(&aggregate[b]).then(a.cmp(&b)));
    Ok(RankingReport {
        per_time: per_time_ranks,
        aggregate,
        order,
    })
}

/// Kruskal-Wallis H with tie correction and its chi-square tail
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KwTest {
    pub h: f64,
    pub p: f64,
}

fn tie_term(sorted_pool: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut start = 0;
    while start < sorted_pool.len() {
        let mut end = start + 1;
        while end < sorted_pool.len() && sorted_pool[end] == sorted_pool[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        total += t * t * t - t;
        start = end;
    }
    total
}

pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<KwTest> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::stats(
            "kruskal-wallis needs at least two non-empty groups",
        ));
    }
    let pool: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pool.len() as f64;
    let ranks = average_ranks_by(&pool, |a, b| a.total_cmp(b));
    let mut h = 0.0;
    let mut offset = 0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        h += r * r / g.len() as f64;
        offset += g.len();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);
    let mut sorted = pool;
    sorted.sort_by(f64::total_cmp);
    let correction = 1.0 - tie_term(&sorted) / (n * n * n - n);
    if correction <= 0.0 {
        // Every observation identical: no evidence of any difference.
        return Ok(KwTest { h: 0.0, p: 1.0 });
    }
    h = (h / correction).max(0.0);
    let chi = ChiSquared::new((k - 1) as f64).expect("df >= 1 by construction");
    Ok(KwTest { h, p: chi.sf(h) })
}

/// One Bonferroni-adjusted rank-sum comparison between two groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseOutcome {
    pub a: usize,
    pub b: usize,
    pub u: f64,
    pub z: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// All pairwise rank-sum tests (normal approximation, tie-corrected)
/// with Bonferroni adjustment over the number of pairs.
pub fn bonferroni_pairwise(groups: &[Vec<f64>], alpha: f64) -> Result<Vec<PairwiseOutcome>> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::stats(
            "pairwise comparison needs at least two non-empty groups",
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::stats(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let n1 = groups[a].len() as f64;
            let n2 = groups[b].len() as f64;
            let n = n1 + n2;
            let pool: Vec<f64> = groups[a].iter().chain(&groups[b]).copied().collect();
            let ranks = average_ranks_by(&pool, |x, y| x.total_cmp(y));
            let r1: f64 = ranks[..groups[a].len()].iter().sum();
            let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
            let mut sorted = pool;
            sorted.sort_by(f64::total_cmp);
            let sigma_sq =
                n1 * n2 / 12.0 * ((n + 1.0) - tie_term(&sorted) / (n * (n - 1.0)));
            let (z, p_raw) = if sigma_sq <= 0.0 {
                (0.0, 1.0)
            } else {
                let z = (u1 - n1 * n2 / 2.0) / sigma_sq.sqrt();
                (z, (2.0 * normal.cdf(-z.abs())).min(1.0))
            };
            let p_adjusted = (p_raw * pairs).min(1.0);
            out.push(PairwiseOutcome {
                a,
                b,
                u: u1,
                z,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }
    Ok(out)
}
