//! Time-varying linear constraints over a fixed search box.
//!
//! A benchmark instance is a schedule of frames. Frame t holds the full
//! constraint set active during time period t; frame 0 is the initial set
//! and every later frame differs from its predecessor by exactly one change
//! event: an offset translation or a coefficient swap.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::BoxBounds;

/// One linear inequality `a . x - b <= 0` with a unit, nonnegative normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearConstraint {
    /// Signed constraint value; positive means violated.
    pub fn g(&self, x: &[f64]) -> f64 {
        assert_eq!(self.a.len(), x.len(), "constraint/point dimension mismatch");
        dot(&self.a, x) - self.b
    }
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(ai, xi)| ai * xi).sum()
}

/// Constraint set active during one time period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: usize,
    pub constraints: Vec<LinearConstraint>,
}

impl Frame {
    /// Sum of positive constraint values (zero exactly when feasible).
    pub fn sum_violation(&self, x: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.g(x).max(0.0)).sum()
    }
}

/// Step distribution for offset translations: `b += U[lk, uk]`, with `b0`
/// the shared initial offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeverityProfile {
    pub lk: f64,
    pub uk: f64,
    pub b0: f64,
}

impl SeverityProfile {
    pub const SMALL: SeverityProfile = SeverityProfile {
        lk: -5.0,
        uk: 5.0,
        b0: 2.0,
    };
    pub const MEDIUM: SeverityProfile = SeverityProfile {
        lk: -15.0,
        uk: 15.0,
        b0: 2.0,
    };
    pub const LARGE: SeverityProfile = SeverityProfile {
        lk: -25.0,
        uk: 25.0,
        b0: 2.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !self.lk.is_finite() || !self.uk.is_finite() || !self.b0.is_finite() {
            return Err(Error::config("severity values must be finite"));
        }
        if self.lk > self.uk {
            return Err(Error::config(format!(
                "severity requires lk <= uk, got [{}, {}]",
                self.lk, self.uk
            )));
        }
        Ok(())
    }

    /// Canonical name used in paths and seed derivation. Preset values map
    /// back to their preset name so equal profiles always share a label.
    pub fn label(&self) -> String {
        if *self == Self::SMALL {
            "small".into()
        } else if *self == Self::MEDIUM {
            "medium".into()
        } else if *self == Self::LARGE {
            "large".into()
        } else {
            format!("lk{}uk{}b{}", self.lk, self.uk, self.b0)
        }
    }
}

impl FromStr for SeverityProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Self::SMALL),
            "medium" => Ok(Self::MEDIUM),
            "large" => Ok(Self::LARGE),
            other => Err(Error::config(format!(
                "unknown severity '{other}', expected small|medium|large"
            ))),
        }
    }
}

/// Config-file form of a severity: either a preset name or raw values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeveritySpec {
    Preset(String),
    Raw(SeverityProfile),
}

impl SeveritySpec {
    pub fn resolve(&self) -> Result<SeverityProfile> {
        match self {
            SeveritySpec::Preset(name) => name.parse(),
            SeveritySpec::Raw(profile) => {
                profile.validate()?;
                Ok(*profile)
            }
        }
    }
}

/// How the active constraint set evolves from one frame to the next.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChangeMode {
    /// Single constraint, offset translation every change.
    #[serde(rename = "translate")]
    Translate,
    /// Single constraint, coin flip between translation and rotation.
    #[serde(rename = "translate+rotate")]
    TranslateRotate,
    /// Several constraints, one (chosen uniformly) translated per change.
    #[serde(rename = "multi-translate")]
    MultiTranslate,
}

impl ChangeMode {
    pub fn name(&self) -> &'static str {
        match self {
            ChangeMode::Translate => "translate",
            ChangeMode::TranslateRotate => "translate+rotate",
            ChangeMode::MultiTranslate => "multi-translate",
        }
    }
}

impl fmt::Display for ChangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChangeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translate" => Ok(ChangeMode::Translate),
            "translate+rotate" => Ok(ChangeMode::TranslateRotate),
            "multi-translate" => Ok(ChangeMode::MultiTranslate),
            other => Err(Error::config(format!(
                "unknown mode '{other}', expected translate|translate+rotate|multi-translate"
            ))),
        }
    }
}

/// Maps the trial-evaluation counter to the active time index. Change k
/// (k = 0..changes-1) fires when the counter reaches `buffer + k * tau`,
/// activating frame k + 1. Only trial evaluations advance the counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeClock {
    pub tau: u64,
    pub buffer: u64,
    pub changes: u32,
}

impl ChangeClock {
    pub fn new(tau: u64, buffer: u64, changes: u32) -> Result<Self> {
        if tau == 0 {
            return Err(Error::config("clock tau must be positive"));
        }
        Ok(ChangeClock {
            tau,
            buffer,
            changes,
        })
    }

    /// Time index presented by the environment after `evals` trial
    /// evaluations.
    pub fn time_index(&self, evals: u64) -> usize {
        if evals < self.buffer {
            0
        } else {
            let fired = 1 + (evals - self.buffer) / self.tau;
            fired.min(self.changes as u64) as usize
        }
    }

    /// Total trial-evaluation budget: `buffer + changes * tau`.
    pub fn total_budget(&self) -> u64 {
        self.buffer + self.changes as u64 * self.tau
    }

    pub fn frame_count(&self) -> usize {
        self.changes as usize + 1
    }
}

/// Everything needed to generate a schedule deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub dimension: usize,
    pub bounds: BoxBounds,
    pub clock: ChangeClock,
    pub mode: ChangeMode,
    pub severity: SeverityProfile,
    pub m: usize,
    pub p_rot: f64,
    pub swaps: usize,
    pub seed: u64,
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::config("dimension must be at least 1"));
        }
        if self.m == 0 {
            return Err(Error::config("constraint count m must be at least 1"));
        }
        match self.mode {
            ChangeMode::Translate | ChangeMode::TranslateRotate => {
                if self.m != 1 {
                    return Err(Error::config(format!(
                        "mode '{}' is single-constraint, got m = {}",
                        self.mode, self.m
                    )));
                }
            }
            ChangeMode::MultiTranslate => {}
        }
        if self.mode == ChangeMode::TranslateRotate {
            if self.dimension < 2 {
                return Err(Error::config("rotation needs at least 2 dimensions"));
            }
            if !(0.0..=1.0).contains(&self.p_rot) {
                return Err(Error::config(format!(
                    "rotation probability must lie in [0, 1], got {}",
                    self.p_rot
                )));
            }
            if self.swaps == 0 {
                return Err(Error::config("swap count must be at least 1"));
            }
        }
        self.severity.validate()?;
        ChangeClock::new(self.clock.tau, self.clock.buffer, self.clock.changes)?;
        BoxBounds::new(self.bounds.lower, self.bounds.upper)?;
        Ok(())
    }
}

/// Fully generated benchmark instance: one frame per time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSchedule {
    pub dimension: usize,
    pub bounds: BoxBounds,
    pub clock: ChangeClock,
    pub mode: ChangeMode,
    pub severity: SeverityProfile,
    pub m: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_rot: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swaps: Option<usize>,
    pub frames: Vec<Frame>,
}

impl ConstraintSchedule {
    pub fn frame(&self, t: usize) -> &Frame {
        &self.frames[t]
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.clock.frame_count() {
            return Err(Error::config(format!(
                "schedule holds {} frames but the clock needs {}",
                self.frames.len(),
                self.clock.frame_count()
            )));
        }
        for (t, frame) in self.frames.iter().enumerate() {
            if frame.t != t {
                return Err(Error::config(format!(
                    "frame {t} is labeled {}",
                    frame.t
                )));
            }
            if frame.constraints.len() != self.m {
                return Err(Error::config(format!(
                    "frame {t} holds {} constraints, expected {}",
                    frame.constraints.len(),
                    self.m
                )));
            }
            for (i, c) in frame.constraints.iter().enumerate() {
                if c.a.len() != self.dimension {
                    return Err(Error::config(format!(
                        "frame {t} constraint {i} has dimension {}",
                        c.a.len()
                    )));
                }
                if c.a.iter().any(|&v| v < 0.0) {
                    return Err(Error::config(format!(
                        "frame {t} constraint {i} has a negative coefficient"
                    )));
                }
                let norm = dot(&c.a, &c.a).sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(Error::config(format!(
                        "frame {t} constraint {i} normal has |a| = {norm}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization cannot fail")
    }

    pub fn from_json_string(s: &str) -> Result<Self> {
        let schedule: ConstraintSchedule = serde_json::from_str(s)
            .map_err(|e| Error::config(format!("schedule parse failed: {e}")))?;
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_string(&text)
    }
}

/// Draw a unit-length normal with nonnegative entries: raw coordinates are
/// U[0, 1) then scaled by the Euclidean norm.
pub fn generate_unit_normal(dimension: usize, rng: &mut impl Rng) -> Vec<f64> {
    assert!(dimension > 0, "normal needs at least one coordinate");
    loop {
        let raw: Vec<f64> = (0..dimension).map(|_| rng.random::<f64>()).collect();
        let norm = dot(&raw, &raw).sqrt();
        if norm > 0.0 {
            return raw.iter().map(|v| v / norm).collect();
        }
    }
}

/// Offset translation: `b` moves by a uniform step from the severity range,
/// coefficients untouched.
pub fn translate(
    c: &LinearConstraint,
    severity: &SeverityProfile,
    rng: &mut impl Rng,
) -> LinearConstraint {
    let step = rng.random_range(severity.lk..=severity.uk);
    LinearConstraint {
        a: c.a.clone(),
        b: c.b + step,
    }
}

/// Hyperplane rotation: swap `swaps` uniformly chosen pairs of distinct
/// coefficient positions. Offset untouched.
pub fn rotate(c: &LinearConstraint, swaps: usize, rng: &mut impl Rng) -> LinearConstraint {
    let d = c.a.len();
    assert!(d >= 2, "rotation needs at least 2 coordinates");
    let mut a = c.a.clone();
    for _ in 0..swaps {
        let j = rng.random_range(0..d);
        let mut k = rng.random_range(0..d - 1);
        if k >= j {
            k += 1;
        }
        a.swap(j, k);
    }
    LinearConstraint { a, b: c.b }
}

/// Generate the full frame sequence for `cfg`. Frame 0 draws fresh normals
/// with the shared initial offset; each later frame applies exactly one
/// change event to its predecessor.
pub fn build_schedule(cfg: &ScheduleConfig) -> Result<ConstraintSchedule> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial: Vec<LinearConstraint> = (0..cfg.m)
        .map(|_| LinearConstraint {
            a: generate_unit_normal(cfg.dimension, &mut rng),
            b: cfg.severity.b0,
        })
        .collect();
    let mut frames = Vec::with_capacity(cfg.clock.frame_count());
    frames.push(Frame {
        t: 0,
        constraints: initial,
    });
    for t in 1..cfg.clock.frame_count() {
        let mut constraints = frames[t - 1].constraints.clone();
        match cfg.mode {
            ChangeMode::Translate => {
                constraints[0] = translate(&constraints[0], &cfg.severity, &mut rng);
            }
            ChangeMode::TranslateRotate => {
                if rng.random::<f64>() < cfg.p_rot {
                    constraints[0] = rotate(&constraints[0], cfg.swaps, &mut rng);
                } else {
                    constraints[0] = translate(&constraints[0], &cfg.severity, &mut rng);
                }
            }
            ChangeMode::MultiTranslate => {
                let idx = rng.random_range(0..cfg.m);
                constraints[idx] = translate(&constraints[idx], &cfg.severity, &mut rng);
            }
        }
        frames.push(Frame { t, constraints });
    }
    let schedule = ConstraintSchedule {
        dimension: cfg.dimension,
        bounds: cfg.bounds,
        clock: cfg.clock,
        mode: cfg.mode,
        severity: cfg.severity,
        m: cfg.m,
        seed: cfg.seed,
        p_rot: (cfg.mode == ChangeMode::TranslateRotate).then_some(cfg.p_rot),
        swaps: (cfg.mode == ChangeMode::TranslateRotate).then_some(cfg.swaps),
        frames,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// Monte Carlo estimate of the box volume fraction satisfying every
/// constraint. Samples are sharded into fixed-size blocks, each drawn from
/// its own counter-derived stream, so the estimate does not depend on the
/// worker count.
pub fn feasible_region_ratio(
    constraints: &[LinearConstraint],
    bounds: BoxBounds,
    samples: u64,
    seed: u64,
) -> f64 {
    assert!(samples > 0, "ratio needs at least one sample");
    assert!(!constraints.is_empty(), "ratio needs at least one constraint");
    let dimension = constraints[0].a.len();
    const SHARD: u64 = 1 << 16;
    let shards = samples.div_ceil(SHARD);
    let hits: u64 = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = SHARD.min(samples - shard * SHARD);
            let mut x = vec![0.0; dimension];
            let mut hits = 0u64;
            for _ in 0..count {
                for v in x.iter_mut() {
                    *v = rng.random_range(bounds.lower..=bounds.upper);
                }
                if constraints.iter().all(|c| c.g(&x) <= 0.0) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    hits as f64 / samples as f64
}

/// Exact minimum of the sphere objective under one linear constraint plus
/// box bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereOptimum {
    pub value: f64,
    /// False when even the most favorable corner violates the constraint;
    /// `value` is then that corner's objective.
    pub feasible: bool,
}

/// Solve `min |x|^2  s.t.  a . x <= b, lower <= x_j <= upper` for a unit
/// nonnegative normal. For b >= 0 the origin is optimal. Otherwise the
/// constraint is active and the solution is the hyperplane projection of
/// the origin with out-of-bounds coordinates clamped to the lower bound,
/// re-projecting on the free coordinates until consistent.
pub fn sphere_optimum(c: &LinearConstraint, bounds: BoxBounds) -> SphereOptimum {
    let a = &c.a;
    let l = bounds.lower;
    debug_assert!(a.iter().all(|&v| v >= 0.0), "normal must be nonnegative");
    debug_assert!((dot(a, a).sqrt() - 1.0).abs() < 1e-6, "normal must be unit");
    assert!(
        bounds.lower <= 0.0 && bounds.upper >= 0.0,
        "solver assumes the origin lies inside the box"
    );
    if c.b >= 0.0 {
        return SphereOptimum {
            value: 0.0,
            feasible: true,
        };
    }
    let sum_a: f64 = a.iter().sum();
    if l * sum_a > c.b {
        // Even x_j = lower on every positive coefficient cannot reach the
        // hyperplane. Among the violation minimizers the cheapest leaves
        // zero-coefficient coordinates at the origin.
        let active = a.iter().filter(|&&v| v > 0.0).count();
        return SphereOptimum {
            value: active as f64 * l * l,
            feasible: false,
        };
    }
    let mut clamped = vec![false; a.len()];
    loop {
        let free_sq: f64 = a
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(v, _)| v * v)
            .sum();
        let fixed: f64 = a
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| c)
            .map(|(v, _)| v * l)
            .sum();
        if free_sq == 0.0 {
            // Every positive coefficient is at the lower bound; the upfront
            // corner check guarantees feasibility.
            let count = clamped.iter().filter(|&&c| c).count();
            return SphereOptimum {
                value: count as f64 * l * l,
                feasible: true,
            };
        }
        let nu = (c.b - fixed) / free_sq;
        let mut changed = false;
        for (j, &aj) in a.iter().enumerate() {
            if !clamped[j] && nu * aj < l {
                clamped[j] = true;
                changed = true;
            }
        }
        if !changed {
            let value = a
                .iter()
                .zip(&clamped)
                .map(|(&aj, &cl)| if cl { l * l } else { (nu * aj) * (nu * aj) })
                .sum();
            return SphereOptimum {
                value,
                feasible: true,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn config(mode: ChangeMode, m: usize, seed: u64) -> ScheduleConfig {
        ScheduleConfig {
            dimension: 30,
            bounds: BoxBounds::default(),
            clock: ChangeClock::new(1000, 1000, 10).unwrap(),
            mode,
            severity: SeverityProfile::MEDIUM,
            m,
            p_rot: 0.5,
            swaps: 1,
            seed,
        }
    }

    /// Independent check for `sphere_optimum` on small dimensions: try every
    /// clamp pattern (free, at lower, at upper per coordinate) with both the
    /// interior fill (free coordinates at zero) and the hyperplane fill
    /// (free coordinates proportional to the normal), keep the feasible
    /// candidates and take the best.
    fn sphere_optimum_by_enumeration(c: &LinearConstraint, bounds: BoxBounds) -> SphereOptimum {
        let d = c.a.len();
        let (l, u) = (bounds.lower, bounds.upper);
        let mut best: Option<f64> = None;
        let mut consider = |x: &[f64]| {
            let within = x.iter().all(|&v| v >= l - 1e-12 && v <= u + 1e-12);
            if within && c.g(x) <= 1e-9 {
                let value = x.iter().map(|v| v * v).sum::<f64>();
                best = Some(best.map_or(value, |b: f64| b.min(value)));
            }
        };
        for pattern in 0..3usize.pow(d as u32) {
            let mut x = vec![0.0; d];
            let mut free = Vec::new();
            let mut code = pattern;
            for j in 0..d {
                match code % 3 {
                    0 => free.push(j),
                    1 => x[j] = l,
                    _ => x[j] = u,
                }
                code /= 3;
            }
            consider(&x);
            let free_sq: f64 = free.iter().map(|&j| c.a[j] * c.a[j]).sum();
            if free_sq > 0.0 {
                let fixed: f64 = (0..d)
                    .filter(|j| !free.contains(j))
                    .map(|j| c.a[j] * x[j])
                    .sum();
                let nu = (c.b - fixed) / free_sq;
                for &j in &free {
                    x[j] = nu * c.a[j];
                }
                consider(&x);
            }
        }
        match best {
            Some(value) => SphereOptimum {
                value,
                feasible: true,
            },
            None => {
                let active = c.a.iter().filter(|&&v| v > 0.0).count();
                SphereOptimum {
                    value: active as f64 * l * l,
                    feasible: false,
                }
            }
        }
    }

    #[test]
    fn unit_normal_invariants() {
        let mut r = rng(7);
        for _ in 0..100 {
            let a = generate_unit_normal(30, &mut r);
            assert!(a.iter().all(|&v| v >= 0.0));
            let norm = dot(&a, &a).sqrt();
            assert!((norm - 1.0).abs() < 1e-12, "norm {norm}");
        }
    }

    #[test]
    fn translate_changes_only_offset() {
        let mut r = rng(3);
        let c = LinearConstraint {
            a: generate_unit_normal(10, &mut r),
            b: 2.0,
        };
        for _ in 0..200 {
            let moved = translate(&c, &SeverityProfile::MEDIUM, &mut r);
            assert_eq!(moved.a, c.a);
            let step = moved.b - c.b;
            assert!((-15.0..=15.0).contains(&step), "step {step}");
        }
    }

    #[test]
    fn rotate_permutes_coefficients() {
        let mut r = rng(4);
        let c = LinearConstraint {
            a: generate_unit_normal(30, &mut r),
            b: -1.0,
        };
        for _ in 0..200 {
            let rotated = rotate(&c, 1, &mut r);
            assert_eq!(rotated.b, c.b);
            let mut sa = c.a.clone();
            let mut sb = rotated.a.clone();
            sa.sort_by(f64::total_cmp);
            sb.sort_by(f64::total_cmp);
            assert_eq!(sa, sb, "coefficients must be a permutation");
            let differing = c.a.iter().zip(&rotated.a).filter(|(x, y)| x != y).count();
            assert!(differing <= 2, "one swap may touch at most 2 positions");
        }
    }

    #[test]
    fn clock_threshold_walk() {
        let clock = ChangeClock::new(1000, 1000, 100).unwrap();
        assert_eq!(clock.total_budget(), 101_000);
        assert_eq!(clock.frame_count(), 101);
        assert_eq!(clock.time_index(0), 0);
        assert_eq!(clock.time_index(999), 0);
        for k in 0..100u64 {
            // Change k fires exactly when the counter reaches buffer + k*tau.
            assert_eq!(clock.time_index(1000 + k * 1000 - 1), k as usize);
            assert_eq!(clock.time_index(1000 + k * 1000), k as usize + 1);
        }
        // The index saturates at the final frame.
        assert_eq!(clock.time_index(clock.total_budget()), 100);
        assert_eq!(clock.time_index(u64::MAX), 100);
    }

    #[test]
    fn clock_rejects_zero_tau() {
        assert!(ChangeClock::new(0, 1000, 10).is_err());
    }

    #[test]
    fn schedule_translate_mode_invariants() {
        let schedule = build_schedule(&config(ChangeMode::Translate, 1, 42)).unwrap();
        assert_eq!(schedule.frames.len(), 11);
        for t in 1..schedule.frames.len() {
            let prev = &schedule.frames[t - 1].constraints[0];
            let cur = &schedule.frames[t].constraints[0];
            assert_eq!(prev.a, cur.a, "translation must keep coefficients");
            let step = cur.b - prev.b;
            assert!((-15.0..=15.0).contains(&step));
        }
        assert_eq!(schedule.frames[0].constraints[0].b, 2.0);
    }

    #[test]
    fn schedule_combined_mode_changes_one_thing_at_a_time() {
        let schedule = build_schedule(&config(ChangeMode::TranslateRotate, 1, 9)).unwrap();
        let mut rotations = 0;
        let mut translations = 0;
        for t in 1..schedule.frames.len() {
            let prev = &schedule.frames[t - 1].constraints[0];
            let cur = &schedule.frames[t].constraints[0];
            if prev.a == cur.a {
                assert_ne!(prev.b, cur.b, "a change event must alter the constraint");
                translations += 1;
            } else {
                assert_eq!(prev.b, cur.b, "rotation must keep the offset");
                let mut sa = prev.a.clone();
                let mut sb = cur.a.clone();
                sa.sort_by(f64::total_cmp);
                sb.sort_by(f64::total_cmp);
                assert_eq!(sa, sb);
                rotations += 1;
            }
        }
        assert_eq!(rotations + translations, 10);
    }

    #[test]
    fn schedule_multi_mode_translates_exactly_one_constraint() {
        let schedule = build_schedule(&config(ChangeMode::MultiTranslate, 3, 5)).unwrap();
        for t in 1..schedule.frames.len() {
            let prev = &schedule.frames[t - 1].constraints;
            let cur = &schedule.frames[t].constraints;
            let moved: Vec<usize> = (0..3).filter(|&i| prev[i] != cur[i]).collect();
            assert_eq!(moved.len(), 1, "exactly one constraint moves per change");
            let i = moved[0];
            assert_eq!(prev[i].a, cur[i].a);
            assert_ne!(prev[i].b, cur[i].b);
        }
    }

    #[test]
    fn schedule_generation_is_deterministic() {
        let a = build_schedule(&config(ChangeMode::MultiTranslate, 3, 77)).unwrap();
        let b = build_schedule(&config(ChangeMode::MultiTranslate, 3, 77)).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
    }

    #[test]
    fn schedule_json_round_trip_is_exact() {
        let schedule = build_schedule(&config(ChangeMode::TranslateRotate, 1, 13)).unwrap();
        let text = schedule.to_json_string();
        let back = ConstraintSchedule::from_json_string(&text).unwrap();
        assert_eq!(schedule, back);
        assert_eq!(back.to_json_string(), text);
    }

    #[test]
    fn schedule_rejects_bad_configs() {
        let mut bad = config(ChangeMode::Translate, 2, 1);
        assert!(build_schedule(&bad).is_err(), "translate mode needs m = 1");
        bad = config(ChangeMode::MultiTranslate, 0, 1);
        assert!(build_schedule(&bad).is_err());
        bad = config(ChangeMode::TranslateRotate, 1, 1);
        bad.p_rot = 1.5;
        assert!(build_schedule(&bad).is_err());
    }

    #[test]
    fn sphere_optimum_anchor_nonnegative_offset_is_origin() {
        let mut r = rng(20);
        let c = LinearConstraint {
            a: generate_unit_normal(30, &mut r),
            b: 3.43,
        };
        let got = sphere_optimum(&c, BoxBounds::default());
        assert_eq!(got.value, 0.0);
        assert!(got.feasible);
    }

    #[test]
    fn sphere_optimum_anchor_unreachable_offset_is_full_corner() {
        // A unit nonnegative normal has coefficient sum at most sqrt(30), so
        // the most favorable corner value is at least -5*sqrt(30) > -37.95:
        // that offset is unreachable for every normal.
        let mut r = rng(21);
        for seed_pass in 0..20 {
            let _ = seed_pass;
            let c = LinearConstraint {
                a: generate_unit_normal(30, &mut r),
                b: -37.95,
            };
            let got = sphere_optimum(&c, BoxBounds::default());
            assert_eq!(got.value, 750.0);
            assert!(!got.feasible);
        }
    }

    #[test]
    fn sphere_optimum_unclamped_projection_is_b_squared() {
        // With every |b * a_j| below the lower bound magnitude nothing
        // clamps and the optimum is the plain projection distance squared.
        let mut r = rng(22);
        let mut checked = 0;
        for _ in 0..50 {
            let a = generate_unit_normal(30, &mut r);
            let b = -13.63;
            if a.iter().all(|&aj| b * aj > -5.0) {
                let c = LinearConstraint { a, b };
                let got = sphere_optimum(&c, BoxBounds::default());
                assert!((got.value - b * b).abs() < 1e-9, "got {}", got.value);
                assert!(got.feasible);
                checked += 1;
            }
        }
        assert!(checked > 0, "no unclamped instance drawn");
    }

    #[test]
    fn sphere_optimum_matches_enumeration_on_small_dimensions() {
        let mut r = rng(23);
        for case in 0..300 {
            let d = 1 + case % 3;
            let a = generate_unit_normal(d, &mut r);
            let b = r.random_range(-40.0..=20.0);
            let c = LinearConstraint { a, b };
            let bounds = BoxBounds::default();
            let fast = sphere_optimum(&c, bounds);
            let slow = sphere_optimum_by_enumeration(&c, bounds);
            assert_eq!(fast.feasible, slow.feasible, "case {case}: {c:?}");
            assert!(
                (fast.value - slow.value).abs() <= 1e-6 * slow.value.max(1.0),
                "case {case}: fast {} vs enumeration {} for {c:?}",
                fast.value,
                slow.value
            );
        }
    }

    #[test]
    fn region_ratio_zero_offset_splits_the_box() {
        let mut r = rng(30);
        let c = LinearConstraint {
            a: generate_unit_normal(30, &mut r),
            b: 0.0,
        };
        let ratio = feasible_region_ratio(&[c], BoxBounds::default(), 200_000, 99);
        assert!((ratio - 0.5).abs() < 0.004, "ratio {ratio}");
    }

    #[test]
    fn region_ratio_is_monotone_in_offset_under_common_samples() {
        let mut r = rng(31);
        let a = generate_unit_normal(30, &mut r);
        let seed = 1234;
        let mut prev = 0.0;
        for b in [-30.0, -10.0, -2.0, 0.0, 2.0, 10.0, 30.0] {
            let c = LinearConstraint { a: a.clone(), b };
            let ratio = feasible_region_ratio(&[c], BoxBounds::default(), 50_000, seed);
            assert!(
                ratio >= prev,
                "ratio must not shrink when the region grows: {prev} -> {ratio} at b = {b}"
            );
            prev = ratio;
        }
        assert_eq!(prev, 1.0, "b = 30 admits the whole box");
    }

    #[test]
    fn region_ratio_does_not_depend_on_shard_count() {
        // Exceed one shard (65536) so the result mixes several streams.
        let mut r = rng(32);
        let c = LinearConstraint {
            a: generate_unit_normal(5, &mut r),
            b: 1.0,
        };
        let x = feasible_region_ratio(&[c.clone()], BoxBounds::default(), 100_000, 7);
        let y = feasible_region_ratio(&[c], BoxBounds::default(), 100_000, 7);
        assert_eq!(x, y);
    }

    #[test]
    fn severity_labels_and_parsing() {
        assert_eq!(SeverityProfile::SMALL.label(), "small");
        assert_eq!(SeverityProfile::MEDIUM.label(), "medium");
        assert_eq!(SeverityProfile::LARGE.label(), "large");
        assert_eq!("medium".parse::<SeverityProfile>().unwrap(), SeverityProfile::MEDIUM);
        assert!("huge".parse::<SeverityProfile>().is_err());
        let custom = SeverityProfile {
            lk: -1.0,
            uk: 2.0,
            b0: 0.5,
        };
        assert_eq!(custom.label(), "lk-1uk2b0.5");
    }

    #[test]
    fn mode_strings_round_trip() {
        for mode in [
            ChangeMode::Translate,
            ChangeMode::TranslateRotate,
            ChangeMode::MultiTranslate,
        ] {
            assert_eq!(mode.name().parse::<ChangeMode>().unwrap(), mode);
        }
        assert!("rotate".parse::<ChangeMode>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_unit_normals_stay_unit_after_rotation(seed in 0u64..1000, swaps in 1usize..4) {
            let mut r = rng(seed);
            let c = LinearConstraint { a: generate_unit_normal(12, &mut r), b: 1.0 };
            let rotated = rotate(&c, swaps, &mut r);
            let norm = dot(&rotated.a, &rotated.a).sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }

        #[test]
        fn prop_violation_is_nonnegative(seed in 0u64..1000) {
            let mut r = rng(seed);
            let frame = Frame {
                t: 0,
                constraints: (0..3).map(|i| LinearConstraint {
                    a: generate_unit_normal(8, &mut r),
                    b: (i as f64) - 1.0,
                }).collect(),
            };
            let x: Vec<f64> = (0..8).map(|_| r.random_range(-5.0..=5.0)).collect();
            prop_assert!(frame.sum_violation(&x) >= 0.0);
        }
    }
}
