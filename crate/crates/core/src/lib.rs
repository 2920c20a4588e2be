//! Benchmark generator and experiment harness for optimization under
//! dynamic linear constraints.
//!
//! A benchmark instance keeps a static box-constrained objective and moves
//! its linear constraints at fixed evaluation intervals. The crate covers
//! the full experiment path: schedule generation, a differential evolution
//! engine with three constraint handlers, per-run traces, best-known
//! reference tables, the modified offline error, and rank-based statistics
//! for comparing handlers across runs.

pub mod constraints;
pub mod engine;
pub mod error;
pub mod handlers;
pub mod harness;
pub mod metrics;
pub mod objectives;

pub use constraints::{
    build_schedule, feasible_region_ratio, sphere_optimum, ChangeClock, ChangeMode,
    ConstraintSchedule, Frame, LinearConstraint, ScheduleConfig, SeverityProfile, SphereOptimum,
};
pub use engine::{run, DeConfig, GenRecord, Instance, RunTrace};
pub use error::{Error, Result};
pub use handlers::{EpsilonParams, HandlerKind, HandlerState};
pub use harness::{
    execute, expand_matrix, stable_hash, write_reports, BestKnownSpec, ExecutionReport,
    ExperimentConfig, PlannedRun, RunRecord, SettingSpec,
};
pub use metrics::{
    best_known, bonferroni_pairwise, kruskal_wallis, lexicographic_rank, modified_offline_error,
    BestKnownEntry, BestKnownTable, KwTest, PairwiseOutcome, RankingReport,
};
pub use objectives::{BoxBounds, ObjectiveKind};
