//! Experiment matrix: configuration, seed derivation, parallel execution,
//! and report generation.
//!
//! Seed contract: the schedule seed is a stable hash of the base seed and
//! the run coordinates (function, mode, severity, tau, run index) and never
//! of the handler, so every handler at the same coordinates optimizes
//! against byte-identical frames. The engine seed additionally hashes the
//! handler name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constraints::{
    build_schedule, ChangeClock, ChangeMode, ConstraintSchedule, ScheduleConfig, SeverityProfile,
    SeveritySpec,
};
use crate::engine::{self, DeConfig, FinalBest, Instance};
use crate::error::{Error, Result};
use crate::handlers::{EpsilonParams, HandlerKind};
use crate::metrics::{
    best_known, bonferroni_pairwise, kruskal_wallis, lexicographic_rank, modified_offline_error,
    BestKnownTable,
};
use crate::objectives::{BoxBounds, ObjectiveKind};

/// 64-bit FNV-1a. Stable across platforms and releases; seed derivation
/// depends on it never changing.
pub fn stable_hash(text: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    text.bytes()
        .fold(OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

fn default_dimension() -> usize {
    30
}
fn default_changes() -> u32 {
    100
}
fn default_buffer() -> u64 {
    1000
}
fn default_m() -> usize {
    3
}
fn default_p_rot() -> f64 {
    0.5
}
fn default_swaps() -> usize {
    1
}
fn default_alpha() -> f64 {
    0.05
}

/// One experiment setting: how the constraints move and how often.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SettingSpec {
    pub mode: ChangeMode,
    pub severity: SeveritySpec,
    pub tau: u64,
}

/// How the per-frame reference objectives are obtained.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BestKnownSpec {
    /// The string "analytic": closed-form sphere optima (single-constraint
    /// sphere settings only).
    Method(String),
    /// A static search with this many evaluations per frame.
    Search { evals: u64 },
}

impl Default for BestKnownSpec {
    fn default() -> Self {
        BestKnownSpec::Search { evals: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BestKnownMethod {
    Analytic,
    Search(u64),
}

impl BestKnownSpec {
    pub fn resolve(&self) -> Result<BestKnownMethod> {
        match self {
            BestKnownSpec::Method(name) if name == "analytic" => Ok(BestKnownMethod::Analytic),
            BestKnownSpec::Method(name) => Err(Error::config(format!(
                "unknown best-known method '{name}', expected \"analytic\" or {{\"evals\": n}}"
            ))),
            BestKnownSpec::Search { evals: 0 } => {
                Err(Error::config("best-known search needs a nonzero budget"))
            }
            BestKnownSpec::Search { evals } => Ok(BestKnownMethod::Search(*evals)),
        }
    }
}

/// Full experiment description, the JSON config consumed by `matrix`.
///
/// Settings come either from the explicit `settings` list or from the
/// Cartesian product of `modes`, `severities` and `taus`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functions: Vec<ObjectiveKind>,
    pub handlers: Vec<HandlerKind>,
    #[serde(default)]
    pub settings: Vec<SettingSpec>,
    #[serde(default)]
    pub modes: Vec<ChangeMode>,
    #[serde(default)]
    pub severities: Vec<SeveritySpec>,
    #[serde(default)]
    pub taus: Vec<u64>,
    pub runs: u32,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub bounds: BoxBounds,
    #[serde(default = "default_changes")]
    pub changes: u32,
    #[serde(default = "default_buffer")]
    pub buffer: u64,
    /// Constraint count for multi-constraint modes.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_p_rot")]
    pub p_rot: f64,
    #[serde(default = "default_swaps")]
    pub swaps: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub best_known: BestKnownSpec,
    #[serde(default)]
    pub de: DeConfig,
    #[serde(default)]
    pub epsilon: EpsilonParams,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }

    fn resolved_settings(&self) -> Result<Vec<(ChangeMode, SeverityProfile, u64)>> {
        let mut out = Vec::new();
        if !self.settings.is_empty() {
            for s in &self.settings {
                out.push((s.mode, s.severity.resolve()?, s.tau));
            }
        } else {
            for &mode in &self.modes {
                for severity in &self.severities {
                    let severity = severity.resolve()?;
                    for &tau in &self.taus {
                        out.push((mode, severity, tau));
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::config(
                "no settings: provide `settings` or all of `modes`, `severities`, `taus`",
            ));
        }
        Ok(out)
    }
}

/// One (coordinates, run index) cell of the matrix; handlers multiply on
/// top of this at execution time.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub function: ObjectiveKind,
    pub tau: u64,
    pub run: u32,
    pub severity_label: String,
    pub schedule_seed: u64,
    pub schedule_config: ScheduleConfig,
    seed_key: String,
}

impl PlannedRun {
    pub fn coordinate_label(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.function.name(),
            self.schedule_config.mode.name(),
            self.severity_label,
            self.tau
        )
    }

    pub fn run_label(&self) -> String {
        format!("run_{:02}", self.run)
    }

    pub fn run_seed(&self, handler: HandlerKind) -> u64 {
        stable_hash(&format!("{}|{}", self.seed_key, handler.name()))
    }
}

/// Expand the config into planned runs. Jobs = planned runs x handlers.
pub fn expand_matrix(cfg: &ExperimentConfig) -> Result<Vec<PlannedRun>> {
    if cfg.functions.is_empty() {
        return Err(Error::config("config lists no objective functions"));
    }
    if cfg.handlers.is_empty() {
        return Err(Error::config("config lists no handlers"));
    }
    if cfg.runs == 0 {
        return Err(Error::config("config requests zero runs"));
    }
    let settings = cfg.resolved_settings()?;
    let mut plan = Vec::new();
    for &function in &cfg.functions {
        for &(mode, severity, tau) in &settings {
            let severity_label = severity.label();
            for run in 0..cfg.runs {
                let seed_key = format!(
                    "{}|{}|{}|{}|{}|{}",
                    cfg.base_seed,
                    function.name(),
                    mode.name(),
                    severity_label,
                    tau,
                    run
                );
                let schedule_seed = stable_hash(&seed_key);
                let schedule_config = ScheduleConfig {
                    dimension: cfg.dimension,
                    bounds: cfg.bounds,
                    clock: ChangeClock::new(tau, cfg.buffer, cfg.changes)?,
                    mode,
                    severity,
                    m: if mode == ChangeMode::MultiTranslate {
                        cfg.m
                    } else {
                        1
                    },
                    p_rot: cfg.p_rot,
                    swaps: cfg.swaps,
                    seed: schedule_seed,
                };
                schedule_config.validate()?;
                plan.push(PlannedRun {
                    function,
                    tau,
                    run,
                    severity_label: severity_label.clone(),
                    schedule_seed,
                    schedule_config,
                    seed_key,
                });
            }
        }
    }
    Ok(plan)
}

/// Completed artifact of one (planned run, handler) job.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub function: String,
    pub mode: String,
    pub severity: String,
    pub tau: u64,
    pub run: u32,
    pub handler: String,
    pub schedule_seed: u64,
    pub run_seed: u64,
    pub moffe: f64,
    /// Trace CSV file name, relative to the record's directory.
    pub trace_path: String,
    pub final_bests: Vec<FinalBest>,
}

impl RunRecord {
    fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// What `execute` did, per job class.
#[derive(Debug, Clone, Default)]
pub struct ExecutionReport {
    pub completed: usize,
    pub skipped: usize,
    /// (job label, reason); a failed job never aborts its siblings.
    pub failed: Vec<(String, String)>,
}

enum JobOutcome {
    Completed,
    Skipped,
    Failed(String, String),
}

/// Run the whole matrix into `out`, then aggregate reports.
///
/// Existing records are skipped unless `force` is set, so interrupted
/// matrices resume where they stopped. Reports are rewritten whenever every
/// job is clean.
pub fn execute(
    cfg: &ExperimentConfig,
    out: &Path,
    workers: Option<usize>,
    force: bool,
) -> Result<ExecutionReport> {
    let plan = expand_matrix(cfg)?;
    let method = cfg.best_known.resolve()?;
    if method == BestKnownMethod::Analytic {
        if let Some(bad) = plan
            .iter()
            .find(|pr| pr.function != ObjectiveKind::Sphere || pr.schedule_config.m != 1)
        {
            return Err(Error::config(format!(
                "analytic best-known only covers single-constraint sphere settings, got {}",
                bad.coordinate_label()
            )));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;

    let mut report = ExecutionReport::default();
    let prepare_outcomes: Vec<JobOutcome> = pool.install(|| {
        plan.par_iter()
            .map(|pr| match prepare_run(pr, out, method, force) {
                Ok(()) => JobOutcome::Completed,
                Err(e) => JobOutcome::Failed(
                    format!("{}/{}/prepare", pr.coordinate_label(), pr.run_label()),
                    e.to_string(),
                ),
            })
            .collect()
    });
    for outcome in prepare_outcomes {
        if let JobOutcome::Failed(label, reason) = outcome {
            report.failed.push((label, reason));
        }
    }

    let jobs: Vec<(&PlannedRun, HandlerKind)> = plan
        .iter()
        .flat_map(|pr| cfg.handlers.iter().map(move |&h| (pr, h)))
        .collect();
    let outcomes: Vec<JobOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(pr, handler)| match run_job(cfg, pr, handler, out, force) {
                Ok(skipped) => {
                    if skipped {
                        JobOutcome::Skipped
                    } else {
                        JobOutcome::Completed
                    }
                }
                Err(e) => JobOutcome::Failed(
                    format!(
                        "{}/{}/{}",
                        pr.coordinate_label(),
                        pr.run_label(),
                        handler.name()
                    ),
                    e.to_string(),
                ),
            })
            .collect()
    });
    for outcome in outcomes {
        match outcome {
            JobOutcome::Completed => report.completed += 1,
            JobOutcome::Skipped => report.skipped += 1,
            JobOutcome::Failed(label, reason) => report.failed.push((label, reason)),
        }
    }

    if report.failed.is_empty() {
        write_reports(out, cfg.alpha)?;
    }
    Ok(report)
}

fn prepare_run(pr: &PlannedRun, out: &Path, method: BestKnownMethod, force: bool) -> Result<()> {
    let run_dir = out.join(pr.coordinate_label()).join(pr.run_label());
    std::fs::create_dir_all(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
    let schedule_path = run_dir.join("schedule.json");
    if force || !schedule_path.exists() {
        build_schedule(&pr.schedule_config)?.save(&schedule_path)?;
    }
    let table_path = run_dir.join("best_known.json");
    if force || !table_path.exists() {
        // Derive the table from the file actually consumed by the runs,
        // not from the in-memory schedule.
        let schedule = ConstraintSchedule::load(&schedule_path)?;
        let table = match method {
            BestKnownMethod::Analytic => BestKnownTable::analytic_sphere(&schedule)?,
            BestKnownMethod::Search(evals) => {
                best_known(&schedule, pr.function, evals, pr.schedule_seed)?
            }
        };
        table.save(&table_path)?;
    }
    Ok(())
}

fn run_job(
    cfg: &ExperimentConfig,
    pr: &PlannedRun,
    handler: HandlerKind,
    out: &Path,
    force: bool,
) -> Result<bool> {
    let run_dir = out.join(pr.coordinate_label()).join(pr.run_label());
    let record_path = run_dir.join(format!("record_{}.json", handler.name()));
    if !force && record_path.exists() {
        return Ok(true);
    }
    let schedule = ConstraintSchedule::load(run_dir.join("schedule.json"))?;
    let instance = Instance::new(pr.function, schedule)?;
    let run_seed = pr.run_seed(handler);
    let trace = engine::run(&instance, handler, &cfg.epsilon, &cfg.de, run_seed)?;
    let trace_name = format!("trace_{}.csv", handler.name());
    trace.write_csv(run_dir.join(&trace_name))?;
    let table = BestKnownTable::load(run_dir.join("best_known.json"))?;
    let moffe = modified_offline_error(&trace, &table)?;
    let record = RunRecord {
        function: pr.function.name().to_string(),
        mode: pr.schedule_config.mode.name().to_string(),
        severity: pr.severity_label.clone(),
        tau: pr.tau,
        run: pr.run,
        handler: handler.name().to_string(),
        schedule_seed: pr.schedule_seed,
        run_seed,
        moffe,
        trace_path: trace_name,
        final_bests: trace.final_bests,
    };
    record.save(&record_path)?;
    Ok(false)
}

type CoordKey = (String, String, String, u64);

struct CoordData {
    records: Vec<RunRecord>,
    tables: BTreeMap<u32, BestKnownTable>,
}

fn handler_order(name: &str) -> Result<usize> {
    let kind: HandlerKind = name
        .parse()
        .map_err(|_| Error::report(format!("record with unknown handler '{name}'")))?;
    Ok(HandlerKind::ALL
        .iter()
        .position(|&h| h == kind)
        .expect("ALL covers every variant"))
}

fn collect_coords(out: &Path) -> Result<BTreeMap<CoordKey, CoordData>> {
    let mut coords: BTreeMap<CoordKey, CoordData> = BTreeMap::new();
    let entries = std::fs::read_dir(out).map_err(|e| Error::io(out, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(out, e))?;
        if !entry.path().is_dir() {
            continue;
        }
        let coord_dir = entry.path();
        let run_entries = std::fs::read_dir(&coord_dir).map_err(|e| Error::io(&coord_dir, e))?;
        for run_entry in run_entries {
            let run_entry = run_entry.map_err(|e| Error::io(&coord_dir, e))?;
            let run_dir = run_entry.path();
            if !run_dir.is_dir() || !run_entry.file_name().to_string_lossy().starts_with("run_") {
                continue;
            }
            let mut run_records = Vec::new();
            let files = std::fs::read_dir(&run_dir).map_err(|e| Error::io(&run_dir, e))?;
            for file in files {
                let file = file.map_err(|e| Error::io(&run_dir, e))?;
                let name = file.file_name().to_string_lossy().into_owned();
                if name.starts_with("record_") && name.ends_with(".json") {
                    run_records.push(RunRecord::load(&file.path())?);
                }
            }
            if run_records.is_empty() {
                continue;
            }
            let key: CoordKey = (
                run_records[0].function.clone(),
                run_records[0].mode.clone(),
                run_records[0].severity.clone(),
                run_records[0].tau,
            );
            let run = run_records[0].run;
            if run_records.iter().any(|r| {
                (r.function.as_str(), r.mode.as_str(), r.severity.as_str(), r.tau, r.run)
                    != (key.0.as_str(), key.1.as_str(), key.2.as_str(), key.3, run)
            }) {
                return Err(Error::report(format!(
                    "records in {} disagree on their coordinates",
                    run_dir.display()
                )));
            }
            let data = coords.entry(key).or_insert_with(|| CoordData {
                records: Vec::new(),
                tables: BTreeMap::new(),
            });
            let table_path = run_dir.join("best_known.json");
            if table_path.exists() {
                data.tables.insert(run, BestKnownTable::load(&table_path)?);
            }
            data.records.extend(run_records);
        }
    }
    if coords.is_empty() {
        return Err(Error::report(format!(
            "no run records under {}",
            out.display()
        )));
    }
    for data in coords.values_mut() {
        let mut keyed = std::mem::take(&mut data.records)
            .into_iter()
            .map(|r| handler_order(&r.handler).map(|o| (o, r)))
            .collect::<Result<Vec<_>>>()?;
        keyed.sort_by_key(|(order, r)| (*order, r.run));
        data.records = keyed.into_iter().map(|(_, r)| r).collect();
    }
    Ok(coords)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn write_row(w: &mut csv::Writer<std::fs::File>, path: &Path, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::csv(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Handler names present for a coordinate, in canonical handler order.
fn coord_handlers(data: &CoordData) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in &data.records {
        if !names.contains(&r.handler) {
            names.push(r.handler.clone());
        }
    }
    names
}

/// Per-handler mean (f, phi) of the final bests at every time index.
fn mean_final_bests(
    data: &CoordData,
    handlers: &[String],
) -> Result<(Vec<usize>, Vec<Vec<(f64, f64)>>)> {
    let times: Vec<usize> = data.records[0].final_bests.iter().map(|fb| fb.t).collect();
    for r in &data.records {
        let got: Vec<usize> = r.final_bests.iter().map(|fb| fb.t).collect();
        if got != times {
            return Err(Error::report(format!(
                "run {} of handler {} covers different time indices",
                r.run, r.handler
            )));
        }
    }
    let mut per_time = vec![Vec::with_capacity(handlers.len()); times.len()];
    for h in handlers {
        let runs: Vec<&RunRecord> = data.records.iter().filter(|r| &r.handler == h).collect();
        for (ti, slot) in per_time.iter_mut().enumerate() {
            let n = runs.len() as f64;
            let f = runs.iter().map(|r| r.final_bests[ti].f).sum::<f64>() / n;
            let phi = runs.iter().map(|r| r.final_bests[ti].phi).sum::<f64>() / n;
            slot.push((f, phi));
        }
    }
    Ok((times, per_time))
}

/// Build summary.csv, ranking.csv and stats.csv at the root of `out`, and
/// one series.csv per coordinate directory.
pub fn write_reports(out: &Path, alpha: f64) -> Result<()> {
    let coords = collect_coords(out)?;

    let summary_path = out.join("summary.csv");
    let mut summary = csv_writer(&summary_path)?;
    write_row(
        &mut summary,
        &summary_path,
        &["function", "mode", "severity", "tau", "handler", "run", "moffe"]
            .map(String::from),
    )?;
    for (key, data) in &coords {
        for r in &data.records {
            write_row(
                &mut summary,
                &summary_path,
                &[
                    key.0.clone(),
                    key.1.clone(),
                    key.2.clone(),
                    key.3.to_string(),
                    r.handler.clone(),
                    r.run.to_string(),
                    fmt(r.moffe),
                ],
            )?;
        }
    }
    summary.flush().map_err(|e| Error::io(&summary_path, e))?;

    let all_handlers: Vec<String> = {
        let mut names: Vec<(usize, String)> = Vec::new();
        for data in coords.values() {
            for h in coord_handlers(data) {
                let order = handler_order(&h)?;
                if !names.iter().any(|(_, n)| n == &h) {
                    names.push((order, h));
                }
            }
        }
        names.sort();
        names.into_iter().map(|(_, n)| n).collect()
    };

    let ranking_path = out.join("ranking.csv");
    let mut ranking = csv_writer(&ranking_path)?;
    let mut header: Vec<String> = ["function", "mode", "severity", "tau", "time"]
        .map(String::from)
        .to_vec();
    header.extend(all_handlers.iter().cloned());
    write_row(&mut ranking, &ranking_path, &header)?;

    let stats_path = out.join("stats.csv");
    let mut stats = csv_writer(&stats_path)?;
    write_row(
        &mut stats,
        &stats_path,
        &["function", "mode", "severity", "tau", "test", "statistic", "p", "significant"]
            .map(String::from),
    )?;

    for (key, data) in &coords {
        let handlers = coord_handlers(data);
        if handlers != all_handlers {
            return Err(Error::report(format!(
                "coordinate {}/{}/{}/{} covers handlers {:?}, expected {:?}",
                key.0, key.1, key.2, key.3, handlers, all_handlers
            )));
        }
        let coord_cols = [
            key.0.clone(),
            key.1.clone(),
            key.2.clone(),
            key.3.to_string(),
        ];

        let (times, per_time) = mean_final_bests(data, &handlers)?;
        let rank_report = lexicographic_rank(&per_time)?;
        for (ti, t) in times.iter().enumerate() {
            let mut row = coord_cols.to_vec();
            row.push(t.to_string());
            row.extend(rank_report.per_time[ti].iter().map(|&r| fmt(r)));
            write_row(&mut ranking, &ranking_path, &row)?;
        }
        let mut agg = coord_cols.to_vec();
        agg.push("aggregate".to_string());
        agg.extend(rank_report.aggregate.iter().map(|&r| fmt(r)));
        write_row(&mut ranking, &ranking_path, &agg)?;

        if handlers.len() >= 2 {
            let groups: Vec<Vec<f64>> = handlers
                .iter()
                .map(|h| {
                    data.records
                        .iter()
                        .filter(|r| &r.handler == h)
                        .map(|r| r.moffe)
                        .collect()
                })
                .collect();
            let kw = kruskal_wallis(&groups)?;
            let mut row = coord_cols.to_vec();
            row.extend([
                "kruskal-wallis".to_string(),
                fmt(kw.h),
                fmt(kw.p),
                (kw.p < alpha).to_string(),
            ]);
            write_row(&mut stats, &stats_path, &row)?;
            for pair in bonferroni_pairwise(&groups, alpha)? {
                let mut row = coord_cols.to_vec();
                row.extend([
                    format!("rank-sum:{}|{}", handlers[pair.a], handlers[pair.b]),
                    fmt(pair.z),
                    fmt(pair.p_adjusted),
                    pair.significant.to_string(),
                ]);
                write_row(&mut stats, &stats_path, &row)?;
            }
        }

        write_series(out, key, data, &handlers, &times, &per_time)?;
    }
    ranking.flush().map_err(|e| Error::io(&ranking_path, e))?;
    stats.flush().map_err(|e| Error::io(&stats_path, e))?;
    Ok(())
}

/// Per-time means for one coordinate: reference objective, then f and phi
/// per handler. A violation flag lists handlers whose mean final phi is
/// materially nonzero at that time.
fn write_series(
    out: &Path,
    key: &CoordKey,
    data: &CoordData,
    handlers: &[String],
    times: &[usize],
    per_time: &[Vec<(f64, f64)>],
) -> Result<()> {
    const PHI_FLAG: f64 = 1e-8;
    let coord_dir = out.join(format!("{}_{}_{}_{}", key.0, key.1, key.2, key.3));
    let path = coord_dir.join("series.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec![
        "time".to_string(),
        "bestKnown".to_string(),
        "bestKnownFeasible".to_string(),
    ];
    for h in handlers {
        header.push(format!("{h}_f"));
        header.push(format!("{h}_phi"));
    }
    header.push("violationFlag".to_string());
    write_row(&mut w, &path, &header)?;
    for (ti, &t) in times.iter().enumerate() {
        let mut best = Vec::new();
        let mut feasible = true;
        for table in data.tables.values() {
            let entry = table.get(t).ok_or_else(|| {
                Error::report(format!("best known table misses time {t}"))
            })?;
            best.push(entry.objective);
            feasible &= entry.feasible;
        }
        if best.is_empty() {
            return Err(Error::report(format!(
                "no best known tables for {}_{}_{}_{}",
                key.0, key.1, key.2, key.3
            )));
        }
        let mean_best = best.iter().sum::<f64>() / best.len() as f64;
        let mut row = vec![t.to_string(), fmt(mean_best), feasible.to_string()];
        let mut flagged = Vec::new();
        for (h, &(f, phi)) in handlers.iter().zip(&per_time[ti]) {
            row.push(fmt(f));
            row.push(fmt(phi));
            if phi > PHI_FLAG {
                flagged.push(h.as_str());
            }
        }
        row.push(flagged.join(";"));
        write_row(&mut w, &path, &row)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mini_config(out: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            functions: vec![ObjectiveKind::Sphere],
            handlers: HandlerKind::ALL.to_vec(),
            settings: vec![SettingSpec {
                mode: ChangeMode::Translate,
                severity: SeveritySpec::Preset("medium".into()),
                tau: 100,
            }],
            modes: vec![],
            severities: vec![],
            taus: vec![],
            runs: 2,
            dimension: 5,
            bounds: BoxBounds::default(),
            changes: 3,
            buffer: 100,
            m: 3,
            p_rot: 0.5,
            swaps: 1,
            base_seed: 11,
            best_known: BestKnownSpec::Method("analytic".into()),
            de: DeConfig::default(),
            epsilon: EpsilonParams::default(),
            alpha: 0.05,
            output_dir: out,
        }
    }

    #[test]
    fn stable_hash_matches_published_vectors() {
        assert_eq!(stable_hash(""), 0xcbf29ce484222325);
        assert_eq!(stable_hash("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(stable_hash("foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn schedule_seed_ignores_handler_and_run_seed_does_not() {
        let plan = expand_matrix(&mini_config(None)).unwrap();
        let pr = &plan[0];
        let feas = pr.run_seed(HandlerKind::Feasibility);
        let pen = pr.run_seed(HandlerKind::Penalty);
        assert_ne!(feas, pen, "engine seeds must differ per handler");
        // Same coordinates in a fresh expansion derive the same seeds.
        let again = expand_matrix(&mini_config(None)).unwrap();
        assert_eq!(pr.schedule_seed, again[0].schedule_seed);
        assert_eq!(feas, again[0].run_seed(HandlerKind::Feasibility));
        // Different run index, different schedule.
        assert_ne!(plan[0].schedule_seed, plan[1].schedule_seed);
    }

    #[test]
    fn cartesian_fallback_expands_modes_severities_taus() {
        let mut cfg = mini_config(None);
        cfg.settings = vec![];
        cfg.modes = vec![ChangeMode::Translate];
        cfg.severities = vec![
            SeveritySpec::Preset("small".into()),
            SeveritySpec::Preset("large".into()),
        ];
        cfg.taus = vec![100, 200, 400];
        let plan = expand_matrix(&cfg).unwrap();
        // 1 function x (1 mode x 2 severities x 3 taus) x 2 runs.
        assert_eq!(plan.len(), 12);
    }

    #[test]
    fn full_benchmark_grid_yields_2160_jobs() {
        let mut cfg = mini_config(None);
        cfg.functions = ObjectiveKind::ALL.to_vec();
        cfg.runs = 30;
        cfg.settings = vec![
            ("translate", "small", 1000),
            ("translate", "medium", 1000),
            ("translate", "large", 1000),
            ("translate", "medium", 500),
            ("translate", "medium", 2000),
            ("translate+rotate", "medium", 1000),
        ]
        .into_iter()
        .map(|(m, s, tau)| SettingSpec {
            mode: m.parse().unwrap(),
            severity: SeveritySpec::Preset(s.into()),
            tau,
        })
        .collect();
        let plan = expand_matrix(&cfg).unwrap();
        assert_eq!(plan.len() * cfg.handlers.len(), 2160);
    }

    #[test]
    fn shipped_configs_parse_and_expand() {
        let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let cfg = ExperimentConfig::load(root.join("experiment.json")).unwrap();
        let plan = expand_matrix(&cfg).unwrap();
        assert_eq!(plan.len() * cfg.handlers.len(), 2160);
        assert!(plan.iter().all(|pr| pr.schedule_config.m == 1));

        let multi = ExperimentConfig::load(root.join("multi_constraint.json")).unwrap();
        let plan = expand_matrix(&multi).unwrap();
        assert_eq!(plan.len() * multi.handlers.len(), 360);
        assert!(plan.iter().all(|pr| pr.schedule_config.m == 3));
    }

    #[test]
    fn empty_coordinates_are_config_errors() {
        let mut cfg = mini_config(None);
        cfg.settings = vec![];
        assert!(expand_matrix(&cfg).is_err());
        let mut cfg = mini_config(None);
        cfg.functions = vec![];
        assert!(expand_matrix(&cfg).is_err());
        let mut cfg = mini_config(None);
        cfg.handlers = vec![];
        assert!(expand_matrix(&cfg).is_err());
        let mut cfg = mini_config(None);
        cfg.runs = 0;
        assert!(expand_matrix(&cfg).is_err());
    }

    #[test]
    fn analytic_tables_require_single_constraint_sphere() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = mini_config(None);
        cfg.functions = vec![ObjectiveKind::Rastrigin];
        assert!(execute(&cfg, dir.path(), Some(2), false).is_err());
        let mut cfg = mini_config(None);
        cfg.settings[0].mode = ChangeMode::MultiTranslate;
        assert!(execute(&cfg, dir.path(), Some(2), false).is_err());
    }

    #[test]
    fn matrix_end_to_end_is_idempotent_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let out_a = dir.path().join("a");
        let cfg = mini_config(None);
        let first = execute(&cfg, &out_a, Some(2), false).unwrap();
        assert_eq!(first.completed, 6);
        assert_eq!(first.skipped, 0);
        assert!(first.failed.is_empty());

        let coord = out_a.join("sphere_translate_medium_100");
        assert!(coord.join("run_00").join("schedule.json").is_file());
        assert!(coord.join("run_01").join("record_epsilon.json").is_file());
        assert!(coord.join("series.csv").is_file());
        let summary_a = std::fs::read(out_a.join("summary.csv")).unwrap();
        let lines = summary_a.split(|&b| b == b'\n').filter(|l| !l.is_empty()).count();
        assert_eq!(lines, 7, "header plus one row per job");

        // Rerun: everything skips, reports identical.
        let second = execute(&cfg, &out_a, Some(2), false).unwrap();
        assert_eq!(second.completed, 0);
        assert_eq!(second.skipped, 6);
        assert_eq!(std::fs::read(out_a.join("summary.csv")).unwrap(), summary_a);

        // Fresh directory, same seed: byte-identical artifacts.
        let out_b = dir.path().join("b");
        execute(&cfg, &out_b, Some(4), false).unwrap();
        assert_eq!(std::fs::read(out_b.join("summary.csv")).unwrap(), summary_a);
        let sched_a = std::fs::read(coord.join("run_00/schedule.json")).unwrap();
        let sched_b = std::fs::read(
            out_b.join("sphere_translate_medium_100/run_00/schedule.json"),
        )
        .unwrap();
        assert_eq!(sched_a, sched_b);

        // Ranking covers every time index plus the aggregate row.
        let ranking = std::fs::read_to_string(out_a.join("ranking.csv")).unwrap();
        assert_eq!(ranking.lines().count(), 1 + 4 + 1);
        assert!(ranking.lines().next().unwrap().ends_with("feasibility,penalty,epsilon"));
        assert!(ranking.lines().last().unwrap().contains("aggregate"));

        // Stats: one omnibus row plus three pairwise rows.
        let stats = std::fs::read_to_string(out_a.join("stats.csv")).unwrap();
        assert_eq!(stats.lines().count(), 5);
        assert!(stats.contains("kruskal-wallis"));
        assert!(stats.contains("rank-sum:feasibility|penalty"));

        let series = std::fs::read_to_string(coord.join("series.csv")).unwrap();
        assert_eq!(series.lines().count(), 5, "header plus one row per time");
    }

    #[test]
    fn force_overwrites_and_reproduces_identical_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = mini_config(None);
        execute(&cfg, dir.path(), Some(2), false).unwrap();
        let before = std::fs::read(dir.path().join("summary.csv")).unwrap();
        let report = execute(&cfg, dir.path(), Some(2), true).unwrap();
        assert_eq!(report.completed, 6);
        assert_eq!(std::fs::read(dir.path().join("summary.csv")).unwrap(), before);
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = mini_config(Some(PathBuf::from("results")));
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experiment.json");
        std::fs::write(&path, &text).unwrap();
        let back = ExperimentConfig::load(&path).unwrap();
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        assert!(text.contains("baseSeed"), "config keys are camelCase");
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"functions":["sphere"],"handlers":["feasibility"],"runs":1,"baseSeed":1,"tau":500}"#,
        )
        .unwrap();
        assert!(ExperimentConfig::load(&path).is_err(), "tau is not a top-level key");
    }
}
