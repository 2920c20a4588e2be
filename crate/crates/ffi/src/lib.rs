//! C ABI over the core crate: opaque handles, integer status codes, and a
//! thread-local error message. Every entry point catches panics, so no
//! unwind ever crosses the boundary.
//!
//! Ownership rules: `*_generate`, `*_load`, `*_from_json` and `dlc_run`
//! allocate handles released by the matching `*_free`; strings returned
//! through `char**` are released by `dlc_string_free`. Passing null where a
//! handle is expected fails with `NULL_POINTER` instead of crashing, but
//! dangling or foreign pointers are undefined behavior as in any C API.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dlcbench::constraints::{
    build_schedule, feasible_region_ratio, sphere_optimum, ChangeClock, ChangeMode,
    ConstraintSchedule, ScheduleConfig, SeverityProfile,
};
use dlcbench::engine::{self, DeConfig, Instance, RunTrace};
use dlcbench::error::Error;
use dlcbench::handlers::{EpsilonParams, HandlerKind};
use dlcbench::metrics::{best_known, kruskal_wallis, modified_offline_error, BestKnownTable};
use dlcbench::objectives::{BoxBounds, ObjectiveKind};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or inconsistent.
    InvalidArgument = 2,
    /// File system or serialization failure.
    IoError = 3,
    /// The operation itself failed; see the error message.
    RuntimeError = 4,
    /// An internal invariant broke. State is unspecified afterwards.
    Panic = 5,
}

/// Objective function codes for `uint32_t` arguments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcObjective {
    Sphere = 0,
    Rastrigin = 1,
    Ackley = 2,
    Rosenbrock = 3,
}

/// Constraint handling strategy codes for `uint32_t` arguments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcHandler {
    Feasibility = 0,
    Penalty = 1,
    Epsilon = 2,
}

/// Change mode codes for `uint32_t` arguments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcMode {
    Translate = 0,
    TranslateRotate = 1,
    MultiTranslate = 2,
}

/// Severity preset codes for `uint32_t` arguments.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlcSeverity {
    Small = 0,
    Medium = 1,
    Large = 2,
}

/// Schedule generation parameters. Obtain defaults from
/// `dlc_schedule_params_default`, then override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DlcScheduleParams {
    pub dimension: usize,
    pub lower: f64,
    pub upper: f64,
    /// Trial evaluations between consecutive changes.
    pub tau: u64,
    /// Trial evaluations before the first change.
    pub buffer: u64,
    /// Number of changes after the initial frame.
    pub changes: u32,
    /// One of the `DlcMode` values.
    pub mode: u32,
    /// One of the `DlcSeverity` values.
    pub severity: u32,
    /// Constraints per frame; only multi-translate uses values above 1.
    pub m: usize,
    /// Rotation probability per change (translate+rotate only).
    pub p_rot: f64,
    /// Coefficient pair swaps per rotation.
    pub swaps: usize,
    pub seed: u64,
}

/// Opaque handle to a constraint schedule.
pub struct DlcSchedule(ConstraintSchedule);

/// Opaque handle to a per-frame reference objective table.
pub struct DlcTable(BestKnownTable);

/// Opaque handle to one optimization run's per-generation trace.
pub struct DlcTrace(RunTrace);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nul bytes stripped above");
    });
}

fn fail(status: DlcStatus, msg: impl Into<String>) -> DlcStatus {
    set_error(msg.into());
    status
}

fn core_error(err: Error) -> DlcStatus {
    let status = match err {
        Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } => DlcStatus::IoError,
        Error::Config(_) => DlcStatus::InvalidArgument,
        Error::Stats(_) | Error::Report(_) => DlcStatus::RuntimeError,
    };
    fail(status, err.to_string())
}

type FfiResult = Result<(), DlcStatus>;

fn guarded(f: impl FnOnce() -> FfiResult) -> DlcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DlcStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "non-string panic payload".to_string());
            fail(DlcStatus::Panic, format!("internal panic: {msg}"));
            DlcStatus::Panic
        }
    }
}

unsafe fn arg_ref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, DlcStatus> {
    if ptr.is_null() {
        Err(fail(DlcStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(&*ptr)
    }
}

unsafe fn arg_out<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, DlcStatus> {
    if ptr.is_null() {
        Err(fail(DlcStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(&mut *ptr)
    }
}

unsafe fn arg_slice<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], DlcStatus> {
    if ptr.is_null() {
        return Err(fail(DlcStatus::NullPointer, format!("{name} is null")));
    }
    if len == 0 {
        return Err(fail(
            DlcStatus::InvalidArgument,
            format!("{name} must hold at least one element"),
        ));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn arg_path<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, DlcStatus> {
    if ptr.is_null() {
        return Err(fail(DlcStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        fail(
            DlcStatus::InvalidArgument,
            format!("{name} is not valid utf-8"),
        )
    })
}

fn objective_from(code: u32) -> Result<ObjectiveKind, DlcStatus> {
    match code {
        0 => Ok(ObjectiveKind::Sphere),
        1 => Ok(ObjectiveKind::Rastrigin),
        2 => Ok(ObjectiveKind::Ackley),
        3 => Ok(ObjectiveKind::Rosenbrock),
        other => Err(fail(
            DlcStatus::InvalidArgument,
            format!("unknown objective code {other}"),
        )),
    }
}

fn handler_from(code: u32) -> Result<HandlerKind, DlcStatus> {
    match code {
        0 => Ok(HandlerKind::Feasibility),
        1 => Ok(HandlerKind::Penalty),
        2 => Ok(HandlerKind::Epsilon),
        other => Err(fail(
            DlcStatus::InvalidArgument,
            format!("unknown handler code {other}"),
        )),
    }
}

fn mode_from(code: u32) -> Result<ChangeMode, DlcStatus> {
    match code {
        0 => Ok(ChangeMode::Translate),
        1 => Ok(ChangeMode::TranslateRotate),
        2 => Ok(ChangeMode::MultiTranslate),
        other => Err(fail(
            DlcStatus::InvalidArgument,
            format!("unknown mode code {other}"),
        )),
    }
}

fn severity_from(code: u32) -> Result<SeverityProfile, DlcStatus> {
    match code {
        0 => Ok(SeverityProfile::SMALL),
        1 => Ok(SeverityProfile::MEDIUM),
        2 => Ok(SeverityProfile::LARGE),
        other => Err(fail(
            DlcStatus::InvalidArgument,
            format!("unknown severity code {other}"),
        )),
    }
}

fn frame_index<'a>(
    schedule: &'a ConstraintSchedule,
    t: usize,
) -> Result<&'a dlcbench::constraints::Frame, DlcStatus> {
    if t >= schedule.frames.len() {
        return Err(fail(
            DlcStatus::InvalidArgument,
            format!(
                "time index {t} out of range, schedule has {} frames",
                schedule.frames.len()
            ),
        ));
    }
    Ok(schedule.frame(t))
}

/// Message of the most recent failure on the calling thread. The pointer
/// stays valid until the next failing call on the same thread; never free
/// it. Returns an empty string when nothing failed yet.
#[no_mangle]
pub extern "C" fn dlc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Release a string returned through a `char**` out parameter. Null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn dlc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fill `out` with the default generation parameters: dimension 30 on
/// [-5, 5], tau 1000, buffer 1000, 100 changes, translate mode, medium
/// severity, one constraint, seed 0.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_params_default(out: *mut DlcScheduleParams) -> DlcStatus {
    guarded(|| {
        let out = arg_out(out, "out")?;
        *out = DlcScheduleParams {
            dimension: 30,
            lower: -5.0,
            upper: 5.0,
            tau: 1000,
            buffer: 1000,
            changes: 100,
            mode: DlcMode::Translate as u32,
            severity: DlcSeverity::Medium as u32,
            m: 1,
            p_rot: 0.5,
            swaps: 1,
            seed: 0,
        };
        Ok(())
    })
}

/// Generate a schedule from `params` into a new handle.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_generate(
    params: *const DlcScheduleParams,
    out: *mut *mut DlcSchedule,
) -> DlcStatus {
    guarded(|| {
        let params = arg_ref(params, "params")?;
        let out = arg_out(out, "out")?;
        let mode = mode_from(params.mode)?;
        let config = ScheduleConfig {
            dimension: params.dimension,
            bounds: BoxBounds::new(params.lower, params.upper).map_err(core_error)?,
            clock: ChangeClock::new(params.tau, params.buffer, params.changes)
                .map_err(core_error)?,
            mode,
            severity: severity_from(params.severity)?,
            m: if mode == ChangeMode::MultiTranslate {
                params.m
            } else {
                1
            },
            p_rot: params.p_rot,
            swaps: params.swaps,
            seed: params.seed,
        };
        let schedule = build_schedule(&config).map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcSchedule(schedule)));
        Ok(())
    })
}

/// Parse a schedule from its JSON text into a new handle.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_from_json(
    json: *const c_char,
    out: *mut *mut DlcSchedule,
) -> DlcStatus {
    guarded(|| {
        let json = arg_path(json, "json")?;
        let out = arg_out(out, "out")?;
        let schedule = ConstraintSchedule::from_json_string(json).map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcSchedule(schedule)));
        Ok(())
    })
}

/// Serialize a schedule to JSON. The returned string is released with
/// `dlc_string_free`.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_to_json(
    schedule: *const DlcSchedule,
    out: *mut *mut c_char,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        let text = schedule.0.to_json_string();
        let c = CString::new(text)
            .map_err(|_| fail(DlcStatus::RuntimeError, "json contained a nul byte"))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Load a schedule from a JSON file into a new handle.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_load(
    path: *const c_char,
    out: *mut *mut DlcSchedule,
) -> DlcStatus {
    guarded(|| {
        let path = arg_path(path, "path")?;
        let out = arg_out(out, "out")?;
        let schedule = ConstraintSchedule::load(path).map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcSchedule(schedule)));
        Ok(())
    })
}

/// Write a schedule to a JSON file.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_save(
    schedule: *const DlcSchedule,
    path: *const c_char,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let path = arg_path(path, "path")?;
        schedule.0.save(path).map_err(core_error)
    })
}

/// Release a schedule handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_free(schedule: *mut DlcSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Number of frames (initial frame plus one per change).
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_frame_count(
    schedule: *const DlcSchedule,
    out: *mut usize,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        *out = schedule.0.frames.len();
        Ok(())
    })
}

/// Decision space dimension.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_dimension(
    schedule: *const DlcSchedule,
    out: *mut usize,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        *out = schedule.0.dimension;
        Ok(())
    })
}

/// Total trial evaluation budget of the schedule's clock.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_budget(
    schedule: *const DlcSchedule,
    out: *mut u64,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        *out = schedule.0.clock.total_budget();
        Ok(())
    })
}

/// Evaluate one objective at `x`.
#[no_mangle]
pub unsafe extern "C" fn dlc_objective_eval(
    objective: u32,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> DlcStatus {
    guarded(|| {
        let x = arg_slice(x, len, "x")?;
        let out = arg_out(out, "out")?;
        let kind = objective_from(objective)?;
        *out = kind.evaluate(x);
        Ok(())
    })
}

/// Summed constraint violation of `x` under the frame at time `t`; zero
/// exactly when `x` is feasible.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_violation(
    schedule: *const DlcSchedule,
    t: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let x = arg_slice(x, len, "x")?;
        let out = arg_out(out, "out")?;
        if len != schedule.0.dimension {
            return Err(fail(
                DlcStatus::InvalidArgument,
                format!(
                    "point has {len} coordinates, schedule dimension is {}",
                    schedule.0.dimension
                ),
            ));
        }
        let frame = frame_index(&schedule.0, t)?;
        *out = frame.sum_violation(x);
        Ok(())
    })
}

/// Monte Carlo estimate of the feasible fraction of the box under the frame
/// at time `t`.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_region_ratio(
    schedule: *const DlcSchedule,
    t: usize,
    samples: u64,
    seed: u64,
    out: *mut f64,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        if samples == 0 {
            return Err(fail(
                DlcStatus::InvalidArgument,
                "samples must be positive",
            ));
        }
        let frame = frame_index(&schedule.0, t)?;
        *out = feasible_region_ratio(&frame.constraints, schedule.0.bounds, samples, seed);
        Ok(())
    })
}

/// Closed-form sphere optimum under the frame at time `t`. Only frames with
/// exactly one constraint are supported. `out_feasible` is false when the
/// frame admits no feasible point; `out_value` then belongs to the
/// least-violating corner.
#[no_mangle]
pub unsafe extern "C" fn dlc_schedule_sphere_optimum(
    schedule: *const DlcSchedule,
    t: usize,
    out_value: *mut f64,
    out_feasible: *mut bool,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out_value = arg_out(out_value, "out_value")?;
        let out_feasible = arg_out(out_feasible, "out_feasible")?;
        let frame = frame_index(&schedule.0, t)?;
        if frame.constraints.len() != 1 {
            return Err(fail(
                DlcStatus::InvalidArgument,
                format!(
                    "sphere optimum needs exactly one constraint, frame {t} has {}",
                    frame.constraints.len()
                ),
            ));
        }
        let opt = sphere_optimum(&frame.constraints[0], schedule.0.bounds);
        *out_value = opt.value;
        *out_feasible = opt.feasible;
        Ok(())
    })
}

/// Optimize `schedule` with the default engine settings and the chosen
/// objective and handler. The trace handle is released with
/// `dlc_trace_free`.
#[no_mangle]
pub unsafe extern "C" fn dlc_run(
    schedule: *const DlcSchedule,
    objective: u32,
    handler: u32,
    seed: u64,
    out: *mut *mut DlcTrace,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        let objective = objective_from(objective)?;
        let handler = handler_from(handler)?;
        let instance = Instance::new(objective, schedule.0.clone()).map_err(core_error)?;
        let trace = engine::run(
            &instance,
            handler,
            &EpsilonParams::default(),
            &DeConfig::default(),
            seed,
        )
        .map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcTrace(trace)));
        Ok(())
    })
}

/// Release a trace handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dlc_trace_free(trace: *mut DlcTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of per-generation records in the trace.
#[no_mangle]
pub unsafe extern "C" fn dlc_trace_record_count(
    trace: *const DlcTrace,
    out: *mut usize,
) -> DlcStatus {
    guarded(|| {
        let trace = arg_ref(trace, "trace")?;
        let out = arg_out(out, "out")?;
        *out = trace.0.records.len();
        Ok(())
    })
}

/// Number of final-best entries, one per time index the run observed.
#[no_mangle]
pub unsafe extern "C" fn dlc_trace_final_best_count(
    trace: *const DlcTrace,
    out: *mut usize,
) -> DlcStatus {
    guarded(|| {
        let trace = arg_ref(trace, "trace")?;
        let out = arg_out(out, "out")?;
        *out = trace.0.final_bests.len();
        Ok(())
    })
}

/// Final best of entry `index`: its time index, objective and violation.
#[no_mangle]
pub unsafe extern "C" fn dlc_trace_final_best(
    trace: *const DlcTrace,
    index: usize,
    out_t: *mut usize,
    out_f: *mut f64,
    out_phi: *mut f64,
) -> DlcStatus {
    guarded(|| {
        let trace = arg_ref(trace, "trace")?;
        let out_t = arg_out(out_t, "out_t")?;
        let out_f = arg_out(out_f, "out_f")?;
        let out_phi = arg_out(out_phi, "out_phi")?;
        let fb = trace.0.final_bests.get(index).ok_or_else(|| {
            fail(
                DlcStatus::InvalidArgument,
                format!(
                    "final best index {index} out of range, trace has {}",
                    trace.0.final_bests.len()
                ),
            )
        })?;
        *out_t = fb.t;
        *out_f = fb.f;
        *out_phi = fb.phi;
        Ok(())
    })
}

/// Write the trace as a CSV file, one row per generation.
#[no_mangle]
pub unsafe extern "C" fn dlc_trace_write_csv(
    trace: *const DlcTrace,
    path: *const c_char,
) -> DlcStatus {
    guarded(|| {
        let trace = arg_ref(trace, "trace")?;
        let path = arg_path(path, "path")?;
        trace.0.write_csv(path).map_err(core_error)
    })
}

/// Per-frame reference objectives found by an independent static search
/// with `evals` evaluations per frame. The handle is released with
/// `dlc_table_free`.
#[no_mangle]
pub unsafe extern "C" fn dlc_best_known_search(
    schedule: *const DlcSchedule,
    objective: u32,
    evals: u64,
    seed: u64,
    out: *mut *mut DlcTable,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        let objective = objective_from(objective)?;
        let table = best_known(&schedule.0, objective, evals, seed).map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcTable(table)));
        Ok(())
    })
}

/// Closed-form per-frame sphere optima. Only single-constraint schedules
/// are supported.
#[no_mangle]
pub unsafe extern "C" fn dlc_best_known_analytic(
    schedule: *const DlcSchedule,
    out: *mut *mut DlcTable,
) -> DlcStatus {
    guarded(|| {
        let schedule = arg_ref(schedule, "schedule")?;
        let out = arg_out(out, "out")?;
        let table = BestKnownTable::analytic_sphere(&schedule.0).map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcTable(table)));
        Ok(())
    })
}

/// Release a table handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dlc_table_free(table: *mut DlcTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Load a reference table from a JSON file into a new handle.
#[no_mangle]
pub unsafe extern "C" fn dlc_table_load(path: *const c_char, out: *mut *mut DlcTable) -> DlcStatus {
    guarded(|| {
        let path = arg_path(path, "path")?;
        let out = arg_out(out, "out")?;
        let table = BestKnownTable::load(path).map_err(core_error)?;
        *out = Box::into_raw(Box::new(DlcTable(table)));
        Ok(())
    })
}

/// Write a reference table to a JSON file.
#[no_mangle]
pub unsafe extern "C" fn dlc_table_save(
    table: *const DlcTable,
    path: *const c_char,
) -> DlcStatus {
    guarded(|| {
        let table = arg_ref(table, "table")?;
        let path = arg_path(path, "path")?;
        table.0.save(path).map_err(core_error)
    })
}

/// Number of entries in the table.
#[no_mangle]
pub unsafe extern "C" fn dlc_table_entry_count(
    table: *const DlcTable,
    out: *mut usize,
) -> DlcStatus {
    guarded(|| {
        let table = arg_ref(table, "table")?;
        let out = arg_out(out, "out")?;
        *out = table.0.entries.len();
        Ok(())
    })
}

/// Reference objective at time `t`. `out_feasible` is false when the frame
/// admits no feasible point in the box.
#[no_mangle]
pub unsafe extern "C" fn dlc_table_get(
    table: *const DlcTable,
    t: usize,
    out_objective: *mut f64,
    out_feasible: *mut bool,
) -> DlcStatus {
    guarded(|| {
        let table = arg_ref(table, "table")?;
        let out_objective = arg_out(out_objective, "out_objective")?;
        let out_feasible = arg_out(out_feasible, "out_feasible")?;
        let entry = table.0.get(t).ok_or_else(|| {
            fail(
                DlcStatus::InvalidArgument,
                format!("table has no entry for time {t}"),
            )
        })?;
        *out_objective = entry.objective;
        *out_feasible = entry.feasible;
        Ok(())
    })
}

/// Mean absolute gap between the per-generation error terms of `trace` and
/// the reference objectives in `table`.
#[no_mangle]
pub unsafe extern "C" fn dlc_modified_offline_error(
    trace: *const DlcTrace,
    table: *const DlcTable,
    out: *mut f64,
) -> DlcStatus {
    guarded(|| {
        let trace = arg_ref(trace, "trace")?;
        let table = arg_ref(table, "table")?;
        let out = arg_out(out, "out")?;
        *out = modified_offline_error(&trace.0, &table.0).map_err(core_error)?;
        Ok(())
    })
}

/// Tie-corrected Kruskal-Wallis test over `groups` groups. `values` holds
/// all observations back to back; `group_sizes[i]` is the length of group
/// `i`, so `values` must hold the sum of all sizes.
#[no_mangle]
pub unsafe extern "C" fn dlc_kruskal_wallis(
    values: *const f64,
    group_sizes: *const usize,
    groups: usize,
    out_h: *mut f64,
    out_p: *mut f64,
) -> DlcStatus {
    guarded(|| {
        if group_sizes.is_null() {
            return Err(fail(DlcStatus::NullPointer, "group_sizes is null"));
        }
        if groups < 2 {
            return Err(fail(
                DlcStatus::InvalidArgument,
                "the test needs at least two groups",
            ));
        }
        let sizes = std::slice::from_raw_parts(group_sizes, groups);
        let total: usize = sizes.iter().sum();
        let values = arg_slice(values, total, "values")?;
        let out_h = arg_out(out_h, "out_h")?;
        let out_p = arg_out(out_p, "out_p")?;
        let mut grouped = Vec::with_capacity(groups);
        let mut offset = 0;
        for &size in sizes {
            grouped.push(values[offset..offset + size].to_vec());
            offset += size;
        }
        let kw = kruskal_wallis(&grouped).map_err(core_error)?;
        *out_h = kw.h;
        *out_p = kw.p;
        Ok(())
    })
}
