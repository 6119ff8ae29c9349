//! C ABI for the role engine.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new`/`*_parse`/`*_run` call and released by the matching `*_free`.
//! Functions return a [`RoleEngineStatus`]; on failure the message is
//! available from [`role_engine_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use role_engine::assignment::{gra_solve, QualificationMatrix};
use role_engine::cli::parse_scenario;
use role_engine::engine::{run_central, RunReport, Scenario};
use role_engine::envmap::{compute_sdf, OccupancyGrid, SignedDistanceField};
use role_engine::{bundled, Error, Point2};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoleEngineStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Infeasible = 4,
    Solver = 5,
    Io = 6,
    Panic = 7,
}

/// Occupancy grid handle.
pub struct RoleEngineGrid(OccupancyGrid);

/// Signed distance field handle.
pub struct RoleEngineSdf(SignedDistanceField);

/// Parsed scenario handle.
pub struct RoleEngineScenario(Scenario);

/// Finished run handle.
pub struct RoleEngineRun {
    report: RunReport,
    trace_csv: Option<String>,
}

/// Summary numbers of a finished run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RoleEngineMetrics {
    pub min_distance: f64,
    pub avg_jerk: f64,
    pub collision_frames: usize,
    pub replans: usize,
    pub steps_executed: usize,
    /// Non-zero when the run stopped before every agent finished.
    pub aborted: u8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> RoleEngineStatus {
    match e {
        Error::Input(_) => RoleEngineStatus::InvalidInput,
        Error::Parse { .. } => RoleEngineStatus::Parse,
        Error::Infeasible(_) => RoleEngineStatus::Infeasible,
        Error::Solver(_) => RoleEngineStatus::Solver,
        Error::Io(_) => RoleEngineStatus::Io,
    }
}

fn fail(e: Error) -> RoleEngineStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RoleEngineStatus {
    set_error(format!("{what} is null"));
    RoleEngineStatus::NullPointer
}

/// Runs `f`, turning panics into [`RoleEngineStatus::Panic`].
fn guard(f: impl FnOnce() -> RoleEngineStatus) -> RoleEngineStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            RoleEngineStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, RoleEngineStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        RoleEngineStatus::InvalidInput
    })
}

fn boxed<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn role_engine_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Empty grid of `width` x `height` cells of side `resolution` meters.
///
/// # Safety
/// `out` must be null or point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn role_engine_grid_new(
    width: usize,
    height: usize,
    resolution: f64,
    out: *mut *mut RoleEngineGrid,
) -> RoleEngineStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match OccupancyGrid::new(width, height, resolution) {
            Ok(g) => {
                boxed(out, RoleEngineGrid(g));
                RoleEngineStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// One of the built-in maps (`boxes`, `gaps`, `rooms`, `corridors`,
/// `pillars`, `hallway`).
///
/// # Safety
/// `name` must be null or a nul-terminated string; `out` as in
/// [`role_engine_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn role_engine_grid_bundled(name: *const c_char, out: *mut *mut RoleEngineGrid) -> RoleEngineStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let name = match str_arg(name, "name") {
            Ok(s) => s,
            Err(s) => return s,
        };
        match bundled::map(name) {
            Ok(g) => {
                boxed(out, RoleEngineGrid(g));
                RoleEngineStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Marks cell `(col, row)` occupied or free. Row 0 is the top row.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn role_engine_grid_set(
    grid: *mut RoleEngineGrid,
    col: usize,
    row: usize,
    occupied: bool,
) -> RoleEngineStatus {
    guard(|| {
        let Some(grid) = grid.as_mut() else { return null("grid") };
        if col >= grid.0.width() || row >= grid.0.height() {
            set_error(format!("cell ({col}, {row}) outside {}x{} grid", grid.0.width(), grid.0.height()));
            return RoleEngineStatus::InvalidInput;
        }
        grid.0.set(col, row, occupied);
        RoleEngineStatus::Ok
    })
}

/// Writes whether `(col, row)` is occupied; out-of-range cells count as
/// occupied.
///
/// # Safety
/// `grid` must be null or a live grid handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn role_engine_grid_is_occupied(
    grid: *const RoleEngineGrid,
    col: usize,
    row: usize,
    out: *mut bool,
) -> RoleEngineStatus {
    guard(|| {
        let Some(grid) = grid.as_ref() else { return null("grid") };
        if out.is_null() {
            return null("out");
        }
        *out = grid.0.is_occupied_at(col as i64, row as i64);
        RoleEngineStatus::Ok
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn role_engine_grid_free(grid: *mut RoleEngineGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Exact signed distance field of `grid` (meters, negative inside).
///
/// # Safety
/// `grid` must be null or a live grid handle; `out` as in
/// [`role_engine_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn role_engine_sdf_compute(grid: *const RoleEngineGrid, out: *mut *mut RoleEngineSdf) -> RoleEngineStatus {
    guard(|| {
        let Some(grid) = grid.as_ref() else { return null("grid") };
        if out.is_null() {
            return null("out");
        }
        boxed(out, RoleEngineSdf(compute_sdf(&grid.0)));
        RoleEngineStatus::Ok
    })
}

/// Bilinearly interpolated distance at `(x, y)` meters.
///
/// # Safety
/// `sdf` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn role_engine_sdf_value(sdf: *const RoleEngineSdf, x: f64, y: f64, out: *mut f64) -> RoleEngineStatus {
    guard(|| {
        let Some(sdf) = sdf.as_ref() else { return null("sdf") };
        if out.is_null() {
            return null("out");
        }
        *out = sdf.0.value(&Point2::new(x, y));
        RoleEngineStatus::Ok
    })
}

/// # Safety
/// `sdf` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn role_engine_sdf_free(sdf: *mut RoleEngineSdf) {
    if !sdf.is_null() {
        drop(Box::from_raw(sdf));
    }
}

/// Minimum-cost assignment of `m` agents to `n` roles over the row-major
/// `m * n` cost matrix (`INFINITY` marks forbidden pairs). Writes the role
/// index of every agent to `role_of_agent` (`-1` when idle) and the summed
/// cost to `total`.
///
/// # Safety
/// `costs` must point to `m * n` doubles, `role_of_agent` to `m` writable
/// `intptr_t`s and `total` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn role_engine_assign(
    costs: *const f64,
    m: usize,
    n: usize,
    role_of_agent: *mut isize,
    total: *mut f64,
) -> RoleEngineStatus {
    guard(|| {
        if costs.is_null() || role_of_agent.is_null() || total.is_null() {
            return null("costs, role_of_agent or total");
        }
        let Some(len) = m.checked_mul(n) else {
            set_error(format!("{m} x {n} cost matrix is too large"));
            return RoleEngineStatus::InvalidInput;
        };
        let q = std::slice::from_raw_parts(costs, len).to_vec();
        let result = QualificationMatrix::from_costs(m, n, q).and_then(|q| gra_solve(&q));
        match result {
            Ok(a) => {
                let out = std::slice::from_raw_parts_mut(role_of_agent, m);
                out.fill(-1);
                for (agent, role) in a.pairs {
                    out[agent] = role as isize;
                }
                *total = a.total_cost;
                RoleEngineStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Parses a TOML scenario. Relative map paths resolve against `base_dir`
/// (null means the working directory).
///
/// # Safety
/// `toml` and `base_dir` must be null or nul-terminated strings; `out` as
/// in [`role_engine_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn role_engine_scenario_parse(
    toml: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut RoleEngineScenario,
) -> RoleEngineStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let text = match str_arg(toml, "toml") {
            Ok(s) => s,
            Err(s) => return s,
        };
        let base = if base_dir.is_null() {
            "."
        } else {
            match str_arg(base_dir, "base_dir") {
                Ok(s) => s,
                Err(s) => return s,
            }
        };
        match parse_scenario(text, Path::new(base)) {
            Ok(s) => {
                boxed(out, RoleEngineScenario(s));
                RoleEngineStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn role_engine_scenario_free(scenario: *mut RoleEngineScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs negotiation, assignment, role-playing and monitoring. An infeasible
/// scenario still yields a run (with `aborted` set and no steps).
///
/// # Safety
/// `scenario` must be null or a live handle; `out` as in
/// [`role_engine_grid_new`].
#[no_mangle]
pub unsafe extern "C" fn role_engine_run(scenario: *const RoleEngineScenario, out: *mut *mut RoleEngineRun) -> RoleEngineStatus {
    guard(|| {
        let Some(scenario) = scenario.as_ref() else { return null("scenario") };
        if out.is_null() {
            return null("out");
        }
        match run_central(&scenario.0) {
            Ok(outcome) => {
                let trace_csv = outcome.trace.as_ref().map(|t| t.to_csv());
                boxed(out, RoleEngineRun { report: RunReport::new(&scenario.0, &outcome), trace_csv });
                RoleEngineStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Summary metrics of a run. Distance and jerk are NaN when no agent moved.
///
/// # Safety
/// `run` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn role_engine_run_metrics(run: *const RoleEngineRun, out: *mut RoleEngineMetrics) -> RoleEngineStatus {
    guard(|| {
        let Some(run) = run.as_ref() else { return null("run") };
        if out.is_null() {
            return null("out");
        }
        let r = &run.report;
        let m = r.metrics.as_ref();
        *out = RoleEngineMetrics {
            min_distance: m.map_or(f64::NAN, |m| m.min_distance),
            avg_jerk: m.map_or(f64::NAN, |m| m.avg_jerk),
            collision_frames: m.map_or(0, |m| m.collision_frames),
            replans: r.replans.len(),
            steps_executed: r.steps_executed,
            aborted: r.aborted.is_some() as u8,
        };
        RoleEngineStatus::Ok
    })
}

/// Full run report as a JSON string owned by the caller; release it with
/// [`role_engine_string_free`].
///
/// # Safety
/// `run` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn role_engine_run_report_json(run: *const RoleEngineRun, out: *mut *mut c_char) -> RoleEngineStatus {
    guard(|| {
        let Some(run) = run.as_ref() else { return null("run") };
        if out.is_null() {
            return null("out");
        }
        let json = CString::new(run.report.to_json()).expect("json has no nul");
        *out = json.into_raw();
        RoleEngineStatus::Ok
    })
}

/// Executed trace as CSV (`step,agent_id,x,y,vx,vy,published_version`),
/// owned by the caller. Writes null when the run never started.
///
/// # Safety
/// `run` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn role_engine_run_trace_csv(run: *const RoleEngineRun, out: *mut *mut c_char) -> RoleEngineStatus {
    guard(|| {
        let Some(run) = run.as_ref() else { return null("run") };
        if out.is_null() {
            return null("out");
        }
        *out = run
            .trace_csv
            .as_ref()
            .map_or(ptr::null_mut(), |csv| CString::new(csv.as_str()).expect("csv has no nul").into_raw());
        RoleEngineStatus::Ok
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn role_engine_run_free(run: *mut RoleEngineRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn role_engine_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
