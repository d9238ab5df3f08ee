//! C ABI for `monoheat`.
//!
//! Every fallible function returns an [`MhStatus`]; on failure the message is
//! available from [`mh_last_error`] on the same thread. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use monoheat::cli;
use monoheat::config::{parse_config_with, parse_graph, Command};
use monoheat::graphs::{GraphError, ScalarGraph};
use monoheat::stepper::{solve_transient, SolutionState};

/// Result codes. The first four match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhStatus {
    Ok = 0,
    NonConvergence = 1,
    Violation = 2,
    ConfigError = 3,
    InvalidArgument = 4,
    GraphError = 5,
    Panic = 6,
}

/// A monotone graph.
pub struct MhGraph {
    inner: ScalarGraph,
}

/// A completed transient solve.
pub struct MhSolution {
    inner: SolutionState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> MhStatus) -> MhStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            MhStatus::Panic
        }
    }
}

fn fail(status: MhStatus, msg: impl Into<String>) -> MhStatus {
    set_error(msg);
    status
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, MhStatus> {
    if p.is_null() {
        return Err(fail(MhStatus::InvalidArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MhStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn status_of_code(code: i32) -> MhStatus {
    match code {
        cli::EXIT_SUCCESS => MhStatus::Ok,
        cli::EXIT_NONCONVERGENCE => MhStatus::NonConvergence,
        cli::EXIT_VIOLATION => MhStatus::Violation,
        _ => MhStatus::ConfigError,
    }
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn mh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a graph expression such as `physical(h=1, s=1)` into `*out`.
///
/// # Safety
/// `expr` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_parse(expr: *const c_char, out: *mut *mut MhGraph) -> MhStatus {
    guard(|| {
        if out.is_null() {
            return fail(MhStatus::InvalidArgument, "out is null");
        }
        let text = match str_arg(expr, "expr") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_graph(text) {
            Ok(g) => {
                *out = Box::into_raw(Box::new(MhGraph { inner: g }));
                MhStatus::Ok
            }
            Err(e) => fail(MhStatus::ConfigError, e.to_string()),
        }
    })
}

/// # Safety
/// `graph` must come from [`mh_graph_parse`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_free(graph: *mut MhGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

unsafe fn graph_eval(graph: *const MhGraph, out: *mut f64, f: impl FnOnce(&ScalarGraph) -> Result<f64, GraphError>) -> MhStatus {
    guard(|| {
        if graph.is_null() || out.is_null() {
            return fail(MhStatus::InvalidArgument, "null graph or output pointer");
        }
        match f(&(*graph).inner) {
            Ok(v) => {
                *out = v;
                MhStatus::Ok
            }
            Err(e) => fail(MhStatus::GraphError, e.to_string()),
        }
    })
}

/// Minimal section at `r`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_value(graph: *const MhGraph, r: f64, out: *mut f64) -> MhStatus {
    graph_eval(graph, out, |g| Ok(g.value(r)))
}

/// Resolvent `(I + λA)⁻¹x`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_resolvent(graph: *const MhGraph, lambda: f64, x: f64, out: *mut f64) -> MhStatus {
    graph_eval(graph, out, |g| g.resolvent(lambda, x))
}

/// Yosida approximation `A_λ x`.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_yosida(graph: *const MhGraph, lambda: f64, x: f64, out: *mut f64) -> MhStatus {
    graph_eval(graph, out, |g| g.yosida(lambda, x))
}

/// Convex potential with value 0 at 0.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_potential(graph: *const MhGraph, r: f64, out: *mut f64) -> MhStatus {
    graph_eval(graph, out, |g| g.potential(r))
}

/// Moreau envelope of the potential.
///
/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_graph_moreau_envelope(graph: *const MhGraph, lambda: f64, x: f64, out: *mut f64) -> MhStatus {
    graph_eval(graph, out, |g| g.moreau_envelope(lambda, x))
}

/// Runs a configuration as the command-line tool would, writing into `out_dir`.
/// `command` may be null when the file has a `command = ...` line.
///
/// # Safety
/// String arguments must be NUL-terminated; `command` may be null.
#[no_mangle]
pub unsafe extern "C" fn mh_run(config_text: *const c_char, command: *const c_char, out_dir: *const c_char) -> MhStatus {
    guard(|| {
        let text = match str_arg(config_text, "config_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let out = match str_arg(out_dir, "out_dir") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let command = if command.is_null() {
            None
        } else {
            match str_arg(command, "command").map(|c| c.parse::<Command>()) {
                Ok(Ok(c)) => Some(c),
                Ok(Err(e)) => return fail(MhStatus::ConfigError, e.to_string()),
                Err(s) => return s,
            }
        };
        let config = match parse_config_with(text, command, true) {
            Ok(c) => c,
            Err(e) => return fail(MhStatus::ConfigError, e.to_string()),
        };
        let result = cli::run(&config, Path::new(out));
        if let Err(e) = &result {
            set_error(e.to_string());
        }
        status_of_code(cli::exit_code(&result))
    })
}

/// Solves the `[problem]` of a configuration at the smallest λ of its schedule.
///
/// # Safety
/// `config_text` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_solve(config_text: *const c_char, out: *mut *mut MhSolution) -> MhStatus {
    guard(|| {
        if out.is_null() {
            return fail(MhStatus::InvalidArgument, "out is null");
        }
        let text = match str_arg(config_text, "config_text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let config = match parse_config_with(text, Some(Command::Solve), true) {
            Ok(c) => c,
            Err(e) => return fail(MhStatus::ConfigError, e.to_string()),
        };
        let spec = config.problem.as_ref().expect("solve configs carry a problem");
        match solve_transient(spec, &config.solver) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(MhSolution { inner: s }));
                MhStatus::Ok
            }
            Err(e) => {
                let code = cli::CliError::from(e);
                fail(status_of_code(code.exit_code()), code.to_string())
            }
        }
    })
}

/// # Safety
/// `solution` must come from [`mh_solve`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_free(solution: *mut MhSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of time levels, including the initial one. 0 for null.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_levels(solution: *const MhSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.times.len())
}

/// Number of mesh nodes. 0 for null.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_node_count(solution: *const MhSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.inner.u[0].len())
}

/// Time of level `k`.
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_time(solution: *const MhSolution, k: usize, out: *mut f64) -> MhStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(MhStatus::InvalidArgument, "null solution or output pointer");
        };
        match s.inner.times.get(k) {
            Some(&t) => {
                *out = t;
                MhStatus::Ok
            }
            None => fail(MhStatus::InvalidArgument, format!("level {k} out of range")),
        }
    })
}

/// Copies the nodal `u` of level `k` into `buf`, which must hold `len` values
/// with `len` equal to [`mh_solution_node_count`].
///
/// # Safety
/// `solution` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mh_solution_copy_u(solution: *const MhSolution, k: usize, buf: *mut f64, len: usize) -> MhStatus {
    guard(|| {
        let (Some(s), false) = (solution.as_ref(), buf.is_null()) else {
            return fail(MhStatus::InvalidArgument, "null solution or buffer");
        };
        let Some(u) = s.inner.u.get(k) else {
            return fail(MhStatus::InvalidArgument, format!("level {k} out of range"));
        };
        if len != u.len() {
            return fail(MhStatus::InvalidArgument, format!("buffer holds {len} values, solution has {}", u.len()));
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(u);
        MhStatus::Ok
    })
}
