//! C interface to the `teamsearch` solvers.
//!
//! Every function returns a [`TsStatus`]; results are written through out
//! pointers. Handles are opaque and must be released with the matching
//! `*_free` function. After a non-OK status, [`ts_last_error_message`]
//! returns a description of the failure on the calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use teamsearch::compare::planner_optimal_chain;
use teamsearch::{
    chain_welfare, equilibrium_exit_schedule, phase_stats, AllianceChain, CostSpec, Error, ExitSchedule,
    ScenarioConfig, ScopeBounds, WelfareReport,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Unsupported = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// A validated scenario: cost functions and scope bounds.
pub struct TsScenario {
    inner: ScenarioConfig,
}

/// Equilibrium exit schedule with its expected payoffs.
pub struct TsSchedule {
    schedule: ExitSchedule,
    welfare: WelfareReport,
}

/// Planner-optimal alliance chain with its expected payoffs.
pub struct TsChain {
    chain: AllianceChain,
    welfare: WelfareReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidBounds { .. } | Error::InvalidSimConfig(_) => {
            TsStatus::Config
        }
        Error::Unsupported(_) | Error::NotProportional(_) | Error::EnumerationCap { .. } => TsStatus::Unsupported,
        _ => TsStatus::Numerical,
    }
}

fn fail(status: TsStatus, msg: impl Into<String>) -> TsStatus {
    set_error(msg.into());
    status
}

fn guard<F: FnOnce() -> TsStatus>(f: F) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(TsStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: teamsearch::Result<T>) -> Result<T, TsStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

macro_rules! out_ptr {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => return fail(TsStatus::NullPointer, concat!("null pointer: ", stringify!($p))),
        }
    };
}

macro_rules! in_ref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(r) => r,
            None => return fail(TsStatus::NullPointer, concat!("null pointer: ", stringify!($p))),
        }
    };
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Copy `s` into `buf` (NUL-terminated, truncated to `len`); `needed`
/// receives the full length including the terminator.
unsafe fn write_str(s: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> TsStatus {
    if let Some(n) = needed.as_mut() {
        *n = s.len() + 1;
    }
    if buf.is_null() || len == 0 {
        return TsStatus::Ok;
    }
    let n = s.len().min(len - 1);
    ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, n);
    *buf.add(n) = 0;
    TsStatus::Ok
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ts_status_string(status: TsStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        TsStatus::Ok => b"ok\0",
        TsStatus::NullPointer => b"null pointer\0",
        TsStatus::InvalidArgument => b"invalid argument\0",
        TsStatus::Config => b"invalid configuration\0",
        TsStatus::Numerical => b"numerical failure\0",
        TsStatus::Unsupported => b"unsupported\0",
        TsStatus::OutOfRange => b"index out of range\0",
        TsStatus::Panic => b"internal panic\0",
    };
    s.as_ptr() as *const c_char
}

/// Message of the last failure on this thread; see [`write_str`] for the
/// buffer convention.
#[no_mangle]
pub unsafe extern "C" fn ts_last_error_message(buf: *mut c_char, len: usize, needed: *mut usize) -> TsStatus {
    LAST_ERROR.with(|e| write_str(&e.borrow(), buf, len, needed))
}

/// Parse and validate a TOML scenario.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_from_toml(text: *const c_char, out: *mut *mut TsScenario) -> TsStatus {
    guard(|| {
        let out = out_ptr!(out);
        *out = ptr::null_mut();
        if text.is_null() {
            return fail(TsStatus::NullPointer, "null pointer: text");
        }
        let text = match CStr::from_ptr(text).to_str() {
            Ok(t) => t,
            Err(e) => return fail(TsStatus::InvalidArgument, format!("scenario is not UTF-8: {e}")),
        };
        let inner = tri!(lift(ScenarioConfig::from_toml_str(text)));
        *out = Box::into_raw(Box::new(TsScenario { inner }));
        TsStatus::Ok
    })
}

/// Team with costs `e^{bσ}/β_i` and scope bounds `[lo, hi]`.
#[no_mangle]
pub unsafe extern "C" fn ts_scenario_new_exponential(
    b: f64,
    betas: *const f64,
    n_agents: usize,
    lo: f64,
    hi: f64,
    out: *mut *mut TsScenario,
) -> TsStatus {
    guard(|| {
        let out = out_ptr!(out);
        *out = ptr::null_mut();
        if betas.is_null() || n_agents == 0 {
            return fail(TsStatus::InvalidArgument, "need at least one agent");
        }
        let betas = std::slice::from_raw_parts(betas, n_agents);
        let list = betas.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ");
        let text = format!(
            "[scope_bounds]\nlo = {lo:?}\nhi = {hi:?}\n[well_ordered]\nbetas = [{list}]\ncost = {{ family = \"scaled_exponential\", b = {b:?} }}\n"
        );
        let inner = tri!(lift(ScenarioConfig::from_toml_str(&text)));
        *out = Box::into_raw(Box::new(TsScenario { inner }));
        TsStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_scenario_free(scenario: *mut TsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ts_scenario_agent_count(scenario: *const TsScenario, out: *mut usize) -> TsStatus {
    guard(|| {
        let s = in_ref!(scenario);
        *out_ptr!(out) = s.inner.agents.len();
        TsStatus::Ok
    })
}

fn costs_bounds(s: &TsScenario) -> (&[CostSpec], &ScopeBounds) {
    (&s.inner.agents, &s.inner.scope_bounds)
}

/// Equilibrium exit schedule of the full team.
#[no_mangle]
pub unsafe extern "C" fn ts_equilibrium_schedule(scenario: *const TsScenario, out: *mut *mut TsSchedule) -> TsStatus {
    guard(|| {
        let s = in_ref!(scenario);
        let out = out_ptr!(out);
        *out = ptr::null_mut();
        let (costs, bounds) = costs_bounds(s);
        let schedule = tri!(lift(equilibrium_exit_schedule(costs, bounds)));
        let welfare = tri!(lift(chain_welfare(&schedule, costs)));
        *out = Box::into_raw(Box::new(TsSchedule { schedule, welfare }));
        TsStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_schedule_free(schedule: *mut TsSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ts_schedule_wave_count(schedule: *const TsSchedule, out: *mut usize) -> TsStatus {
    guard(|| {
        *out_ptr!(out) = in_ref!(schedule).schedule.len();
        TsStatus::Ok
    })
}

/// Trigger drawdown of wave `wave` (zero-based).
#[no_mangle]
pub unsafe extern "C" fn ts_schedule_trigger(schedule: *const TsSchedule, wave: usize, out: *mut f64) -> TsStatus {
    guard(|| {
        let s = in_ref!(schedule);
        let out = out_ptr!(out);
        match s.schedule.waves.get(wave) {
            Some(w) => {
                *out = w.trigger;
                TsStatus::Ok
            }
            None => fail(TsStatus::OutOfRange, format!("wave {wave} of {}", s.schedule.len())),
        }
    })
}

/// Zero-based wave in which `agent` (zero-based) exits.
#[no_mangle]
pub unsafe extern "C" fn ts_schedule_wave_of(schedule: *const TsSchedule, agent: usize, out: *mut usize) -> TsStatus {
    guard(|| {
        let s = in_ref!(schedule);
        let out = out_ptr!(out);
        match s.schedule.wave_of(agent) {
            Some(w) => {
                *out = w;
                TsStatus::Ok
            }
            None => fail(
                TsStatus::OutOfRange,
                format!("agent {agent} of {}", s.schedule.team_size),
            ),
        }
    })
}

fn payoff(w: &WelfareReport, agent: usize, out: &mut f64) -> TsStatus {
    match w.per_agent.get(agent) {
        Some(v) => {
            *out = *v;
            TsStatus::Ok
        }
        None => fail(TsStatus::OutOfRange, format!("agent {agent} of {}", w.per_agent.len())),
    }
}

/// Expected equilibrium payoff of `agent` from the initial state.
#[no_mangle]
pub unsafe extern "C" fn ts_schedule_payoff(schedule: *const TsSchedule, agent: usize, out: *mut f64) -> TsStatus {
    guard(|| payoff(&in_ref!(schedule).welfare, agent, out_ptr!(out)))
}

#[no_mangle]
pub unsafe extern "C" fn ts_schedule_total_welfare(schedule: *const TsSchedule, out: *mut f64) -> TsStatus {
    guard(|| {
        *out_ptr!(out) = in_ref!(schedule).welfare.total;
        TsStatus::Ok
    })
}

/// Partition label such as `{1,2}{3}`.
#[no_mangle]
pub unsafe extern "C" fn ts_schedule_label(
    schedule: *const TsSchedule,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TsStatus {
    guard(|| write_str(&in_ref!(schedule).schedule.label(), buf, len, needed))
}

/// Planner-optimal chain: greedy for proportional costs, exhaustive
/// search otherwise.
#[no_mangle]
pub unsafe extern "C" fn ts_planner_chain(scenario: *const TsScenario, out: *mut *mut TsChain) -> TsStatus {
    guard(|| {
        let s = in_ref!(scenario);
        let out = out_ptr!(out);
        *out = ptr::null_mut();
        let (costs, bounds) = costs_bounds(s);
        let (chain, _) = tri!(lift(planner_optimal_chain(costs, bounds)));
        let welfare = tri!(lift(chain_welfare(&chain, costs)));
        *out = Box::into_raw(Box::new(TsChain { chain, welfare }));
        TsStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_free(chain: *mut TsChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_len(chain: *const TsChain, out: *mut usize) -> TsStatus {
    guard(|| {
        *out_ptr!(out) = in_ref!(chain).chain.len();
        TsStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_drawdown(chain: *const TsChain, stage: usize, out: *mut f64) -> TsStatus {
    guard(|| {
        let c = in_ref!(chain);
        let out = out_ptr!(out);
        match c.chain.drawdowns.get(stage) {
            Some(d) => {
                *out = *d;
                TsStatus::Ok
            }
            None => fail(TsStatus::OutOfRange, format!("stage {stage} of {}", c.chain.len())),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_stage_of(chain: *const TsChain, agent: usize, out: *mut usize) -> TsStatus {
    guard(|| {
        let c = in_ref!(chain);
        let out = out_ptr!(out);
        match c.chain.stage_of(agent) {
            Some(k) => {
                *out = k;
                TsStatus::Ok
            }
            None => fail(TsStatus::OutOfRange, format!("agent {agent} of {}", c.chain.team_size)),
        }
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_payoff(chain: *const TsChain, agent: usize, out: *mut f64) -> TsStatus {
    guard(|| payoff(&in_ref!(chain).welfare, agent, out_ptr!(out)))
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_total_welfare(chain: *const TsChain, out: *mut f64) -> TsStatus {
    guard(|| {
        *out_ptr!(out) = in_ref!(chain).welfare.total;
        TsStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_chain_label(
    chain: *const TsChain,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TsStatus {
    guard(|| write_str(&in_ref!(chain).chain.label(), buf, len, needed))
}

/// Expected gain of the maximum and expected duration of one drawdown phase.
#[no_mangle]
pub unsafe extern "C" fn ts_phase_stats(
    start_gap: f64,
    stop_gap: f64,
    total_scope: f64,
    gain: *mut f64,
    duration: *mut f64,
) -> TsStatus {
    guard(|| {
        let gain = out_ptr!(gain);
        let duration = out_ptr!(duration);
        match phase_stats(start_gap, stop_gap, total_scope) {
            Ok((g, d)) => {
                *gain = g;
                *duration = d;
                TsStatus::Ok
            }
            Err(e) => fail(TsStatus::InvalidArgument, e.to_string()),
        }
    })
}
