//! C ABI over `satcap`.
//!
//! Every fallible call returns a [`SatcapStatus`]; on failure the message is
//! kept per thread and read with [`satcap_last_error_message`]. Scenarios and
//! allocation outcomes are opaque handles owned by the caller and released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use satcap::linkgap::{self, LinkBudgetParams};
use satcap::p1::{allocate_p1, allocate_uniform_baseline, AllocationOutcome, P1Problem, Termination};
use satcap::p2::{solve_fairness, solve_nth_order, P2Problem};
use satcap::phy::EfficiencyModel;
use satcap::scenario::{DemandVector, Scenario, ScenarioConfig};
use satcap::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatcapStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    BufferTooSmall = 3,
    BeamSaturated = 4,
    Undefined = 5,
    NonConvergence = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatcapModel {
    Shannon = 0,
    Dvbs2 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatcapCost {
    NthOrder = 0,
    Fairness = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatcapTermination {
    AllSatisfied = 0,
    PowerBudget = 1,
    SlotsSaturated = 2,
    IterationLimit = 3,
    SinglePass = 4,
}

impl From<Termination> for SatcapTermination {
    fn from(t: Termination) -> Self {
        match t {
            Termination::AllSatisfied => SatcapTermination::AllSatisfied,
            Termination::PowerBudget => SatcapTermination::PowerBudget,
            Termination::SlotsSaturated => SatcapTermination::SlotsSaturated,
            Termination::IterationLimit => SatcapTermination::IterationLimit,
            Termination::SinglePass => SatcapTermination::SinglePass,
        }
    }
}

/// Link budget, dB quantities except `sir_y` and `uplink_sinr_z` (linear;
/// `INFINITY` drops the term).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SatcapLinkBudget {
    pub p_sat_dbw: f64,
    pub obo_db: f64,
    pub l_repeater_db: f64,
    pub l_antenna_db: f64,
    pub l_propagation_db: f64,
    pub g_tx_dbi: f64,
    pub gt_ground_dbk: f64,
    pub b_c_hz: f64,
    pub sir_y: f64,
    pub uplink_sinr_z: f64,
}

impl From<SatcapLinkBudget> for LinkBudgetParams {
    fn from(p: SatcapLinkBudget) -> Self {
        LinkBudgetParams {
            p_sat_dbw: p.p_sat_dbw,
            obo_db: p.obo_db,
            l_repeater_db: p.l_repeater_db,
            l_antenna_db: p.l_antenna_db,
            l_propagation_db: p.l_propagation_db,
            g_tx_dbi: p.g_tx_dbi,
            gt_ground_dbk: p.gt_ground_dbk,
            b_c_hz: p.b_c_hz,
            sir_y: p.sir_y,
            uplink_sinr_z: p.uplink_sinr_z,
        }
    }
}

/// Opaque built scenario.
pub struct SatcapScenario(Scenario);

/// Opaque allocation result.
pub struct SatcapOutcome(AllocationOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> SatcapStatus {
    match err {
        Error::InvalidArgument(_) | Error::Config { .. } | Error::Csv(_) | Error::Json(_) => {
            SatcapStatus::InvalidArgument
        }
        Error::BeamSaturated { .. } => SatcapStatus::BeamSaturated,
        Error::Undefined(_) => SatcapStatus::Undefined,
        Error::NonConvergence(_) => SatcapStatus::NonConvergence,
        Error::Io { .. } => SatcapStatus::Io,
    }
}

struct Fail(SatcapStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SatcapStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SatcapStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SatcapStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside satcap");
            SatcapStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SatcapStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

fn model_of(m: SatcapModel) -> EfficiencyModel {
    match m {
        SatcapModel::Shannon => EfficiencyModel::Shannon,
        SatcapModel::Dvbs2 => EfficiencyModel::dvbs2(),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn satcap_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn satcap_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Load and build a scenario from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_scenario_load(path: *const c_char, out: *mut *mut SatcapScenario) -> SatcapStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let s = Scenario::load(path)?;
        write_out(out, Box::into_raw(Box::new(SatcapScenario(s))), "out")
    })
}

/// Build a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_scenario_from_toml(toml: *const c_char, out: *mut *mut SatcapScenario) -> SatcapStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let s = ScenarioConfig::from_toml_str(text)?.build()?;
        write_out(out, Box::into_raw(Box::new(SatcapScenario(s))), "out")
    })
}

/// # Safety
/// `s` must come from a scenario constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn satcap_scenario_free(s: *mut SatcapScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of beams, 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn satcap_scenario_beam_count(s: *const SatcapScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.grid.k())
}

/// Slot bandwidth `B_tot / N` in Hz.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_scenario_slot_bandwidth(s: *const SatcapScenario, out: *mut f64) -> SatcapStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("scenario"))?;
        write_out(out, s.0.payload.slot_bandwidth(), "out")
    })
}

/// Run the iterative allocator on a scenario.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_allocate_p1(
    s: *const SatcapScenario,
    model: SatcapModel,
    max_iterations: usize,
    out: *mut *mut SatcapOutcome,
) -> SatcapStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("scenario"))?.0;
        let model = model_of(model);
        let outcome = allocate_p1(&P1Problem {
            channel: &s.channel,
            payload: &s.payload,
            demand: &s.demand,
            model: &model,
            max_outer_iterations: max_iterations,
        })?;
        write_out(out, Box::into_raw(Box::new(SatcapOutcome(outcome))), "out")
    })
}

/// Run the 7-color uniform baseline; credited rates are capped at demand.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_allocate_baseline(
    s: *const SatcapScenario,
    model: SatcapModel,
    out: *mut *mut SatcapOutcome,
) -> SatcapStatus {
    guard(|| {
        let s = &s.as_ref().ok_or_else(|| null("scenario"))?.0;
        let mut outcome = allocate_uniform_baseline(&s.channel, &s.grid, &s.payload, &model_of(model))?;
        outcome.credit(&s.demand)?;
        write_out(out, Box::into_raw(Box::new(SatcapOutcome(outcome))), "out")
    })
}

/// # Safety
/// `o` must come from an allocation call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn satcap_outcome_free(o: *mut SatcapOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

unsafe fn copy_rates(o: *const SatcapOutcome, buf: *mut f64, len: usize, credited: bool) -> SatcapStatus {
    guard(|| {
        let o = &o.as_ref().ok_or_else(|| null("outcome"))?.0;
        let src = if credited { &o.credited_rate } else { &o.per_beam_rate };
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < src.len() {
            return Err(Fail(
                SatcapStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", src.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, src.len()).copy_from_slice(src);
        Ok(())
    })
}

/// Copy per-beam physical rates (bits/s) into `buf`, which holds `len` values.
///
/// # Safety
/// `o` must be a live outcome; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn satcap_outcome_rates(o: *const SatcapOutcome, buf: *mut f64, len: usize) -> SatcapStatus {
    copy_rates(o, buf, len, false)
}

/// Copy per-beam credited rates, `min(R, R_hat)`.
///
/// # Safety
/// As [`satcap_outcome_rates`].
#[no_mangle]
pub unsafe extern "C" fn satcap_outcome_credited_rates(
    o: *const SatcapOutcome,
    buf: *mut f64,
    len: usize,
) -> SatcapStatus {
    copy_rates(o, buf, len, true)
}

/// # Safety
/// `o` must be a live outcome; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_outcome_power_used(o: *const SatcapOutcome, out: *mut f64) -> SatcapStatus {
    guard(|| {
        let o = &o.as_ref().ok_or_else(|| null("outcome"))?.0;
        write_out(out, o.power_used, "out")
    })
}

/// Outer iterations run, 0 for a null handle.
///
/// # Safety
/// `o` must be null or a live outcome.
#[no_mangle]
pub unsafe extern "C" fn satcap_outcome_iterations(o: *const SatcapOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.0.iterations())
}

/// # Safety
/// `o` must be a live outcome; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_outcome_termination(o: *const SatcapOutcome, out: *mut SatcapTermination) -> SatcapStatus {
    guard(|| {
        let o = &o.as_ref().ok_or_else(|| null("outcome"))?.0;
        write_out(out, o.termination.into(), "out")
    })
}

/// Interference-free slot allocation. `weights` may be null (all ones);
/// `slots_out` receives `k` values.
///
/// # Safety
/// `demand` and `gamma` (and `weights` if non-null) must hold `k` doubles;
/// `slots_out` must hold `k` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn satcap_p2_solve(
    demand: *const f64,
    gamma: *const f64,
    weights: *const f64,
    k: usize,
    b_tot_hz: f64,
    n_t: usize,
    n_re_max: usize,
    order_n: u32,
    cost: SatcapCost,
    slots_out: *mut f64,
) -> SatcapStatus {
    guard(|| {
        let demand = DemandVector::new(slice_arg(demand, k, "demand")?.to_vec())?;
        let gamma = slice_arg(gamma, k, "gamma")?.to_vec();
        let mut problem = P2Problem::new(demand, gamma, b_tot_hz, n_t, n_re_max)?.with_order(order_n)?;
        if !weights.is_null() {
            problem = problem.with_weights(slice_arg(weights, k, "weights")?.to_vec())?;
        }
        let alloc = match cost {
            SatcapCost::NthOrder => solve_nth_order(&problem)?,
            SatcapCost::Fairness => solve_fairness(&problem)?,
        };
        if slots_out.is_null() {
            return Err(null("slots_out"));
        }
        std::slice::from_raw_parts_mut(slots_out, k).copy_from_slice(&alloc.slots);
        Ok(())
    })
}

/// End-to-end SINR (linear).
///
/// # Safety
/// `p` must point to a valid budget; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_link_total_sinr(p: *const SatcapLinkBudget, out: *mut f64) -> SatcapStatus {
    guard(|| {
        let p: LinkBudgetParams = (*p.as_ref().ok_or_else(|| null("budget"))?).into();
        p.validate()?;
        write_out(out, linkgap::total_sinr(&p), "out")
    })
}

/// Spectral-efficiency gap (bits/s/Hz) between backoffs `x1` and `x2` on the
/// same budget.
///
/// # Safety
/// `p` must point to a valid budget; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_link_gap(p: *const SatcapLinkBudget, x1: f64, x2: f64, out: *mut f64) -> SatcapStatus {
    guard(|| {
        let p: LinkBudgetParams = (*p.as_ref().ok_or_else(|| null("budget"))?).into();
        let gap = linkgap::spectral_efficiency_gap(&p.with_obo(x1), &p.with_obo(x2))?;
        write_out(out, gap, "out")
    })
}

/// Interference-free upper bound of [`satcap_link_gap`].
///
/// # Safety
/// `p` must point to a valid budget; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn satcap_link_gap_bound(
    p: *const SatcapLinkBudget,
    x1: f64,
    x2: f64,
    out: *mut f64,
) -> SatcapStatus {
    guard(|| {
        let p: LinkBudgetParams = (*p.as_ref().ok_or_else(|| null("budget"))?).into();
        write_out(out, linkgap::gap_upper_bound(&p, x1, x2)?, "out")
    })
}
