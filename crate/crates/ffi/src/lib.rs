//! C ABI over `airs_lab`.
//!
//! Every function returns an `AirsStatus`; on failure the message is kept
//! per thread and read back with `airs_last_error`. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free`. Panics are caught at the boundary and reported as
//! `AIRS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use airs_lab::ckm::OraclePredictor;
use airs_lab::error::Error;
use airs_lab::scenario::Scenario;
use airs_lab::sched::{build_se_matrix, exact_enum_eta, random_schedule, sm_ib_eta, Schedule, SeMatrix, SmIbParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AirsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Parse = 5,
    Infeasible = 6,
    GuardExceeded = 7,
    Numerical = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque scenario: scene, fading spec and UE sampler.
pub struct AirsScenario(Scenario);

/// Opaque SE matrix, one row per UE: BS-only column then one per AIRS.
pub struct AirsSeMatrix(SeMatrix);

/// Opaque schedule.
pub struct AirsSchedule(Schedule);

/// SM-IB tuning; start from `airs_smib_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AirsSmIbParams {
    pub eps: f64,
    pub xi: f64,
    pub n_max: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> AirsStatus {
    match e {
        Error::Io { .. } => AirsStatus::Io,
        Error::InvalidConfig(_) => AirsStatus::InvalidConfig,
        Error::ConfigParse { .. } | Error::Json(_) => AirsStatus::Parse,
        Error::InfeasibleClusterSize { .. } => AirsStatus::Infeasible,
        Error::EnumerationGuard { .. } => AirsStatus::GuardExceeded,
        Error::CyclingGuard(_) | Error::Certificate(_) => AirsStatus::Numerical,
        _ => AirsStatus::InvalidArgument,
    }
}

struct Fail(AirsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(AirsStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AirsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            AirsStatus::Ok
        }
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            AirsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(AirsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

/// Copies `s` plus a NUL into `buf` when it fits; `*needed` (if non-null)
/// gets the full size including the NUL either way.
unsafe fn copy_out(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Result<(), Fail> {
    let n = s.len() + 1;
    if !needed.is_null() {
        *needed = n;
    }
    if buf.is_null() || cap < n {
        return Err(Fail(AirsStatus::BufferTooSmall, format!("need {n} bytes, have {cap}")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf.cast::<u8>(), s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn airs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies this thread's last error message (empty after a success).
/// Returns `AIRS_STATUS_BUFFER_TOO_SMALL` with `*needed` set if `cap` is
/// too small.
///
/// # Safety
/// `buf` must be writable for `cap` bytes; `needed` may be null.
#[no_mangle]
pub unsafe extern "C" fn airs_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> AirsStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match copy_out(&msg, buf, cap, needed) {
        Ok(()) => AirsStatus::Ok,
        Err(Fail(s, _)) => s,
    }
}

/// Reads, parses and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airs_scenario_load(path: *const c_char, out: *mut *mut AirsScenario) -> AirsStatus {
    guard(|| {
        let p = str_arg(path, "path")?;
        put(out, AirsScenario(Scenario::load(Path::new(p))?))
    })
}

/// Parses and validates a scenario document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airs_scenario_parse(json: *const c_char, out: *mut *mut AirsScenario) -> AirsStatus {
    guard(|| {
        let sc = Scenario::parse(str_arg(json, "json")?)?;
        sc.validate()?;
        put(out, AirsScenario(sc))
    })
}

/// # Safety
/// `sc` must come from this library and not be used afterwards; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn airs_scenario_free(sc: *mut AirsScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Scene dimensions: UEs listed in the scenario, AIRSs, slots, RBs. Any
/// output pointer may be null.
///
/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn airs_scenario_dims(
    sc: *const AirsScenario,
    n_ues: *mut usize,
    n_airs: *mut usize,
    n_slots: *mut usize,
    n_rb: *mut usize,
) -> AirsStatus {
    guard(|| {
        let s = &obj(sc, "scenario")?.0.scene;
        for (p, v) in [(n_ues, s.ues.len()), (n_airs, s.n_airs()), (n_slots, s.n_slots), (n_rb, s.n_rb)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Ergodic SE matrix of the scenario's UEs from the Monte Carlo oracle,
/// with the scenario's fading spec re-seeded by `seed`.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn airs_se_matrix_predict(
    sc: *const AirsScenario,
    seed: u64,
    out: *mut *mut AirsSeMatrix,
) -> AirsStatus {
    guard(|| {
        let s = &obj(sc, "scenario")?.0;
        let pred = OraclePredictor::new(s.fading.clone().with_seed(seed));
        put(out, AirsSeMatrix(build_se_matrix(&pred, &s.scene)?))
    })
}

/// Builds a matrix from `n_ues × n_cols` row-major values; `n_cols` is
/// 1 + number of AIRSs.
///
/// # Safety
/// `data` must be readable for `n_ues * n_cols` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn airs_se_matrix_new(
    data: *const f64,
    n_ues: usize,
    n_cols: usize,
    out: *mut *mut AirsSeMatrix,
) -> AirsStatus {
    guard(|| {
        if n_cols == 0 {
            return Err(Fail(AirsStatus::InvalidArgument, "n_cols must include the BS-only column".into()));
        }
        let len = n_ues
            .checked_mul(n_cols)
            .ok_or_else(|| Fail(AirsStatus::InvalidArgument, "matrix size overflows".into()))?;
        let vals: &[f64] = if len == 0 {
            &[]
        } else if data.is_null() {
            return Err(null("data"));
        } else {
            std::slice::from_raw_parts(data, len)
        };
        let rows = vals.chunks(n_cols.max(1)).map(<[f64]>::to_vec).collect();
        put(out, AirsSeMatrix(SeMatrix::from_rows(rows)?))
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn airs_se_matrix_free(m: *mut AirsSeMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn airs_se_matrix_dims(m: *const AirsSeMatrix, n_ues: *mut usize, n_airs: *mut usize) -> AirsStatus {
    guard(|| {
        let m = &obj(m, "matrix")?.0;
        if !n_ues.is_null() {
            *n_ues = m.n_ues();
        }
        if !n_airs.is_null() {
            *n_airs = m.n_airs();
        }
        Ok(())
    })
}

/// SE of UE `ue` in column `col` (0 = BS only, `1 + i` = via AIRS `i`).
///
/// # Safety
/// `m` must be a live handle; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn airs_se_matrix_get(m: *const AirsSeMatrix, ue: usize, col: usize, value: *mut f64) -> AirsStatus {
    guard(|| {
        let m = &obj(m, "matrix")?.0;
        let v = m
            .rows()
            .get(ue)
            .and_then(|r| r.get(col))
            .ok_or_else(|| Fail(AirsStatus::InvalidArgument, format!("index ({ue}, {col}) out of range")))?;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = *v;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn airs_smib_params_default() -> AirsSmIbParams {
    let d = SmIbParams::default();
    AirsSmIbParams { eps: d.eps, xi: d.xi, n_max: d.n_max, seed: d.seed }
}

/// Runs SM-IB. `params` may be null for the defaults.
///
/// # Safety
/// `m` must be a live handle; `params` null or valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_smib(
    m: *const AirsSeMatrix,
    n_slots: usize,
    n_rb: usize,
    params: *const AirsSmIbParams,
    out: *mut *mut AirsSchedule,
) -> AirsStatus {
    guard(|| {
        let m = &obj(m, "matrix")?.0;
        let p = params.as_ref().copied().unwrap_or_else(|| airs_smib_params_default());
        let p = SmIbParams { eps: p.eps, xi: p.xi, n_max: p.n_max, seed: p.seed, timing: false };
        put(out, AirsSchedule(sm_ib_eta(m, n_slots, n_rb, &p)?))
    })
}

/// Random association and ratios; the baseline for comparisons.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_random(
    m: *const AirsSeMatrix,
    n_slots: usize,
    n_rb: usize,
    seed: u64,
    out: *mut *mut AirsSchedule,
) -> AirsStatus {
    guard(|| {
        let m = &obj(m, "matrix")?.0;
        if n_slots == 0 {
            return Err(Fail(AirsStatus::InvalidArgument, "need at least one slot".into()));
        }
        put(out, AirsSchedule(random_schedule(m, n_slots, n_rb, seed)))
    })
}

/// Exhaustive optimum. Refuses with `AIRS_STATUS_GUARD_EXCEEDED` before
/// doing any work when the instance needs more than `guard` LP solves;
/// pass a non-positive `guard` for the library default.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_exact(
    m: *const AirsSeMatrix,
    n_slots: usize,
    n_rb: usize,
    guard_lp: f64,
    out: *mut *mut AirsSchedule,
) -> AirsStatus {
    guard(|| {
        let m = &obj(m, "matrix")?.0;
        let g = if guard_lp > 0.0 { guard_lp } else { airs_lab::sched::DEFAULT_GUARD };
        put(out, AirsSchedule(exact_enum_eta(m, n_slots, n_rb, g)?))
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_free(s: *mut AirsSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_min_throughput(s: *const AirsSchedule, value: *mut f64) -> AirsStatus {
    guard(|| {
        let s = &obj(s, "schedule")?.0;
        if value.is_null() {
            return Err(null("value"));
        }
        *value = s.min_throughput;
        Ok(())
    })
}

/// Per-UE throughput into `buf` (`cap` doubles); `*n_ues` gets the count.
///
/// # Safety
/// `s` must be a live handle; `buf` writable for `cap` doubles; `n_ues`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_throughputs(
    s: *const AirsSchedule,
    buf: *mut f64,
    cap: usize,
    n_ues: *mut usize,
) -> AirsStatus {
    guard(|| {
        let t = &obj(s, "schedule")?.0.throughput;
        if !n_ues.is_null() {
            *n_ues = t.len();
        }
        if t.is_empty() {
            return Ok(());
        }
        if buf.is_null() || cap < t.len() {
            return Err(Fail(AirsStatus::BufferTooSmall, format!("need {} values, have {cap}", t.len())));
        }
        ptr::copy_nonoverlapping(t.as_ptr(), buf, t.len());
        Ok(())
    })
}

/// Checks feasibility and the reported throughputs against `m`.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_validate(s: *const AirsSchedule, m: *const AirsSeMatrix) -> AirsStatus {
    guard(|| {
        let s = &obj(s, "schedule")?.0;
        let m = &obj(m, "matrix")?.0;
        Ok(s.validate(m)?)
    })
}

/// The schedule as JSON, same shape as the CLI writes. Size the buffer with
/// a first call passing `buf = NULL`.
///
/// # Safety
/// `s` must be a live handle; `buf` writable for `cap` bytes; `needed` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn airs_schedule_to_json(
    s: *const AirsSchedule,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> AirsStatus {
    guard(|| {
        let s = &obj(s, "schedule")?.0;
        let text = serde_json::to_string(s).map_err(Error::from)?;
        copy_out(&text, buf, cap, needed)
    })
}
