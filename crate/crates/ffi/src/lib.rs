//! C ABI over `oa-core`.
//!
//! Programs and outcomes are opaque heap handles released with their
//! matching `*_free` function. Strings returned through `char **` out
//! parameters are owned by the caller and released with `oa_string_free`.
//! Every fallible call returns an [`OaStatus`]; on failure a message is
//! available from `oa_last_error_message` on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use oa_core::eval::{metrics, wilcoxon_signed_rank, ConfusionMatrix};
use oa_core::frontend::{
    apply_sidecar, entry_candidates, parse_program, ProvenanceMap, SourceUnit,
};
use oa_core::mir::Program;
use oa_core::oa::{AnalysisBudget, AnalysisOutcome, Analyzer, Mode, Verdict};
use oa_core::report::{records_to_string, render_text, Clock, Record};
use oa_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidProgram = 4,
    Sidecar = 5,
    EntryNotFound = 6,
    Analysis = 7,
    InsufficientPairs = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OaMode {
    Nopa = 0,
    Pa = 1,
    Hybrid = 2,
}

/// Numbered like the command line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OaVerdict {
    False = 0,
    True = 1,
    Timeout = 2,
}

/// Analysis limits. `wall_clock_ms == 0` disables the wall clock.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OaBudget {
    pub depth: u32,
    pub fuel: u64,
    pub wall_clock_ms: u64,
    pub path_cap: u32,
    pub early_exit: bool,
}

/// Undefined ratios are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct OaMetrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct OaWilcoxon {
    pub w: f64,
    pub p: f64,
    pub n: usize,
    pub exact: bool,
}

pub struct OaProgram {
    program: Program,
}

pub struct OaOutcome {
    unit: String,
    mode: Mode,
    outcome: AnalysisOutcome,
    text: String,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(OaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Syntax { .. } | Error::UnknownType(_) => OaStatus::Parse,
            Error::Invalid(_) => OaStatus::InvalidProgram,
            Error::Sidecar(_) | Error::UnknownExpression(_) | Error::Json(_) => OaStatus::Sidecar,
            Error::EntryNotFound(_) | Error::NoEntryPoints => OaStatus::EntryNotFound,
            Error::InsufficientPairs(_) => OaStatus::InsufficientPairs,
            _ => OaStatus::Analysis,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: OaStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OaStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            OaStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(OaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(OaStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| fail(OaStatus::NullArgument, format!("{what} is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(OaStatus::NullArgument, format!("{what} is null")))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

fn to_mode(m: OaMode) -> Mode {
    match m {
        OaMode::Nopa => Mode::Nopa,
        OaMode::Pa => Mode::Pa,
        OaMode::Hybrid => Mode::Hybrid,
    }
}

fn to_budget(b: &OaBudget) -> AnalysisBudget {
    AnalysisBudget {
        depth: b.depth as usize,
        fuel: b.fuel,
        wall_clock: (b.wall_clock_ms > 0).then(|| Duration::from_millis(b.wall_clock_ms)),
        path_cap: b.path_cap as usize,
        early_exit: b.early_exit,
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn oa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn oa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub extern "C" fn oa_budget_default() -> OaBudget {
    let d = AnalysisBudget::default();
    OaBudget {
        depth: d.depth as u32,
        fuel: d.fuel,
        wall_clock_ms: d.wall_clock.map_or(0, |w| w.as_millis() as u64),
        path_cap: d.path_cap as u32,
        early_exit: d.early_exit,
    }
}

/// Parses and validates `count` source files.
///
/// # Safety
/// `paths` and `texts` must point to `count` NUL-terminated strings each;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oa_program_from_sources(
    paths: *const *const c_char,
    texts: *const *const c_char,
    count: usize,
    out: *mut *mut OaProgram,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if count > 0 && (paths.is_null() || texts.is_null()) {
            return Err(fail(OaStatus::NullArgument, "paths or texts is null"));
        }
        let mut units = Vec::with_capacity(count);
        for i in 0..count {
            let path = str_arg(*paths.add(i), "path")?;
            let text = str_arg(*texts.add(i), "text")?;
            units.push(SourceUnit::new(path, text));
        }
        let program = parse_program(&units)?;
        *out = Box::into_raw(Box::new(OaProgram { program }));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from `oa_program_from_sources`, freed once.
#[no_mangle]
pub unsafe extern "C" fn oa_program_free(p: *mut OaProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Replaces statement provenance with the markers from a JSON sidecar.
///
/// # Safety
/// `p` must be a live program handle and `json` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn oa_program_apply_sidecar(
    p: *mut OaProgram,
    json: *const c_char,
) -> OaStatus {
    guard(|| {
        let p = out_arg(p, "program")?;
        let map = ProvenanceMap::from_json(str_arg(json, "json")?)?;
        p.program = apply_sidecar(&p.program, &map)?;
        Ok(())
    })
}

/// Number of methods whose bodies hold both LEFT and RIGHT statements.
///
/// # Safety
/// `p` must be null or a live program handle.
#[no_mangle]
pub unsafe extern "C" fn oa_program_entry_count(p: *const OaProgram) -> usize {
    p.as_ref().map_or(0, |p| entry_candidates(&p.program).len())
}

/// # Safety
/// `p` must be a live program handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_program_entry_name(
    p: *const OaProgram,
    index: usize,
    out: *mut *mut c_char,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = ref_arg(p, "program")?;
        let entries = entry_candidates(&p.program);
        let id = entries.get(index).ok_or_else(|| {
            fail(
                OaStatus::OutOfRange,
                format!("entry {index} of {}", entries.len()),
            )
        })?;
        *out = c_string(p.program.method_name(*id));
        Ok(())
    })
}

/// Runs one analysis from `entry` (`Class.method`). A null `budget` means
/// the defaults.
///
/// # Safety
/// `p` must be a live program handle, `entry` a NUL-terminated string,
/// `budget` null or readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_analyze(
    p: *const OaProgram,
    entry: *const c_char,
    mode: OaMode,
    budget: *const OaBudget,
    out: *mut *mut OaOutcome,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = &ref_arg(p, "program")?.program;
        let name = str_arg(entry, "entry")?;
        let id = p
            .find_method(name)
            .ok_or_else(|| Error::EntryNotFound(name.to_string()))?;
        let budget = budget
            .as_ref()
            .map_or_else(AnalysisBudget::default, to_budget);
        let mode = to_mode(mode);
        let analyzer = if mode.uses_points_to() {
            Analyzer::new(p)
        } else {
            Analyzer::without_points_to(p)
        };
        let outcome = analyzer.detect(id, mode, &budget)?;
        let text = outcome
            .conflicts
            .iter()
            .map(|c| format!("[{mode}] {}\n", render_text(p, c)))
            .collect();
        *out = Box::into_raw(Box::new(OaOutcome {
            unit: p.method_name(id),
            mode,
            outcome,
            text,
        }));
        Ok(())
    })
}

/// # Safety
/// `o` must be null or a handle from `oa_analyze`, freed once.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_free(o: *mut OaOutcome) {
    if !o.is_null() {
        drop(Box::from_raw(o));
    }
}

/// A null handle reads as FALSE.
///
/// # Safety
/// `o` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_verdict(o: *const OaOutcome) -> OaVerdict {
    match o.as_ref().map(|o| o.outcome.verdict) {
        Some(Verdict::True) => OaVerdict::True,
        Some(Verdict::Timeout) => OaVerdict::Timeout,
        _ => OaVerdict::False,
    }
}

/// # Safety
/// `o` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_conflict_count(o: *const OaOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.outcome.conflicts.len())
}

/// # Safety
/// `o` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_missref_count(o: *const OaOutcome) -> usize {
    o.as_ref().map_or(0, |o| o.outcome.missrefs.len())
}

/// # Safety
/// `o` must be null or a live outcome handle.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_visited(o: *const OaOutcome) -> u64 {
    o.as_ref().map_or(0, |o| o.outcome.stats.visited)
}

/// Human readable conflict reports, empty when there are none.
///
/// # Safety
/// `o` must be a live outcome handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_report_text(
    o: *const OaOutcome,
    out: *mut *mut c_char,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = c_string(ref_arg(o, "outcome")?.text.clone());
        Ok(())
    })
}

/// The outcome as one JSON record line, newline included.
///
/// # Safety
/// `o` must be a live outcome handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oa_outcome_record_json(
    o: *const OaOutcome,
    virtual_clock: bool,
    out: *mut *mut c_char,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let o = ref_arg(o, "outcome")?;
        let clock = if virtual_clock {
            Clock::Virtual
        } else {
            Clock::Wall
        };
        *out = c_string(records_to_string(&[Record::from_outcome(
            &o.unit, o.mode, &o.outcome, clock,
        )]));
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oa_metrics(
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
    out: *mut OaMetrics,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let m = metrics(&ConfusionMatrix::new(tp, fp, tn, fn_));
        let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = OaMetrics {
            precision: nan(m.precision),
            recall: nan(m.recall),
            accuracy: nan(m.accuracy),
            f1: nan(m.f1),
        };
        Ok(())
    })
}

/// Two-sided Wilcoxon signed-rank test on `n` paired samples.
///
/// # Safety
/// `a` and `b` must point to `n` doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oa_wilcoxon(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut OaWilcoxon,
) -> OaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if n > 0 && (a.is_null() || b.is_null()) {
            return Err(fail(OaStatus::NullArgument, "sample pointer is null"));
        }
        let pairs: Vec<(f64, f64)> = (0..n).map(|i| (*a.add(i), *b.add(i))).collect();
        let r = wilcoxon_signed_rank(&pairs)?;
        *out = OaWilcoxon {
            w: r.w,
            p: r.p,
            n: r.n,
            exact: r.exact,
        };
        Ok(())
    })
}
