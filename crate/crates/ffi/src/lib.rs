// SPDX-License-Identifier: Apache-2.0

//! C interface to the analyzer.
//!
//! Parse a program into a `VfProgram`, run `vf_analyze` on it and read the
//! JSON report out of the returned `VfReport`. Handles are freed with their
//! matching `*_free` function. On any status other than `VF_STATUS_OK`,
//! `vf_last_error` describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vfprune::ci::Reach;
use vfprune::cli::{analyze_loaded, from_program, Mode, RunConfig};
use vfprune::frontend::{parse_program, ProgramIR};
use vfprune::pdg::Checker;

pub const VF_MODE_FUSION: u32 = 0;
pub const VF_MODE_LIGHT: u32 = 1;
pub const VF_MODE_CFL_LIGHT: u32 = 2;
pub const VF_MODE_DIFF: u32 = 3;

pub const VF_REACH_BFS: u32 = 0;
pub const VF_REACH_CFL: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VfStatus {
    Ok = 0,
    NullArg = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Analysis = 4,
    Panic = 5,
    InvalidArg = 6,
}

/// Analysis options. Start from `vf_options_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VfOptions {
    pub max_path_len: usize,
    pub max_summaries: usize,
    pub guard_depth: usize,
    pub scc_iters: usize,
    /// `VF_REACH_*`; ignored by `VF_MODE_CFL_LIGHT`.
    pub reach: u32,
    /// Zero all timing fields so reports are reproducible.
    pub no_timing: bool,
    /// Comma-separated globs. Both set selects the label checker, both
    /// null selects null-dereference checking.
    pub sources: *const c_char,
    pub sinks: *const c_char,
}

/// A parsed program.
pub struct VfProgram {
    program: ProgramIR,
}

/// The result of one `vf_analyze` call.
pub struct VfReport {
    json: CString,
    bugs: usize,
    unsound: bool,
    mismatch: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

type Fail = (VfStatus, String);

/// Runs `f`, turning errors and panics into a status.
fn guarded(f: impl FnOnce() -> Result<(), Fail>) -> VfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            VfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            VfStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err((VfStatus::NullArg, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (VfStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn globs(s: &str) -> Vec<String> {
    s.split(',').filter(|g| !g.is_empty()).map(String::from).collect()
}

unsafe fn config(mode: u32, opts: Option<&VfOptions>) -> Result<RunConfig, Fail> {
    let mode = match mode {
        VF_MODE_FUSION => Mode::Fusion,
        VF_MODE_LIGHT => Mode::Light,
        VF_MODE_CFL_LIGHT => Mode::CflLight,
        VF_MODE_DIFF => Mode::Diff,
        m => return Err((VfStatus::InvalidArg, format!("unknown mode {m}"))),
    };
    let mut cfg = RunConfig::new(mode);
    let Some(o) = opts else { return Ok(cfg) };
    let caps = [o.max_path_len, o.max_summaries, o.guard_depth, o.scc_iters];
    if caps.contains(&0) {
        return Err((VfStatus::InvalidArg, "caps must be positive".into()));
    }
    cfg.engine.max_path_len = o.max_path_len;
    cfg.engine.max_summaries = o.max_summaries;
    cfg.engine.guard_depth = o.guard_depth;
    cfg.engine.scc_iters = o.scc_iters;
    cfg.no_timing = o.no_timing;
    cfg.reach = match (o.reach, mode) {
        (_, Mode::CflLight) | (VF_REACH_CFL, _) => Reach::Cfl,
        (VF_REACH_BFS, _) => Reach::Bfs,
        (r, _) => return Err((VfStatus::InvalidArg, format!("unknown reach {r}"))),
    };
    cfg.checker = match (o.sources.is_null(), o.sinks.is_null()) {
        (true, true) => Checker::Npd,
        (false, false) => Checker::Labels {
            sources: globs(str_arg(o.sources, "sources")?),
            sinks: globs(str_arg(o.sinks, "sinks")?),
        },
        _ => {
            return Err((
                VfStatus::InvalidArg,
                "sources and sinks must be given together".into(),
            ))
        }
    };
    Ok(cfg)
}

#[no_mangle]
pub extern "C" fn vf_options_default() -> VfOptions {
    let d = vfprune::engine::EngineConfig::default();
    VfOptions {
        max_path_len: d.max_path_len,
        max_summaries: d.max_summaries,
        guard_depth: d.guard_depth,
        scc_iters: d.scc_iters,
        reach: VF_REACH_BFS,
        no_timing: false,
        sources: ptr::null(),
        sinks: ptr::null(),
    }
}

/// Parses NUL-terminated program text. On success `*out` owns a new program.
///
/// # Safety
/// `src` must be null or a valid C string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn vf_program_parse(src: *const c_char, out: *mut *mut VfProgram) -> VfStatus {
    guarded(|| {
        if out.is_null() {
            return Err((VfStatus::NullArg, "out is null".into()));
        }
        *out = ptr::null_mut();
        let text = str_arg(src, "src")?;
        let program = parse_program(text).map_err(|e| (VfStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(VfProgram { program }));
        Ok(())
    })
}

/// # Safety
/// `prog` must be null or come from `vf_program_parse`, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vf_program_free(prog: *mut VfProgram) {
    if !prog.is_null() {
        drop(Box::from_raw(prog));
    }
}

/// Analyzes `prog` in one of the `VF_MODE_*` modes. `opts` may be null for
/// defaults. On success `*out` owns a new report.
///
/// # Safety
/// `prog` must be a live program handle, `opts` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn vf_analyze(
    prog: *const VfProgram,
    mode: u32,
    opts: *const VfOptions,
    out: *mut *mut VfReport,
) -> VfStatus {
    guarded(|| {
        if out.is_null() {
            return Err((VfStatus::NullArg, "out is null".into()));
        }
        *out = ptr::null_mut();
        let prog = prog
            .as_ref()
            .ok_or((VfStatus::NullArg, "prog is null".into()))?;
        let cfg = config(mode, opts.as_ref())?;
        let analysis = |e: vfprune::cli::CliError| (VfStatus::Analysis, e.to_string());
        let loaded = from_program("<ffi>", prog.program.clone(), &cfg.checker).map_err(analysis)?;
        let o = analyze_loaded(&cfg, &loaded).map_err(analysis)?;
        let json = CString::new(o.text).map_err(|_| (VfStatus::Analysis, "NUL in report".into()))?;
        *out = Box::into_raw(Box::new(VfReport {
            json,
            bugs: o.bugs,
            unsound: o.unsound,
            mismatch: o.mismatch,
        }));
        Ok(())
    })
}

/// The report as JSON. Owned by the report; valid until it is freed.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn vf_report_json(report: *const VfReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// Bugs found by the first run in the report.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn vf_report_bug_count(report: *const VfReport) -> usize {
    report.as_ref().map_or(0, |r| r.bugs)
}

/// True when some run hit a cap.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn vf_report_soundness_flag(report: *const VfReport) -> bool {
    report.as_ref().is_some_and(|r| r.unsound)
}

/// True when a diff run found different bugs in the two modes.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn vf_report_bugs_mismatch(report: *const VfReport) -> bool {
    report.as_ref().is_some_and(|r| r.mismatch)
}

/// # Safety
/// `report` must be null or come from `vf_analyze`, and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn vf_report_free(report: *mut VfReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Message for the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn vf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn vf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_mode_and_caps() {
        assert_eq!(unsafe { config(9, None) }.unwrap_err().0, VfStatus::InvalidArg);
        let mut o = vf_options_default();
        o.scc_iters = 0;
        assert_eq!(unsafe { config(0, Some(&o)) }.unwrap_err().0, VfStatus::InvalidArg);
        o.scc_iters = 3;
        o.sources = c"x".as_ptr();
        assert_eq!(unsafe { config(0, Some(&o)) }.unwrap_err().0, VfStatus::InvalidArg);
    }

    #[test]
    fn cfl_mode_forces_cfl() {
        let o = vf_options_default();
        assert_eq!(unsafe { config(VF_MODE_CFL_LIGHT, Some(&o)) }.unwrap().reach, Reach::Cfl);
        assert_eq!(unsafe { config(VF_MODE_LIGHT, Some(&o)) }.unwrap().reach, Reach::Bfs);
    }

    #[test]
    fn panics_become_status() {
        let s = guarded(|| panic!("boom"));
        assert_eq!(s, VfStatus::Panic);
        let msg = unsafe { CStr::from_ptr(vf_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }
}
