// SPDX-License-Identifier: Apache-2.0

use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use serde_json::Value;
use vfprune_ffi::*;

const FIG1: &str = include_str!("../../core/corpus/fig1.vf");

fn parse(src: &str) -> *mut VfProgram {
    let src = CString::new(src).unwrap();
    let mut prog = ptr::null_mut();
    assert_eq!(unsafe { vf_program_parse(src.as_ptr(), &mut prog) }, VfStatus::Ok);
    assert!(!prog.is_null());
    prog
}

fn analyze(prog: *const VfProgram, mode: u32, opts: Option<&VfOptions>) -> (VfStatus, *mut VfReport) {
    let mut rep = ptr::null_mut();
    let o = opts.map_or(ptr::null(), |o| o as *const _);
    (unsafe { vf_analyze(prog, mode, o, &mut rep) }, rep)
}

fn report_json(rep: *const VfReport) -> Value {
    let s = unsafe { CStr::from_ptr(vf_report_json(rep)) };
    serde_json::from_str(s.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(vf_last_error()) }.to_str().unwrap().to_string()
}

#[test]
fn diff_on_fig1() {
    let prog = parse(FIG1);
    let (st, rep) = analyze(prog, VF_MODE_DIFF, None);
    assert_eq!(st, VfStatus::Ok);
    unsafe {
        assert_eq!(vf_report_bug_count(rep), 2);
        assert!(!vf_report_soundness_flag(rep));
        assert!(!vf_report_bugs_mismatch(rep));
    }
    let doc = report_json(rep);
    assert_eq!(doc["comparison"]["redun"], 4);
    assert_eq!(doc["runs"][1]["mode"], "light");
    unsafe {
        vf_report_free(rep);
        vf_program_free(prog);
    }
}

#[test]
fn options_reach_caps_and_labels() {
    let prog = parse(FIG1);
    let mut o = vf_options_default();
    o.reach = VF_REACH_CFL;
    o.no_timing = true;
    let (st, rep) = analyze(prog, VF_MODE_LIGHT, Some(&o));
    assert_eq!(st, VfStatus::Ok);
    assert_eq!(report_json(rep)["runs"][0]["mode"], "cfl-light");
    unsafe { vf_report_free(rep) };

    o.max_path_len = 2;
    let (_, rep) = analyze(prog, VF_MODE_FUSION, Some(&o));
    assert!(unsafe { vf_report_soundness_flag(rep) });
    unsafe { vf_report_free(rep) };

    let mut o = vf_options_default();
    let sources = CString::new("p_11").unwrap();
    let sinks = CString::new("[*]p_13").unwrap();
    o.sources = sources.as_ptr();
    o.sinks = sinks.as_ptr();
    let (st, rep) = analyze(prog, VF_MODE_FUSION, Some(&o));
    assert_eq!(st, VfStatus::Ok);
    assert_eq!(report_json(rep)["runs"][0]["bugs"][0]["path"], serde_json::json!(["p_11", "*p_13"]));
    unsafe {
        vf_report_free(rep);
        vf_program_free(prog);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut prog = ptr::null_mut();
    let bad = CString::new("func f( {\n").unwrap();
    assert_eq!(unsafe { vf_program_parse(bad.as_ptr(), &mut prog) }, VfStatus::Parse);
    assert!(prog.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { vf_program_parse(ptr::null(), &mut prog) }, VfStatus::NullArg);
    let bytes = [0xffu8, 0];
    assert_eq!(
        unsafe { vf_program_parse(bytes.as_ptr().cast(), &mut prog) },
        VfStatus::InvalidUtf8
    );

    let (st, rep) = analyze(ptr::null(), VF_MODE_FUSION, None);
    assert_eq!(st, VfStatus::NullArg);
    assert!(rep.is_null());

    let prog = parse(FIG1);
    assert!(last_error().is_empty());
    assert_eq!(analyze(prog, 7, None).0, VfStatus::InvalidArg);
    assert!(last_error().contains("mode"));
    let mut o = vf_options_default();
    o.max_summaries = 0;
    assert_eq!(analyze(prog, VF_MODE_FUSION, Some(&o)).0, VfStatus::InvalidArg);
    let pat = CString::new("[").unwrap();
    o = vf_options_default();
    o.sources = pat.as_ptr();
    o.sinks = pat.as_ptr();
    assert_eq!(analyze(prog, VF_MODE_FUSION, Some(&o)).0, VfStatus::Analysis);
    unsafe {
        vf_program_free(prog);
        vf_program_free(ptr::null_mut());
        vf_report_free(ptr::null_mut());
        assert!(vf_report_json(ptr::null()).is_null());
        assert_eq!(vf_report_bug_count(ptr::null()), 0);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(vf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/vfprune.h")).unwrap()
}

#[test]
fn header_declares_every_export() {
    let h = header();
    let lib = include_str!("../src/lib.rs");
    let exports: Vec<&str> = lib
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10, "{exports:?}");
    for name in exports {
        let decl = format!("{name}(");
        let declared = h.match_indices(&decl).any(|(i, _)| {
            matches!(h.as_bytes().get(i.wrapping_sub(1)), Some(b' ' | b'*'))
        });
        assert!(declared, "{name} missing from header");
    }
    for ty in ["typedef struct VfProgram VfProgram;", "typedef struct VfReport VfReport;"] {
        assert!(h.contains(ty), "{ty}");
    }
}

/// Directory holding the built C libraries, next to the test's `deps/`.
fn lib_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !have_cc() {
        eprintln!("no C compiler, skipped");
        return;
    }
    let inc = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    for lang in ["c", "c++"] {
        let out = Command::new("cc")
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I"])
            .arg(&inc)
            .arg("-")
            .stdin(std::process::Stdio::piped())
            .spawn()
            .and_then(|mut c| {
                use std::io::Write;
                c.stdin.take().unwrap().write_all(b"#include \"vfprune.h\"\n")?;
                c.wait_with_output()
            })
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn c_program_links_static_library() {
    let lib = lib_dir().join("libvfprune_ffi.a");
    if !have_cc() || !lib.exists() {
        eprintln!("no C compiler or static library, skipped");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = Command::new("cc")
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe)
        .arg(root.join("../core/corpus/fig1.vf"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8_lossy(&run.stdout), "2 0 0\n");
}
