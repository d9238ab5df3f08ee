use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use monoheat_ffi::*;

const STEADY: &str = "
[problem]
domain = interval(1.0, 4, gamma1=right)
gamma = linear(2.0)
beta = physical(h=1.0, s=1.0)
h = beta_of(1.0)
u0 = 1.0
final_time = 0.3
[solver]
tau = 0.1
lambda_schedule = [0]
mass_regularization = false
";

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = mh_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn graph_handle_roundtrip() {
    let mut g = ptr::null_mut();
    let expr = c("physical(h=1, s=1)");
    assert_eq!(unsafe { mh_graph_parse(expr.as_ptr(), &mut g) }, MhStatus::Ok);
    let mut y = 0.0;
    assert_eq!(unsafe { mh_graph_value(g, 1.0, &mut y) }, MhStatus::Ok);
    assert_eq!(y, 2.0);
    assert_eq!(unsafe { mh_graph_potential(g, 1.0, &mut y) }, MhStatus::Ok);
    assert!((y - 0.7).abs() < 1e-15);
    let mut r = 0.0;
    assert_eq!(unsafe { mh_graph_resolvent(g, 0.5, 2.0, &mut r) }, MhStatus::Ok);
    assert_eq!(unsafe { mh_graph_yosida(g, 0.5, 2.0, &mut y) }, MhStatus::Ok);
    assert!((y - (2.0 - r) / 0.5).abs() < 1e-12);
    assert_eq!(unsafe { mh_graph_moreau_envelope(g, 0.5, 2.0, &mut y) }, MhStatus::Ok);
    assert!(y > 0.0);
    assert_eq!(unsafe { mh_graph_yosida(g, -1.0, 2.0, &mut y) }, MhStatus::GraphError);
    assert!(!last_error().is_empty());
    unsafe { mh_graph_free(g) };
}

#[test]
fn null_arguments_are_rejected() {
    let mut y = 0.0;
    assert_eq!(unsafe { mh_graph_value(ptr::null(), 1.0, &mut y) }, MhStatus::InvalidArgument);
    assert_eq!(unsafe { mh_graph_parse(ptr::null(), ptr::null_mut()) }, MhStatus::InvalidArgument);
    assert_eq!(unsafe { mh_run(ptr::null(), ptr::null(), ptr::null()) }, MhStatus::InvalidArgument);
    assert_eq!(unsafe { mh_solution_levels(ptr::null()) }, 0);
    unsafe { mh_graph_free(ptr::null_mut()) };
    unsafe { mh_solution_free(ptr::null_mut()) };
}

#[test]
fn solve_handle_steady_state() {
    let cfg = c(STEADY);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { mh_solve(cfg.as_ptr(), &mut s) }, MhStatus::Ok);
    let levels = unsafe { mh_solution_levels(s) };
    assert_eq!(levels, 4);
    let n = unsafe { mh_solution_node_count(s) };
    let mut u = vec![0.0; n];
    for k in 0..levels {
        assert_eq!(unsafe { mh_solution_copy_u(s, k, u.as_mut_ptr(), n) }, MhStatus::Ok);
        assert!(u.iter().all(|&x| (x - 1.0).abs() < 1e-12), "{u:?}");
    }
    let mut t = 0.0;
    assert_eq!(unsafe { mh_solution_time(s, 3, &mut t) }, MhStatus::Ok);
    assert!((t - 0.3).abs() < 1e-15);
    assert_eq!(unsafe { mh_solution_time(s, 4, &mut t) }, MhStatus::InvalidArgument);
    unsafe { mh_solution_free(s) };
}

#[test]
fn run_maps_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = c(dir.path().to_str().unwrap());
    let cfg = c(STEADY);
    let solve = c("solve");
    assert_eq!(unsafe { mh_run(cfg.as_ptr(), solve.as_ptr(), out.as_ptr()) }, MhStatus::Ok);
    assert!(dir.path().join("solution.csv").exists());
    let dep = c("dependence");
    assert_eq!(unsafe { mh_run(cfg.as_ptr(), dep.as_ptr(), out.as_ptr()) }, MhStatus::ConfigError);
    assert!(last_error().contains("perturbation"));
    let bogus = c("bogus");
    assert_eq!(unsafe { mh_run(cfg.as_ptr(), bogus.as_ptr(), out.as_ptr()) }, MhStatus::ConfigError);
}

fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libmonoheat_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).arg(dir.path().join("run")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
    assert!(dir.path().join("run/summary.txt").exists());
}
