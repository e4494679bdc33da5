use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use reuseknn_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = rk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn synth() -> *mut RkTable {
    let mut t = ptr::null_mut();
    let s = unsafe { rk_table_synth(30, 40, 0.3, 1.0, 0.5, 7, &mut t) };
    assert_eq!(s, RkStatus::Ok);
    assert!(!t.is_null());
    t
}

#[test]
fn synth_table_reports_sizes_and_stats() {
    let t = synth();
    unsafe {
        assert_eq!(rk_table_num_users(t), 30);
        assert_eq!(rk_table_num_items(t), 40);
        assert_eq!(rk_table_num_ratings(t), 360);
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(rk_table_describe(t, &mut json), RkStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        rk_string_free(json);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["ratings"], 360);
        rk_table_free(t);
    }
    assert_eq!(unsafe { rk_table_num_users(ptr::null()) }, 0);
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut t = ptr::null_mut();
    let s = unsafe { rk_table_synth(0, 10, 0.5, 0.0, 0.0, 1, &mut t) };
    assert_eq!(s, RkStatus::InvalidArgument);
    assert!(t.is_null());
    assert!(last_error().contains("user and item counts"));

    let s = unsafe { rk_table_synth(10, 10, 0.5, 0.0, 0.0, 1, ptr::null_mut()) };
    assert_eq!(s, RkStatus::NullPointer);

    let path = cstr("/nonexistent/ratings.csv");
    let scale = cstr("1..5");
    let s = unsafe { rk_table_load(path.as_ptr(), ptr::null(), scale.as_ptr(), &mut t) };
    assert_eq!(s, RkStatus::Io);

    let mut tau = 0.0;
    let flat = [4u64; 50];
    assert_eq!(unsafe { rk_estimate_tau(flat.as_ptr(), flat.len(), &mut tau) }, RkStatus::DegenerateUsage);

    let mut e = 0.0;
    assert_eq!(unsafe { rk_epsilon(10.0, 4.0, &mut e) }, RkStatus::Ok);
    assert!(rk_last_error().is_null());
    assert!((e - (3.0f64 + 4.0 * 4.0 / 6.0).ln()).abs() < 1e-15);
    assert_eq!(unsafe { rk_epsilon(4.0, 4.0, &mut e) }, RkStatus::InvalidArgument);
}

#[test]
fn table_loads_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    std::fs::write(&path, "a,x,4\na,y,2\nb,x,5\nb,z,1\nc,y,3\n").unwrap();
    let p = cstr(path.to_str().unwrap());
    let fmt = cstr("csv");
    let scale = cstr("1..5");
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(rk_table_load(p.as_ptr(), fmt.as_ptr(), scale.as_ptr(), &mut t), RkStatus::Ok);
        assert_eq!(rk_table_num_users(t), 3);
        assert_eq!(rk_table_num_ratings(t), 5);
        rk_table_free(t);
    }
    std::fs::write(&path, "a,x,9\n").unwrap();
    let s = unsafe { rk_table_load(p.as_ptr(), fmt.as_ptr(), scale.as_ptr(), &mut t) };
    assert_eq!(s, RkStatus::Parse);
}

#[test]
fn recommender_charges_ledger() {
    let t = synth();
    let method = cstr("Gain_DP");
    let mut rec = ptr::null_mut();
    unsafe {
        assert_eq!(rk_recommender_new(t, method.as_ptr(), 3, 1.0, 9, &mut rec), RkStatus::Ok);
        // the recommender keeps the table alive on its own
        rk_table_free(t);
        let user = cstr("u0");
        let mut served = 0usize;
        let mut queries = 0u64;
        for i in 0..40 {
            let item = cstr(&format!("i{i}"));
            let (mut score, mut n) = (0.0, 0usize);
            assert_eq!(
                rk_recommender_query(rec, user.as_ptr(), item.as_ptr(), &mut score, &mut n),
                RkStatus::Ok
            );
            assert!((1.0..=5.0).contains(&score));
            served += n;
            queries += 1;
        }
        assert_eq!(queries, 40);
        assert_eq!(rk_recommender_total_servings(rec), served as u64);

        let mut total = 0u64;
        for u in 0..30 {
            let name = cstr(&format!("u{u}"));
            let mut usage = 0u64;
            assert_eq!(rk_recommender_data_usage(rec, name.as_ptr(), &mut usage), RkStatus::Ok);
            total += usage;
            let mut eps = 0.0;
            let s = rk_recommender_epsilon(rec, name.as_ptr(), &mut eps);
            if usage == 0 {
                assert_eq!(s, RkStatus::Undefined);
            } else if usage > 1 {
                assert_eq!(s, RkStatus::Ok);
                assert!(eps.is_finite() && eps > 3f64.ln());
            } else {
                assert_eq!(s, RkStatus::Ok);
                assert!(eps.is_infinite());
            }
        }
        assert_eq!(total, served as u64);

        let nobody = cstr("nobody");
        let item = cstr("i0");
        let mut score = 0.0;
        let s = rk_recommender_query(rec, nobody.as_ptr(), item.as_ptr(), &mut score, ptr::null_mut());
        assert_eq!(s, RkStatus::InvalidArgument);
        rk_recommender_free(rec);
    }
}

#[test]
fn recommender_rejects_embedding_methods() {
    let t = synth();
    let method = cstr("NeuKNN");
    let mut rec = ptr::null_mut();
    unsafe {
        assert_eq!(rk_recommender_new(t, method.as_ptr(), 3, f64::INFINITY, 1, &mut rec), RkStatus::InvalidArgument);
        let bogus = cstr("Nope");
        assert_eq!(rk_recommender_new(t, bogus.as_ptr(), 3, f64::INFINITY, 1, &mut rec), RkStatus::InvalidArgument);
        rk_table_free(t);
    }
}

#[test]
fn mann_whitney_exact_case() {
    let a = [1.0, 2.0, 3.0];
    let b = [2.0, 3.0, 4.0];
    let (mut u, mut p) = (0.0, 0.0);
    let s = unsafe { rk_mann_whitney(a.as_ptr(), 3, b.as_ptr(), 3, RkTail::Less, &mut u, &mut p) };
    assert_eq!(s, RkStatus::Ok);
    assert_eq!(u, 2.0);
    assert!((p - 0.25).abs() < 1e-12);
}

#[test]
fn run_config_returns_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        r#"methods = ["UserKNN", "Gain_DP"]
k = [3]
tau = 2.0
folds = [0]
output = "out"

[dataset]
kind = "synthetic"
users = 30
items = 25
density = 0.3
"#,
    )
    .unwrap();
    let path = cstr(cfg.to_str().unwrap());
    let mut json: *mut c_char = ptr::null_mut();
    let s = unsafe { rk_run_config(path.as_ptr(), &mut json) };
    assert_eq!(s, RkStatus::Ok, "{}", if s == RkStatus::Ok { String::new() } else { last_error() });
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { rk_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["files"].as_array().unwrap().len() > 3);
    assert!(dir.path().join("out").join("manifest.json").exists());
}

fn library_dir() -> Option<PathBuf> {
    // test binaries live in <target>/<profile>/deps
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?.to_path_buf();
    dir.join("libreuseknn_ffi.a").exists().then_some(dir)
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = library_dir() else {
        eprintln!("static library not built; skipping C smoke test");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping C smoke test");
        return;
    }
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <math.h>
#include <stdio.h>
#include "reuseknn.h"

int main(void) {
    RkTable *t = NULL;
    if (rk_table_synth(20, 30, 0.3, 1.0, 0.0, 3, &t) != RK_STATUS_OK) return 1;
    RkRecommender *r = NULL;
    if (rk_recommender_new(t, "Expect", 2, INFINITY, 1, &r) != RK_STATUS_OK) return 2;
    double score = 0; size_t n = 0;
    if (rk_recommender_query(r, "u1", "i2", &score, &n) != RK_STATUS_OK) return 3;
    if (rk_recommender_total_servings(r) != n) return 4;
    double eps = 0;
    if (rk_epsilon(0.0, 0.0, &eps) != RK_STATUS_INVALID_ARGUMENT) return 5;
    if (rk_last_error() == NULL) return 6;
    rk_recommender_free(r);
    rk_table_free(t);
    printf("ok %.3f\n", score);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(lib.join("libreuseknn_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
