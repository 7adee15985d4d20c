use std::ffi::{c_char, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wnmcmc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { wn_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn lambda_functions_and_errors() {
    let mut v = f64::NAN;
    assert_eq!(unsafe { wn_lambda_uniform(0.0, &mut v) }, WnStatus::Ok);
    assert!(v.abs() < 1e-15);
    assert_eq!(unsafe { wn_lambda_besov(0.3, 2.0, &mut v) }, WnStatus::Ok);
    assert!((v - 0.3).abs() < 1e-12);
    assert_eq!(unsafe { wn_lambda_besov(0.3, -1.0, &mut v) }, WnStatus::Domain);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { wn_lambda_uniform(0.0, ptr::null_mut()) }, WnStatus::NullPointer);
    assert!(last_error().contains("null"));
}

#[test]
fn series_transform_roundtrip() {
    let weights = [1.0, 0.5, 0.25];
    let points = [0.1, 0.5, 0.9];
    let mut t = ptr::null_mut();
    let st = unsafe { wn_series_transform_new(WnLaw::Gaussian, 0.0, 1, weights.as_ptr(), 3, 2.0, points.as_ptr(), 3, &mut t) };
    assert_eq!(st, WnStatus::Ok);
    assert_eq!(unsafe { wn_series_transform_latent_len(t) }, 3);
    assert_eq!(unsafe { wn_series_transform_n_points(t) }, 3);
    let mut out = [0.0; 3];
    let zero = [0.0; 3];
    assert_eq!(unsafe { wn_series_transform_apply(t, zero.as_ptr(), 3, out.as_mut_ptr(), 3) }, WnStatus::Ok);
    assert_eq!(out, [2.0; 3]);
    assert_eq!(unsafe { wn_series_transform_apply(t, zero.as_ptr(), 2, out.as_mut_ptr(), 3) }, WnStatus::Domain);
    unsafe { wn_series_transform_free(t) };
    unsafe { wn_series_transform_free(ptr::null_mut()) };
}

#[test]
fn darcy_solve_is_positive_inside() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { wn_darcy_new(2, 9, 1.0, &mut d) }, WnStatus::Ok);
    let n = unsafe { wn_darcy_n_nodes(d) };
    assert_eq!(n, 81);
    let perm = vec![1.0; n];
    let mut p = vec![0.0; n];
    assert_eq!(unsafe { wn_darcy_solve(d, perm.as_ptr(), p.as_mut_ptr(), n) }, WnStatus::Ok);
    assert!(p[4 * 9 + 4] > 0.0);
    assert!(p.iter().all(|&v| v >= 0.0));
    assert_eq!(unsafe { wn_darcy_solve(d, perm.as_ptr(), p.as_mut_ptr(), n - 1) }, WnStatus::Domain);
    unsafe { wn_darcy_free(d) };
}

#[test]
fn run_experiment_from_text() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        "experiment = graph_ssl\nseed = 3\nout = {}\ngraph.n = 60\ngraph.steps = 400\ngraph.burn_in = 100\n",
        dir.path().display()
    );
    let c = CString::new(cfg).unwrap();
    assert_eq!(unsafe { wn_run_experiment(c.as_ptr()) }, WnStatus::Ok, "{}", last_error());
    assert!(dir.path().join("graph_nodes.csv").exists());
    let bad = CString::new("experiment = nope\n").unwrap();
    assert_eq!(unsafe { wn_run_experiment(bad.as_ptr()) }, WnStatus::Config);
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "wnmcmc.h"

int main(void) {
    double v = 1.0;
    if (wn_lambda_uniform(0.0, &v) != WN_STATUS_OK || v != 0.0) return 1;
    WnDarcy *d = NULL;
    if (wn_darcy_new(1, 5, 1.0, &d) != WN_STATUS_OK) return 2;
    size_t n = wn_darcy_n_nodes(d);
    double perm[5] = {1, 1, 1, 1, 1}, p[5];
    if (n != 5 || wn_darcy_solve(d, perm, p, n) != WN_STATUS_OK) return 3;
    wn_darcy_free(d);
    if (wn_lambda_uniform(0.0, NULL) != WN_STATUS_NULL_POINTER) return 4;
    char msg[64];
    if (wn_last_error_message(msg, sizeof msg) == 0) return 5;
    printf("%s %.6f\n", wn_version(), p[2]);
    return 0;
}
"#;

/// Compiles a C program against the generated header and the static library.
/// Skipped when no C compiler or static archive is available.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let target = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).parent().unwrap().to_path_buf();
    let lib = ["debug", "release"]
        .iter()
        .map(|p| target.join(p).join("libwnmcmc_ffi.a"))
        .find(|p| p.exists());
    let (Some(lib), Ok(_)) = (lib, Command::new("cc").arg("--version").output()) else {
        eprintln!("skipping: no cc or static library");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(env!("CARGO_PKG_VERSION")));
}
