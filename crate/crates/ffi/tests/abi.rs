use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use nncomplete::data::{write_long_csv, Labeled};
use nncomplete::MaskedMatrix;
use nncomplete_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(nnc_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn new_matrix(n: usize, t: usize, values: &[f64], mask: &[u8]) -> *mut NncMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { nnc_matrix_new(n, t, values.as_ptr(), mask.as_ptr(), &mut m) },
        NncStatus::Ok
    );
    m
}

#[test]
fn construction_and_copy_out() {
    let values = [1.0, f64::NAN, 3.0, 4.0];
    let m = new_matrix(2, 2, &values, &[1, 0, 1, 1]);
    let (mut n, mut t, mut obs) = (0, 0, 0);
    assert_eq!(unsafe { nnc_matrix_dims(m, &mut n, &mut t, &mut obs) }, NncStatus::Ok);
    assert_eq!((n, t, obs), (2, 2, 3));
    let mut out = [0.0; 4];
    let mut mask = [9u8; 4];
    assert_eq!(
        unsafe { nnc_matrix_copy_out(m, out.as_mut_ptr(), mask.as_mut_ptr()) },
        NncStatus::Ok
    );
    assert_eq!(mask, [1, 0, 1, 1]);
    assert!(out[1].is_nan());
    assert_eq!([out[0], out[2], out[3]], [1.0, 3.0, 4.0]);
    unsafe { nnc_matrix_free(m) };
}

#[test]
fn bad_inputs_report_codes_and_messages() {
    let mut m = ptr::null_mut();
    let s = unsafe { nnc_matrix_new(2, 2, [1.0; 4].as_ptr(), [0u8; 4].as_ptr(), &mut m) };
    assert_eq!(s, NncStatus::AllMissing);
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { nnc_matrix_new(1, 2, [1.0, f64::INFINITY].as_ptr(), [1u8, 1].as_ptr(), &mut m) };
    assert_ne!(s, NncStatus::Ok);

    let m = new_matrix(2, 2, &[1.0, 2.0, 3.0, 4.0], &[1, 1, 1, 1]);
    let mut p = nnc_params_default();
    p.alpha = 2.0;
    let mut v = 0.0;
    let s = unsafe { nnc_impute(m, NncMethod::Autonn, &p, 0, 0, &mut v, ptr::null_mut(), ptr::null_mut()) };
    assert_eq!(s, NncStatus::InvalidArgument);
    assert!(last_error().contains("alpha"));
    unsafe { nnc_matrix_free(m) };
}

#[test]
fn impute_matches_library() {
    let mut theta = vec![0.0; 12 * 10];
    let mut m = ptr::null_mut();
    let s = unsafe { nnc_generate_scalar(12, 10, 3, 0.1, 0.7, 4, &mut m, theta.as_mut_ptr()) };
    assert_eq!(s, NncStatus::Ok);
    let p = nnc_params_default();
    let mut out = vec![0.0; 120];
    let mut failed = 0;
    assert_eq!(
        unsafe { nnc_complete(m, NncMethod::Drnn, &p, out.as_mut_ptr(), &mut failed) },
        NncStatus::Ok
    );
    assert_eq!(failed, 0);

    let mut values = vec![0.0; 120];
    let mut mask = vec![0u8; 120];
    unsafe { nnc_matrix_copy_out(m, values.as_mut_ptr(), mask.as_mut_ptr()) };
    let lib = MaskedMatrix::from_vecs(12, 10, values.clone(), mask.iter().map(|&b| b == 1).collect()).unwrap();
    assert!(lib.n_observed() < 120);
    for r in 0..12 {
        for c in 0..10 {
            let k = r * 10 + c;
            if mask[k] == 1 {
                assert_eq!(out[k], values[k]);
            } else {
                let mut v = 0.0;
                let s = unsafe { nnc_impute(m, NncMethod::Drnn, &p, r, c, &mut v, ptr::null_mut(), ptr::null_mut()) };
                assert_eq!(s, NncStatus::Ok);
                assert_eq!(v, out[k]);
            }
        }
    }
    unsafe { nnc_matrix_free(m) };
}

#[test]
fn tune_returns_params_that_reproduce() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { nnc_generate_scalar(15, 12, 2, 0.1, 0.8, 1, &mut m, ptr::null_mut()) },
        NncStatus::Ok
    );
    let mut best = nnc_params_default();
    let mut score = f64::NAN;
    assert_eq!(
        unsafe { nnc_tune(m, NncMethod::Tsnn, 3, &mut best, &mut score) },
        NncStatus::Ok
    );
    assert!(score.is_finite() && score >= 0.0);
    let mut again = nnc_params_default();
    unsafe { nnc_tune(m, NncMethod::Tsnn, 3, &mut again, ptr::null_mut()) };
    assert_eq!(best, again);
    unsafe { nnc_matrix_free(m) };
}

#[test]
fn loads_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("panel.csv");
    let panel = MaskedMatrix::from_vecs(
        2,
        3,
        vec![1.0, 2.0, 0.0, 4.0, 5.0, 6.0],
        vec![true, true, false, true, true, true],
    )
    .unwrap();
    write_long_csv(std::fs::File::create(&path).unwrap(), &Labeled::indexed(panel, 2, 3)).unwrap();
    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { nnc_matrix_load_long_csv(c_path.as_ptr(), &mut m) },
        NncStatus::Ok
    );
    let (mut n, mut t, mut obs) = (0, 0, 0);
    unsafe { nnc_matrix_dims(m, &mut n, &mut t, &mut obs) };
    assert_eq!((n, t, obs), (2, 3, 5));
    unsafe { nnc_matrix_free(m) };

    let missing = CString::new(dir.path().join("nope.csv").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { nnc_matrix_load_long_csv(missing.as_ptr(), &mut m) },
        NncStatus::Io
    );
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(nnc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Builds the static library; `cargo test` alone only produces the rlib.
/// Reuses this test's target directory and profile, so nothing but the
/// final link step is redone.
fn static_lib() -> PathBuf {
    // target/<profile dir>/deps/abi-<hash>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let target_dir = profile_dir.parent().unwrap();
    let status = Command::new(env!("CARGO"))
        .args([
            "build",
            "--quiet",
            "--profile",
            "test",
            "--lib",
            "-p",
            "nncomplete-ffi",
            "--target-dir",
        ])
        .arg(target_dir)
        .status()
        .expect("cargo runs");
    assert!(status.success(), "building the static library failed");
    profile_dir.join("libnncomplete_ffi.a")
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = static_lib();
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc is available");
    assert!(status.success(), "C smoke test failed to build");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
