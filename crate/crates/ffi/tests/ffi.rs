use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use closedloop_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cl_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn tree_round_trip_and_probabilities() {
    unsafe {
        let mut bsc = ptr::null_mut();
        assert_eq!(cl_dmc_bsc(0.3, &mut bsc), ClStatus::Ok);
        let mut tree = ptr::null_mut();
        assert_eq!(cl_tree_optimal(bsc, 3, 0, 1, 0.25, &mut tree), ClStatus::Ok);

        let mut n = 0usize;
        let mut small = [0usize; 2];
        assert_eq!(cl_tree_labels(tree, small.as_mut_ptr(), 2, &mut n), ClStatus::BufferTooSmall);
        assert_eq!(n, 7);
        let mut labels = vec![9usize; n];
        assert_eq!(cl_tree_labels(tree, labels.as_mut_ptr(), n, &mut n), ClStatus::Ok);
        assert!(labels.iter().all(|&l| l < 2));

        let mut copy = ptr::null_mut();
        assert_eq!(cl_tree_from_labels(3, 2, 2, labels.as_ptr(), n, &mut copy), ClStatus::Ok);
        let text = CString::new(format!(
            "tree 3 2 2\n{}\n",
            labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ")
        ))
        .unwrap();
        let mut parsed = ptr::null_mut();
        assert_eq!(cl_tree_parse(text.as_ptr(), &mut parsed), ClStatus::Ok);

        let (mut p1, mut p2, mut p3, mut best, mut bound, mut bias) = (0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(cl_tree_success_probability(tree, bsc, 0, 1, 0.25, &mut p1), ClStatus::Ok);
        assert_eq!(cl_tree_success_probability(copy, bsc, 0, 1, 0.25, &mut p2), ClStatus::Ok);
        assert_eq!(cl_tree_success_probability(parsed, bsc, 0, 1, 0.25, &mut p3), ClStatus::Ok);
        assert_eq!(cl_exhaustive_max_success(bsc, 3, 0, 1, 0.25, &mut best), ClStatus::Ok);
        assert_eq!(cl_lemma1_bound(3, 0.25, &mut bound), ClStatus::Ok);
        assert_eq!(cl_martingale_bias(tree, bsc, 0, 1, 0.25, &mut bias), ClStatus::Ok);
        assert_eq!((p1, p1), (p2, p3));
        assert!((p1 - best).abs() < 1e-12);
        assert!((bound - 4.0 / 3.0).abs() < 1e-12);
        assert!(bias < 1e-12);

        for t in [tree, copy, parsed] {
            cl_tree_free(t);
        }
        cl_dmc_free(bsc);
    }
}

#[test]
fn channels_and_isac_quantities() {
    unsafe {
        // a state-independent BSC(0.11)
        let rows = [0.89, 0.11, 0.89, 0.11, 0.11, 0.89, 0.11, 0.89];
        let mut sdmc = ptr::null_mut();
        assert_eq!(cl_sdmc_new(rows.as_ptr(), 2, 2, 2, &mut sdmc), ClStatus::Ok);
        let (px, ps) = ([0.5, 0.5], [0.7, 0.3]);
        let mut mi = 0.0;
        assert_eq!(cl_mutual_information(px.as_ptr(), 2, sdmc, ps.as_ptr(), 2, &mut mi), ClStatus::Ok);
        let h = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
        assert!((mi - (1.0 - h)).abs() < 1e-9);
        cl_sdmc_free(sdmc);

        let text = CString::new("sdmc 2 2 2\n0.9 0.1\n0.6 0.4\n0.1 0.9\n0.8 0.2\n").unwrap();
        assert_eq!(cl_sdmc_parse(text.as_ptr(), &mut sdmc), ClStatus::Ok);
        let hamming = [0.0, 1.0, 1.0, 0.0];
        let mut d = 0.0;
        let px = [0.5, 0.5];
        assert_eq!(
            cl_expected_distortion(px.as_ptr(), 2, sdmc, ps.as_ptr(), 2, hamming.as_ptr(), 2, &mut d),
            ClStatus::Ok
        );
        assert!((d - 0.19).abs() < 1e-12);
        cl_sdmc_free(sdmc);

        let mut dmc = ptr::null_mut();
        let text = CString::new("dmc 2 3\n0.5 0.3 0.2\n0.1 0.3 0.6\n").unwrap();
        assert_eq!(cl_dmc_parse(text.as_ptr(), &mut dmc), ClStatus::Ok);
        let mut best = 0.0;
        assert_eq!(cl_exhaustive_max_success(dmc, 2, 0, 2, 0.25, &mut best), ClStatus::Ok);
        assert!((0.0..=1.0).contains(&best));
        cl_dmc_free(dmc);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut dmc = ptr::null_mut();
        assert_eq!(cl_dmc_bsc(0.5, ptr::null_mut()), ClStatus::NullPointer);
        assert_eq!(cl_dmc_bsc(1.5, &mut dmc), ClStatus::InvalidArgument);
        assert!(dmc.is_null());
        assert!(!last_error().is_empty());

        let bad = CString::new("dmc 2 2\n0.5\n").unwrap();
        assert_eq!(cl_dmc_parse(bad.as_ptr(), &mut dmc), ClStatus::ParseError);
        assert_eq!(cl_dmc_parse(ptr::null(), &mut dmc), ClStatus::NullPointer);

        let mut out = 0.0;
        assert_eq!(cl_lemma1_bound(3, -1.0, &mut out), ClStatus::InvalidArgument);
        assert!(last_error().contains("mu"));

        assert_eq!(cl_dmc_bsc(0.2, &mut dmc), ClStatus::Ok);
        assert_eq!(cl_exhaustive_max_success(dmc, 7, 0, 1, 0.2, &mut out), ClStatus::TooLarge);
        let mut tree = ptr::null_mut();
        assert_eq!(cl_tree_optimal(dmc, 2, 5, 1, 0.2, &mut tree), ClStatus::InvalidArgument);
        assert_eq!(cl_tree_success_probability(ptr::null(), dmc, 0, 1, 0.2, &mut out), ClStatus::NullPointer);
        cl_dmc_free(dmc);
        cl_dmc_free(ptr::null_mut());
        cl_tree_free(ptr::null_mut());

        let version = CStr::from_ptr(cl_version()).to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }
}

fn manifest_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn has_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    if !has_cc() {
        eprintln!("skipped: no C compiler");
        return;
    }
    let header = manifest_dir().join("include/closedloop.h");
    for lang in ["c", "c++"] {
        let o =
            Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang]).arg(&header).output().unwrap();
        assert!(o.status.success(), "{lang}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

/// The static library built next to this test binary, if any.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libclosedloop_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_and_runs() {
    let Some(lib) = static_lib().filter(|_| has_cc()) else {
        eprintln!("skipped: no C compiler or static library");
        return;
    };
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let o = Command::new("cc")
        .arg(manifest_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
