use std::ffi::{CStr, CString};
use std::ptr;

use anisym_ffi::*;

fn last_error() -> String {
    let p = anisym_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn lambda_isotropic_is_one() {
    let a = [1.0, 1.0];
    let p = [2.0, 2.0];
    let mut out = 0.0;
    let st = unsafe { anisym_lambda_constant(a.as_ptr(), p.as_ptr(), 2, &mut out) };
    assert_eq!(st, AnisymStatus::Ok);
    assert!((out - 1.0).abs() < 1e-12);
}

#[test]
fn lambda_rejects_bad_exponents_with_message() {
    let a = [1.0, 1.0];
    let p = [1.0, 1.0];
    let mut out = 0.0;
    let st = unsafe { anisym_lambda_constant(a.as_ptr(), p.as_ptr(), 2, &mut out) };
    assert_eq!(st, AnisymStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn null_output_is_reported() {
    let a = [1.0, 1.0];
    let p = [2.0, 3.0];
    let st = unsafe { anisym_lambda_constant(a.as_ptr(), p.as_ptr(), 2, ptr::null_mut()) };
    assert_eq!(st, AnisymStatus::NullPointer);
    assert!(last_error().contains("out"));
}

#[test]
fn eigenvalue_of_unit_disc() {
    let mut out = 0.0;
    assert_eq!(unsafe { anisym_eigenvalue(1.0, 2, &mut out) }, AnisymStatus::Ok);
    assert!((out - 5.783185962946784).abs() < 1e-6);
}

#[test]
fn grid_rearrange_round_trip() {
    let values = [3.0, -1.0, 2.0, 0.5, 4.0, -2.5];
    let mut grid = ptr::null_mut();
    unsafe {
        assert_eq!(anisym_grid_new(3, 2, 0.5, 0.5, values.as_ptr(), &mut grid), AnisymStatus::Ok);
        let (mut nx, mut ny) = (0, 0);
        assert_eq!(anisym_grid_shape(grid, &mut nx, &mut ny), AnisymStatus::Ok);
        assert_eq!((nx, ny), (3, 2));
        let mut back = [0.0; 6];
        assert_eq!(anisym_grid_values(grid, back.as_mut_ptr(), 6), AnisymStatus::Ok);
        assert_eq!(back, values);
        assert_eq!(anisym_grid_values(grid, back.as_mut_ptr(), 5), AnisymStatus::InvalidArgument);

        let mut prof = ptr::null_mut();
        assert_eq!(anisym_rearrange(grid, &mut prof), AnisymStatus::Ok);
        let mut steps = 0;
        assert_eq!(anisym_profile_steps(prof, &mut steps), AnisymStatus::Ok);
        assert_eq!(steps, 6);
        let mut bp = vec![0.0; steps + 1];
        let mut lv = vec![0.0; steps];
        assert_eq!(anisym_profile_data(prof, bp.as_mut_ptr(), lv.as_mut_ptr(), steps), AnisymStatus::Ok);
        assert_eq!(lv, vec![4.0, 3.0, 2.5, 2.0, 1.0, 0.5]);
        assert!((bp[6] - 1.5).abs() < 1e-15);

        let mut total = 0.0;
        assert_eq!(anisym_profile_concentration(prof, 1.5, &mut total), AnisymStatus::Ok);
        assert!((total - 13.0 * 0.25).abs() < 1e-14);
        let mut sup = 0.0;
        assert_eq!(anisym_profile_lorentz_norm(prof, 1.0, f64::INFINITY, &mut sup), AnisymStatus::Ok);
        assert!((sup - 4.0).abs() < 1e-14);

        anisym_profile_free(prof);
        anisym_grid_free(grid);
        anisym_grid_free(ptr::null_mut());
    }
}

#[test]
fn elliptic_single_cell() {
    // one unit cell with zero ghosts: (λ + 4) w = g
    let g = [1.0];
    let mut rhs = ptr::null_mut();
    let mut w = ptr::null_mut();
    let mut iters = 0;
    unsafe {
        assert_eq!(anisym_grid_new(1, 1, 1.0, 1.0, g.as_ptr(), &mut rhs), AnisymStatus::Ok);
        let a = [1.0, 1.0];
        let p = [2.0, 2.0];
        let st = anisym_elliptic_solve(a.as_ptr(), p.as_ptr(), 1.0, rhs, 1e-12, 50, &mut w, &mut iters);
        assert_eq!(st, AnisymStatus::Ok);
        let mut v = [0.0];
        anisym_grid_values(w, v.as_mut_ptr(), 1);
        assert!((v[0] - 0.2).abs() < 1e-12);
        anisym_grid_free(w);
        anisym_grid_free(rhs);
    }
}

#[test]
fn scenario_run_and_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.json");
    std::fs::write(
        &cfg,
        r#"{"coefficients":{"alphas":[1,1],"exponents":[2,2]},
            "domain":{"lx":1,"ly":1,"nx":4,"ny":4},
            "u0":{"kind":"zero"},"source":{"kind":"zero"},
            "time":{"t_final":1,"steps":2}}"#,
    )
    .unwrap();
    let cfg_c = CString::new(cfg.to_str().unwrap()).unwrap();
    let out_c = CString::new(dir.path().join("out").to_str().unwrap()).unwrap();
    let mut passed = -1;
    let st = unsafe { anisym_run_scenario(cfg_c.as_ptr(), out_c.as_ptr(), &mut passed) };
    assert_eq!(st, AnisymStatus::Ok);
    assert_eq!(passed, 1);
    assert!(dir.path().join("out/report.json").exists());

    std::fs::write(
        &cfg,
        r#"{"coefficients":{"alphas":[1,1],"exponents":[1,1]},
            "domain":{"lx":1,"ly":1,"nx":4,"ny":4},
            "u0":{"kind":"zero"},"source":{"kind":"zero"},
            "time":{"t_final":1,"steps":2}}"#,
    )
    .unwrap();
    let st = unsafe { anisym_run_scenario(cfg_c.as_ptr(), out_c.as_ptr(), &mut passed) };
    assert_eq!(st, AnisymStatus::ConfigError);
    assert!(last_error().contains("coefficients.exponents"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/anisym.h")).unwrap();
    for name in [
        "anisym_lambda_constant",
        "anisym_eigenvalue",
        "anisym_grid_new",
        "anisym_grid_free",
        "anisym_rearrange",
        "anisym_profile_lorentz_norm",
        "anisym_elliptic_solve",
        "anisym_run_scenario",
        "typedef struct AnisymGrid AnisymGrid",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(anisym_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
