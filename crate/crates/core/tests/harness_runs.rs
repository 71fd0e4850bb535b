use std::path::Path;
use std::process::Command;

use anisym::harness::{error_exit_code, exit_code, run_scenario, run_scenario_file, FieldSpec, ScenarioConfig};
use anisym::rearrange::{decreasing_rearrangement, MassProfile};
use anisym::{DecreasingProfile, Error, GridFunction};

fn small(name: &str) -> ScenarioConfig {
    let mut c = ScenarioConfig::preset("model-p2").unwrap();
    c.name = name.into();
    c.domain.nx = 16;
    c.domain.ny = 16;
    c.time.steps = 8;
    c
}

fn anisym_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anisym"))
}

fn write_config(dir: &Path, c: &ScenarioConfig) -> std::path::PathBuf {
    let path = dir.join(format!("{}.json", c.name));
    std::fs::write(&path, serde_json::to_string_pretty(c).unwrap()).unwrap();
    path
}

#[test]
fn zero_preset_passes_every_check() {
    let c = ScenarioConfig::preset("zero").unwrap();
    let out = run_scenario(&c, Path::new("."), None).unwrap();
    assert!(out.passed());
    assert_eq!(out.report.checks.lorentz, Some(true));
    assert_eq!(out.report.checks.decay, Some(true));
    assert!(out.report.dominance.rows.iter().all(|r| r.gap == 0.0));
    assert!(out.report.lorentz.iter().all(|r| r.u_norm == 0.0 && r.v_norm == 0.0));
}

#[test]
fn malformed_configs_are_config_errors() {
    let bad = [
        r#"{"coefficients": {"alphas": [1, 1], "exponents": [2, 2]}}"#,
        r#"{"coefficients": {"alphas": [1, 1], "exponents": [2, 2]}, "domain": {"lx": 1, "ly": 1, "nx": 4, "ny": 4},
            "u0": {"kind": "zero"}, "source": {"kind": "zero"}, "time": {"t_final": 1, "steps": 2}, "colour": 3}"#,
        r#"{"coefficients": {"alphas": [1, -1], "exponents": [2, 2]}, "domain": {"lx": 1, "ly": 1, "nx": 4, "ny": 4},
            "u0": {"kind": "zero"}, "source": {"kind": "zero"}, "time": {"t_final": 1, "steps": 2}}"#,
        r#"{"coefficients": {"alphas": [1, 1], "exponents": [2, 2]}, "domain": {"lx": 1, "ly": 1, "nx": 0, "ny": 4},
            "u0": {"kind": "zero"}, "source": {"kind": "zero"}, "time": {"t_final": 1, "steps": 2}}"#,
    ];
    for text in bad {
        let err = ScenarioConfig::from_json(text).and_then(|c| c.validate().map(|_| c)).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        assert_eq!(error_exit_code(&err), exit_code::CONFIG_ERROR);
    }
    match run_scenario_file(Path::new("/nonexistent/config.json"), None) {
        Err(missing) => assert_eq!(error_exit_code(&missing), exit_code::CONFIG_ERROR),
        Ok(_) => panic!("missing config file accepted"),
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| anisym_bin().args(args).output().unwrap();

    let out = status(&["lambda", "--alphas", "1,1", "--exponents", "2,2"]);
    assert_eq!(out.status.code(), Some(exit_code::PASS));
    let value: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((value - 1.0).abs() <= 1e-12);

    assert_eq!(status(&["parabolic", "--preset", "nope"]).status.code(), Some(exit_code::CONFIG_ERROR));
    assert_eq!(status(&["lambda", "--alphas", "1", "--exponents", "2,2"]).status.code(), Some(exit_code::CONFIG_ERROR));

    let report_dir = dir.path().join("zero");
    let out = status(&["parabolic", "--preset", "zero", "--out", report_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(exit_code::PASS));
    for f in ["report.json", "dominance.csv", "lorentz.csv", "decay.csv", "steps/u/ledger.csv", "steps/v/step_0000.csv"] {
        assert!(report_dir.join(f).exists(), "{f}");
    }

    // one Newton step cannot reach the tolerance
    let mut c = small("starved");
    c.tolerances.max_iter = 1;
    let path = write_config(dir.path(), &c);
    let out = status(&["parabolic", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(exit_code::SOLVER_FAILURE));
}

#[test]
fn cli_compare_detects_swapped_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |c: &ScenarioConfig| {
        let path = write_config(dir.path(), c);
        let out = dir.path().join(&c.name);
        let st = anisym_bin()
            .args(["parabolic", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(st.status.code(), Some(exit_code::PASS));
        out
    };
    let forced = run(&small("forced"));
    let mut free = small("free");
    free.source = FieldSpec::Zero;
    let free = run(&free);

    let compare = |u: &Path, v: &Path, margin: Option<&str>| {
        let mut cmd = anisym_bin();
        if let Some(m) = margin {
            cmd.args(["--margin", m]);
        }
        cmd.args(["compare", "--u", u.to_str().unwrap(), "--v", v.to_str().unwrap()])
            .output()
            .unwrap()
            .status
            .code()
    };
    let (fu, fv) = (forced.join("steps/u"), forced.join("steps/v"));
    let zu = free.join("steps/u");
    assert_eq!(compare(&fu, &fv, None), Some(exit_code::PASS));
    // the free run is dominated by the forced one, not the other way round
    assert_eq!(compare(&zu, &fu, Some("1e-9")), Some(exit_code::PASS));
    assert_eq!(compare(&fu, &zu, Some("1e-9")), Some(exit_code::VERIFICATION_FAILURE));
}

#[test]
fn dominating_profiles_replace_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let c = small("dominated");
    let measure = c.domain.measure();
    let u0 = c.build_field(&c.u0, "u0", dir.path()).unwrap();
    let u0_star = decreasing_rearrangement(&u0);
    // f̃ = 2 > f = 1; ṽ0 = 1.5 u0*
    DecreasingProfile::constant(measure, 2.0).unwrap().save_csv(&dir.path().join("f.csv")).unwrap();
    let scaled = DecreasingProfile::new(
        u0_star.breakpoints().to_vec(),
        u0_star.levels().iter().map(|l| 1.5 * l).collect(),
    )
    .unwrap();
    scaled.save_csv(&dir.path().join("v0.csv")).unwrap();

    let mut dom = c.clone();
    dom.dominating.source_profile = Some("f.csv".into());
    dom.dominating.initial_profile = Some("v0.csv".into());
    let out = run_scenario(&dom, dir.path(), None).unwrap();
    assert!(out.passed());
    let summary = out.report.dominating.as_ref().unwrap();
    assert!(summary.source && summary.initial && summary.implies_rearranged_run_passes);

    // the plain run passes as well, with a smaller symmetrized solution
    let plain = run_scenario(&c, dir.path(), None).unwrap();
    assert!(plain.passed());
    let last = |o: &anisym::harness::RunOutcome| o.symmetrized.profiles.last().unwrap().concentration_at(measure);
    assert!(last(&plain) < last(&out));

    // a profile below f* is rejected at load time, naming the field
    DecreasingProfile::constant(measure, 0.5).unwrap().save_csv(&dir.path().join("low.csv")).unwrap();
    let mut low = c.clone();
    low.dominating.source_profile = Some("low.csv".into());
    match run_scenario(&low, dir.path(), None) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "dominating.source_profile"),
        other => panic!("expected a config error, got {:?}", other.err()),
    }
}

/// `‖h‖_{1,1} = ∫ h** = Σ_k level_k [σ(1 + ln(|Ω|/σ))]_{s_k}^{s_{k+1}}` for a step profile.
fn lorentz_11(p: &DecreasingProfile) -> f64 {
    let m = p.measure();
    let prim = |s: f64| if s == 0.0 { 0.0 } else { s * (1.0 + (m / s).ln()) };
    let b = p.breakpoints();
    p.levels().iter().enumerate().map(|(k, l)| l * (prim(b[k + 1]) - prim(b[k]))).sum()
}

#[test]
fn lorentz_11_rows_match_the_log_weight_formula() {
    let out = run_scenario(&small("lorentz"), Path::new("."), None).unwrap();
    let rows: Vec<_> = out.report.lorentz.iter().filter(|r| r.p.0 == 1.0 && r.q.0 == 1.0).collect();
    assert_eq!(rows.len(), out.trajectory.fields.len());
    for r in rows {
        let expect = lorentz_11(&decreasing_rearrangement(&out.trajectory.fields[r.m]));
        assert!((r.u_norm - expect).abs() <= 1e-12 * (1.0 + expect), "step {}", r.m);
        assert!(r.pass);
    }
}

#[test]
fn decay_table_scales_with_the_initial_datum() {
    let mut c = ScenarioConfig::preset("decay").unwrap();
    c.domain.nx = 16;
    c.domain.ny = 16;
    let base = run_scenario(&c, Path::new("."), None).unwrap();
    let table = base.report.decay.as_ref().unwrap();
    assert!(table.passed && table.monotone);

    let mut doubled = c.clone();
    doubled.u0 = FieldSpec::Random {
        amplitude: 2.0,
        seed: None,
    };
    let twice = run_scenario(&doubled, Path::new("."), None).unwrap();
    for (a, b) in table.rows.iter().zip(&twice.report.decay.as_ref().unwrap().rows) {
        assert!((b.l2 - 2.0 * a.l2).abs() <= 1e-9 * (1.0 + a.l2), "step {}", a.m);
    }

    let mut zero = c;
    zero.u0 = FieldSpec::Zero;
    let z = run_scenario(&zero, Path::new("."), None).unwrap();
    assert!(z.report.decay.as_ref().unwrap().rows.iter().all(|r| r.l2 == 0.0 && r.pass));
}

#[test]
fn reports_are_deterministic() {
    let c = small("det");
    let a = run_scenario(&c, Path::new("."), None).unwrap().report.to_json().unwrap();
    let b = run_scenario(&c, Path::new("."), None).unwrap().report.to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_stack_sources_are_averaged_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = small("stack");
    c.time.steps = 4;
    let (nx, ny) = (c.domain.nx, c.domain.ny);
    let lo = GridFunction::constant(nx, ny, c.domain.hx(), c.domain.hy(), 1.0).unwrap();
    let hi = GridFunction::constant(nx, ny, c.domain.hx(), c.domain.hy(), 3.0).unwrap();
    lo.save_csv(&dir.path().join("lo.csv")).unwrap();
    hi.save_csv(&dir.path().join("hi.csv")).unwrap();
    // switches in the middle of the second step [0.25, 0.5]
    c.source = FieldSpec::CsvStack {
        times: vec![0.0, 0.375],
        paths: vec!["lo.csv".into(), "hi.csv".into()],
    };
    let path = write_config(dir.path(), &c);
    let out = run_scenario_file(&path, None).unwrap();
    assert!(out.passed());
    let means: Vec<f64> = out.trajectory.sources.iter().map(|f| f.values()[0]).collect();
    assert_eq!(means, vec![1.0, 2.0, 3.0, 3.0]);
}
