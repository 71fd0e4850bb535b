mod common;

use std::f64::consts::PI;

use anisym::elliptic::{solve_elliptic, EllipticProblem};
use anisym::parabolic::{
    advance_anisotropic, advance_symmetrized, energy_monitor, read_ledger_times, source_time_average, step_file_name,
    write_trajectory, AnalyticSource, ConstantSource, FieldStack, ParabolicScenario, SourceField, StepOptions,
    SymmetrizedScenario, TimeGrid,
};
use anisym::radial::{max_concentration_gap, RadialProfile};
use anisym::rearrange::decreasing_rearrangement;
use anisym::{AnisotropicCoefficients, DecreasingProfile, GridFunction, RadialSettings};
use common::{lcg_field, max_diff};

fn coeffs(exps: [f64; 2]) -> AnisotropicCoefficients {
    AnisotropicCoefficients::new(vec![1.0, 1.0], exps.to_vec()).unwrap()
}

fn bump(n: usize) -> GridFunction {
    GridFunction::from_fn(n, n, 1.0, 1.0, |x, y| {
        let r2 = ((x - 0.5).powi(2) + (y - 0.5).powi(2)) / 0.35f64.powi(2);
        if r2 < 1.0 {
            (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            0.0
        }
    })
    .unwrap()
}

fn run(exps: [f64; 2], u0: GridFunction, source: Box<dyn SourceField>, grid: TimeGrid) -> anisym::parabolic::TrajectoryRecord {
    advance_anisotropic(&ParabolicScenario {
        coeffs: coeffs(exps),
        u0,
        source,
        time_grid: grid,
        options: StepOptions::default(),
    })
    .unwrap()
}

#[test]
fn zero_data_stay_zero() {
    let z = GridFunction::zeros(8, 8, 0.125, 0.125).unwrap();
    let traj = run([1.5, 3.0], z.clone(), Box::new(ConstantSource(z)), TimeGrid::uniform(1.0, 5).unwrap());
    assert!(traj.fields.iter().all(|u| u.max_abs() == 0.0));
    assert!(traj.ledger.iter().all(|l| l.l2_sq == 0.0 && l.iterations == 0));
}

#[test]
fn time_averages_of_simple_sources() {
    // linear in t: the midpoint rule is exact
    let src = AnalyticSource::new(4, 3, 1.0, 1.0, |x, y, t| (1.0 + x + y) * t);
    let avg = source_time_average(&src, 0.2, 0.6, 3).unwrap();
    let expect = GridFunction::from_fn(4, 3, 1.0, 1.0, |x, y| (1.0 + x + y) * 0.4).unwrap();
    assert!(max_diff(avg.values(), expect.values()) <= 1e-14);

    // a stack switching halfway through the interval averages the two halves
    let a = GridFunction::constant(2, 2, 0.5, 0.5, 1.0).unwrap();
    let b = GridFunction::constant(2, 2, 0.5, 0.5, 3.0).unwrap();
    let stack = FieldStack::new(vec![0.0, 0.5], vec![a.clone(), b]).unwrap();
    let avg = source_time_average(&stack, 0.0, 1.0, 4).unwrap();
    assert!(avg.values().iter().all(|v| (v - 2.0).abs() <= 1e-14));
    assert_eq!(stack.sample(0.49).unwrap(), a);

    assert!(source_time_average(&stack, 1.0, 1.0, 4).is_err());
    assert!(FieldStack::new(vec![0.0, 0.0], vec![a.clone(), a.clone()]).is_err());
    assert!(FieldStack::new(vec![0.0], vec![]).is_err());
}

#[test]
fn free_evolution_dissipates() {
    for exps in [[2.0, 2.0], [1.5, 3.0], [2.0, 4.0]] {
        let u0 = lcg_field(16, 16, 1.0, 1.0, 31);
        let z = GridFunction::zeros(16, 16, 1.0 / 16.0, 1.0 / 16.0).unwrap();
        let traj = run(exps, u0, Box::new(ConstantSource(z)), TimeGrid::uniform(0.5, 10).unwrap());
        let mon = energy_monitor(&traj, &coeffs(exps));
        // ‖u^m‖² − ‖u^{m−1}‖² + ‖u^m − u^{m−1}‖² = −2τ Σ α_i ∫ |D_i u^m|^{p_i} ≤ 0
        assert!(mon.dissipation.iter().all(|d| *d <= 1e-12), "{exps:?}");
        assert!(mon.max_l2_increase <= 1e-12, "{exps:?}");
        assert!(mon.total.is_finite());
    }
}

#[test]
fn long_steps_approach_the_stationary_solution() {
    let f = GridFunction::constant(12, 12, 1.0 / 12.0, 1.0 / 12.0, 1.0).unwrap();
    let traj = run(
        [2.0, 2.0],
        GridFunction::zeros(12, 12, 1.0 / 12.0, 1.0 / 12.0).unwrap(),
        Box::new(ConstantSource(f.clone())),
        TimeGrid::uniform(40.0, 40).unwrap(),
    );
    let prob = EllipticProblem::relaxed(coeffs([2.0, 2.0]), 0.0, f).unwrap();
    let (w, _) = solve_elliptic(&prob, 1e-12, 50).unwrap();
    assert!(max_diff(traj.fields.last().unwrap().values(), w.values()) <= 1e-9);
}

#[test]
fn larger_data_give_larger_symmetrized_solutions() {
    let settings = RadialSettings::new(1.0, 2.0, 2, 1.0);
    let grid = TimeGrid::uniform(0.5, 5).unwrap();
    let u0 = decreasing_rearrangement(&bump(24));
    let run = |c: f64, v0: RadialProfile| {
        let data = DecreasingProfile::constant(1.0, c).unwrap();
        advance_symmetrized(&SymmetrizedScenario {
            time_grid: grid.clone(),
            v0,
            data: vec![data; grid.steps()],
            settings: settings.clone(),
        })
        .unwrap()
    };
    let v0 = anisym::rearrange::profile_to_radial(&u0);
    let small = run(1.0, v0.clone());
    let large = run(1.5, v0.scaled(1.2));
    for (a, b) in small.profiles.iter().zip(&large.profiles) {
        let (gap, _) = max_concentration_gap(a, b);
        assert!(gap <= 1e-10, "{gap}");
    }
}

#[test]
fn refinement_settles_the_final_state() {
    let final_l2 = |n: usize, steps: usize| {
        let f = GridFunction::constant(n, n, 1.0 / n as f64, 1.0 / n as f64, 1.0).unwrap();
        let traj = run([1.5, 3.0], bump(n), Box::new(ConstantSource(f)), TimeGrid::uniform(0.5, steps).unwrap());
        traj.fields.last().unwrap().l2_norm()
    };
    let (a, b, c) = (final_l2(12, 6), final_l2(24, 12), final_l2(48, 24));
    // successive differences contract, roughly first order in (h, δ)
    assert!((a - b).abs() >= 1.5 * (b - c).abs(), "{a} {b} {c}");
}

#[test]
fn trajectories_round_trip_through_disk() {
    let u0 = bump(10);
    let traj = run(
        [1.5, 3.0],
        u0,
        Box::new(AnalyticSource::new(10, 10, 1.0, 1.0, |x, _, t| x * (1.0 + t))),
        TimeGrid::from_nodes(vec![0.0, 0.1, 0.3, 0.6]).unwrap(),
    );
    let dir = tempfile::tempdir().unwrap();
    write_trajectory(&traj, dir.path()).unwrap();
    assert_eq!(read_ledger_times(dir.path()).unwrap(), traj.time_grid.nodes());
    for (m, u) in traj.fields.iter().enumerate() {
        let back = GridFunction::load_csv(&dir.path().join(step_file_name(m))).unwrap();
        assert_eq!(&back, u);
    }
    assert!(read_ledger_times(&dir.path().join("missing")).is_err());
}

#[test]
fn rejects_mismatched_symmetrized_inputs() {
    let settings = RadialSettings::new(1.0, 2.0, 2, PI);
    let grid = TimeGrid::uniform(1.0, 2).unwrap();
    let v0 = anisym::rearrange::profile_to_radial(&DecreasingProfile::constant(PI, 0.0).unwrap());
    let one = DecreasingProfile::constant(PI, 1.0).unwrap();
    // one profile short
    assert!(advance_symmetrized(&SymmetrizedScenario {
        time_grid: grid.clone(),
        v0: v0.clone(),
        data: vec![one.clone()],
        settings: settings.clone(),
    })
    .is_err());
    // initial profile on the wrong measure
    let wrong = anisym::rearrange::profile_to_radial(&DecreasingProfile::constant(1.0, 0.0).unwrap());
    assert!(advance_symmetrized(&SymmetrizedScenario {
        time_grid: grid,
        v0: wrong,
        data: vec![one.clone(), one],
        settings,
    })
    .is_err());
}
