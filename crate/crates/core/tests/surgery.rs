use std::sync::Arc;

use proptest::prelude::*;
use vmm_core::harness::{CatalogParams, CatalogProblem, ProblemCatalog};
use vmm_core::mesh::{build_interval_mesh, build_rect_mesh};
use vmm_core::mixed::{MixedSolveOptions, MixedSpace};
use vmm_core::nonlinearity::Branch;
use vmm_core::radial::{
    exact_radial_solution, radial_errors, solve_radial_hermite, HermiteOptions, RadialEval,
    RadialProblem,
};
use vmm_core::surgery::{
    surgical_solve, ExtensionRegistry, SurgeryConfig, SurgeryInput, SurgeryOutcome, SurgerySolver,
    SurgerySolverRegistry, TraceSample, TraceTarget,
};
use vmm_core::VmmError;

fn radial_input(eps: f64, n_el: usize, second_trace: Option<f64>) -> SurgeryInput {
    let problem = RadialProblem::exponential(2, eps).unwrap();
    let exact = exact_radial_solution(&problem, Branch::Convex).unwrap();
    SurgeryInput::Radial {
        problem,
        mesh: Arc::new(build_interval_mesh(1.0, n_el).unwrap()),
        opts: HermiteOptions {
            second_trace,
            ..Default::default()
        },
        exact: Some(exact),
    }
}

fn radial_solver(eps: f64, n_el: usize) -> Box<dyn SurgerySolver> {
    SurgerySolverRegistry::default()
        .build("radial", radial_input(eps, n_el, None))
        .unwrap()
}

fn config(iterations: usize) -> SurgeryConfig {
    SurgeryConfig {
        iterations,
        ..Default::default()
    }
}

#[test]
fn contract_violations_are_invalid_arguments() {
    let ext = ExtensionRegistry::default();
    let bad = |r: Result<_, VmmError>| matches!(r, Err(VmmError::InvalidArgument(_)));
    assert!(bad(surgical_solve(
        radial_solver(0.01, 50),
        &config(0),
        &ext
    )));
    let wide = SurgeryConfig {
        c_band: 200.0,
        ..config(1)
    };
    assert!(bad(surgical_solve(radial_solver(0.01, 50), &wide, &ext)));
    let negative = SurgeryConfig {
        c_band: -1.0,
        ..config(1)
    };
    assert!(bad(surgical_solve(
        radial_solver(0.01, 50),
        &negative,
        &ext
    )));
    let unknown = SurgeryConfig {
        extension: "spline".into(),
        ..config(1)
    };
    assert!(bad(surgical_solve(radial_solver(0.01, 50), &unknown, &ext)));
    assert!(bad(surgical_solve(
        radial_solver(-0.01, 50),
        &config(1),
        &ext
    )));
}

#[test]
fn registry_matches_inputs_to_solvers() {
    let reg = SurgerySolverRegistry::default();
    assert_eq!(reg.names(), vec!["mixed", "radial"]);
    assert!(reg.build("mixed", radial_input(0.01, 10, None)).is_err());
    assert!(reg
        .build("finite-volume", radial_input(0.01, 10, None))
        .is_err());
}

#[test]
fn first_pass_is_the_plain_solve() {
    let (_, trace) = surgical_solve(
        radial_solver(0.01, 100),
        &config(2),
        &ExtensionRegistry::default(),
    )
    .unwrap();
    assert_eq!(trace.len(), 3);
    assert_eq!(trace.boundary_values[0], vec![0.01]);
    let problem = RadialProblem::exponential(2, 0.01).unwrap();
    let mesh = Arc::new(build_interval_mesh(1.0, 100).unwrap());
    let plain = solve_radial_hermite(&problem, mesh.clone(), &HermiteOptions::default()).unwrap();
    let exact = exact_radial_solution(&problem, Branch::Convex).unwrap();
    let e = radial_errors(&plain.u, &exact, &mesh, 2);
    let first = trace.errors[0].unwrap();
    assert_eq!(first.l2.to_bits(), e.l2.to_bits());
    assert_eq!(first.h1.to_bits(), e.d1.to_bits());
    // the corrected trace is the Laplacian just inside the layer
    let d = 2.0 * 0.01;
    assert_eq!(trace.boundary_values[1], vec![plain.u.jet(1.0 - d).lap]);
}

#[test]
fn surgery_moves_the_trace_toward_the_exact_value() {
    let (outcome, trace) = surgical_solve(
        radial_solver(0.01, 100),
        &config(1),
        &ExtensionRegistry::default(),
    )
    .unwrap();
    let exact_lap = 3.0 * 0.5f64.exp();
    let c = trace.boundary_values[1][0];
    assert!(c > 0.01 && c < exact_lap, "{c}");
    let [e0, e1] = [trace.errors[0].unwrap(), trace.errors[1].unwrap()];
    assert!(e1.l2 < e0.l2 && e1.lap_linf < e0.lap_linf, "{e0:?} {e1:?}");
    assert!(matches!(outcome, SurgeryOutcome::Radial(_)));
    let csv = trace.to_csv();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("iteration,err_L2,err_H1,err_Lap_Linf,trace_min,trace_max\n"));
}

#[test]
fn compatible_trace_leaves_little_to_correct() {
    // second trace already at the exact Laplacian: no layer to remove
    let exact_lap = 3.0 * 0.5f64.exp();
    let solver = SurgerySolverRegistry::default()
        .build("radial", radial_input(1e-3, 400, Some(exact_lap)))
        .unwrap();
    let (_, trace) = surgical_solve(solver, &config(3), &ExtensionRegistry::default()).unwrap();
    let errs: Vec<f64> = trace.errors.iter().map(|e| e.unwrap().l2).collect();
    for w in errs.windows(2) {
        assert!((w[1] - w[0]).abs() <= 0.05 * w[0], "{errs:?}");
    }
}

#[test]
fn mixed_surgery_runs_on_a_square() {
    let catalog = ProblemCatalog::default();
    let CatalogProblem::Mixed {
        spec,
        x_range,
        y_range,
        ..
    } = catalog.build("ma-exp", &CatalogParams::default()).unwrap()
    else {
        panic!("ma-exp is mixed")
    };
    let mesh = Arc::new(build_rect_mesh(x_range, y_range, 8, 8).unwrap());
    let space = MixedSpace::new(mesh, 2).unwrap();
    let input = SurgeryInput::Mixed {
        spec,
        space,
        eps: 0.05,
        eps_start: 0.05,
        tau: 0.0,
        opts: MixedSolveOptions::default(),
    };
    let solver = SurgerySolverRegistry::default()
        .build("mixed", input)
        .unwrap();
    let n_targets = solver.targets().len();
    let (outcome, trace) =
        surgical_solve(solver, &config(2), &ExtensionRegistry::default()).unwrap();
    assert_eq!(trace.len(), 3);
    for values in &trace.boundary_values {
        assert_eq!(values.len(), n_targets);
        assert!(values.iter().all(|v| v.is_finite()));
    }
    assert!(trace.boundary_values[0].iter().all(|&v| v == 0.05));
    // the exact Hessian on the boundary lies in [1, 2 e]; the corrected
    // trace moves off eps toward it
    let mean1 = trace.boundary_values[1].iter().sum::<f64>() / n_targets as f64;
    assert!(mean1 > 0.5, "{mean1}");
    assert!(trace.errors.iter().all(|e| e.is_some()));
    assert!(matches!(outcome, SurgeryOutcome::Mixed { .. }));
}

fn samples_and_targets() -> impl Strategy<Value = (Vec<TraceSample>, Vec<TraceTarget>)> {
    let sample = (0usize..4, 0.0f64..1.0, -10.0f64..10.0)
        .prop_map(|(segment, t, value)| TraceSample { segment, t, value });
    let target = (0usize..4, -0.1f64..1.1).prop_map(|(segment, t)| TraceTarget { segment, t });
    (
        prop::collection::vec(sample, 1..30),
        prop::collection::vec(target, 1..30),
    )
}

proptest! {
    #[test]
    fn extensions_stay_within_the_sampled_range((samples, targets) in samples_and_targets()) {
        let lo = samples.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
        let reg = ExtensionRegistry::default();
        for name in reg.names() {
            let out = reg.get(name).unwrap().extend(&samples, &targets);
            prop_assert_eq!(out.len(), targets.len());
            for v in &out {
                prop_assert!(*v >= lo && *v <= hi, "{} gave {} outside [{}, {}]", name, v, lo, hi);
            }
            if name == "max-constant" {
                prop_assert!(out.iter().all(|&v| v == hi));
            }
        }
    }
}
