use std::sync::Arc;

use vmm_core::fem::{FieldFunction, Space1D};
use vmm_core::mesh::build_interval_mesh;
use vmm_core::nonlinearity::Branch;
use vmm_core::radial::{
    exact_radial_solution, node_values, radial_errors, recover_u, solve_radial_hermite,
    solve_reduced_w, HermiteOptions, RadialEval, RadialProblem, ReducedOptions,
};

fn p2_field(n_el: usize, f: impl Fn(f64) -> f64) -> FieldFunction {
    let mesh = Arc::new(build_interval_mesh(1.0, n_el).unwrap());
    let space = Arc::new(Space1D::lagrange(mesh, 2, 6).unwrap());
    FieldFunction::interpolate_lagrange(space, |p| f(p[0]))
}

#[test]
fn recovering_u_from_w() {
    let p = RadialProblem::new(2, 1.0, Arc::new(|_| 0.0), 1.5, 0.1).unwrap();
    let u = recover_u(&p, p2_field(8, |_| 0.0));
    for r in [0.0, 0.3, 1.0] {
        assert_eq!(u.value(r), 1.5);
    }
    // w = r^2 gives u_r = r, so u = gR - (1 - r^2) / 2
    let u = recover_u(&p, p2_field(8, |r| r * r));
    for r in [0.0, 0.25, 0.6, 1.0] {
        assert!(
            (u.value(r) - (1.5 - 0.5 * (1.0 - r * r))).abs() < 1e-13,
            "{r}"
        );
        if r > 0.0 {
            assert!((u.jet(r).u_r - r).abs() < 1e-13);
        }
    }
    assert_eq!(u.jet(0.0).u_r, 0.0);
}

#[test]
fn zero_source_keeps_the_boundary_value() {
    let p = RadialProblem::new(2, 1.0, Arc::new(|_| 0.0), 0.75, 0.05).unwrap();
    let mesh = Arc::new(build_interval_mesh(1.0, 40).unwrap());
    let st = solve_reduced_w(&p, mesh.clone(), &ReducedOptions::default()).unwrap();
    let scale = 0.05 * 0.05;
    // w only carries the boundary flux eps^2 R, so u stays within O(eps^2) of gR
    for r in [0.0, 0.5, 1.0] {
        assert!((st.u.value(r) - 0.75).abs() < 10.0 * scale);
    }
    assert_eq!(st.u.value(1.0), 0.75);
    assert!(st.report.converged);
}

#[test]
fn reduced_and_fourth_order_solvers_agree() {
    let p = RadialProblem::exponential(2, 1e-2).unwrap();
    let mesh = Arc::new(build_interval_mesh(1.0, 400).unwrap());
    let w = solve_reduced_w(&p, mesh.clone(), &ReducedOptions::default()).unwrap();
    let h = solve_radial_hermite(&p, mesh.clone(), &HermiteOptions::default()).unwrap();
    let diff = radial_errors(&w.u, &h.u, &mesh, 2);
    assert!(diff.l2 < 1e-6, "{diff:?}");
    let exact = exact_radial_solution(&p, Branch::Convex).unwrap();
    let e = radial_errors(&h.u, &exact, &mesh, 2);
    // the regularized solution sits O(eps) away from the limit
    assert!(e.l2 < 0.05 && e.l2 > 1e-4, "{e:?}");
    assert!(w.picard_history.len() > 1);
}

#[test]
fn quadratic_profile_is_recovered() {
    let p = RadialProblem::new(2, 1.0, Arc::new(|_| 4.0), 1.0, 1e-3).unwrap();
    let exact = exact_radial_solution(&p, Branch::Convex).unwrap();
    for r in [0.1, 0.5, 0.9] {
        assert!((exact.jet(r).u - r * r).abs() < 1e-13);
    }
    let mesh = Arc::new(build_interval_mesh(1.0, 200).unwrap());
    let st = solve_radial_hermite(&p, mesh.clone(), &HermiteOptions::default()).unwrap();
    let e = radial_errors(&st.u, &exact, &mesh, 2);
    assert!(e.l2 < 5e-3, "{e:?}");
    // with the exact second trace the regularization leaves r^2 untouched
    let opts = HermiteOptions {
        second_trace: Some(4.0),
        ..Default::default()
    };
    let st = solve_radial_hermite(&p, mesh.clone(), &opts).unwrap();
    assert!(radial_errors(&st.u, &exact, &mesh, 2).linf < 1e-9);
}

#[test]
fn concave_branch_is_the_negated_convex_solve() {
    let p = RadialProblem::exponential(2, 1e-2).unwrap();
    let q = p.with_eps(-1e-2).unwrap().with_g_r(-p.g_r).unwrap();
    let mesh = Arc::new(build_interval_mesh(1.0, 200).unwrap());
    let opts = HermiteOptions::default();
    let a = node_values(
        &solve_radial_hermite(&p, mesh.clone(), &opts).unwrap().u,
        &mesh,
    );
    let b = node_values(
        &solve_radial_hermite(&q, mesh.clone(), &opts).unwrap().u,
        &mesh,
    );
    let gap = a
        .iter()
        .zip(&b)
        .fold(0.0f64, |m, (x, y)| m.max((x + y).abs()));
    assert!(gap <= 1e-8, "{gap}");
}

#[test]
fn four_dimensional_laplacian_stays_positive() {
    let p = RadialProblem::exponential(4, 0.1).unwrap();
    let mesh = Arc::new(build_interval_mesh(1.0, 200).unwrap());
    let st = solve_radial_hermite(&p, mesh.clone(), &HermiteOptions::default()).unwrap();
    assert!(st.diagnostics.min_laplacian > 0.0, "{:?}", st.diagnostics);
    let exact = exact_radial_solution(&p, Branch::Convex).unwrap();
    for r in [0.2, 0.5, 0.8] {
        assert!((exact.jet(r).u - (0.5 * r * r).exp()).abs() < 1e-10);
    }
    assert!(radial_errors(&st.u, &exact, &mesh, 4).l2 < 0.1);
}

#[test]
fn nonconvex_band_shrinks_like_sqrt_eps() {
    let mesh = Arc::new(build_interval_mesh(1.0, 2000).unwrap());
    let mut bands = Vec::new();
    for eps in [1e-1, 1e-2, 1e-3] {
        let p = RadialProblem::exponential(2, eps).unwrap();
        let st = solve_radial_hermite(&p, mesh.clone(), &HermiteOptions::default()).unwrap();
        assert!(st.diagnostics.min_laplacian > 0.0);
        bands.push(st.diagnostics.band_width);
    }
    assert!(
        bands[0] <= 10.0 * 1e-1 && bands[1] <= 10.0 * 1e-2,
        "{bands:?}"
    );
    let ratio = bands[2] / bands[1];
    assert!((ratio / 0.1f64.sqrt() - 1.0).abs() < 0.2, "{bands:?}");
    // the exact profile itself has no nonconvex band
    let p = RadialProblem::exponential(2, 1e-2).unwrap();
    let exact = exact_radial_solution(&p, Branch::Convex).unwrap();
    let rep = vmm_core::radial::convexity_report(&exact, &mesh, 2);
    assert_eq!(rep.band_width, 0.0);
}

#[test]
fn reduced_solver_needs_positive_eps() {
    let p = RadialProblem::exponential(2, -1e-2).unwrap();
    let mesh = Arc::new(build_interval_mesh(1.0, 10).unwrap());
    assert!(solve_reduced_w(&p, mesh, &ReducedOptions::default()).is_err());
    assert!(RadialProblem::exponential(2, 0.0).is_err());
}
