//! Two-route checks of the exchange projection against independent oracles:
//! a closed-form clip in the single-node regime and dense Dykstra projections
//! for overlapping columns.

use blasso::operators::{certificate_sup, forward, Grid};
use blasso::patterns::Pattern;
use blasso::solver::{project_ball, SolverConfig};
use blasso_testkit::{dykstra_project, random_node_spikes, random_signal};

fn tight_config(grid_step: f64) -> SolverConfig<f64> {
    let mut cfg = SolverConfig::new(1.0, 1, grid_step);
    cfg.feas_tol = 1e-9;
    cfg.loc_tol = grid_step * 1e-6;
    cfg.inner_tol = 1e-12;
    cfg.scan_refine = 16;
    cfg
}

#[test]
fn near_impulse_triangle_projection_clips_node_values() {
    // Support narrower than half the grid step: every certificate constraint
    // touches at most one node, so the exact projection clamps each node to
    // tau / y(0).
    let grid = Grid::<f64>::new(0.0, 0.25, 33).unwrap();
    let pattern = Pattern::triangle(0.1, 2.0);
    let v = random_signal(&grid, 11).scaled(1.5);
    let tau = 0.4;
    let cfg = tight_config(grid.step());

    let (u, _) = project_ball(&v, &pattern, tau, &cfg).unwrap();

    let bound = tau / pattern.eval(0.0);
    for (&uk, &vk) in u.values().iter().zip(v.values()) {
        let clipped = vk.clamp(-bound, bound);
        assert!(
            (uk - clipped).abs() <= 1e-9,
            "node value {uk} vs clip {clipped}"
        );
    }

    // The dense-grid Dykstra oracle agrees.
    let oracle = dykstra_project(&v, &pattern, tau, 64, 1e-10, 100_000);
    let diff = u.sub(&oracle).norm();
    assert!(diff <= 1e-5, "dykstra mismatch {diff}");
}

#[test]
fn triangle_projection_matches_dykstra_on_raw_noise() {
    // Piecewise-linear certificates attain maxima at lattice-pinned kinks, so
    // the dense-grid oracle sees the same constraint set even for raw noise.
    let grid = Grid::<f64>::new(-3.0, 0.125, 49).unwrap();
    let pattern = Pattern::triangle(0.5, 1.0);
    let v = random_signal(&grid, 3);
    let sup = certificate_sup(&v, &pattern, 16, 1e-9).value;
    let tau = 0.35 * sup;
    let (u, _) = project_ball(&v, &pattern, tau, &tight_config(grid.step())).unwrap();
    let oracle = dykstra_project(&v, &pattern, tau, 64, 1e-10, 200_000);
    let diff = u.sub(&oracle).norm();
    assert!(diff <= 1e-8, "|u - oracle| = {diff}");
}

#[test]
fn projection_matches_dykstra_for_overlapping_columns() {
    // Inputs in the range of the forward operator: certificate peaks then sit
    // exactly on grid nodes (local symmetry), which the 64x oracle lattice
    // resolves without discretization bias.
    let grid = Grid::<f64>::new(-3.0, 0.125, 49).unwrap();
    let cases: [(Pattern<f64>, u64, usize, usize); 4] = [
        (Pattern::triangle(0.5, 1.0), 3, 3, 10),
        (Pattern::half_ellipse(0.5, 1.2), 4, 3, 10),
        (Pattern::gaussian(0.25, 1.0, 1.0), 5, 2, 18),
        (Pattern::raised_cosine(0.5, 0.8), 6, 3, 10),
    ];
    for (pattern, seed, n_spikes, min_sep) in cases {
        let spikes = random_node_spikes(&grid, &pattern, seed, n_spikes, min_sep);
        let v = forward(&spikes, &pattern, &grid);
        let sup = certificate_sup(&v, &pattern, 16, 1e-9).value;
        let tau = 0.45 * sup;
        let cfg = tight_config(grid.step());

        let (u, _) = project_ball(&v, &pattern, tau, &cfg).unwrap();
        let oracle = dykstra_project(&v, &pattern, tau, 64, 1e-10, 200_000);

        let diff = u.sub(&oracle).norm();
        assert!(diff <= 1e-5, "{pattern:?}: |u - oracle| = {diff}");

        let residual_sup = certificate_sup(&u, &pattern, 16, 1e-9).value;
        assert!(
            residual_sup <= tau * (1.0 + 1e-8),
            "{pattern:?}: sup {residual_sup} vs tau {tau}"
        );
    }
}
