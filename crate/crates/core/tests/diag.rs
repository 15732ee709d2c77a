use blasso::measures::{SparseMeasure, Spike};
use blasso::operators::{certificate_sup, forward, Grid, GridSignal};
use blasso::patterns::Pattern;
use blasso::solver::{project_ball, SolverConfig};
use blasso::PortableRng;
use blasso_testkit::{dykstra_project, random_signal};

fn run_case(tag: &str, grid: &Grid<f64>, pattern: Pattern<f64>, v: &GridSignal<f64>, frac: f64) {
    let sup = certificate_sup(v, &pattern, 16, 1e-9).value;
    let tau = frac * sup;
    let mut cfg = SolverConfig::new(1.0, 1, grid.step());
    cfg.feas_tol = 1e-9;
    cfg.loc_tol = grid.step() * 1e-6;
    cfg.inner_tol = 1e-12;
    cfg.scan_refine = 16;
    let (u, _) = project_ball(v, &pattern, tau, &cfg).unwrap();
    let oracle = dykstra_project(v, &pattern, tau, 64, 1e-10, 300_000);
    let diff = u.sub(&oracle).norm();
    let sup_orac = certificate_sup(&oracle, &pattern, 64, 1e-10).value;
    println!("{tag}: diff {diff:.3e}  oracle-viol {:.3e}", sup_orac - tau);
}

#[test]
fn diag() {
    let grid = Grid::<f64>::new(-3.0, 0.125, 49).unwrap();
    // spike-train v with on-node spikes
    let mut rng = PortableRng::new(77);
    for (name, pat) in [
        ("tri", Pattern::triangle(0.5, 1.0)),
        ("ell", Pattern::half_ellipse(0.5, 1.2)),
        ("gau", Pattern::gaussian(0.375, 1.0, 1.5)),
        ("rc ", Pattern::raised_cosine(0.5, 0.8)),
    ] {
        // random v
        let v = random_signal(&grid, 4);
        run_case(&format!("{name} rand"), &grid, pat, &v, 0.35);
        // on-node spike image v
        let mut spikes = Vec::new();
        for pos_idx in [8usize, 22, 37] {
            let a = if rng.next_f64() < 0.5 { 1.0 } else { -0.8 };
            spikes.push(Spike::new(grid.node(pos_idx), a));
        }
        let nu = SparseMeasure::new(spikes).unwrap();
        let v2 = forward(&nu, &pat, &grid);
        run_case(&format!("{name} node"), &grid, pat, &v2, 0.5);
    }
}
