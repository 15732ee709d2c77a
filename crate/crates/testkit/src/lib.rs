//! Brute-force reference implementations used by the test suites.
//!
//! Everything here deliberately avoids the library's scan/exchange machinery:
//! the certificate ball is discretized densely and projected onto by Dykstra's
//! alternating method, so agreement with the production projection is a real
//! two-route check.

use blasso::measures::{SparseMeasure, Spike};
use blasso::operators::{Grid, GridSignal};
use blasso::patterns::Pattern;
use blasso::real::Real;
use blasso::PortableRng;

/// One slab `|<u, phi>| <= tau` of the densely discretized ball.
struct Slab<R> {
    lo: usize,
    phi: Vec<R>,
    norm_sq: R,
}

impl<R: Real> Slab<R> {
    fn pairing(&self, u: &[R]) -> R {
        u[self.lo..self.lo + self.phi.len()]
            .iter()
            .zip(&self.phi)
            .map(|(&a, &b)| a * b)
            .sum()
    }
}

/// Build slabs at every lattice point `start + m * step / refine` covering the
/// support-extended window.
fn build_slabs<R: Real>(grid: &Grid<R>, pattern: &Pattern<R>, refine: usize) -> Vec<Slab<R>> {
    let fine = grid.step() / R::cast(refine as f64);
    let radius = pattern.support_radius();
    let pad = (radius / fine).ceil().to_isize().unwrap_or(0).max(0);
    let m_hi = (grid.count() as isize - 1) * refine as isize + pad;
    let count = grid.count() as isize;
    let mut slabs = Vec::new();
    for m in -pad..=m_hi {
        let s = grid.start() + R::cast(m as f64) * fine;
        let lo = (((s - radius - grid.start()) / grid.step())
            .floor()
            .to_isize()
            .unwrap_or(0)
            - 1)
            .clamp(0, count - 1) as usize;
        let hi = (((s + radius - grid.start()) / grid.step())
            .ceil()
            .to_isize()
            .unwrap_or(count - 1)
            + 1)
            .clamp(0, count - 1) as usize;
        let phi: Vec<R> = (lo..=hi)
            .map(|k| pattern.eval(grid.node(k) - s))
            .collect();
        let norm_sq: R = phi.iter().map(|&p| p * p).sum();
        if norm_sq > R::zero() {
            slabs.push(Slab { lo, phi, norm_sq });
        }
    }
    slabs
}

/// Dykstra's alternating projection onto the intersection of the dense slab
/// family. Stops once the largest value change over a full sweep drops below
/// `tol`, or after `max_sweeps`.
pub fn dykstra_project<R: Real>(
    v: &GridSignal<R>,
    pattern: &Pattern<R>,
    tau: R,
    refine: usize,
    tol: R,
    max_sweeps: usize,
) -> GridSignal<R> {
    let grid = v.grid();
    let slabs = build_slabs(grid, pattern, refine);
    let mut u: Vec<R> = v.values().to_vec();
    let mut corrections: Vec<Option<Vec<R>>> = vec![None; slabs.len()];

    for _sweep in 0..max_sweeps {
        let mut max_change = R::zero();
        for (slab, correction) in slabs.iter().zip(corrections.iter_mut()) {
            if correction.is_none() {
                // No stored correction: the slab projection is the identity
                // whenever u is already inside, so the step is a no-op.
                if slab.pairing(&u).abs() <= tau {
                    continue;
                }
                *correction = Some(vec![R::zero(); slab.phi.len()]);
            }
            let p = correction.as_mut().expect("just ensured");
            // w = u + p; project w onto the slab; store p = w - proj.
            let c = slab.pairing(&u)
                + p.iter().zip(&slab.phi).map(|(&a, &b)| a * b).sum::<R>();
            let excess = if c > tau {
                c - tau
            } else if c < -tau {
                c + tau
            } else {
                R::zero()
            };
            let scale = excess / slab.norm_sq;
            let mut p_vanished = true;
            for (i, &phi) in slab.phi.iter().enumerate() {
                let w_i = u[slab.lo + i] + p[i];
                let proj_i = w_i - scale * phi;
                let change = proj_i - u[slab.lo + i];
                max_change = max_change.max(change.abs());
                p[i] = w_i - proj_i;
                u[slab.lo + i] = proj_i;
                p_vanished &= p[i] == R::zero();
            }
            if p_vanished {
                *correction = None;
            }
        }
        if max_change <= tol {
            break;
        }
    }
    GridSignal::from_values(*grid, u).expect("oracle output stays finite")
}

/// Deterministic pseudo-random signal on a grid, values in `[-1, 1)`.
pub fn random_signal<R: Real>(grid: &Grid<R>, seed: u64) -> GridSignal<R> {
    let mut rng = PortableRng::new(seed);
    let mut u = GridSignal::zeros(*grid);
    for v in u.values_mut() {
        *v = R::cast(rng.next_in_range(-1.0, 1.0));
    }
    u
}

/// Random spike train on grid nodes: `n_spikes` spikes at node indices at
/// least `min_sep_nodes` apart (and clear of the window edges by the pattern
/// support), amplitudes with magnitude in `[0.6, 1.6)` and random sign.
pub fn random_node_spikes<R: Real>(
    grid: &Grid<R>,
    pattern: &Pattern<R>,
    seed: u64,
    n_spikes: usize,
    min_sep_nodes: usize,
) -> SparseMeasure<R> {
    let mut rng = PortableRng::new(seed);
    let margin = (pattern.support_radius() / grid.step())
        .ceil()
        .to_usize()
        .unwrap_or(0)
        + 1;
    assert!(grid.count() > 2 * margin + 1, "window too small");
    let lo = margin;
    let hi = grid.count() - 1 - margin;
    let mut nodes: Vec<usize> = Vec::new();
    let mut guard = 0;
    while nodes.len() < n_spikes {
        let k = lo + (rng.next_u64() as usize) % (hi - lo + 1);
        if nodes.iter().all(|&n| n.abs_diff(k) >= min_sep_nodes) {
            nodes.push(k);
        }
        guard += 1;
        assert!(guard < 10_000, "could not place {n_spikes} spikes");
    }
    let spikes = nodes
        .into_iter()
        .map(|k| {
            let magnitude = rng.next_in_range(0.6, 1.6);
            let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
            Spike::new(grid.node(k), R::cast(sign * magnitude))
        })
        .collect();
    SparseMeasure::new(spikes).expect("nodes are finite")
}
