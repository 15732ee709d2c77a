//! Proximal-gradient source separation working entirely in signal space.
//!
//! Each step takes a gradient step on the mixture misfit and then, instead of
//! a measure-space prox, subtracts the Euclidean projection of the gradient
//! point onto `{u : ||A* u||_inf <= step * alpha}` (Moreau decomposition).
//! The semi-infinite projection is computed by an exchange method: locate
//! violated certificate peaks, project onto the finite halfspace set they
//! span, and repeat until the whole continuum constraint holds.

use crate::error::{Error, Result};
use crate::operators::{
    certificate_peaks, certificate_sup, mix, GridSignal, MultiChannelSignal,
};
use crate::patterns::Pattern;
use crate::real::Real;

/// Tuning knobs for [`solve`] and the projection it is built on.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig<R> {
    /// Regularization weight of the TV term.
    pub alpha: R,
    /// Gradient step; must satisfy `step <= 1 / n_channels`.
    pub step: R,
    pub max_outer_iters: usize,
    /// Fixed-point stop: `||x_next - x|| / step <= fp_tol * (1 + ||b||)`.
    pub fp_tol: R,
    /// Relative slack allowed on the sup-norm constraint.
    pub feas_tol: R,
    /// Certificate scans refine the signal grid by this factor.
    pub scan_refine: usize,
    /// Width to which peak locations are polished; also the constraint merge
    /// radius.
    pub loc_tol: R,
    /// Maximum exchange rounds per projection.
    pub inner_max_iters: usize,
    /// Stop for the multiplier ascent on the finite subproblem.
    pub inner_tol: R,
    /// FISTA momentum with restart on mixture-residual increase.
    pub acceleration: bool,
}

impl<R: Real> SolverConfig<R> {
    /// Defaults for a problem with `n_channels` patterns on a grid of step
    /// `grid_step`: `step = 1/n`, `loc_tol = 1e-4 * grid_step`.
    pub fn new(alpha: R, n_channels: usize, grid_step: R) -> Self {
        SolverConfig {
            alpha,
            step: R::one() / R::cast(n_channels as f64),
            max_outer_iters: 5000,
            fp_tol: R::cast(1e-6),
            feas_tol: R::cast(1e-6),
            scan_refine: 8,
            loc_tol: grid_step * R::cast(1e-4),
            inner_max_iters: 200,
            inner_tol: R::cast(1e-10),
            acceleration: true,
        }
    }

    pub fn validate(&self, n_channels: usize) -> Result<()> {
        if self.alpha <= R::zero() {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if self.step <= R::zero() {
            return Err(Error::InvalidConfig("step must be positive".into()));
        }
        let bound = R::one() / R::cast(n_channels as f64);
        if self.step > bound * (R::one() + R::cast(1e-12)) {
            return Err(Error::InvalidConfig(format!(
                "step {} exceeds the descent bound 1/n = {}",
                self.step, bound
            )));
        }
        if self.scan_refine < 2 {
            return Err(Error::InvalidConfig("scan_refine must be at least 2".into()));
        }
        if self.loc_tol <= R::zero()
            || self.fp_tol <= R::zero()
            || self.feas_tol <= R::zero()
            || self.inner_tol <= R::zero()
        {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One halfspace `sign * (A* u)(location) <= tau` of the exchange set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActiveConstraint<R> {
    pub channel: usize,
    pub location: R,
    /// `+1` or `-1`.
    pub sign: R,
    /// KKT multiplier, nonnegative.
    pub multiplier: R,
}

/// Per-iteration solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterateRow<R> {
    pub iter: usize,
    /// `||x_next - x|| / step`.
    pub fp_residual: R,
    /// `(max_i sup|A_i* u_i| - tau) / step`: constraint violation of the dual
    /// prox output, measured against `alpha` after dividing by the step.
    pub feas_violation: R,
    /// `||C x - b||`.
    pub mix_residual: R,
    /// Total active-set size across channels.
    pub active_total: usize,
}

#[derive(Debug, Clone)]
pub struct IterateLog<R> {
    pub rows: Vec<IterateRow<R>>,
}

impl<R> Default for IterateLog<R> {
    fn default() -> Self {
        IterateLog { rows: Vec::new() }
    }
}

/// Outcome of [`solve`]. `converged == false` means the iteration cap was hit
/// and `x` is the best (final) iterate.
#[derive(Debug, Clone)]
pub struct SolveResult<R> {
    pub x: MultiChannelSignal<R>,
    /// `b - Cx`, the dual-variable estimate.
    pub residual: GridSignal<R>,
    pub log: IterateLog<R>,
    pub converged: bool,
    pub iterations: usize,
}

/// Internal representation of one exchange constraint with its sampled
/// column `phi[k] = y(node_{lo+k} - location)`.
struct ExchangeConstraint<R> {
    location: R,
    sign: R,
    multiplier: R,
    lo: usize,
    phi: Vec<R>,
    norm_sq: R,
}

impl<R: Real> ExchangeConstraint<R> {
    fn build(grid_signal: &GridSignal<R>, pattern: &Pattern<R>, location: R, sign: R, multiplier: R) -> Self {
        let grid = grid_signal.grid();
        let radius = pattern.support_radius();
        let count = grid.count() as isize;
        let lo = (((location - radius - grid.start()) / grid.step())
            .floor()
            .to_isize()
            .unwrap_or(0)
            - 1)
            .clamp(0, count - 1) as usize;
        let hi = (((location + radius - grid.start()) / grid.step())
            .ceil()
            .to_isize()
            .unwrap_or(count - 1)
            + 1)
            .clamp(0, count - 1) as usize;
        let phi: Vec<R> = (lo..=hi)
            .map(|k| pattern.eval(grid.node(k) - location))
            .collect();
        let norm_sq = phi.iter().map(|&p| p * p).sum();
        ExchangeConstraint {
            location,
            sign,
            multiplier,
            lo,
            phi,
            norm_sq,
        }
    }

    fn pairing(&self, u: &GridSignal<R>) -> R {
        let vals = &u.values()[self.lo..self.lo + self.phi.len()];
        vals.iter()
            .zip(&self.phi)
            .map(|(&a, &b)| a * b)
            .sum::<R>()
            * self.sign
    }

    /// `u -= delta * sign * phi`
    fn push(&self, u: &mut GridSignal<R>, delta: R) {
        let vals = &mut u.values_mut()[self.lo..self.lo + self.phi.len()];
        for (v, &p) in vals.iter_mut().zip(&self.phi) {
            *v = *v - delta * self.sign * p;
        }
    }
}

/// One cyclic pass of projected coordinate ascent on the multipliers of
/// `min 0.5 ||u - v||^2  s.t.  sign_j <u, phi_j> <= tau`.
/// `u` must equal `v - sum_j mu_j sign_j phi_j` on entry. Constraints whose
/// multiplier stays at zero through the pass are dropped. Returns the largest
/// multiplier update.
fn ascent_pass<R: Real>(
    u: &mut GridSignal<R>,
    constraints: &mut Vec<ExchangeConstraint<R>>,
    tau: R,
) -> R {
    let mut max_delta = R::zero();
    let mut stayed_zero = vec![false; constraints.len()];
    for (j, con) in constraints.iter_mut().enumerate() {
        let was_zero = con.multiplier == R::zero();
        let excess = con.pairing(u) - tau;
        let candidate = con.multiplier + excess / con.norm_sq;
        let new_mu = candidate.max(R::zero());
        let delta = new_mu - con.multiplier;
        if delta != R::zero() {
            con.push(u, delta);
            con.multiplier = new_mu;
        }
        max_delta = max_delta.max(delta.abs());
        stayed_zero[j] = was_zero && new_mu == R::zero();
    }
    if stayed_zero.iter().any(|&z| z) {
        let mut keep = stayed_zero.iter().map(|&z| !z);
        constraints.retain(|_| keep.next().unwrap());
    }
    max_delta
}

/// In-place Cholesky solve of the (ridged) symmetric positive system
/// `G x = rhs`. Returns false if a pivot collapses.
fn cholesky_solve<R: Real>(g: &[Vec<R>], rhs: &[R], out: &mut Vec<R>) -> bool {
    let m = rhs.len();
    let mut l = vec![vec![R::zero(); m]; m];
    for i in 0..m {
        for j in 0..=i {
            let mut sum = g[i][j];
            for k in 0..j {
                sum = sum - l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= R::zero() {
                    return false;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![R::zero(); m];
    for i in 0..m {
        let mut sum = rhs[i];
        for k in 0..i {
            sum = sum - l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    out.clear();
    out.resize(m, R::zero());
    for i in (0..m).rev() {
        let mut sum = y[i];
        for k in i + 1..m {
            sum = sum - l[k][i] * out[k];
        }
        out[i] = sum / l[i][i];
    }
    true
}

/// Exact solve of the projection restricted to the currently-positive
/// multipliers: non-negative least squares on the active Gram system with a
/// tiny ridge, clipping negative multipliers until all stay nonnegative.
/// Multiplier ascent alone crawls when exchange rounds cluster near-parallel
/// columns around one curved certificate peak; this finisher removes that
/// stall. Returns true if it changed anything.
fn direct_polish<R: Real>(
    u: &mut GridSignal<R>,
    v: &GridSignal<R>,
    constraints: &mut [ExchangeConstraint<R>],
    tau: R,
) -> bool {
    let mut active: Vec<usize> = (0..constraints.len())
        .filter(|&j| constraints[j].multiplier > R::zero())
        .collect();
    if active.is_empty() {
        return false;
    }
    let mut changed = false;
    for _round in 0..constraints.len() + 1 {
        let m = active.len();
        if m == 0 {
            break;
        }
        let mut g = vec![vec![R::zero(); m]; m];
        let mut rhs = vec![R::zero(); m];
        for (a, &ja) in active.iter().enumerate() {
            let ca = &constraints[ja];
            rhs[a] = ca.sign * overlap_with_signal(ca, v) - tau;
            for (b, &jb) in active.iter().enumerate().take(a + 1) {
                let cb = &constraints[jb];
                let val = ca.sign * cb.sign * column_overlap(ca, cb);
                g[a][b] = val;
                g[b][a] = val;
            }
        }
        let ridge = g
            .iter()
            .enumerate()
            .map(|(i, row)| row[i])
            .fold(R::zero(), |acc, d| acc.max(d))
            * R::cast(1e-14);
        for i in 0..m {
            g[i][i] = g[i][i] + ridge;
        }
        let mut mu = Vec::new();
        if !cholesky_solve(&g, &rhs, &mut mu) {
            return changed;
        }
        if let Some(worst) = (0..m).filter(|&i| mu[i] < R::zero()).min_by(|&a, &b| {
            mu[a].partial_cmp(&mu[b]).expect("finite multipliers")
        }) {
            constraints[active[worst]].multiplier = R::zero();
            active.remove(worst);
            changed = true;
            continue;
        }
        for (a, &j) in active.iter().enumerate() {
            constraints[j].multiplier = mu[a];
        }
        changed = true;
        break;
    }
    reconstruct(u, v, constraints);
    changed
}

fn overlap_with_signal<R: Real>(con: &ExchangeConstraint<R>, s: &GridSignal<R>) -> R {
    s.values()[con.lo..con.lo + con.phi.len()]
        .iter()
        .zip(&con.phi)
        .map(|(&a, &b)| a * b)
        .sum()
}

fn column_overlap<R: Real>(a: &ExchangeConstraint<R>, b: &ExchangeConstraint<R>) -> R {
    let lo = a.lo.max(b.lo);
    let hi = (a.lo + a.phi.len()).min(b.lo + b.phi.len());
    if lo >= hi {
        return R::zero();
    }
    (lo..hi)
        .map(|k| a.phi[k - a.lo] * b.phi[k - b.lo])
        .sum()
}

const CD_PASSES_PER_POLISH: usize = 64;
const MAX_POLISH_ROUNDS: usize = 64;

/// Solve the finite projection subproblem: coordinate-ascent sweeps drive the
/// working set, a direct active-set solve finishes each stretch.
fn solve_finite_projection<R: Real>(
    u: &mut GridSignal<R>,
    v: &GridSignal<R>,
    constraints: &mut Vec<ExchangeConstraint<R>>,
    tau: R,
    inner_tol: R,
) {
    for _ in 0..MAX_POLISH_ROUNDS {
        for _ in 0..CD_PASSES_PER_POLISH {
            if ascent_pass(u, constraints, tau) <= inner_tol {
                break;
            }
        }
        if constraints.is_empty() {
            return;
        }
        direct_polish(u, v, constraints, tau);
        // Stationarity check: one more pass must produce no real movement.
        if ascent_pass(u, constraints, tau) <= inner_tol {
            return;
        }
    }
}

pub(crate) struct ProjectionOutcome<R> {
    pub u: GridSignal<R>,
    pub active: Vec<ActiveConstraint<R>>,
    /// `sup |A* u|` from the final verification scan.
    pub cert_sup: R,
}

/// Project `v` onto `{u : |(A* u)(s)| <= tau for all s}` by exchange,
/// optionally warm-started from a previous active set.
pub(crate) fn project_ball_warm<R: Real>(
    v: &GridSignal<R>,
    pattern: &Pattern<R>,
    tau: R,
    cfg: &SolverConfig<R>,
    warm: &[ActiveConstraint<R>],
) -> Result<ProjectionOutcome<R>> {
    assert!(tau > R::zero(), "projection radius must be positive");
    let mut u = v.clone();
    let mut constraints: Vec<ExchangeConstraint<R>> = warm
        .iter()
        .map(|c| ExchangeConstraint::build(v, pattern, c.location, c.sign, c.multiplier))
        .filter(|c| c.norm_sq > R::zero())
        .collect();
    for con in &constraints {
        con.push(&mut u, con.multiplier);
    }
    if !constraints.is_empty() {
        solve_finite_projection(&mut u, v, &mut constraints, tau, cfg.inner_tol);
    }

    let trace = std::env::var_os("BLASSO_TRACE_EXCHANGE").is_some();
    let slack = tau * (R::one() + cfg.feas_tol);
    for round in 0..=cfg.inner_max_iters {
        let peaks = certificate_peaks(&u, pattern, cfg.scan_refine, cfg.loc_tol);
        let worst = peaks
            .iter()
            .map(|p| p.value.abs())
            .fold(R::zero(), |a, b| a.max(b));
        if trace {
            let wloc = peaks
                .iter()
                .max_by(|a, b| a.value.abs().partial_cmp(&b.value.abs()).unwrap())
                .map(|p| p.location.to_f64().unwrap_or(f64::NAN))
                .unwrap_or(f64::NAN);
            eprintln!(
                "round {round}: m={} worst={:e} at {wloc}",
                constraints.len(),
                (worst - tau).to_f64().unwrap_or(f64::NAN)
            );
        }
        if worst <= slack {
            reconstruct(&mut u, v, &constraints);
            let active = constraints
                .iter()
                .filter(|c| c.multiplier > R::zero())
                .map(|c| ActiveConstraint {
                    channel: 0,
                    location: c.location,
                    sign: c.sign,
                    multiplier: c.multiplier,
                })
                .collect();
            return Ok(ProjectionOutcome {
                u,
                active,
                cert_sup: worst,
            });
        }
        if round == cfg.inner_max_iters {
            return Err(Error::ExchangeDivergence {
                rounds: round,
                violation: (worst - tau).to_f64().unwrap_or(f64::NAN),
            });
        }
        // Deduplication radius for re-detected peaks. A radius as wide as
        // loc_tol can two-cycle: with one constraint on either side of a flat
        // top, the replacement rule flips between two locations that each
        // leave an above-slack bump at the other. Near-duplicate columns are
        // harmless to the finite solve, so only near-exact repeats merge.
        let merge_radius = cfg.loc_tol * R::cast(1e-3);
        for peak in peaks.iter().filter(|p| p.value.abs() > tau) {
            let sign = if peak.value >= R::zero() {
                R::one()
            } else {
                -R::one()
            };
            match constraints
                .iter_mut()
                .find(|c| (c.location - peak.location).abs() < merge_radius)
            {
                Some(existing) => {
                    // Same location up to the merge radius: keep whichever
                    // placement is currently more violated.
                    let existing_violation =
                        adjoint_abs(&u, pattern, existing.location);
                    if peak.value.abs() > existing_violation {
                        let mu = existing.multiplier;
                        *existing =
                            ExchangeConstraint::build(v, pattern, peak.location, sign, mu);
                    }
                }
                None => constraints.push(ExchangeConstraint::build(
                    v,
                    pattern,
                    peak.location,
                    sign,
                    R::zero(),
                )),
            }
        }
        // Multipliers may have been rebuilt against new locations; restore the
        // invariant u = v - sum mu sign phi before ascending again.
        reconstruct(&mut u, v, &constraints);
        solve_finite_projection(&mut u, v, &mut constraints, tau, cfg.inner_tol);
    }
    unreachable!("exchange loop returns or errors within the round budget")
}

fn adjoint_abs<R: Real>(u: &GridSignal<R>, pattern: &Pattern<R>, s: R) -> R {
    crate::operators::adjoint_eval(u, pattern, s).abs()
}

/// Recompute `u = v - sum_j mu_j sign_j phi_j` from scratch.
fn reconstruct<R: Real>(
    u: &mut GridSignal<R>,
    v: &GridSignal<R>,
    constraints: &[ExchangeConstraint<R>],
) {
    u.values_mut().copy_from_slice(v.values());
    for con in constraints {
        con.push(u, con.multiplier);
    }
}

/// Euclidean projection of `v` onto the sup-norm certificate ball of radius
/// `tau`. Returns the projection and the supporting active set.
pub fn project_ball<R: Real>(
    v: &GridSignal<R>,
    pattern: &Pattern<R>,
    tau: R,
    cfg: &SolverConfig<R>,
) -> Result<(GridSignal<R>, Vec<ActiveConstraint<R>>)> {
    let outcome = project_ball_warm(v, pattern, tau, cfg, &[])?;
    Ok((outcome.u, outcome.active))
}

/// One proximal-gradient step from `x`: gradient step on `0.5||Cx - b||^2`,
/// then the Moreau-decomposed prox via per-channel projection.
pub fn prox_step<R: Real>(
    x: &MultiChannelSignal<R>,
    b: &GridSignal<R>,
    patterns: &[Pattern<R>],
    cfg: &SolverConfig<R>,
) -> Result<MultiChannelSignal<R>> {
    cfg.validate(patterns.len())?;
    if x.grid() != b.grid() {
        return Err(Error::GridMismatch("prox step needs x, b on one grid"));
    }
    let tau = cfg.step * cfg.alpha;
    let g = mix(x).sub(b);
    let mut channels = Vec::with_capacity(x.n_channels());
    for (xi, pattern) in x.channels().iter().zip(patterns) {
        let mut v = xi.clone();
        v.add_scaled(-cfg.step, &g);
        let (u, _) = project_ball(&v, pattern, tau, cfg)?;
        channels.push(v.sub(&u));
    }
    MultiChannelSignal::new(channels)
}

/// Run the full iteration from `x = 0` until the fixed-point residual is
/// small and the residual certificate is near-feasible, or the iteration cap
/// is reached (`converged = false`).
pub fn solve<R: Real>(
    b: &GridSignal<R>,
    patterns: &[Pattern<R>],
    cfg: &SolverConfig<R>,
) -> Result<SolveResult<R>> {
    let n = patterns.len();
    cfg.validate(n)?;
    for (i, pattern) in patterns.iter().enumerate() {
        if !pattern.check_wiener(R::one(), R::cast(1e-9)) {
            return Err(Error::InvalidConfig(format!(
                "pattern {i} fails the decay check"
            )));
        }
    }
    let grid = *b.grid();
    let b_norm = b.norm();
    let tau = cfg.step * cfg.alpha;
    let fp_stop = cfg.fp_tol * (R::one() + b_norm);
    // The residual certificate must end up within 10x the projection slack.
    let residual_slack = cfg.alpha * cfg.feas_tol * R::cast(10.0);

    let mut x = MultiChannelSignal::zeros(grid, n);
    let mut z = x.clone();
    let mut warm: Vec<Vec<ActiveConstraint<R>>> = vec![Vec::new(); n];
    let mut momentum = R::one();
    let mut prev_mix_residual = R::infinity();
    let mut log = IterateLog::default();

    for iter in 1..=cfg.max_outer_iters {
        let g = mix(&z).sub(b);
        let mut channels = Vec::with_capacity(n);
        let mut active_total = 0;
        let mut worst_sup = R::zero();
        for i in 0..n {
            let mut v = z.channel(i).clone();
            v.add_scaled(-cfg.step, &g);
            let outcome = project_ball_warm(&v, &patterns[i], tau, cfg, &warm[i])?;
            channels.push(v.sub(&outcome.u));
            worst_sup = worst_sup.max(outcome.cert_sup);
            active_total += outcome.active.len();
            warm[i] = outcome.active;
            for c in &mut warm[i] {
                c.channel = i;
            }
        }
        let x_next = MultiChannelSignal::new(channels)?;
        let fp_residual = x_next.sub(&x).norm() / cfg.step;
        let mix_residual = mix(&x_next).sub(b).norm();
        log.rows.push(IterateRow {
            iter,
            fp_residual,
            feas_violation: (worst_sup - tau) / cfg.step,
            mix_residual,
            active_total,
        });

        if fp_residual <= fp_stop {
            let residual = b.sub(&mix(&x_next));
            let cert_violation = patterns
                .iter()
                .map(|y| certificate_sup(&residual, y, cfg.scan_refine, cfg.loc_tol).value)
                .fold(R::zero(), |a, s| a.max(s))
                - cfg.alpha;
            if cert_violation <= residual_slack {
                return Ok(SolveResult {
                    x: x_next,
                    residual,
                    log,
                    converged: true,
                    iterations: iter,
                });
            }
        }

        if cfg.acceleration {
            if mix_residual > prev_mix_residual {
                momentum = R::one();
            }
            let next_momentum =
                (R::one() + (R::one() + R::cast(4.0) * momentum * momentum).sqrt()) * R::half();
            let beta = (momentum - R::one()) / next_momentum;
            let mut z_channels = Vec::with_capacity(n);
            for i in 0..n {
                let mut zi = x_next.channel(i).clone();
                zi.add_scaled(beta, &x_next.channel(i).sub(x.channel(i)));
                z_channels.push(zi);
            }
            z = MultiChannelSignal::new(z_channels)?;
            momentum = next_momentum;
        } else {
            z = x_next.clone();
        }
        prev_mix_residual = mix_residual;
        x = x_next;
    }

    let residual = b.sub(&mix(&x));
    Ok(SolveResult {
        iterations: log.rows.len(),
        x,
        residual,
        log,
        converged: false,
    })
}
