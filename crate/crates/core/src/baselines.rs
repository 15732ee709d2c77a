//! Independent reference solvers: a grid-restricted FISTA for the node
//! dictionary, and a Frank-Wolfe spike solver that also supplies total
//! variation witnesses for duality-gap certification.

use crate::error::{Error, Result};
use crate::measures::{SparseMeasure, Spike};
use crate::operators::{
    adjoint_eval, certificate_sup, golden_max, mix, Grid, GridSignal, MultiChannelSignal,
};
use crate::patterns::Pattern;
use crate::real::Real;
use crate::rng::PortableRng;

/// Soft-threshold: `sign(z) * max(0, |z| - t)`.
pub fn soft_threshold<R: Real>(z: R, t: R) -> R {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        R::zero()
    }
}

/// Grid-restricted LASSO: one dictionary column per (channel, node), the
/// column being the pattern sampled at node offsets.
#[derive(Debug, Clone)]
pub struct GridLassoProblem<R> {
    grid: Grid<R>,
    patterns: Vec<Pattern<R>>,
    b: GridSignal<R>,
    alpha: R,
}

impl<R: Real> GridLassoProblem<R> {
    pub fn new(b: GridSignal<R>, patterns: Vec<Pattern<R>>, alpha: R) -> Result<Self> {
        if alpha <= R::zero() {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if patterns.is_empty() {
            return Err(Error::InvalidConfig("need at least one pattern".into()));
        }
        Ok(GridLassoProblem {
            grid: *b.grid(),
            patterns,
            b,
            alpha,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.patterns.len()
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn data(&self) -> &GridSignal<R> {
        &self.b
    }

    pub fn alpha(&self) -> R {
        self.alpha
    }

    /// Dictionary column for (channel, node): the forward image of a unit
    /// spike at that node.
    pub fn column(&self, channel: usize, node: usize) -> GridSignal<R> {
        let spike = SparseMeasure::new(vec![Spike::new(self.grid.node(node), R::one())])
            .expect("grid nodes are finite");
        crate::operators::forward(&spike, &self.patterns[channel], &self.grid)
    }

    /// `D v`: superpose every channel's node-spike convolution into one
    /// mixture signal.
    pub fn apply(&self, amplitudes: &[Vec<R>]) -> GridSignal<R> {
        let mut out = GridSignal::zeros(self.grid);
        for (pattern, channel_amps) in self.patterns.iter().zip(amplitudes) {
            let radius = pattern.support_radius();
            let width = (radius / self.grid.step()).ceil().to_isize().unwrap_or(0) + 1;
            for (j, &a) in channel_amps.iter().enumerate() {
                if a == R::zero() {
                    continue;
                }
                let lo = (j as isize - width).max(0) as usize;
                let hi = (j as isize + width).min(self.grid.count() as isize - 1) as usize;
                let center = self.grid.node(j);
                for k in lo..=hi {
                    out.values_mut()[k] =
                        out.values()[k] + a * pattern.eval(self.grid.node(k) - center);
                }
            }
        }
        out
    }

    /// `D^T r`: per channel, the certificate sampled at the grid nodes.
    pub fn apply_adjoint(&self, r: &GridSignal<R>) -> Vec<Vec<R>> {
        self.patterns
            .iter()
            .map(|pattern| {
                (0..self.grid.count())
                    .map(|j| adjoint_eval(r, pattern, self.grid.node(j)))
                    .collect()
            })
            .collect()
    }

    /// Power-iteration estimate of the Lipschitz constant of the gradient
    /// (the largest eigenvalue of `D^T D`), with a one-percent safety factor.
    pub fn lipschitz_estimate(&self) -> R {
        let n = self.n_channels();
        let m = self.grid.count();
        let mut rng = PortableRng::new(1);
        let mut v: Vec<Vec<R>> = (0..n)
            .map(|_| (0..m).map(|_| R::cast(rng.next_f64() - 0.5)).collect())
            .collect();
        let mut estimate = R::one();
        for _ in 0..200 {
            let image = self.apply(&v);
            let w = self.apply_adjoint(&image);
            let num: R = v
                .iter()
                .zip(&w)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x * y).sum::<R>())
                .sum();
            let den: R = v.iter().map(|a| a.iter().map(|&x| x * x).sum::<R>()).sum();
            let next = num / den;
            let w_norm = w
                .iter()
                .map(|a| a.iter().map(|&x| x * x).sum::<R>())
                .sum::<R>()
                .sqrt();
            if w_norm == R::zero() {
                break;
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                for (a, &b) in vi.iter_mut().zip(wi) {
                    *a = b / w_norm;
                }
            }
            if (next - estimate).abs() <= R::cast(1e-9) * next.abs().max(R::one()) {
                estimate = next;
                break;
            }
            estimate = next;
        }
        estimate * R::cast(1.01)
    }
}

/// Result of [`grid_fista`].
#[derive(Debug, Clone)]
pub struct GridLassoSolution<R> {
    /// One amplitude per (channel, node).
    pub amplitudes: Vec<Vec<R>>,
    pub iterations: usize,
    pub converged: bool,
}

impl<R: Real> GridLassoSolution<R> {
    /// The fitted mixture `D v`.
    pub fn fitted(&self, problem: &GridLassoProblem<R>) -> GridSignal<R> {
        problem.apply(&self.amplitudes)
    }

    /// Per-channel fitted signals `A_i v_i`.
    pub fn channel_signals(&self, problem: &GridLassoProblem<R>) -> MultiChannelSignal<R> {
        let channels = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, amps)| {
                let one = vec![amps.clone()];
                let sub = GridLassoProblem {
                    grid: problem.grid,
                    patterns: vec![problem.patterns[i]],
                    b: GridSignal::zeros(problem.grid),
                    alpha: problem.alpha,
                };
                sub.apply(&one)
            })
            .collect();
        MultiChannelSignal::new(channels).expect("at least one channel")
    }

    /// Nonzero amplitudes as spike trains.
    pub fn measures(&self, problem: &GridLassoProblem<R>) -> Vec<SparseMeasure<R>> {
        self.amplitudes
            .iter()
            .map(|amps| {
                let spikes = amps
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != R::zero())
                    .map(|(j, &a)| Spike::new(problem.grid.node(j), a))
                    .collect();
                SparseMeasure::new(spikes).expect("grid nodes are finite")
            })
            .collect()
    }

    pub fn tv_norm(&self) -> R {
        self.amplitudes
            .iter()
            .map(|amps| amps.iter().map(|&a| a.abs()).sum::<R>())
            .sum()
    }
}

/// FISTA with soft-threshold prox on the node dictionary. Stops once the
/// fixed-point residual `||v_next - v|| / step` drops below
/// `tol * (1 + ||b||)`. Momentum restarts when the objective increases.
pub fn grid_fista<R: Real>(
    problem: &GridLassoProblem<R>,
    max_iters: usize,
    tol: R,
) -> GridLassoSolution<R> {
    let n = problem.n_channels();
    let m = problem.grid.count();
    let lipschitz = problem.lipschitz_estimate();
    let step = R::one() / lipschitz;
    let threshold = step * problem.alpha;
    let stop = tol * (R::one() + problem.b.norm());

    let mut v: Vec<Vec<R>> = vec![vec![R::zero(); m]; n];
    let mut y = v.clone();
    let mut momentum = R::one();
    let mut prev_objective = R::infinity();

    for iter in 1..=max_iters {
        let residual = problem.apply(&y).sub(&problem.b);
        let grad = problem.apply_adjoint(&residual);
        let mut v_next = vec![vec![R::zero(); m]; n];
        let mut fp_sq = R::zero();
        let mut l1 = R::zero();
        for i in 0..n {
            for j in 0..m {
                let z = y[i][j] - step * grad[i][j];
                let val = soft_threshold(z, threshold);
                let d = val - v[i][j];
                fp_sq = fp_sq + d * d;
                l1 = l1 + val.abs();
                v_next[i][j] = val;
            }
        }
        let fp_residual = fp_sq.sqrt() / step;
        let objective =
            R::half() * problem.apply(&v_next).sub(&problem.b).norm_sq() + problem.alpha * l1;
        if objective > prev_objective {
            momentum = R::one();
        }
        let next_momentum =
            (R::one() + (R::one() + R::cast(4.0) * momentum * momentum).sqrt()) * R::half();
        let beta = (momentum - R::one()) / next_momentum;
        for i in 0..n {
            for j in 0..m {
                y[i][j] = v_next[i][j] + beta * (v_next[i][j] - v[i][j]);
            }
        }
        momentum = next_momentum;
        prev_objective = objective;
        v = v_next;
        if fp_residual <= stop {
            return GridLassoSolution {
                amplitudes: v,
                iterations: iter,
                converged: true,
            };
        }
    }
    GridLassoSolution {
        amplitudes: v,
        iterations: max_iters,
        converged: false,
    }
}

/// Frank-Wolfe configuration.
#[derive(Debug, Clone, Copy)]
pub struct FwConfig<R> {
    pub max_spikes_per_channel: usize,
    pub max_iters: usize,
    /// Stop once `max_i sup|A_i* r| <= alpha * (1 + cert_tol)`.
    pub cert_tol: R,
    pub scan_refine: usize,
    pub loc_tol: R,
    /// Amplitude refit stops when the largest coordinate update is below this.
    pub refit_tol: R,
    pub refit_max_passes: usize,
}

impl<R: Real> FwConfig<R> {
    pub fn new(grid_step: R) -> Self {
        FwConfig {
            max_spikes_per_channel: 50,
            max_iters: 200,
            cert_tol: R::cast(1e-6),
            scan_refine: 8,
            loc_tol: grid_step * R::cast(1e-4),
            refit_tol: R::cast(1e-12),
            refit_max_passes: 20_000,
        }
    }
}

/// Frank-Wolfe output: recovered spike trains plus certification data.
#[derive(Debug, Clone)]
pub struct FwSolution<R> {
    pub measures: Vec<SparseMeasure<R>>,
    /// Final `sup |A_i* r|` per channel.
    pub cert_sups: Vec<R>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each iteration (never increasing).
    pub objective_trace: Vec<R>,
}

impl<R: Real> FwSolution<R> {
    pub fn tv_norm(&self) -> R {
        self.measures.iter().map(|m| m.tv_norm()).sum()
    }

    /// Per-channel fitted signals `A_i nu_i`.
    pub fn channel_signals(
        &self,
        patterns: &[Pattern<R>],
        grid: &Grid<R>,
    ) -> MultiChannelSignal<R> {
        let channels = self
            .measures
            .iter()
            .zip(patterns)
            .map(|(measure, pattern)| crate::operators::forward(measure, pattern, grid))
            .collect();
        MultiChannelSignal::new(channels).expect("at least one channel")
    }
}

struct FwSpike<R> {
    channel: usize,
    position: R,
    amplitude: R,
    lo: usize,
    phi: Vec<R>,
    norm_sq: R,
}

impl<R: Real> FwSpike<R> {
    fn build(grid: &Grid<R>, pattern: &Pattern<R>, channel: usize, position: R, amplitude: R) -> Self {
        let radius = pattern.support_radius();
        let count = grid.count() as isize;
        let lo = (((position - radius - grid.start()) / grid.step())
            .floor()
            .to_isize()
            .unwrap_or(0)
            - 1)
            .clamp(0, count - 1) as usize;
        let hi = (((position + radius - grid.start()) / grid.step())
            .ceil()
            .to_isize()
            .unwrap_or(count - 1)
            + 1)
            .clamp(0, count - 1) as usize;
        let phi: Vec<R> = (lo..=hi)
            .map(|k| pattern.eval(grid.node(k) - position))
            .collect();
        let norm_sq = phi.iter().map(|&p| p * p).sum();
        FwSpike {
            channel,
            position,
            amplitude,
            lo,
            phi,
            norm_sq,
        }
    }

    fn pairing(&self, r: &GridSignal<R>) -> R {
        r.values()[self.lo..self.lo + self.phi.len()]
            .iter()
            .zip(&self.phi)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    /// `r -= delta * phi`
    fn push(&self, r: &mut GridSignal<R>, delta: R) {
        for (v, &p) in r.values_mut()[self.lo..self.lo + self.phi.len()]
            .iter_mut()
            .zip(&self.phi)
        {
            *v = *v - delta * p;
        }
    }
}

/// One pass of coordinate-descent soft-threshold refits over all spikes.
/// Returns the largest amplitude update. `r = b - sum a phi` is maintained.
fn refit_pass<R: Real>(spikes: &mut [FwSpike<R>], r: &mut GridSignal<R>, alpha: R) -> R {
    let mut max_delta = R::zero();
    for spike in spikes.iter_mut() {
        if spike.norm_sq == R::zero() {
            continue;
        }
        let z = spike.pairing(r) + spike.amplitude * spike.norm_sq;
        let new_amp = soft_threshold(z, alpha) / spike.norm_sq;
        let delta = new_amp - spike.amplitude;
        if delta != R::zero() {
            spike.push(r, delta);
            spike.amplitude = new_amp;
        }
        max_delta = max_delta.max(delta.abs());
    }
    max_delta
}

fn refit<R: Real>(spikes: &mut [FwSpike<R>], r: &mut GridSignal<R>, alpha: R, cfg: &FwConfig<R>) {
    for _ in 0..cfg.refit_max_passes {
        if refit_pass(spikes, r, alpha) <= cfg.refit_tol {
            break;
        }
    }
}

/// Frank-Wolfe spike solver: greedily insert the worst certificate peak,
/// refit all amplitudes with an l1 penalty, then slide each spike position
/// by a derivative-free local search. Gradient-based refinement is avoided
/// because the half-ellipse kernel is not differentiable at its edges.
pub fn frank_wolfe<R: Real>(
    b: &GridSignal<R>,
    patterns: &[Pattern<R>],
    alpha: R,
    cfg: &FwConfig<R>,
) -> Result<FwSolution<R>> {
    if alpha <= R::zero() {
        return Err(Error::InvalidConfig("alpha must be positive".into()));
    }
    if patterns.is_empty() {
        return Err(Error::InvalidConfig("need at least one pattern".into()));
    }
    let grid = *b.grid();
    let mut spikes: Vec<FwSpike<R>> = Vec::new();
    let mut r = b.clone();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let stop_level = alpha * (R::one() + cfg.cert_tol);

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        let mut worst_value = R::zero();
        let mut worst: Option<(usize, R)> = None;
        for (i, pattern) in patterns.iter().enumerate() {
            let sup = certificate_sup(&r, pattern, cfg.scan_refine, cfg.loc_tol);
            if sup.value > worst_value {
                worst_value = sup.value;
                worst = Some((i, sup.location));
            }
        }
        let Some((channel, location)) = worst else {
            converged = true;
            break;
        };
        if worst_value <= stop_level {
            converged = true;
            break;
        }
        if spikes.iter().filter(|s| s.channel == channel).count() >= cfg.max_spikes_per_channel {
            converged = false;
            break;
        }

        spikes.push(FwSpike::build(
            &grid,
            &patterns[channel],
            channel,
            location,
            R::zero(),
        ));
        refit(&mut spikes, &mut r, alpha, cfg);
        slide_all(&mut spikes, &mut r, patterns, &grid, cfg);
        refit(&mut spikes, &mut r, alpha, cfg);
        spikes.retain(|s| s.amplitude != R::zero());

        let tv: R = spikes.iter().map(|s| s.amplitude.abs()).sum();
        trace.push(R::half() * r.norm_sq() + alpha * tv);
    }

    let mut measures: Vec<Vec<Spike<R>>> = vec![Vec::new(); patterns.len()];
    for spike in &spikes {
        measures[spike.channel].push(Spike::new(spike.position, spike.amplitude));
    }
    let measures: Vec<SparseMeasure<R>> = measures
        .into_iter()
        .map(|s| SparseMeasure::new(s).expect("finite spikes"))
        .collect();
    let cert_sups = patterns
        .iter()
        .map(|pattern| certificate_sup(&r, pattern, cfg.scan_refine, cfg.loc_tol).value)
        .collect();
    Ok(FwSolution {
        measures,
        cert_sups,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Golden-section slide of each spike within one grid step of its current
/// position, holding its amplitude fixed; a move is kept only if it lowers
/// the residual.
fn slide_all<R: Real>(
    spikes: &mut Vec<FwSpike<R>>,
    r: &mut GridSignal<R>,
    patterns: &[Pattern<R>],
    grid: &Grid<R>,
    cfg: &FwConfig<R>,
) {
    let radius = grid.step();
    for idx in 0..spikes.len() {
        let amplitude = spikes[idx].amplitude;
        if amplitude == R::zero() {
            continue;
        }
        let channel = spikes[idx].channel;
        let pattern = &patterns[channel];
        // Residual with this spike removed.
        let mut base = r.clone();
        spikes[idx].push(&mut base, -amplitude);
        let misfit = |s: R| {
            let probe = FwSpike::build(grid, pattern, channel, s, amplitude);
            let cross = probe.pairing(&base);
            amplitude * amplitude * probe.norm_sq - R::two() * amplitude * cross
        };
        let current = spikes[idx].position;
        let (best, best_neg) = golden_max(
            |s| -misfit(s),
            current - radius,
            current + radius,
            cfg.loc_tol,
        );
        if -best_neg < misfit(current) {
            let rebuilt = FwSpike::build(grid, pattern, channel, best, amplitude);
            rebuilt.push(&mut base, amplitude);
            *r = base;
            spikes[idx] = rebuilt;
        }
    }
}

/// Witness for the total variation needed to reproduce `x`: fit a spike
/// train to `mix(x)` with a much smaller weight and report its TV together
/// with the leftover fit residual.
#[derive(Debug, Clone)]
pub struct TvWitness<R> {
    pub tv: R,
    /// `||C A nu - mix(x)||` of the witness fit.
    pub fit_residual: R,
    pub solution: FwSolution<R>,
}

/// Weight shrink factor used by [`tv_witness`].
pub const WITNESS_ALPHA_FACTOR: f64 = 1e-3;

pub fn tv_witness<R: Real>(
    x: &MultiChannelSignal<R>,
    patterns: &[Pattern<R>],
    alpha: R,
    cfg: &FwConfig<R>,
) -> Result<TvWitness<R>> {
    let target = mix(x);
    let witness_alpha = alpha * R::cast(WITNESS_ALPHA_FACTOR);
    let solution = frank_wolfe(&target, patterns, witness_alpha, cfg)?;
    let fitted = mix(&solution.channel_signals(patterns, x.grid()));
    Ok(TvWitness {
        tv: solution.tv_norm(),
        fit_residual: fitted.sub(&target).norm(),
        solution,
    })
}
