//! The forward operator (spike trains convolved with patterns, sampled on a
//! grid), its continuous adjoint (cross-correlation certificates), and the
//! channel-summing mixing operator.
//!
//! The pairing is deliberately quadrature-free: `forward` evaluates patterns
//! pointwise at node-minus-spike offsets and the adjoint is a plain sum over
//! nodes, so spikes and certificates are exactly dual to each other.

use crate::error::{Error, Result};
use crate::measures::SparseMeasure;
use crate::patterns::Pattern;
use crate::real::Real;

/// Uniform sampling grid: node `k` sits at `start + k * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<R> {
    start: R,
    step: R,
    count: usize,
}

impl<R: Real> Grid<R> {
    pub fn new(start: R, step: R, count: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() {
            return Err(Error::NonFiniteInput("grid start/step"));
        }
        if step <= R::zero() {
            return Err(Error::InvalidConfig("grid step must be positive".into()));
        }
        if count < 2 {
            return Err(Error::InvalidConfig(
                "grid must have at least two nodes".into(),
            ));
        }
        Ok(Grid { start, step, count })
    }

    pub fn start(&self) -> R {
        self.start
    }

    pub fn step(&self) -> R {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn node(&self, k: usize) -> R {
        self.start + R::cast(k as f64) * self.step
    }

    pub fn end(&self) -> R {
        self.node(self.count - 1)
    }
}

/// A real-valued signal sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSignal<R> {
    grid: Grid<R>,
    values: Vec<R>,
}

impl<R: Real> GridSignal<R> {
    pub fn zeros(grid: Grid<R>) -> Self {
        GridSignal {
            grid,
            values: vec![R::zero(); grid.count()],
        }
    }

    pub fn from_values(grid: Grid<R>, values: Vec<R>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::InvalidConfig(format!(
                "value count {} does not match grid count {}",
                values.len(),
                grid.count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("signal values"));
        }
        Ok(GridSignal { grid, values })
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [R] {
        &mut self.values
    }

    pub fn dot(&self, other: &Self) -> R {
        assert_eq!(self.grid, other.grid, "signals must share a grid");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> R {
        self.values.iter().map(|&v| v * v).sum()
    }

    pub fn norm(&self) -> R {
        self.norm_sq().sqrt()
    }

    /// `self += c * other`
    pub fn add_scaled(&mut self, c: R, other: &Self) {
        assert_eq!(self.grid, other.grid, "signals must share a grid");
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a = *a + c * b;
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "signals must share a grid");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a - b)
            .collect();
        GridSignal {
            grid: self.grid,
            values,
        }
    }

    pub fn scaled(&self, c: R) -> Self {
        GridSignal {
            grid: self.grid,
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }
}

/// `n` grid signals on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSignal<R> {
    channels: Vec<GridSignal<R>>,
}

impl<R: Real> MultiChannelSignal<R> {
    pub fn new(channels: Vec<GridSignal<R>>) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidConfig(
                "multichannel signal needs at least one channel".into(),
            ));
        }
        let grid = *channels[0].grid();
        if channels.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch("channels must share one grid"));
        }
        Ok(MultiChannelSignal { channels })
    }

    pub fn zeros(grid: Grid<R>, n: usize) -> Self {
        assert!(n >= 1);
        MultiChannelSignal {
            channels: (0..n).map(|_| GridSignal::zeros(grid)).collect(),
        }
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn grid(&self) -> &Grid<R> {
        self.channels[0].grid()
    }

    pub fn channel(&self, i: usize) -> &GridSignal<R> {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[GridSignal<R>] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [GridSignal<R>] {
        &mut self.channels
    }

    pub fn dot(&self, other: &Self) -> R {
        assert_eq!(self.n_channels(), other.n_channels());
        self.channels
            .iter()
            .zip(&other.channels)
            .map(|(a, b)| a.dot(b))
            .sum()
    }

    pub fn norm_sq(&self) -> R {
        self.channels.iter().map(|c| c.norm_sq()).sum()
    }

    pub fn norm(&self) -> R {
        self.norm_sq().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n_channels(), other.n_channels());
        MultiChannelSignal {
            channels: self
                .channels
                .iter()
                .zip(&other.channels)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }
}

/// Sample the convolution of a spike train with a pattern on the grid:
/// `values[k] = sum_j a_j * y(node_k - s_j)`.
pub fn forward<R: Real>(
    measure: &SparseMeasure<R>,
    pattern: &Pattern<R>,
    grid: &Grid<R>,
) -> GridSignal<R> {
    let mut out = GridSignal::zeros(*grid);
    let r = pattern.support_radius();
    for spike in measure.spikes() {
        let (lo, hi) = node_window(grid, spike.position, r);
        for k in lo..=hi {
            out.values[k] = out.values[k] + spike.amplitude * pattern.eval(grid.node(k) - spike.position);
        }
    }
    out
}

/// Node index range whose coordinates can fall within `radius` of `center`.
/// Widened by one node on each side; the pattern is exactly zero outside its
/// support so extra nodes contribute nothing.
fn node_window<R: Real>(grid: &Grid<R>, center: R, radius: R) -> (usize, usize) {
    let count = grid.count() as isize;
    let lo = ((center - radius - grid.start()) / grid.step())
        .floor()
        .to_isize()
        .unwrap_or(0)
        - 1;
    let hi = ((center + radius - grid.start()) / grid.step())
        .ceil()
        .to_isize()
        .unwrap_or(count - 1)
        + 1;
    let lo = lo.clamp(0, count - 1) as usize;
    let hi = hi.clamp(0, count - 1) as usize;
    (lo, hi)
}

/// Evaluate the adjoint (cross-correlation) at lag `s`:
/// `(A* u)(s) = sum_k u[k] * y(node_k - s)`, support-windowed.
pub fn adjoint_eval<R: Real>(u: &GridSignal<R>, pattern: &Pattern<R>, s: R) -> R {
    let grid = u.grid();
    let r = pattern.support_radius();
    if s < grid.start() - r - grid.step() || s > grid.end() + r + grid.step() {
        return R::zero();
    }
    let (lo, hi) = node_window(grid, s, r);
    let mut acc = R::zero();
    for k in lo..=hi {
        acc = acc + u.values()[k] * pattern.eval(grid.node(k) - s);
    }
    acc
}

/// The continuous dual-certificate function `A* u`, evaluable lazily anywhere.
#[derive(Debug, Clone, Copy)]
pub struct Certificate<'a, R> {
    source: &'a GridSignal<R>,
    pattern: &'a Pattern<R>,
}

impl<'a, R: Real> Certificate<'a, R> {
    pub fn new(source: &'a GridSignal<R>, pattern: &'a Pattern<R>) -> Self {
        Certificate { source, pattern }
    }

    pub fn eval(&self, s: R) -> R {
        adjoint_eval(self.source, self.pattern, s)
    }
}

/// Result of a global certificate scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateSup<R> {
    /// `sup |A* u|` over the extended window.
    pub value: R,
    /// Where it is attained.
    pub location: R,
}

/// One refined local maximum of `|A* u|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<R> {
    pub location: R,
    /// Signed certificate value at the peak; `value.abs()` is the local max.
    pub value: R,
}

/// All local maxima of `|A* u|`, located by a refined scan plus golden-section
/// polish to width `loc_tol`, sorted by location.
///
/// The scan covers `[start - r, end + r]` with spacing `step / scan_refine`,
/// anchored on the signal nodes so the coarse node maximum is never lost.
/// Plateaus contribute their leftmost point.
pub fn certificate_peaks<R: Real>(
    u: &GridSignal<R>,
    pattern: &Pattern<R>,
    scan_refine: usize,
    loc_tol: R,
) -> Vec<Peak<R>> {
    assert!(scan_refine >= 1, "scan_refine must be at least 1");
    assert!(loc_tol > R::zero(), "loc_tol must be positive");
    let grid = u.grid();
    let fine = grid.step() / R::cast(scan_refine as f64);
    let r = pattern.support_radius();
    let pad = (r / fine).ceil().to_isize().unwrap_or(0).max(0);
    let m_lo = -pad;
    let m_hi = (grid.count() as isize - 1) * scan_refine as isize + pad;
    let at = |m: isize| grid.start() + R::cast(m as f64) * fine;

    let n = (m_hi - m_lo + 1) as usize;
    let mut mags = Vec::with_capacity(n);
    let mut vals = Vec::with_capacity(n);
    for m in m_lo..=m_hi {
        let v = adjoint_eval(u, pattern, at(m));
        vals.push(v);
        mags.push(v.abs());
    }

    let mut peaks = Vec::new();
    for i in 0..n {
        let rise = i == 0 || mags[i - 1] < mags[i];
        let fall = i == n - 1 || mags[i + 1] <= mags[i];
        if !(rise && fall) {
            continue;
        }
        let m = m_lo + i as isize;
        let lo = at(if i == 0 { m } else { m - 1 });
        let hi = at(if i == n - 1 { m } else { m + 1 });
        let (mut loc, mut mag) = golden_max(|s| adjoint_eval(u, pattern, s).abs(), lo, hi, loc_tol);
        // Refinement must never lose the coarse candidate.
        if mags[i] >= mag {
            loc = at(m);
            mag = mags[i];
        }
        let value = if mag == mags[i] && loc == at(m) {
            vals[i]
        } else {
            adjoint_eval(u, pattern, loc)
        };
        peaks.push(Peak {
            location: loc,
            value,
        });
    }
    peaks
}

/// Global absolute maximum of the certificate `A* u` and its location.
pub fn certificate_sup<R: Real>(
    u: &GridSignal<R>,
    pattern: &Pattern<R>,
    scan_refine: usize,
    loc_tol: R,
) -> CertificateSup<R> {
    let peaks = certificate_peaks(u, pattern, scan_refine, loc_tol);
    let mut best = CertificateSup {
        value: R::zero(),
        location: u.grid().start(),
    };
    for p in peaks {
        if p.value.abs() > best.value {
            best = CertificateSup {
                value: p.value.abs(),
                location: p.location,
            };
        }
    }
    best
}

/// Golden-section search maximizing `f` on `[a, b]` down to interval width
/// `tol`. Returns the best probed point (endpoints included).
pub(crate) fn golden_max<R: Real>(f: impl Fn(R) -> R, a: R, b: R, tol: R) -> (R, R) {
    let inv_phi = R::cast(0.618_033_988_749_894_9);
    let (mut a, mut b) = (a, b);
    let mut best_x = a;
    let mut best_f = f(a);
    let fb = f(b);
    if fb > best_f {
        best_x = b;
        best_f = fb;
    }
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
        let (x, fx) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if fx > best_f {
            best_x = x;
            best_f = fx;
        }
    }
    (best_x, best_f)
}

/// Mixing operator `C`: pointwise sum across channels.
pub fn mix<R: Real>(x: &MultiChannelSignal<R>) -> GridSignal<R> {
    let mut out = GridSignal::zeros(*x.grid());
    for channel in x.channels() {
        out.add_scaled(R::one(), channel);
    }
    out
}

/// Adjoint of the mixing operator: broadcast `u` into `n` channels.
pub fn mix_adjoint<R: Real>(u: &GridSignal<R>, n: usize) -> MultiChannelSignal<R> {
    assert!(n >= 1);
    MultiChannelSignal {
        channels: vec![u.clone(); n],
    }
}

/// Power-iteration estimate of `||C||^2` (the largest eigenvalue of `C* C`)
/// for `n` channels on `grid`. Deterministic start vector.
pub fn mixing_norm_sq_estimate<R: Real>(grid: &Grid<R>, n: usize, max_iters: usize, tol: R) -> R {
    let mut x = MultiChannelSignal::zeros(*grid, n);
    for (i, channel) in x.channels_mut().iter_mut().enumerate() {
        for (k, v) in channel.values_mut().iter_mut().enumerate() {
            *v = R::one() + R::cast(((i + 1) * (k + 2) % 7) as f64 / 7.0);
        }
    }
    let mut estimate = R::zero();
    for _ in 0..max_iters {
        let z = mix_adjoint(&mix(&x), n);
        let next = x.dot(&z) / x.norm_sq();
        let z_norm = z.norm();
        if z_norm == R::zero() {
            return R::zero();
        }
        x = MultiChannelSignal {
            channels: z
                .channels()
                .iter()
                .map(|zi| zi.scaled(R::one() / z_norm))
                .collect(),
        };
        if (next - estimate).abs() <= tol * next.abs().max(R::one()) {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Spike;
    use approx::assert_relative_eq;

    fn grid(start: f64, step: f64, count: usize) -> Grid<f64> {
        Grid::new(start, step, count).unwrap()
    }

    fn measure(spikes: &[(f64, f64)]) -> SparseMeasure<f64> {
        SparseMeasure::new(spikes.iter().map(|&(p, a)| Spike::new(p, a)).collect()).unwrap()
    }

    #[test]
    fn forward_of_single_spike_is_shifted_pattern() {
        let g = grid(-1.0, 0.05, 81);
        let y = Pattern::half_ellipse(0.5, 1.4);
        let t = 0.6;
        let out = forward(&measure(&[(t, 1.0)]), &y, &g);
        for k in 0..g.count() {
            assert_relative_eq!(out.values()[k], y.eval(g.node(k) - t), max_relative = 1e-14);
        }
    }

    #[test]
    fn forward_places_figure_bumps_at_spike_positions() {
        let g = grid(0.0, 0.01, 701);
        let y = Pattern::half_ellipse(0.5, 1.0);
        let out = forward(&measure(&[(1.0, 1.4), (4.0, 1.0)]), &y, &g);
        assert_relative_eq!(out.values()[100], 1.4, max_relative = 1e-14);
        assert_relative_eq!(out.values()[400], 1.0, max_relative = 1e-14);
        // Supports are disjoint: nothing in between.
        assert_eq!(out.values()[250], 0.0);
    }

    #[test]
    fn forward_triangle_peak_and_neighbors() {
        let g = grid(-1.0, 0.25, 9);
        let y = Pattern::triangle(0.5, 1.0);
        let out = forward(&measure(&[(0.0, 2.0)]), &y, &g);
        assert_eq!(out.values()[4], 2.0);
        assert_eq!(out.values()[3], 1.0);
        assert_eq!(out.values()[5], 1.0);
        assert_eq!(out.values()[2], 0.0);
        assert_eq!(out.values()[6], 0.0);
    }

    #[test]
    fn adjoint_at_zero_lag_is_sampled_autocorrelation() {
        let g = grid(-2.0, 0.1, 41);
        let y = Pattern::triangle(0.5, 1.0);
        let u = forward(&measure(&[(0.0, 1.0)]), &y, &g);
        let expected: f64 = (0..g.count()).map(|k| y.eval(g.node(k)).powi(2)).sum();
        assert_relative_eq!(adjoint_eval(&u, &y, 0.0), expected, max_relative = 1e-13);
    }

    #[test]
    fn adjoint_of_zero_signal_is_zero() {
        let g = grid(0.0, 0.1, 21);
        let u = GridSignal::zeros(g);
        let y = Pattern::half_ellipse(0.5, 1.0);
        for k in 0..40 {
            assert_eq!(adjoint_eval(&u, &y, -0.7 + 0.09 * k as f64), 0.0);
        }
    }

    #[test]
    fn adjoint_of_unit_impulse_samples_the_pattern() {
        let g = grid(0.0, 0.1, 21);
        let mut u = GridSignal::zeros(g);
        u.values_mut()[7] = 1.0;
        let y = Pattern::raised_cosine(0.5, 1.3);
        for k in 0..60 {
            let s = -0.5 + 0.05 * k as f64;
            assert_relative_eq!(
                adjoint_eval(&u, &y, s),
                y.eval(g.node(7) - s),
                max_relative = 1e-14,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn certificate_sup_peaks_at_spike_for_symmetric_pattern() {
        let g = grid(-2.0, 0.1, 61);
        let y = Pattern::triangle(0.5, 1.0);
        let t = 0.8;
        let u = forward(&measure(&[(t, 1.0)]), &y, &g);
        let sup = certificate_sup(&u, &y, 8, 1e-8);
        assert!((sup.location - t).abs() <= 1e-8);
    }

    #[test]
    fn certificate_sup_of_zero_signal_is_zero() {
        let g = grid(0.0, 0.1, 21);
        let u = GridSignal::zeros(g);
        let y = Pattern::triangle(0.5, 1.0);
        let sup = certificate_sup(&u, &y, 4, 1e-6);
        assert_eq!(sup.value, 0.0);
    }

    #[test]
    fn certificate_sup_matches_dense_brute_force() {
        let g = grid(-1.0, 0.1, 61);
        let y = Pattern::triangle(0.5, 1.0);
        let u = forward(&measure(&[(0.0, 1.0), (3.0, 1.0)]), &y, &g);
        let sup = certificate_sup(&u, &y, 8, 1e-9);

        // Brute force over a 1000x-refined scan of the extended window.
        let refine = 1000;
        let fine = g.step() / refine as f64;
        let r = y.support_radius();
        let m_lo = -((r / fine).ceil() as isize);
        let m_hi = (g.count() as isize - 1) * refine + (r / fine).ceil() as isize;
        let mut brute: f64 = 0.0;
        for m in m_lo..=m_hi {
            let s = g.start() + m as f64 * fine;
            brute = brute.max(adjoint_eval(&u, &y, s).abs());
        }
        assert!((sup.value - brute).abs() <= 1e-6);
        assert!(sup.value >= brute - 1e-12);
    }

    #[test]
    fn certificate_sup_never_loses_the_coarse_node_max() {
        let g = grid(0.0, 0.2, 31);
        let y = Pattern::gaussian(0.4, 1.0, 1.6);
        let mut u = GridSignal::zeros(g);
        for (k, v) in u.values_mut().iter_mut().enumerate() {
            *v = ((k * 37 % 11) as f64 - 5.0) / 5.0;
        }
        let node_max = (0..g.count())
            .map(|k| adjoint_eval(&u, &y, g.node(k)).abs())
            .fold(0.0f64, f64::max);
        let sup = certificate_sup(&u, &y, 8, 1e-7);
        assert!(sup.value >= node_max - 1e-15);
    }

    #[test]
    fn mix_is_identity_for_single_channel() {
        let g = grid(0.0, 0.5, 4);
        let u = GridSignal::from_values(g, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let x = MultiChannelSignal::new(vec![u.clone()]).unwrap();
        assert_eq!(mix(&x), u);
    }

    #[test]
    fn mix_sums_channels_pointwise() {
        let g = grid(0.0, 0.5, 4);
        let ones = GridSignal::from_values(g, vec![1.0; 4]).unwrap();
        let x = MultiChannelSignal::new(vec![ones.clone(), ones]).unwrap();
        assert_eq!(mix(&x).values(), &[2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn mix_adjoint_broadcasts() {
        let g = grid(0.0, 0.5, 4);
        let ones = GridSignal::from_values(g, vec![1.0; 4]).unwrap();
        let x = mix_adjoint(&ones, 3);
        assert_eq!(x.n_channels(), 3);
        for i in 0..3 {
            assert_eq!(x.channel(i).values(), &[1.0, 1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn mix_adjoint_identity_holds() {
        let g = grid(0.0, 0.25, 16);
        let mut x = MultiChannelSignal::zeros(g, 3);
        let mut u = GridSignal::zeros(g);
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for c in x.channels_mut() {
            for v in c.values_mut() {
                *v = next();
            }
        }
        for v in u.values_mut() {
            *v = next();
        }
        let lhs = mix(&x).dot(&u);
        let rhs = x.dot(&mix_adjoint(&u, 3));
        assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
    }

    #[test]
    fn adjoint_consistency_between_spikes_and_certificates() {
        let g = grid(-2.0, 0.125, 49);
        let y = Pattern::half_ellipse(0.5, 1.2);
        let spikes = [(g.node(8), 1.3), (g.node(20), -0.7), (g.node(33), 2.1)];
        let nu = measure(&spikes);
        let mut u = GridSignal::zeros(g);
        for (k, v) in u.values_mut().iter_mut().enumerate() {
            *v = ((k * 13 % 17) as f64 - 8.0) / 8.0;
        }
        let lhs = forward(&nu, &y, &g).dot(&u);
        let rhs: f64 = nu
            .spikes()
            .iter()
            .map(|s| s.amplitude * adjoint_eval(&u, &y, s.position))
            .sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn forward_is_linear_in_the_measure() {
        let g = grid(-1.0, 0.1, 41);
        let y = Pattern::triangle(0.4, 1.0);
        let a = measure(&[(0.0, 1.0), (1.1, -2.0)]);
        let b = measure(&[(0.3, 0.5), (1.1, 1.0)]);
        let lhs = forward(&a.add(&b), &y, &g);
        let mut rhs = forward(&a, &y, &g);
        rhs.add_scaled(1.0, &forward(&b, &y, &g));
        for k in 0..g.count() {
            assert_relative_eq!(lhs.values()[k], rhs.values()[k], epsilon = 1e-14);
        }
    }

    #[test]
    fn mixing_norm_estimate_matches_channel_count() {
        let g = grid(0.0, 0.1, 32);
        for n in [1usize, 2, 5] {
            let est = mixing_norm_sq_estimate(&g, n, 100, 1e-12);
            assert!((est - n as f64).abs() <= 1e-6, "n={n} est={est}");
        }
    }
}
