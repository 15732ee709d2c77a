//! Numeric convex-duality toolkit: the conjugates of the data-fit and
//! regularization terms, the dual objective, the residual identity, and
//! duality-gap reporting.

use crate::error::{Error, Result};
use crate::operators::{certificate_sup, mix, GridSignal, MultiChannelSignal};
use crate::patterns::Pattern;
use crate::real::Real;

/// Absolute slack used by the Fenchel-Young inequality check.
pub const FENCHEL_YOUNG_TOL: f64 = 1e-9;

/// Scan parameters used whenever a duality check needs a certificate sup.
#[derive(Debug, Clone, Copy)]
pub struct ScanParams<R> {
    pub scan_refine: usize,
    pub loc_tol: R,
}

impl<R: Real> ScanParams<R> {
    pub fn new(scan_refine: usize, loc_tol: R) -> Self {
        ScanParams {
            scan_refine,
            loc_tol,
        }
    }

    /// Default scan for a grid step: 8x refinement, location tolerance
    /// `1e-4 * step`.
    pub fn for_step(step: R) -> Self {
        ScanParams {
            scan_refine: 8,
            loc_tol: step * R::cast(1e-4),
        }
    }
}

/// A dual variable together with the regularization weight whose constraint
/// `||A* r||_inf <= alpha` it must satisfy.
#[derive(Debug, Clone)]
pub struct DualPoint<R> {
    pub r: GridSignal<R>,
    pub alpha: R,
}

impl<R: Real> DualPoint<R> {
    pub fn new(r: GridSignal<R>, alpha: R) -> Self {
        assert!(alpha > R::zero(), "alpha must be positive");
        DualPoint { r, alpha }
    }

    /// Worst constraint violation over channels: `max_i sup|A_i* r| - alpha`.
    pub fn max_violation(&self, patterns: &[Pattern<R>], scan: ScanParams<R>) -> R {
        let sup = patterns
            .iter()
            .map(|y| certificate_sup(&self.r, y, scan.scan_refine, scan.loc_tol).value)
            .fold(R::zero(), |a, b| a.max(b));
        sup - self.alpha
    }

    pub fn is_feasible(&self, patterns: &[Pattern<R>], scan: ScanParams<R>, feas_tol: R) -> bool {
        self.max_violation(patterns, scan) <= self.alpha * feas_tol
    }

    /// Scale `r` just enough to make the constraint hold exactly, so the dual
    /// value evaluated afterwards is a certified lower bound.
    pub fn scaled_to_feasible(&self, patterns: &[Pattern<R>], scan: ScanParams<R>) -> Self {
        let sup = self.max_violation(patterns, scan) + self.alpha;
        if sup <= self.alpha {
            return self.clone();
        }
        DualPoint {
            r: self.r.scaled(self.alpha / sup),
            alpha: self.alpha,
        }
    }
}

/// One primal/dual evaluation: `gap = primal - dual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapReport<R> {
    pub primal_value: R,
    pub dual_value: R,
    pub gap: R,
    /// `max_i sup|A_i* r| - alpha` of the raw (unscaled) dual candidate.
    pub max_violation: R,
}

impl<R: Real> GapReport<R> {
    pub fn new(primal_value: R, dual_value: R, max_violation: R) -> Self {
        GapReport {
            primal_value,
            dual_value,
            gap: primal_value - dual_value,
            max_violation,
        }
    }
}

/// Conjugate of the quadratic data-fit term: `g*(v) = 0.5 ||v||^2 = g(v)`.
pub fn g_conj_value<R: Real>(v: &GridSignal<R>) -> R {
    R::half() * v.norm_sq()
}

/// Feasibility verdict for the sup-norm indicator conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorReport<R> {
    pub feasible: bool,
    /// `max_i sup|A_i* x*_i| - tau`; negative when strictly inside.
    pub max_violation: R,
}

/// Conjugate of the lifted TV term: the indicator of
/// `{x* : sup_i ||A_i* x*_i||_inf <= tau}`, reported as a feasibility flag
/// plus worst violation instead of a floating infinity.
pub fn f_conj_indicator<R: Real>(
    x_star: &MultiChannelSignal<R>,
    patterns: &[Pattern<R>],
    tau: R,
    scan: ScanParams<R>,
) -> IndicatorReport<R> {
    assert!(tau > R::zero(), "tau must be positive");
    assert_eq!(x_star.n_channels(), patterns.len());
    let mut worst = R::neg_infinity();
    for (channel, pattern) in x_star.channels().iter().zip(patterns) {
        let sup = certificate_sup(channel, pattern, scan.scan_refine, scan.loc_tol).value;
        worst = worst.max(sup - tau);
    }
    IndicatorReport {
        feasible: worst <= R::zero(),
        max_violation: worst,
    }
}

/// Dual objective `<r, b> - 0.5 ||r||^2`.
pub fn dual_objective<R: Real>(r: &GridSignal<R>, b: &GridSignal<R>) -> Result<R> {
    if r.grid() != b.grid() {
        return Err(Error::GridMismatch("dual objective needs r, b on one grid"));
    }
    Ok(r.dot(b) - R::half() * r.norm_sq())
}

/// Primal objective `0.5 ||Cx - b||^2 + alpha * tv_bound`, where `tv_bound`
/// is the total variation of a witness measure reproducing `x`.
pub fn primal_objective<R: Real>(
    x: &MultiChannelSignal<R>,
    b: &GridSignal<R>,
    tv_bound: R,
    alpha: R,
) -> Result<R> {
    if x.grid() != b.grid() {
        return Err(Error::GridMismatch(
            "primal objective needs x, b on one grid",
        ));
    }
    let misfit = mix(x).sub(b).norm_sq();
    Ok(R::half() * misfit + alpha * tv_bound)
}

/// Fenchel-Young inequality `<w*, w> <= f(w) + f*(w*)` up to a small slack.
/// Indicator conjugates encoded as "infeasible" are `+inf`, which makes the
/// inequality trivially true; callers pass finite values only for feasible
/// points.
pub fn fenchel_young_check<R: Real>(pairing: R, f_val: R, fstar_val: R) -> bool {
    if fstar_val == R::infinity() || f_val == R::infinity() {
        return true;
    }
    pairing <= f_val + fstar_val + R::cast(FENCHEL_YOUNG_TOL)
}

/// Distance between a dual candidate and the primal residual:
/// `||r - (b - Cx)||`. Near zero exactly when the pair is converged.
pub fn residual_identity_check<R: Real>(
    x: &MultiChannelSignal<R>,
    r: &GridSignal<R>,
    b: &GridSignal<R>,
) -> Result<R> {
    if x.grid() != b.grid() || r.grid() != b.grid() {
        return Err(Error::GridMismatch(
            "residual identity needs x, r, b on one grid",
        ));
    }
    let residual = b.sub(&mix(x));
    Ok(r.sub(&residual).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::Grid;
    use approx::assert_relative_eq;

    fn grid() -> Grid<f64> {
        Grid::new(0.0, 0.5, 8).unwrap()
    }

    fn signal(values: &[f64]) -> GridSignal<f64> {
        GridSignal::from_values(Grid::new(0.0, 0.5, values.len()).unwrap(), values.to_vec())
            .unwrap()
    }

    #[test]
    fn g_conj_of_zero_is_zero() {
        assert_eq!(g_conj_value(&GridSignal::zeros(grid())), 0.0);
    }

    #[test]
    fn g_conj_is_half_norm_squared() {
        assert_eq!(g_conj_value(&signal(&[3.0, 4.0])), 12.5);
    }

    #[test]
    fn g_is_self_conjugate() {
        // g and g* are the same function; evaluate both sides on a few inputs.
        for scale in [0.1, 1.0, -2.5] {
            let v = signal(&[scale, 2.0 * scale, -scale]);
            assert_eq!(g_conj_value(&v), 0.5 * v.norm_sq());
        }
    }

    #[test]
    fn dual_objective_identities() {
        let b = signal(&[1.0, -2.0, 0.5, 3.0]);
        let norm_sq = b.norm_sq();
        assert_relative_eq!(
            dual_objective(&b, &b).unwrap(),
            0.5 * norm_sq,
            max_relative = 1e-15
        );
        let zero = GridSignal::zeros(*b.grid());
        assert_eq!(dual_objective(&zero, &b).unwrap(), 0.0);
        assert_relative_eq!(
            dual_objective(&b.scaled(0.5), &b).unwrap(),
            0.375 * norm_sq,
            max_relative = 1e-15
        );
    }

    #[test]
    fn dual_objective_rejects_grid_mismatch() {
        let b = signal(&[1.0, 2.0]);
        let r = GridSignal::zeros(Grid::new(1.0, 0.5, 2).unwrap());
        assert!(matches!(
            dual_objective(&r, &b),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn primal_objective_at_zero_is_half_data_energy() {
        let b = signal(&[1.0, -2.0, 0.5]);
        let x = MultiChannelSignal::zeros(*b.grid(), 2);
        let p = primal_objective(&x, &b, 0.0, 0.1).unwrap();
        assert_relative_eq!(p, 0.5 * b.norm_sq(), max_relative = 1e-15);
    }

    #[test]
    fn primal_objective_on_noiseless_truth_is_alpha_tv() {
        let b = signal(&[0.5, 1.5, -0.25, 2.0]);
        let x = MultiChannelSignal::new(vec![b.clone()]).unwrap();
        let alpha = 0.05;
        let tv = 4.5;
        let p = primal_objective(&x, &b, tv, alpha).unwrap();
        assert_relative_eq!(p, alpha * tv, epsilon = 1e-15);
    }

    #[test]
    fn indicator_is_feasible_at_zero_with_violation_minus_tau() {
        let g = grid();
        let x = MultiChannelSignal::zeros(g, 1);
        let patterns = [Pattern::triangle(0.5, 1.0)];
        let scan = ScanParams::for_step(g.step());
        let report = f_conj_indicator(&x, &patterns, 2.0, scan);
        assert!(report.feasible);
        assert_eq!(report.max_violation, -2.0);
    }

    #[test]
    fn indicator_scaling_makes_boundary_points_feasible() {
        let g = Grid::new(-2.0, 0.1, 41).unwrap();
        let mut u = GridSignal::zeros(g);
        for (k, v) in u.values_mut().iter_mut().enumerate() {
            *v = ((k % 5) as f64 - 2.0) / 2.0;
        }
        let patterns = [Pattern::triangle(0.5, 1.0)];
        let scan = ScanParams::for_step(g.step());
        let tau = 0.75;
        let sup = certificate_sup(&u, &patterns[0], scan.scan_refine, scan.loc_tol).value;
        assert!(sup > 0.0);

        // Scaled so one channel's sup is exactly 2 tau: infeasible by tau.
        let x = MultiChannelSignal::new(vec![u.scaled(2.0 * tau / sup)]).unwrap();
        let report = f_conj_indicator(&x, &patterns, tau, scan);
        assert!(!report.feasible);
        assert_relative_eq!(report.max_violation, tau, max_relative = 1e-9);

        // Scaled onto the boundary: the violation collapses to roundoff (the
        // constraint set is closed, so the exact boundary point is feasible).
        let x = MultiChannelSignal::new(vec![u.scaled(tau / sup)]).unwrap();
        let report = f_conj_indicator(&x, &patterns, tau, scan);
        assert!(report.max_violation.abs() <= 1e-12 * tau);
        // Backing off by one ulp-scale factor is certifiably feasible.
        let x = MultiChannelSignal::new(vec![u.scaled(tau / sup * (1.0 - 1e-12))]).unwrap();
        let report = f_conj_indicator(&x, &patterns, tau, scan);
        assert!(report.feasible);
    }

    #[test]
    fn fenchel_young_accepts_subgradient_equality_cases() {
        // 1-D pair f(w) = alpha |w|, f*(z) = indicator(|z| <= alpha): at
        // z = alpha sign(w) the inequality is tight.
        let alpha = 0.7;
        for w in [-2.0, -0.5, 0.3, 1.9] {
            let z = alpha * f64::signum(w);
            let pairing = z * w;
            let f_val = alpha * f64::abs(w);
            assert!(fenchel_young_check(pairing, f_val, 0.0));
            assert!((pairing - f_val).abs() <= 1e-12);
        }
    }

    #[test]
    fn fenchel_young_rejects_violations() {
        assert!(!fenchel_young_check(1.0, 0.0, 0.5));
        assert!(fenchel_young_check(0.2, 0.0, 0.5));
        assert!(fenchel_young_check(123.0, 0.0, f64::INFINITY));
    }

    #[test]
    fn residual_identity_examples() {
        let b = signal(&[1.0, 2.0, -0.5]);
        let x = MultiChannelSignal::zeros(*b.grid(), 2);
        assert_eq!(residual_identity_check(&x, &b, &b).unwrap(), 0.0);
        let zero = GridSignal::zeros(*b.grid());
        assert_relative_eq!(
            residual_identity_check(&x, &zero, &b).unwrap(),
            b.norm(),
            max_relative = 1e-15
        );
    }
}
