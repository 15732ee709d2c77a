//! Convolution kernels: continuous, even functions that vanish at infinity.
//!
//! Every built-in kind is compactly supported (the truncated Gaussian is
//! shifted down and clamped at its truncation boundary so no jump is
//! introduced), which makes the sampled sup-sum decay condition trivial to
//! certify.

use crate::real::Real;

/// A continuous pattern function, evaluable anywhere on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pattern<R> {
    /// `h * sqrt(max(0, 1 - (w/width)^2))` on `[-width, width]`.
    HalfEllipse { width: R, height: R },
    /// `h * max(0, 1 - |w|/width)`.
    Triangle { width: R, height: R },
    /// `h * (exp(-w^2/(2 sigma^2)) - exp(-radius^2/(2 sigma^2)))` clamped at
    /// zero, and exactly zero outside `[-radius, radius]`.
    Gaussian { sigma: R, height: R, radius: R },
    /// `h * (1 + cos(pi w / width)) / 2` on `[-width, width]`.
    RaisedCosine { width: R, height: R },
}

impl<R: Real> Pattern<R> {
    pub fn half_ellipse(width: R, height: R) -> Self {
        assert!(width > R::zero(), "width must be positive");
        Pattern::HalfEllipse { width, height }
    }

    pub fn triangle(width: R, height: R) -> Self {
        assert!(width > R::zero(), "width must be positive");
        Pattern::Triangle { width, height }
    }

    pub fn gaussian(sigma: R, height: R, radius: R) -> Self {
        assert!(sigma > R::zero(), "sigma must be positive");
        assert!(radius > R::zero(), "truncation radius must be positive");
        Pattern::Gaussian {
            sigma,
            height,
            radius,
        }
    }

    pub fn raised_cosine(width: R, height: R) -> Self {
        assert!(width > R::zero(), "width must be positive");
        Pattern::RaisedCosine { width, height }
    }

    /// Evaluate the pattern at offset `omega` from its center.
    pub fn eval(&self, omega: R) -> R {
        match *self {
            Pattern::HalfEllipse { width, height } => {
                let t = omega / width;
                let inside = R::one() - t * t;
                if inside <= R::zero() {
                    R::zero()
                } else {
                    height * inside.sqrt()
                }
            }
            Pattern::Triangle { width, height } => {
                let t = R::one() - omega.abs() / width;
                if t <= R::zero() {
                    R::zero()
                } else {
                    height * t
                }
            }
            Pattern::Gaussian {
                sigma,
                height,
                radius,
            } => {
                if omega.abs() > radius {
                    return R::zero();
                }
                let two_sigma_sq = R::two() * sigma * sigma;
                let floor = (-(radius * radius) / two_sigma_sq).exp();
                let v = height * ((-(omega * omega) / two_sigma_sq).exp() - floor);
                v.max(R::zero())
            }
            Pattern::RaisedCosine { width, height } => {
                if omega.abs() >= width {
                    return R::zero();
                }
                let pi = R::cast(std::f64::consts::PI);
                height * (R::one() + (pi * omega / width).cos()) * R::half()
            }
        }
    }

    /// Smallest `r` such that the pattern vanishes outside `[-r, r]`.
    pub fn support_radius(&self) -> R {
        match *self {
            Pattern::HalfEllipse { width, .. } => width,
            Pattern::Triangle { width, .. } => width,
            Pattern::Gaussian { radius, .. } => radius,
            Pattern::RaisedCosine { width, .. } => width,
        }
    }

    /// Check the sampled sup-sum tail beyond the support radius.
    pub fn check_wiener(&self, probe_spacing: R, tail_tol: R) -> bool {
        check_wiener(
            |omega| self.eval(omega),
            self.support_radius(),
            probe_spacing,
            tail_tol,
        )
    }
}

const WIENER_MAX_TILES: usize = 10_000;
const WIENER_SAMPLES_PER_TILE: usize = 8;

/// Sampled Wiener-condition check for an arbitrary evaluation map.
///
/// Tiles `[support_radius, inf)` (and its mirror) into intervals of length
/// `probe_spacing`, approximates the sup on each tile by sampling, and sums.
/// Returns `true` iff the accumulated tail stays below `tail_tol`; bails out
/// early once the sum exceeds the tolerance so non-decaying inputs terminate.
pub fn check_wiener<R: Real>(
    eval: impl Fn(R) -> R,
    support_radius: R,
    probe_spacing: R,
    tail_tol: R,
) -> bool {
    assert!(probe_spacing > R::zero(), "probe spacing must be positive");
    let mut sum = R::zero();
    for tile in 0..WIENER_MAX_TILES {
        let lo = support_radius + R::cast(tile as f64) * probe_spacing;
        let mut sup = R::zero();
        for j in 0..=WIENER_SAMPLES_PER_TILE {
            let frac = R::cast(j as f64 / WIENER_SAMPLES_PER_TILE as f64);
            let s = lo + frac * probe_spacing;
            sup = sup.max(eval(s).abs());
            sup = sup.max(eval(-s).abs());
        }
        sum = sum + sup;
        if sum >= tail_tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_ellipse_peak_matches_height() {
        let y = Pattern::half_ellipse(0.5, 1.4);
        assert_eq!(y.eval(0.0), 1.4);
    }

    #[test]
    fn triangle_vanishes_at_support_edge() {
        let y = Pattern::triangle(0.5, 0.9);
        assert_eq!(y.eval(0.5), 0.0);
        assert_eq!(y.eval(-0.5), 0.0);
    }

    #[test]
    fn triangle_is_linear_inside() {
        let y = Pattern::triangle(0.5, 0.9);
        assert_relative_eq!(y.eval(0.25), 0.45, max_relative = 1e-15);
    }

    #[test]
    fn support_radii() {
        assert_eq!(Pattern::triangle(0.5, 1.0).support_radius(), 0.5);
        assert_eq!(Pattern::half_ellipse(0.5, 1.0).support_radius(), 0.5);
        assert_eq!(Pattern::gaussian(1.0, 1.0, 4.0).support_radius(), 4.0);
        assert_eq!(Pattern::raised_cosine(0.7, 1.0).support_radius(), 0.7);
    }

    #[test]
    fn truncated_gaussian_is_continuous_at_boundary() {
        let y = Pattern::gaussian(1.0, 1.0, 4.0);
        assert_eq!(y.eval(4.0), 0.0);
        assert_eq!(y.eval(4.0 + 1e-12), 0.0);
        assert!(y.eval(4.0 - 1e-6) < 1e-8);
        assert!(y.eval(0.0) > 0.999);
    }

    #[test]
    fn compact_kinds_are_zero_outside_support() {
        let kinds = [
            Pattern::half_ellipse(0.5, 1.4),
            Pattern::triangle(0.5, 0.9),
            Pattern::gaussian(1.0, 1.0, 4.0),
            Pattern::raised_cosine(0.6, 1.1),
        ];
        for y in kinds {
            let r = y.support_radius();
            for k in 1..100 {
                let s = r + 0.01 * k as f64;
                assert_eq!(y.eval(s), 0.0);
                assert_eq!(y.eval(-s), 0.0);
            }
        }
    }

    #[test]
    fn builtin_kinds_are_even() {
        let kinds = [
            Pattern::half_ellipse(0.5, 1.4),
            Pattern::triangle(0.5, 0.9),
            Pattern::gaussian(0.8, 1.0, 3.0),
            Pattern::raised_cosine(0.6, 1.1),
        ];
        for y in kinds {
            for k in 0..200 {
                let s = -1.0 + 0.017 * k as f64;
                assert_eq!(y.eval(s), y.eval(-s));
            }
        }
    }

    #[test]
    fn check_wiener_accepts_compact_support() {
        assert!(Pattern::triangle(0.5, 0.9).check_wiener(0.25, 1e-9));
        assert!(Pattern::gaussian(1.0, 1.0, 4.0).check_wiener(0.25, 1e-9));
    }

    #[test]
    fn check_wiener_rejects_constant_stub() {
        let constant = |_s: f64| 1.0;
        assert!(!check_wiener(constant, 0.0, 0.25, 1e3));
    }

    #[test]
    fn triangle_modulus_is_lipschitz() {
        let (w, h) = (0.5, 0.9);
        let y = Pattern::triangle(w, h);
        let lip = h / w;
        let step = 1e-4;
        for k in 0..12_000 {
            let s = -0.6 + step * k as f64;
            let dy = (y.eval(s + step) - y.eval(s)).abs();
            assert!(dy <= lip * step * (1.0 + 1e-12));
        }
    }

    #[test]
    fn half_ellipse_modulus_is_one_half_hoelder() {
        // Sharp constant: |y(a) - y(b)| <= h * sqrt(2 |a-b| / w), attained in
        // the limit at the support edges.
        let (w, h) = (0.5, 1.4);
        let y = Pattern::half_ellipse(w, h);
        let step = 1e-4;
        for k in 0..12_000 {
            let s = -0.6 + step * k as f64;
            let dy = (y.eval(s + step) - y.eval(s)).abs();
            assert!(dy <= h * (2.0 * step / w).sqrt() * (1.0 + 1e-12));
        }
    }
}
