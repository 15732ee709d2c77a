//! Ground-truth instance generation: spike trains convolved with patterns,
//! mixed, and optionally corrupted by seeded Gaussian noise.

use crate::error::{Error, Result};
use crate::measures::{SparseMeasure, Spike};
use crate::operators::{forward, mix, Grid, GridSignal, MultiChannelSignal};
use crate::patterns::Pattern;
use crate::real::Real;
use crate::rng::PortableRng;

/// Additive noise description. The seed fully determines the realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec<R> {
    pub sigma: R,
    pub seed: u64,
}

impl<R: Real> Default for NoiseSpec<R> {
    fn default() -> Self {
        NoiseSpec {
            sigma: R::zero(),
            seed: 0,
        }
    }
}

/// Full description of a synthetic instance.
#[derive(Debug, Clone)]
pub struct ScenarioSpec<R> {
    pub grid: Grid<R>,
    pub patterns: Vec<Pattern<R>>,
    pub truth: Vec<SparseMeasure<R>>,
    pub noise: NoiseSpec<R>,
}

/// Generated instance: observed mixture, ground truth, and clean channels.
#[derive(Debug, Clone)]
pub struct Scenario<R> {
    pub b: GridSignal<R>,
    pub truth: Vec<SparseMeasure<R>>,
    pub clean: MultiChannelSignal<R>,
}

impl<R: Real> ScenarioSpec<R> {
    /// The two-pattern separation preset: half-ellipse bumps of heights 1.4
    /// and 1.0 centered at 1 and 4, triangles of heights 0.9 and 1.2 peaking
    /// at 2.7 and 5.9, on `[0, 7]` with step 0.01.
    pub fn figure1() -> Self {
        let grid = Grid::new(R::zero(), R::cast(0.01), 701).expect("valid preset grid");
        let patterns = vec![
            Pattern::half_ellipse(R::half(), R::one()),
            Pattern::triangle(R::half(), R::one()),
        ];
        let truth = vec![
            SparseMeasure::new(vec![
                Spike::new(R::one(), R::cast(1.4)),
                Spike::new(R::cast(4.0), R::one()),
            ])
            .expect("finite preset spikes"),
            SparseMeasure::new(vec![
                Spike::new(R::cast(2.7), R::cast(0.9)),
                Spike::new(R::cast(5.9), R::cast(1.2)),
            ])
            .expect("finite preset spikes"),
        ];
        ScenarioSpec {
            grid,
            patterns,
            truth,
            noise: NoiseSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.patterns.is_empty() {
            return Err(Error::SpecViolation("scenario needs at least one pattern".into()));
        }
        if self.patterns.len() != self.truth.len() {
            return Err(Error::SpecViolation(format!(
                "{} patterns but {} spike channels",
                self.patterns.len(),
                self.truth.len()
            )));
        }
        if self.noise.sigma < R::zero() {
            return Err(Error::SpecViolation("noise sigma must be nonnegative".into()));
        }
        for (i, (pattern, measure)) in self.patterns.iter().zip(&self.truth).enumerate() {
            let radius = pattern.support_radius();
            let lo = self.grid.start() + radius;
            let hi = self.grid.end() - radius;
            for spike in measure.spikes() {
                if spike.position < lo || spike.position > hi {
                    return Err(Error::SpecViolation(format!(
                        "channel {i} spike at {} leaves the truncation-free window [{}, {}]",
                        spike.position, lo, hi
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Synthesize the instance: clean channels, mixture, and seeded noise.
pub fn generate<R: Real>(spec: &ScenarioSpec<R>) -> Result<Scenario<R>> {
    spec.validate()?;
    let channels: Vec<GridSignal<R>> = spec
        .patterns
        .iter()
        .zip(&spec.truth)
        .map(|(pattern, measure)| forward(measure, pattern, &spec.grid))
        .collect();
    let clean = MultiChannelSignal::new(channels)?;
    let mut b = mix(&clean);
    if spec.noise.sigma > R::zero() {
        let mut rng = PortableRng::new(spec.noise.seed);
        for v in b.values_mut() {
            *v = *v + spec.noise.sigma * R::cast(rng.next_gaussian());
        }
    }
    Ok(Scenario {
        b,
        truth: spec.truth.clone(),
        clean,
    })
}
