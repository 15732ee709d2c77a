//! Sparse spike trains standing in for finite Radon measures.
//!
//! A measure is kept in canonical form: spikes sorted by strictly increasing
//! position, duplicate positions merged, zero amplitudes dropped. The total
//! variation norm of such a spike train is the `l1` norm of its amplitudes.

use crate::error::{Error, Result};
use crate::real::Real;

/// One signed Dirac spike: a point mass `amplitude * delta_position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike<R> {
    pub position: R,
    pub amplitude: R,
}

impl<R: Real> Spike<R> {
    pub fn new(position: R, amplitude: R) -> Self {
        Spike {
            position,
            amplitude,
        }
    }
}

/// A finite signed measure represented as a canonical spike train.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMeasure<R> {
    spikes: Vec<Spike<R>>,
}

impl<R: Real> SparseMeasure<R> {
    /// The zero measure.
    pub fn empty() -> Self {
        SparseMeasure { spikes: Vec::new() }
    }

    /// Build a canonical measure from an arbitrary spike list.
    ///
    /// Sorts by position, merges spikes at bitwise-equal positions by summing
    /// amplitudes, and drops exact zeros. Near-duplicate positions are kept
    /// distinct so the operation stays idempotent under perturbation.
    pub fn new(spikes: Vec<Spike<R>>) -> Result<Self> {
        for s in &spikes {
            if !s.position.is_finite() {
                return Err(Error::NonFiniteInput("spike position"));
            }
            if !s.amplitude.is_finite() {
                return Err(Error::NonFiniteInput("spike amplitude"));
            }
        }
        let mut spikes = spikes;
        spikes.sort_by(|a, b| {
            a.position
                .partial_cmp(&b.position)
                .expect("positions are finite")
        });
        let mut canonical: Vec<Spike<R>> = Vec::with_capacity(spikes.len());
        for s in spikes {
            match canonical.last_mut() {
                Some(last) if last.position == s.position => {
                    last.amplitude = last.amplitude + s.amplitude;
                }
                _ => canonical.push(s),
            }
        }
        canonical.retain(|s| s.amplitude != R::zero());
        Ok(SparseMeasure { spikes: canonical })
    }

    pub fn spikes(&self) -> &[Spike<R>] {
        &self.spikes
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }

    /// Total variation norm: the sum of absolute amplitudes.
    pub fn tv_norm(&self) -> R {
        self.spikes.iter().map(|s| s.amplitude.abs()).sum()
    }

    /// Measure addition: concatenate spike lists and re-canonicalize.
    pub fn add(&self, other: &Self) -> Self {
        let mut spikes = self.spikes.clone();
        spikes.extend_from_slice(&other.spikes);
        SparseMeasure::new(spikes).expect("canonical inputs are finite")
    }

    /// Scale every amplitude by `c`.
    pub fn scale(&self, c: R) -> Self {
        let spikes = self
            .spikes
            .iter()
            .map(|s| Spike::new(s.position, s.amplitude * c))
            .collect();
        SparseMeasure::new(spikes).expect("canonical inputs are finite")
    }
}

/// Canonicalize a raw spike list into a measure (sort, merge, drop zeros).
pub fn normalize<R: Real>(spikes: &[Spike<R>]) -> Result<SparseMeasure<R>> {
    SparseMeasure::new(spikes.to_vec())
}

/// Total variation norm of a measure.
pub fn tv_norm<R: Real>(measure: &SparseMeasure<R>) -> R {
    measure.tv_norm()
}
