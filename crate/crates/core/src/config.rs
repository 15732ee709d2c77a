//! Problem configuration files: JSON descriptions of the grid, patterns,
//! ground-truth spikes, noise, and solver settings.
//!
//! Config values are plain `f64`; conversion into the generic domain types
//! happens when a run is assembled.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::FwConfig;
use crate::error::{Error, Result};
use crate::measures::{SparseMeasure, Spike};
use crate::operators::Grid;
use crate::patterns::Pattern;
use crate::solver::SolverConfig;
use crate::synthesis::{NoiseSpec, ScenarioSpec};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternConfig {
    HalfEllipse { width: f64, height: f64 },
    Triangle { width: f64, height: f64 },
    Gaussian { sigma: f64, height: f64, radius: f64 },
    RaisedCosine { width: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeConfig {
    pub position: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { sigma: 0.0, seed: 0 }
    }
}

/// Solver settings; omitted fields take the library defaults
/// (`step = 1/n`, `loc_tol = 1e-4 * grid step`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    pub alpha: f64,
    pub step: Option<f64>,
    pub max_outer_iters: Option<usize>,
    pub fp_tol: Option<f64>,
    pub feas_tol: Option<f64>,
    pub scan_refine: Option<usize>,
    pub loc_tol: Option<f64>,
    pub inner_max_iters: Option<usize>,
    pub inner_tol: Option<f64>,
    pub acceleration: Option<bool>,
}

/// Frank-Wolfe baseline settings; omitted fields take the library defaults.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BaselineSettings {
    pub max_spikes_per_channel: Option<usize>,
    pub max_iters: Option<usize>,
    pub cert_tol: Option<f64>,
    pub fista_max_iters: Option<usize>,
    pub fista_tol: Option<f64>,
}

/// One problem file: everything `generate`, `solve`, and the baselines need.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub grid: GridConfig,
    pub patterns: Vec<PatternConfig>,
    /// Ground-truth spikes per channel (used by `generate`).
    #[serde(default)]
    pub spikes: Vec<Vec<SpikeConfig>>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub solver: SolverSettings,
    #[serde(default)]
    pub baseline: BaselineSettings,
}

impl ProblemConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::InvalidConfig(format!("{}: {e}", path.display()))
        })
    }

    pub fn to_path(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    /// The bundled two-pattern separation preset.
    pub fn figure1() -> Self {
        ProblemConfig {
            grid: GridConfig {
                start: 0.0,
                step: 0.01,
                count: 701,
            },
            patterns: vec![
                PatternConfig::HalfEllipse {
                    width: 0.5,
                    height: 1.0,
                },
                PatternConfig::Triangle {
                    width: 0.5,
                    height: 1.0,
                },
            ],
            spikes: vec![
                vec![
                    SpikeConfig {
                        position: 1.0,
                        amplitude: 1.4,
                    },
                    SpikeConfig {
                        position: 4.0,
                        amplitude: 1.0,
                    },
                ],
                vec![
                    SpikeConfig {
                        position: 2.7,
                        amplitude: 0.9,
                    },
                    SpikeConfig {
                        position: 5.9,
                        amplitude: 1.2,
                    },
                ],
            ],
            noise: NoiseConfig::default(),
            solver: SolverSettings {
                alpha: 0.05,
                ..SolverSettings::default()
            },
            baseline: BaselineSettings::default(),
        }
    }

    pub fn grid(&self) -> Result<Grid<f64>> {
        Grid::new(self.grid.start, self.grid.step, self.grid.count)
    }

    pub fn patterns(&self) -> Result<Vec<Pattern<f64>>> {
        if self.patterns.is_empty() {
            return Err(Error::InvalidConfig("patterns must not be empty".into()));
        }
        self.patterns.iter().map(|p| p.build()).collect()
    }

    /// Resolve the solver settings against the grid and channel count,
    /// baking in every default that will affect the run.
    pub fn solver_config(&self) -> Result<SolverConfig<f64>> {
        let n = self.patterns.len();
        let grid = self.grid()?;
        let mut cfg = SolverConfig::new(self.solver.alpha, n, grid.step());
        if let Some(step) = self.solver.step {
            cfg.step = step;
        }
        if let Some(v) = self.solver.max_outer_iters {
            cfg.max_outer_iters = v;
        }
        if let Some(v) = self.solver.fp_tol {
            cfg.fp_tol = v;
        }
        if let Some(v) = self.solver.feas_tol {
            cfg.feas_tol = v;
        }
        if let Some(v) = self.solver.scan_refine {
            cfg.scan_refine = v;
        }
        if let Some(v) = self.solver.loc_tol {
            cfg.loc_tol = v;
        }
        if let Some(v) = self.solver.inner_max_iters {
            cfg.inner_max_iters = v;
        }
        if let Some(v) = self.solver.inner_tol {
            cfg.inner_tol = v;
        }
        if let Some(v) = self.solver.acceleration {
            cfg.acceleration = v;
        }
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Resolve the Frank-Wolfe settings.
    pub fn fw_config(&self) -> Result<FwConfig<f64>> {
        let grid = self.grid()?;
        let mut cfg = FwConfig::new(grid.step());
        if let Some(v) = self.baseline.max_spikes_per_channel {
            cfg.max_spikes_per_channel = v;
        }
        if let Some(v) = self.baseline.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.baseline.cert_tol {
            cfg.cert_tol = v;
        }
        if let Some(v) = self.solver.loc_tol {
            cfg.loc_tol = v;
        }
        if let Some(v) = self.solver.scan_refine {
            cfg.scan_refine = v;
        }
        Ok(cfg)
    }

    /// Assemble the synthesis scenario (grid, patterns, truth, noise).
    pub fn scenario(&self) -> Result<ScenarioSpec<f64>> {
        let grid = self.grid()?;
        let patterns = self.patterns()?;
        if self.spikes.len() != patterns.len() {
            return Err(Error::InvalidConfig(format!(
                "config has {} pattern(s) but {} spike channel(s)",
                patterns.len(),
                self.spikes.len()
            )));
        }
        let truth = self
            .spikes
            .iter()
            .map(|channel| {
                SparseMeasure::new(
                    channel
                        .iter()
                        .map(|s| Spike::new(s.position, s.amplitude))
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioSpec {
            grid,
            patterns,
            truth,
            noise: NoiseSpec {
                sigma: self.noise.sigma,
                seed: self.noise.seed,
            },
        })
    }
}

impl PatternConfig {
    pub fn build(&self) -> Result<Pattern<f64>> {
        let positive = |name: &str, v: f64| -> Result<f64> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidConfig(format!(
                    "pattern field `{name}` must be positive and finite, got {v}"
                )))
            }
        };
        Ok(match *self {
            PatternConfig::HalfEllipse { width, height } => {
                Pattern::half_ellipse(positive("width", width)?, height)
            }
            PatternConfig::Triangle { width, height } => {
                Pattern::triangle(positive("width", width)?, height)
            }
            PatternConfig::Gaussian {
                sigma,
                height,
                radius,
            } => Pattern::gaussian(
                positive("sigma", sigma)?,
                height,
                positive("radius", radius)?,
            ),
            PatternConfig::RaisedCosine { width, height } => {
                Pattern::raised_cosine(positive("width", width)?, height)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_preset_roundtrips_through_json() {
        let config = ProblemConfig::figure1();
        let text = serde_json::to_string(&config).unwrap();
        let back: ProblemConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.solver.alpha, 0.05);
        assert_eq!(back.patterns.len(), 2);
        assert_eq!(back.spikes[1][1].position, 5.9);
    }

    #[test]
    fn unknown_fields_name_the_offender() {
        let text = r#"{
            "grid": {"start": 0.0, "step": 0.1, "count": 16, "stepp": 2},
            "patterns": [],
            "solver": {"alpha": 0.1}
        }"#;
        let err = serde_json::from_str::<ProblemConfig>(text).unwrap_err();
        assert!(err.to_string().contains("stepp"), "{err}");
    }

    #[test]
    fn pattern_kind_tags_parse() {
        let text = r#"{"kind": "half_ellipse", "width": 0.5, "height": 1.4}"#;
        let config: PatternConfig = serde_json::from_str(text).unwrap();
        let pattern = config.build().unwrap();
        assert_eq!(pattern.eval(0.0), 1.4);
    }

    #[test]
    fn solver_defaults_resolve_against_grid_and_channels() {
        let config = ProblemConfig::figure1();
        let cfg = config.solver_config().unwrap();
        assert_eq!(cfg.step, 0.5);
        assert_eq!(cfg.loc_tol, 0.01 * 1e-4);
        assert!(cfg.acceleration);
    }

    #[test]
    fn overlong_step_is_a_config_error() {
        let mut config = ProblemConfig::figure1();
        config.solver.step = Some(0.75);
        assert!(matches!(
            config.solver_config(),
            Err(Error::InvalidConfig(_))
        ));
    }
}
