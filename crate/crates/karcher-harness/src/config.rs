//! Experiment configuration from the command line or a TOML file.
//!
//! Both sources fill the same [`Settings`]; command-line values override file
//! values, and [`Settings::resolve`] validates the result.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use karcher_core::manifold::ManifoldKind;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("no experiment given")]
    MissingExperiment,
    #[error("depths must look like `a..b` with a <= b, got `{0}`")]
    Depths(String),
    #[error("unknown manifold `{0}`")]
    Manifold(String),
    #[error("experiment `{experiment}` does not support manifold `{manifold}`")]
    Unsupported {
        experiment: &'static str,
        manifold: &'static str,
    },
    #[error("tolerance must be positive and finite, got {0}")]
    Tolerance(f64),
    #[error("invalid config file: {0}")]
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Distortion,
    Interpolation,
    Poisson,
    DecCounterexample,
    Heatflow,
    MeanCurvature,
    Delaunay,
    Hodge,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Distortion => "distortion",
            Experiment::Interpolation => "interpolation",
            Experiment::Poisson => "poisson",
            Experiment::DecCounterexample => "dec-counterexample",
            Experiment::Heatflow => "heatflow",
            Experiment::MeanCurvature => "mean-curvature",
            Experiment::Delaunay => "delaunay",
            Experiment::Hodge => "hodge",
        }
    }
}

/// Vertex sets for the Delaunay experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Octahedron,
    Tetrahedron,
    Antipodal,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Octahedron, Preset::Tetrahedron, Preset::Antipodal];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Octahedron => "octahedron",
            Preset::Tetrahedron => "tetrahedron",
            Preset::Antipodal => "antipodal",
        }
    }
}

/// An inclusive range of refinement depths, written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Depths {
    pub first: usize,
    pub last: usize,
}

impl Depths {
    pub const fn new(first: usize, last: usize) -> Self {
        Self { first, last }
    }

    pub fn levels(self) -> Vec<usize> {
        (self.first..=self.last).collect()
    }
}

impl FromStr for Depths {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::Depths(s.to_string());
        let (a, b) = s.trim().split_once("..").ok_or_else(bad)?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let first: usize = a.trim().parse().map_err(|_| bad())?;
        let last: usize = b.trim().parse().map_err(|_| bad())?;
        if first > last {
            return Err(bad());
        }
        Ok(Self { first, last })
    }
}

impl fmt::Display for Depths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

/// Tolerance of the Karcher mean iteration used by the experiments.
pub const DEFAULT_TOL: f64 = 1e-14;

/// A validated experiment configuration.  `manifold` and `depths` left unset
/// select the experiment's own defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub manifold: Option<ManifoldKind>,
    pub depths: Option<Depths>,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            manifold: None,
            depths: None,
            tol: DEFAULT_TOL,
            seed: 0,
            out: None,
            preset: None,
        }
    }

    pub fn with_manifold(mut self, kind: ManifoldKind) -> Self {
        self.manifold = Some(kind);
        self
    }

    pub fn with_depths(mut self, first: usize, last: usize) -> Self {
        self.depths = Some(Depths::new(first, last));
        self
    }

    /// The configured manifold, or `default`; errors unless it is one of
    /// `supported`.
    pub fn manifold_or(
        &self,
        default: ManifoldKind,
        supported: &[ManifoldKind],
    ) -> Result<ManifoldKind, ConfigError> {
        let kind = self.manifold.unwrap_or(default);
        if supported.contains(&kind) {
            Ok(kind)
        } else {
            Err(ConfigError::Unsupported {
                experiment: self.experiment.name(),
                manifold: kind.name(),
            })
        }
    }

    pub fn depths_or(&self, first: usize, last: usize) -> Depths {
        self.depths.unwrap_or(Depths::new(first, last))
    }

    /// `key = value` lines echoed into the CSV.
    pub fn echo(&self) -> Vec<String> {
        vec![
            format!("experiment = {}", self.experiment.name()),
            format!(
                "manifold = {}",
                self.manifold.map_or("default", ManifoldKind::name)
            ),
            format!(
                "depths = {}",
                self.depths.map_or("default".to_string(), |d| d.to_string())
            ),
            format!("tol = {:e}", self.tol),
            format!("seed = {}", self.seed),
            format!("preset = {}", self.preset.map_or("all", Preset::name)),
        ]
    }
}

/// Unvalidated settings; every field is optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub experiment: Option<Experiment>,
    pub manifold: Option<String>,
    pub depths: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub preset: Option<Preset>,
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::File(e.to_string()))
    }

    /// Fields set in `over` replace those of `self`.
    pub fn merge(self, over: Settings) -> Settings {
        Settings {
            experiment: over.experiment.or(self.experiment),
            manifold: over.manifold.or(self.manifold),
            depths: over.depths.or(self.depths),
            tol: over.tol.or(self.tol),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            preset: over.preset.or(self.preset),
        }
    }

    pub fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        let experiment = self.experiment.ok_or(ConfigError::MissingExperiment)?;
        let manifold = self
            .manifold
            .map(|m| ManifoldKind::parse(&m).ok_or(ConfigError::Manifold(m)))
            .transpose()?;
        let depths = self.depths.map(|d| d.parse()).transpose()?;
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(ConfigError::Tolerance(tol));
        }
        Ok(ExperimentConfig {
            experiment,
            manifold,
            depths,
            tol,
            seed: self.seed.unwrap_or(0),
            out: self.out,
            preset: self.preset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_ranges() {
        assert_eq!("1..5".parse::<Depths>().unwrap(), Depths::new(1, 5));
        assert_eq!("2..=3".parse::<Depths>().unwrap().levels(), vec![2, 3]);
        assert!("5..1".parse::<Depths>().is_err());
        assert!("x".parse::<Depths>().is_err());
    }

    #[test]
    fn file_settings_are_overridden_by_flags() {
        let file = Settings::from_toml(
            "experiment = \"poisson\"\nmanifold = \"sphere\"\ndepths = \"1..3\"\nseed = 4\n",
        )
        .unwrap();
        let flags = Settings {
            depths: Some("2..4".into()),
            ..Settings::default()
        };
        let cfg = file.merge(flags).resolve().unwrap();
        assert_eq!(cfg.experiment, Experiment::Poisson);
        assert_eq!(cfg.manifold, Some(ManifoldKind::Sphere));
        assert_eq!(cfg.depths, Some(Depths::new(2, 4)));
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.tol, DEFAULT_TOL);
    }

    #[test]
    fn bad_settings() {
        assert_eq!(
            Settings::default().resolve(),
            Err(ConfigError::MissingExperiment)
        );
        assert!(Settings::from_toml("colour = 3").is_err());
        let s = Settings {
            experiment: Some(Experiment::Hodge),
            manifold: Some("klein".into()),
            ..Settings::default()
        };
        assert_eq!(s.resolve(), Err(ConfigError::Manifold("klein".into())));
        let cfg =
            ExperimentConfig::new(Experiment::Poisson).with_manifold(ManifoldKind::Hyperbolic);
        assert!(cfg
            .manifold_or(ManifoldKind::Euclidean, &[ManifoldKind::Euclidean])
            .is_err());
    }
}
