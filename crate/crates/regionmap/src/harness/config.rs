//! Experiment configuration: defaults, file loading, and per-module
//! parameter overrides. Precedence is CLI flags over config file over the
//! defaults below; the CLI layer applies its flags onto whatever this module
//! loaded.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clusters::SpreadParams;
use crate::engines::SeaParams;
use crate::error::{Error, Result};
use crate::hms::HmsConfig;
use crate::nea2::Nea2Config;
use crate::problems::Case;
use crate::surrogates::{GridSpec, Method};

/// Which global phase drives the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Hierarchic memetic strategy with adaptive leaf demes.
    Hms,
    /// Sample / nearest-better-cluster / restart pipeline.
    Nea2,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Hms => "hms",
            Algorithm::Nea2 => "nea2",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hms" => Ok(Algorithm::Hms),
            "nea2" => Ok(Algorithm::Nea2),
            other => Err(Error::Config(format!(
                "unknown algorithm {other:?} (expected hms or nea2)"
            ))),
        }
    }
}

/// Optional overrides of the hierarchic strategy's parameters; unset fields
/// keep the strategy defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmsOverrides {
    pub metaepoch_length: Option<usize>,
    pub leaf_sigma0: Option<f64>,
    pub leaf_lambda: Option<usize>,
    pub sprout_min_distance: Option<f64>,
    pub sprout_max_fitness: Option<f64>,
    pub root_population: Option<usize>,
    pub root_mutation_std: Option<f64>,
}

impl HmsOverrides {
    pub fn build(&self) -> HmsConfig {
        let mut config = HmsConfig::default();
        let mut sea = SeaParams::default();
        if let Some(v) = self.metaepoch_length {
            config.metaepoch_length = v;
        }
        if let Some(v) = self.leaf_sigma0 {
            config.leaf_sigma0 = v;
        }
        if let Some(v) = self.leaf_lambda {
            config.leaf_lambda = Some(v);
        }
        if let Some(v) = self.sprout_min_distance {
            config.sprout_min_distance = v;
        }
        if let Some(v) = self.sprout_max_fitness {
            config.sprout_max_fitness = v;
        }
        if let Some(v) = self.root_population {
            sea.population_size = v;
        }
        if let Some(v) = self.root_mutation_std {
            sea.mutation_std = v;
        }
        config.sea = sea;
        config
    }
}

/// Optional overrides of the restart pipeline's parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nea2Overrides {
    pub sample_size: Option<usize>,
    /// Mean-edge-length cutting factor of the nearest-better graph.
    pub phi: Option<f64>,
    /// Incoming-median cutting factor.
    pub b: Option<f64>,
    pub min_incoming: Option<usize>,
    pub sigma0: Option<f64>,
    pub lambda: Option<usize>,
}

impl Nea2Overrides {
    pub fn build(&self) -> Nea2Config {
        let mut config = Nea2Config::default();
        if let Some(v) = self.sample_size {
            config.sample_size = Some(v);
        }
        if let Some(v) = self.phi {
            config.nbc.phi = v;
        }
        if let Some(v) = self.b {
            config.nbc.b = v;
        }
        if let Some(v) = self.min_incoming {
            config.nbc.min_incoming = v;
        }
        if let Some(v) = self.sigma0 {
            config.sigma0 = v;
        }
        if let Some(v) = self.lambda {
            config.lambda = Some(v);
        }
        config
    }
}

/// Optional overrides of the spread EA that thickens reduced clusters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpreadOverrides {
    pub epochs: Option<usize>,
    pub alpha: Option<f64>,
}

impl SpreadOverrides {
    pub fn build(&self) -> SpreadParams {
        let mut params = SpreadParams::default();
        if let Some(v) = self.epochs {
            params.epochs = v;
        }
        if let Some(v) = self.alpha {
            params.alpha = v;
        }
        params
    }
}

/// Optional overrides of the spline fitting grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOverrides {
    pub cells: Option<usize>,
    pub inflation: Option<f64>,
}

impl GridOverrides {
    pub fn build(&self) -> GridSpec {
        let mut spec = GridSpec::default();
        spec.cells = self.cells;
        if let Some(v) = self.inflation {
            spec.inflation = v;
        }
        spec
    }
}

/// Full description of one experiment: the benchmark case, the global
/// phase, its budget, how many seeded repeats to run, which surrogate
/// methods to fit, and every tunable of the intermediate stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: Case,
    pub algorithm: Algorithm,
    /// Evaluation budget of the global phase.
    pub budget: u64,
    pub repeats: usize,
    /// Base seed; run `i` uses `seed + i`.
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Sublevel offset defining a region approximation.
    pub epsilon: f64,
    /// Concurrent runs (default: machine parallelism).
    pub jobs: Option<usize>,
    /// Region lattice step (default: the case's ground-truth scan step).
    pub grid_step: Option<f64>,
    /// Interior points of the basin-sharing test used for merging.
    pub merge_interior_points: usize,
    /// Usable cluster size band.
    pub resize_min: usize,
    pub resize_max: usize,
    pub hms: HmsOverrides,
    pub nea2: Nea2Overrides,
    pub spread: SpreadOverrides,
    pub grid: GridOverrides,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            case: Case::I,
            algorithm: Algorithm::Hms,
            budget: 500,
            repeats: 10,
            seed: 1,
            methods: Method::ALL.to_vec(),
            epsilon: 0.1,
            jobs: None,
            grid_step: None,
            merge_interior_points: 3,
            resize_min: 10,
            resize_max: 100,
            hms: HmsOverrides::default(),
            nea2: Nea2Overrides::default(),
            spread: SpreadOverrides::default(),
            grid: GridOverrides::default(),
        }
    }
}

impl ExperimentConfig {
    /// Load a JSON config file. Missing fields take defaults; unknown
    /// fields are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.budget == 0 {
            return fail("budget must be positive".into());
        }
        if self.repeats == 0 {
            return fail("repeats must be at least 1".into());
        }
        if self.methods.is_empty() {
            return fail("at least one approximation method is required".into());
        }
        let mut seen = Vec::new();
        for m in &self.methods {
            if seen.contains(m) {
                return fail(format!("method {m} listed twice"));
            }
            seen.push(*m);
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if let Some(step) = self.grid_step {
            if !(step > 0.0) {
                return fail(format!("grid step must be positive, got {step}"));
            }
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return fail("jobs must be at least 1".into());
            }
        }
        if self.merge_interior_points == 0 {
            return fail("merge test needs at least one interior point".into());
        }
        if self.resize_min == 0 || self.resize_min > self.resize_max {
            return fail(format!(
                "resize band [{}, {}] is not a valid size range",
                self.resize_min, self.resize_max
            ));
        }
        if let Some(alpha) = self.spread.alpha {
            if !(0.0..=1.0).contains(&alpha) {
                return fail(format!("spread alpha must lie in [0, 1], got {alpha}"));
            }
        }
        Ok(())
    }

    /// Number of concurrent runs: explicit setting, then the
    /// `REGIONMAP_JOBS` environment variable, then machine parallelism.
    pub fn effective_jobs(&self) -> usize {
        if let Some(jobs) = self.jobs {
            return jobs.max(1);
        }
        if let Ok(var) = std::env::var("REGIONMAP_JOBS") {
            if let Ok(jobs) = var.trim().parse::<usize>() {
                if jobs >= 1 {
                    return jobs;
                }
            }
        }
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_pass_validation() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn invalid_fields_are_rejected() {
        let mut c = ExperimentConfig::default();
        c.repeats = 0;
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::default();
        c.budget = 0;
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::default();
        c.methods = vec![Method::Kriging, Method::Kriging];
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::default();
        c.methods.clear();
        assert!(c.validate().is_err());

        let mut c = ExperimentConfig::default();
        c.resize_min = 50;
        c.resize_max = 10;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let mut config = ExperimentConfig::default();
        config.case = Case::II;
        config.algorithm = Algorithm::Nea2;
        config.hms.sprout_min_distance = Some(2.0);
        config.nea2.phi = Some(1.5);
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn file_with_unknown_field_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"budgets": 100}"#).unwrap();
        let err = ExperimentConfig::from_file(&path).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn partial_file_keeps_defaults_for_the_rest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(
            &path,
            r#"{"case": "II", "algorithm": "nea2", "budget": 2000, "methods": ["kriging"]}"#,
        )
        .unwrap();
        let config = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(config.case, Case::II);
        assert_eq!(config.algorithm, Algorithm::Nea2);
        assert_eq!(config.budget, 2000);
        assert_eq!(config.methods, vec![Method::Kriging]);
        assert_eq!(config.repeats, ExperimentConfig::default().repeats);
        assert_eq!(config.epsilon, 0.1);
    }

    #[test]
    fn overrides_apply_onto_module_defaults() {
        let mut overrides = HmsOverrides::default();
        overrides.sprout_min_distance = Some(2.5);
        let config = overrides.build();
        assert_eq!(config.sprout_min_distance, 2.5);
        assert_eq!(
            config.metaepoch_length,
            HmsConfig::default().metaepoch_length
        );

        let mut overrides = Nea2Overrides::default();
        overrides.b = Some(4.0);
        let config = overrides.build();
        assert_eq!(config.nbc.b, 4.0);
        assert_eq!(config.nbc.phi, Nea2Config::default().nbc.phi);
    }
}
