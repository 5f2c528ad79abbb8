//! Evolutionary engines: a CMA-ES with pluggable stop conditions and a plain
//! generational EA used as the exploratory root of the hierarchic strategy.

pub mod cma;
pub mod sea;

pub use cma::{CmaParams, CmaState, GaussianSampler, StepOutcome};
pub use sea::{EpochOutcome, SeaParams, SeaState};

use serde::{Deserialize, Serialize};

/// Why an engine run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The population-mean objective stayed within tolerance over the window.
    Stagnation,
    /// The step size grew from one iteration to the next (after warm-up).
    SigmaIncrease,
    /// The best objective value reached the configured target.
    TargetFitness,
    /// The evaluation budget ran out.
    BudgetExhausted,
}

/// Stagnation detector: stop when the spread (max minus min) of the
/// population-mean objective over the last `window` completed iterations is
/// at most `tolerance`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Stagnation {
    pub tolerance: f64,
    pub window: usize,
}

impl Default for Stagnation {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            window: 3,
        }
    }
}

/// Step-size growth detector: stop as soon as sigma increases between
/// consecutive iterations, ignoring the first `warmup` iterations where the
/// adaptation is still settling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaIncrease {
    pub warmup: usize,
}

impl Default for SigmaIncrease {
    fn default() -> Self {
        Self { warmup: 5 }
    }
}

/// Stop-condition configuration. Every check is opt-in; the budget check is
/// always active. Checks fire in the order: stagnation, sigma increase,
/// target fitness, budget.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StopSpec {
    pub stagnation: Option<Stagnation>,
    pub sigma_increase: Option<SigmaIncrease>,
    pub target_fitness: Option<f64>,
}

impl StopSpec {
    /// Configuration used by leaf demes of the hierarchic strategy:
    /// stagnation plus the sigma-increase trigger.
    pub fn leaf_defaults() -> Self {
        Self {
            stagnation: Some(Stagnation::default()),
            sigma_increase: Some(SigmaIncrease::default()),
            target_fitness: None,
        }
    }

    /// Configuration used by the restart pipeline's local searches:
    /// stagnation only.
    pub fn stagnation_only() -> Self {
        Self {
            stagnation: Some(Stagnation::default()),
            sigma_increase: None,
            target_fitness: None,
        }
    }
}
