//! Discovery and geometric approximation of *insensitivity regions* — connected
//! subsets of a minimization problem's domain on which the objective stays below
//! a small cutoff (informally: lowlands).
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`problems`] — objective functions with bounded domains, evaluation
//!    accounting, and ground-truth descriptions of the benchmark suite.
//! 2. [`engines`] — the evolutionary workhorses: a CMA-ES with configurable
//!    stop conditions and a simple generational EA used as a root-level explorer.
//! 3. [`hms`] / [`nea2`] — the two global strategies. `hms` runs a two-level
//!    hierarchic memetic strategy whose CMA-ES leaves double as density models
//!    for cluster extraction; `nea2` is the sample/cluster/restart reference.
//! 4. [`clusters`] — cluster post-processing: hill-valley merging, resizing and
//!    a spread-oriented EA that pads clusters into usable point sets.
//! 5. [`surrogates`] — local models fitted per cluster: a simplicial linear
//!    interpolant, quadratic B-spline projections (least-squares and
//!    gradient-aware) and ordinary Kriging.
//! 6. [`regions`] — level-set extraction of the fitted models plus the metrics
//!    used to judge them (Hausdorff distance, coverage ratios).
//! 7. [`harness`] — experiment configuration, the end-to-end pipeline, report
//!    and artifact writing.
//! 8. [`verify`] — the self-check suite behind `regionmap verify` and the
//!    acceptance tests.

pub mod clusters;
pub mod engines;
pub mod error;
pub mod harness;
pub mod hms;
pub mod nea2;
pub mod problems;
pub mod regions;
pub mod surrogates;
pub mod verify;

pub use error::{Error, Result};
