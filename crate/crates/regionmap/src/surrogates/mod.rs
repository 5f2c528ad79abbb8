//! Local surrogate models fitted per cluster: a simplicial interpolant over
//! the cluster's points projected onto quadratic B-splines (L² or H¹), or an
//! ordinary-Kriging interpolant. Each surrogate carries the box it is
//! trusted on; level sets are extracted only inside that box.

pub mod bspline;
pub mod delaunay;
pub mod kriging;

use log::warn;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::clusters::Cluster;
use crate::error::{Error, Result};
use crate::problems::{Bounds, Point};

pub use bspline::{project, BsplineModel, Projection};
pub use delaunay::{triangulate, SimplicialInterpolant};
pub use kriging::KrigingModel;

/// Surrogate construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Spline fit minimizing the L² error of the interpolant.
    L2,
    /// Spline fit minimizing the H¹ (value + gradient) error.
    H1,
    /// Ordinary Kriging on the raw points.
    Kriging,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::L2, Method::H1, Method::Kriging];

    pub fn name(self) -> &'static str {
        match self {
            Method::L2 => "l2",
            Method::H1 => "h1",
            Method::Kriging => "kriging",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(Method::L2),
            "h1" => Ok(Method::H1),
            "kriging" => Ok(Method::Kriging),
            other => Err(Error::Config(format!(
                "unknown surrogate method {other:?} (expected l2, h1, or kriging)"
            ))),
        }
    }
}

/// Spline grid controls. `cells` overrides the per-axis resolution; the
/// default keeps system sizes small: 8 cells per axis in 2D, 4 in 4D and up.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells: Option<usize>,
    /// Fraction of the cluster's extent added on each side of its bounding
    /// box to form the fitting domain.
    pub inflation: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            cells: None,
            inflation: 0.1,
        }
    }
}

impl GridSpec {
    pub fn cells_for(&self, dim: usize) -> usize {
        self.cells.unwrap_or(if dim >= 4 { 4 } else { 8 })
    }
}

/// The fitted model behind a [`Surrogate`].
#[derive(Debug)]
pub enum SurrogateModel {
    Spline(BsplineModel),
    Kriging(KrigingModel),
}

/// A cluster's fitted surrogate together with the box it is valid on.
#[derive(Debug)]
pub struct Surrogate {
    /// Method that was requested.
    pub method: Method,
    /// True when a spline fit failed and the model fell back to Kriging.
    pub downgraded: bool,
    /// Fitting box: the cluster's inflated bounding box clipped to the
    /// problem domain.
    pub domain: Bounds,
    pub model: SurrogateModel,
}

impl Surrogate {
    /// Predicted objective value, or `None` outside the surrogate's box.
    pub fn predict(&self, x: &Point) -> Option<f64> {
        if !self.domain.contains(x) {
            return None;
        }
        Some(match &self.model {
            SurrogateModel::Spline(model) => model.evaluate(x),
            SurrogateModel::Kriging(model) => model.predict(x),
        })
    }

    /// Structured text dump of the fitted model (domain, then coefficients
    /// or training points/weights), for post-hoc inspection and determinism
    /// checks.
    pub fn text_record(&self) -> String {
        let mut out = String::new();
        let kind = match &self.model {
            SurrogateModel::Spline(_) => "spline",
            SurrogateModel::Kriging(_) => "kriging",
        };
        writeln!(out, "method {} model {kind}", self.method).unwrap();
        let row = |coords: &mut dyn Iterator<Item = f64>| {
            coords
                .map(|c| format!("{c}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(out, "domain-lo {}", row(&mut self.domain.lower().iter().copied())).unwrap();
        writeln!(out, "domain-hi {}", row(&mut self.domain.upper().iter().copied())).unwrap();
        match &self.model {
            SurrogateModel::Spline(model) => {
                writeln!(out, "cells {}", model.cells_per_axis()).unwrap();
                writeln!(out, "coefficients {}", model.coefficients().len()).unwrap();
                for c in model.coefficients() {
                    writeln!(out, "{c}").unwrap();
                }
            }
            SurrogateModel::Kriging(model) => {
                writeln!(
                    out,
                    "length-scale {} nugget {} mean {}",
                    model.length_scale(),
                    model.nugget(),
                    model.mean()
                )
                .unwrap();
                writeln!(out, "points {}", model.len()).unwrap();
                for i in 0..model.len() {
                    let (x, y) = model.training_point(i);
                    writeln!(
                        out,
                        "{} {y} {}",
                        row(&mut x.iter().copied()),
                        model.weights()[i]
                    )
                    .unwrap();
                }
            }
        }
        out
    }
}

/// The cluster's axis-aligned bounding box, inflated by `inflation` of its
/// extent per side (at least a hair, so flat axes still get a box) and
/// clipped to the problem domain.
fn fitting_domain(cluster: &Cluster, inflation: f64, problem_bounds: &Bounds) -> Result<Bounds> {
    let dim = problem_bounds.dimension();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in &cluster.points {
        for k in 0..dim {
            lo[k] = lo[k].min(p.x[k]);
            hi[k] = hi[k].max(p.x[k]);
        }
    }
    for k in 0..dim {
        let pad = (inflation * (hi[k] - lo[k])).max(1e-6);
        lo[k] = (lo[k] - pad).max(problem_bounds.lower()[k]);
        hi[k] = (hi[k] + pad).min(problem_bounds.upper()[k]);
    }
    Bounds::new(lo, hi)
}

fn fit_kriging(cluster: &Cluster) -> Result<KrigingModel> {
    let xs: Vec<Point> = cluster.points.iter().map(|p| p.x.clone()).collect();
    let ys: Vec<f64> = cluster.points.iter().map(|p| p.value).collect();
    kriging::fit(&xs, &ys)
}

/// Fit the requested surrogate to a cluster. Spline methods triangulate the
/// cluster's points and project; if anything in that path fails (degenerate
/// geometry, singular system) the cluster is downgraded to Kriging and the
/// downgrade is logged and flagged on the result.
pub fn fit_surrogate(
    cluster: &Cluster,
    method: Method,
    grid: &GridSpec,
    problem_bounds: &Bounds,
) -> Result<Surrogate> {
    if cluster.points.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot fit a surrogate to an empty cluster".into(),
        ));
    }
    let domain = fitting_domain(cluster, grid.inflation, problem_bounds)?;
    let spline_mode = match method {
        Method::L2 => Some(Projection::L2),
        Method::H1 => Some(Projection::H1),
        Method::Kriging => None,
    };
    if let Some(mode) = spline_mode {
        let attempt = (|| -> Result<BsplineModel> {
            let interp = triangulate(&cluster.points)?;
            project(&interp, &domain, grid.cells_for(domain.dimension()), mode)
        })();
        match attempt {
            Ok(model) => {
                return Ok(Surrogate {
                    method,
                    downgraded: false,
                    domain,
                    model: SurrogateModel::Spline(model),
                });
            }
            Err(err) => {
                warn!(
                    "cluster {}: {method} spline fit failed ({err}); falling back to kriging",
                    cluster.id
                );
            }
        }
    }
    let model = fit_kriging(cluster)?;
    Ok(Surrogate {
        method,
        downgraded: spline_mode.is_some(),
        domain,
        model: SurrogateModel::Kriging(model),
    })
}
