//! Passive-target position estimators.
//!
//! All solvers run fixed-step gradient descent from an initial point and stop
//! once the update step is no longer than their threshold. The objectives are
//! non-convex, so each returns a local minimizer.
//!
//! * [`solve_ls`]: least squares over all bistatic ranges.
//! * [`solve_irls`]: per-UE Andrews sine reweighting between position updates.
//! * [`solve_proposed`]: least squares on gNB-pair and UE-pair range
//!   differences, in which per-link NLoS excess cancels.
//! * [`solve_fused`]: convex combination of IRLS and the differencing
//!   estimate, falling back to the latter when IRLS diverges.

mod andrews;
mod differencing;
mod objectives;

use serde::{Deserialize, Serialize};

pub use andrews::{andrews_weight, normalized_weights};
pub use differencing::{
    difference_gnb_pairs, difference_ue_pairs, GnbPairDifference, PathDifferences, UePairDifference,
};
pub use objectives::{
    irls_gradient, irls_objective, ls_gradient, ls_objective, range_residuals, residuals, weighted_gradient,
    weighted_objective,
};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scenario::{MeasurementSet, Nodes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ls,
    Irls,
    /// Path-differencing estimate on its own.
    Differencing,
    /// IRLS / differencing fusion.
    Proposed,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Irls => "irls",
            Method::Differencing => "differencing",
            Method::Proposed => "proposed",
        }
    }
}

/// How the starting point of every descent is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Initialization {
    /// Centroid of all gNB and UE positions.
    Centroid,
    /// Best point of a `points x points` grid spanning a square, scored by
    /// the solver's own objective.
    GridSearch { center: Point2, side: f64, points: usize },
}

impl Default for Initialization {
    fn default() -> Self {
        Initialization::GridSearch {
            center: Point2::ORIGIN,
            side: 150.0,
            points: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Step size of LS descent on the UE-averaged squared residual.
    pub ls_step: f64,
    pub ls_threshold: f64,
    pub irls_step: f64,
    pub irls_threshold: f64,
    pub proposed_step: f64,
    pub proposed_threshold: f64,
    pub max_iterations: usize,
    /// Residual beyond which a UE receives zero weight, meters.
    pub e_max: f64,
    pub fusion_irls_weight: f64,
    pub fusion_proposed_weight: f64,
    /// Iterates farther than this from the origin count as divergence, meters.
    pub divergence_radius: f64,
    pub initialization: Initialization,
    /// Keep every iterate in [`LocalizationResult::trace`].
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ls_step: 0.01,
            ls_threshold: 0.01,
            irls_step: 0.01,
            irls_threshold: 0.01,
            proposed_step: 0.001,
            proposed_threshold: 0.01,
            max_iterations: 10_000,
            e_max: 7.0,
            fusion_irls_weight: 0.5,
            fusion_proposed_weight: 0.5,
            divergence_radius: 1e6,
            initialization: Initialization::default(),
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ls_step", self.ls_step),
            ("ls_threshold", self.ls_threshold),
            ("irls_step", self.irls_step),
            ("irls_threshold", self.irls_threshold),
            ("proposed_step", self.proposed_step),
            ("proposed_threshold", self.proposed_threshold),
            ("e_max", self.e_max),
            ("divergence_radius", self.divergence_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        let (a, b) = (self.fusion_irls_weight, self.fusion_proposed_weight);
        if !(a >= 0.0 && b >= 0.0) || (a + b - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "fusion weights must be nonnegative and sum to 1, got ({a}, {b})"
            )));
        }
        if let Initialization::GridSearch { side, points, center } = &self.initialization {
            if !(side.is_finite() && *side > 0.0) || *points == 0 || !center.is_finite() {
                return Err(Error::Config(
                    "grid-search initialization needs side > 0 and points >= 1".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub estimate: Point2,
    pub converged: bool,
    pub iterations: usize,
    /// Final normalized UE weights (IRLS and fusion only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub ue_weights: Vec<f64>,
    pub method: Method,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<Point2>,
}

impl LocalizationResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn error_to(&self, truth: Point2) -> f64 {
        self.estimate.distance(truth)
    }
}

fn check_dimensions(ms: &MeasurementSet, nodes: &Nodes) -> Result<()> {
    if nodes.gnbs.len() != ms.num_gnbs || nodes.ues.len() != ms.num_ues || ms.len() != ms.num_gnbs * ms.num_ues {
        return Err(Error::Config(format!(
            "measurement set is {}x{} but {} gNBs and {} UEs were given",
            ms.num_gnbs,
            ms.num_ues,
            nodes.gnbs.len(),
            nodes.ues.len()
        )));
    }
    if ms.len() < 3 {
        return Err(Error::Underdetermined { measurements: ms.len() });
    }
    Ok(())
}

fn grid_points(center: Point2, side: f64, points: usize) -> impl Iterator<Item = Point2> {
    let coord = move |i: usize| {
        if points == 1 {
            0.0
        } else {
            -0.5 * side + side * i as f64 / (points - 1) as f64
        }
    };
    (0..points).flat_map(move |i| (0..points).map(move |j| center + Point2::new(coord(i), coord(j))))
}

/// Starting point for `method` under the configured initialization. LS and
/// IRLS score grid candidates with the LS objective, the differencing
/// solvers with the differencing objective.
pub fn initial_point(ms: &MeasurementSet, nodes: &Nodes, cfg: &SolverConfig, method: Method) -> Result<Point2> {
    check_dimensions(ms, nodes)?;
    match &cfg.initialization {
        Initialization::Centroid => Ok(nodes.centroid()),
        Initialization::GridSearch { center, side, points } => {
            let score: Box<dyn Fn(Point2) -> f64> = match method {
                Method::Ls | Method::Irls => Box::new(|x| ls_objective(ms, nodes, x)),
                Method::Differencing | Method::Proposed => {
                    let diffs = PathDifferences::new(ms)?;
                    Box::new(move |x| diffs.objective(nodes, x))
                }
            };
            let mut best = (f64::INFINITY, *center);
            for p in grid_points(*center, *side, *points) {
                let f = score(p);
                if f < best.0 {
                    best = (f, p);
                }
            }
            Ok(best.1)
        }
    }
}

enum Stop {
    Converged,
    Exhausted,
    Diverged,
}

fn escaped(x: Point2, radius: f64) -> bool {
    !x.is_finite() || x.norm() > radius
}

/// Fixed-step descent. Returns the last finite iterate.
fn descend(
    init: Point2,
    step: f64,
    threshold: f64,
    cfg: &SolverConfig,
    trace: &mut Vec<Point2>,
    gradient: impl Fn(Point2) -> Point2,
) -> (Point2, Stop, usize) {
    let mut x = init;
    if cfg.record_trace {
        trace.push(x);
    }
    for i in 1..=cfg.max_iterations {
        let next = x - gradient(x) * step;
        if escaped(next, cfg.divergence_radius) {
            return (x, Stop::Diverged, i);
        }
        let delta = next.distance(x);
        x = next;
        if cfg.record_trace {
            trace.push(x);
        }
        if delta <= threshold {
            return (x, Stop::Converged, i);
        }
    }
    (x, Stop::Exhausted, cfg.max_iterations)
}

/// Least-squares localization.
///
/// Descends on the squared residual averaged over UEs (the LS objective
/// divided by K), which has the same minimizers and matches the scaling of
/// the IRLS objective at uniform weights.
pub fn solve_ls(ms: &MeasurementSet, nodes: &Nodes, cfg: &SolverConfig, init: Point2) -> Result<LocalizationResult> {
    check_dimensions(ms, nodes)?;
    cfg.validate()?;
    let mut trace = Vec::new();
    let scale = 1.0 / ms.num_ues as f64;
    let (x, stop, iterations) = descend(init, cfg.ls_step * scale, cfg.ls_threshold, cfg, &mut trace, |x| {
        ls_gradient(ms, nodes, x)
    });
    Ok(LocalizationResult {
        estimate: x,
        converged: matches!(stop, Stop::Converged),
        iterations,
        ue_weights: Vec::new(),
        method: Method::Ls,
        trace,
    })
}

/// Iteratively reweighted least squares with Andrews sine UE weights.
///
/// Starting from uniform weights `1/K`, each iteration takes one gradient
/// step on the weighted objective, recomputes every UE's mean absolute
/// residual, reweights and renormalizes. Stops when the position update is no
/// longer than the threshold. Exhausting the iteration budget, leaving the
/// divergence radius, or rejecting every UE is reported as not converged.
pub fn solve_irls(ms: &MeasurementSet, nodes: &Nodes, cfg: &SolverConfig, init: Point2) -> Result<LocalizationResult> {
    check_dimensions(ms, nodes)?;
    cfg.validate()?;
    let k_count = ms.num_ues;
    let mut weights = vec![1.0 / k_count as f64; k_count];
    let mut x = init;
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push(x);
    }
    let finish = |x, converged, iterations, weights, trace| LocalizationResult {
        estimate: x,
        converged,
        iterations,
        ue_weights: weights,
        method: Method::Irls,
        trace,
    };
    for i in 1..=cfg.max_iterations {
        let next = x - irls_gradient(ms, nodes, &weights, x) * cfg.irls_step;
        if escaped(next, cfg.divergence_radius) {
            return Ok(finish(x, false, i, weights, trace));
        }
        let e = residuals(ms, nodes, next);
        let Some(w) = normalized_weights(&e, cfg.e_max) else {
            return Ok(finish(next, false, i, weights, trace));
        };
        weights = w;
        let delta = next.distance(x);
        x = next;
        if cfg.record_trace {
            trace.push(x);
        }
        if delta <= cfg.irls_threshold {
            return Ok(finish(x, true, i, weights, trace));
        }
    }
    Ok(finish(x, false, cfg.max_iterations, weights, trace))
}

/// Least squares on gNB-pair and UE-pair range differences.
pub fn solve_proposed(
    ms: &MeasurementSet,
    nodes: &Nodes,
    cfg: &SolverConfig,
    init: Point2,
) -> Result<LocalizationResult> {
    check_dimensions(ms, nodes)?;
    cfg.validate()?;
    let diffs = PathDifferences::new(ms)?;
    let mut trace = Vec::new();
    let (x, stop, iterations) = descend(init, cfg.proposed_step, cfg.proposed_threshold, cfg, &mut trace, |x| {
        diffs.gradient(nodes, x)
    });
    Ok(LocalizationResult {
        estimate: x,
        converged: matches!(stop, Stop::Converged),
        iterations,
        ue_weights: Vec::new(),
        method: Method::Differencing,
        trace,
    })
}

/// Fusion rule: `nu_irls * x_irls + nu_star * x_star` when IRLS converged,
/// otherwise `x_star`.
pub fn fuse(irls: &LocalizationResult, proposed: &LocalizationResult, cfg: &SolverConfig) -> LocalizationResult {
    let estimate = if irls.converged {
        irls.estimate * cfg.fusion_irls_weight + proposed.estimate * cfg.fusion_proposed_weight
    } else {
        proposed.estimate
    };
    LocalizationResult {
        estimate,
        converged: irls.converged || proposed.converged,
        iterations: irls.iterations + proposed.iterations,
        ue_weights: irls.ue_weights.clone(),
        method: Method::Proposed,
        trace: Vec::new(),
    }
}

/// Runs IRLS and the differencing solver from `init` and fuses them.
pub fn solve_fused(ms: &MeasurementSet, nodes: &Nodes, cfg: &SolverConfig, init: Point2) -> Result<LocalizationResult> {
    let irls = solve_irls(ms, nodes, cfg, init)?;
    let star = solve_proposed(ms, nodes, cfg, init)?;
    Ok(fuse(&irls, &star, cfg))
}

#[cfg(test)]
mod tests;
