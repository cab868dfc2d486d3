//! Range-domain objectives and their analytic gradients.

use crate::geometry::Point2;
use crate::scenario::{MeasurementSet, Nodes};

/// Distances and unit directions from every node to a candidate position.
pub(crate) struct NodeGeometry {
    pub gnb_dist: Vec<f64>,
    pub gnb_dir: Vec<Point2>,
    pub ue_dist: Vec<f64>,
    pub ue_dir: Vec<Point2>,
}

impl NodeGeometry {
    pub fn at(nodes: &Nodes, x: Point2) -> Self {
        Self {
            gnb_dist: nodes.gnbs.iter().map(|g| x.distance(*g)).collect(),
            gnb_dir: nodes.gnbs.iter().map(|g| x.direction_from(*g)).collect(),
            ue_dist: nodes.ues.iter().map(|u| x.distance(*u)).collect(),
            ue_dir: nodes.ues.iter().map(|u| x.direction_from(*u)).collect(),
        }
    }
}

/// `r_sk - |x - g_s| - |x - u_k|` for every measurement, gNB-major.
pub fn range_residuals(ms: &MeasurementSet, nodes: &Nodes, x: Point2) -> Vec<f64> {
    let geo = NodeGeometry::at(nodes, x);
    let mut out = Vec::with_capacity(ms.len());
    for s in 0..ms.num_gnbs {
        for k in 0..ms.num_ues {
            out.push(ms.get(s, k) - geo.gnb_dist[s] - geo.ue_dist[k]);
        }
    }
    out
}

/// Weighted sum of squared range residuals; `weights` index UEs.
pub fn weighted_objective(ms: &MeasurementSet, nodes: &Nodes, weights: &[f64], x: Point2) -> f64 {
    let res = range_residuals(ms, nodes, x);
    res.chunks(ms.num_ues)
        .map(|row| row.iter().zip(weights).map(|(r, w)| w * r * r).sum::<f64>())
        .sum()
}

pub fn weighted_gradient(ms: &MeasurementSet, nodes: &Nodes, weights: &[f64], x: Point2) -> Point2 {
    let geo = NodeGeometry::at(nodes, x);
    let mut grad = Point2::ORIGIN;
    for s in 0..ms.num_gnbs {
        for (k, w) in weights.iter().enumerate() {
            let r = ms.get(s, k) - geo.gnb_dist[s] - geo.ue_dist[k];
            grad = grad + (geo.gnb_dir[s] + geo.ue_dir[k]) * (-2.0 * w * r);
        }
    }
    grad
}

/// Unweighted least-squares objective over all measurements.
pub fn ls_objective(ms: &MeasurementSet, nodes: &Nodes, x: Point2) -> f64 {
    weighted_objective(ms, nodes, &vec![1.0; ms.num_ues], x)
}

pub fn ls_gradient(ms: &MeasurementSet, nodes: &Nodes, x: Point2) -> Point2 {
    weighted_gradient(ms, nodes, &vec![1.0; ms.num_ues], x)
}

/// IRLS objective with per-UE weights.
pub fn irls_objective(ms: &MeasurementSet, nodes: &Nodes, weights: &[f64], x: Point2) -> f64 {
    weighted_objective(ms, nodes, weights, x)
}

pub fn irls_gradient(ms: &MeasurementSet, nodes: &Nodes, weights: &[f64], x: Point2) -> Point2 {
    weighted_gradient(ms, nodes, weights, x)
}

/// Mean absolute range residual of each UE over all gNBs.
pub fn residuals(ms: &MeasurementSet, nodes: &Nodes, x: Point2) -> Vec<f64> {
    let res = range_residuals(ms, nodes, x);
    let inv = 1.0 / ms.num_gnbs as f64;
    (0..ms.num_ues)
        .map(|k| (0..ms.num_gnbs).map(|s| res[s * ms.num_ues + k].abs()).sum::<f64>() * inv)
        .collect()
}
