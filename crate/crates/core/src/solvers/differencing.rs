//! Path differencing of bistatic ranges.
//!
//! Subtracting two measurements received by the same UE removes the shared
//! target -> UE leg (and any excess on it); subtracting two measurements from
//! the same gNB removes the shared gNB -> target leg. The objective fits the
//! remaining range differences.

use serde::{Deserialize, Serialize};

use super::objectives::NodeGeometry;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scenario::{MeasurementSet, Nodes};

/// `r_{s',k} - r_{s,k}`, modeled as `|x - g_{s'}| - |x - g_s|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnbPairDifference {
    pub ue: usize,
    pub first: usize,
    pub second: usize,
    pub value: f64,
}

/// `r_{s,k} - r_{s,k'}`, modeled as `|x - u_k| - |x - u_{k'}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UePairDifference {
    pub gnb: usize,
    pub first: usize,
    pub second: usize,
    pub value: f64,
}

pub fn difference_gnb_pairs(ms: &MeasurementSet) -> Result<Vec<GnbPairDifference>> {
    if ms.num_gnbs < 2 {
        return Err(Error::InsufficientGeometry(format!(
            "gNB-pair differencing needs at least 2 gNBs, got {}",
            ms.num_gnbs
        )));
    }
    let mut out = Vec::with_capacity(ms.num_ues * ms.num_gnbs * (ms.num_gnbs - 1) / 2);
    for k in 0..ms.num_ues {
        for s in 0..ms.num_gnbs {
            for s2 in s + 1..ms.num_gnbs {
                out.push(GnbPairDifference {
                    ue: k,
                    first: s,
                    second: s2,
                    value: ms.get(s2, k) - ms.get(s, k),
                });
            }
        }
    }
    Ok(out)
}

pub fn difference_ue_pairs(ms: &MeasurementSet) -> Result<Vec<UePairDifference>> {
    if ms.num_ues < 2 {
        return Err(Error::InsufficientGeometry(format!(
            "UE-pair differencing needs at least 2 UEs, got {}",
            ms.num_ues
        )));
    }
    let mut out = Vec::with_capacity(ms.num_gnbs * ms.num_ues * (ms.num_ues - 1) / 2);
    for s in 0..ms.num_gnbs {
        for k in 0..ms.num_ues {
            for k2 in k + 1..ms.num_ues {
                out.push(UePairDifference {
                    gnb: s,
                    first: k,
                    second: k2,
                    value: ms.get(s, k) - ms.get(s, k2),
                });
            }
        }
    }
    Ok(out)
}

/// Both families of differences for one measurement set.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDifferences {
    pub gnb_pairs: Vec<GnbPairDifference>,
    pub ue_pairs: Vec<UePairDifference>,
}

impl PathDifferences {
    pub fn new(ms: &MeasurementSet) -> Result<Self> {
        Ok(Self {
            gnb_pairs: difference_gnb_pairs(ms)?,
            ue_pairs: difference_ue_pairs(ms)?,
        })
    }

    pub fn objective(&self, nodes: &Nodes, x: Point2) -> f64 {
        let geo = NodeGeometry::at(nodes, x);
        let ue: f64 = self
            .ue_pairs
            .iter()
            .map(|d| (d.value - (geo.ue_dist[d.first] - geo.ue_dist[d.second])).powi(2))
            .sum();
        let gnb: f64 = self
            .gnb_pairs
            .iter()
            .map(|d| (d.value - (geo.gnb_dist[d.second] - geo.gnb_dist[d.first])).powi(2))
            .sum();
        ue + gnb
    }

    pub fn gradient(&self, nodes: &Nodes, x: Point2) -> Point2 {
        let geo = NodeGeometry::at(nodes, x);
        let mut grad = Point2::ORIGIN;
        for d in &self.ue_pairs {
            let r = d.value - (geo.ue_dist[d.first] - geo.ue_dist[d.second]);
            grad = grad + (geo.ue_dir[d.first] - geo.ue_dir[d.second]) * (-2.0 * r);
        }
        for d in &self.gnb_pairs {
            let r = d.value - (geo.gnb_dist[d.second] - geo.gnb_dist[d.first]);
            grad = grad + (geo.gnb_dir[d.second] - geo.gnb_dir[d.first]) * (-2.0 * r);
        }
        grad
    }
}
