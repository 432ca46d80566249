use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{unit, MeasureError};
use crate::rng::SeededRng;

/// Minimum circular separation between two nodes, in radians.
pub const NODE_SEPARATION_TOL: f64 = 1e-12;

/// Distinct points `e^{i angle}` on the unit circle, `angle` in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NodeSetRepr", into = "NodeSetRepr")]
pub struct NodeSet {
    angles: Vec<f64>,
}

impl NodeSet {
    pub fn new(angles: Vec<f64>) -> Result<Self, MeasureError> {
        if let Some(index) = angles.iter().position(|a| !(a.is_finite() && (0.0..TAU).contains(a))) {
            return Err(MeasureError::AngleOutOfRange { index });
        }
        let mut order: Vec<usize> = (0..angles.len()).collect();
        order.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]));
        for pair in order.windows(2) {
            if angles[pair[1]] - angles[pair[0]] <= NODE_SEPARATION_TOL {
                return Err(duplicate(pair[0], pair[1]));
            }
        }
        if let (Some(&lo), Some(&hi)) = (order.first(), order.last()) {
            if lo != hi && angles[lo] + TAU - angles[hi] <= NODE_SEPARATION_TOL {
                return Err(duplicate(lo, hi));
            }
        }
        Ok(Self { angles })
    }

    /// `count` random angles whose pairwise circular gaps are all at least
    /// `min_gap`. Gaps are `min_gap` plus a share of the slack proportional to
    /// i.i.d. exponentials, with a uniformly random rotation.
    pub fn random_separated(count: usize, min_gap: f64, seed: u64) -> Result<Self, MeasureError> {
        let slack = TAU - count as f64 * min_gap;
        if count == 0 || !(slack > 0.0) {
            return Err(MeasureError::InfeasibleGap { count, min_gap });
        }
        let mut rng = SeededRng::new(seed);
        let weights: Vec<f64> = (0..count).map(|_| rng.exponential()).collect();
        let total: f64 = weights.iter().sum();
        let mut angle = TAU * rng.uniform();
        let mut angles = Vec::with_capacity(count);
        for w in weights {
            angles.push(angle.rem_euclid(TAU));
            angle += min_gap + slack * w / total;
        }
        // rem_euclid can round up to exactly TAU.
        for a in &mut angles {
            if *a >= TAU {
                *a = 0.0;
            }
        }
        Self::new(angles)
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.angles.iter().map(|&t| unit(t))
    }

    /// Smallest circular gap between distinct nodes (`TAU` for a single node).
    pub fn min_gap(&self) -> f64 {
        let mut sorted = self.angles.clone();
        sorted.sort_by(f64::total_cmp);
        let inner = sorted.windows(2).map(|w| w[1] - w[0]);
        let wrap = match (sorted.first(), sorted.last()) {
            (Some(lo), Some(hi)) if sorted.len() > 1 => lo + TAU - hi,
            _ => TAU,
        };
        inner.fold(wrap, f64::min)
    }
}

fn duplicate(a: usize, b: usize) -> MeasureError {
    MeasureError::DuplicateNodes { first: a.min(b), second: a.max(b) }
}

/// Angles `2 pi j / m`, `j = 0..m`.
pub fn roots_of_unity(m: usize) -> NodeSet {
    assert!(m >= 1, "order must be positive");
    NodeSet { angles: (0..m).map(|j| TAU * j as f64 / m as f64).collect() }
}

#[derive(Serialize, Deserialize)]
struct NodeSetRepr {
    angles: Vec<f64>,
}

impl TryFrom<NodeSetRepr> for NodeSet {
    type Error = MeasureError;

    fn try_from(r: NodeSetRepr) -> Result<Self, Self::Error> {
        NodeSet::new(r.angles)
    }
}

impl From<NodeSet> for NodeSetRepr {
    fn from(n: NodeSet) -> Self {
        NodeSetRepr { angles: n.angles }
    }
}
