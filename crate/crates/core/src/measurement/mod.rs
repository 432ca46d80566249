//! Phaseless measurements on the unit circle.
//!
//! The standard design takes `|p|` at the `2N-1` roots of unity of order
//! `2N-1` and `|p'|` at the `2N-3` roots of unity of order `2N-3`, for a total
//! of `4N-4` intensities. Arbitrary distinct nodes are also supported and can
//! be bridged back to the standard design by trigonometric interpolation.

mod interpolate;
mod nodes;
mod spectrum;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poly::Polynomial;

pub use interpolate::{resample_to_uniform, trig_interpolate, TrigPolynomial, CONDITION_WARN_LIMIT};
pub use nodes::{roots_of_unity, NodeSet, NODE_SEPARATION_TOL};
pub use spectrum::{autocorrelation_from_coefficients, autocorrelation_from_measurements, AutocorrelationSpectrum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("ambient dimension must be at least 2, got {n}")]
    DimensionTooSmall { n: usize },
    #[error("{what}: expected {expected} values, got {actual}")]
    WrongCount { what: &'static str, expected: usize, actual: usize },
    #[error("{what}[{index}] is negative or not finite")]
    InvalidIntensity { what: &'static str, index: usize },
    #[error("node angle {index} is outside [0, 2pi) or not finite")]
    AngleOutOfRange { index: usize },
    #[error("nodes {first} and {second} are not distinct")]
    DuplicateNodes { first: usize, second: usize },
    #[error("interpolation system is singular")]
    SingularSystem,
    #[error("minimum gap {min_gap} is infeasible for {count} nodes")]
    InfeasibleGap { count: usize, min_gap: f64 },
}

/// Intensities `|p(w^j)|` (length `2N-1`) and `|p'(z^j)|` (length `2N-3`) at
/// the roots of unity of the respective orders, in ascending `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementRepr", into = "MeasurementRepr")]
pub struct MeasurementSet {
    n: usize,
    intensities_p: Vec<f64>,
    intensities_dp: Vec<f64>,
}

impl MeasurementSet {
    pub fn new(n: usize, intensities_p: Vec<f64>, intensities_dp: Vec<f64>) -> Result<Self, MeasureError> {
        if n < 2 {
            return Err(MeasureError::DimensionTooSmall { n });
        }
        check_intensities("intensities_p", &intensities_p, 2 * n - 1)?;
        check_intensities("intensities_dp", &intensities_dp, 2 * n - 3)?;
        Ok(Self { n, intensities_p, intensities_dp })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn intensities_p(&self) -> &[f64] {
        &self.intensities_p
    }

    pub fn intensities_dp(&self) -> &[f64] {
        &self.intensities_dp
    }

    /// Total number of phaseless measurements, `4N-4`.
    pub fn len(&self) -> usize {
        self.intensities_p.len() + self.intensities_dp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sup-norm distance between two measurement vectors of equal dimension.
    pub fn sup_distance(&self, other: &MeasurementSet) -> Option<f64> {
        if self.n != other.n {
            return None;
        }
        let p = self.intensities_p.iter().zip(&other.intensities_p);
        let dp = self.intensities_dp.iter().zip(&other.intensities_dp);
        Some(p.chain(dp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

fn check_intensities(what: &'static str, values: &[f64], expected: usize) -> Result<(), MeasureError> {
    if values.len() != expected {
        return Err(MeasureError::WrongCount { what, expected, actual: values.len() });
    }
    if let Some(index) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(MeasureError::InvalidIntensity { what, index });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct MeasurementRepr {
    n: usize,
    intensities_p: Vec<f64>,
    intensities_dp: Vec<f64>,
}

impl TryFrom<MeasurementRepr> for MeasurementSet {
    type Error = MeasureError;

    fn try_from(r: MeasurementRepr) -> Result<Self, Self::Error> {
        MeasurementSet::new(r.n, r.intensities_p, r.intensities_dp)
    }
}

impl From<MeasurementSet> for MeasurementRepr {
    fn from(m: MeasurementSet) -> Self {
        MeasurementRepr { n: m.n, intensities_p: m.intensities_p, intensities_dp: m.intensities_dp }
    }
}

/// Intensities at arbitrary distinct nodes: `|p|` on `nodes_w` (`2N-1` of
/// them) and `|p'|` on `nodes_z` (`2N-3` of them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMeasurements {
    pub n: usize,
    pub intensities_p: Vec<f64>,
    pub intensities_dp: Vec<f64>,
    pub nodes_w: NodeSet,
    pub nodes_z: NodeSet,
}

impl NodeMeasurements {
    pub fn validate(&self) -> Result<(), MeasureError> {
        if self.n < 2 {
            return Err(MeasureError::DimensionTooSmall { n: self.n });
        }
        check_node_count("nodes_w", &self.nodes_w, 2 * self.n - 1)?;
        check_node_count("nodes_z", &self.nodes_z, 2 * self.n - 3)?;
        check_intensities("intensities_p", &self.intensities_p, 2 * self.n - 1)?;
        check_intensities("intensities_dp", &self.intensities_dp, 2 * self.n - 3)
    }

    /// Reduces to the standard roots-of-unity design via interpolation.
    pub fn to_uniform(&self) -> Result<MeasurementSet, MeasureError> {
        self.validate()?;
        resample_to_uniform(self.n, &self.nodes_w, &self.intensities_p, &self.nodes_z, &self.intensities_dp)
    }
}

fn check_node_count(what: &'static str, nodes: &NodeSet, expected: usize) -> Result<(), MeasureError> {
    if nodes.len() != expected {
        return Err(MeasureError::WrongCount { what, expected, actual: nodes.len() });
    }
    Ok(())
}

/// The standard `4N-4` measurements of `p`.
pub fn measure(p: &Polynomial) -> Result<MeasurementSet, MeasureError> {
    let n = p.n();
    if n < 2 {
        return Err(MeasureError::DimensionTooSmall { n });
    }
    let dp = p.derivative();
    let intensities_p = roots_of_unity(2 * n - 1).points().map(|w| p.evaluate(w).norm()).collect();
    let intensities_dp = roots_of_unity(2 * n - 3).points().map(|z| dp.evaluate(z).norm()).collect();
    Ok(MeasurementSet { n, intensities_p, intensities_dp })
}

/// `(|p(w_j)|, |p'(z_k)|)` at caller-chosen distinct nodes.
pub fn measure_at_nodes(
    p: &Polynomial,
    nodes_w: &NodeSet,
    nodes_z: &NodeSet,
) -> Result<(Vec<f64>, Vec<f64>), MeasureError> {
    let n = p.n();
    if n < 2 {
        return Err(MeasureError::DimensionTooSmall { n });
    }
    check_node_count("nodes_w", nodes_w, 2 * n - 1)?;
    check_node_count("nodes_z", nodes_z, 2 * n - 3)?;
    let dp = p.derivative();
    let on_w = nodes_w.points().map(|w| p.evaluate(w).norm()).collect();
    let on_z = nodes_z.points().map(|z| dp.evaluate(z).norm()).collect();
    Ok((on_w, on_z))
}

/// `e^{i t}`.
pub(crate) fn unit(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}
