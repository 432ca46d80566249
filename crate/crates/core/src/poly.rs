//! Dense complex polynomials in ascending-power storage.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;

/// Relative threshold below which a coefficient or spectrum entry counts as zero.
pub const ZERO_REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("polynomial must have at least one coefficient")]
    Empty,
    #[error("declared dimension {declared} does not match {actual} coefficients")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("coefficient {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("support range is empty")]
    EmptySupport,
    #[error("support {start}..={end} exceeds dimension {n}")]
    SupportOutOfRange { start: usize, end: usize, n: usize },
}

/// A polynomial `p(z) = sum_k coeffs[k] z^k` in the `n`-dimensional space of
/// polynomials of degree below `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, PolyError> {
        if coeffs.is_empty() {
            return Err(PolyError::Empty);
        }
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(PolyError::NonFinite { index });
        }
        Ok(Self { coeffs })
    }

    /// Builds from real coefficients.
    pub fn from_real(coeffs: &[f64]) -> Result<Self, PolyError> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "ambient dimension must be positive");
        Self { coeffs: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// `c z^j` embedded in dimension `n`.
    pub fn monomial(n: usize, j: usize, c: Complex64) -> Self {
        assert!(j < n, "monomial index {j} outside dimension {n}");
        let mut p = Self::zero(n);
        p.coeffs[j] = c;
        p
    }

    /// Ambient dimension `N`.
    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Index of the highest coefficient that is nonzero under the relative
    /// zero threshold, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let max = self.max_abs();
        if max == 0.0 {
            return None;
        }
        self.coeffs.iter().rposition(|c| c.norm() > ZERO_REL_TOL * max)
    }

    /// Index of the lowest nonzero coefficient under the same threshold.
    pub fn lowest_index(&self) -> Option<usize> {
        let max = self.max_abs();
        if max == 0.0 {
            return None;
        }
        self.coeffs.iter().position(|c| c.norm() > ZERO_REL_TOL * max)
    }

    /// Horner evaluation.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `p'` with ambient dimension `max(n - 1, 1)`.
    pub fn derivative(&self) -> Polynomial {
        if self.n() == 1 {
            return Self::zero(1);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Self { coeffs }
    }

    pub fn scale(&self, factor: Complex64) -> Polynomial {
        Self { coeffs: self.coeffs.iter().map(|&c| c * factor).collect() }
    }

    /// `e^{i phi} p`.
    pub fn rotate(&self, phi: f64) -> Polynomial {
        self.scale(Complex64::from_polar(1.0, phi))
    }

    /// `<self, other> = sum conj(self_k) other_k`.
    pub fn inner(&self, other: &Polynomial) -> Result<Complex64, PolyError> {
        self.check_same_dim(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Representative of the phase class whose first exact-nonzero coefficient
    /// is real positive. The zero polynomial is returned unchanged.
    pub fn canonical_phase(&self) -> Polynomial {
        match self.coeffs.iter().find(|c| c.norm() > 0.0) {
            None => self.clone(),
            Some(lead) => {
                let unit = lead.conj() / lead.norm();
                let mut out = self.scale(unit);
                // Pin the anchor coefficient to an exact positive real.
                let j = self.coeffs.iter().position(|c| c.norm() > 0.0).unwrap();
                out.coeffs[j] = Complex64::new(lead.norm(), 0.0);
                out
            }
        }
    }

    fn check_same_dim(&self, other: &Polynomial) -> Result<(), PolyError> {
        if self.n() != other.n() {
            return Err(PolyError::DimensionMismatch { left: self.n(), right: other.n() });
        }
        Ok(())
    }
}

/// `min_phi || p - e^{i phi} q ||_2`.
///
/// Equal to `sqrt(||p||^2 + ||q||^2 - 2 |<p, q>|)`, but evaluated as the norm of
/// the residual at the optimal phase `e^{i phi} = <q, p> / |<q, p>|`; the
/// expanded form loses half the significant digits when `p ~ q`.
pub fn global_phase_distance(p: &Polynomial, q: &Polynomial) -> Result<f64, PolyError> {
    p.check_same_dim(q)?;
    let overlap = q.inner(p)?;
    let magnitude = overlap.norm();
    if magnitude == 0.0 {
        return Ok((p.norm_sqr() + q.norm_sqr()).sqrt());
    }
    let unit = overlap / magnitude;
    let residual: f64 = p
        .coeffs
        .iter()
        .zip(&q.coeffs)
        .map(|(&a, &b)| (a - unit * b).norm_sqr())
        .sum();
    Ok(residual.max(0.0).sqrt())
}

/// Seeded polynomial with i.i.d. complex standard normal coefficients on
/// `support` (inclusive, default `0..=n-1`) and exact zeros elsewhere.
pub fn random_polynomial(
    n: usize,
    seed: u64,
    support: Option<RangeInclusive<usize>>,
) -> Result<Polynomial, PolyError> {
    if n == 0 {
        return Err(PolyError::Empty);
    }
    let support = support.unwrap_or(0..=n - 1);
    if support.is_empty() {
        return Err(PolyError::EmptySupport);
    }
    if *support.end() >= n {
        return Err(PolyError::SupportOutOfRange {
            start: *support.start(),
            end: *support.end(),
            n,
        });
    }
    let mut rng = SeededRng::new(seed);
    let mut p = Polynomial::zero(n);
    for k in support {
        p.coeffs[k] = rng.complex_normal();
    }
    Ok(p)
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    n: usize,
    coeffs: Vec<[f64; 2]>,
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = PolyError;

    fn try_from(repr: PolynomialRepr) -> Result<Self, Self::Error> {
        if repr.n != repr.coeffs.len() {
            return Err(PolyError::LengthMismatch { declared: repr.n, actual: repr.coeffs.len() });
        }
        Polynomial::new(repr.coeffs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr { n: p.n(), coeffs: p.coeffs.iter().map(|c| [c.re, c.im]).collect() }
    }
}
