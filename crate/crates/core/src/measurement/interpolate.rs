use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{roots_of_unity, unit, MeasureError, MeasurementSet, NodeSet};

/// Condition numbers above this make `trig_interpolate` log a warning.
pub const CONDITION_WARN_LIMIT: f64 = 1e12;

/// `f(t) = sum_{n=-m..=m} a_n e^{i n t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    m: usize,
    /// `a[n + m]` holds `a_n`.
    a: Vec<Complex64>,
}

impl TrigPolynomial {
    pub fn new(m: usize, a: Vec<Complex64>) -> Option<Self> {
        (a.len() == 2 * m + 1).then_some(Self { m, a })
    }

    pub fn degree_bound(&self) -> usize {
        self.m
    }

    /// `a_n` for `-m <= n <= m`, zero outside.
    pub fn coefficient(&self, n: isize) -> Complex64 {
        let idx = n + self.m as isize;
        if idx < 0 || idx as usize >= self.a.len() {
            return Complex64::new(0.0, 0.0);
        }
        self.a[idx as usize]
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.a
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        // e^{-imt} times a polynomial in e^{it}, Horner on the latter.
        let z = unit(t);
        let poly = self.a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        poly * unit(-(self.m as f64) * t)
    }

    /// Whether `a_{-n} = conj(a_n)` for all `n`, within `tol`.
    pub fn is_real(&self, tol: f64) -> bool {
        (0..=self.m as isize).all(|n| (self.coefficient(-n) - self.coefficient(n).conj()).norm() <= tol)
    }
}

/// The unique trigonometric polynomial of degree at most `m` through
/// `(nodes[k], values[k])`.
///
/// With `g_k = e^{i m t_k} values[k]`, the algebraic polynomial `P` of degree
/// at most `2m` satisfying `P(e^{i t_k}) = g_k` has `a_n` as its coefficient of
/// `z^{n+m}`. The Vandermonde system is solved by LU with partial pivoting.
pub fn trig_interpolate(values: &[Complex64], nodes: &NodeSet, m: usize) -> Result<TrigPolynomial, MeasureError> {
    let size = 2 * m + 1;
    if nodes.len() != size {
        return Err(MeasureError::WrongCount { what: "nodes", expected: size, actual: nodes.len() });
    }
    if values.len() != size {
        return Err(MeasureError::WrongCount { what: "values", expected: size, actual: values.len() });
    }
    let angles = nodes.angles();
    let vander = DMatrix::from_fn(size, size, |row, col| unit(angles[row]).powu(col as u32));
    let rhs = DVector::from_iterator(
        size,
        angles.iter().zip(values).map(|(&t, &v)| unit(m as f64 * t) * v),
    );

    let condition = condition_number(&vander);
    if condition > CONDITION_WARN_LIMIT {
        log::warn!("interpolation system is ill-conditioned (cond ~ {condition:.3e}, {size} nodes)");
    } else {
        log::debug!("interpolation condition number {condition:.3e}");
    }

    let solution = vander.lu().solve(&rhs).ok_or(MeasureError::SingularSystem)?;
    if solution.iter().any(|c| !c.is_finite()) {
        return Err(MeasureError::SingularSystem);
    }
    Ok(TrigPolynomial { m, a: solution.iter().copied().collect() })
}

fn condition_number(matrix: &DMatrix<Complex64>) -> f64 {
    let sv = matrix.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Converts intensities at arbitrary nodes into the standard roots-of-unity
/// measurement set: interpolate `|p|^2` (degree `N-1`) and `|p'|^2` (degree
/// `N-2`), then sample both at the uniform nodes.
pub fn resample_to_uniform(
    n: usize,
    nodes_w: &NodeSet,
    intensities_p: &[f64],
    nodes_z: &NodeSet,
    intensities_dp: &[f64],
) -> Result<MeasurementSet, MeasureError> {
    if n < 2 {
        return Err(MeasureError::DimensionTooSmall { n });
    }
    let resample = |nodes: &NodeSet, values: &[f64], m: usize| -> Result<Vec<f64>, MeasureError> {
        let squares: Vec<Complex64> = values.iter().map(|v| Complex64::new(v * v, 0.0)).collect();
        let trig = trig_interpolate(&squares, nodes, m)?;
        Ok(roots_of_unity(2 * m + 1)
            .angles()
            .iter()
            .map(|&t| trig.evaluate(t).re.max(0.0).sqrt())
            .collect())
    };
    let on_w = resample(nodes_w, intensities_p, n - 1)?;
    let on_z = resample(nodes_z, intensities_dp, n - 2)?;
    MeasurementSet::new(n, on_w, on_z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{measure, measure_at_nodes};
    use crate::poly::random_polynomial;
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_values() {
        let nodes = NodeSet::new(vec![0.1, 0.9, 2.0, 3.3, 5.0]).unwrap();
        let k = c(2.5, -1.0);
        let trig = trig_interpolate(&[k; 5], &nodes, 2).unwrap();
        for n in -2..=2isize {
            let want = if n == 0 { k } else { c(0.0, 0.0) };
            assert!((trig.coefficient(n) - want).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn single_exponential() {
        let nodes = NodeSet::new(vec![0.3, 1.7, 4.0]).unwrap();
        let values: Vec<Complex64> = nodes.angles().iter().map(|&t| unit(t)).collect();
        let trig = trig_interpolate(&values, &nodes, 1).unwrap();
        assert!((trig.coefficient(1) - c(1.0, 0.0)).norm() < 1e-13);
        assert!(trig.coefficient(0).norm() < 1e-13);
        assert!(trig.coefficient(-1).norm() < 1e-13);
        for (&t, v) in nodes.angles().iter().zip(&values) {
            assert!((trig.evaluate(t) - v).norm() <= 1e-12);
        }
    }

    #[test]
    fn uniform_nodes_match_dft_formula() {
        for (n, seed) in [(2usize, 1u64), (5, 2), (9, 3), (16, 4)] {
            let p = random_polynomial(n, seed, None).unwrap();
            let len = 2 * n - 1;
            let nodes = roots_of_unity(len);
            let samples: Vec<Complex64> = nodes
                .points()
                .map(|z| c(p.evaluate(z).norm_sqr(), 0.0))
                .collect();
            let trig = trig_interpolate(&samples, &nodes, n - 1).unwrap();
            // Oracle: a_n = (1/L) sum_j f(t_j) e^{-i n t_j}.
            for lag in -(n as isize - 1)..=(n as isize - 1) {
                let oracle: Complex64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * unit(-(lag as f64) * TAU * j as f64 / len as f64))
                    .sum::<Complex64>()
                    / len as f64;
                assert!((trig.coefficient(lag) - oracle).norm() <= 1e-10, "n={n} lag={lag}");
            }
            assert!(trig.is_real(1e-10));
        }
    }

    #[test]
    fn reproduces_values_at_separated_nodes() {
        for seed in 0..40u64 {
            let m = 1 + (seed as usize % 12);
            let size = 2 * m + 1;
            let nodes = NodeSet::random_separated(size, TAU / (8.0 * m as f64), seed).unwrap();
            let mut rng = crate::rng::SeededRng::new(seed + 1000);
            let values: Vec<Complex64> = (0..size).map(|_| rng.complex_normal()).collect();
            let trig = trig_interpolate(&values, &nodes, m).unwrap();
            for (&t, v) in nodes.angles().iter().zip(&values) {
                assert!((trig.evaluate(t) - v).norm() <= 1e-9 * v.norm().max(1.0), "seed {seed}");
            }
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let nodes = NodeSet::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(
            trig_interpolate(&[c(1.0, 0.0); 3], &nodes, 2),
            Err(MeasureError::WrongCount { what: "nodes", .. })
        ));
        assert!(matches!(
            trig_interpolate(&[c(1.0, 0.0); 2], &nodes, 1),
            Err(MeasureError::WrongCount { what: "values", .. })
        ));
    }

    #[test]
    fn resampling_recovers_uniform_measurements() {
        for seed in 0..20u64 {
            let n = 2 + seed as usize % 7;
            let p = random_polynomial(n, seed, None).unwrap();
            let w = NodeSet::random_separated(2 * n - 1, TAU / (8.0 * n as f64), seed).unwrap();
            let z = NodeSet::random_separated(2 * n - 3, TAU / (8.0 * n as f64), seed + 500).unwrap();
            let (on_w, on_z) = measure_at_nodes(&p, &w, &z).unwrap();
            let bridged = resample_to_uniform(n, &w, &on_w, &z, &on_z).unwrap();
            let direct = measure(&p).unwrap();
            let gap = bridged.sup_distance(&direct).unwrap();
            assert!(gap <= 1e-8 * (1.0 + p.norm_sqr()), "seed {seed}: {gap}");
        }
    }
}
