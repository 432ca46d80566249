use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{unit, MeasurementSet};
use crate::poly::Polynomial;

/// Autocorrelation sequences of a polynomial's coefficients.
///
/// `f[n] = sum_l conj(a_l) a_{l+n}` and
/// `fprime[n] = sum_l l (l+n) conj(a_l) a_{l+n}`, both for `n = 0..N`. The
/// last weighted entry is stored as an exact zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationSpectrum {
    pub n: usize,
    pub f: Vec<Complex64>,
    pub fprime: Vec<Complex64>,
}

impl AutocorrelationSpectrum {
    pub fn max_abs_f(&self) -> f64 {
        self.f.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_fprime(&self) -> f64 {
        self.fprime.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `(1/L) sum_j v_j e^{-2 pi i j lag / L}` with `L = values.len()`. The phase
/// index is reduced modulo `L` before scaling so large products stay exact.
fn dft_bin(values: &[f64], lag: usize) -> Complex64 {
    let len = values.len();
    let sum: Complex64 = values
        .iter()
        .enumerate()
        .map(|(j, &v)| v * unit(-TAU * ((j * lag) % len) as f64 / len as f64))
        .sum();
    sum / len as f64
}

/// Spectra from the standard measurements by direct DFT of the squared
/// intensities.
pub fn autocorrelation_from_measurements(ms: &MeasurementSet) -> AutocorrelationSpectrum {
    let n = ms.n();
    let sq_p: Vec<f64> = ms.intensities_p().iter().map(|v| v * v).collect();
    let sq_dp: Vec<f64> = ms.intensities_dp().iter().map(|v| v * v).collect();
    let f = (0..n).map(|lag| dft_bin(&sq_p, lag)).collect();
    let fprime = (0..n - 1)
        .map(|lag| dft_bin(&sq_dp, lag))
        .chain(std::iter::once(Complex64::new(0.0, 0.0)))
        .collect();
    AutocorrelationSpectrum { n, f, fprime }
}

/// Spectra straight from the coefficient sums.
pub fn autocorrelation_from_coefficients(p: &Polynomial) -> AutocorrelationSpectrum {
    let a = p.coeffs();
    let n = a.len();
    let f = (0..n)
        .map(|lag| (0..n - lag).map(|l| a[l].conj() * a[l + lag]).sum())
        .collect();
    let fprime = (0..n)
        .map(|lag| {
            if lag == n - 1 {
                return Complex64::new(0.0, 0.0);
            }
            (1..n - lag)
                .map(|l| (l * (l + lag)) as f64 * a[l].conj() * a[l + lag])
                .sum()
        })
        .collect();
    AutocorrelationSpectrum { n, f, fprime }
}
