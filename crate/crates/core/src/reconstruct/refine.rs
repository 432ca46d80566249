//! Floating-point stabilization of the reconstruction.
//!
//! The lag recursion is exact, but each lag inherits the rounding of every
//! earlier one, so its error grows geometrically with the degree even though
//! the inverse problem is well conditioned. The coefficients are therefore
//! obtained along a second, stable route and polished by Gauss-Newton on the
//! squared intensities.
//!
//! The stable route works with `u = z p'(z) conj(p(z))` on the unit circle.
//! With `A = |p|^2` and `B = |p'|^2` (both known from the spectra),
//! `Im u = -A'/2` and `|u|^2 = A B`, so `(Re u)^2 = A B - A'^2/4` is known.
//! `Re u` is a real trigonometric polynomial of degree `k`; its sign flips
//! exactly at the simple zeros of its square, which are found on an
//! oversampled grid. Once `u` is known, `z p' |p|^2 = u p` is a homogeneous
//! linear system for the coefficients whose null space is spanned by `p`.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::SupportInfo;
use crate::measurement::{AutocorrelationSpectrum, MeasurementSet};

const MAX_ITERATIONS: usize = 100;
const STEP_TOL: f64 = 1e-15;
/// Residual below which polishing stops, relative to the intensity energy.
const POLISH_FLOOR: f64 = 1e-15;

/// Grid points per unit of bandwidth, doubled until the recovered `Re u` is
/// band-limited.
const MIN_OVERSAMPLING: usize = 32;
const MAX_OVERSAMPLING: usize = 4096;
/// Relative out-of-band energy accepted for the recovered `Re u`.
const BAND_LEAK_TOL: f64 = 1e-18;
/// Half width of the window used to classify a minimum of `|Re u|`.
const SIGN_WINDOW: usize = 3;

/// Coefficients of dimension `spectrum.n` recovered through the null space of
/// `z p' |p|^2 - u p`, normalized to `||p||^2 = f_0` with `a_m` real positive.
pub(super) fn phase_derivative_start(spectrum: &AutocorrelationSpectrum, support: &SupportInfo) -> Option<Vec<Complex64>> {
    let SupportInfo { m, k, .. } = *support;
    let g = derivative_product(spectrum, k)?;
    let f = |n: isize| -> Complex64 {
        let v = spectrum.f[n.unsigned_abs()];
        if n < 0 { v.conj() } else { v }
    };
    let kk = k as isize;
    let gu = |n: isize| g[(n + kk) as usize];

    // Coefficient of z^row in z p' |p|^2 - u p, one column per support index.
    let rows = 3 * k + 1;
    let system = DMatrix::from_fn(rows, k + 1, |row, col| {
        let l = (m + col) as isize;
        let lag = row as isize + m as isize - kk - l;
        if lag.abs() > kk {
            Complex64::new(0.0, 0.0)
        } else {
            f(lag) * l as f64 - gu(lag)
        }
    });
    let svd = system.svd(false, true);
    let v_t = svd.v_t?;
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)?;
    let null: Vec<Complex64> = v_t.row(smallest).iter().map(|c| c.conj()).collect();

    let norm = null.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let anchor = null[0];
    if !(norm > 0.0) || anchor.norm() == 0.0 {
        return None;
    }
    let scale = spectrum.f[0].re.max(0.0).sqrt() / norm * (anchor.conj() / anchor.norm());
    let mut coeffs = vec![Complex64::new(0.0, 0.0); spectrum.n];
    for (offset, c) in null.iter().enumerate() {
        coeffs[m + offset] = c * scale;
    }
    coeffs[m] = Complex64::new(coeffs[m].re, 0.0);
    coeffs.iter().all(|c| c.is_finite()).then_some(coeffs)
}

/// Fourier coefficients `g_n`, `n = -k..=k`, of `u = z p' conj(p)`.
fn derivative_product(spectrum: &AutocorrelationSpectrum, k: usize) -> Option<Vec<Complex64>> {
    let mut planner = FftPlanner::new();
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    let mut over = MIN_OVERSAMPLING;
    while over <= MAX_OVERSAMPLING {
        let (r, leak) = real_part_coefficients(spectrum, k, over * (k + 1), &mut planner);
        log::debug!("Re u recovered on {} points, band leak {leak:e}", over * (k + 1));
        if best.as_ref().is_none_or(|b| leak < b.1) {
            best = Some((r, leak));
        }
        if leak <= BAND_LEAK_TOL {
            break;
        }
        over *= 2;
    }
    let (r, leak) = best?;
    if leak > BAND_LEAK_TOL {
        log::debug!("Re u sign pattern unresolved (band leak {leak:e})");
    }
    // u = Re u - i A'/2, and A' has coefficients i n f_n.
    let g = (0..=2 * k)
        .map(|idx| {
            let n = idx as isize - k as isize;
            let fn_ = if n < 0 { spectrum.f[n.unsigned_abs()].conj() } else { spectrum.f[n as usize] };
            r[idx] + fn_ * (n as f64 / 2.0)
        })
        .collect();
    Some(g)
}

/// Recovers `Re u` on `size` grid points and returns its coefficients for
/// lags `-k..=k` with the relative energy it leaks outside that band.
fn real_part_coefficients(
    spectrum: &AutocorrelationSpectrum,
    k: usize,
    size: usize,
    planner: &mut FftPlanner<f64>,
) -> (Vec<Complex64>, f64) {
    let inverse = planner.plan_fft_inverse(size);
    let zero = Complex64::new(0.0, 0.0);
    let on_grid = |coeff: &dyn Fn(usize) -> Complex64, conj_neg: &dyn Fn(usize) -> Complex64, fft: &Arc<dyn Fft<f64>>| {
        let mut buf = vec![zero; size];
        for n in 0..=k {
            buf[n] += coeff(n);
            if n > 0 {
                buf[size - n] += conj_neg(n);
            }
        }
        fft.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect::<Vec<f64>>()
    };
    let f = |n: usize| spectrum.f[n];
    let fc = |n: usize| spectrum.f[n].conj();
    let fp = |n: usize| spectrum.fprime[n];
    let fpc = |n: usize| spectrum.fprime[n].conj();
    let df = |n: usize| Complex64::new(0.0, n as f64) * spectrum.f[n];
    let dfc = |n: usize| Complex64::new(0.0, -(n as f64)) * spectrum.f[n].conj();

    let a = on_grid(&f, &fc, &inverse);
    let b = on_grid(&fp, &fpc, &inverse);
    let da = on_grid(&df, &dfc, &inverse);
    let magnitude: Vec<f64> = (0..size)
        .map(|j| (a[j] * b[j] - da[j] * da[j] / 4.0).max(0.0).sqrt())
        .collect();

    let signed = assign_signs(&magnitude);
    let forward = planner.plan_fft_forward(size);
    let mut buf: Vec<Complex64> = signed.iter().map(|&v| Complex64::new(v / size as f64, 0.0)).collect();
    forward.process(&mut buf);

    let total: f64 = buf.iter().map(|c| c.norm_sqr()).sum();
    let inside: f64 = (0..=k).map(|n| buf[n].norm_sqr()).sum::<f64>()
        + (1..=k).map(|n| buf[size - n].norm_sqr()).sum::<f64>();
    let leak = if total > 0.0 { ((total - inside) / total).max(0.0) } else { 0.0 };

    let mut r: Vec<Complex64> = (0..=2 * k)
        .map(|idx| {
            let n = idx as isize - k as isize;
            buf[n.rem_euclid(size as isize) as usize]
        })
        .collect();
    // The mean of Re u is sum_l l |a_l|^2 >= 0.
    if r[k].re < 0.0 {
        r.iter_mut().for_each(|c| *c = -*c);
    }
    (r, leak)
}

/// Signs for samples of `|R|` of a smooth real `R`: every local minimum is
/// tested for a sign change by fitting a cubic to the surrounding window
/// under each hypothesis and keeping the smoothest.
fn assign_signs(magnitude: &[f64]) -> Vec<f64> {
    let size = magnitude.len();
    let width = 2 * SIGN_WINDOW + 1;
    let offsets: Vec<isize> = (-(SIGN_WINDOW as isize)..=SIGN_WINDOW as isize).collect();
    let vander = DMatrix::from_fn(width, 4, |i, j| (offsets[i] as f64).powi(j as i32));
    let qr = vander.clone().qr();
    let q = qr.q();
    let residual_op = DMatrix::identity(width, width) - &q * q.transpose();

    let at = |j: isize| magnitude[j.rem_euclid(size as isize) as usize];
    let mut flip_after = vec![false; size];
    for j in 0..size as isize {
        let here = at(j);
        if here > at(j - 1) || here > at(j + 1) {
            continue;
        }
        let window = DVector::from_iterator(width, offsets.iter().map(|&o| at(j + o)));
        let score = |split: Option<isize>| {
            let signed = DVector::from_iterator(
                width,
                offsets.iter().zip(window.iter()).map(|(&o, &v)| match split {
                    Some(s) if o > s => -v,
                    _ => v,
                }),
            );
            (&residual_op * signed).norm()
        };
        let best = [None, Some(-1), Some(0)]
            .into_iter()
            .min_by(|a, b| score(*a).total_cmp(&score(*b)))
            .flatten();
        if let Some(s) = best {
            let pos = (j + s).rem_euclid(size as isize) as usize;
            flip_after[pos] = !flip_after[pos];
        }
    }
    let mut sign = 1.0;
    magnitude
        .iter()
        .zip(&flip_after)
        .map(|(&v, &flip)| {
            let out = sign * v;
            if flip {
                sign = -sign;
            }
            out
        })
        .collect()
}

/// Squared-intensity residuals and their Jacobian over the support window.
pub(super) struct IntensityFit {
    m: usize,
    k: usize,
    n: usize,
    /// `w_j^i` for every node and support index, row-major.
    powers_w: Vec<Complex64>,
    /// `i z_j^{i-1}` for every node and support index.
    powers_z: Vec<Complex64>,
    targets: Vec<f64>,
    weight_dp: f64,
    energy: f64,
}

impl IntensityFit {
    pub(super) fn new(ms: &MeasurementSet, m: usize, k: usize) -> Self {
        let n = ms.n();
        let width = k + 1;
        let power = |len: usize, j: usize, e: usize| {
            Complex64::from_polar(1.0, TAU * ((j * e) % len) as f64 / len as f64)
        };
        let len_w = 2 * n - 1;
        let len_z = 2 * n - 3;
        let mut powers_w = Vec::with_capacity(len_w * width);
        for j in 0..len_w {
            powers_w.extend((m..=m + k).map(|i| power(len_w, j, i)));
        }
        let mut powers_z = Vec::with_capacity(len_z * width);
        for j in 0..len_z {
            powers_z.extend((m..=m + k).map(|i| {
                if i == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    power(len_z, j, i - 1) * i as f64
                }
            }));
        }
        // Derivative intensities carry factors up to (N-1)^2.
        let weight_dp = 1.0 / ((n - 1) * (n - 1)) as f64;
        let targets: Vec<f64> = ms
            .intensities_p()
            .iter()
            .map(|v| v * v)
            .chain(ms.intensities_dp().iter().map(|v| v * v * weight_dp))
            .collect();
        let energy = targets.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        Self { m, k, n, powers_w, powers_z, targets, weight_dp, energy }
    }

    fn unknowns(&self) -> usize {
        2 * (self.k + 1) - 1
    }

    fn pack(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut x = vec![coeffs[self.m].re];
        for c in &coeffs[self.m + 1..=self.m + self.k] {
            x.push(c.re);
            x.push(c.im);
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> Vec<Complex64> {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.n];
        coeffs[self.m] = Complex64::new(x[0], 0.0);
        for (offset, pair) in x[1..].chunks(2).enumerate() {
            coeffs[self.m + 1 + offset] = Complex64::new(pair[0], pair[1]);
        }
        coeffs
    }

    fn window(&self, x: &[f64]) -> Vec<Complex64> {
        let coeffs = self.unpack(x);
        coeffs[self.m..=self.m + self.k].to_vec()
    }

    /// Residuals, and optionally the Jacobian, at `x`.
    fn evaluate(&self, x: &[f64], with_jacobian: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let alpha = self.window(x);
        let width = self.k + 1;
        let rows = self.targets.len();
        let mut residuals = Vec::with_capacity(rows);
        let mut jac = with_jacobian.then(|| DMatrix::zeros(rows, self.unknowns()));

        let blocks = [(&self.powers_w, 1.0), (&self.powers_z, self.weight_dp)];
        let mut row = 0;
        for (powers, weight) in blocks {
            for basis in powers.chunks(width) {
                let value: Complex64 = basis.iter().zip(&alpha).map(|(b, a)| b * a).sum();
                residuals.push(weight * value.norm_sqr() - self.targets[row]);
                if let Some(jac) = jac.as_mut() {
                    // d|v|^2 / d Re a_i = 2 Re(conj(v) b_i), d / d Im a_i = -2 Im(conj(v) b_i).
                    let base = value.conj() * 2.0 * weight;
                    jac[(row, 0)] = (base * basis[0]).re;
                    for (i, b) in basis.iter().enumerate().skip(1) {
                        let d = base * b;
                        jac[(row, 2 * i - 1)] = d.re;
                        jac[(row, 2 * i)] = -d.im;
                    }
                }
                row += 1;
            }
        }
        (residuals, jac)
    }

    /// Residual norm relative to the total squared-intensity energy.
    pub(super) fn relative_residual(&self, coeffs: &[Complex64]) -> f64 {
        let (r, _) = self.evaluate(&self.pack(coeffs), false);
        norm(&r) / self.energy
    }

    /// Levenberg-Marquardt polish; returns the improved coefficients.
    pub(super) fn polish(&self, start: &[Complex64]) -> Vec<Complex64> {
        let mut x = self.pack(start);
        let (mut residuals, _) = self.evaluate(&x, false);
        let mut cost = norm(&residuals);
        let mut damping = 0.0;
        for _ in 0..MAX_ITERATIONS {
            if cost <= POLISH_FLOOR * self.energy {
                break;
            }
            let (_, jac) = self.evaluate(&x, true);
            let jac = jac.expect("requested");
            let r = DVector::from_vec(residuals.clone());
            let gradient = jac.transpose() * &r;
            let normal = jac.transpose() * &jac;

            let mut accepted = false;
            for _ in 0..40 {
                let mut system = normal.clone();
                for i in 0..system.nrows() {
                    system[(i, i)] *= 1.0 + damping;
                }
                let step = match system.cholesky() {
                    Some(chol) => chol.solve(&gradient),
                    None => {
                        damping = if damping == 0.0 { 1e-12 } else { damping * 10.0 };
                        continue;
                    }
                };
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
                let (trial_residuals, _) = self.evaluate(&trial, false);
                let trial_cost = norm(&trial_residuals);
                if trial_cost < cost {
                    let step_norm = step.norm();
                    let scale = norm(&x);
                    x = trial;
                    residuals = trial_residuals;
                    cost = trial_cost;
                    damping = if damping < 1e-12 { 0.0 } else { damping / 10.0 };
                    accepted = true;
                    if step_norm <= STEP_TOL * scale {
                        return self.unpack(&x);
                    }
                    break;
                }
                damping = if damping == 0.0 { 1e-12 } else { damping * 10.0 };
            }
            if !accepted {
                break;
            }
        }
        self.unpack(&x)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
