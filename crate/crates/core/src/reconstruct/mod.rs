//! Exact recovery of a polynomial, up to global phase, from its standard
//! measurement set.
//!
//! The pipeline runs in four stages:
//!
//! 1. the autocorrelation spectra `f` and `f'` are read off the squared
//!    intensities by a DFT;
//! 2. the support window `[m, m+k]` of the coefficients is located from the
//!    last nonzero lag `k` of `f` and the ratio `f'_k / f_k = m (m+k)`;
//! 3. the products `delta(i, j) = conj(a_i) a_j` over the window are recovered
//!    lag by lag, from the outermost lag `k` inwards, each lag needing one 2x2
//!    solve that pairs `f_{k-n}` with `f'_{k-n}`;
//! 4. the row `delta(m, .)` divided by `sqrt(delta(m, m)) = |a_m|` gives the
//!    coefficients with `a_m` rotated onto the positive real axis.
//!
//! A polynomial whose derivative spectrum vanishes is constant and is returned
//! as `sqrt(f_0)` directly.
//!
//! In floating point the recursion loses accuracy geometrically with the
//! degree, so [`reconstruct`] computes the coefficients along a stable route
//! and polishes them against the intensities, then checks the fit.
//! [`reconstruct_unrefined`] runs the four stages alone.

mod refine;

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::measurement::{autocorrelation_from_measurements, AutocorrelationSpectrum, MeasurementSet};
use crate::poly::Polynomial;

/// Relative zero threshold shared by the constant-case test and the support searches.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Accepted distance of the support offset from an integer, relative to `1 + |m|`.
pub const M_INTEGER_TOL: f64 = 1e-6;

/// Relative imaginary residue tolerated on diagonal products before warning.
pub const DIAGONAL_IMAG_TOL: f64 = 1e-8;

/// Largest residual of the squared intensities, relative to their total, that
/// a reconstruction may leave.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("support offset {m_raw} is not an integer")]
    NonIntegerM { m_raw: f64 },
    #[error("support offset {m_raw} is negative")]
    NegativeM { m_raw: f64 },
    #[error("support [{m}, {m}+{k}] exceeds dimension {n}")]
    DegreeOverflow { m: usize, k: usize, n: usize },
    #[error("square-root argument {radicand} is negative")]
    SqrtDomain { radicand: f64 },
    #[error("pivot product {magnitude:e} is numerically zero")]
    DivisionByNearZero { magnitude: f64 },
    #[error("diagonal product delta({index},{index}) = {value} is not positive")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("derivative lag {kprime} exceeds autocorrelation lag {k}")]
    SupportOrder { k: usize, kprime: usize },
    #[error("derivative spectrum vanishes; the constant case has no support window")]
    ConstantSpectrum,
    #[error("no polynomial fits the measurements (relative residual {residual:e})")]
    Inconsistent { residual: f64 },
}

impl ReconstructError {
    /// Stable machine-readable name of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Self::NonIntegerM { .. } => "NonIntegerM",
            Self::NegativeM { .. } => "NegativeM",
            Self::DegreeOverflow { .. } => "DegreeOverflow",
            Self::SqrtDomain { .. } => "SqrtDomain",
            Self::DivisionByNearZero { .. } => "DivisionByNearZero",
            Self::NonPositiveDiagonal { .. } => "NonPositiveDiagonal",
            Self::SupportOrder { .. } => "SupportOrder",
            Self::ConstantSpectrum => "ConstantSpectrum",
            Self::Inconsistent { .. } => "InconsistentMeasurements",
        }
    }
}

/// Location of the nonzero coefficients: `a_m` and `a_{m+k}` are the first and
/// last of them, and `d = m + k` is the degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportInfo {
    pub k: usize,
    /// Last nonzero lag of `f'`; `None` when `f'` vanishes.
    pub kprime: Option<usize>,
    pub m: usize,
    pub d: usize,
}

/// Recovered products `delta(i, j) = conj(a_i) a_j` for `m <= i <= j <= m + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    m: usize,
    k: usize,
    entries: BTreeMap<(usize, usize), Complex64>,
}

impl DeltaTable {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Complex64> {
        self.entries.get(&(i, j)).copied()
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Complex64> {
        &self.entries
    }

    fn require(&self, i: usize, j: usize) -> Complex64 {
        self.get(i, j)
            .unwrap_or_else(|| panic!("delta({i},{j}) requested before it was produced"))
    }

    /// Relative defect of `|delta(m, m+k)|^2 = delta(m, m) delta(m+k, m+k)`.
    pub fn rank_one_defect(&self) -> Option<f64> {
        let (lo, hi) = (self.m, self.m + self.k);
        let corner = self.get(lo, hi)?.norm_sqr();
        let diag = self.get(lo, lo)?.re * self.get(hi, hi)?.re;
        Some((corner - diag).abs() / corner.max(diag).max(f64::MIN_POSITIVE))
    }
}

/// Locates the support window from the spectra.
///
/// Entries at or below `tol` times the largest magnitude of their own sequence
/// count as zero.
pub fn detect_support(spectrum: &AutocorrelationSpectrum, tol: f64) -> Result<SupportInfo, ReconstructError> {
    let f_cut = tol * spectrum.max_abs_f();
    let fp_cut = tol * spectrum.max_abs_fprime();
    let kprime = spectrum.fprime.iter().rposition(|v| v.norm() > fp_cut && v.norm() > 0.0);
    let Some(kp) = kprime else {
        return Err(ReconstructError::ConstantSpectrum);
    };
    let Some(k) = spectrum.f.iter().rposition(|v| v.norm() > f_cut && v.norm() > 0.0) else {
        return Err(ReconstructError::DivisionByNearZero { magnitude: 0.0 });
    };
    if kp > k {
        return Err(ReconstructError::SupportOrder { k, kprime: kp });
    }

    // f'_k below threshold means m = 0.
    let ratio = if kp == k { (spectrum.fprime[k] / spectrum.f[k]).re } else { 0.0 };
    let half_k = k as f64 / 2.0;
    let radicand = ratio + half_k * half_k;
    if radicand < -M_INTEGER_TOL * (1.0 + half_k * half_k) {
        return Err(ReconstructError::SqrtDomain { radicand });
    }
    let m_raw = -half_k + radicand.max(0.0).sqrt();
    let rounded = m_raw.round();
    if (m_raw - rounded).abs() > M_INTEGER_TOL * (1.0 + m_raw.abs()) {
        return Err(ReconstructError::NonIntegerM { m_raw });
    }
    if rounded < 0.0 {
        return Err(ReconstructError::NegativeM { m_raw });
    }
    let m = rounded as usize;
    if m + k > spectrum.n.saturating_sub(1) {
        return Err(ReconstructError::DegreeOverflow { m, k, n: spectrum.n });
    }
    Ok(SupportInfo { k, kprime, m, d: m + k })
}

/// Fills the table of products `conj(a_i) a_j` lag by lag.
///
/// The corner `delta(m, m+k)` is `f_k`. For every inner lag `k - n` the
/// products that do not touch row `m` or column `m+k` follow from the rank-one
/// identity `delta(l, j) = delta(l, m+k) delta(m, j) / delta(m, m+k)`; the two
/// that do are separated by solving
///
/// ```text
/// [ 1            1              ] [ delta(m, m+k-n) ]   [ alpha ]
/// [ m (m+k-n)   (m+n) (m+k)     ] [ delta(m+n, m+k) ] = [ beta  ]
/// ```
///
/// where `alpha`, `beta` are `f_{k-n}`, `f'_{k-n}` minus the inner products.
/// The determinant is `n (2m + k)`.
pub fn delta_recursion(
    spectrum: &AutocorrelationSpectrum,
    support: &SupportInfo,
    tol: f64,
) -> Result<DeltaTable, ReconstructError> {
    let table = fill_table(spectrum, support, tol)?;
    check_diagonals(&table, spectrum.max_abs_f() * tol, log::Level::Warn)?;
    Ok(table)
}

/// Rejects non-positive end diagonals; imaginary residue is logged at `level`.
fn check_diagonals(table: &DeltaTable, floor: f64, level: log::Level) -> Result<(), ReconstructError> {
    for index in [table.m, table.m + table.k] {
        let diag = table.require(index, index);
        if diag.im.abs() > DIAGONAL_IMAG_TOL * diag.norm() {
            log::log!(level, "delta({index},{index}) has imaginary residue {:e}", diag.im);
        }
        if diag.re <= floor {
            return Err(ReconstructError::NonPositiveDiagonal { index, value: diag.re });
        }
    }
    Ok(())
}

/// The recursion without the closing diagonal checks.
fn fill_table(spectrum: &AutocorrelationSpectrum, support: &SupportInfo, tol: f64) -> Result<DeltaTable, ReconstructError> {
    let SupportInfo { m, k, .. } = *support;
    let scale = spectrum.max_abs_f();
    let mut table = DeltaTable { m, k, entries: BTreeMap::new() };

    let corner = spectrum.f[k];
    if corner.norm() < tol * scale || corner.norm() == 0.0 {
        return Err(ReconstructError::DivisionByNearZero { magnitude: corner.norm() });
    }
    table.entries.insert((m, m + k), corner);

    for n in 1..=k {
        let lag = k - n;
        let mut alpha = spectrum.f[lag];
        let mut beta = spectrum.fprime[lag];
        for l in m + 1..m + n {
            let j = l + lag;
            let value = table.require(l, m + k) / corner * table.require(m, j);
            table.entries.insert((l, j), value);
            alpha -= value;
            beta -= (l * j) as f64 * value;
        }
        let det = (n * (2 * m + k)) as f64;
        let outer = ((m + n) * (m + k)) as f64;
        let inner = (m * (m + lag)) as f64;
        table.entries.insert((m, m + lag), (alpha * outer - beta) / det);
        table.entries.insert((m + n, m + k), (beta - alpha * inner) / det);
    }
    Ok(table)
}

/// `q(z) = sum_{j=m}^{m+k} delta(m, j) / sqrt(delta(m, m)) z^j` in dimension `n`.
pub fn extract_coefficients(table: &DeltaTable, n: usize) -> Result<Polynomial, ReconstructError> {
    let (m, k) = (table.m, table.k);
    if m + k >= n {
        return Err(ReconstructError::DegreeOverflow { m, k, n });
    }
    let anchor = table.require(m, m).re;
    if !(anchor > 0.0) {
        return Err(ReconstructError::NonPositiveDiagonal { index: m, value: anchor });
    }
    let r = anchor.sqrt();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    coeffs[m] = Complex64::new(r, 0.0);
    for j in m + 1..=m + k {
        coeffs[j] = table.require(m, j) / r;
    }
    Ok(Polynomial::new(coeffs).expect("finite products give finite coefficients"))
}

/// Full output of a reconstruction, including the intermediate support and
/// product table when the polynomial is not constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub polynomial: Polynomial,
    pub spectrum: AutocorrelationSpectrum,
    pub support: Option<SupportInfo>,
    pub table: Option<DeltaTable>,
}

/// Constant polynomial `sqrt(f_0)` when the derivative spectrum vanishes.
fn constant_case(spectrum: &AutocorrelationSpectrum, tol: f64) -> Option<Polynomial> {
    let scale = spectrum.max_abs_f();
    if !spectrum.fprime.iter().all(|v| v.norm() <= tol * scale) {
        return None;
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); spectrum.n];
    coeffs[0] = Complex64::new(spectrum.f[0].re.max(0.0).sqrt(), 0.0);
    Some(Polynomial::new(coeffs).expect("finite constant"))
}

/// Runs the four stages exactly as stated, with no stabilization.
pub fn reconstruct_unrefined(ms: &MeasurementSet, tol: f64) -> Result<Reconstruction, ReconstructError> {
    let spectrum = autocorrelation_from_measurements(ms);
    if let Some(polynomial) = constant_case(&spectrum, tol) {
        return Ok(Reconstruction { polynomial, spectrum, support: None, table: None });
    }
    let support = detect_support(&spectrum, tol)?;
    let table = delta_recursion(&spectrum, &support, tol)?;
    let polynomial = extract_coefficients(&table, spectrum.n)?;
    Ok(Reconstruction { polynomial, spectrum, support: Some(support), table: Some(table) })
}

/// Stabilized reconstruction with its intermediate results.
///
/// The support and the product table come from the plain pipeline. The
/// coefficients are taken from the null-space start of [`refine`], falling
/// back to the plain extraction, each polished against the intensities. If
/// the best fit still misses the data by more than [`CONSISTENCY_TOL`], the
/// error of the plain pipeline is reported when it had one, and
/// [`ReconstructError::Inconsistent`] otherwise.
pub fn reconstruct_traced(ms: &MeasurementSet, tol: f64) -> Result<Reconstruction, ReconstructError> {
    let spectrum = autocorrelation_from_measurements(ms);
    let n = spectrum.n;
    if let Some(polynomial) = constant_case(&spectrum, tol) {
        return Ok(Reconstruction { polynomial, spectrum, support: None, table: None });
    }
    let support = detect_support(&spectrum, tol)?;
    let table = fill_table(&spectrum, &support, tol)?;
    let plain = check_diagonals(&table, spectrum.max_abs_f() * tol, log::Level::Debug)
        .and_then(|()| extract_coefficients(&table, n));

    let fit = refine::IntensityFit::new(ms, support.m, support.k);
    let starts = std::iter::once_with(|| refine::phase_derivative_start(&spectrum, &support))
        .chain(std::iter::once_with(|| plain.as_ref().ok().map(|p| p.coeffs().to_vec())))
        .flatten();
    let mut best: Option<(Vec<Complex64>, f64)> = None;
    for start in starts {
        let polished = fit.polish(&start);
        let residual = fit.relative_residual(&polished);
        log::debug!("polished start, relative residual {residual:e}");
        if residual.is_finite() && best.as_ref().is_none_or(|b| residual < b.1) {
            best = Some((polished, residual));
        }
        if residual <= CONSISTENCY_TOL {
            break;
        }
    }

    match best {
        Some((coeffs, residual)) if residual <= CONSISTENCY_TOL => {
            let polynomial = Polynomial::new(coeffs).expect("finite coefficients").canonical_phase();
            Ok(Reconstruction { polynomial, spectrum, support: Some(support), table: Some(table) })
        }
        best => match plain {
            Err(e) => Err(e),
            Ok(_) => Err(ReconstructError::Inconsistent { residual: best.map_or(f64::INFINITY, |b| b.1) }),
        },
    }
}

/// Recovers `p`, up to a global phase, from `measure(p)`. The result has its
/// lowest nonzero coefficient real positive.
pub fn reconstruct(ms: &MeasurementSet, tol: f64) -> Result<Polynomial, ReconstructError> {
    reconstruct_traced(ms, tol).map(|r| r.polynomial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{autocorrelation_from_coefficients, measure};
    use crate::poly::{global_phase_distance, random_polynomial};
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real_poly(coeffs: &[f64]) -> Polynomial {
        Polynomial::from_real(coeffs).unwrap()
    }

    // Oracle: conj(a_i) a_j straight from the coefficients.
    fn product(p: &Polynomial, i: usize, j: usize) -> Complex64 {
        p.coeffs()[i].conj() * p.coeffs()[j]
    }

    fn spectrum_of(p: &Polynomial) -> AutocorrelationSpectrum {
        autocorrelation_from_measurements(&measure(p).unwrap())
    }

    #[test]
    fn support_of_sparse_cubic() {
        let s = detect_support(&spectrum_of(&real_poly(&[0.0, 1.0, 0.0, 1.0])), DEFAULT_TOL).unwrap();
        assert_eq!(s, SupportInfo { k: 2, kprime: Some(2), m: 1, d: 3 });
    }

    #[test]
    fn support_of_monomial() {
        let s = detect_support(&spectrum_of(&real_poly(&[0.0, 0.0, 1.0])), DEFAULT_TOL).unwrap();
        assert_eq!(s, SupportInfo { k: 0, kprime: Some(0), m: 2, d: 2 });
    }

    #[test]
    fn support_of_linear() {
        let s = detect_support(&spectrum_of(&real_poly(&[1.0, 2.0])), DEFAULT_TOL).unwrap();
        assert_eq!(s, SupportInfo { k: 1, kprime: Some(0), m: 0, d: 1 });
    }

    #[test]
    fn constant_spectrum_has_no_support() {
        let s = spectrum_of(&real_poly(&[2.0, 0.0]));
        assert_eq!(detect_support(&s, DEFAULT_TOL), Err(ReconstructError::ConstantSpectrum));
    }

    #[test]
    fn delta_table_linear() {
        let p = real_poly(&[1.0, 2.0]);
        let spectrum = spectrum_of(&p);
        let table = delta_recursion(&spectrum, &detect_support(&spectrum, DEFAULT_TOL).unwrap(), DEFAULT_TOL).unwrap();
        for (i, j, want) in [(0, 0, 1.0), (0, 1, 2.0), (1, 1, 4.0)] {
            assert!((table.get(i, j).unwrap() - c(want, 0.0)).norm() <= 1e-12);
            assert!((product(&p, i, j) - c(want, 0.0)).norm() == 0.0);
        }
        assert_eq!(table.entries().len(), 3);
    }

    #[test]
    fn delta_table_sparse_cubic() {
        let p = real_poly(&[0.0, 1.0, 0.0, 1.0]);
        // Exact spectra, so the trace is reproduced bit for bit.
        let spectrum = autocorrelation_from_coefficients(&p);
        let support = detect_support(&spectrum, DEFAULT_TOL).unwrap();
        let table = delta_recursion(&spectrum, &support, DEFAULT_TOL).unwrap();
        let expected = [
            ((1, 1), 1.0),
            ((1, 2), 0.0),
            ((1, 3), 1.0),
            ((2, 2), 0.0),
            ((2, 3), 0.0),
            ((3, 3), 1.0),
        ];
        for ((i, j), want) in expected {
            assert_eq!(table.get(i, j), Some(c(want, 0.0)), "delta({i},{j})");
            assert_eq!(product(&p, i, j), c(want, 0.0));
        }
        assert_eq!(table.entries().len(), expected.len());
        assert_eq!(table.rank_one_defect(), Some(0.0));
    }

    #[test]
    fn delta_table_monomial() {
        let p = real_poly(&[0.0, 0.0, 1.0]);
        let spectrum = spectrum_of(&p);
        let table = delta_recursion(&spectrum, &detect_support(&spectrum, DEFAULT_TOL).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(table.entries().len(), 1);
        assert!((table.get(2, 2).unwrap() - c(1.0, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn extract_examples() {
        for coeffs in [&[1.0, 2.0][..], &[0.0, 1.0, 0.0, 1.0]] {
            let p = real_poly(coeffs);
            let spectrum = autocorrelation_from_coefficients(&p);
            let table = delta_recursion(&spectrum, &detect_support(&spectrum, DEFAULT_TOL).unwrap(), DEFAULT_TOL).unwrap();
            assert_eq!(extract_coefficients(&table, p.n()).unwrap(), p);
        }
    }

    #[test]
    fn extract_rejects_bad_diagonal() {
        let mut entries = BTreeMap::new();
        entries.insert((0, 0), c(-1.0, 0.0));
        let table = DeltaTable { m: 0, k: 0, entries };
        assert!(matches!(
            extract_coefficients(&table, 2),
            Err(ReconstructError::NonPositiveDiagonal { index: 0, .. })
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let q = reconstruct(&measure(&Polynomial::new(vec![c(0.0, 3.0), c(0.0, 0.0)]).unwrap()).unwrap(), DEFAULT_TOL)
            .unwrap();
        assert!((q.coeffs()[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert_eq!(q.coeffs()[1], c(0.0, 0.0));

        let p = real_poly(&[1.0, 2.0]);
        let q = reconstruct(&measure(&p).unwrap(), DEFAULT_TOL).unwrap();
        assert!(global_phase_distance(&p, &q).unwrap() <= 1e-10);

        let base = reconstruct(&measure(&p).unwrap(), DEFAULT_TOL).unwrap();
        for i in 0..16 {
            let rotated = p.rotate(TAU * i as f64 / 16.0);
            let q = reconstruct(&measure(&rotated).unwrap(), DEFAULT_TOL).unwrap();
            assert!(global_phase_distance(&base, &q).unwrap() <= 1e-13);
            assert!(q.coeffs()[0].im == 0.0 && q.coeffs()[0].re > 0.0);
        }
    }

    #[test]
    fn zero_polynomial_reconstructs_to_zero() {
        let q = reconstruct(&measure(&Polynomial::zero(5)).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(q, Polynomial::zero(5));
    }

    #[test]
    fn deterministic_output() {
        let ms = measure(&random_polynomial(24, 5, None).unwrap()).unwrap();
        let a = reconstruct(&ms, DEFAULT_TOL).unwrap();
        let b = reconstruct(&ms, DEFAULT_TOL).unwrap();
        let bits = |p: &Polynomial| p.coeffs().iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn inconsistent_spectra_surface_errors() {
        let spectrum = |f: &[f64], fp: &[f64]| AutocorrelationSpectrum {
            n: f.len(),
            f: f.iter().map(|&v| c(v, 0.0)).collect(),
            fprime: fp.iter().map(|&v| c(v, 0.0)).collect(),
        };
        // f'_k / f_k = 1 gives m = (sqrt(5) - 1) / 2 for k = 1.
        assert!(matches!(
            detect_support(&spectrum(&[3.0, 1.0, 0.0], &[2.0, 1.0, 0.0]), DEFAULT_TOL),
            Err(ReconstructError::NonIntegerM { .. })
        ));
        // f'_k / f_k = -5 with k = 2.
        assert!(matches!(
            detect_support(&spectrum(&[3.0, 0.0, 1.0], &[2.0, 0.0, -5.0]), DEFAULT_TOL),
            Err(ReconstructError::SqrtDomain { .. })
        ));
        // m (m + 1) = 6 gives m = 2, overflowing N = 3.
        assert!(matches!(
            detect_support(&spectrum(&[3.0, 1.0, 0.0], &[2.0, 6.0, 0.0]), DEFAULT_TOL),
            Err(ReconstructError::DegreeOverflow { m: 2, k: 1, n: 3 })
        ));
        // f' extends past f.
        assert!(matches!(
            detect_support(&spectrum(&[3.0, 0.0, 0.0], &[2.0, 1.0, 0.0]), DEFAULT_TOL),
            Err(ReconstructError::SupportOrder { k: 0, kprime: 1 })
        ));
        // k = 1, m = 0 but f'_0 too large: delta(0,0) = f_0 - f'_0 < 0.
        let s = spectrum(&[1.0, 1.0], &[5.0, 0.0]);
        let support = detect_support(&s, DEFAULT_TOL).unwrap();
        assert!(matches!(
            delta_recursion(&s, &support, DEFAULT_TOL),
            Err(ReconstructError::NonPositiveDiagonal { index: 0, .. })
        ));
        // Hand-built support with a vanishing corner.
        let s = spectrum(&[1.0, 0.0], &[1.0, 0.0]);
        let support = SupportInfo { k: 1, kprime: Some(0), m: 0, d: 1 };
        assert!(matches!(
            delta_recursion(&s, &support, DEFAULT_TOL),
            Err(ReconstructError::DivisionByNearZero { .. })
        ));
    }

    #[test]
    fn random_round_trip() {
        for seed in 0..60u64 {
            let n = 2 + seed as usize % 40;
            let p = random_polynomial(n, seed, None).unwrap();
            let rec = reconstruct_traced(&measure(&p).unwrap(), DEFAULT_TOL).unwrap();
            let dist = global_phase_distance(&p, &rec.polynomial).unwrap();
            assert!(dist <= 1e-10 * (1.0 + p.norm()), "seed {seed}: {dist}");
            let s = rec.support.unwrap();
            assert!(s.kprime.unwrap() <= s.k);
            assert_eq!((s.m, s.d), (0, n - 1));
        }
    }

    #[test]
    fn low_degree_tables_hold_the_products() {
        for seed in 0..40u64 {
            let n = 2 + seed as usize % 7;
            let p = random_polynomial(n, seed, None).unwrap();
            let rec = reconstruct_unrefined(&measure(&p).unwrap(), DEFAULT_TOL).unwrap();
            assert!(global_phase_distance(&p, &rec.polynomial).unwrap() <= 1e-9 * (1.0 + p.norm()));
            let canon = p.canonical_phase();
            let table = rec.table.unwrap();
            let scale = p.norm_sqr();
            for (&(i, j), &value) in table.entries() {
                let want = product(&canon, i, j);
                assert!((value - want).norm() <= 1e-9 * scale, "seed {seed} delta({i},{j})");
            }
            assert!(table.rank_one_defect().unwrap() <= 1e-8);
        }
    }

    #[test]
    fn sparse_supports_round_trip() {
        for seed in 0..30u64 {
            let n = 3 + seed as usize % 20;
            let lo = seed as usize % (n / 2);
            let hi = n - 1 - seed as usize % 2;
            let p = random_polynomial(n, seed, Some(lo..=hi)).unwrap();
            let rec = reconstruct_traced(&measure(&p).unwrap(), DEFAULT_TOL).unwrap();
            let s = rec.support.unwrap();
            assert_eq!((s.m, s.d), (lo, hi), "seed {seed}");
            assert!(global_phase_distance(&p, &rec.polynomial).unwrap() <= 1e-10 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn corrupted_measurements_are_rejected() {
        let p = random_polynomial(12, 4, None).unwrap();
        let ms = measure(&p).unwrap();
        let mut bumped = ms.intensities_p().to_vec();
        bumped[3] *= 1.5;
        let bad = MeasurementSet::new(12, bumped, ms.intensities_dp().to_vec()).unwrap();
        let err = reconstruct(&bad, DEFAULT_TOL).unwrap_err();
        assert!(!err.name().is_empty());
        assert_eq!(ReconstructError::Inconsistent { residual: 1.0 }.name(), "InconsistentMeasurements");
    }
}
