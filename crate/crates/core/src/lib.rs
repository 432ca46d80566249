//! Phase retrieval of complex polynomials from `4N-4` phaseless measurements.
//!
//! A polynomial `p` of degree below `N` is measured through `|p|` at the
//! `(2N-1)`-th roots of unity and `|p'|` at the `(2N-3)`-th roots of unity.
//! From these intensities [`reconstruct::reconstruct`] recovers `p` exactly up
//! to a global phase factor by way of the coefficient autocorrelations.
//!
//! ```
//! use phaseret::{measure, reconstruct, global_phase_distance, random_polynomial, DEFAULT_TOL};
//!
//! let p = random_polynomial(8, 1, None).unwrap();
//! let q = reconstruct(&measure(&p).unwrap(), DEFAULT_TOL).unwrap();
//! assert!(global_phase_distance(&p, &q).unwrap() < 1e-10);
//! ```

pub mod measurement;
pub mod oracle;
pub mod poly;
pub mod reconstruct;
pub mod rng;

pub use measurement::{
    autocorrelation_from_coefficients, autocorrelation_from_measurements, measure, measure_at_nodes,
    roots_of_unity, trig_interpolate, AutocorrelationSpectrum, MeasureError, MeasurementSet, NodeMeasurements,
    NodeSet, TrigPolynomial,
};
pub use oracle::{brute_force_reconstruct, injectivity_probe, OracleError};
pub use poly::{global_phase_distance, random_polynomial, PolyError, Polynomial};
pub use reconstruct::{
    delta_recursion, detect_support, extract_coefficients, reconstruct, reconstruct_traced, reconstruct_unrefined,
    DeltaTable, Reconstruction, ReconstructError, SupportInfo, CONSISTENCY_TOL, DEFAULT_TOL,
};
