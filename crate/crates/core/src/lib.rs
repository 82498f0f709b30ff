//! Certification, synthesis and statistical verification of bound entangled
//! Gaussian states of continuous-variable systems.
//!
//! Covariance matrices are vacuum-normalized (the vacuum is the identity) and
//! use the interleaved quadrature ordering `(x1, p1, ..., xn, pn)` everywhere.
//! Mode indices are zero-based in the Rust API and one-based in every file
//! format.

pub mod certifier;
pub mod circuit;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod lmi;
pub mod rng;
pub mod search;
pub mod tomography;

pub use certifier::{
    certify, entanglement_measure, ppt_measure, separability_feasible, CertificationReport, CertifierConfig,
    Classification, SdpFeasibilityProblem,
};
pub use circuit::{simulate_circuit, CircuitSpec};
pub use error::{Error, Result};
pub use gaussian::{
    hermitian_min_eig, partial_transpose, permute_modes, physicality_margin, symplectic_eigenvalues, symplectic_form,
    CovarianceMatrix, GaussianState, ModePartition, SymplecticForm,
};
