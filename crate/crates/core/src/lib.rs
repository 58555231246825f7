//! Fast direct solvers for `-Δu + αu = f` on boxes with homogeneous Dirichlet
//! data, discretized by tensor-product Lagrange elements of order `n` on
//! uniform meshes.
//!
//! The 1D generalized eigenproblem `A v = λ C v` of the element-assembled
//! stiffness and mass has an explicit eigenbasis: interior bubbles built from
//! the reference element eigenvectors, plus `n` branches per sine frequency
//! whose eigenvalues solve a small rational equation. Expanding in this basis
//! costs one sine/cosine FFT per local degree of freedom, which gives
//! `O(nK log K)` transforms per line and `O(K^N log K)` solvers on `N`-D boxes.
//!
//! Layers, bottom up:
//!
//! - [`ref_element`]: local matrices on `[-1, 1]` and element eigenproblems;
//! - [`spectral`]: the per-`(n, K)` eigen table and its text cache;
//! - [`trig`]: DST-I, DST-III and DCT-III on top of a real FFT (`realfft`);
//! - [`transform`]: the inverse `F_n`, direct `F_n` and `FC_n` transforms;
//! - [`poisson`]: 1D and `N`-D solvers (full diagonalization and
//!   diagonalization plus banded line solves);
//! - [`oracle`]: slow dense reference implementations used by the tests.

pub mod dense;
pub mod grid;
pub mod oracle;
pub mod poisson;
pub mod quadrature;
pub mod ref_element;
pub mod scalar;
pub mod spectral;
pub mod transform;
pub mod trig;

pub use grid::{CoefficientArray1D, GridFunction1D, GridFunctionND};
pub use poisson::{
    apply_operator, fem_load_average, solve_1d, solve_nd, solve_nd_algorithm_a, solve_nd_algorithm_b,
    Algorithm, ManufacturedCase, ProblemSpec, SolveReport,
};
pub use ref_element::{
    build_element_matrices, element_spectrum_full, even_odd_split, interior_eigensystem, verify_assumption_a,
    AssumptionReport, ElementMatrices, InteriorEigenSystem, Parity,
};
pub use scalar::{DoubleDouble, Scalar};
pub use spectral::{build_spectral_table, load_table, save_table, solve_theta_equation, SpectralTable1D};
pub use transform::{direct_fcn, direct_fn, inverse_fn};

use std::path::PathBuf;

/// Failures of the cache reader.
#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported table format {found:?} (expected SFEM1)")]
    Version { found: String },
    #[error("corrupt table at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("table is for n={found_n}, K={found_k} but n={want_n}, K={want_k} was requested")]
    Mismatch {
        found_n: usize,
        found_k: usize,
        want_n: usize,
        want_k: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("element order {n} out of range 1..={max}")]
    OrderOutOfRange { n: usize, max: usize },
    #[error("interior eigenvalues {first} and {second} of order {n} collide near {value}")]
    EigenvalueCollision {
        n: usize,
        first: usize,
        second: usize,
        value: f64,
    },
    #[error("theta equation for n={n}, theta={theta}: {reason}")]
    ThetaBracket { n: usize, theta: f64, reason: String },
    #[error("lambda={lambda} is within the pole tolerance of interior eigenvalue {l} ({pole})")]
    NearPole { lambda: f64, l: usize, pole: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("element count {0} is too small (need K >= 2)")]
    ElementCount(usize),
    #[error("denominator {value:e} at {index} is not positive (alpha below the discrete bound)")]
    NonPositiveDenominator { index: String, value: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("dense oracle limited to {cap} unknowns, got {size}")]
    DenseCapExceeded { size: usize, cap: usize },
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
