//! Double operator integrals on finite-dimensional Hilbert spaces.
//!
//! At finite dimension a projection-valued measure is a finite list of
//! orthogonal eigenprojections, and the double operator integral
//! `∬ φ(x,y) dE(x) T dF(y)` is the Schur multiplier
//! `Σ_ij φ(x_i, y_j) P_i T Q_j`. The crate builds that engine
//! ([`doi`]) on top of a Jacobi eigensolver ([`eigen`]), the kernel algebra
//! with its decomposition norms ([`kernels`]), operator-path derivatives
//! ([`perturbation`]) and the spectral flow of an isolated spectral patch
//! ([`flow`]).

pub mod doi;
pub mod eigen;
pub mod error;
pub mod flow;
pub mod kernels;
pub mod matrix;
pub mod norms;
pub mod perturbation;
pub mod polarization;
pub mod pvm;
pub mod quadrature;
pub mod random;

pub use eigen::{hermitian_eig, matrix_exp_i, matrix_function, EigenDecomposition};
pub use error::{Error, Result};
pub use matrix::{commutator, ComplexMatrix, HermitianMatrix, C64};
pub use norms::{norms, Norms};
pub use pvm::{AtomicMeasure, FinitePVM, ProductPVM};

