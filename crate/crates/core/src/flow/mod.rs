//! Spectral flow of an isolated spectral patch: Riesz projections, the
//! Hastings generator and the flow unitaries that transport `P(s₀)` to `P(s)`.

pub mod hastings;
pub mod integrate;
pub mod patch;
pub mod weight;

pub use integrate::{flow_integrate, uniform_grid, verify_automorphic_equivalence, AutomorphicReport, FlowResult, FlowSettings};
pub use hastings::{commutator_identity_check, hastings_generator, hastings_kernel, CommutatorCheck, FdScheme, HastingsMethod};
pub use patch::{detect_patch, riesz_projection, Contour, GappedPath, SpectralPatch};
pub use weight::{build_weight_function, WeightFunction, WeightFunctionSettings};
