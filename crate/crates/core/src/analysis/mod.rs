//! Norms, manufactured solutions, error measures, identity checks,
//! inequality diagnostics and convergence studies.

pub mod convergence;
pub mod errors;
pub mod identities;
pub mod inequalities;
pub mod manufactured;
pub mod norms;

pub use convergence::{
    estimate_rates, rate, run_convergence, run_projection_study, ConvergenceReport, ConvergenceStudy, LevelRates,
    LevelResult, MeshFamily, Rate, RateCheck, RateTargets,
};
pub use errors::{error_bundle, projection_errors, ErrorBundle, ProjectionErrors};
pub use identities::{check_identities, inf_sup_witness, IdentityData, IdentityOptions, IdentityReport, IdentityResidual};
pub use inequalities::{inequality_constants, InequalityConstants};
pub use manufactured::{ManufacturedSolution, SolutionKind};
pub use norms::{h1h_gram, h1h_norm, jump_moments, l2_interior_norm, l2_scalar_norm, triple_bar_norm};
