//! Energy audits, discrete operators, manufactured solutions and
//! convergence studies.

pub mod convergence;
pub mod energy;
pub mod mms;
pub mod operators;

pub use convergence::{convergence_study, fit_slope, ErrorLevel, ErrorTable, Ladder};
pub use energy::{double_well, energy, mass, EnergyReport};
pub use mms::{mms_forcing, EquilibriumMms, ExactSolution, MmsForcing, ScalarJet, TrigMms, VectorJet};
pub use operators::{
    discrete_laplacian, gn_probe, inverse_laplacian, neg_one_h_norm, ritz_project, AnalysisError, ScalarOperators,
};
