//! Decoherence models: coherent states of a truncated oscillator, the
//! damped-oscillator master equation with its closed-form solution, and an
//! ideal pointer/environment toy model.

pub mod fock;
pub mod ideal;
pub mod lindblad;

pub use fock::{coherent_overlap, coherent_state, completeness_check, CompletenessReport, FockSpace};
pub use ideal::{ideal_model_evolve, IdealModelConfig, IdealModelState};
pub use lindblad::{
    analytic_solution, lindblad_evolve, superposition_decoherence, LindbladParams, LindbladRun,
    OscillatorDensityMatrix, SuperpositionReport,
};
