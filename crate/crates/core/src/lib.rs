//! Permanent spatial decomposition (PSD) toolkit.
//!
//! Wave functions live on 1D/2D grids and evolve under a spectral
//! split-step propagator. On top of that sit the decomposition overlap
//! functional w and its permanence variant w⁺, the refinement order ≼,
//! branching-tree extraction and verification, the damped-oscillator and
//! ideal decoherence models, and executable scenarios that contrast
//! decoherence with permanent spatial separation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decomposition;
pub mod error;
pub mod evolution;
mod fft;
pub mod finer;
pub mod grid;
pub mod oscillator;
pub mod overlap;
pub mod register;
pub mod runner;
pub mod scenarios;
pub mod stationary;
pub mod tree;
pub mod wavefunction;

pub use decomposition::{decompose_by_partition, validate, Decomposition};
pub use error::{PsdError, Result};
pub use evolution::EvolutionEngine;
pub use finer::{is_finer, FinerOutcome};
pub use grid::{Axis, Grid, Partition, Region};
pub use overlap::{w_exact_pair, w_given_partition, w_local_search, w_optimize, WConfig, WMode, WReport};
pub use wavefunction::{gaussian_packet, inner, project, PacketParams, WaveFunction};
