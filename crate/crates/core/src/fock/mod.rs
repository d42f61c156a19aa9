//! Truncated multimode Fock space: states, operators, optics, measurements.

pub mod basis;
pub mod operator;
pub mod optics;
pub mod povm;
pub mod state;
pub mod states;

pub use basis::FockBasis;
pub use operator::{build_mode_operators, total_number, weighted_number, LinearOperator, ModeOperators, N0};
pub use optics::{
    beam_splitter, displacement, loss_channel, phase_shifter, quadrature_displacement, squeeze_operator, symmetric_mzi,
};
pub use povm::{outcome_distribution, outcome_distribution_pure, Povm};
pub use state::{DensityOperator, StateVector};
pub use states::{coherent_state, fixed_n_state, noon_state, squeezed_vacuum, two_mode_squeezed, Truncation};
