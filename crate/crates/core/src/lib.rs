//! Fisher information, Cramér-Rao bounds and estimation experiments for
//! quantum-optical phase estimation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimation;
pub mod fisher;
pub mod fock;
pub mod linalg;
pub mod scalar;
pub mod scenarios;
pub mod statmodel;

pub use error::{Error, Result};
pub use scalar::Real;
pub use fock::FockBasis;
pub use statmodel::ParamPoint;

/// Double-precision aliases for the generic types.
pub type State = fock::StateVector<f64>;
pub type Density = fock::DensityOperator<f64>;
pub type Operator = fock::LinearOperator<f64>;
pub type Measurement = fock::Povm<f64>;
pub type Model = statmodel::ParametricModel<f64>;
