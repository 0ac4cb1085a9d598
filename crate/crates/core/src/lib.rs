pub mod admm;
pub mod eval;
pub mod penalty;
pub mod problem;
pub mod simgen;
pub mod tensor;

pub use admm::{AdmmError, AdmmOptions, Solution, Step3Variant};
pub use penalty::{PenaltyError, PenaltyKind, PenaltyTerm, ProxOperator};
pub use tensor::{MatricizationSpec, Tensor, TensorError};
