//! Multilevel Toeplitz operators on finite sections of the Hardy space
//! `H²(𝔻ⁿ)` and its vector-valued one-variable analogue.
//!
//! The crate builds (block) Toeplitz matrices from torus symbols, tests
//! shift-invariance, recovers symbols from diagonals, measures compactness
//! through finite-rank layer projectors, splits operators into
//! Toeplitz + compact parts, and checks rigidity and compactness on
//! Beurling-type model spaces `H² ⊖ θH²`.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fft;
pub mod lattice;
pub mod linalg;
pub mod modelspace;
pub mod operators;
pub mod par;
pub mod random;
pub mod symbols;

pub use error::{Error, Result};
pub use lattice::{IndexBox, MultiIndex};
pub use linalg::{CMatrix, CVector};
pub use operators::{NormMethod, Structure, TruncatedOperator};
pub use symbols::{FrequencyBox, TorusSymbol};
