//! Exact model computation of diagonal Bergman kernel expansion blocks.
//!
//! Layers, bottom up: [`scalar`] (exact `ℚ(i)[π^{±1}]` and `λ`-rational
//! arithmetic), [`fiber`] (the graded fiber), [`fock`] (kernel states and the
//! ladder algebra), [`geometry`] (curvature input and the model operators),
//! [`engine`] (resolvent series and residues), [`closed_forms`] (reference
//! formulas), [`oracle`] (floating-point cross-checks) and [`report`].

pub mod engine;
pub mod error;
pub mod closed_forms;
pub mod fiber;
pub mod fock;
pub mod geometry;
pub mod oracle;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
