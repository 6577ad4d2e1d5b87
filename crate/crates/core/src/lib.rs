//! Numerical toolkit for G₂-structures on periodic grids.
//!
//! The crate is layered: [`algebra`] holds the exact pointwise multilinear
//! algebra, [`field`] samples structures on reduced-dimension tori and
//! differentiates them into per-point jets, [`operators`] evaluates the
//! curvature/torsion operators and symbols, [`variation`] checks first and
//! second variation formulas by finite differences, and [`flow`] integrates
//! the associated flows.

pub mod algebra;
pub mod error;
pub mod field;
pub mod flow;
pub mod grid;
pub mod io;
pub mod jet;
pub mod operators;
pub mod spectral;
pub mod symbols;
pub mod variation;
pub mod tensor;

pub use error::G2Error;
pub use tensor::Tensor;
