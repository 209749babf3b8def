//! Numerical verification of Bellman-type PDE systems and the Gaussian
//! isoperimetric inequalities they encode.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: small symmetric-matrix algebra (Schur products, kernel
//!   projections, minors, Sherman–Morrison).
//! * [`special`], [`profile`], [`quadrature`]: Gaussian special functions,
//!   profile functions `(φ, Φ, Φ⁻¹)` and Gaussian / adaptive quadrature.
//! * [`catalog`]: candidate Bellman functions with analytic derivatives.
//! * [`pde`]: pointwise checkers for both PDE families and their reductions.
//! * [`flows`]: heat and Ornstein–Uhlenbeck flows of special initial data.
//! * [`verify`]: integral inequalities checked end to end.
//! * [`dbar`]: Bessel series solutions of `∂f/∂z̄ = f̄` and hodograph maps.
//! * [`general_rank`]: block systems for initial data of higher rank.
//! * [`config`], [`suite`]: the configuration-driven batch runner.

pub mod catalog;
pub mod config;
pub mod dbar;
pub mod error;
pub mod flows;
pub mod general_rank;
pub mod grid;
pub mod linalg;
pub mod pde;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod sets;
pub mod special;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{ColumnSystem, Projection, SymMatrix};
pub use report::{CheckReport, Verdict};
