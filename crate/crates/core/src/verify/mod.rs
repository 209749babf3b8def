//! End-to-end checks of the integral inequalities.

pub mod classical;
pub mod energy;
pub mod gmc;
pub mod hill;
pub mod supconv;

pub use classical::*;
pub use energy::{energy_monotonicity, EnergyCurve, EnergyMeasure};
pub use gmc::{gmc_converse_search, gmc_sides, verify_gmc, GmcOptions, GmcSides, Witness, BUMP_CENTERS, BUMP_WIDTHS};
pub use hill::{hill_evolution, HillSetup};
pub use supconv::{sup_convolution, Lift, SupConvolution};
