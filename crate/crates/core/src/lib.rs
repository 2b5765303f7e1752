//! Dissipative continuous spontaneous localization on a one-dimensional grid.
//!
//! The crate integrates the stochastic collapse equation for single
//! trajectories and ensembles, propagates the averaged master equation, and
//! evaluates macroscopic collapse and dissipation rates for rigid bodies.

pub mod cli;
pub mod collapse;
pub mod density;
pub mod error;
pub mod grid;
pub mod noise;
pub mod macro_rates;
pub mod master;
pub mod params;
pub mod qstate;
pub mod sde;

pub use collapse::{KernelL, KernelVariant};
pub use density::DensityMatrix;
pub use error::{Error, Result};
pub use grid::{Grid, C64};
pub use params::{ModelParams, Preset, SimModel};
pub use qstate::{ObservableSet, WaveState};
