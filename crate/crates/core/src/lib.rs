//! Numerical laboratory for the spatially inhomogeneous cutoff Boltzmann equation
//! with soft and Maxwellian potentials on a periodic phase-space grid.

pub mod diagnostics;
pub mod error;
mod fft;
pub mod collision;
pub mod estimates;
pub mod grid;
pub mod littlewood_paley;
pub mod solvers;
pub mod transport;

pub use error::{LabError, Result};
pub use grid::{
    apply_scaling, fourier_v, inverse_fourier_v, weighted_norm, weighted_norm_with, DistributionField, FieldRef,
    GridHeader, NormMix, PhaseGrid, ScalingParams, SpectralField, WeightKind, Weights,
};
