//! Shared fixtures for the kernel benchmarks.

use boltzlab::{DistributionField, PhaseGrid};

/// Spatially modulated Gaussian on a grid with `N_x = 4`.
pub fn modulated_gaussian(lv: f64, nv: usize) -> DistributionField {
    let grid = PhaseGrid::new(1.0, 4, lv, nv).expect("power-of-two grid");
    DistributionField::from_fn(&grid, |x, v| {
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        (1.0 + 0.3 * (std::f64::consts::PI * x[0]).cos()) * (-v2).exp()
    })
}
