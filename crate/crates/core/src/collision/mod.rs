//! Cutoff collision kernel, post-collision map, gain/loss operators and the
//! Fourier-side gain term.

mod bobylev;
mod direct;
mod kernel;
mod lattice;
mod sphere;

pub use bobylev::{
    gain_bobylev, gain_bobylev_block, gain_bobylev_with, riesz_constant, sigma_factor, split_frequencies,
    BobylevQuadrature, GridSampler, SpectralSampler,
};
pub use direct::{CollisionOperator, GainScheme};
pub use kernel::{AngularFactor, CollisionKernel, KernelSpec};
pub use lattice::origin_weight;
pub use sphere::{gauss_legendre, gauss_legendre_on, post_collision, SphereRule, SphereRuleSpec};

use crate::error::Result;
use crate::grid::{fourier_v, DistributionField, SpectralField};

/// `A[g](x, v) = ∫∫ g(u) B(u − v, ω) du dω`.
pub fn loss_rate(g: &DistributionField, k: &CollisionKernel, rule: &SphereRule) -> Result<DistributionField> {
    CollisionOperator::new(g.grid(), k, rule, GainScheme::Spectral).loss_rate(g)
}

/// `Q⁺(f, g)` by quadrature over relative velocities and the sphere rule.
pub fn gain_direct(
    f: &DistributionField,
    g: &DistributionField,
    k: &CollisionKernel,
    rule: &SphereRule,
) -> Result<DistributionField> {
    CollisionOperator::new(f.grid(), k, rule, GainScheme::Spectral).gain(f, g)
}

/// `Q(f, f) = Q⁺(f, f) − f A[f]`.
pub fn collision_full(f: &DistributionField, k: &CollisionKernel, rule: &SphereRule) -> Result<DistributionField> {
    CollisionOperator::new(f.grid(), k, rule, GainScheme::Spectral).collision(f)
}

/// Least-squares constant `c` with `c · gain_bobylev ≈ fourier_v(gain_direct)` on a pair.
pub fn fitted_bobylev_constant(
    f: &DistributionField,
    g: &DistributionField,
    k: &CollisionKernel,
    rule: &SphereRule,
) -> Result<f64> {
    let d = fourier_v(&gain_direct(f, g, k, rule)?);
    let b = gain_bobylev(&fourier_v(f), &fourier_v(g), k, rule)?;
    Ok(projection_ratio(&b, &d))
}

/// `⟨b, d⟩ / ⟨b, b⟩` (real part).
pub fn projection_ratio(b: &SpectralField, d: &SpectralField) -> f64 {
    let num: f64 = b.values().iter().zip(d.values()).map(|(x, y)| (x.conj() * y).re).sum();
    let den: f64 = b.values().iter().map(|x| x.norm_sqr()).sum();
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}
