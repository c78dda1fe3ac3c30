//! `‖Q̃⁺(f̃, g̃)‖_{L²_ξ} ≲ ‖f̃‖_{L^{6p/(6−pγ)}} ‖g̃‖_{L^{6q/(6−qγ)}}`, `1/p + 1/q = 1/2`,
//! evaluated with closed-form ξ-side samplers on the ξ grid.

use super::bilinear::grid_label;
use super::family::{AtomSampler, TestFamily, TestFunction};
use super::report::{ratio, EstimateReport, SampleRatio};
use crate::collision::{gain_bobylev_block, BobylevQuadrature, CollisionKernel, SphereRule};
use crate::error::{LabError, Result};
use crate::grid::PhaseGrid;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderPair {
    pub p: f64,
    pub q: f64,
}

impl HolderPair {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 2.0 && q >= 2.0) || (1.0 / p + 1.0 / q - 0.5).abs() > 1e-12 {
            return Err(LabError::Usage(format!("(p, q) = ({p}, {q}) violates 1/p + 1/q = 1/2")));
        }
        Ok(Self { p, q })
    }

    /// Lebesgue exponents on the right-hand side for kernel exponent `γ`.
    pub fn norm_exponents(&self, gamma: f64) -> Result<(f64, f64)> {
        let e = |p: f64| {
            if p.is_infinite() {
                -6.0 / gamma
            } else {
                6.0 * p / (6.0 - p * gamma)
            }
        };
        let (a, b) = (e(self.p), e(self.q));
        if !(a.is_finite() && b.is_finite() && a >= 1.0 && b >= 1.0) {
            return Err(LabError::Usage(format!("exponents ({a}, {b}) are not usable Lebesgue exponents")));
        }
        Ok((a, b))
    }
}

fn lp_xi(vals: &[num_complex::Complex64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    (vals.iter().map(|z| z.norm().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

pub fn convolution_ratio(
    f: &TestFunction,
    g: &TestFunction,
    index: u64,
    grid: &PhaseGrid,
    kernel: &CollisionKernel,
    rule: &SphereRule,
    pair: HolderPair,
) -> Result<SampleRatio> {
    let (a, b) = pair.norm_exponents(kernel.gamma())?;
    let cell = grid.cell_xi();
    let fx = f.xi_block(grid);
    let gx = g.xi_block(grid);
    let rhs = lp_xi(&fx, a, cell) * lp_xi(&gx, b, cell);
    if rhs == 0.0 {
        return Ok(ratio(index, 0.0, 0.0));
    }
    let q = gain_bobylev_block(
        grid,
        &AtomSampler { atoms: f.atoms.clone() },
        &AtomSampler { atoms: g.atoms.clone() },
        kernel,
        rule,
        BobylevQuadrature::default(),
    )?;
    Ok(ratio(index, lp_xi(&q, 2.0, cell), rhs))
}

/// ξ refinement: `dξ = π/L_v` halves at fixed `dv`.
pub fn xi_refined(grid: &PhaseGrid) -> Result<PhaseGrid> {
    PhaseGrid::new(grid.lx(), grid.nx(), 2.0 * grid.lv(), 2 * grid.nv())
}

/// Ratios over `n_samples` velocity-only pairs; passes iff the max ratio grows by
/// at most ×1.5 under one ξ refinement.
pub fn check_convolution(
    kernel: &CollisionKernel,
    pair: HolderPair,
    family: &TestFamily,
    n_samples: usize,
    grid: &PhaseGrid,
    rule: &SphereRule,
) -> Result<EstimateReport> {
    let (a, b) = pair.norm_exponents(kernel.gamma())?;
    let run = |g: &PhaseGrid| -> Result<Vec<SampleRatio>> {
        (0..n_samples as u64)
            .map(|i| convolution_ratio(&family.sample(2 * i), &family.sample(2 * i + 1), i, g, kernel, rule, pair))
            .collect()
    };
    let base = run(grid)?;
    let fine_grid = xi_refined(grid)?;
    let fine = run(&fine_grid)?;
    Ok(EstimateReport::new("convolution", family.descriptor(), family.seed, grid_label(grid), base)
        .with_refinement(fine, 1.5)
        .note(format!("gamma = {}, (p, q) = ({}, {}), norms L^{a:.4} x L^{b:.4}", kernel.gamma(), pair.p, pair.q))
        .note(format!("refined grid {}", grid_label(&fine_grid))))
}
