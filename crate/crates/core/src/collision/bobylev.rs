//! Gain term on the velocity-Fourier side.
//!
//! For `γ = 0`:
//! `Q̃⁺(ξ) = (2π)^{3/2} ∫ b_σ(ξ̂·σ) f̃(ξ⁺) g̃(ξ⁻) dσ`, `ξ± = (ξ ± |ξ|σ)/2`.
//!
//! For `γ < 0` the Riesz factor `|η|^{−3−γ}` is integrated against the σ-sphere
//! in closed form.  With `η' = ξ⁺ + η`, `a = |ξ|/2`, `d = |η' − ξ/2|`, `α = 3 + γ`:
//! `Q̃⁺(ξ) = C_γ b_σ ∫ f̃(η') g̃(ξ − η') W(d; a) dη'`,
//! `W = 2π [(d + a)^{2−α} − |d − a|^{2−α}] / (a d (2 − α))`,
//! and the `η'` integral is taken in spherical coordinates about `ξ/2`, so the
//! only singularities are radial (`d = a`, and `d = 0` when `ξ = 0`); both are
//! removed by the substitution `t = s^{−1/γ}`.

use super::kernel::{AngularFactor, CollisionKernel};
use super::lattice::gamma_fn;
use super::sphere::{gauss_legendre_on, SphereRule};
use crate::error::{LabError, Result};
use crate::fft::CubeFft;
use crate::grid::{split3, PhaseGrid, SpectralField, VelocityTransform};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Off-grid evaluation of a ξ-side function.
pub trait SpectralSampler: Sync {
    fn eval(&self, xi: [f64; 3]) -> Complex64;
    /// The function vanishes identically for `|ξ|` beyond this radius.
    fn support_radius(&self) -> f64 {
        f64::INFINITY
    }
}

impl<F: Fn([f64; 3]) -> Complex64 + Sync> SpectralSampler for F {
    fn eval(&self, xi: [f64; 3]) -> Complex64 {
        self(xi)
    }
}

/// Trigonometric interpolant of a grid block, tabulated on a refined grid and
/// read back with tricubic Lagrange interpolation (periodic in ξ).
pub struct GridSampler {
    fine: Vec<Complex64>,
    nf: usize,
    step: f64,
}

impl GridSampler {
    /// Refinement factor: 4 while the refined cube stays within 128³ points.
    pub fn refinement(nv: usize) -> usize {
        (128 / nv).clamp(1, 4)
    }

    pub fn new(grid: &PhaseGrid, xi_block: &[Complex64]) -> Self {
        let n = grid.nv();
        let p = Self::refinement(n);
        let nf = n * p;
        let mut vblock = xi_block.to_vec();
        VelocityTransform::new(grid).to_v(&mut vblock);
        let mut fine = vec![Complex64::default(); nf * nf * nf];
        let off = nf / 2 - n / 2;
        for (i, z) in vblock.iter().enumerate() {
            let [a, b, c] = split3(i, n);
            fine[((a + off) * nf + b + off) * nf + c + off] = *z;
        }
        CubeFft::new(nf).inverse_centered(&mut fine);
        let s = (2.0 * PI).powf(-1.5) * grid.cell_v();
        fine.iter_mut().for_each(|z| *z *= s);
        Self { fine, nf, step: grid.dxi() / p as f64 }
    }
}

fn cubic_weights(t: f64) -> [f64; 4] {
    // Lagrange basis on nodes -1, 0, 1, 2.
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl SpectralSampler for GridSampler {
    fn eval(&self, xi: [f64; 3]) -> Complex64 {
        let nf = self.nf as i64;
        let mut base = [0i64; 3];
        let mut w = [[0.0; 4]; 3];
        for ax in 0..3 {
            let u = xi[ax] / self.step + (nf / 2) as f64;
            let fl = u.floor();
            base[ax] = fl as i64 - 1;
            w[ax] = cubic_weights(u - fl);
        }
        let mut idx = [[0usize; 4]; 3];
        for ax in 0..3 {
            for k in 0..4 {
                idx[ax][k] = (base[ax] + k as i64).rem_euclid(nf) as usize;
            }
        }
        let mut acc = Complex64::default();
        for (ia, wa) in idx[0].iter().zip(&w[0]) {
            let mut acc_b = Complex64::default();
            for (ib, wb) in idx[1].iter().zip(&w[1]) {
                let row = &self.fine[(ia * self.nf + ib) * self.nf..(ia * self.nf + ib + 1) * self.nf];
                let acc_c = row[idx[2][0]] * w[2][0]
                    + row[idx[2][1]] * w[2][1]
                    + row[idx[2][2]] * w[2][2]
                    + row[idx[2][3]] * w[2][3];
                acc_b += acc_c * wb;
            }
            acc += acc_b * wa;
        }
        acc
    }
}

/// `(ξ⁺, ξ⁻) = ((ξ + |ξ|σ)/2, (ξ − |ξ|σ)/2)`.
pub fn split_frequencies(xi: [f64; 3], sigma: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    let p: [f64; 3] = std::array::from_fn(|i| 0.5 * (xi[i] + r * sigma[i]));
    let m: [f64; 3] = std::array::from_fn(|i| xi[i] - p[i]);
    (p, m)
}

/// σ-representation angular factor: `b_σ(t) = [b(c) + b(−c)] / (4c)`, `c = √((1 − t)/2)`.
pub fn sigma_factor(kernel: &CollisionKernel, t: f64) -> f64 {
    let c = ((1.0 - t) / 2.0).max(0.0).sqrt();
    if c < 1e-300 {
        return 0.0;
    }
    kernel.b_folded(c) / (4.0 * c)
}

/// `C_γ = 2^{γ+3/2} Γ((3+γ)/2) / Γ(−γ/2)`: `|z|^γ = (2π)^{−3/2} C_γ ∫ |η|^{−3−γ} e^{iη·z} dη`.
pub fn riesz_constant(gamma: f64) -> f64 {
    2f64.powf(gamma + 1.5) * gamma_fn((3.0 + gamma) / 2.0) / gamma_fn(-gamma / 2.0)
}

/// Quadrature settings for the Fourier-side gain.
#[derive(Debug, Clone, Copy)]
pub struct BobylevQuadrature {
    /// Radial Gauss nodes on each side of the singular shell.
    pub radial: usize,
}

impl Default for BobylevQuadrature {
    fn default() -> Self {
        Self { radial: 16 }
    }
}

/// `Q̃⁺` on one ξ block from two samplers.
pub fn gain_bobylev_block(
    grid: &PhaseGrid,
    f: &dyn SpectralSampler,
    g: &dyn SpectralSampler,
    kernel: &CollisionKernel,
    rule: &SphereRule,
    quad: BobylevQuadrature,
) -> Result<Vec<Complex64>> {
    let gamma = kernel.gamma();
    if gamma > 0.0 {
        return Err(LabError::UnsupportedKernel(format!("γ = {gamma} > 0")));
    }
    let n3 = grid.nv3();
    let mut out = vec![Complex64::default(); n3];
    if gamma == 0.0 {
        let c0 = (2.0 * PI).powf(1.5);
        let (rf, rg) = (f.support_radius(), g.support_radius());
        for (m, o) in out.iter_mut().enumerate() {
            let xi = grid.xi_node(m);
            let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            // |ξ⁺|² + |ξ⁻|² = |ξ|², so nothing reaches beyond the joint support.
            if r2 > rf * rf + rg * rg {
                continue;
            }
            *o = c0 * sigma_mean(xi, f, g, kernel, rule);
        }
        return Ok(out);
    }
    if !matches!(kernel.angular(), AngularFactor::AbsCos) {
        return Err(LabError::UnsupportedKernel(
            "Fourier-side gain for γ < 0 requires b = |cos θ| (constant σ-factor)".into(),
        ));
    }
    let b_sigma = sigma_factor(kernel, 0.0);
    let pref = riesz_constant(gamma) * b_sigma;
    let alpha = 3.0 + gamma;
    let p = 2.0 - alpha;
    let q = -1.0 / gamma;
    let dmax = PI / grid.dv();
    let nodes = rule.nodes();
    let weights = rule.weights();
    let reach = f.support_radius().min(g.support_radius());
    for (m, o) in out.iter_mut().enumerate() {
        let xi = grid.xi_node(m);
        let half = [xi[0] / 2.0, xi[1] / 2.0, xi[2] / 2.0];
        let a = (half[0] * half[0] + half[1] * half[1] + half[2] * half[2]).sqrt();
        // f̃(ξ/2 + dθ) g̃(ξ/2 − dθ) needs both points inside the supports.
        if a > reach {
            continue;
        }
        let mean = |d: f64| -> Complex64 {
            let mut acc = Complex64::default();
            for (th, w) in nodes.iter().zip(weights) {
                let pp = [half[0] + d * th[0], half[1] + d * th[1], half[2] + d * th[2]];
                let mm = [half[0] - d * th[0], half[1] - d * th[1], half[2] - d * th[2]];
                acc += f.eval(pp) * g.eval(mm) * *w;
            }
            acc
        };
        let weight = |d: f64| -> f64 {
            if a == 0.0 {
                4.0 * PI * d.powf(-alpha)
            } else {
                2.0 * PI / (a * d * p) * ((d + a).powf(p) - (d - a).abs().powf(p))
            }
        };
        let mut total = Complex64::default();
        // Pieces [0, a] and [a, dmax], each with t = s^q measured from the singular end.
        let pieces: [(f64, f64); 2] = [(a, -1.0), (a, 1.0)];
        for (anchor, dir) in pieces {
            let len = if dir < 0.0 { anchor } else { dmax - anchor };
            if len <= 0.0 {
                continue;
            }
            let (s, ws) = gauss_legendre_on(quad.radial, 0.0, len.powf(1.0 / q));
            for (si, wi) in s.iter().zip(&ws) {
                let t = si.powf(q);
                let d = anchor + dir * t;
                let jac = q * si.powf(q - 1.0);
                total += mean(d) * (weight(d) * d * d * jac * wi);
            }
        }
        *o = total * pref;
    }
    Ok(out)
}

fn sigma_mean(
    xi: [f64; 3],
    f: &dyn SpectralSampler,
    g: &dyn SpectralSampler,
    kernel: &CollisionKernel,
    rule: &SphereRule,
) -> Complex64 {
    let r = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    if r == 0.0 {
        let bs: f64 = rule.nodes().iter().zip(rule.weights()).map(|(n, w)| w * sigma_factor(kernel, n[2])).sum();
        return f.eval(xi) * g.eval(xi) * bs;
    }
    let aligned = rule.aligned(xi);
    let mut acc = Complex64::default();
    for ((sig, w), node) in aligned.iter().zip(rule.weights()).zip(rule.nodes()) {
        let (p, m) = split_frequencies(xi, *sig);
        acc += f.eval(p) * g.eval(m) * (w * sigma_factor(kernel, node[2]));
    }
    acc
}

/// `Q̃⁺(f̃, g̃)` at every spatial node, with grid samplers built per distinct block.
pub fn gain_bobylev(
    ft: &SpectralField,
    gt: &SpectralField,
    kernel: &CollisionKernel,
    rule: &SphereRule,
) -> Result<SpectralField> {
    gain_bobylev_with(ft, gt, kernel, rule, BobylevQuadrature::default())
}

pub fn gain_bobylev_with(
    ft: &SpectralField,
    gt: &SpectralField,
    kernel: &CollisionKernel,
    rule: &SphereRule,
    quad: BobylevQuadrature,
) -> Result<SpectralField> {
    let grid = ft.grid();
    grid.same_as(gt.grid())?;
    if kernel.gamma() > 0.0 {
        return Err(LabError::UnsupportedKernel(format!("γ = {} > 0", kernel.gamma())));
    }
    let nv3 = grid.nv3();
    let mut memo: HashMap<(Vec<u64>, Vec<u64>), usize> = HashMap::new();
    let mut results: Vec<Vec<Complex64>> = Vec::new();
    let mut values = Vec::with_capacity(grid.len());
    let bits = |b: &[Complex64]| b.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect::<Vec<u64>>();
    for ix in 0..grid.nx3() {
        let key = (bits(ft.block(ix)), bits(gt.block(ix)));
        let slot = match memo.get(&key) {
            Some(&s) => s,
            None => {
                let sf = GridSampler::new(grid, ft.block(ix));
                let sg = GridSampler::new(grid, gt.block(ix));
                results.push(gain_bobylev_block(grid, &sf, &sg, kernel, rule, quad)?);
                memo.insert(key, results.len() - 1);
                results.len() - 1
            }
        };
        values.extend_from_slice(&results[slot]);
    }
    debug_assert_eq!(values.len(), grid.nx3() * nv3);
    SpectralField::new(grid.clone(), values, ft.time())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_conserves_energy() {
        let (p, m) = split_frequencies([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        assert_eq!(p, [0.5, 0.0, 0.5]);
        assert_eq!(m, [0.5, 0.0, -0.5]);
        let e = p.iter().map(|v| v * v).sum::<f64>() + m.iter().map(|v| v * v).sum::<f64>();
        assert!((e - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_factor_is_half_for_abs_cos() {
        let k = CollisionKernel::abs_cos(0.0).unwrap();
        for t in [-0.9, -0.1, 0.3, 0.99] {
            assert!((sigma_factor(&k, t) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn riesz_constant_at_minus_half() {
        assert!((riesz_constant(-0.5) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn grid_sampler_reproduces_nodes() {
        let grid = PhaseGrid::new(1.0, 4, 3.0, 8).unwrap();
        let block: Vec<Complex64> =
            (0..grid.nv3()).map(|m| Complex64::new((-(grid.xi_node(m)[0].powi(2))).exp(), 0.1 * m as f64)).collect();
        let s = GridSampler::new(&grid, &block);
        for m in [0, 17, 100, 300] {
            assert!((s.eval(grid.xi_node(m)) - block[m]).norm() < 1e-12);
        }
    }
}
