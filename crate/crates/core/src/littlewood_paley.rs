//! Dyadic Littlewood–Paley projectors in `x` and `ξ`, the frequency-support
//! vanishing checks, and the discrete p-variation norm.
//!
//! Frequencies are measured in grid units: `y = |k| / dk` on the x side
//! (`dk = π / L_x`) and `y = |ξ| / dξ` on the ξ side.

use crate::collision::{gain_bobylev_block, BobylevQuadrature, CollisionKernel, GridSampler, SpectralSampler, SphereRule};
use crate::error::{LabError, Result};
use crate::fft::CubeFft;
use crate::grid::{x_forward_complex, x_inverse, DistributionField, SpectralField};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Xi,
}

/// Smooth radial cutoff `χ` with `χ = 1` on `|y| ≤ 1` and `χ = 0` on `|y| ≥ 2`,
/// glued from `ψ(t) = e^{−1/t}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DyadicCutoff;

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

impl DyadicCutoff {
    pub fn descriptor(&self) -> &'static str {
        "chi(y) = psi(2-|y|)/(psi(2-|y|)+psi(|y|-1)), psi(t) = exp(-1/t) for t > 0"
    }

    pub fn chi(&self, y: f64) -> f64 {
        let y = y.abs();
        if y <= 1.0 {
            return 1.0;
        }
        if y >= 2.0 {
            return 0.0;
        }
        let a = psi(2.0 - y);
        a / (a + psi(y - 1.0))
    }

    /// `φ_N(y) = χ(y / 2N) − χ(y / N)`, supported on `N ≤ |y| ≤ 4N`.
    pub fn phi(&self, n: f64, y: f64) -> f64 {
        (self.chi(y / (2.0 * n)) - self.chi(y / n)).max(0.0)
    }

    /// Dyadic levels `1, 2, …, n_grid / 4`.
    pub fn levels(n_grid: usize) -> Vec<usize> {
        std::iter::successors(Some(1usize), |n| Some(n * 2)).take_while(|&n| n <= n_grid / 4).collect()
    }

    pub fn check_level(n: usize, n_grid: usize) -> Result<()> {
        if !n.is_power_of_two() || n > n_grid / 4 {
            return Err(LabError::Range(format!("dyadic level {n} outside [1, {}]", n_grid / 4)));
        }
        Ok(())
    }
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Which multiplier to apply: one dyadic piece, the low part `χ(y)`, or the
/// remainder `1 − χ(y / 2N_max)` above the covered range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    Level(usize),
    Low,
    High,
}

fn multiplier(cut: &DyadicCutoff, band: Band, n_grid: usize, y: f64) -> f64 {
    match band {
        Band::Level(n) => cut.phi(n as f64, y),
        Band::Low => cut.chi(y),
        Band::High => 1.0 - cut.chi(y / (n_grid / 2) as f64),
    }
}

/// Fourier multiplier on the chosen axis of a ξ-side field.
pub fn project_band(ft: &SpectralField, axis: Axis, band: Band, cut: &DyadicCutoff) -> Result<SpectralField> {
    let grid = ft.grid();
    let n_grid = match axis {
        Axis::X => grid.nx(),
        Axis::Xi => grid.nv(),
    };
    if let Band::Level(n) = band {
        DyadicCutoff::check_level(n, n_grid)?;
    }
    let values = match axis {
        Axis::Xi => {
            let mult: Vec<f64> =
                (0..grid.nv3()).map(|m| multiplier(cut, band, n_grid, norm3(grid.xi_node(m)) / grid.dxi())).collect();
            ft.values().iter().enumerate().map(|(i, z)| z * mult[i % grid.nv3()]).collect()
        }
        Axis::X => {
            let dk = PI / grid.lx();
            let nv3 = grid.nv3();
            let mut spec = x_forward_complex(grid, ft.values());
            for ik in 0..grid.nx3() {
                let w = multiplier(cut, band, n_grid, norm3(grid.k_node(ik)) / dk);
                spec[ik * nv3..(ik + 1) * nv3].iter_mut().for_each(|z| *z *= w);
            }
            x_inverse(grid, spec)
        }
    };
    SpectralField::new(grid.clone(), values, ft.time())
}

/// `P_N` on the chosen axis; `N` must be a power of two in `[1, n_grid / 4]`.
pub fn project(ft: &SpectralField, axis: Axis, n: usize, cut: &DyadicCutoff) -> Result<SpectralField> {
    project_band(ft, axis, Band::Level(n), cut)
}

/// `P_N^x` of a real field.
pub fn project_x(f: &DistributionField, n: usize, cut: &DyadicCutoff) -> Result<DistributionField> {
    let grid = f.grid();
    DyadicCutoff::check_level(n, grid.nx())?;
    let dk = PI / grid.lx();
    let nv3 = grid.nv3();
    let c: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut spec = x_forward_complex(grid, &c);
    for ik in 0..grid.nx3() {
        let w = cut.phi(n as f64, norm3(grid.k_node(ik)) / dk);
        spec[ik * nv3..(ik + 1) * nv3].iter_mut().for_each(|z| *z *= w);
    }
    let vals = x_inverse(grid, spec).into_iter().map(|z| z.re).collect();
    DistributionField::new(grid.clone(), vals, f.time())
}

/// `φ_N(|ξ| / dξ) · inner(ξ)`, with the exact support radius `4 N dξ`.
pub struct ProjectedSampler<'a> {
    pub inner: &'a dyn SpectralSampler,
    pub level: usize,
    pub dxi: f64,
    pub cutoff: DyadicCutoff,
}

impl SpectralSampler for ProjectedSampler<'_> {
    fn eval(&self, xi: [f64; 3]) -> Complex64 {
        let w = self.cutoff.phi(self.level as f64, norm3(xi) / self.dxi);
        if w == 0.0 {
            Complex64::default()
        } else {
            self.inner.eval(xi) * w
        }
    }

    fn support_radius(&self) -> f64 {
        (4 * self.level) as f64 * self.dxi
    }
}

fn l2_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `‖P_M Q̃⁺(P_{M₁} f̃, P_{M₂} g̃)‖₂ / ‖Q̃⁺(P_{M₁} f̃, P_{M₂} g̃)‖₂` for every dyadic
/// `M` the velocity grid resolves.  The inner projections act on the off-grid
/// samplers, so their supports are exact.
pub fn support_profile(
    ft: &SpectralField,
    gt: &SpectralField,
    m1: usize,
    m2: usize,
    kernel: &CollisionKernel,
    rule: &SphereRule,
    cut: &DyadicCutoff,
) -> Result<Vec<(usize, f64)>> {
    let grid = ft.grid();
    grid.same_as(gt.grid())?;
    let nv = grid.nv();
    DyadicCutoff::check_level(m1, nv)?;
    DyadicCutoff::check_level(m2, nv)?;
    let levels = DyadicCutoff::levels(nv);
    let mults: Vec<Vec<f64>> = levels
        .iter()
        .map(|&m| (0..grid.nv3()).map(|i| cut.phi(m as f64, norm3(grid.xi_node(i)) / grid.dxi())).collect())
        .collect();
    let mut num = vec![0.0; levels.len()];
    let mut den = 0.0;
    let mut memo: HashMap<(usize, usize), (Vec<f64>, f64)> = HashMap::new();
    let first = |field: &SpectralField, ix: usize| (0..ix).find(|&j| field.block(j) == field.block(ix)).unwrap_or(ix);
    for ix in 0..grid.nx3() {
        let key = (first(ft, ix), first(gt, ix));
        if !memo.contains_key(&key) {
            let fb = ft.block(ix);
            let gb = gt.block(ix);
            let entry = if l2_sq(fb) == 0.0 || l2_sq(gb) == 0.0 {
                (vec![0.0; levels.len()], 0.0)
            } else {
                let sf = GridSampler::new(grid, fb);
                let sg = GridSampler::new(grid, gb);
                let pf = ProjectedSampler { inner: &sf, level: m1, dxi: grid.dxi(), cutoff: *cut };
                let pg = ProjectedSampler { inner: &sg, level: m2, dxi: grid.dxi(), cutoff: *cut };
                let q = gain_bobylev_block(grid, &pf, &pg, kernel, rule, BobylevQuadrature::default())?;
                let per: Vec<f64> =
                    mults.iter().map(|w| q.iter().zip(w).map(|(z, w)| (z * w).norm_sqr()).sum()).collect();
                (per, l2_sq(&q))
            };
            memo.insert(key, entry);
        }
        let (per, d) = &memo[&key];
        num.iter_mut().zip(per).for_each(|(a, b)| *a += b);
        den += d;
    }
    Ok(levels
        .into_iter()
        .zip(num)
        .map(|(m, n)| (m, if den == 0.0 { 0.0 } else { (n / den).sqrt() }))
        .collect())
}

/// The ratio at level `M`, which must satisfy `M ≥ 10 max(M₁, M₂)`.
#[allow(clippy::too_many_arguments)]
pub fn frequency_support_check(
    ft: &SpectralField,
    gt: &SpectralField,
    m: usize,
    m1: usize,
    m2: usize,
    kernel: &CollisionKernel,
    rule: &SphereRule,
    cut: &DyadicCutoff,
) -> Result<f64> {
    if m < 10 * m1.max(m2) {
        return Err(LabError::Usage(format!("M = {m} is below 10·max(M₁, M₂) = {}", 10 * m1.max(m2))));
    }
    DyadicCutoff::check_level(m, ft.grid().nv())?;
    let profile = support_profile(ft, gt, m1, m2, kernel, rule, cut)?;
    Ok(profile.into_iter().find(|(l, _)| *l == m).map(|(_, r)| r).unwrap_or(0.0))
}

/// Smallest dyadic ratio `M / max(M₁, M₂)` from which the profile stays at or below `floor`.
pub fn vanishing_onset(profile: &[(usize, f64)], m1: usize, m2: usize, floor: f64) -> Option<f64> {
    let base = m1.max(m2) as f64;
    let mut onset = None;
    for &(m, r) in profile.iter().rev() {
        if r > floor {
            break;
        }
        onset = Some(m as f64 / base);
    }
    onset
}

/// `‖P_N^x (P_{N₁}^x f · P_{N₂}^x g)‖₂ / ‖P_{N₁}^x f · P_{N₂}^x g‖₂` with `N ≥ 10 max(N₁, N₂)`.
/// Processed one velocity node at a time.
pub fn x_support_check(
    f: &DistributionField,
    g: &DistributionField,
    n: usize,
    n1: usize,
    n2: usize,
    cut: &DyadicCutoff,
) -> Result<f64> {
    if n < 10 * n1.max(n2) {
        return Err(LabError::Usage(format!("N = {n} is below 10·max(N₁, N₂) = {}", 10 * n1.max(n2))));
    }
    let grid = f.grid();
    grid.same_as(g.grid())?;
    for l in [n, n1, n2] {
        DyadicCutoff::check_level(l, grid.nx())?;
    }
    let dk = PI / grid.lx();
    let y: Vec<f64> = (0..grid.nx3()).map(|ik| norm3(grid.k_node(ik)) / dk).collect();
    let weights = |l: usize| y.iter().map(|&y| cut.phi(l as f64, y)).collect::<Vec<f64>>();
    let (w, w1, w2) = (weights(n), weights(n1), weights(n2));
    let fft = CubeFft::new(grid.nx());
    let nv3 = grid.nv3();
    let filtered = |src: &DistributionField, iv: usize, w: &[f64]| {
        let mut buf: Vec<Complex64> =
            (0..grid.nx3()).map(|ix| Complex64::new(src.values()[ix * nv3 + iv], 0.0)).collect();
        fft.forward(&mut buf);
        buf.iter_mut().zip(w).for_each(|(z, w)| *z *= w);
        fft.inverse(&mut buf);
        buf
    };
    let (mut num, mut den) = (0.0, 0.0);
    for iv in 0..nv3 {
        let a = filtered(f, iv, &w1);
        let b = filtered(g, iv, &w2);
        // Unnormalized round trips; the common factor cancels in the ratio.
        let mut prod: Vec<Complex64> = a.iter().zip(&b).map(|(p, q)| Complex64::new(p.re * q.re, 0.0)).collect();
        den += l2_sq(&prod);
        fft.forward(&mut prod);
        num += prod.iter().zip(&w).map(|(z, w)| (z * w).norm_sqr()).sum::<f64>() / grid.nx3() as f64;
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

/// `sup over increasing index subsequences of (Σ d(u_{i_k}, u_{i_{k+1}})^p)^{1/p}`,
/// by dynamic programming over the last chosen index.
pub fn p_variation<T>(samples: &[T], p: f64, dist: impl Fn(&T, &T) -> f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::Domain(format!("p = {p} must be at least 1")));
    }
    if samples.len() < 2 {
        return Err(LabError::Domain("p-variation needs at least two samples".into()));
    }
    let n = samples.len();
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        for i in 0..j {
            let cand = best[i] + dist(&samples[i], &samples[j]).powf(p);
            if cand > best[j] {
                best[j] = cand;
            }
        }
    }
    Ok(best.into_iter().fold(0.0, f64::max).powf(1.0 / p))
}

/// Exhaustive search over all index subsets, summing increments left to right.
pub fn p_variation_brute<T>(samples: &[T], p: f64, dist: impl Fn(&T, &T) -> f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::Domain(format!("p = {p} must be at least 1")));
    }
    let n = samples.len();
    if !(2..=20).contains(&n) {
        return Err(LabError::Domain(format!("brute force needs 2..=20 samples, got {n}")));
    }
    let mut best = 0.0f64;
    for mask in 1u32..(1 << n) {
        let mut acc = 0.0;
        let mut last: Option<usize> = None;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                if let Some(l) = last {
                    acc += dist(&samples[l], &samples[i]).powf(p);
                }
                last = Some(i);
            }
        }
        best = best.max(acc);
    }
    Ok(best.powf(1.0 / p))
}
