//! `‖⟨v⟩^{s+γ} Q⁺(S(t)f₀, S(t)g₀)‖_{L¹(0,T; L²_{x,v})} ≲ T^{1/2} ‖⟨v⟩^{s+γ}f₀‖_{L²_{x,v}} ‖⟨v⟩^{s+γ}g₀‖_{L²_v L⁶_x}`
//! on plane-wave data `cos(k·x + φ) F(v)`.

use super::family::{push_real, Atom, TestFamily, TestFunction, XProfile};
use super::modal::{modal_gain, modal_norm, streamed};
use super::report::{loglog_slope, ratio, EstimateReport, SampleRatio};
use crate::collision::{CollisionKernel, SphereRule};
use crate::error::{LabError, Result};
use crate::grid::{weighted_norm_with, NormMix, PhaseGrid, WeightKind, Weights};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BilinearConfig {
    /// Velocity weight exponent is `s + γ`.
    pub s: f64,
    /// Quadrature intervals per `T₀` for the time integral (even).
    pub steps_per_t0: usize,
    /// Largest integer mode index per axis for the spatial wave.
    pub max_mode: i64,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        Self { s: 0.5, steps_per_t0: 4, max_mode: 1 }
    }
}

/// One seeded pair with its time profile.
#[derive(Debug, Clone, Serialize)]
pub struct BilinearSample {
    pub index: u64,
    pub t0: f64,
    pub times: Vec<f64>,
    pub integrand: Vec<f64>,
    /// `∫₀^T` at `T ∈ {T₀, 2T₀, 4T₀}`.
    pub lhs: [f64; 3],
    pub rhs_unit: f64,
    pub exponent: f64,
}

/// Plane-wave pair for sample `index`: both factors share the spatial wave number class.
pub fn plane_wave_pair(family: &TestFamily, grid: &PhaseGrid, index: u64, max_mode: i64) -> (TestFunction, TestFunction) {
    let dk = std::f64::consts::PI / grid.lx();
    let mut rng = family.rng(u64::MAX - index);
    let mut wave = || loop {
        let m: [i64; 3] = std::array::from_fn(|_| rng.random_range(-max_mode..=max_mode));
        if m != [0; 3] {
            return (m.map(|c| c as f64 * dk), rng.random_range(0.0..std::f64::consts::TAU));
        }
    };
    let (k1, p1) = wave();
    let (k2, p2) = wave();
    let lift = |base: TestFunction, k: [f64; 3], phase: f64| {
        // cos(k·x + φ) F(v) with F real: each atom and its conjugate, at ±k.
        let mut atoms = Vec::new();
        for a in &base.atoms {
            let z = a.amp * num_complex::Complex64::from_polar(1.0, phase);
            push_real(&mut atoms, Atom { amp: z, x: XProfile::Mode { k }, ..*a });
        }
        TestFunction { atoms }
    };
    (lift(family.sample(2 * index), k1, p1), lift(family.sample(2 * index + 1), k2, p2))
}

/// Time at which `S(t)` has moved the ξ-profile of the slower factor by one ξ-width:
/// `τ = 1 / (max(|k|, |k'|) · σ̄)`, `σ̄` the amplitude-weighted mean atom width.
pub fn dispersion_time(f: &TestFunction, g: &TestFunction) -> f64 {
    let kmax = f
        .atoms
        .iter()
        .chain(&g.atoms)
        .filter_map(|a| match a.x {
            XProfile::Mode { k } => Some((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()),
            _ => None,
        })
        .fold(0.0, f64::max);
    let (mut wsum, mut asum) = (0.0, 0.0);
    for a in f.atoms.iter().chain(&g.atoms) {
        wsum += a.amp.norm() * a.width;
        asum += a.amp.norm();
    }
    1.0 / (kmax * wsum / asum)
}

fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut s = y[0] + y[n];
    for (i, v) in y.iter().enumerate().take(n).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

pub fn bilinear_sample(
    f: &TestFunction,
    g: &TestFunction,
    index: u64,
    grid: &PhaseGrid,
    kernel: &CollisionKernel,
    rule: &SphereRule,
    t0: f64,
    cfg: &BilinearConfig,
) -> Result<BilinearSample> {
    if cfg.steps_per_t0 % 2 != 0 || cfg.steps_per_t0 == 0 {
        return Err(LabError::Usage("steps_per_t0 must be even and positive".into()));
    }
    let w = cfg.s + kernel.gamma();
    let n = 4 * cfg.steps_per_t0;
    let h = t0 / cfg.steps_per_t0 as f64;
    let times: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
    let mut integrand = Vec::with_capacity(times.len());
    for &t in &times {
        let blocks = modal_gain(&streamed(f, t), &streamed(g, t), grid, kernel, rule)?;
        integrand.push(modal_norm(&blocks, grid, |_| 1.0, (w, WeightKind::Bracket)));
    }
    let m = cfg.steps_per_t0;
    let lhs = [simpson(&integrand[..=m], h), simpson(&integrand[..=2 * m], h), simpson(&integrand[..=4 * m], h)];
    let weights = Weights::bracket(0.0, w);
    let nf = weighted_norm_with(&f.field(grid), weights, NormMix::L2)?;
    let ng = weighted_norm_with(&g.field(grid), weights, NormMix::LvLx { p: 6.0 })?;
    let exponent = if lhs[0] > 0.0 { loglog_slope(&[t0, 2.0 * t0, 4.0 * t0], &lhs) } else { f64::NAN };
    Ok(BilinearSample { index, t0, times, integrand, lhs, rhs_unit: nf * ng, exponent })
}

/// Ratios `lhs(4T₀) / ((4T₀)^{1/2} rhs)` and the fitted `T`-exponent per pair, with
/// `T₀ = τ/2` from [`dispersion_time`] unless given.
pub fn check_bilinear_noregularity(
    kernel: &CollisionKernel,
    family: &TestFamily,
    t0: Option<f64>,
    n_samples: usize,
    grid: &PhaseGrid,
    rule: &SphereRule,
    cfg: &BilinearConfig,
) -> Result<(EstimateReport, Vec<BilinearSample>)> {
    let mut ratios: Vec<SampleRatio> = Vec::new();
    let mut samples = Vec::new();
    for i in 0..n_samples as u64 {
        let (f, g) = plane_wave_pair(family, grid, i, cfg.max_mode);
        let t = t0.unwrap_or_else(|| 0.5 * dispersion_time(&f, &g));
        let s = bilinear_sample(&f, &g, i, grid, kernel, rule, t, cfg)?;
        let big_t = 4.0 * t;
        ratios.push(ratio(i, s.lhs[2], big_t.sqrt() * s.rhs_unit));
        samples.push(s);
    }
    let exps: Vec<f64> = samples.iter().map(|s| s.exponent).collect();
    let lo = exps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut report = EstimateReport::new("bilinear-noregularity", family.descriptor(), family.seed, grid_label(grid), ratios)
        .note(format!("T-exponent range [{lo:.4}, {hi:.4}] over sweep T0, 2T0, 4T0"))
        .note(format!("velocity weight s+gamma = {}", cfg.s + kernel.gamma()));
    report.pass = exps.iter().all(|e| (0.35..=0.65).contains(e));
    Ok((report, samples))
}

pub fn grid_label(g: &PhaseGrid) -> String {
    format!("L_x={} N_x={} L_v={} N_v={}", g.lx(), g.nx(), g.lv(), g.nv())
}
