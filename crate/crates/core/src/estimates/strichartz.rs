//! Strichartz harness for `U(t) = e^{it∇_ξ·∇_x}` on product data.
//!
//! For `φ₀ = Π_j φ_j(x_j, ξ_j)` the flow factorizes into three `1+1`-dimensional
//! flows, so `‖U(t)φ₀‖_{L^p_{x,ξ}} = Π_j ‖U_j(t)φ_j‖_{L^p}` and the sup norm
//! factorizes likewise.  Each factor is propagated as free streaming in
//! `(x_j, v_j)` followed by the unitary transform `v_j → ξ_j`.

use super::family::TestFamily;
use super::report::{loglog_slope, ratio, EstimateReport, SampleRatio};
use crate::error::{LabError, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// A Strichartz pair `L^q_t L^p_{x,ξ}` with `2/q + 6/p = 3`, `q ≥ 2` (`q = ∞` allowed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrichartzPair {
    pub q: f64,
    pub p: f64,
}

impl StrichartzPair {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        let lhs = if q.is_infinite() { 0.0 } else { 2.0 / q } + 6.0 / p;
        if !(q >= 2.0) || !(p >= 2.0) || (lhs - 3.0).abs() > 1e-12 {
            return Err(LabError::Usage(format!("(q, p) = ({q}, {p}) is not admissible: 2/q + 6/p = {lhs} != 3")));
        }
        Ok(Self { q, p })
    }
}

/// One `(x, v)` axis: periodic box `[−L_x, L_x) × [−L_v, L_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisGrid {
    pub lx: f64,
    pub nx: usize,
    pub lv: f64,
    pub nv: usize,
}

impl AxisGrid {
    pub fn refined(&self) -> Self {
        Self { nx: 2 * self.nx, nv: 2 * self.nv, ..*self }
    }
    fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }
    fn dv(&self) -> f64 {
        2.0 * self.lv / self.nv as f64
    }
    fn dxi(&self) -> f64 {
        PI / self.lv
    }
}

/// Factor data `φ(x) ψ(v)` with `φ` a Gaussian and `ψ` a modulated Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisDatum {
    pub x_center: f64,
    pub x_width: f64,
    pub v_center: f64,
    pub v_width: f64,
    pub kappa: f64,
}

impl AxisDatum {
    fn eval(&self, x: f64, v: f64) -> Complex64 {
        let ex = (-(x - self.x_center).powi(2) / (2.0 * self.x_width * self.x_width)).exp();
        let ev = (-(v - self.v_center).powi(2) / (2.0 * self.v_width * self.v_width)).exp();
        Complex64::from_polar(ex * ev, self.kappa * v)
    }

    /// `|x|` reached by characteristics up to time `t` (Gaussian tails cut at `e^{−23}`).
    fn reach(&self, t: f64) -> f64 {
        let vmax = self.v_center.abs() + 6.8 * self.v_width;
        self.x_center.abs() + 6.8 * self.x_width + t * vmax
    }
}

struct AxisFlow {
    grid: AxisGrid,
    ix: Arc<dyn Fft<f64>>,
    fv: Arc<dyn Fft<f64>>,
    /// `x`-Fourier coefficients of the datum, `[k][v]`.
    spec: Vec<Complex64>,
}

impl AxisFlow {
    fn new(grid: AxisGrid, d: &AxisDatum) -> Self {
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(grid.nx);
        let ix = planner.plan_fft_inverse(grid.nx);
        let fv = planner.plan_fft_inverse(grid.nv);
        let (nx, nv) = (grid.nx, grid.nv);
        let mut spec = vec![Complex64::default(); nx * nv];
        let mut col = vec![Complex64::default(); nx];
        for j in 0..nv {
            let v = -grid.lv + j as f64 * grid.dv();
            for (i, c) in col.iter_mut().enumerate() {
                *c = d.eval(-grid.lx + i as f64 * grid.dx(), v);
            }
            fx.process(&mut col);
            for (i, c) in col.iter().enumerate() {
                spec[i * nv + j] = *c;
            }
        }
        Self { grid, ix, fv, spec }
    }

    /// `U(t)φ` on the `(x, ξ)` grid, row-major `[x][ξ]`.
    fn at(&self, t: f64) -> Vec<Complex64> {
        let g = self.grid;
        let (nx, nv) = (g.nx, g.nv);
        let dk = PI / g.lx;
        let mut xv = vec![Complex64::default(); nx * nv];
        let mut col = vec![Complex64::default(); nx];
        for j in 0..nv {
            let v = -g.lv + j as f64 * g.dv();
            for (i, c) in col.iter_mut().enumerate() {
                let m = if i < nx / 2 { i as f64 } else { i as f64 - nx as f64 };
                let mult = if i == nx / 2 {
                    Complex64::new((m * dk * t * v).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, -m * dk * t * v)
                };
                *c = self.spec[i * nv + j] * mult;
            }
            self.ix.process(&mut col);
            for (i, c) in col.iter().enumerate() {
                xv[i * nv + j] = c / nx as f64;
            }
        }
        // v → ξ: f̃(ξ_m) = (2π)^{−1/2} dv Σ_j f(v_j) e^{i v_j ξ_m}.
        let scale = g.dv() / (2.0 * PI).sqrt();
        let mut out = vec![Complex64::default(); nx * nv];
        let mut row = vec![Complex64::default(); nv];
        for i in 0..nx {
            row.copy_from_slice(&xv[i * nv..(i + 1) * nv]);
            recenter(&mut row);
            self.fv.process(&mut row);
            recenter(&mut row);
            // Only moduli are consumed, so the phase from the v origin at −L_v is dropped.
            for (m, z) in row.iter().enumerate() {
                out[i * nv + m] = z * scale;
            }
        }
        out
    }
}

fn recenter(buf: &mut [Complex64]) {
    let n = buf.len();
    buf.rotate_left(n / 2);
}

fn lp(vals: &[Complex64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    }
    (vals.iter().map(|z| z.norm().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// Time window and quadrature for the `L^q_t` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrichartzConfig {
    pub axis: AxisGrid,
    pub t_window: f64,
    pub t_steps: usize,
}

impl Default for StrichartzConfig {
    fn default() -> Self {
        Self { axis: AxisGrid { lx: 16.0, nx: 128, lv: 7.0, nv: 64 }, t_window: 1.0, t_steps: 16 }
    }
}

/// Ratio `‖U(t)φ₀‖_{L^q_t([0,T]) L^p} / ‖φ₀‖_{L²}` for product data.
pub fn strichartz_ratio(data: &[AxisDatum; 3], pair: StrichartzPair, cfg: &StrichartzConfig, index: u64) -> Result<SampleRatio> {
    for d in data {
        if d.reach(cfg.t_window) > cfg.axis.lx {
            return Err(LabError::Window(format!(
                "characteristics reach |x| = {:.3} > L_x = {} within T = {}",
                d.reach(cfg.t_window),
                cfg.axis.lx,
                cfg.t_window
            )));
        }
    }
    let g = cfg.axis;
    let cell = g.dx() * g.dxi();
    let flows: Vec<AxisFlow> = data.iter().map(|d| AxisFlow::new(g, d)).collect();
    let norm_at = |t: f64, p: f64| -> f64 { flows.iter().map(|fl| lp(&fl.at(t), p, cell)).product() };
    let rhs = norm_at(0.0, 2.0);
    let h = cfg.t_window / cfg.t_steps as f64;
    let vals: Vec<f64> = (0..=cfg.t_steps).map(|j| norm_at(j as f64 * h, pair.p)).collect();
    let lhs = if pair.q.is_infinite() {
        vals.iter().copied().fold(0.0, f64::max)
    } else {
        let n = vals.len() - 1;
        let s: f64 = vals.iter().enumerate().map(|(j, v)| v.powf(pair.q) * if j == 0 || j == n { 0.5 } else { 1.0 }).sum();
        (s * h).powf(1.0 / pair.q)
    };
    Ok(ratio(index, lhs, rhs))
}

/// Product datum for sample `index`: one atom of the family per axis, with a
/// Gaussian spatial envelope of width `x_width`.
pub fn product_datum(family: &TestFamily, index: u64, x_width: (f64, f64)) -> [AxisDatum; 3] {
    use rand::Rng;
    let mut rng = family.rng(index);
    let mut draw = |r: (f64, f64)| if r.1 > r.0 { rng.random_range(r.0..r.1) } else { r.0 };
    std::array::from_fn(|_| {
        let kappa = match family.kind {
            super::family::FamilyKind::GaussianMixtures => 0.0,
            _ => draw((-family.max_modulation, family.max_modulation)),
        };
        AxisDatum {
            x_center: draw((-0.5, 0.5)),
            x_width: draw(x_width),
            v_center: draw((-family.spread, family.spread)),
            v_width: draw(family.width),
            kappa,
        }
    })
}

pub fn check_strichartz(
    pair: StrichartzPair,
    family: &TestFamily,
    n_samples: usize,
    cfg: &StrichartzConfig,
) -> Result<EstimateReport> {
    let x_width = (0.6, 1.0);
    let run = |c: &StrichartzConfig| -> Result<Vec<SampleRatio>> {
        (0..n_samples as u64).map(|i| strichartz_ratio(&product_datum(family, i, x_width), pair, c, i)).collect()
    };
    let base = run(cfg)?;
    let fine_cfg = StrichartzConfig { axis: cfg.axis.refined(), ..*cfg };
    let fine = run(&fine_cfg)?;
    let label = format!("1+1D x3: L_x={} N_x={} L_v={} N_v={}", cfg.axis.lx, cfg.axis.nx, cfg.axis.lv, cfg.axis.nv);
    Ok(EstimateReport::new("strichartz", family.descriptor(), family.seed, label, base)
        .with_refinement(fine, 1.5)
        .note(format!("(q, p) = ({}, {}), window [0, {}] with {} steps", pair.q, pair.p, cfg.t_window, cfg.t_steps)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersiveProbe {
    pub times: Vec<f64>,
    pub sup: Vec<f64>,
    /// `−d ln sup / d ln t` fitted over the window.
    pub exponent: f64,
}

/// `sup_{x,ξ} |U(t)φ₀|` for a datum narrow in `x` and in `ξ`, over `t ∈ [t_a, t_b]`.
pub fn dispersive_probe(axis: AxisGrid, datum: AxisDatum, times: &[f64]) -> Result<DispersiveProbe> {
    let t_end = times.iter().copied().fold(0.0, f64::max);
    if datum.reach(t_end) > axis.lx {
        return Err(LabError::Window(format!("probe reaches |x| = {:.3} > L_x = {}", datum.reach(t_end), axis.lx)));
    }
    let flow = AxisFlow::new(axis, &datum);
    // Three identical factors: the 6D sup is the cube of the 2D sup.
    let sup: Vec<f64> = times.iter().map(|&t| lp(&flow.at(t), f64::INFINITY, 1.0).powi(3)).collect();
    let exponent = -loglog_slope(times, &sup);
    Ok(DispersiveProbe { times: times.to_vec(), sup, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::family::FamilyKind;

    #[test]
    fn admissibility() {
        assert!(StrichartzPair::new(f64::INFINITY, 2.0).is_ok());
        assert!(StrichartzPair::new(2.0, 3.0).is_ok());
        assert!(matches!(StrichartzPair::new(2.0, 6.0), Err(LabError::Usage(_))));
        assert!(StrichartzPair::new(1.0, 1.5).is_err());
    }

    #[test]
    fn energy_pair_is_unitary() {
        let fam = TestFamily::new(FamilyKind::ModulatedBumps, 5);
        let cfg = StrichartzConfig::default();
        let pair = StrichartzPair::new(f64::INFINITY, 2.0).unwrap();
        for i in 0..3 {
            let r = strichartz_ratio(&product_datum(&fam, i, (0.6, 1.0)), pair, &cfg, i).unwrap();
            assert!((r.ratio - 1.0).abs() < 1e-12, "{}", r.ratio);
        }
    }

    #[test]
    fn wrapping_window_is_rejected() {
        let fam = TestFamily::new(FamilyKind::GaussianMixtures, 5);
        let cfg = StrichartzConfig { t_window: 10.0, ..Default::default() };
        let pair = StrichartzPair::new(2.0, 3.0).unwrap();
        assert!(matches!(strichartz_ratio(&product_datum(&fam, 0, (0.6, 1.0)), pair, &cfg, 0), Err(LabError::Window(_))));
    }
}
