//! Free streaming `S(t) = e^{−t v·∇_x}`, its ξ-side conjugate `U(t)`, and Duhamel quadrature.
//!
//! Streaming is applied as the spatial Fourier multiplier `e^{−i t k·v}`.  On the
//! spatial Nyquist plane the multiplier is replaced by its real part
//! `cos(k_N t v)`, which keeps real fields real and turns `S(t)` into an exact
//! node permutation whenever `t·v` is a multiple of `dx`.

use crate::error::{LabError, Result};
use crate::grid::{split3, x_forward, x_forward_complex, x_inverse, DistributionField, PhaseGrid, SpectralField, VelocityTransform};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Trapezoid,
    Midpoint,
}

/// Uniform time grid on `[t0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub quadrature: Quadrature,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, dt: f64, quadrature: Quadrature) -> Result<Self> {
        let tg = Self { t0, t_end, dt, quadrature };
        tg.validate()?;
        Ok(tg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LabError::Domain(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= self.t0) {
            return Err(LabError::Domain(format!("T = {} precedes t0 = {}", self.t_end, self.t0)));
        }
        let r = (self.t_end - self.t0) / self.dt;
        if (r - r.round()).abs() > 1e-9 {
            return Err(LabError::Domain(format!("(T - t0)/dt = {r} is not an integer")));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t0) / self.dt).round() as usize
    }

    /// Stored trajectory times `t0, t0 + dt, …, T`.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps()).map(|j| self.t0 + j as f64 * self.dt).collect()
    }

    /// Duhamel quadrature nodes and weights on `[t0, T]`.
    pub fn rule(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.steps();
        match self.quadrature {
            Quadrature::Trapezoid => {
                let t = self.nodes();
                let w = (0..=n)
                    .map(|j| if n == 0 { 0.0 } else if j == 0 || j == n { self.dt / 2.0 } else { self.dt })
                    .collect();
                (t, w)
            }
            Quadrature::Midpoint => (
                (0..n).map(|j| self.t0 + (j as f64 + 0.5) * self.dt).collect(),
                vec![self.dt; n],
            ),
        }
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.t0, self.t_end, dt, self.quadrature)
    }
}

/// A field sampled at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<DistributionField>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, fields: Vec<DistributionField>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return Err(LabError::Usage("trajectory needs one field per time, at least one".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Usage("trajectory times must increase strictly".into()));
        }
        for f in &fields[1..] {
            fields[0].grid().same_as(f.grid())?;
        }
        let fields = fields.into_iter().zip(&times).map(|(f, t)| f.with_time(*t)).collect();
        Ok(Self { times, fields })
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }
    pub fn fields(&self) -> &[DistributionField] {
        &self.fields
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn grid(&self) -> &PhaseGrid {
        self.fields[0].grid()
    }
    pub fn last(&self) -> &DistributionField {
        &self.fields[self.fields.len() - 1]
    }
    pub fn zeros_like(&self) -> Self {
        let z = DistributionField::zeros(self.grid());
        Self { times: self.times.clone(), fields: self.times.iter().map(|t| z.clone().with_time(*t)).collect() }
    }
    /// Largest nodewise difference over all times.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.fields.iter().zip(&other.fields).map(|(a, b)| a.max_abs_diff(b)).fold(0.0, f64::max)
    }
    pub fn max_abs(&self) -> f64 {
        self.fields.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
    }
    /// Field at an arbitrary time: the exact propagator applied from the nearest earlier node.
    pub fn at(&self, t: f64) -> DistributionField {
        let j = self.times.partition_point(|s| *s <= t + 1e-12).saturating_sub(1);
        let f = &self.fields[j];
        let dt = t - self.times[j];
        if dt.abs() < 1e-15 {
            f.clone()
        } else {
            free_stream(f, dt)
        }
    }
}

/// Per-axis streaming phases `[axis-slot k][velocity index j]` for time `t`.
fn axis_phases(grid: &PhaseGrid, t: f64) -> Vec<Complex64> {
    let (nx, nv) = (grid.nx(), grid.nv());
    let mut out = vec![Complex64::default(); nx * nv];
    for m in 0..nx {
        let k = grid.kx()[m];
        for j in 0..nv {
            let arg = k * t * grid.v_coord(j);
            out[m * nv + j] = if m == nx / 2 { Complex64::new(arg.cos(), 0.0) } else { Complex64::from_polar(1.0, -arg) };
        }
    }
    out
}

fn apply_phases(grid: &PhaseGrid, spec: &mut [Complex64], t: f64) {
    let (nx, nv) = (grid.nx(), grid.nv());
    let ph = axis_phases(grid, t);
    let nv3 = grid.nv3();
    for ik in 0..grid.nx3() {
        let [k1, k2, k3] = split3(ik, nx);
        let blk = &mut spec[ik * nv3..(ik + 1) * nv3];
        for (iv, z) in blk.iter_mut().enumerate() {
            let [a, b, c] = split3(iv, nv);
            *z *= ph[k1 * nv + a] * ph[k2 * nv + b] * ph[k3 * nv + c];
        }
    }
}

/// `(S(t) f)(x, v) = f(x − t v, v)` on the torus.
pub fn free_stream(f: &DistributionField, t: f64) -> DistributionField {
    if t == 0.0 {
        return f.clone();
    }
    let g = f.grid();
    let mut spec = x_forward(g, f.values());
    apply_phases(g, &mut spec, t);
    let vals: Vec<f64> = x_inverse(g, spec).into_iter().map(|z| z.re).collect();
    DistributionField::new(g.clone(), vals, f.time() + t).expect("streaming keeps entries finite")
}

/// `S(t)` on complex-valued `(x, v)` samples laid out like a field.
pub(crate) fn free_stream_complex(grid: &PhaseGrid, vals: &[Complex64], t: f64) -> Vec<Complex64> {
    let mut spec = x_forward_complex(grid, vals);
    apply_phases(grid, &mut spec, t);
    x_inverse(grid, spec)
}

/// `U(t) f̃ = F_v S(t) F_v⁻¹ f̃`, applied without discarding imaginary parts.
pub fn xi_propagate(ft: &SpectralField, t: f64) -> SpectralField {
    if t == 0.0 {
        return ft.clone();
    }
    let g = ft.grid();
    let tr = VelocityTransform::new(g);
    let nv3 = g.nv3();
    let mut vals = ft.values().to_vec();
    for blk in vals.chunks_mut(nv3) {
        tr.to_v(blk);
    }
    let mut vals = free_stream_complex(g, &vals, t);
    for blk in vals.chunks_mut(nv3) {
        tr.to_xi(blk);
    }
    SpectralField::new(g.clone(), vals, ft.time() + t).expect("same grid")
}

/// Fails with a window error if some characteristic from the x-support of `f` wraps within `[0, t]`.
///
/// The support is taken as the nodes where `|f|` exceeds `1e-10·max|f|`.
pub fn check_wrap_free(f: &DistributionField, t: f64) -> Result<()> {
    let g = f.grid();
    let top = f.max_abs();
    if top == 0.0 {
        return Ok(());
    }
    let mut reach = [0.0f64; 3];
    let mut vmax = [0.0f64; 3];
    for ix in 0..g.nx3() {
        let x = g.x_node(ix);
        for (iv, val) in f.block(ix).iter().enumerate() {
            if val.abs() > 1e-10 * top {
                let v = g.v_node(iv);
                for i in 0..3 {
                    reach[i] = reach[i].max(x[i].abs());
                    vmax[i] = vmax[i].max(v[i].abs());
                }
            }
        }
    }
    for i in 0..3 {
        if reach[i] + vmax[i] * t.abs() >= g.lx() {
            return Err(LabError::Window(format!(
                "axis {i}: support radius {:.3} + max|v| t = {:.3} reaches L_x = {}",
                reach[i],
                vmax[i] * t.abs(),
                g.lx()
            )));
        }
    }
    Ok(())
}

/// `S(T − t0) f0 + Σ_j w_j S(T − τ_j) source(τ_j)`.
pub fn duhamel<F>(f0: &DistributionField, mut source: F, tg: &TimeGrid) -> Result<DistributionField>
where
    F: FnMut(f64) -> Result<DistributionField>,
{
    tg.validate()?;
    let mut out = free_stream(f0, tg.t_end - tg.t0);
    let (nodes, weights) = tg.rule();
    for (tau, w) in nodes.into_iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let s = source(tau).map_err(|e| match e {
            LabError::Source { .. } => e,
            other => LabError::Source { time: tau, reason: other.to_string() },
        })?;
        f0.grid().same_as(s.grid())?;
        out.axpy(w, &free_stream(&s, tg.t_end - tau))?;
    }
    out.set_time(tg.t_end);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PhaseGrid {
        PhaseGrid::new(2.0, 8, 3.0, 4).unwrap()
    }

    #[test]
    fn plane_wave_is_transported() {
        let g = grid();
        let k = [std::f64::consts::PI / 2.0, 0.0, std::f64::consts::PI];
        let f = DistributionField::from_fn(&g, |x, v| (k[0] * x[0] + k[2] * x[2]).cos() * (-v[0] * v[0]).exp());
        let t = 0.37;
        let s = free_stream(&f, t);
        let expect = DistributionField::from_fn(&g, |x, v| {
            (k[0] * (x[0] - t * v[0]) + k[2] * (x[2] - t * v[2])).cos() * (-v[0] * v[0]).exp()
        });
        assert!(s.max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn commensurate_step_is_a_permutation() {
        let g = PhaseGrid::new(0.375, 4, 3.0, 8).unwrap();
        let f = DistributionField::from_fn(&g, |x, v| 1.0 + x[0] + 0.1 * v[1] * v[1] + x[1] * x[2]);
        let t = g.dx() / g.dv();
        let s = free_stream(&f, t);
        let mut a: Vec<f64> = f.values().to_vec();
        let mut b: Vec<f64> = s.values().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "err {err}");
    }

    #[test]
    fn time_grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 0.3, Quadrature::Trapezoid).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1, Quadrature::Trapezoid).is_err());
        let tg = TimeGrid::new(0.0, 1.0, 0.25, Quadrature::Midpoint).unwrap();
        let (t, w) = tg.rule();
        assert_eq!(t.len(), 4);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn source_failure_carries_time() {
        let g = grid();
        let f = DistributionField::zeros(&g);
        let tg = TimeGrid::new(0.0, 1.0, 0.5, Quadrature::Trapezoid).unwrap();
        let err = duhamel(&f, |t| if t > 0.4 { Err(LabError::Domain("boom".into())) } else { Ok(f.clone()) }, &tg);
        assert!(matches!(err, Err(LabError::Source { time, .. }) if (time - 0.5).abs() < 1e-15));
    }

    #[test]
    fn wrap_window_detection() {
        let g = grid();
        let f = DistributionField::from_fn(&g, |x, v| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) * 20.0).exp() * (-v[0] * v[0]).exp());
        assert!(check_wrap_free(&f, 0.1).is_ok());
        assert!(matches!(check_wrap_free(&f, 5.0), Err(LabError::Window(_))));
    }
}
