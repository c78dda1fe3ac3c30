//! Phase-space discretization, velocity Fourier transforms and weighted norms.
//!
//! Layout: a field on the `(x, v)` torus is stored x-major, one contiguous
//! velocity block of `N_v³` values per spatial node.  Velocity nodes are
//! `v_j = -L_v + j·dv`, and the ξ nodes are `ξ_m = (m - N_v/2)·dξ` with
//! `dξ = π / L_v`, so that `dv·dξ·N_v = 2π`.
//!
//! The velocity transform uses the unitary convention
//! `f̃(ξ) = (2π)^{-3/2} ∫ f(v) e^{+i v·ξ} dv`, discretized with the `dv³` weight.

use crate::error::{LabError, Result};
use crate::fft::{signed_index, CubeFft};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The discretized `(x, v)` torus and its Fourier duals.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    lx: f64,
    nx: usize,
    lv: f64,
    nv: usize,
    kx: Vec<f64>,
    xi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    #[serde(rename = "L_x")]
    pub lx: f64,
    #[serde(rename = "N_x")]
    pub nx: usize,
    #[serde(rename = "L_v")]
    pub lv: f64,
    #[serde(rename = "N_v")]
    pub nv: usize,
    pub fourier_convention: String,
}

impl PhaseGrid {
    pub fn new(lx: f64, nx: usize, lv: f64, nv: usize) -> Result<Self> {
        for (name, n) in [("N_x", nx), ("N_v", nv)] {
            if n < 4 || !n.is_power_of_two() {
                return Err(LabError::InvalidGrid(format!("{name} = {n} must be a power of two >= 4")));
            }
        }
        for (name, l) in [("L_x", lx), ("L_v", lv)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(LabError::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        let kx = (0..nx).map(|m| signed_index(m, nx) as f64 * PI / lx).collect();
        let dxi = PI / lv;
        let xi = (0..nv).map(|m| (m as f64 - (nv / 2) as f64) * dxi).collect();
        Ok(Self { lx, nx, lv, nv, kx, xi })
    }

    pub fn from_header(h: &GridHeader) -> Result<Self> {
        Self::new(h.lx, h.nx, h.lv, h.nv)
    }

    pub fn header(&self) -> GridHeader {
        GridHeader {
            lx: self.lx,
            nx: self.nx,
            lv: self.lv,
            nv: self.nv,
            fourier_convention: "unitary".into(),
        }
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn lv(&self) -> f64 {
        self.lv
    }
    pub fn nv(&self) -> usize {
        self.nv
    }
    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }
    pub fn dv(&self) -> f64 {
        2.0 * self.lv / self.nv as f64
    }
    pub fn dxi(&self) -> f64 {
        PI / self.lv
    }
    /// Spatial wavenumbers in FFT order (Nyquist negative).
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    /// ξ nodes in centered order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    pub fn nx3(&self) -> usize {
        self.nx.pow(3)
    }
    pub fn nv3(&self) -> usize {
        self.nv.pow(3)
    }
    pub fn len(&self) -> usize {
        self.nx3() * self.nv3()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn cell_x(&self) -> f64 {
        self.dx().powi(3)
    }
    pub fn cell_v(&self) -> f64 {
        self.dv().powi(3)
    }
    pub fn cell_xi(&self) -> f64 {
        self.dxi().powi(3)
    }

    pub fn x_coord(&self, i: usize) -> f64 {
        -self.lx + i as f64 * self.dx()
    }
    pub fn v_coord(&self, j: usize) -> f64 {
        -self.lv + j as f64 * self.dv()
    }

    pub fn x_node(&self, ix: usize) -> [f64; 3] {
        let [a, b, c] = split3(ix, self.nx);
        [self.x_coord(a), self.x_coord(b), self.x_coord(c)]
    }
    pub fn v_node(&self, iv: usize) -> [f64; 3] {
        let [a, b, c] = split3(iv, self.nv);
        [self.v_coord(a), self.v_coord(b), self.v_coord(c)]
    }
    pub fn xi_node(&self, im: usize) -> [f64; 3] {
        let [a, b, c] = split3(im, self.nv);
        [self.xi[a], self.xi[b], self.xi[c]]
    }
    /// Wavevector of the spatial FFT slot `ik` (FFT order).
    pub fn k_node(&self, ik: usize) -> [f64; 3] {
        let [a, b, c] = split3(ik, self.nx);
        [self.kx[a], self.kx[b], self.kx[c]]
    }

    /// True when `ik` sits on a Nyquist plane of the spatial transform.
    pub fn is_x_nyquist(&self, ik: usize) -> bool {
        split3(ik, self.nx).iter().any(|&m| m == self.nx / 2)
    }

    pub(crate) fn same_as(&self, other: &PhaseGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!("{:?} vs {:?}", self.header(), other.header())))
        }
    }

    /// Same velocity discretization (spatial part may differ).
    pub fn same_velocity(&self, other: &PhaseGrid) -> bool {
        self.nv == other.nv && self.lv == other.lv
    }
}

pub(crate) fn split3(i: usize, n: usize) -> [usize; 3] {
    [i / (n * n), (i / n) % n, i % n]
}

pub(crate) fn join3(a: usize, b: usize, c: usize, n: usize) -> usize {
    (a * n + b) * n + c
}

/// Real samples `f(x, v)` on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    grid: PhaseGrid,
    values: Vec<f64>,
    time: f64,
}

impl DistributionField {
    pub fn new(grid: PhaseGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Domain(format!("non-finite entry at flat index {i}")));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: &PhaseGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()], time: 0.0 }
    }

    pub fn from_fn(grid: &PhaseGrid, mut f: impl FnMut([f64; 3], [f64; 3]) -> f64) -> Self {
        let nv3 = grid.nv3();
        let vs: Vec<[f64; 3]> = (0..nv3).map(|iv| grid.v_node(iv)).collect();
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx3() {
            let x = grid.x_node(ix);
            values.extend(vs.iter().map(|&v| f(x, v)));
        }
        Self { grid: grid.clone(), values, time: 0.0 }
    }

    /// The same velocity block at every spatial node.
    pub fn homogeneous(grid: &PhaseGrid, block: &[f64]) -> Result<Self> {
        if block.len() != grid.nv3() {
            return Err(LabError::GridMismatch(format!("block of {} for N_v³ = {}", block.len(), grid.nv3())));
        }
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.nx3() {
            values.extend_from_slice(block);
        }
        Self::new(grid.clone(), values, 0.0)
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }
    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn block(&self, ix: usize) -> &[f64] {
        let n = self.grid.nv3();
        &self.values[ix * n..(ix + 1) * n]
    }
    pub fn block_mut(&mut self, ix: usize) -> &mut [f64] {
        let n = self.grid.nv3();
        &mut self.values[ix * n..(ix + 1) * n]
    }

    /// All spatial nodes carry bitwise identical velocity blocks.
    pub fn is_x_homogeneous(&self) -> bool {
        let first = self.block(0);
        (1..self.grid.nx3()).all(|ix| self.block(ix) == first)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫∫ f dx dv`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_x() * self.grid.cell_v()
    }
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_x() * self.grid.cell_v()
    }

    /// Passes when `min ≥ -eps_rel·max|f|` (default tolerance 1e-12).
    pub fn certify_nonnegative(&self, eps_rel: f64) -> Result<()> {
        let floor = -eps_rel * self.max_abs();
        let m = self.min();
        if m >= floor {
            Ok(())
        } else {
            Err(LabError::Domain(format!("min {m:e} below non-negativity floor {floor:e}")))
        }
    }

    /// Largest |f| on the outer 10% velocity shell relative to max|f|.
    pub fn velocity_shell_ratio(&self) -> f64 {
        let g = &self.grid;
        let edge = 0.9 * g.lv;
        let shell: Vec<bool> = (0..g.nv3()).map(|iv| g.v_node(iv).iter().any(|c| c.abs() >= edge - 1e-12)).collect();
        let mut m = 0.0f64;
        for ix in 0..g.nx3() {
            for (iv, v) in self.block(ix).iter().enumerate() {
                if shell[iv] {
                    m = m.max(v.abs());
                }
            }
        }
        let top = self.max_abs();
        if top == 0.0 {
            0.0
        } else {
            m / top
        }
    }

    /// Truncation warning text when the shell ratio exceeds 1e-10.
    pub fn truncation_warning(&self) -> Option<String> {
        let r = self.velocity_shell_ratio();
        (r > 1e-10).then(|| format!("velocity truncation: shell/max = {r:.3e} exceeds 1e-10"))
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn axpy(&mut self, a: f64, other: &DistributionField) -> Result<()> {
        self.grid.same_as(&other.grid)?;
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn sub(&self, other: &DistributionField) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &DistributionField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Removes the spatial Nyquist planes (the content transport cannot represent exactly).
    pub fn without_x_nyquist(&self) -> Self {
        let mut spec = x_forward(&self.grid, &self.values);
        let nv3 = self.grid.nv3();
        for ik in 0..self.grid.nx3() {
            if self.grid.is_x_nyquist(ik) {
                spec[ik * nv3..(ik + 1) * nv3].iter_mut().for_each(|z| *z = Complex64::default());
            }
        }
        let values = x_inverse(&self.grid, spec).into_iter().map(|z| z.re).collect();
        Self { grid: self.grid.clone(), values, time: self.time }
    }
}

/// Complex samples `f̃(x, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: PhaseGrid,
    values: Vec<Complex64>,
    time: f64,
}

impl SpectralField {
    pub fn new(grid: PhaseGrid, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, time })
    }
    pub fn zeros(grid: &PhaseGrid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::default(); grid.len()], time: 0.0 }
    }
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn time(&self) -> f64 {
        self.time
    }
    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }
    pub fn block(&self, ix: usize) -> &[Complex64] {
        let n = self.grid.nv3();
        &self.values[ix * n..(ix + 1) * n]
    }
    pub fn block_mut(&mut self, ix: usize) -> &mut [Complex64] {
        let n = self.grid.nv3();
        &mut self.values[ix * n..(ix + 1) * n]
    }

    /// Worst violation of `f̃(x, -ξ) = conj f̃(x, ξ)` relative to max|f̃|.
    /// The mirror of the lowest ξ slot lies outside the grid, so those slots are skipped.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.nv;
        let top = self.values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if top == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for ix in 0..self.grid.nx3() {
            let b = self.block(ix);
            for im in 0..self.grid.nv3() {
                let [a, bb, c] = split3(im, n);
                if a == 0 || bb == 0 || c == 0 {
                    continue;
                }
                let mirror = join3(n - a, n - bb, n - c, n);
                worst = worst.max((b[im] - b[mirror].conj()).norm());
            }
        }
        worst / top
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Velocity-block transform `v ↔ ξ` with the unitary weights.
#[derive(Clone)]
pub(crate) struct VelocityTransform {
    fft: CubeFft,
    fwd_scale: f64,
    inv_scale: f64,
}

impl VelocityTransform {
    pub fn new(grid: &PhaseGrid) -> Self {
        let c = (2.0 * PI).powf(-1.5);
        Self { fft: CubeFft::new(grid.nv), fwd_scale: c * grid.cell_v(), inv_scale: c * grid.cell_xi() }
    }

    /// `v → ξ` on one block, in place.
    pub fn to_xi(&self, buf: &mut [Complex64]) {
        self.fft.inverse_centered(buf);
        buf.iter_mut().for_each(|z| *z *= self.fwd_scale);
    }

    /// `ξ → v` on one block, in place.
    pub fn to_v(&self, buf: &mut [Complex64]) {
        self.fft.forward_centered(buf);
        buf.iter_mut().for_each(|z| *z *= self.inv_scale);
    }

    pub fn real_to_xi(&self, block: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = block.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.to_xi(&mut buf);
        buf
    }
}

pub fn fourier_v(f: &DistributionField) -> SpectralField {
    let g = f.grid();
    let tr = VelocityTransform::new(g);
    let mut values = Vec::with_capacity(g.len());
    for ix in 0..g.nx3() {
        values.extend(tr.real_to_xi(f.block(ix)));
    }
    SpectralField { grid: g.clone(), values, time: f.time() }
}

/// Inverse transform; the imaginary residue of a conjugate-symmetric input is discarded.
pub fn inverse_fourier_v(ft: &SpectralField) -> DistributionField {
    let (re, _) = inverse_fourier_v_complex(ft);
    re
}

/// Inverse transform returning the real part and the largest imaginary magnitude.
pub fn inverse_fourier_v_complex(ft: &SpectralField) -> (DistributionField, f64) {
    let g = ft.grid();
    let tr = VelocityTransform::new(g);
    let mut values = Vec::with_capacity(g.len());
    let mut imag = 0.0f64;
    for ix in 0..g.nx3() {
        let mut buf = ft.block(ix).to_vec();
        tr.to_v(&mut buf);
        for z in buf {
            imag = imag.max(z.im.abs());
            values.push(z.re);
        }
    }
    (DistributionField { grid: g.clone(), values, time: ft.time() }, imag)
}

/// Spatial FFT of every velocity slot; output layout `[k-slot][v-slot]`, FFT order in k.
pub(crate) fn x_forward_complex(grid: &PhaseGrid, values: &[Complex64]) -> Vec<Complex64> {
    x_transform(grid, values, true)
}

pub(crate) fn x_forward(grid: &PhaseGrid, values: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    x_transform(grid, &c, true)
}

/// Inverse of [`x_forward`], normalized.
pub(crate) fn x_inverse(grid: &PhaseGrid, spec: Vec<Complex64>) -> Vec<Complex64> {
    let mut out = x_transform(grid, &spec, false);
    let s = 1.0 / grid.nx3() as f64;
    out.iter_mut().for_each(|z| *z *= s);
    out
}

fn x_transform(grid: &PhaseGrid, values: &[Complex64], forward: bool) -> Vec<Complex64> {
    let fft = CubeFft::new(grid.nx);
    let (nx3, nv3) = (grid.nx3(), grid.nv3());
    let mut out = vec![Complex64::default(); values.len()];
    let mut buf = vec![Complex64::default(); nx3];
    for iv in 0..nv3 {
        for ix in 0..nx3 {
            buf[ix] = values[ix * nv3 + iv];
        }
        if forward {
            fft.forward(&mut buf);
        } else {
            fft.inverse(&mut buf);
        }
        for ix in 0..nx3 {
            out[ix * nv3 + iv] = buf[ix];
        }
    }
    out
}

/// Velocity weight `⟨v⟩^r` (bracket) or `|v|^r` (homogeneous); likewise for `∇_x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    Bracket,
    Homogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub s: f64,
    pub r: f64,
    pub kind: WeightKind,
}

impl Weights {
    pub fn bracket(s: f64, r: f64) -> Self {
        Self { s, r, kind: WeightKind::Bracket }
    }
    pub fn homogeneous(s: f64, r: f64) -> Self {
        Self { s, r, kind: WeightKind::Homogeneous }
    }
    pub(crate) fn velocity(&self, v: [f64; 3]) -> f64 {
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        match self.kind {
            WeightKind::Bracket => (1.0 + v2).powf(self.r / 2.0),
            WeightKind::Homogeneous => {
                if v2 == 0.0 {
                    if self.r > 0.0 {
                        0.0
                    } else if self.r == 0.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    v2.powf(self.r / 2.0)
                }
            }
        }
    }
    pub(crate) fn spatial(&self, k: [f64; 3]) -> f64 {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        match self.kind {
            WeightKind::Bracket => (1.0 + k2).powf(self.s / 2.0),
            WeightKind::Homogeneous => {
                if k2 == 0.0 {
                    if self.s == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    k2.powf(self.s / 2.0)
                }
            }
        }
    }
}

/// Mixed Lebesgue norm selector.  `LvLx { p }` is `‖‖f(·,v)‖_{L^p_x}‖_{L²_v}`;
/// `LxLv { p, q }` is `‖‖f(x,·)‖_{L^q_v}‖_{L^p_x}`.  Exponents may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormMix {
    L2,
    LvLx { p: f64 },
    LxLv { p: f64, q: f64 },
}

impl NormMix {
    pub fn sup_v(p: f64) -> Self {
        NormMix::LxLv { p, q: f64::INFINITY }
    }

    fn validate(&self) -> Result<()> {
        let ok = |e: f64| e >= 1.0 || e == f64::INFINITY;
        let fine = match *self {
            NormMix::L2 => true,
            NormMix::LvLx { p } => ok(p),
            NormMix::LxLv { p, q } => ok(p) && ok(q),
        };
        if fine {
            Ok(())
        } else {
            Err(LabError::Usage(format!("unsupported norm descriptor {self:?}: exponents must be >= 1")))
        }
    }
}

pub enum FieldRef<'a> {
    Real(&'a DistributionField),
    Spectral(&'a SpectralField),
}

impl<'a> From<&'a DistributionField> for FieldRef<'a> {
    fn from(f: &'a DistributionField) -> Self {
        FieldRef::Real(f)
    }
}

impl<'a> From<&'a SpectralField> for FieldRef<'a> {
    fn from(f: &'a SpectralField) -> Self {
        FieldRef::Spectral(f)
    }
}

/// `‖⟨∇_x⟩^s ⟨v⟩^r f‖` in the selected mixed norm.
pub fn weighted_norm<'a>(f: impl Into<FieldRef<'a>>, s: f64, r: f64, mix: NormMix) -> Result<f64> {
    weighted_norm_with(f, Weights::bracket(s, r), mix)
}

/// General form of [`weighted_norm`].  On a spectral field the velocity weight
/// acts as the multiplier `⟨∇_ξ⟩^r`, i.e. pointwise in `v` after inversion.
pub fn weighted_norm_with<'a>(f: impl Into<FieldRef<'a>>, w: Weights, mix: NormMix) -> Result<f64> {
    mix.validate()?;
    if !(w.s >= -2.0 && w.r >= -2.0) {
        return Err(LabError::Usage(format!("weights s = {}, r = {} below -2", w.s, w.r)));
    }
    let (grid, mut vals, cell_v) = match f.into() {
        FieldRef::Real(f) => {
            let g = f.grid().clone();
            let vals: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let cv = g.cell_v();
            (g, weight_velocity(f.grid(), vals, &w), cv)
        }
        FieldRef::Spectral(ft) => {
            let g = ft.grid().clone();
            let cxi = g.cell_xi();
            let mut vals = ft.values().to_vec();
            if w.r != 0.0 {
                let tr = VelocityTransform::new(&g);
                let nv3 = g.nv3();
                for ix in 0..g.nx3() {
                    let blk = &mut vals[ix * nv3..(ix + 1) * nv3];
                    tr.to_v(blk);
                }
                vals = weight_velocity(&g, vals, &w);
                for ix in 0..g.nx3() {
                    let blk = &mut vals[ix * nv3..(ix + 1) * nv3];
                    tr.to_xi(blk);
                }
            }
            (g, vals, cxi)
        }
    };
    if w.s != 0.0 {
        let mut spec = x_forward_complex(&grid, &vals);
        let nv3 = grid.nv3();
        for ik in 0..grid.nx3() {
            let m = w.spatial(grid.k_node(ik));
            spec[ik * nv3..(ik + 1) * nv3].iter_mut().for_each(|z| *z *= m);
        }
        vals = x_inverse(&grid, spec);
    }
    let mags: Vec<f64> = vals.iter().map(|z| z.norm()).collect();
    Ok(mixed_norm(&grid, &mags, cell_v, mix))
}

fn weight_velocity(g: &PhaseGrid, mut vals: Vec<Complex64>, w: &Weights) -> Vec<Complex64> {
    if w.r == 0.0 {
        return vals;
    }
    let wv: Vec<f64> = (0..g.nv3()).map(|iv| w.velocity(g.v_node(iv))).collect();
    let nv3 = g.nv3();
    for (i, z) in vals.iter_mut().enumerate() {
        let c = wv[i % nv3];
        // 0·∞ at v = 0 for negative homogeneous weights: treat a zero sample as zero.
        *z = if z.norm() == 0.0 { Complex64::default() } else { *z * c };
    }
    vals
}

pub(crate) fn lp(vals: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p == f64::INFINITY {
        vals.fold(0.0, f64::max)
    } else if p == 2.0 {
        (vals.map(|v| v * v).sum::<f64>() * cell).sqrt()
    } else {
        (vals.map(|v| v.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

/// Mixed norm of non-negative magnitudes laid out `[x][v]`.
pub(crate) fn mixed_norm(g: &PhaseGrid, mags: &[f64], cell_v: f64, mix: NormMix) -> f64 {
    let (nx3, nv3) = (g.nx3(), g.nv3());
    let cx = g.cell_x();
    match mix {
        NormMix::L2 => lp(mags.iter().copied(), 2.0, cx * cell_v),
        NormMix::LvLx { p } => {
            let inner: Vec<f64> = (0..nv3).map(|iv| lp((0..nx3).map(|ix| mags[ix * nv3 + iv]), p, cx)).collect();
            lp(inner.into_iter(), 2.0, cell_v)
        }
        NormMix::LxLv { p, q } => {
            let inner: Vec<f64> = (0..nx3).map(|ix| lp(mags[ix * nv3..(ix + 1) * nv3].iter().copied(), q, cell_v)).collect();
            lp(inner.into_iter(), p, cx)
        }
    }
}

/// Parameters of the family `f_λ(t,x,v) = λ^{α+(2+γ)β} f(λ^{α-β}t, λ^α x, λ^β v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    lambda: f64,
    alpha: f64,
    beta: f64,
}

impl ScalingParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(LabError::Domain(format!("scaling λ = {lambda} must be positive")));
        }
        Ok(Self { lambda, alpha, beta })
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn amplitude(&self, gamma: f64) -> f64 {
        self.lambda.powf(self.alpha + (2.0 + gamma) * self.beta)
    }
    /// Exponent of λ picked up by `‖|∇_x|^s |v|^r f‖_{L²_{x,v}}`.
    pub fn norm_exponent(&self, gamma: f64, s: f64, r: f64) -> f64 {
        let (a, b) = (self.alpha, self.beta);
        a + (2.0 + gamma) * b + a * s - b * r - 1.5 * a - 1.5 * b
    }
}

#[derive(Debug, Clone)]
pub struct Scaled {
    pub field: DistributionField,
    /// Some rescaled node fell between grid nodes and was interpolated.
    pub resampled: bool,
}

/// Applies the scaling family at the field's time stamp.  Source points that
/// land on nodes are copied; off-node points need `allow_resample` and are
/// filled by trigonometric interpolation; points beyond the box read zero, which
/// is accepted only if the field is negligible on its outer shell.
pub fn apply_scaling(f: &DistributionField, p: ScalingParams, gamma: f64, allow_resample: bool) -> Result<Scaled> {
    let g = f.grid();
    let sx = p.lambda.powf(p.alpha);
    let sv = p.lambda.powf(p.beta);
    let (mx, res_x, out_x) = axis_resampler(g.nx, g.lx, sx);
    let (mv, res_v, out_v) = axis_resampler(g.nv, g.lv, sv);
    if (res_x || res_v) && !allow_resample {
        return Err(LabError::Domain("rescaled nodes fall between grid nodes; resampling not permitted".into()));
    }
    if out_v && f.velocity_shell_ratio() > 1e-10 {
        return Err(LabError::Domain("support overflow: rescaled velocities leave the box".into()));
    }
    if out_x && spatial_shell_ratio(f) > 1e-10 {
        return Err(LabError::Domain("support overflow: rescaled positions leave the box".into()));
    }
    let dims = [g.nx, g.nx, g.nx, g.nv, g.nv, g.nv];
    let mut vals = f.values().to_vec();
    for axis in 0..6 {
        let m = if axis < 3 { &mx } else { &mv };
        vals = apply_axis(&vals, &dims, axis, m);
    }
    let amp = p.amplitude(gamma);
    vals.iter_mut().for_each(|v| *v *= amp);
    Ok(Scaled { field: DistributionField::new(g.clone(), vals, f.time())?, resampled: res_x || res_v })
}

fn spatial_shell_ratio(f: &DistributionField) -> f64 {
    let g = f.grid();
    let edge = 0.9 * g.lx;
    let top = f.max_abs();
    if top == 0.0 {
        return 0.0;
    }
    let mut m = 0.0f64;
    for ix in 0..g.nx3() {
        if g.x_node(ix).iter().any(|c| c.abs() >= edge - 1e-12) {
            m = f.block(ix).iter().fold(m, |a, v| a.max(v.abs()));
        }
    }
    m / top
}

/// Row `j` gives the weights that evaluate a nodal function at `scale·z_j`.
fn axis_resampler(n: usize, l: f64, scale: f64) -> (Vec<Vec<f64>>, bool, bool) {
    let h = 2.0 * l / n as f64;
    let mut rows = vec![vec![0.0; n]; n];
    let (mut resampled, mut outside) = (false, false);
    for (j, row) in rows.iter_mut().enumerate() {
        let y = scale * (-l + j as f64 * h);
        let pos = (y + l) / h;
        let near = pos.round();
        if (pos - near).abs() < 1e-9 {
            if near >= 0.0 && (near as usize) < n {
                row[near as usize] = 1.0;
            } else {
                outside = true;
            }
            continue;
        }
        if y < -l || y > l - h {
            outside = true;
            continue;
        }
        resampled = true;
        for (i, w) in row.iter_mut().enumerate() {
            *w = dirichlet_weight(pos - i as f64, n);
        }
    }
    (rows, resampled, outside)
}

/// Periodic band-limited interpolation weight at offset `t` (in node units).
fn dirichlet_weight(t: f64, n: usize) -> f64 {
    let th = 2.0 * PI * t / n as f64;
    let half = n / 2;
    let mut s = 1.0 + (half as f64 * th).cos();
    for m in 1..half {
        s += 2.0 * (m as f64 * th).cos();
    }
    s / n as f64
}

fn apply_axis(vals: &[f64], dims: &[usize; 6], axis: usize, m: &[Vec<f64>]) -> Vec<f64> {
    let n = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let mut out = vec![0.0; vals.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * n * inner + i;
            for (j, row) in m.iter().enumerate() {
                let mut acc = 0.0;
                for (k, w) in row.iter().enumerate() {
                    if *w != 0.0 {
                        acc += w * vals[base + k * inner];
                    }
                }
                out[base + j * inner] = acc;
            }
        }
    }
    out
}
