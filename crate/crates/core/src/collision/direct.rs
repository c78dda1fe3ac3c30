//! Gain and loss operators by quadrature over the relative-velocity lattice.
//!
//! The gain term is evaluated in weak form: a pair `(v, u = v + d)` sends the
//! product `f(v) g(u) |d|^γ b` to the post-collision velocity `v + (ω·d)ω`.
//! The spectral scheme represents that jump as the phase `e^{−ik·s}`, which is
//! exact for the grid's trigonometric interpolant; the monotone scheme deposits
//! it on the eight surrounding nodes with trilinear weights, which keeps the
//! result non-negative.

use super::kernel::CollisionKernel;
use super::lattice::{b_total, deposit_table, offsets, phase_table, speed_factors, DepositTable, LossKernel, PhaseTable};
use super::sphere::SphereRule;
use crate::error::{LabError, Result};
use crate::fft::CubeFft;
use crate::grid::{DistributionField, PhaseGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GainScheme {
    /// Phase-exact post-collision evaluation; accurate, not sign-preserving.
    #[default]
    Spectral,
    /// Trilinear deposit of each collision product; sign-preserving.
    MonotoneCic,
}

enum Tables {
    Spectral(Arc<PhaseTable>),
    Cic(Arc<DepositTable>),
}

/// Collision operator bound to one velocity grid, kernel and sphere rule.
pub struct CollisionOperator {
    kernel: CollisionKernel,
    rule: SphereRule,
    scheme: GainScheme,
    n: usize,
    h: f64,
    speed: Vec<f64>,
    offsets: Vec<[i64; 3]>,
    tables: Tables,
    loss: LossKernel,
    b_total: f64,
    fft: CubeFft,
}

impl CollisionOperator {
    pub fn new(grid: &PhaseGrid, kernel: &CollisionKernel, rule: &SphereRule, scheme: GainScheme) -> Self {
        let (n, h) = (grid.nv(), grid.dv());
        let tables = match scheme {
            GainScheme::Spectral => Tables::Spectral(phase_table(n, h, kernel, rule)),
            GainScheme::MonotoneCic => Tables::Cic(deposit_table(n, h, kernel, rule)),
        };
        let bt = b_total(kernel, rule);
        Self {
            kernel: kernel.clone(),
            rule: rule.clone(),
            scheme,
            n,
            h,
            speed: speed_factors(n, h, kernel.gamma()),
            offsets: offsets(n),
            tables,
            loss: LossKernel::new(n, h, kernel.gamma(), bt),
            b_total: bt,
            fft: CubeFft::new(n),
        }
    }

    pub fn kernel(&self) -> &CollisionKernel {
        &self.kernel
    }
    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }
    pub fn scheme(&self) -> GainScheme {
        self.scheme
    }
    /// `Σ_ω w b` over the full sphere (`2π` for `b = |cos θ|`).
    pub fn angular_mass(&self) -> f64 {
        self.b_total
    }

    fn check(&self, f: &DistributionField) -> Result<()> {
        let g = f.grid();
        if g.nv() != self.n || g.dv() != self.h {
            return Err(LabError::GridMismatch(format!(
                "operator built for N_v = {}, dv = {}; field has N_v = {}, dv = {}",
                self.n,
                self.h,
                g.nv(),
                g.dv()
            )));
        }
        Ok(())
    }

    /// `Q⁺(f, g)` at every spatial node.
    pub fn gain(&self, f: &DistributionField, g: &DistributionField) -> Result<DistributionField> {
        self.check(f)?;
        f.grid().same_as(g.grid())?;
        let blocks = pairwise_blocks(f, g, |a, b| self.gain_block(a, b));
        DistributionField::new(f.grid().clone(), blocks, f.time())
    }

    /// `A[g]` at every spatial node.
    pub fn loss_rate(&self, g: &DistributionField) -> Result<DistributionField> {
        self.check(g)?;
        let blocks = pairwise_blocks(g, g, |a, _| self.loss_rate_block(a));
        DistributionField::new(g.grid().clone(), blocks, g.time())
    }

    /// `Q⁻(f, g) = f A[g]`.
    pub fn loss(&self, f: &DistributionField, g: &DistributionField) -> Result<DistributionField> {
        f.grid().same_as(g.grid())?;
        let mut a = self.loss_rate(g)?;
        for (x, fv) in a.values_mut().iter_mut().zip(f.values()) {
            *x *= fv;
        }
        Ok(a)
    }

    /// `Q(f, f) = Q⁺(f, f) − f A[f]`.
    pub fn collision(&self, f: &DistributionField) -> Result<DistributionField> {
        let mut q = self.gain(f, f)?;
        let l = self.loss(f, f)?;
        q.axpy(-1.0, &l)?;
        Ok(q)
    }

    pub fn loss_rate_block(&self, g: &[f64]) -> Vec<f64> {
        self.loss.apply(g)
    }

    /// Gain on one velocity block.
    pub fn gain_block(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        match &self.tables {
            Tables::Spectral(t) => self.gain_spectral(t, f, g),
            Tables::Cic(t) => self.gain_cic(t, f, g),
        }
    }

    fn product(&self, d: [i64; 3], f: &[f64], g: &[f64], out: &mut [f64]) -> bool {
        let n = self.n;
        let ni = n as i64;
        let mut any = false;
        for a in 0..n {
            let ga = (a as i64 + d[0]).rem_euclid(ni) as usize;
            for b in 0..n {
                let gb = (b as i64 + d[1]).rem_euclid(ni) as usize;
                let fr = (a * n + b) * n;
                let gr = (ga * n + gb) * n;
                for c in 0..n {
                    let gc = (c as i64 + d[2]).rem_euclid(ni) as usize;
                    let p = f[fr + c] * g[gr + gc];
                    out[fr + c] = p;
                    any |= p != 0.0;
                }
            }
        }
        any
    }

    fn gain_spectral(&self, t: &PhaseTable, f: &[f64], g: &[f64]) -> Vec<f64> {
        let n3 = self.n.pow(3);
        let mut acc = vec![Complex64::default(); n3];
        let mut prod = vec![0.0; n3];
        let mut buf = vec![Complex64::default(); n3];
        for (di, d) in self.offsets.iter().enumerate() {
            if !self.product(*d, f, g, &mut prod) {
                continue;
            }
            for (z, p) in buf.iter_mut().zip(&prod) {
                *z = Complex64::new(*p, 0.0);
            }
            self.fft.forward(&mut buf);
            let kd = self.speed[di];
            let row = &t.data[di * n3..(di + 1) * n3];
            for ((a, z), w) in acc.iter_mut().zip(&buf).zip(row) {
                *a += z * w * kd;
            }
        }
        self.fft.inverse(&mut acc);
        let s = self.h.powi(3) / n3 as f64;
        acc.iter().map(|z| z.re * s).collect()
    }

    fn gain_cic(&self, t: &DepositTable, f: &[f64], g: &[f64]) -> Vec<f64> {
        let n = self.n;
        let ni = n as i64;
        let n3 = n.pow(3);
        let mut out = vec![0.0; n3];
        let mut prod = vec![0.0; n3];
        let h3 = self.h.powi(3);
        for (di, d) in self.offsets.iter().enumerate() {
            if !self.product(*d, f, g, &mut prod) {
                continue;
            }
            let kd = self.speed[di] * h3;
            for (m, w) in &t.stencils[di] {
                let wk = w * kd;
                for a in 0..n {
                    let oa = (a as i64 + m[0]).rem_euclid(ni) as usize;
                    for b in 0..n {
                        let ob = (b as i64 + m[1]).rem_euclid(ni) as usize;
                        let src = &prod[(a * n + b) * n..(a * n + b + 1) * n];
                        let dst_row = (oa * n + ob) * n;
                        let shift = m[2].rem_euclid(ni) as usize;
                        for (c, p) in src.iter().enumerate() {
                            if *p != 0.0 {
                                let oc = c + shift;
                                let oc = if oc >= n { oc - n } else { oc };
                                out[dst_row + oc] += wk * p;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn block_hash(b: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    for v in b {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Applies `op` once per distinct pair of velocity blocks and scatters the result.
pub(crate) fn pairwise_blocks(
    f: &DistributionField,
    g: &DistributionField,
    op: impl Fn(&[f64], &[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let grid = f.grid();
    let nx3 = grid.nx3();
    let mut seen: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    let mut rep = vec![0usize; nx3];
    let mut computed: Vec<Option<Vec<f64>>> = vec![None; nx3];
    for ix in 0..nx3 {
        let key = (block_hash(f.block(ix)), block_hash(g.block(ix)));
        let cands = seen.entry(key).or_default();
        match cands.iter().find(|&&j| f.block(j) == f.block(ix) && g.block(j) == g.block(ix)) {
            Some(&j) => rep[ix] = j,
            None => {
                cands.push(ix);
                rep[ix] = ix;
            }
        }
    }
    for ix in 0..nx3 {
        if rep[ix] == ix {
            computed[ix] = Some(op(f.block(ix), g.block(ix)));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for ix in 0..nx3 {
        out.extend_from_slice(computed[rep[ix]].as_ref().expect("representative computed"));
    }
    out
}
