//! Relative-velocity lattice tables shared by the direct gain and the loss rate.

use super::kernel::CollisionKernel;
use super::sphere::{frame, SphereRule};
use crate::fft::{signed_index, CubeFft};
use num_complex::Complex64;
use statrs::function::gamma::gamma;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Weight of the coincident node `u = v` in lattice sums of `|u − v|^γ φ(u)`, in units of `h^γ`.
///
/// Chosen so the sum reproduces `∫ |z|^γ e^{-|z|²/2s²} dz` for `s = 3h` on the infinite lattice;
/// this removes the leading `O(h^{3+γ})` defect of the punctured rule.  Equals 1 at `γ = 0`.
pub fn origin_weight(h: f64, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    let s = 3.0 * h;
    let r = (12.0 * s / h) as i64 + 1;
    let mut acc = 0.0;
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                if a == 0 && b == 0 && c == 0 {
                    continue;
                }
                let z2 = ((a * a + b * b + c * c) as f64) * h * h;
                acc += z2.powf(gamma / 2.0) * (-z2 / (2.0 * s * s)).exp();
            }
        }
    }
    let exact = 2.0 * PI * (2.0 * s * s).powf((3.0 + gamma) / 2.0) * gamma_fn((3.0 + gamma) / 2.0);
    (exact - h.powi(3) * acc) / (h.powi(3) * h.powf(gamma))
}

pub(crate) fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

/// Offsets `d ∈ [−N/2, N/2)³` in lattice units, flat order matching `join3`.
pub(crate) fn offsets(n: usize) -> Vec<[i64; 3]> {
    let h = (n / 2) as i64;
    let mut out = Vec::with_capacity(n * n * n);
    for a in -h..h {
        for b in -h..h {
            for c in -h..h {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// `|d·h|^γ` with the calibrated origin weight.
pub(crate) fn speed_factors(n: usize, h: f64, gamma: f64) -> Vec<f64> {
    let w0 = origin_weight(h, gamma);
    offsets(n)
        .into_iter()
        .map(|d| {
            let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64;
            if r2 == 0.0 {
                w0 * h.powf(gamma)
            } else {
                (r2 * h * h).powf(gamma / 2.0)
            }
        })
        .collect()
}

/// Folded angular nodes around `d̂`: `(s/h, weight)` where `s = (ω·d)ω` is the velocity jump of `v`.
fn jumps(d: [i64; 3], h: f64, kernel: &CollisionKernel, rule: &SphereRule) -> Vec<([f64; 3], f64)> {
    let df = [d[0] as f64, d[1] as f64, d[2] as f64];
    let r = (df[0] * df[0] + df[1] * df[1] + df[2] * df[2]).sqrt();
    if r == 0.0 {
        let total = rule.upper_hemisphere().map(|(c, w, _)| w * kernel.b_folded(c)).sum();
        return vec![([0.0; 3], total)];
    }
    let (e1, e2, e3) = frame(df);
    let _ = h;
    rule.upper_hemisphere()
        .map(|(c, w, phi)| {
            let sn = (1.0 - c * c).max(0.0).sqrt();
            let om: [f64; 3] = std::array::from_fn(|i| c * e3[i] + sn * (phi.cos() * e1[i] + phi.sin() * e2[i]));
            let proj = r * c;
            ([proj * om[0], proj * om[1], proj * om[2]], w * kernel.b_folded(c))
        })
        .collect()
}

/// Full-sphere mass of the angular factor under the rule.
pub(crate) fn b_total(kernel: &CollisionKernel, rule: &SphereRule) -> f64 {
    rule.upper_hemisphere().map(|(c, w, _)| w * kernel.b_folded(c)).sum()
}

#[derive(Hash, PartialEq, Eq, Clone)]
struct TableKey {
    n: usize,
    h_bits: u64,
    rule: (usize, usize),
    b: String,
}

fn key(n: usize, h: f64, kernel: &CollisionKernel, rule: &SphereRule) -> TableKey {
    let s = rule.spec();
    TableKey { n, h_bits: h.to_bits(), rule: (s.n_theta, s.n_phi), b: format!("{:?}", kernel.angular()) }
}

/// `T⁰_d(k) = Σ_ω w b(ω·d̂) e^{−i k·s}` for every offset, natural FFT order in `k`.
pub(crate) struct PhaseTable {
    pub data: Vec<Complex64>,
}

/// Trilinear deposit stencils: for offset `d`, `(lattice shift, weight)` pairs.
pub(crate) struct DepositTable {
    pub stencils: Vec<Vec<([i64; 3], f64)>>,
}

type Cache<T> = Mutex<HashMap<TableKey, Arc<T>>>;

fn phase_cache() -> &'static Cache<PhaseTable> {
    static C: OnceLock<Cache<PhaseTable>> = OnceLock::new();
    C.get_or_init(Default::default)
}

fn deposit_cache() -> &'static Cache<DepositTable> {
    static C: OnceLock<Cache<DepositTable>> = OnceLock::new();
    C.get_or_init(Default::default)
}

pub(crate) fn phase_table(n: usize, h: f64, kernel: &CollisionKernel, rule: &SphereRule) -> Arc<PhaseTable> {
    let k = key(n, h, kernel, rule);
    let mut cache = phase_cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = cache.get(&k) {
        return t.clone();
    }
    let t = Arc::new(build_phase_table(n, h, kernel, rule));
    cache.insert(k, t.clone());
    t
}

pub(crate) fn deposit_table(n: usize, h: f64, kernel: &CollisionKernel, rule: &SphereRule) -> Arc<DepositTable> {
    let k = key(n, h, kernel, rule);
    let mut cache = deposit_cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = cache.get(&k) {
        return t.clone();
    }
    let t = Arc::new(build_deposit_table(n, h, kernel, rule));
    cache.insert(k, t.clone());
    t
}

fn build_phase_table(n: usize, h: f64, kernel: &CollisionKernel, rule: &SphereRule) -> PhaseTable {
    let n3 = n * n * n;
    let kstep = 2.0 * PI / (n as f64 * h);
    let kk: Vec<f64> = (0..n).map(|m| signed_index(m, n) as f64 * kstep).collect();
    let offs = offsets(n);
    let mut data = vec![Complex64::default(); offs.len() * n3];
    let mut e = [vec![Complex64::default(); n], vec![Complex64::default(); n], vec![Complex64::default(); n]];
    for (di, d) in offs.iter().enumerate() {
        let out = &mut data[di * n3..(di + 1) * n3];
        for (s, w) in jumps(*d, h, kernel, rule) {
            for ax in 0..3 {
                for (m, z) in e[ax].iter_mut().enumerate() {
                    *z = Complex64::from_polar(1.0, -kk[m] * s[ax] * h);
                }
            }
            for a in 0..n {
                let za = e[0][a] * w;
                for b in 0..n {
                    let zb = za * e[1][b];
                    let row = &mut out[(a * n + b) * n..(a * n + b + 1) * n];
                    for (o, zc) in row.iter_mut().zip(&e[2]) {
                        *o += zb * zc;
                    }
                }
            }
        }
    }
    PhaseTable { data }
}

fn build_deposit_table(n: usize, h: f64, kernel: &CollisionKernel, rule: &SphereRule) -> DepositTable {
    let stencils = offsets(n)
        .into_iter()
        .map(|d| {
            let mut acc: HashMap<[i64; 3], f64> = HashMap::new();
            for (s, w) in jumps(d, h, kernel, rule) {
                let base: [f64; 3] = std::array::from_fn(|i| s[i].floor());
                let frac: [f64; 3] = std::array::from_fn(|i| s[i] - base[i]);
                for corner in 0..8 {
                    let mut wt = w;
                    let mut at = [0i64; 3];
                    for i in 0..3 {
                        let up = (corner >> i) & 1 == 1;
                        wt *= if up { frac[i] } else { 1.0 - frac[i] };
                        at[i] = base[i] as i64 + up as i64;
                    }
                    if wt != 0.0 {
                        *acc.entry(at).or_insert(0.0) += wt;
                    }
                }
            }
            let mut v: Vec<([i64; 3], f64)> = acc.into_iter().collect();
            v.sort_by(|a, b| a.0.cmp(&b.0));
            v
        })
        .collect();
    DepositTable { stencils }
}

/// Loss kernel `b_total · K(d) · h³` correlated against `g`, as an FFT multiplier.
pub(crate) struct LossKernel {
    fft: CubeFft,
    spectrum: Vec<Complex64>,
}

impl LossKernel {
    pub fn new(n: usize, h: f64, gamma: f64, b_total: f64) -> Self {
        let fft = CubeFft::new(n);
        let k = speed_factors(n, h, gamma);
        // Place K(d) at natural FFT index of -d so that the convolution reads g(v + d).
        let mut buf = vec![Complex64::default(); n * n * n];
        for (d, kd) in offsets(n).iter().zip(k) {
            let idx: Vec<usize> = d.iter().map(|c| (-c).rem_euclid(n as i64) as usize).collect();
            buf[(idx[0] * n + idx[1]) * n + idx[2]] = Complex64::new(kd * b_total * h.powi(3), 0.0);
        }
        fft.forward(&mut buf);
        Self { fft, spectrum: buf }
    }

    pub fn apply(&self, g: &[f64]) -> Vec<f64> {
        let n3 = g.len();
        let mut buf: Vec<Complex64> = g.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        for (z, s) in buf.iter_mut().zip(&self.spectrum) {
            *z *= s;
        }
        self.fft.inverse(&mut buf);
        buf.iter().map(|z| z.re / n3 as f64).collect()
    }
}
