//! Quadrature on the unit sphere and the elastic post-collision map.

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
    (x.iter().map(|t| m + h * t).collect(), w.iter().map(|v| v * h).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereRuleSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for SphereRuleSpec {
    fn default() -> Self {
        Self { n_theta: 16, n_phi: 32 }
    }
}

/// Product rule: Gauss–Legendre in `cos θ` on each hemisphere times the uniform azimuthal rule.
///
/// Splitting at the equator keeps the rule exact for `|cos θ|` times polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereRule {
    spec: SphereRuleSpec,
    cos: Vec<f64>,
    cos_w: Vec<f64>,
    nodes: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl SphereRule {
    pub fn product(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_theta % 2 != 0 || n_phi < 1 {
            return Err(LabError::Usage(format!("sphere rule {n_theta}x{n_phi}: n_theta must be even and >= 2")));
        }
        let (x, w) = gauss_legendre_on(n_theta / 2, 0.0, 1.0);
        let mut cos = Vec::with_capacity(n_theta);
        let mut cos_w = Vec::with_capacity(n_theta);
        for (c, wc) in x.iter().zip(&w).rev() {
            cos.push(-c);
            cos_w.push(*wc);
        }
        cos.extend_from_slice(&x);
        cos_w.extend_from_slice(&w);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, wc) in cos.iter().zip(&cos_w) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..n_phi {
                let p = j as f64 * dphi;
                nodes.push([s * p.cos(), s * p.sin(), *c]);
                weights.push(wc * dphi);
            }
        }
        Ok(Self { spec: SphereRuleSpec { n_theta, n_phi }, cos, cos_w, nodes, weights })
    }

    pub fn from_spec(spec: SphereRuleSpec) -> Result<Self> {
        Self::product(spec.n_theta, spec.n_phi)
    }

    pub fn spec(&self) -> SphereRuleSpec {
        self.spec
    }
    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(*n)).sum()
    }

    /// Nodes `(cos θ, weight, azimuth)` on the upper hemisphere only.
    pub(crate) fn upper_hemisphere(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let dphi = 2.0 * PI / self.spec.n_phi as f64;
        let half = self.cos.len() / 2;
        self.cos[half..].iter().zip(&self.cos_w[half..]).flat_map(move |(&c, &wc)| {
            (0..self.spec.n_phi).map(move |j| (c, wc * dphi, j as f64 * dphi))
        })
    }

    /// The same rule with its pole turned onto `axis`.
    pub fn aligned(&self, axis: [f64; 3]) -> Vec<[f64; 3]> {
        let (e1, e2, e3) = frame(axis);
        self.nodes
            .iter()
            .map(|n| {
                let mut o = [0.0; 3];
                for i in 0..3 {
                    o[i] = n[0] * e1[i] + n[1] * e2[i] + n[2] * e3[i];
                }
                o
            })
            .collect()
    }
}

/// Right-handed orthonormal frame `(e1, e2, axis/|axis|)`.
pub(crate) fn frame(axis: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let n = norm(axis);
    let e3 = [axis[0] / n, axis[1] / n, axis[2] / n];
    let a = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let c = cross(e3, a);
    let cn = norm(c);
    let e1 = [c[0] / cn, c[1] / cn, c[2] / cn];
    let e2 = cross(e3, e1);
    (e1, e2, e3)
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// `u* = u + (ω·(v−u))ω`, `v* = v − (ω·(v−u))ω`.
pub fn post_collision(u: [f64; 3], v: [f64; 3], omega: [f64; 3]) -> Result<([f64; 3], [f64; 3])> {
    let n = norm(omega);
    if (n - 1.0).abs() > 1e-12 {
        return Err(LabError::Domain(format!("|ω| = {n} is not 1")));
    }
    let c = dot(omega, [v[0] - u[0], v[1] - u[1], v[2] - u[2]]);
    let us = [u[0] + c * omega[0], u[1] + c * omega[1], u[2] + c * omega[2]];
    let vs = [v[0] - c * omega[0], v[1] - c * omega[1], v[2] - c * omega[2]];
    Ok((us, vs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for k in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn rule_weights_and_nodes() {
        let r = SphereRule::product(16, 32).unwrap();
        let total: f64 = r.weights().iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-10);
        assert!(r.nodes().iter().all(|n| (norm(*n) - 1.0).abs() < 1e-14));
        let abs_cos = r.integrate(|n| n[2].abs());
        assert!((abs_cos - 2.0 * PI).abs() < 1e-12);
        assert!(SphereRule::product(5, 8).is_err());
    }

    #[test]
    fn aligned_rule_moves_pole() {
        let r = SphereRule::product(4, 8).unwrap();
        let axis = [1.0, 2.0, -0.5];
        let a = r.aligned(axis);
        let ah = {
            let n = norm(axis);
            [axis[0] / n, axis[1] / n, axis[2] / n]
        };
        for (n, m) in r.nodes().iter().zip(&a) {
            assert!((n[2] - dot(*m, ah)).abs() < 1e-14);
        }
    }

    #[test]
    fn head_on_swap_and_grazing() {
        let (us, vs) = post_collision([1.0, 0.0, 0.0], [0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(us, [0.0; 3]);
        assert_eq!(vs, [1.0, 0.0, 0.0]);
        let (us, vs) = post_collision([0.0; 3], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!((us, vs), ([0.0; 3], [0.0, 1.0, 0.0]));
        assert!(post_collision([0.0; 3], [1.0; 3], [1.0, 1.0, 0.0]).is_err());
    }
}
