//! `‖⟨∇⟩^s(fg)‖_{L^r} ≤ C(‖⟨∇⟩^s f‖_{L^{p₁}}‖g‖_{L^{q₁}} + ‖f‖_{L^{p₂}}‖⟨∇⟩^s g‖_{L^{q₂}})`
//! for spatial fields on the torus `[−L, L)³`.

use super::family::TestFamily;
use super::report::{ratio, EstimateReport, SampleRatio};
use crate::error::{LabError, Result};
use crate::fft::{signed_index, CubeFft};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Exponents `r` and the two Hölder splittings `(p₁, q₁)`, `(p₂, q₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeibnizExponents {
    pub r: f64,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
}

impl Default for LeibnizExponents {
    fn default() -> Self {
        Self { r: 2.0, p1: 3.0, q1: 6.0, p2: 6.0, q2: 3.0 }
    }
}

impl LeibnizExponents {
    pub fn validate(&self) -> Result<()> {
        let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
        let ok = [self.r, self.p1, self.q1, self.p2, self.q2].iter().all(|p| *p >= 1.0)
            && (inv(self.p1) + inv(self.q1) - inv(self.r)).abs() < 1e-12
            && (inv(self.p2) + inv(self.q2) - inv(self.r)).abs() < 1e-12;
        if ok {
            Ok(())
        } else {
            Err(LabError::Usage(format!("exponents {self:?} are not Hölder compatible")))
        }
    }
}

/// Cubic periodic grid with `n³` nodes on `[−L, L)³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XTorus {
    pub l: f64,
    pub n: usize,
}

impl XTorus {
    fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }
    fn node(&self, i: usize) -> [f64; 3] {
        let n = self.n;
        [i / (n * n), (i / n) % n, i % n].map(|j| -self.l + j as f64 * self.h())
    }
}

/// Sum of periodized Gaussian bumps `a e^{−|x−c|²/2w²} cos(κ·x + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialBumps {
    pub bumps: Vec<(f64, [f64; 3], f64, [f64; 3], f64)>,
}

impl SpatialBumps {
    pub fn constant(c: f64) -> Self {
        Self { bumps: vec![(c, [0.0; 3], f64::INFINITY, [0.0; 3], 0.0)] }
    }

    pub fn eval(&self, t: &XTorus, x: [f64; 3]) -> f64 {
        let period = 2.0 * t.l;
        self.bumps
            .iter()
            .map(|&(a, c, w, k, ph)| {
                let mut d2 = 0.0;
                for j in 0..3 {
                    let d = (x[j] - c[j]).rem_euclid(period);
                    let d = d.min(period - d);
                    d2 += d * d;
                }
                let env = if w.is_infinite() { 1.0 } else { (-d2 / (2.0 * w * w)).exp() };
                a * env * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + ph).cos()
            })
            .sum()
    }

    pub fn nodes(&self, t: &XTorus) -> Vec<f64> {
        (0..t.n.pow(3)).map(|i| self.eval(t, t.node(i))).collect()
    }
}

/// Bumps for sample `index`: widths, amplitudes and counts follow the family,
/// centers fill `[−L/2, L/2]³`, modulations reach `max_modulation`.
pub fn spatial_sample(family: &TestFamily, torus: &XTorus, index: u64) -> SpatialBumps {
    let mut rng = family.rng(index);
    let count = rng.random_range(family.count.0..=family.count.1.max(family.count.0)).max(1);
    let mut u = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..hi) } else { lo };
    let bumps = (0..count)
        .map(|_| {
            let a = u(family.amplitude.0, family.amplitude.1);
            let c = [0; 3].map(|_| u(-0.5 * torus.l, 0.5 * torus.l));
            let w = u(family.width.0, family.width.1);
            let k = [0; 3].map(|_| u(-family.max_modulation, family.max_modulation));
            (a, c, w, k, u(0.0, 2.0 * PI))
        })
        .collect();
    SpatialBumps { bumps }
}

/// `⟨∇⟩^s u` by the multiplier `(1 + |k|²)^{s/2}`.
pub fn bessel_potential(t: &XTorus, u: &[f64], s: f64) -> Vec<f64> {
    let n = t.n;
    let fft = CubeFft::new(n);
    let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.forward(&mut buf);
    let dk = PI / t.l;
    for (i, z) in buf.iter_mut().enumerate() {
        let k = [i / (n * n), (i / n) % n, i % n].map(|m| signed_index(m, n) as f64 * dk);
        *z *= (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).powf(s / 2.0);
    }
    fft.inverse(&mut buf);
    let scale = (n * n * n) as f64;
    buf.iter().map(|z| z.re / scale).collect()
}

fn lp(u: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return u.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    (u.iter().map(|x| x.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}

/// `(lhs, rhs)` of the rule for one pair.
pub fn leibniz_sides(t: &XTorus, f: &SpatialBumps, g: &SpatialBumps, s: f64, e: LeibnizExponents) -> (f64, f64) {
    let cell = t.h().powi(3);
    let (fv, gv) = (f.nodes(t), g.nodes(t));
    let prod: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| a * b).collect();
    let lhs = lp(&bessel_potential(t, &prod, s), e.r, cell);
    let rhs = lp(&bessel_potential(t, &fv, s), e.p1, cell) * lp(&gv, e.q1, cell)
        + lp(&fv, e.p2, cell) * lp(&bessel_potential(t, &gv, s), e.q2, cell);
    (lhs, rhs)
}

pub fn check_fractional_leibniz(
    s: f64,
    exponents: LeibnizExponents,
    family: &TestFamily,
    n_samples: usize,
    torus: XTorus,
) -> Result<EstimateReport> {
    exponents.validate()?;
    if !(s >= 0.0) {
        return Err(LabError::Usage(format!("regularity s = {s} must be non-negative")));
    }
    let run = |t: &XTorus| -> Vec<SampleRatio> {
        (0..n_samples as u64)
            .map(|i| {
                let f = spatial_sample(family, t, 2 * i);
                let g = spatial_sample(family, t, 2 * i + 1);
                let (lhs, rhs) = leibniz_sides(t, &f, &g, s, exponents);
                ratio(i, lhs, rhs)
            })
            .collect()
    };
    let base = run(&torus);
    let fine = run(&XTorus { n: 2 * torus.n, ..torus });
    Ok(EstimateReport::new("fractional-leibniz", family.descriptor(), family.seed, format!("L={} N={}", torus.l, torus.n), base)
        .with_refinement(fine, 1.5)
        .note(format!("s = {s}, exponents {exponents:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::family::FamilyKind;

    const T: XTorus = XTorus { l: PI, n: 16 };

    #[test]
    fn incompatible_exponents_are_rejected() {
        let e = LeibnizExponents { q1: 4.0, ..Default::default() };
        assert!(matches!(e.validate(), Err(LabError::Usage(_))));
        assert!(LeibnizExponents::default().validate().is_ok());
    }

    #[test]
    fn constant_factor_and_zero_regularity_stay_below_one() {
        let fam = TestFamily::new(FamilyKind::ModulatedBumps, 2);
        for i in 0..4 {
            let f = spatial_sample(&fam, &T, i);
            let (lhs, rhs) = leibniz_sides(&T, &f, &SpatialBumps::constant(1.0), 1.25, LeibnizExponents::default());
            assert!(lhs / rhs <= 1.0 + 1e-8);
            let g = spatial_sample(&fam, &T, i + 10);
            let (lhs, rhs) = leibniz_sides(&T, &f, &g, 0.0, LeibnizExponents::default());
            assert!(lhs / rhs <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn zero_multiplier_is_identity() {
        let f = spatial_sample(&TestFamily::new(FamilyKind::GaussianMixtures, 1), &T, 0).nodes(&T);
        let g = bessel_potential(&T, &f, 0.0);
        assert!(f.iter().zip(&g).all(|(a, b)| (a - b).abs() < 1e-13));
    }
}
