//! Seeded test-function families.  Every family member is a finite sum of
//! Gaussian atoms `a · X(x) · exp(−|v − c|²/(2σ²)) · e^{iκ·v}`, which keeps the
//! velocity Fourier transform in closed form.

use crate::collision::SpectralSampler;
use crate::grid::{DistributionField, PhaseGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    GaussianMixtures,
    ModulatedBumps,
    BandLimitedNoise,
}

/// Spatial factor of an atom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum XProfile {
    Uniform,
    /// `e^{i k·x}`.
    Mode { k: [f64; 3] },
    /// `exp(−|x − c|²/(2w²))`.
    Bump { center: [f64; 3], width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub amp: Complex64,
    pub center: [f64; 3],
    pub width: f64,
    pub kappa: [f64; 3],
    pub x: XProfile,
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Atom {
    pub fn velocity(&self, v: [f64; 3]) -> Complex64 {
        let d = [v[0] - self.center[0], v[1] - self.center[1], v[2] - self.center[2]];
        let env = (-dot(d, d) / (2.0 * self.width * self.width)).exp();
        self.amp * env * Complex64::from_polar(1.0, dot(self.kappa, v))
    }

    pub fn spatial(&self, x: [f64; 3]) -> Complex64 {
        match self.x {
            XProfile::Uniform => Complex64::new(1.0, 0.0),
            XProfile::Mode { k } => Complex64::from_polar(1.0, dot(k, x)),
            XProfile::Bump { center, width } => {
                let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
                Complex64::new((-dot(d, d) / (2.0 * width * width)).exp(), 0.0)
            }
        }
    }

    /// `(2π)^{−3/2} ∫ F(v) e^{iv·ξ} dv = a σ³ e^{ic·(ξ+κ)} e^{−σ²|ξ+κ|²/2}`.
    pub fn xi(&self, xi: [f64; 3]) -> Complex64 {
        let q = [xi[0] + self.kappa[0], xi[1] + self.kappa[1], xi[2] + self.kappa[2]];
        let s = self.width;
        self.amp * s.powi(3) * (-s * s * dot(q, q) / 2.0).exp() * Complex64::from_polar(1.0, dot(self.center, q))
    }

    /// Free streaming of a single x-mode: `e^{ik·x} F(v) ↦ e^{ik·x} F(v) e^{−itk·v}`.
    pub fn streamed(&self, t: f64) -> Atom {
        match self.x {
            XProfile::Mode { k } => Atom {
                kappa: [self.kappa[0] - t * k[0], self.kappa[1] - t * k[1], self.kappa[2] - t * k[2]],
                ..*self
            },
            XProfile::Uniform => *self,
            XProfile::Bump { .. } => panic!("streamed() needs a plane-wave or uniform atom"),
        }
    }

    /// `|ξ|` beyond which the transform is below `e^{−40}` of its peak.
    pub fn xi_radius(&self) -> f64 {
        dot(self.kappa, self.kappa).sqrt() + 80f64.sqrt() / self.width
    }

    /// `|v|` beyond which the envelope is below `e^{−40}` of its peak.
    pub fn v_radius(&self) -> f64 {
        dot(self.center, self.center).sqrt() + 80f64.sqrt() * self.width
    }
}

/// A finite sum of atoms; real whenever the atom list is closed under conjugation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub atoms: Vec<Atom>,
}

impl TestFunction {
    pub fn eval(&self, x: [f64; 3], v: [f64; 3]) -> Complex64 {
        self.atoms.iter().map(|a| a.spatial(x) * a.velocity(v)).sum()
    }

    pub fn field(&self, grid: &PhaseGrid) -> DistributionField {
        DistributionField::from_fn(grid, |x, v| self.eval(x, v).re)
    }

    /// Velocity profile with the spatial factor dropped.
    pub fn velocity_block(&self, grid: &PhaseGrid) -> Vec<Complex64> {
        (0..grid.nv3()).map(|i| self.atoms.iter().map(|a| a.velocity(grid.v_node(i))).sum()).collect()
    }

    pub fn xi_block(&self, grid: &PhaseGrid) -> Vec<Complex64> {
        (0..grid.nv3()).map(|i| self.xi(grid.xi_node(i))).collect()
    }

    pub fn xi(&self, xi: [f64; 3]) -> Complex64 {
        self.atoms.iter().map(|a| a.xi(xi)).sum()
    }

    pub fn scaled(&self, c: f64) -> TestFunction {
        TestFunction { atoms: self.atoms.iter().map(|a| Atom { amp: a.amp * c, ..*a }).collect() }
    }

    /// Velocity dilation `F(v) ↦ F(μ v)` of every atom.
    pub fn dilated_v(&self, mu: f64) -> TestFunction {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                center: a.center.map(|c| c / mu),
                width: a.width / mu,
                kappa: a.kappa.map(|k| k * mu),
                ..*a
            })
            .collect();
        TestFunction { atoms }
    }

    pub fn v_radius(&self) -> f64 {
        self.atoms.iter().map(Atom::v_radius).fold(0.0, f64::max)
    }
}

/// Closed-form ξ-side sampler over a list of atoms.
pub struct AtomSampler {
    pub atoms: Vec<Atom>,
}

impl SpectralSampler for AtomSampler {
    fn eval(&self, xi: [f64; 3]) -> Complex64 {
        self.atoms.iter().map(|a| a.xi(xi)).sum()
    }

    fn support_radius(&self) -> f64 {
        self.atoms.iter().map(Atom::xi_radius).fold(0.0, f64::max)
    }
}

/// Parameter ranges for a family, in velocity units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub amplitude: (f64, f64),
    pub width: (f64, f64),
    pub count: (usize, usize),
    /// Atom centers are drawn from `[−spread, spread]³`.
    pub spread: f64,
    /// Largest modulation `|κ|` for modulated bumps and noise.
    pub max_modulation: f64,
    pub seed: u64,
}

impl TestFamily {
    pub fn new(kind: FamilyKind, seed: u64) -> Self {
        Self {
            kind,
            amplitude: (0.3, 1.0),
            width: (0.6, 0.9),
            count: (1, 3),
            spread: 0.5,
            max_modulation: 1.0,
            seed,
        }
    }

    pub fn descriptor(&self) -> String {
        format!(
            "{:?} amp=[{}, {}] width=[{}, {}] count=[{}, {}] spread={} kappa<={} seed={}",
            self.kind,
            self.amplitude.0,
            self.amplitude.1,
            self.width.0,
            self.width.1,
            self.count.0,
            self.count.1,
            self.spread,
            self.max_modulation,
            self.seed
        )
    }

    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    /// Sample `index`, velocity dependence only (`X ≡ 1`).
    pub fn sample(&self, index: u64) -> TestFunction {
        let mut rng = self.rng(index);
        self.draw(&mut rng, XProfile::Uniform)
    }

    /// Sample `index` with the spatial factor `x`, conjugate partners included
    /// so the function is real.
    pub fn sample_with(&self, index: u64, x: XProfile) -> TestFunction {
        let mut rng = self.rng(index);
        self.draw(&mut rng, x)
    }

    fn uniform(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
        if r.1 > r.0 {
            rng.random_range(r.0..r.1)
        } else {
            r.0
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, x: XProfile) -> TestFunction {
        let count = if self.count.1 > self.count.0 { rng.random_range(self.count.0..=self.count.1) } else { self.count.0 };
        let mut atoms = Vec::new();
        for _ in 0..count {
            let amp = Self::uniform(rng, self.amplitude);
            let width = Self::uniform(rng, self.width);
            let center: [f64; 3] = std::array::from_fn(|_| Self::uniform(rng, (-self.spread, self.spread)));
            let (kappa, phase) = match self.kind {
                FamilyKind::GaussianMixtures => ([0.0; 3], 0.0),
                FamilyKind::ModulatedBumps => {
                    let k: [f64; 3] = std::array::from_fn(|_| Self::uniform(rng, (-1.0, 1.0)));
                    let n = dot(k, k).sqrt().max(1e-12);
                    let m = Self::uniform(rng, (0.0, self.max_modulation));
                    (k.map(|c| c / n * m), Self::uniform(rng, (0.0, std::f64::consts::TAU)))
                }
                FamilyKind::BandLimitedNoise => {
                    let k: [f64; 3] = std::array::from_fn(|_| Self::uniform(rng, (-self.max_modulation, self.max_modulation)));
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    (k, if sign > 0.0 { 0.0 } else { std::f64::consts::PI } + Self::uniform(rng, (0.0, 0.3)))
                }
            };
            let a = Atom { amp: Complex64::from_polar(amp, phase), center, width, kappa, x };
            push_real(&mut atoms, a);
        }
        TestFunction { atoms }
    }
}

/// Pushes `a` and, unless it is already real, its conjugate partner, each with half weight.
pub fn push_real(atoms: &mut Vec<Atom>, a: Atom) {
    let k_zero = match a.x {
        XProfile::Mode { k } => k == [0.0; 3],
        _ => true,
    };
    if a.kappa == [0.0; 3] && a.amp.im == 0.0 && k_zero {
        atoms.push(a);
        return;
    }
    let half = Atom { amp: a.amp * 0.5, ..a };
    let conj_x = match a.x {
        XProfile::Mode { k } => XProfile::Mode { k: k.map(|c| -c) },
        other => other,
    };
    atoms.push(half);
    atoms.push(Atom { amp: half.amp.conj(), kappa: a.kappa.map(|c| -c), x: conj_x, ..a });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VelocityTransform;

    #[test]
    fn samples_are_real_and_reproducible() {
        for kind in [FamilyKind::GaussianMixtures, FamilyKind::ModulatedBumps, FamilyKind::BandLimitedNoise] {
            let fam = TestFamily::new(kind, 7);
            let a = fam.sample_with(3, XProfile::Mode { k: [1.0, 0.0, 0.5] });
            assert_eq!(a, fam.sample_with(3, XProfile::Mode { k: [1.0, 0.0, 0.5] }));
            for (x, v) in [([0.1, 0.2, 0.3], [0.5, -0.4, 0.9]), ([-1.0, 0.0, 2.0], [0.0, 0.0, 0.0])] {
                assert!(a.eval(x, v).im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn closed_form_transform_matches_grid_transform() {
        let grid = PhaseGrid::new(1.0, 4, 6.0, 32).unwrap();
        let f = TestFamily::new(FamilyKind::ModulatedBumps, 11).sample(0);
        let mut block = f.velocity_block(&grid);
        VelocityTransform::new(&grid).to_xi(&mut block);
        let exact = f.xi_block(&grid);
        let err = block.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-7 * scale, "{err}");
    }

    #[test]
    fn streaming_shifts_modulation() {
        let a = Atom {
            amp: Complex64::new(1.0, 0.0),
            center: [0.0; 3],
            width: 1.0,
            kappa: [0.0; 3],
            x: XProfile::Mode { k: [2.0, 0.0, 0.0] },
        };
        let s = a.streamed(0.5);
        let (x, v) = ([0.3, 0.0, 0.0], [0.7, 0.1, 0.0]);
        let direct = a.spatial([x[0] - 0.5 * v[0], x[1] - 0.5 * v[1], x[2] - 0.5 * v[2]]) * a.velocity(v);
        assert!((s.spatial(x) * s.velocity(v) - direct).norm() < 1e-15);
    }
}
