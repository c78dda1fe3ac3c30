//! Gain term of plane-wave data `Σ e^{ik·x} F_k(v)`, one x-mode pair at a time:
//! `Q⁺(f, g) = Σ_{k, k'} e^{i(k+k')·x} Q⁺(F_k, G_{k'})`.

use super::family::{Atom, AtomSampler, TestFunction, XProfile};
use crate::collision::{gain_bobylev_block, BobylevQuadrature, CollisionKernel, SphereRule};
use crate::error::{LabError, Result};
use crate::grid::{PhaseGrid, VelocityTransform, WeightKind};
use num_complex::Complex64;

/// Groups atoms by x-mode.
pub fn modes(f: &TestFunction) -> Result<Vec<([f64; 3], Vec<Atom>)>> {
    let mut out: Vec<([f64; 3], Vec<Atom>)> = Vec::new();
    for a in &f.atoms {
        let k = match a.x {
            XProfile::Mode { k } => k,
            XProfile::Uniform => [0.0; 3],
            XProfile::Bump { .. } => return Err(LabError::Usage("modal evaluation needs plane-wave atoms".into())),
        };
        match out.iter_mut().find(|(q, _)| *q == k) {
            Some((_, v)) => v.push(*a),
            None => out.push((k, vec![*a])),
        }
    }
    Ok(out)
}

pub fn streamed(f: &TestFunction, t: f64) -> TestFunction {
    TestFunction { atoms: f.atoms.iter().map(|a| a.streamed(t)).collect() }
}

/// Velocity-side blocks of `Q⁺(f, g)` keyed by output mode.
pub fn modal_gain(
    f: &TestFunction,
    g: &TestFunction,
    grid: &PhaseGrid,
    kernel: &CollisionKernel,
    rule: &SphereRule,
) -> Result<Vec<([f64; 3], Vec<Complex64>)>> {
    let (fm, gm) = (modes(f)?, modes(g)?);
    let tr = VelocityTransform::new(grid);
    let mut out: Vec<([f64; 3], Vec<Complex64>)> = Vec::new();
    for (k, fa) in &fm {
        for (q, ga) in &gm {
            let key = [k[0] + q[0], k[1] + q[1], k[2] + q[2]];
            let sf = AtomSampler { atoms: fa.clone() };
            let sg = AtomSampler { atoms: ga.clone() };
            let mut block = gain_bobylev_block(grid, &sf, &sg, kernel, rule, BobylevQuadrature::default())?;
            tr.to_v(&mut block);
            match out.iter_mut().find(|(m, _)| m.iter().zip(&key).all(|(a, b)| (a - b).abs() < 1e-12)) {
                Some((_, acc)) => acc.iter_mut().zip(&block).for_each(|(a, b)| *a += b),
                None => out.push((key, block)),
            }
        }
    }
    Ok(out)
}

/// `‖w_x(∇_x) w_v(v) h‖_{L²_{x,v}}` for modal `h`; the x-torus volume is `(2L_x)³`.
pub fn modal_norm(
    blocks: &[([f64; 3], Vec<Complex64>)],
    grid: &PhaseGrid,
    x_weight: impl Fn([f64; 3]) -> f64,
    v_weight: (f64, WeightKind),
) -> f64 {
    let vol = (2.0 * grid.lx()).powi(3);
    let wv: Vec<f64> = (0..grid.nv3()).map(|i| velocity_weight(grid.v_node(i), v_weight)).collect();
    let mut acc = 0.0;
    for (k, b) in blocks {
        let wx = x_weight(*k);
        let s: f64 = b.iter().zip(&wv).map(|(z, w)| (z * w).norm_sqr()).sum();
        acc += wx * wx * s;
    }
    (acc * vol * grid.cell_v()).sqrt()
}

pub fn velocity_weight(v: [f64; 3], (r, kind): (f64, WeightKind)) -> f64 {
    let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    match kind {
        WeightKind::Bracket => (1.0 + v2).powf(r / 2.0),
        WeightKind::Homogeneous => {
            if v2 == 0.0 {
                if r > 0.0 {
                    0.0
                } else if r == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                v2.powf(r / 2.0)
            }
        }
    }
}

/// Velocity blocks of `f` itself, keyed by mode.
pub fn modal_blocks(f: &TestFunction, grid: &PhaseGrid) -> Result<Vec<([f64; 3], Vec<Complex64>)>> {
    Ok(modes(f)?
        .into_iter()
        .map(|(k, atoms)| {
            let b = (0..grid.nv3()).map(|i| atoms.iter().map(|a| a.velocity(grid.v_node(i))).sum()).collect();
            (k, b)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{CollisionOperator, GainScheme};
    use crate::estimates::family::push_real;

    #[test]
    fn modal_gain_matches_grid_gain() {
        let grid = PhaseGrid::new(1.0, 4, 4.0, 16).unwrap();
        let k = [std::f64::consts::PI, 0.0, 0.0];
        let mut atoms = Vec::new();
        push_real(&mut atoms, Atom { amp: Complex64::new(1.0, 0.0), center: [0.2, 0.0, -0.1], width: 0.7, kappa: [0.0; 3], x: XProfile::Mode { k } });
        let f = TestFunction { atoms };
        let g = TestFunction {
            atoms: vec![Atom { amp: Complex64::new(0.8, 0.0), center: [-0.2, 0.1, 0.0], width: 0.65, kappa: [0.0; 3], x: XProfile::Uniform }],
        };
        let kernel = CollisionKernel::abs_cos(0.0).unwrap();
        let rule = SphereRule::product(16, 32).unwrap();
        let blocks = modal_gain(&f, &g, &grid, &kernel, &rule).unwrap();
        let modal = modal_norm(&blocks, &grid, |_| 1.0, (0.0, WeightKind::Bracket));
        let op = CollisionOperator::new(&grid, &kernel, &SphereRule::product(16, 32).unwrap(), GainScheme::Spectral);
        let (ff, gf) = (f.field(&grid), g.field(&grid));
        let q = op.gain(&ff, &gf).unwrap();
        let dense = (q.values().iter().map(|v| v * v).sum::<f64>() * grid.cell_x() * grid.cell_v()).sqrt();
        assert!((modal / dense - 1.0).abs() < 1e-2, "{modal} {dense}");
    }
}
