//! Wall-clock table for the gain evaluators on one grid.

use boltzlab::collision::{gain_bobylev, CollisionKernel, CollisionOperator, GainScheme, SphereRule};
use boltzlab::{fourier_v, DistributionField, LabError, PhaseGrid};
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub n_v: usize,
    pub rule: String,
    /// First call, including any table construction.
    pub first_s: f64,
    /// Mean of the repeated calls.
    pub repeat_s: f64,
}

fn time<T>(reps: usize, mut f: impl FnMut() -> Result<T, LabError>) -> Result<(f64, f64), LabError> {
    let t = Instant::now();
    f()?;
    let first = t.elapsed().as_secs_f64();
    let t = Instant::now();
    for _ in 0..reps {
        f()?;
    }
    Ok((first, t.elapsed().as_secs_f64() / reps.max(1) as f64))
}

/// Direct (spectral weak form and monotone cloud-in-cell) against the Fourier-side gain.
pub fn gain_timings(nv: usize, rule: (usize, usize), reps: usize) -> Result<Vec<BenchRow>, LabError> {
    let grid = PhaseGrid::new(1.0, 4, 4.0, nv)?;
    let f = DistributionField::from_fn(&grid, |x, v| {
        (1.0 + 0.3 * (std::f64::consts::PI * x[0]).cos()) * (-v.iter().map(|a| a * a).sum::<f64>()).exp()
    });
    let k = CollisionKernel::abs_cos(0.0)?;
    let r = SphereRule::product(rule.0, rule.1)?;
    let label = format!("{}x{}", rule.0, rule.1);
    let mut rows = Vec::new();
    for (name, scheme) in [("direct-spectral", GainScheme::Spectral), ("direct-monotone-cic", GainScheme::MonotoneCic)] {
        let op = CollisionOperator::new(&grid, &k, &r, scheme);
        let (first_s, repeat_s) = time(reps, || op.gain(&f, &f))?;
        rows.push(BenchRow { method: name.into(), n_v: nv, rule: label.clone(), first_s, repeat_s });
    }
    let ft = fourier_v(&f);
    let (first_s, repeat_s) = time(reps, || gain_bobylev(&ft, &ft, &k, &r))?;
    rows.push(BenchRow { method: "fourier-bobylev".into(), n_v: nv, rule: label, first_s, repeat_s });
    Ok(rows)
}

pub fn format_table(rows: &[BenchRow]) -> String {
    let mut s = format!("{:<22} {:>4} {:>7} {:>12} {:>12}\n", "method", "N_v", "rule", "first [s]", "repeat [s]");
    for r in rows {
        s.push_str(&format!("{:<22} {:>4} {:>7} {:>12.4e} {:>12.4e}\n", r.method, r.n_v, r.rule, r.first_s, r.repeat_s));
    }
    s
}
