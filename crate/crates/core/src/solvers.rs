//! Picard iteration for the gain-only equation, the Kaniel–Shinbrot monotone
//! sandwich for the full equation, and the uniqueness residual `W`.

use crate::collision::CollisionOperator;
use crate::error::{LabError, Result};
use crate::grid::{weighted_norm, weighted_norm_with, DistributionField, NormMix, Weights};
use crate::transport::{free_stream, Quadrature, TimeGrid, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub iter_tol: f64,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_end: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Relative non-negativity slack `ε_nn`.
    #[serde(default = "default_eps")]
    pub eps_nn: f64,
}

fn default_eta() -> f64 {
    0.1
}
fn default_eps() -> f64 {
    1e-12
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 60, iter_tol: 1e-8, dt: 0.25, t_end: 2.0, eta: 0.1, eps_nn: 1e-12 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iter_tol > 0.0 && self.eps_nn > 0.0) {
            return Err(LabError::Domain("tolerances must be positive".into()));
        }
        if !(self.t_end > 0.0) {
            return Err(LabError::Domain(format!("T = {} must be positive", self.t_end)));
        }
        if self.max_iters == 0 {
            return Err(LabError::Domain("max_iters must be at least 1".into()));
        }
        self.time_grid().map(|_| ())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.t_end, self.dt, Quadrature::Trapezoid)
    }
}

/// Fields `S(t_j) f0` at the stored nodes.
pub fn free_trajectory(f0: &DistributionField, tg: &TimeGrid) -> Result<Trajectory> {
    let t = tg.nodes();
    let fields = t.iter().map(|s| free_stream(f0, s - tg.t0)).collect();
    Trajectory::new(t, fields)
}

/// `∫_{t0}^{t_n} S(t_n − τ) q(τ) dτ` at every node by the cumulative trapezoid rule.
pub fn duhamel_cumulative(q: &[DistributionField], tg: &TimeGrid) -> Result<Vec<DistributionField>> {
    let mut acc = DistributionField::zeros(q[0].grid());
    let mut out = vec![acc.clone()];
    let h = tg.dt / 2.0;
    for j in 1..q.len() {
        let mut next = free_stream(&acc, tg.dt);
        next.axpy(h, &free_stream(&q[j - 1], tg.dt))?;
        next.axpy(h, &q[j])?;
        out.push(next.clone());
        acc = next;
    }
    Ok(out)
}

fn sup_l2(t: &Trajectory) -> f64 {
    t.fields().iter().map(|f| l2(f)).fold(0.0, f64::max)
}

fn l2(f: &DistributionField) -> f64 {
    let g = f.grid();
    (f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_x() * g.cell_v()).sqrt()
}

fn sup_l2_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    a.fields().iter().zip(b.fields()).map(|(x, y)| l2(&x.sub(y).expect("same grid"))).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct PicardReport {
    pub trajectory: Trajectory,
    pub iterations: usize,
    pub converged: bool,
    /// Relative successive differences `‖f_{n+1} − f_n‖ / ‖f_{n+1}‖`.
    pub differences: Vec<f64>,
    /// Ratios of successive differences.
    pub contraction: Vec<f64>,
    pub critical_norm: f64,
    pub eta_exceeded: bool,
    /// Worst `f_n − f_{n+1}` over nodes, relative to `max|f|`; ≤ 0 means monotone.
    pub monotone_violation: f64,
    pub warnings: Vec<String>,
}

impl PicardReport {
    pub fn contraction_factor(&self) -> f64 {
        self.contraction.iter().copied().fold(0.0, f64::max)
    }
}

/// Fixed point of `f ↦ S(t) f0 + ∫₀ᵗ S(t − τ) Q⁺(f, f)(τ) dτ`, iterated from `f ≡ 0`.
pub fn picard_gain_only(f0: &DistributionField, op: &CollisionOperator, cfg: &SolverConfig) -> Result<PicardReport> {
    cfg.validate()?;
    f0.certify_nonnegative(cfg.eps_nn)?;
    let tg = cfg.time_grid()?;
    let gamma = op.kernel().gamma();
    let critical_norm = weighted_norm(f0, 0.5, 0.5 + gamma, NormMix::L2)?;
    let mut warnings = Vec::new();
    let eta_exceeded = critical_norm > cfg.eta;
    if eta_exceeded {
        warnings.push(format!("critical norm {critical_norm:.3e} exceeds η = {}", cfg.eta));
    }
    warnings.extend(f0.truncation_warning());
    let free = free_trajectory(f0, &tg)?;
    let mut current = free.zeros_like();
    let mut differences = Vec::new();
    let mut contraction = Vec::new();
    let mut monotone_violation = f64::NEG_INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iters {
        iterations += 1;
        let next = picard_map(&free, &current, op, &tg)?;
        let scale = next.max_abs().max(f64::MIN_POSITIVE);
        for (a, b) in current.fields().iter().zip(next.fields()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                monotone_violation = monotone_violation.max((x - y) / scale);
            }
        }
        let norm = sup_l2(&next);
        let diff = sup_l2_diff(&next, &current);
        let rel = if norm == 0.0 { 0.0 } else { diff / norm };
        if let Some(prev) = differences.last() {
            if *prev > 0.0 {
                contraction.push(rel / prev);
            }
        }
        differences.push(rel);
        current = next;
        if !norm.is_finite() || norm > 1e100 {
            warnings.push("iterates blew up".into());
            break;
        }
        if rel <= cfg.iter_tol {
            converged = true;
            break;
        }
    }
    Ok(PicardReport {
        trajectory: current,
        iterations,
        converged,
        differences,
        contraction,
        critical_norm,
        eta_exceeded,
        monotone_violation: monotone_violation.max(0.0),
        warnings,
    })
}

fn picard_map(free: &Trajectory, f: &Trajectory, op: &CollisionOperator, tg: &TimeGrid) -> Result<Trajectory> {
    let q: Vec<DistributionField> = f.fields().iter().map(|x| op.gain(x, x)).collect::<Result<_>>()?;
    let acc = duhamel_cumulative(&q, tg)?;
    let fields = free.fields().iter().zip(acc).map(|(s, mut a)| {
        a.axpy(1.0, s).expect("same grid");
        a
    });
    Trajectory::new(free.times().to_vec(), fields.collect())
}

/// Solves `∂_t u + v·∇_x u + a u = src` along characteristics with an integrating factor.
///
/// In the pulled-back frame `U = S(−t) u`, `Ā = S(−t) a`, `s̄ = S(−t) src`, with
/// `I_n` the cumulative trapezoid integral of `Ā`:
/// `U_n = e^{−(I_n − I_{n−1})} (U_{n−1} + dt/2 s̄_{n−1}) + dt/2 s̄_n`.
/// Exact for constant `a`; reduces to the trapezoid Duhamel sum when `a ≡ 0`.
pub fn ks_linear_step(
    f0: &DistributionField,
    absorb: &Trajectory,
    src: &Trajectory,
    tg: &TimeGrid,
) -> Result<Trajectory> {
    let times = tg.nodes();
    if absorb.len() != times.len() || src.len() != times.len() {
        return Err(LabError::Usage("absorption and source must be stored on the time grid nodes".into()));
    }
    for a in absorb.fields() {
        if a.min() < 0.0 {
            return Err(LabError::Domain(format!("negative absorption {:e}", a.min())));
        }
    }
    let pull = |f: &DistributionField, t: f64| free_stream(f, -(t - tg.t0));
    let h = tg.dt / 2.0;
    let mut u = f0.clone();
    let mut out = vec![f0.clone()];
    let mut a_prev = pull(&absorb.fields()[0], times[0]);
    let mut s_prev = pull(&src.fields()[0], times[0]);
    for n in 1..times.len() {
        let a_n = pull(&absorb.fields()[n], times[n]);
        let s_n = pull(&src.fields()[n], times[n]);
        let vals: Vec<f64> = u
            .values()
            .iter()
            .zip(a_prev.values().iter().zip(a_n.values()))
            .zip(s_prev.values().iter().zip(s_n.values()))
            .map(|((uv, (ap, an)), (sp, sn))| (-(h * (ap + an))).exp() * (uv + h * sp) + h * sn)
            .collect();
        u = DistributionField::new(f0.grid().clone(), vals, times[n])?;
        out.push(free_stream(&u, times[n] - tg.t0));
        a_prev = a_n;
        s_prev = s_n;
    }
    Trajectory::new(times, out)
}

/// Kaniel–Shinbrot pair with iteration metadata.
#[derive(Debug, Clone)]
pub struct SandwichState {
    pub h: Trajectory,
    pub g: Trajectory,
    pub n: usize,
    /// `max|g − h|` per stored time, latest iterate.
    pub gap: Vec<f64>,
    /// `max_t max|g_n − h_n|` per iteration.
    pub gap_history: Vec<f64>,
    /// Worst signed ordering violation over all iterations, relative to `max g₁`.
    pub monotonicity_certificate: f64,
    /// Same quantity for `0 ≤ h₁ ≤ h₂ ≤ g₂ ≤ g₁`.
    pub beginning_violation: f64,
    /// `max|g₂ − g₁| / max g₁`.
    pub g2_defect: f64,
}

impl SandwichState {
    pub fn gap_ratios(&self) -> Vec<f64> {
        self.gap_history.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct KsReport {
    pub solution: Trajectory,
    pub state: SandwichState,
    pub converged: bool,
    pub picard: PicardReport,
    /// `max_t ‖f − S f0 − ∫ S Q(f, f)‖∞ / max f` with the trapezoid Duhamel sum.
    pub duhamel_residual: f64,
    /// Richardson estimate of the trapezoid error on the same integral, relative.
    pub tol_quad: f64,
    pub warnings: Vec<String>,
}

/// Worst of `a − b` over all nodes and times (positive means `a > b` somewhere).
fn excess(a: &Trajectory, b: &Trajectory) -> f64 {
    a.fields()
        .iter()
        .zip(b.fields())
        .flat_map(|(x, y)| x.values().iter().zip(y.values()).map(|(p, q)| p - q))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn absorption(op: &CollisionOperator, t: &Trajectory) -> Result<Trajectory> {
    let fields = t.fields().iter().map(|f| op.loss_rate(f)).collect::<Result<Vec<_>>>()?;
    Trajectory::new(t.times().to_vec(), fields)
}

fn gains(op: &CollisionOperator, t: &Trajectory) -> Result<Trajectory> {
    let fields = t.fields().iter().map(|f| op.gain(f, f)).collect::<Result<Vec<_>>>()?;
    Trajectory::new(t.times().to_vec(), fields)
}

/// The monotone sandwich started from `h₁ = 0`, `g₁ = ` the gain-only solution.
pub fn kaniel_shinbrot(f0: &DistributionField, op: &CollisionOperator, cfg: &SolverConfig) -> Result<KsReport> {
    let picard_cfg = SolverConfig { iter_tol: cfg.iter_tol.min(1e-14), ..*cfg };
    let picard = picard_gain_only(f0, op, &picard_cfg)?;
    let tg = cfg.time_grid()?;
    let mut warnings = picard.warnings.clone();
    if !picard.converged {
        warnings.push("gain-only iteration did not reach its tolerance".into());
    }
    let g1 = picard.trajectory.clone();
    let scale = g1.max_abs();
    let norm = |x: f64| if scale == 0.0 { x.max(0.0) } else { x / scale };
    let mut g = g1.clone();
    let mut h = g1.zeros_like();
    let mut gap_history = vec![g.max_abs_diff(&h)];
    let mut cert = norm(excess(&h, &g)).max(norm(-g.fields().iter().map(|f| f.min()).fold(f64::INFINITY, f64::min)));
    let mut beginning_violation = 0.0;
    let mut g2_defect = 0.0;
    let mut converged = gap_history[0] <= cfg.iter_tol * scale;
    let mut n = 1;
    let mut stagnant = 0;
    while !converged && n < cfg.max_iters {
        let g_next = ks_linear_step(f0, &absorption(op, &h)?, &gains(op, &g)?, &tg)?;
        let h_next = ks_linear_step(f0, &absorption(op, &g)?, &gains(op, &h)?, &tg)?;
        let step = [excess(&h, &h_next), excess(&h_next, &g_next), excess(&g_next, &g)].into_iter().map(norm).fold(f64::NEG_INFINITY, f64::max);
        cert = cert.max(step);
        if n == 1 {
            beginning_violation = step.max(norm(-h_next.fields().iter().map(|f| f.min()).fold(f64::INFINITY, f64::min)));
            g2_defect = norm(g_next.max_abs_diff(&g1));
        }
        g = g_next;
        h = h_next;
        n += 1;
        let gap = g.max_abs_diff(&h);
        let prev = *gap_history.last().expect("non-empty");
        gap_history.push(gap);
        if gap <= cfg.iter_tol * scale {
            converged = true;
        } else if gap >= prev {
            stagnant += 1;
            if stagnant >= 3 {
                warnings.push(format!("gap stagnated at {gap:.3e} after {n} iterations"));
                break;
            }
        }
    }
    let gap: Vec<f64> = g.fields().iter().zip(h.fields()).map(|(a, b)| a.max_abs_diff(b)).collect();
    let fields: Vec<DistributionField> = g
        .fields()
        .iter()
        .zip(h.fields())
        .map(|(a, b)| {
            let mut m = a.scaled(0.5);
            m.axpy(0.5, b).expect("same grid");
            m
        })
        .collect();
    let solution = Trajectory::new(g.times().to_vec(), fields)?;
    let (duhamel_residual, tol_quad) = duhamel_residual(f0, &solution, op, &tg)?;
    let state = SandwichState {
        h,
        g,
        n,
        gap,
        gap_history,
        monotonicity_certificate: cert,
        beginning_violation,
        g2_defect,
    };
    Ok(KsReport { solution, state, converged, picard, duhamel_residual, tol_quad, warnings })
}

/// Residual of `f = S f0 + ∫ S Q(f, f)` with the trapezoid sum, and the Richardson
/// estimate `|trap(dt) − trap(2dt)|` of that sum's own error (both relative to `max f`,
/// taken at nodes shared by both step sizes).
pub fn duhamel_residual(
    f0: &DistributionField,
    f: &Trajectory,
    op: &CollisionOperator,
    tg: &TimeGrid,
) -> Result<(f64, f64)> {
    let q: Vec<DistributionField> = f.fields().iter().map(|x| op.collision(x)).collect::<Result<_>>()?;
    let fine = duhamel_cumulative(&q, tg)?;
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    let mut resid = 0.0f64;
    for ((fj, acc), t) in f.fields().iter().zip(&fine).zip(f.times()) {
        let mut r = fj.sub(acc)?;
        r.axpy(-1.0, &free_stream(f0, t - tg.t0))?;
        resid = resid.max(r.max_abs());
    }
    let steps = tg.steps();
    let mut tol = 0.0f64;
    if steps >= 2 && steps % 2 == 0 {
        let coarse_tg = tg.with_dt(2.0 * tg.dt)?;
        let qc: Vec<DistributionField> = q.iter().step_by(2).cloned().collect();
        let coarse = duhamel_cumulative(&qc, &coarse_tg)?;
        for (j, c) in coarse.iter().enumerate() {
            tol = tol.max(c.max_abs_diff(&fine[2 * j]));
        }
    }
    // Floor at round-off so an exactly integrable source does not demand a zero residual.
    let floor = 1e-13 * scale;
    Ok((resid / scale, tol.max(floor) / scale))
}

/// `W = sup_t ‖⟨v⟩^{s+γ} w‖_{L²} + ∫ ‖⟨v⟩^{s+γ} N[w]‖_{L²} dt`, `w = f − g`,
/// `N[w] = Q⁺(w, f) + Q⁺(g, w) − Q⁻(w, f) − Q⁻(g, w)`.
pub fn uniqueness_residual(f: &Trajectory, g: &Trajectory, op: &CollisionOperator, s: f64) -> Result<f64> {
    if f.times() != g.times() {
        return Err(LabError::GridMismatch("trajectories have different time nodes".into()));
    }
    let weights = Weights::bracket(0.0, s + op.kernel().gamma());
    let mix = NormMix::LvLx { p: 2.0 };
    let mut sup = 0.0f64;
    let mut pieces = Vec::with_capacity(f.len());
    for (fa, ga) in f.fields().iter().zip(g.fields()) {
        let w = fa.sub(ga)?;
        sup = sup.max(weighted_norm_with(&w, weights, mix)?);
        let mut nw = op.gain(&w, fa)?;
        nw.axpy(1.0, &op.gain(ga, &w)?)?;
        nw.axpy(-1.0, &op.loss(&w, fa)?)?;
        nw.axpy(-1.0, &op.loss(ga, &w)?)?;
        pieces.push(weighted_norm_with(&nw, weights, mix)?);
    }
    let t = f.times();
    let integral: f64 = (1..t.len()).map(|j| 0.5 * (t[j] - t[j - 1]) * (pieces[j] + pieces[j - 1])).sum();
    Ok(sup + integral)
}

/// Restriction of a trajectory to the nodes it shares with `times`.
pub fn restrict(t: &Trajectory, times: &[f64]) -> Result<Trajectory> {
    let mut out_t = Vec::new();
    let mut out_f = Vec::new();
    for &s in times {
        let j = t
            .times()
            .iter()
            .position(|u| (u - s).abs() < 1e-9)
            .ok_or_else(|| LabError::Usage(format!("time {s} not stored in trajectory")))?;
        out_t.push(s);
        out_f.push(t.fields()[j].clone());
    }
    Trajectory::new(out_t, out_f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{CollisionKernel, GainScheme, SphereRule};
    use crate::grid::PhaseGrid;
    use crate::transport::duhamel;

    fn setup() -> (PhaseGrid, CollisionOperator, TimeGrid) {
        let grid = PhaseGrid::new(0.375, 4, 3.0, 4).unwrap();
        let k = CollisionKernel::abs_cos(0.0).unwrap();
        let rule = SphereRule::product(4, 8).unwrap();
        let op = CollisionOperator::new(&grid, &k, &rule, GainScheme::MonotoneCic);
        let tg = TimeGrid::new(0.0, 0.5, 0.125, Quadrature::Trapezoid).unwrap();
        (grid, op, tg)
    }

    fn bump(grid: &PhaseGrid, amp: f64) -> DistributionField {
        DistributionField::from_fn(grid, |x, v| {
            let r2: f64 = v.iter().map(|a| a * a).sum();
            amp * (1.0 + 0.5 * (std::f64::consts::PI * x[0] / 0.375).sin() + 0.2 * x[1]) * (-r2).exp()
        })
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let (grid, op, _) = setup();
        let cfg = SolverConfig { t_end: 0.5, dt: 0.125, ..Default::default() };
        let r = picard_gain_only(&DistributionField::zeros(&grid), &op, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.trajectory.max_abs(), 0.0);
        let ks = kaniel_shinbrot(&DistributionField::zeros(&grid), &op, &cfg).unwrap();
        assert!(ks.converged);
        assert_eq!(ks.state.gap_history, vec![0.0]);
    }

    #[test]
    fn linear_step_without_forcing_streams() {
        let (grid, _, tg) = setup();
        let f0 = bump(&grid, 1.0);
        let free = free_trajectory(&f0, &tg).unwrap();
        let zero = free.zeros_like();
        let u = ks_linear_step(&f0, &zero, &zero, &tg).unwrap();
        assert!(u.max_abs_diff(&free) < 1e-15);
        let c = 0.7;
        let absorb = Trajectory::new(tg.nodes(), tg.nodes().iter().map(|_| DistributionField::from_fn(&grid, |_, _| c)).collect()).unwrap();
        let u = ks_linear_step(&f0, &absorb, &zero, &tg).unwrap();
        for (t, (a, b)) in u.times().iter().zip(u.fields().iter().zip(free.fields())) {
            assert!(a.max_abs_diff(&b.scaled((-c * t).exp())) < 1e-14);
        }
    }

    #[test]
    fn linear_step_with_source_only_is_duhamel() {
        let (grid, op, tg) = setup();
        let f0 = bump(&grid, 1.0);
        let free = free_trajectory(&f0, &tg).unwrap();
        let src = gains(&op, &free).unwrap();
        let u = ks_linear_step(&f0, &free.zeros_like(), &src, &tg).unwrap();
        for (j, t) in tg.nodes().into_iter().enumerate().skip(1) {
            let sub = tg.with_dt(tg.dt).map(|g| TimeGrid { t_end: t, ..g }).unwrap();
            let d = duhamel(&f0, |s| Ok(src.fields()[(s / tg.dt).round() as usize].clone()), &sub).unwrap();
            assert!(u.fields()[j].max_abs_diff(&d) < 1e-14 * d.max_abs());
        }
    }

    #[test]
    fn absorption_matches_exponential_of_streamed_rate() {
        let (grid, op, tg) = setup();
        let f0 = bump(&grid, 1.0);
        let g1 = free_trajectory(&bump(&grid, 0.5), &tg).unwrap();
        let a = absorption(&op, &g1).unwrap();
        let u = ks_linear_step(&f0, &a, &a.zeros_like(), &tg).unwrap();
        for (j, t) in tg.nodes().into_iter().enumerate().skip(1) {
            let sub = TimeGrid { t_end: t, ..tg };
            let zero = DistributionField::zeros(&grid);
            let int = duhamel(&zero, |s| Ok(a.fields()[(s / tg.dt).round() as usize].clone()), &sub).unwrap();
            let s = free_stream(&f0, t);
            let vals: Vec<f64> = s.values().iter().zip(int.values()).map(|(x, i)| x * (-i).exp()).collect();
            let expect = DistributionField::new(grid.clone(), vals, t).unwrap();
            assert!(u.fields()[j].max_abs_diff(&expect) <= 1e-8 * expect.max_abs());
        }
    }

    #[test]
    fn negative_absorption_is_rejected() {
        let (grid, _, tg) = setup();
        let f0 = bump(&grid, 1.0);
        let neg = Trajectory::new(tg.nodes(), tg.nodes().iter().map(|_| DistributionField::from_fn(&grid, |_, _| -1.0)).collect()).unwrap();
        assert!(matches!(ks_linear_step(&f0, &neg, &neg.zeros_like(), &tg), Err(LabError::Domain(_))));
    }

    #[test]
    fn residual_vanishes_on_identical_trajectories_and_is_linear() {
        let (grid, op, tg) = setup();
        let f = free_trajectory(&bump(&grid, 1.0), &tg).unwrap();
        assert!(uniqueness_residual(&f, &f, &op, 0.5).unwrap() <= 1e-10);
        let pert = bump(&grid, 1.0).scaled(0.3);
        let shifted = |d: f64| {
            let fields = f.fields().iter().map(|x| {
                let mut y = x.clone();
                y.axpy(d, &pert).unwrap();
                y
            });
            Trajectory::new(f.times().to_vec(), fields.collect()).unwrap()
        };
        let w3 = uniqueness_residual(&f, &shifted(1e-3), &op, 0.5).unwrap();
        let w4 = uniqueness_residual(&f, &shifted(1e-4), &op, 0.5).unwrap();
        assert!((w3 / w4 - 10.0).abs() < 1e-2, "{w3} {w4}");
    }

    #[test]
    fn config_rejects_bad_tolerances() {
        let cfg = SolverConfig { iter_tol: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { t_end: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
