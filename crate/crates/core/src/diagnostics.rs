//! Monitors over stored trajectories: conservation, positivity, the integrability
//! and regularity functionals, pulled-back profiles and the lifespan bound.
//!
//! Time integrals use the trapezoid rule on the stored nodes.  `L^∞_x` and
//! `L^∞_v` norms are grid maxima, hence lower bounds on the continuum sup.

use crate::collision::CollisionOperator;
use crate::error::{LabError, Result};
use crate::grid::{weighted_norm, DistributionField, NormMix};
use crate::littlewood_paley::DyadicCutoff;
use crate::solvers::{kaniel_shinbrot, SolverConfig};
use crate::transport::{check_wrap_free, free_stream, Trajectory};
use serde::Serialize;

/// One row per stored time.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorRow {
    pub t: f64,
    pub mass: f64,
    pub l1: f64,
    pub min: f64,
    /// `‖⟨∇_x⟩^s ⟨v⟩^r f‖_{L²_{x,v}}`.
    pub regularity_norm: f64,
    /// `‖⟨v⟩^r f‖_{L²_v L⁶_x}`.
    pub integrability_norm: f64,
    /// `‖A[f]‖_{L^∞_x L^∞_v}`.
    pub absorption_sup: f64,
    /// `M_r(0, t)` and `E_{s,r}(0, t)` accumulated up to this row.
    pub m_r: f64,
    pub e_sr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryReport {
    pub s: f64,
    pub r: f64,
    pub rows: Vec<MonitorRow>,
    /// `max_t |mass(t) − mass(0)| / |mass(0)|` (absolute when the mass vanishes).
    pub mass_drift: f64,
    /// `max_t (‖f(t)‖_{L¹} − ‖f₀‖_{L¹}) / ‖f₀‖_{L¹}`; positive means the bound is exceeded.
    pub l1_excess: f64,
    /// `max_t |‖f(t)‖_{L¹} − mass(t)|` relative to `‖f₀‖_{L¹}`, over non-negative rows.
    pub l1_mass_gap: f64,
    pub l1_bound_holds: bool,
    pub lifespan_lower_bound: f64,
    pub scattering: Option<ScatteringProfile>,
}

impl TrajectoryReport {
    /// CSV with a header row, one row per time node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mass,l1,min,regularity_norm,integrability_norm,absorption_sup,m_r,e_sr\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.t, r.mass, r.l1, r.min, r.regularity_norm, r.integrability_norm, r.absorption_sup, r.m_r, r.e_sr
            ));
        }
        out
    }
}

/// Cumulative trapezoid integral of `y` over `t`.
fn cumulative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; y.len()];
    for j in 1..y.len() {
        acc[j] = acc[j - 1] + 0.5 * (t[j] - t[j - 1]) * (y[j] + y[j - 1]);
    }
    acc
}

fn running_max(y: &[f64]) -> Vec<f64> {
    y.iter()
        .scan(0.0f64, |m, v| {
            *m = m.max(*v);
            Some(*m)
        })
        .collect()
}

/// Monitors for `f` with regularity `s` and velocity weight `r`.
///
/// `Q^±` appears in `M_r` and `E_{s,r}` as the sum of the gain and loss norms.
pub fn monitor(f: &Trajectory, op: &CollisionOperator, s: f64, r: f64) -> Result<TrajectoryReport> {
    let times = f.times();
    let n = times.len();
    let (mut reg, mut int, mut asup, mut q_int, mut q_reg) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut rows = Vec::with_capacity(n);
    for (j, u) in f.fields().iter().enumerate() {
        let a = op.loss_rate(u)?;
        let gain = op.gain(u, u)?;
        let mut loss = u.clone();
        loss.values_mut().iter_mut().zip(a.values()).for_each(|(x, y)| *x *= y);
        reg[j] = weighted_norm(u, s, r, NormMix::L2)?;
        int[j] = weighted_norm(u, 0.0, r, NormMix::LvLx { p: 6.0 })?;
        asup[j] = a.max_abs();
        q_int[j] = weighted_norm(&gain, 0.0, r, NormMix::LvLx { p: 6.0 })? + weighted_norm(&loss, 0.0, r, NormMix::LvLx { p: 6.0 })?;
        q_reg[j] = weighted_norm(&gain, s, r, NormMix::L2)? + weighted_norm(&loss, s, r, NormMix::L2)?;
        rows.push(MonitorRow {
            t: times[j],
            mass: u.mass(),
            l1: u.l1(),
            min: u.min(),
            regularity_norm: reg[j],
            integrability_norm: int[j],
            absorption_sup: asup[j],
            m_r: 0.0,
            e_sr: 0.0,
        });
    }
    let a2: Vec<f64> = asup.iter().map(|x| x * x).collect();
    let (int_max, a2_cum, q_int_cum) = (running_max(&int), cumulative(times, &a2), cumulative(times, &q_int));
    let (reg_max, q_reg_cum) = (running_max(&reg), cumulative(times, &q_reg));
    for (j, row) in rows.iter_mut().enumerate() {
        row.m_r = int_max[j] + a2_cum[j].sqrt() + q_int_cum[j];
        row.e_sr = reg_max[j] + q_reg_cum[j];
    }
    let (m0, l0) = (rows[0].mass, rows[0].l1);
    let rel = |x: f64, base: f64| if base == 0.0 { x } else { x / base.abs() };
    let mass_drift = rows.iter().map(|w| rel((w.mass - m0).abs(), m0)).fold(0.0, f64::max);
    let l1_excess = rows.iter().map(|w| rel(w.l1 - l0, l0)).fold(f64::NEG_INFINITY, f64::max);
    let l1_mass_gap = rows.iter().filter(|w| w.min >= 0.0).map(|w| rel((w.l1 - w.mass).abs(), l0)).fold(0.0, f64::max);
    let gamma = op.kernel().gamma();
    Ok(TrajectoryReport {
        s,
        r,
        rows,
        mass_drift,
        l1_excess,
        l1_mass_gap,
        l1_bound_holds: l1_excess <= 1e-6,
        lifespan_lower_bound: lifespan_bound(&f.fields()[0], s, gamma, 1.0)?,
        scattering: None,
    })
}

/// `c ‖⟨∇_x⟩^s ⟨v⟩^{s+γ} f₀‖_{L²}^{−2}`; `+∞` for zero data.
pub fn lifespan_bound(f0: &DistributionField, s: f64, gamma: f64, c: f64) -> Result<f64> {
    let n = weighted_norm(f0, s, s + gamma, NormMix::L2)?;
    Ok(if n == 0.0 { f64::INFINITY } else { c / (n * n) })
}

/// Pulled-back states `S(−t) f(t)` compared over dyadic node pairs.
#[derive(Debug, Clone, Serialize)]
pub struct ScatteringProfile {
    /// `(t₁, t₂, ‖S(−t₂)f(t₂) − S(−t₁)f(t₁)‖)` per `L_v^{2,r} L_x^p` exponent `p`.
    pub increments: Vec<(f64, f64, Vec<f64>)>,
    pub exponents: Vec<f64>,
    /// Ratios of successive increments in the first exponent.
    pub ratios: Vec<f64>,
    /// Every ratio is below one.
    pub decreasing: bool,
    #[serde(skip)]
    pub f_plus: DistributionField,
}

/// `f₊(T) = S(−T) f(T)` and the Cauchy increments over node indices `0, 1, 2, 4, 8, …`.
///
/// Fails with a window error if characteristics from the support of `f₀` wrap within `[0, T]`.
pub fn scattering_profile(f: &Trajectory, r: f64, exponents: &[f64]) -> Result<ScatteringProfile> {
    let times = f.times();
    let t_end = *times.last().expect("non-empty trajectory") - times[0];
    check_wrap_free(&f.fields()[0], t_end)?;
    let pulled = |j: usize| free_stream(&f.fields()[j], times[0] - times[j]);
    let mut idx = vec![0usize];
    let mut k = 1usize;
    while k < times.len() {
        idx.push(k);
        k *= 2;
    }
    if *idx.last().unwrap() != times.len() - 1 {
        idx.push(times.len() - 1);
    }
    let mut increments = Vec::new();
    let mut prev = pulled(0);
    for w in idx.windows(2) {
        let next = pulled(w[1]);
        let d = next.sub(&prev)?;
        let norms = exponents.iter().map(|&p| weighted_norm(&d, 0.0, r, NormMix::LvLx { p })).collect::<Result<Vec<_>>>()?;
        increments.push((times[w[0]], times[w[1]], norms));
        prev = next;
    }
    let first: Vec<f64> = increments.iter().map(|(_, _, n)| n.first().copied().unwrap_or(0.0)).collect();
    let ratios: Vec<f64> = first.windows(2).map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] }).collect();
    let decreasing = ratios.iter().all(|q| *q < 1.0);
    Ok(ScatteringProfile { increments, exponents: exponents.to_vec(), ratios, decreasing, f_plus: prev })
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffLevel {
    pub n: f64,
    pub initial_mass: f64,
    /// `max_t |∫f^N(t) − ∫f₀^N| / ∫f₀^N`.
    pub mass_drift: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct L1ApproximationReport {
    pub full_mass: f64,
    pub levels: Vec<CutoffLevel>,
    /// `∫f₀^N` is non-decreasing in `N` and bounded by `∫f₀`.
    pub monotone_approach: bool,
    pub mass_conserved: bool,
}

/// `χ(|v| / N) f₀` with the Littlewood–Paley cutoff profile.
pub fn velocity_cutoff(f0: &DistributionField, n: f64) -> DistributionField {
    let g = f0.grid();
    let cut = DyadicCutoff;
    let w: Vec<f64> = (0..g.nv3())
        .map(|iv| {
            let v = g.v_node(iv);
            cut.chi((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() / n)
        })
        .collect();
    let mut out = f0.clone();
    for ix in 0..g.nx3() {
        out.block_mut(ix).iter_mut().zip(&w).for_each(|(x, c)| *x *= c);
    }
    out
}

/// Runs the monotone sandwich on each truncated datum `f₀^N` and checks mass
/// conservation to `mass_tol` relative.
pub fn l1_approximation_run(
    f0: &DistributionField,
    levels: &[f64],
    op: &CollisionOperator,
    cfg: &SolverConfig,
    mass_tol: f64,
) -> Result<L1ApproximationReport> {
    if f0.min() < 0.0 {
        return Err(LabError::Domain("initial datum must be non-negative".into()));
    }
    if levels.iter().any(|n| !(*n > 0.0)) {
        return Err(LabError::Usage("cutoff levels must be positive".into()));
    }
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let fn0 = velocity_cutoff(f0, n);
        let m0 = fn0.mass();
        let ks = kaniel_shinbrot(&fn0, op, cfg)?;
        let drift = ks
            .solution
            .fields()
            .iter()
            .map(|u| if m0 == 0.0 { u.mass().abs() } else { (u.mass() - m0).abs() / m0 })
            .fold(0.0, f64::max);
        out.push(CutoffLevel { n, initial_mass: m0, mass_drift: drift, converged: ks.converged });
    }
    let full_mass = f0.mass();
    let mut sorted: Vec<&CutoffLevel> = out.iter().collect();
    sorted.sort_by(|a, b| a.n.total_cmp(&b.n));
    let monotone_approach = sorted.windows(2).all(|w| w[1].initial_mass >= w[0].initial_mass)
        && sorted.iter().all(|l| l.initial_mass <= full_mass * (1.0 + 1e-14));
    let mass_conserved = out.iter().all(|l| l.mass_drift <= mass_tol);
    Ok(L1ApproximationReport { full_mass, levels: out, monotone_approach, mass_conserved })
}
