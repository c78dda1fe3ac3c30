//! Scenario dispatch, certificates and artifact writing.

use crate::config::{Config, ConfigError, GridSpec, InitialSpec, Scenario, ScenarioKind};
use boltzlab::collision::{fitted_bobylev_constant, CollisionKernel, CollisionOperator, GainScheme, SphereRule};
use boltzlab::diagnostics::monitor;
use boltzlab::estimates::bilinear::{check_bilinear_noregularity, BilinearConfig};
use boltzlab::estimates::convolution::{check_convolution, xi_refined, HolderPair};
use boltzlab::estimates::leibniz::{check_fractional_leibniz, LeibnizExponents, XTorus};
use boltzlab::estimates::scaling::{check_scaling_family, ScalingConfig};
use boltzlab::estimates::strichartz::{check_strichartz, StrichartzConfig, StrichartzPair};
use boltzlab::estimates::{EstimateReport, FamilyKind, TestFamily};
use boltzlab::littlewood_paley::{support_profile, DyadicCutoff};
use boltzlab::solvers::{kaniel_shinbrot, picard_gain_only, SolverConfig};
use boltzlab::{fourier_v, DistributionField, LabError, PhaseGrid};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("scenario {scenario:?}: {source}")]
    Lab { scenario: String, source: LabError },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("certificate failed: {}", .0.join(", "))]
    Certificates(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Schema { .. }) => 2,
            CliError::Lab { source: LabError::Usage(_), .. } => 2,
            _ => 1,
        }
    }
}

type Out<T> = Result<T, CliError>;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    /// Replaces the config's top-level seed.
    pub seed: Option<u64>,
    /// Replaces `samples` in every scenario.
    pub samples: Option<usize>,
    /// Replaces `refine` in every scenario.
    pub refine: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Certificate {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, pass: value <= threshold }
    }
    fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: f64::from(u8::from(ok)), threshold: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    /// Every physical or fitted constant the scenario used.
    pub constants: BTreeMap<String, Value>,
    pub certificates: Vec<Certificate>,
    pub files: Vec<String>,
    pub summary: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Effective top-level seed; scenario seeds are drawn from ChaCha8 seeded with it, in file order.
    pub seed: u64,
    pub config: Config,
    pub scenarios: Vec<ScenarioOutcome>,
    pub pass: bool,
    pub failed: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn write_file(path: &Path, bytes: &[u8]) -> Out<()> {
    std::fs::write(path, bytes).map_err(io_err(path))
}

fn write_json(path: &Path, v: &impl Serialize) -> Out<()> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Out<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.into() })?;
    }
    write_file(path, &w.into_inner().expect("in-memory writer"))
}

/// Runs every scenario and writes `manifest.json`. Certificate failures are
/// recorded in the manifest; the caller decides the exit status from `pass`.
pub fn run_config(cfg: &Config, opts: &RunOptions) -> Out<Manifest> {
    std::fs::create_dir_all(&opts.out).map_err(io_err(&opts.out))?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::new();
    for sc in &cfg.scenarios {
        let drawn = rng.next_u64();
        let mut sc = sc.clone();
        sc.samples = opts.samples.or(sc.samples);
        sc.refine = opts.refine.or(sc.refine);
        let dir = opts.out.join(&sc.name);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let mut o = run_scenario(&sc, sc.seed.unwrap_or(drawn), &dir)
            .map_err(|e| match e {
                CliError::Lab { source, .. } => CliError::Lab { scenario: sc.name.clone(), source },
                e => e,
            })?;
        o.files = o.files.iter().map(|f| format!("{}/{f}", sc.name)).collect();
        outcomes.push(o);
    }
    let failed: Vec<String> = outcomes
        .iter()
        .flat_map(|o| o.certificates.iter().filter(|c| !c.pass).map(move |c| format!("{}: {}", o.name, c.name)))
        .collect();
    let m = Manifest {
        tool: "boltzlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        config: cfg.clone(),
        scenarios: outcomes,
        pass: failed.is_empty(),
        failed,
    };
    write_json(&opts.out.join("manifest.json"), &m)?;
    Ok(m)
}

fn lab(e: LabError) -> CliError {
    CliError::Lab { scenario: String::new(), source: e }
}

fn scheme(sc: &Scenario) -> GainScheme {
    sc.scheme.unwrap_or(GainScheme::MonotoneCic)
}

const SOLVER_GRID: GridSpec = GridSpec { lx: 0.375, nx: 4, lv: 3.0, nv: 8 };

/// `amplitude (1 + modulation sin(π x₁ / L_x)) exp(−|v|² / 2 width²)`.
pub fn initial_field(grid: &PhaseGrid, init: &InitialSpec) -> DistributionField {
    let lx = grid.lx();
    DistributionField::from_fn(grid, |x, v| {
        let r2: f64 = v.iter().map(|a| a * a).sum();
        init.amplitude * (1.0 + init.modulation * (PI * x[0] / lx).sin()) * (-r2 / (2.0 * init.width * init.width)).exp()
    })
}

struct Physics {
    grid: PhaseGrid,
    kernel: CollisionKernel,
    rule: SphereRule,
    op: CollisionOperator,
    solver: SolverConfig,
    init: InitialSpec,
}

fn physics(sc: &Scenario) -> Out<Physics> {
    let grid = sc.grid.unwrap_or(SOLVER_GRID).build().map_err(lab)?;
    let kernel = sc.kernel().map_err(lab)?;
    let rule = sc.rule().map_err(lab)?;
    let op = CollisionOperator::new(&grid, &kernel, &rule, scheme(sc));
    Ok(Physics { grid, kernel, rule, op, solver: sc.solver.unwrap_or_default(), init: sc.initial.unwrap_or_default() })
}

fn physical_constants(p: &Physics, f0: &DistributionField) -> Out<BTreeMap<String, Value>> {
    let bobylev = fitted_bobylev_constant(f0, f0, &p.kernel, &p.rule).map_err(lab)?;
    Ok(BTreeMap::from([
        ("grid".into(), json!(p.grid.header())),
        ("kernel".into(), json!(p.kernel.spec())),
        ("sphere_rule".into(), json!(p.rule.spec())),
        ("gain_scheme".into(), json!(p.op.scheme())),
        ("solver".into(), json!(p.solver)),
        ("initial".into(), json!(p.init)),
        ("fitted_bobylev_constant".into(), json!(bobylev)),
    ]))
}

fn run_scenario(sc: &Scenario, seed: u64, dir: &Path) -> Out<ScenarioOutcome> {
    let mut o = ScenarioOutcome {
        name: sc.name.clone(),
        kind: sc.kind,
        seed,
        constants: BTreeMap::new(),
        certificates: Vec::new(),
        files: Vec::new(),
        summary: Value::Null,
    };
    match sc.kind {
        ScenarioKind::GainOnly => gain_only(sc, dir, &mut o)?,
        ScenarioKind::KanielShinbrot => ks(sc, dir, &mut o)?,
        ScenarioKind::VerifyEstimate => verify(sc, seed, dir, &mut o)?,
        ScenarioKind::FrequencyCheck => frequency(sc, seed, dir, &mut o)?,
        ScenarioKind::Sweep => {
            let rows = amplitude_sweep(sc, sc.amplitudes.as_deref().unwrap_or(&[]))?;
            let monotone = verdicts_monotone(&rows);
            write_csv(&dir.join("sweep.csv"), &rows)?;
            o.files.push("sweep.csv".into());
            let p = physics(sc)?;
            o.constants = physical_constants(&p, &initial_field(&p.grid, &p.init))?;
            o.summary = json!({ "rows": rows, "verdicts_monotone": monotone });
        }
    }
    Ok(o)
}

fn gain_only(sc: &Scenario, dir: &Path, o: &mut ScenarioOutcome) -> Out<()> {
    let p = physics(sc)?;
    let f0 = initial_field(&p.grid, &p.init);
    o.constants = physical_constants(&p, &f0)?;
    let r = picard_gain_only(&f0, &p.op, &p.solver).map_err(lab)?;
    let scale = r.trajectory.max_abs().max(f64::MIN_POSITIVE);
    let min = r.trajectory.fields().iter().map(|f| f.min()).fold(0.0, f64::min);
    o.certificates.push(Certificate::holds("picard.converged", r.converged));
    o.certificates.push(Certificate::at_most("trajectory.negativity", min.abs() / scale, p.solver.eps_nn));
    let mon = monitor(&r.trajectory, &p.op, 0.5, 0.5 + p.kernel.gamma()).map_err(lab)?;
    write_file(&dir.join("monitor.csv"), mon.to_csv().as_bytes())?;
    o.summary = json!({
        "iterations": r.iterations,
        "converged": r.converged,
        "differences": r.differences,
        "contraction": r.contraction,
        "contraction_factor": r.contraction_factor(),
        "critical_norm": r.critical_norm,
        "eta_exceeded": r.eta_exceeded,
        "monotone_violation": r.monotone_violation,
        "mass_drift": mon.mass_drift,
        "warnings": r.warnings,
    });
    write_json(&dir.join("gain_only.report.json"), &o.summary)?;
    o.files.extend(["monitor.csv".into(), "gain_only.report.json".into()]);
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    iteration: usize,
    gap: f64,
}

fn ks(sc: &Scenario, dir: &Path, o: &mut ScenarioOutcome) -> Out<()> {
    let p = physics(sc)?;
    let f0 = initial_field(&p.grid, &p.init);
    o.constants = physical_constants(&p, &f0)?;
    let r = kaniel_shinbrot(&f0, &p.op, &p.solver).map_err(lab)?;
    let st = &r.state;
    o.certificates.extend([
        Certificate::holds("sandwich.converged", r.converged),
        Certificate::at_most("sandwich.monotonicity", st.monotonicity_certificate, 1e-10),
        Certificate::at_most("sandwich.beginning_condition", st.beginning_violation, 1e-10),
        Certificate::at_most("sandwich.g2_equals_g1", st.g2_defect, 1e-12),
        Certificate::at_most("duhamel.residual", r.duhamel_residual, r.tol_quad.max(1e-12)),
    ]);
    let mon = monitor(&r.solution, &p.op, 0.5, 0.5 + p.kernel.gamma()).map_err(lab)?;
    write_file(&dir.join("monitor.csv"), mon.to_csv().as_bytes())?;
    let gaps: Vec<GapRow> = st.gap_history.iter().enumerate().map(|(i, g)| GapRow { iteration: i, gap: *g }).collect();
    write_csv(&dir.join("gap.csv"), &gaps)?;
    o.summary = json!({
        "iterations": st.n,
        "converged": r.converged,
        "gap_history": st.gap_history,
        "gap_ratios": st.gap_ratios(),
        "monotonicity_certificate": st.monotonicity_certificate,
        "beginning_violation": st.beginning_violation,
        "g2_defect": st.g2_defect,
        "duhamel_residual": r.duhamel_residual,
        "tol_quad": r.tol_quad,
        "picard_iterations": r.picard.iterations,
        "picard_contraction": r.picard.contraction,
        "critical_norm": r.picard.critical_norm,
        "mass_drift": mon.mass_drift,
        "l1_bound_holds": mon.l1_bound_holds,
        "warnings": r.warnings,
    });
    write_json(&dir.join("kaniel_shinbrot.report.json"), &o.summary)?;
    o.files.extend(["monitor.csv".into(), "gap.csv".into(), "kaniel_shinbrot.report.json".into()]);
    Ok(())
}

fn refined(mut g: PhaseGrid, times: u32) -> Out<PhaseGrid> {
    for _ in 0..times {
        g = xi_refined(&g).map_err(lab)?;
    }
    Ok(g)
}

fn estimate_grid(sc: &Scenario, default: GridSpec) -> Out<PhaseGrid> {
    refined(sc.grid.unwrap_or(default).build().map_err(lab)?, sc.refine.unwrap_or(0))
}

fn estimate_rule(sc: &Scenario) -> Out<SphereRule> {
    match sc.rule {
        Some(r) => SphereRule::from_spec(r).map_err(lab),
        None => SphereRule::product(8, 16).map_err(lab),
    }
}

const ESTIMATE_GRID: GridSpec = GridSpec { lx: PI, nx: 4, lv: 4.0, nv: 16 };

#[derive(Serialize)]
struct RatioRow {
    index: u64,
    lhs: f64,
    rhs: f64,
    ratio: f64,
    refined_ratio: Option<f64>,
}

/// Runs one estimate of the verification harness.
pub fn run_estimate(sc: &Scenario, seed: u64) -> Out<(EstimateReport, Option<Value>)> {
    let id = sc.estimate.as_deref().unwrap_or_default();
    let family = TestFamily::new(sc.family.unwrap_or(FamilyKind::GaussianMixtures), seed);
    let samples = sc.samples.unwrap_or(20);
    let kernel = sc.kernel().map_err(lab)?;
    let refine = sc.refine.unwrap_or(0);
    let report = match id {
        "convolution" => {
            let [p, q] = sc.pair.unwrap_or([4.0, 4.0]);
            let grid = estimate_grid(sc, GridSpec { lx: 1.0, nx: 4, lv: 5.0, nv: 8 })?;
            let pair = HolderPair::new(p, q).map_err(lab)?;
            check_convolution(&kernel, pair, &family, samples, &grid, &estimate_rule(sc)?).map_err(lab)?
        }
        "strichartz" => {
            let [q, p] = sc.pair.unwrap_or([2.0, 3.0]);
            let mut cfg = StrichartzConfig::default();
            for _ in 0..refine {
                cfg.axis = cfg.axis.refined();
            }
            check_strichartz(StrichartzPair::new(q, p).map_err(lab)?, &family, samples, &cfg).map_err(lab)?
        }
        "bilinear-noregularity" => {
            let grid = estimate_grid(sc, ESTIMATE_GRID)?;
            let cfg = BilinearConfig { s: sc.s.unwrap_or(0.5), ..BilinearConfig::default() };
            let (rep, per) =
                check_bilinear_noregularity(&kernel, &family, None, samples, &grid, &estimate_rule(sc)?, &cfg)
                    .map_err(lab)?;
            return Ok((rep, Some(json!(per))));
        }
        "scaling-family" => {
            let grid = estimate_grid(sc, ESTIMATE_GRID)?;
            let cfg = ScalingConfig { s: sc.s.unwrap_or(0.5), ..ScalingConfig::default() };
            check_scaling_family(&kernel, &family, &[0.5, 1.0, 2.0, 4.0], samples, &grid, &estimate_rule(sc)?, &cfg)
                .map_err(lab)?
        }
        "fractional-leibniz" => {
            let torus = XTorus { l: PI, n: 16 << refine };
            check_fractional_leibniz(sc.s.unwrap_or(1.25), LeibnizExponents::default(), &family, samples, torus)
                .map_err(lab)?
        }
        other => return Err(lab(LabError::Usage(format!("unknown estimate {other:?}")))),
    };
    Ok((report, None))
}

fn verify(sc: &Scenario, seed: u64, dir: &Path, o: &mut ScenarioOutcome) -> Out<()> {
    let (rep, extra) = run_estimate(sc, seed)?;
    let id = rep.id.clone();
    let refined: BTreeMap<u64, f64> =
        rep.refined.iter().flatten().map(|s| (s.index, s.ratio)).collect();
    let rows: Vec<RatioRow> = rep
        .samples
        .iter()
        .map(|s| RatioRow { index: s.index, lhs: s.lhs, rhs: s.rhs, ratio: s.ratio, refined_ratio: refined.get(&s.index).copied() })
        .collect();
    write_csv(&dir.join(format!("{id}.csv")), &rows)?;
    let mut body = json!(rep);
    if let Some(x) = extra {
        body["per_sample"] = x;
    }
    write_json(&dir.join(format!("{id}.report.json")), &body)?;
    o.files.extend([format!("{id}.csv"), format!("{id}.report.json")]);
    o.constants = BTreeMap::from([
        ("estimate".into(), json!(id)),
        ("family".into(), json!(rep.family)),
        ("grid".into(), json!(rep.grid)),
        ("kernel".into(), json!(sc.kernel().map_err(lab)?.spec())),
    ]);
    o.certificates.push(Certificate { name: format!("{id}.stable"), value: rep.growth.unwrap_or(rep.stats.max), threshold: 1.5, pass: rep.pass });
    o.summary = json!({ "stats": rep.stats, "refined_stats": rep.refined_stats, "growth": rep.growth, "flagged": rep.flagged, "notes": rep.notes });
    Ok(())
}

#[derive(Serialize)]
struct ProfileRow {
    sample: u64,
    level: usize,
    ratio: f64,
}

fn frequency(sc: &Scenario, seed: u64, dir: &Path, o: &mut ScenarioOutcome) -> Out<()> {
    let grid = sc.grid.unwrap_or(GridSpec { lx: 1.0, nx: 4, lv: 8.0, nv: 64 }).build().map_err(lab)?;
    let kernel = sc.kernel().map_err(lab)?;
    let rule = sc.rule().map_err(lab)?;
    let [m, m1, m2] = sc.levels.unwrap_or([16, 1, 1]);
    DyadicCutoff::check_level(m, grid.nv()).map_err(lab)?;
    let family = TestFamily::new(sc.family.unwrap_or(FamilyKind::GaussianMixtures), seed);
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..sc.samples.unwrap_or(1) as u64 {
        let f = fourier_v(&family.sample(2 * i).field(&grid));
        let g = fourier_v(&family.sample(2 * i + 1).field(&grid));
        let prof = support_profile(&f, &g, m1, m2, &kernel, &rule, &DyadicCutoff).map_err(lab)?;
        for (level, ratio) in prof {
            if level >= m {
                worst = worst.max(ratio);
            }
            rows.push(ProfileRow { sample: i, level, ratio });
        }
    }
    write_csv(&dir.join("support_profile.csv"), &rows)?;
    o.files.push("support_profile.csv".into());
    o.constants = BTreeMap::from([
        ("grid".into(), json!(grid.header())),
        ("kernel".into(), json!(kernel.spec())),
        ("sphere_rule".into(), json!(rule.spec())),
        ("cutoff".into(), json!(DyadicCutoff.descriptor())),
        ("levels".into(), json!([m, m1, m2])),
        ("family".into(), json!(family.descriptor())),
    ]);
    o.certificates.push(Certificate::at_most("frequency_support.high_band", worst, 1e-10));
    o.summary = json!({ "max_ratio_at_or_above_M": worst });
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub converged: bool,
    pub iterations: usize,
    pub contraction_factor: f64,
    pub critical_norm: f64,
    pub eta_exceeded: bool,
}

/// Gain-only Picard runs of the base scenario with the initial amplitude replaced.
pub fn amplitude_sweep(base: &Scenario, amplitudes: &[f64]) -> Out<Vec<SweepRow>> {
    if amplitudes.iter().any(|a| !(*a >= 0.0)) || amplitudes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(lab(LabError::Usage("amplitudes must be non-negative and strictly ascending".into())));
    }
    let p = physics(base)?;
    amplitudes
        .iter()
        .map(|&amplitude| {
            let f0 = initial_field(&p.grid, &InitialSpec { amplitude, ..p.init });
            let r = picard_gain_only(&f0, &p.op, &p.solver).map_err(lab)?;
            Ok(SweepRow {
                amplitude,
                converged: r.converged,
                iterations: r.iterations,
                contraction_factor: r.contraction_factor(),
                critical_norm: r.critical_norm,
                eta_exceeded: r.eta_exceeded,
            })
        })
        .collect()
}

/// A convergent prefix followed by a divergent suffix.
pub fn verdicts_monotone(rows: &[SweepRow]) -> bool {
    rows.windows(2).all(|w| w[0].converged || !w[1].converged)
}
