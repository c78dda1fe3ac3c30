//! Scenario files: TOML with a `seed` and a list of `[[scenario]]` tables.
//!
//! ```toml
//! seed = 7
//!
//! [[scenario]]
//! name = "ks-small"
//! kind = "kaniel_shinbrot"
//! grid = { L_x = 0.375, N_x = 4, L_v = 3.0, N_v = 8 }
//! kernel = { gamma = 0.0 }
//! rule = { n_theta = 16, n_phi = 32 }
//! solver = { max_iters = 40, iter_tol = 1e-12, dt = 0.25, T = 2.0 }
//! initial = { amplitude = 1e-3 }
//! ```

use boltzlab::collision::{CollisionKernel, GainScheme, KernelSpec, SphereRule, SphereRuleSpec};
use boltzlab::estimates::convolution::HolderPair;
use boltzlab::estimates::strichartz::StrichartzPair;
use boltzlab::estimates::FamilyKind;
use boltzlab::solvers::SolverConfig;
use boltzlab::PhaseGrid;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    GainOnly,
    KanielShinbrot,
    VerifyEstimate,
    FrequencyCheck,
    Sweep,
}

/// Grid spec without the convention tag, which is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "L_x")]
    pub lx: f64,
    #[serde(rename = "N_x")]
    pub nx: usize,
    #[serde(rename = "L_v")]
    pub lv: f64,
    #[serde(rename = "N_v")]
    pub nv: usize,
}

impl GridSpec {
    pub fn build(&self) -> boltzlab::Result<PhaseGrid> {
        PhaseGrid::new(self.lx, self.nx, self.lv, self.nv)
    }
}

/// `amplitude · (1 + modulation · sin(π x₁ / L_x)) · exp(−|v|² / 2 width²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub amplitude: f64,
    #[serde(default = "half")]
    pub modulation: f64,
    #[serde(default = "inv_sqrt2")]
    pub width: f64,
}

fn half() -> f64 {
    0.5
}
fn inv_sqrt2() -> f64 {
    std::f64::consts::FRAC_1_SQRT_2
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self { amplitude: 1e-3, modulation: 0.5, width: inv_sqrt2() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    pub grid: Option<GridSpec>,
    pub kernel: Option<KernelSpec>,
    pub rule: Option<SphereRuleSpec>,
    pub scheme: Option<GainScheme>,
    pub solver: Option<SolverConfig>,
    pub initial: Option<InitialSpec>,
    /// Estimate id for `verify_estimate`.
    pub estimate: Option<String>,
    pub family: Option<FamilyKind>,
    pub samples: Option<usize>,
    /// Grid refinements applied before the study's own one-step refinement.
    pub refine: Option<u32>,
    /// Exponent pair: Hölder pair `(p, q)` for the convolution estimate (default `(4, 4)`),
    /// `(q, p)` for Strichartz (default `(2, 3)`).
    pub pair: Option<[f64; 2]>,
    /// Regularity index for the bilinear, scaling and Leibniz estimates.
    pub s: Option<f64>,
    /// Amplitudes for `sweep`.
    pub amplitudes: Option<Vec<f64>>,
    /// Dyadic levels `[M, M₁, M₂]` for `frequency_check`.
    pub levels: Option<[usize; 3]>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

pub const ESTIMATES: [&str; 5] = ["convolution", "strichartz", "bilinear-noregularity", "scaling-family", "fractional-leibniz"];

impl Scenario {
    pub fn kernel(&self) -> boltzlab::Result<CollisionKernel> {
        match &self.kernel {
            Some(k) => CollisionKernel::from_spec(k),
            None => CollisionKernel::abs_cos(0.0),
        }
    }

    pub fn rule(&self) -> boltzlab::Result<SphereRule> {
        SphereRule::from_spec(self.rule.unwrap_or_default())
    }

    /// Checks every referenced spec without computing anything heavy.
    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(format!("scenario name {:?} is not a plain directory name", self.name));
        }
        if let Some(g) = &self.grid {
            g.build().map_err(|e| e.to_string())?;
        }
        self.kernel().map_err(|e| e.to_string())?;
        self.rule().map_err(|e| e.to_string())?;
        if let Some(s) = &self.solver {
            s.validate().map_err(|e| e.to_string())?;
        }
        if let Some(i) = &self.initial {
            if !(i.amplitude >= 0.0 && i.amplitude.is_finite() && i.width > 0.0 && i.modulation.abs() <= 1.0) {
                return Err("initial data needs amplitude >= 0, width > 0 and |modulation| <= 1".into());
            }
        }
        match self.kind {
            ScenarioKind::VerifyEstimate => {
                let id = self.estimate.as_deref().ok_or("verify_estimate needs `estimate`")?;
                if !ESTIMATES.contains(&id) {
                    return Err(format!("unknown estimate {id:?}; expected one of {ESTIMATES:?}"));
                }
                let gamma = self.kernel().map_err(|e| e.to_string())?.gamma();
                match (id, self.pair) {
                    ("convolution", Some([p, q])) => {
                        HolderPair::new(p, q).and_then(|h| h.norm_exponents(gamma)).map_err(|e| e.to_string())?;
                    }
                    ("strichartz", Some([q, p])) => {
                        StrichartzPair::new(q, p).map_err(|e| e.to_string())?;
                    }
                    _ => {}
                }
                if let Some(s) = self.s {
                    if !(s >= 0.0) {
                        return Err(format!("s = {s} must be non-negative"));
                    }
                }
            }
            ScenarioKind::Sweep => {
                let a = self.amplitudes.as_deref().ok_or("sweep needs `amplitudes`")?;
                if a.is_empty() || a.iter().any(|x| !(*x >= 0.0)) || a.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("amplitudes must be non-negative and strictly ascending".into());
                }
            }
            ScenarioKind::FrequencyCheck => {
                if let Some([m, m1, m2]) = self.levels {
                    if m < 10 * m1.max(m2) {
                        return Err(format!("levels: M = {m} is below 10·max(M1, M2)"));
                    }
                }
            }
            ScenarioKind::GainOnly | ScenarioKind::KanielShinbrot => {}
        }
        if self.samples == Some(0) {
            return Err("samples must be positive".into());
        }
        Ok(())
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the `i`-th `[[scenario]]` header.
fn scenario_line(text: &str, i: usize) -> usize {
    let mut seen = 0;
    for (n, l) in text.lines().enumerate() {
        if l.trim_start().starts_with("[[scenario]]") {
            if seen == i {
                return n + 1;
            }
            seen += 1;
        }
    }
    1
}

impl Config {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Schema {
            path: path.into(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
            message: e.message().to_string(),
        })?;
        let mut names = std::collections::BTreeSet::new();
        for (i, s) in cfg.scenarios.iter().enumerate() {
            let fail = |message: String| ConfigError::Schema { path: path.into(), line: scenario_line(text, i), message };
            s.validate().map_err(|m| fail(format!("scenario {:?}: {m}", s.name)))?;
            if !names.insert(s.name.clone()) {
                return Err(fail(format!("duplicate scenario name {:?}", s.name)));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
        Self::parse(&text, &p)
    }
}
