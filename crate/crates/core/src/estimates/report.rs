use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SampleRatio {
    pub index: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioStats {
    pub max: f64,
    pub median: f64,
    pub p95: f64,
}

impl RatioStats {
    pub fn of(samples: &[SampleRatio]) -> RatioStats {
        let mut r: Vec<f64> = samples.iter().map(|s| s.ratio).collect();
        r.sort_by(f64::total_cmp);
        let pick = |q: f64| {
            if r.is_empty() {
                0.0
            } else {
                r[((q * (r.len() - 1) as f64).round() as usize).min(r.len() - 1)]
            }
        };
        RatioStats { max: r.last().copied().unwrap_or(0.0), median: pick(0.5), p95: pick(0.95) }
    }
}

/// Ratios at the base grid and, when requested, at one refinement.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub id: String,
    pub family: String,
    pub seed: u64,
    pub grid: String,
    pub samples: Vec<SampleRatio>,
    pub stats: RatioStats,
    pub refined: Option<Vec<SampleRatio>>,
    pub refined_stats: Option<RatioStats>,
    /// `max ratio (refined) / max ratio (base)`.
    pub growth: Option<f64>,
    /// Samples whose ratio exceeds twice the 95th percentile.
    pub flagged: Vec<u64>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl EstimateReport {
    pub fn new(id: &str, family: String, seed: u64, grid: String, samples: Vec<SampleRatio>) -> Self {
        let stats = RatioStats::of(&samples);
        let flagged = samples.iter().filter(|s| s.ratio > 2.0 * stats.p95 && stats.p95 > 0.0).map(|s| s.index).collect();
        Self {
            id: id.to_string(),
            family,
            seed,
            grid,
            samples,
            stats,
            refined: None,
            refined_stats: None,
            growth: None,
            flagged,
            pass: true,
            notes: Vec::new(),
        }
    }

    /// Attaches refined ratios; passes iff the max ratio grows by at most `limit`.
    pub fn with_refinement(mut self, refined: Vec<SampleRatio>, limit: f64) -> Self {
        let stats = RatioStats::of(&refined);
        let growth = if self.stats.max > 0.0 { stats.max / self.stats.max } else { 1.0 };
        self.pass = self.pass && growth <= limit && growth.is_finite();
        self.growth = Some(growth);
        self.refined_stats = Some(stats);
        self.refined = Some(refined);
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

pub fn ratio(index: u64, lhs: f64, rhs: f64) -> SampleRatio {
    SampleRatio { index, lhs, rhs, ratio: if lhs == 0.0 { 0.0 } else { lhs / rhs } }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
