//! Learning-curve fitting for the inverse power law `eps = alpha d^-beta - delta`.
//!
//! For a fixed offset the law is linear in log space, so each candidate
//! `delta` is solved exactly by least squares on `ln(eps + delta)` against
//! `ln d`. Candidates are ranked by RMSE in the original error space; the
//! grid winner is then refined by golden-section search on its bracket.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::economics;
use crate::model::ScalingLaw;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least 3 points with 3 distinct d values (got {points} points, {distinct} distinct)")]
    InsufficientPoints { points: usize, distinct: usize },
    #[error("degenerate fit: alpha = {alpha}, beta = {beta}")]
    DegenerateFit { alpha: f64, beta: f64 },
    #[error("eps + delta is non-positive for every candidate offset")]
    NonPositiveShifted,
    #[error("prediction at non-positive data volume {0}")]
    ZeroTotalData(f64),
    #[error("malformed learning curve: {0}")]
    Parse(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvePoint {
    pub d: u64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub delta_grid: Vec<f64>,
    pub max_refine: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            delta_grid: (0..=50).map(|i| i as f64 * 0.01).collect(),
            max_refine: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub law: ScalingLaw,
    pub rmse: f64,
    pub n_points: usize,
}

/// `alpha d^-beta - delta`; same code path as [`economics::local_error`].
pub fn predict(law: &ScalingLaw, d: f64) -> Result<f64, FitError> {
    economics::local_error(law, d, 0.0).map_err(|_| FitError::ZeroTotalData(d))
}

/// RMSE of `law` over `points` in error space.
pub fn rmse(law: &ScalingLaw, points: &[CurvePoint]) -> f64 {
    let sse: f64 = points
        .iter()
        .map(|p| (law.error_at(p.d as f64) - p.eps).powi(2))
        .sum();
    (sse / points.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    delta: f64,
    alpha: f64,
    beta: f64,
    rmse: f64,
}

/// Exact log-space least squares for one offset; `None` if any shifted error
/// is non-positive.
fn solve_offset(points: &[CurvePoint], delta: f64) -> Option<Candidate> {
    if points.iter().any(|p| !(p.eps + delta > 0.0)) {
        return None;
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.d as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| (p.eps + delta).ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let alpha = (my - slope * mx).exp();
    let beta = -slope;
    let sse: f64 = points
        .iter()
        .map(|p| (alpha * (p.d as f64).powf(-beta) - delta - p.eps).powi(2))
        .sum();
    Some(Candidate {
        delta,
        alpha,
        beta,
        rmse: (sse / k).sqrt(),
    })
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.rmse < x.rmse { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

pub fn fit_scaling_law(points: &[CurvePoint], cfg: &FitConfig) -> Result<FitResult, FitError> {
    let mut distinct: Vec<u64> = points.iter().map(|p| p.d).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if points.len() < 3 || distinct.len() < 3 {
        return Err(FitError::InsufficientPoints {
            points: points.len(),
            distinct: distinct.len(),
        });
    }
    if points.iter().any(|p| p.d == 0) {
        return Err(FitError::Parse("d must be positive".into()));
    }

    let mut grid = cfg.delta_grid.clone();
    grid.retain(|d| d.is_finite() && *d >= 0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut best: Option<(usize, Candidate)> = None;
    for (i, &delta) in grid.iter().enumerate() {
        if let Some(c) = solve_offset(points, delta) {
            if best.is_none_or(|(_, b)| c.rmse < b.rmse) {
                best = Some((i, c));
            }
        }
    }
    let (idx, winner) = best.ok_or(FitError::NonPositiveShifted)?;

    // Golden-section refinement on the bracket around the grid winner.
    let floor = points.iter().map(|p| -p.eps).fold(0.0f64, f64::max);
    let mut lo = if idx > 0 { grid[idx - 1] } else { winner.delta };
    let mut hi = if idx + 1 < grid.len() { grid[idx + 1] } else { winner.delta };
    lo = lo.max(floor);
    let mut overall = Some(winner);
    if hi > lo {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let score = |d: f64| solve_offset(points, d).map_or(f64::INFINITY, |c| c.rmse);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = score(x1);
        let mut f2 = score(x2);
        for _ in 0..cfg.max_refine {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = score(x1);
                overall = better(overall, solve_offset(points, x1));
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = score(x2);
                overall = better(overall, solve_offset(points, x2));
            }
        }
        overall = better(overall, solve_offset(points, 0.5 * (lo + hi)));
    }
    let c = overall.expect("grid winner is always present");
    if !(c.alpha > 0.0 && c.alpha.is_finite() && c.beta > 0.0 && c.beta.is_finite()) {
        return Err(FitError::DegenerateFit {
            alpha: c.alpha,
            beta: c.beta,
        });
    }
    let law = ScalingLaw::new(c.alpha, c.beta, c.delta).map_err(|_| FitError::DegenerateFit {
        alpha: c.alpha,
        beta: c.beta,
    })?;
    Ok(FitResult {
        law,
        rmse: rmse(&law, points),
        n_points: points.len(),
    })
}

/// Reads a `d,eps` CSV with a header row.
pub fn read_curve_csv<R: Read>(reader: R) -> Result<Vec<CurvePoint>, FitError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| FitError::Parse(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["d", "eps"] {
        return Err(FitError::Parse(format!(
            "expected header `d,eps`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for row in rdr.deserialize::<CurvePoint>() {
        let p = row.map_err(|e| FitError::Parse(e.to_string()))?;
        if p.d == 0 || !p.eps.is_finite() {
            return Err(FitError::Parse(format!("invalid point d={} eps={}", p.d, p.eps)));
        }
        points.push(p);
    }
    Ok(points)
}

pub fn load_curve(path: impl AsRef<Path>) -> Result<Vec<CurvePoint>, FitError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| FitError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_curve_csv(file)
}

/// Points sampled from `law` at the given volumes.
pub fn synthetic_curve(law: &ScalingLaw, ds: &[u64]) -> Vec<CurvePoint> {
    ds.iter()
        .map(|&d| CurvePoint {
            d,
            eps: law.error_at(d as f64),
        })
        .collect()
}

/// Environment variable naming the directory searched for `presets.json`.
pub const CONFIG_DIR_ENV: &str = "COCOGEN_CONFIG_DIR";
pub const PRESETS_FILE: &str = "presets.json";
const BUILTIN_PRESETS: &str = include_str!("../../../config/presets.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub alpha_d: f64,
    pub law: ScalingLaw,
}

/// Learning-curve presets keyed by Dirichlet heterogeneity level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeterogeneityPresets {
    #[serde(default)]
    pub note: String,
    pub presets: Vec<Preset>,
}

impl HeterogeneityPresets {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_PRESETS).expect("shipped presets parse")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, FitError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FitError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| FitError::Parse(e.to_string()))
    }

    /// `$COCOGEN_CONFIG_DIR/presets.json` when set, otherwise the shipped file.
    pub fn load() -> Result<Self, FitError> {
        match std::env::var_os(CONFIG_DIR_ENV) {
            Some(dir) => Self::from_path(Path::new(&dir).join(PRESETS_FILE)),
            None => Ok(Self::builtin()),
        }
    }

    pub fn get(&self, alpha_d: f64) -> Option<ScalingLaw> {
        self.presets
            .iter()
            .find(|p| p.alpha_d == alpha_d)
            .map(|p| p.law)
    }

    /// True when error strictly decreases with `alpha_d` at every integer
    /// volume in `[lo, hi]`.
    pub fn ordered_on(&self, lo: u64, hi: u64) -> bool {
        let mut sorted = self.presets.clone();
        sorted.sort_by(|a, b| a.alpha_d.total_cmp(&b.alpha_d));
        sorted.windows(2).all(|w| {
            (lo..=hi).all(|d| w[0].law.error_at(d as f64) > w[1].law.error_at(d as f64))
        })
    }
}

/// Shipped presets (or the configured override) as a lookup table.
pub fn heterogeneity_presets() -> Result<HeterogeneityPresets, FitError> {
    HeterogeneityPresets::load()
}
