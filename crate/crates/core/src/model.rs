//! Domain types for one stage game: organizations, the competitive market,
//! economy parameters and strategy bounds, plus strict JSON config IO.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Inverse power-law learning curve: `alpha * d^(-beta) - delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScalingLaw", into = "RawScalingLaw")]
pub struct ScalingLaw {
    alpha: f64,
    beta: f64,
    delta: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScalingLaw {
    alpha: f64,
    beta: f64,
    delta: f64,
}

impl ScalingLaw {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self, ModelError> {
        let check = |name: &str, ok: bool, v: f64| {
            if ok {
                Ok(())
            } else {
                Err(ModelError::InvariantViolation {
                    field: format!("law.{name}"),
                    detail: format!("got {v}"),
                })
            }
        };
        check("alpha", alpha.is_finite() && alpha > 0.0, alpha)?;
        check("beta", beta.is_finite() && beta > 0.0, beta)?;
        check("delta", delta.is_finite() && delta >= 0.0, delta)?;
        Ok(Self { alpha, beta, delta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Error at total data volume `d`. No domain check; callers guard `d > 0`.
    #[inline]
    pub fn error_at(&self, d: f64) -> f64 {
        self.alpha * d.powf(-self.beta) - self.delta
    }
}

impl TryFrom<RawScalingLaw> for ScalingLaw {
    type Error = ModelError;

    fn try_from(raw: RawScalingLaw) -> Result<Self, Self::Error> {
        ScalingLaw::new(raw.alpha, raw.beta, raw.delta)
    }
}

impl From<ScalingLaw> for RawScalingLaw {
    fn from(law: ScalingLaw) -> Self {
        RawScalingLaw {
            alpha: law.alpha,
            beta: law.beta,
            delta: law.delta,
        }
    }
}

/// One silo.
///
/// `eta` multiplies the mixed (local + generated) training volume and `mu`
/// multiplies the generated volume in the energy model. `f` is stored as the
/// raw sampled numeral (1..2), so `kappa * f^2` is a composite per-cycle
/// energy coefficient in model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Organization {
    pub id: usize,
    pub d_loc: u64,
    pub f: f64,
    pub kappa: f64,
    pub eta: f64,
    pub mu: f64,
    pub c_cmp: f64,
    pub psi: f64,
    pub law: ScalingLaw,
}

/// Cycles per sample used when a config does not say otherwise.
pub const DEFAULT_WORKLOAD_CYCLES: f64 = 1e4;
/// 0.3438 currency per kWh expressed per joule.
pub const DEFAULT_C_CMP: f64 = 0.3438 / 3.6e6;

/// Pairwise competition structure. `gamma[n][m]` is the intensity org `n`
/// faces from `m`; the matrix need not be symmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Market {
    pub gamma: Vec<Vec<f64>>,
    pub xi: f64,
    pub phi: Vec<f64>,
}

impl Market {
    pub fn is_symmetric(&self) -> bool {
        let n = self.gamma.len();
        (0..n).all(|i| (0..n).all(|j| self.gamma[i][j] == self.gamma[j][i]))
    }

    /// Mean of the off-diagonal intensities (0 for a single organization).
    pub fn mean_gamma(&self) -> f64 {
        let n = self.gamma.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for (i, row) in self.gamma.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                if i != j {
                    sum += g;
                }
            }
        }
        sum / (n * (n - 1)) as f64
    }
}

/// How the pre-training global error is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eps0Mode {
    /// Global error of the all-`d_min` profile.
    AtZeroGeneration,
    Fixed(f64),
}

/// Payoff transfer rule and how budget balance is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PayoffMode {
    /// `xi * gamma[n][m] * mc_n`; budget balance is reported, not enforced.
    #[default]
    LiteralReportOnly,
    /// `xi * gamma[n][m] * (mc_n - mc_m)`; balanced whenever gamma is symmetric.
    AntisymmetricNetTransfer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyParams {
    pub varrho: f64,
    pub c0: f64,
    pub eps0_mode: Eps0Mode,
    pub bb_mode: PayoffMode,
}

impl Default for EconomyParams {
    fn default() -> Self {
        Self {
            varrho: 20.0,
            c0: 0.0,
            eps0_mode: Eps0Mode::AtZeroGeneration,
            bb_mode: PayoffMode::LiteralReportOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyBounds {
    pub d_min: u64,
    pub d_max: u64,
}

impl StrategyBounds {
    pub fn lo(&self) -> f64 {
        self.d_min as f64
    }

    pub fn hi(&self) -> f64 {
        self.d_max as f64
    }

    pub fn clip(&self, d: f64) -> f64 {
        d.clamp(self.lo(), self.hi())
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.lo() && d <= self.hi()
    }
}

/// A complete game instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub organizations: Vec<Organization>,
    pub market: Market,
    pub economy: EconomyParams,
    pub bounds: StrategyBounds,
    pub seed: u64,
}

/// Real-relaxed generation amounts, one per organization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrategyProfile {
    pub d_gen: Vec<f64>,
}

impl StrategyProfile {
    pub fn new(d_gen: Vec<f64>) -> Self {
        Self { d_gen }
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self {
            d_gen: vec![value; n],
        }
    }

    pub fn len(&self) -> usize {
        self.d_gen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_gen.is_empty()
    }

    /// Copy with entry `n` replaced.
    pub fn with(&self, n: usize, value: f64) -> Self {
        let mut d_gen = self.d_gen.clone();
        d_gen[n] = value;
        Self { d_gen }
    }

    pub fn mean(&self) -> f64 {
        if self.d_gen.is_empty() {
            0.0
        } else {
            self.d_gen.iter().sum::<f64>() / self.d_gen.len() as f64
        }
    }

    pub fn within(&self, bounds: &StrategyBounds) -> bool {
        self.d_gen.iter().all(|&d| bounds.contains(d))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("invariant violated for {field}: {detail}")]
    InvariantViolation { field: String, detail: String },
    #[error("organization {n} has non-negative potential weight z = {z}")]
    NonNegativeZWeight { n: usize, z: f64 },
}

/// Every violation found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ModelError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation error(s)", self.0.len())?;
        for e in &self.0 {
            write!(f, "\n  - {e}")?;
        }
        Ok(())
    }
}

fn violation(field: impl Into<String>, detail: impl Into<String>) -> ModelError {
    ModelError::InvariantViolation {
        field: field.into(),
        detail: detail.into(),
    }
}

/// Checks every type invariant and the sign of each potential weight.
/// Collects all violations instead of stopping at the first.
pub fn validate_scenario(s: &Scenario) -> Result<(), ValidationErrors> {
    let mut errs = Vec::new();
    let n = s.organizations.len();
    if n == 0 {
        errs.push(violation("organizations", "at least one organization required"));
    }

    for (i, org) in s.organizations.iter().enumerate() {
        if org.id != i {
            errs.push(violation(
                format!("organizations[{i}].id"),
                format!("expected {i}, got {}", org.id),
            ));
        }
        for (name, v) in [
            ("f", org.f),
            ("kappa", org.kappa),
            ("eta", org.eta),
            ("mu", org.mu),
            ("c_cmp", org.c_cmp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(violation(
                    format!("organizations[{i}].{name}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        if !(org.psi.is_finite() && org.psi >= 0.0) {
            errs.push(violation(
                format!("organizations[{i}].psi"),
                format!("must be non-negative, got {}", org.psi),
            ));
        }
    }

    let m = &s.market;
    if m.gamma.len() != n {
        errs.push(ModelError::DimensionMismatch {
            what: "market.gamma rows".into(),
            expected: n,
            found: m.gamma.len(),
        });
    }
    for (i, row) in m.gamma.iter().enumerate() {
        if row.len() != n {
            errs.push(ModelError::DimensionMismatch {
                what: format!("market.gamma[{i}]"),
                expected: n,
                found: row.len(),
            });
        }
        for (j, &g) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&g) {
                errs.push(violation(
                    format!("market.gamma[{i}][{j}]"),
                    format!("must lie in [0, 1], got {g}"),
                ));
            } else if i == j && g != 0.0 {
                errs.push(violation(
                    format!("market.gamma[{i}][{i}]"),
                    format!("diagonal must be 0, got {g}"),
                ));
            }
        }
    }
    if m.phi.len() != n {
        errs.push(ModelError::DimensionMismatch {
            what: "market.phi".into(),
            expected: n,
            found: m.phi.len(),
        });
    }
    for (i, &p) in m.phi.iter().enumerate() {
        if !(p.is_finite() && p > 0.0) {
            errs.push(violation(
                format!("market.phi[{i}]"),
                format!("must be positive, got {p}"),
            ));
        }
    }
    if !(m.xi.is_finite() && m.xi >= 0.0) {
        errs.push(violation("market.xi", format!("must be non-negative, got {}", m.xi)));
    }
    if let Some(min_phi) = m.phi.iter().copied().reduce(f64::min) {
        if m.xi > min_phi {
            errs.push(violation(
                "market.xi",
                format!("must not exceed min phi = {min_phi}, got {}", m.xi),
            ));
        }
    }

    let e = &s.economy;
    if !(e.varrho.is_finite() && e.varrho > 0.0) {
        errs.push(violation("economy.varrho", format!("must be positive, got {}", e.varrho)));
    }
    if !(e.c0.is_finite() && e.c0 >= 0.0) {
        errs.push(violation("economy.c0", format!("must be non-negative, got {}", e.c0)));
    }
    if let Eps0Mode::Fixed(v) = e.eps0_mode {
        if !(v > 0.0 && v <= 1.0) {
            errs.push(violation("economy.eps0_mode", format!("fixed value must lie in (0, 1], got {v}")));
        }
    }

    if s.bounds.d_min > s.bounds.d_max {
        errs.push(violation(
            "bounds",
            format!("d_min {} exceeds d_max {}", s.bounds.d_min, s.bounds.d_max),
        ));
    }

    // z weights are only meaningful once the market has the right shape
    let shape_ok = m.gamma.len() == n && m.gamma.iter().all(|r| r.len() == n) && m.phi.len() == n;
    if shape_ok {
        for i in 0..n {
            let z = s.z_weight(i);
            if !(z < 0.0) {
                errs.push(ModelError::NonNegativeZWeight { n: i, z });
            }
        }
    }

    if errs.is_empty() {
        Ok(())
    } else {
        Err(ValidationErrors(errs))
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(#[from] ValidationErrors),
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.organizations.len()
    }

    /// `sum_m gamma[n][m] (xi - phi[m]) - psi[n]`; the diagonal is skipped.
    pub fn z_weight(&self, n: usize) -> f64 {
        let row = &self.market.gamma[n];
        let mut acc = 0.0;
        for (m, (&g, &phi)) in row.iter().zip(&self.market.phi).enumerate() {
            if m != n {
                acc += g * (self.market.xi - phi);
            }
        }
        acc - self.organizations[n].psi
    }

    pub fn validated(self) -> Result<Self, ValidationErrors> {
        validate_scenario(&self)?;
        Ok(self)
    }

    /// Strict parse (unknown keys rejected) followed by validation.
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let s: Scenario = serde_json::from_str(text)?;
        Ok(s.validated()?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ConfigError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n").map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn all_min(&self) -> StrategyProfile {
        StrategyProfile::uniform(self.n(), self.bounds.lo())
    }

    pub fn all_max(&self) -> StrategyProfile {
        StrategyProfile::uniform(self.n(), self.bounds.hi())
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn single_org_without_competition_is_valid() {
        let s = single(700.0);
        assert!(validate_scenario(&s).is_ok());
        assert_eq!(s.z_weight(0), -700.0);
    }

    #[test]
    fn gamma_out_of_range_is_reported() {
        let mut s = symmetric_pair(0.5);
        s.market.gamma[0][1] = 1.2;
        let errs = validate_scenario(&s).unwrap_err().0;
        assert!(errs.iter().any(|e| matches!(
            e,
            ModelError::InvariantViolation { field, .. } if field == "market.gamma[0][1]"
        )));
    }

    #[test]
    fn all_violations_are_collected() {
        let mut s = symmetric_pair(0.5);
        s.market.gamma[1][1] = 0.3;
        s.market.xi = 400.0;
        s.organizations[0].kappa = -1.0;
        s.bounds = StrategyBounds { d_min: 10, d_max: 5 };
        let errs = validate_scenario(&s).unwrap_err().0;
        assert!(errs.len() >= 4, "{errs:?}");
    }

    #[test]
    fn dimension_mismatch() {
        let mut s = symmetric_pair(0.5);
        s.market.phi.pop();
        let errs = validate_scenario(&s).unwrap_err().0;
        assert!(errs.iter().any(|e| matches!(e, ModelError::DimensionMismatch { .. })));
    }

    #[test]
    fn degenerate_stakeless_org_rejected() {
        let mut s = single(0.0);
        s.market.phi = vec![250.0];
        let errs = validate_scenario(&s).unwrap_err().0;
        assert_eq!(errs, vec![ModelError::NonNegativeZWeight { n: 0, z: 0.0 }]);
    }

    #[test]
    fn scaling_law_rejects_bad_parameters() {
        assert!(ScalingLaw::new(0.0, 1.0, 0.0).is_err());
        assert!(ScalingLaw::new(1.0, -0.1, 0.0).is_err());
        assert!(ScalingLaw::new(1.0, 1.0, -0.01).is_err());
        assert!(ScalingLaw::new(1.0, 1.0, 0.0).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let s = symmetric_pair(0.3);
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json_string()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(matches!(
            Scenario::from_json_str(&v.to_string()),
            Err(ConfigError::Parse(_))
        ));
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json_string()).unwrap();
        v["organizations"][0]["law"]["gamma"] = serde_json::json!(1);
        assert!(Scenario::from_json_str(&v.to_string()).is_err());
    }

    #[test]
    fn eps0_and_mode_wire_format() {
        let mut s = single(700.0);
        s.economy.eps0_mode = Eps0Mode::Fixed(0.9);
        s.economy.bb_mode = PayoffMode::AntisymmetricNetTransfer;
        let text = s.to_json_string();
        assert!(text.contains("\"fixed\": 0.9"));
        assert!(text.contains("\"antisymmetric_net_transfer\""));
        assert_eq!(Scenario::from_json_str(&text).unwrap(), s);
    }

    #[test]
    fn mean_gamma_ignores_diagonal() {
        let s = symmetric_pair(0.4);
        assert_eq!(s.market.mean_gamma(), 0.4);
        assert!(s.market.is_symmetric());
    }
}
