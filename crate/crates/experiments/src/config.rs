//! Experiment configuration: a flat TOML table with a fixed schema.
//!
//! Files are parsed with unknown keys rejected, then `key=value` overrides
//! are applied on top (values use TOML syntax, bare words are read as
//! strings). The resolved configuration is re-serialized and its SHA-256
//! identifies the run in every output row.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use kshrink::hsic::StatisticKind;
use kshrink::kernels::{median_heuristic, KernelSpec, SampleSet};
use kshrink::synthdata::DistributionSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RiskCurve,
    PowerCurve,
    Scatter,
    RatioBars,
    Spectra,
    SingularStudy,
    OracleCheck,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RiskCurve => "risk_curve",
            ExperimentKind::PowerCurve => "power_curve",
            ExperimentKind::Scatter => "scatter",
            ExperimentKind::RatioBars => "ratio_bars",
            ExperimentKind::Spectra => "spectra",
            ExperimentKind::SingularStudy => "singular_study",
            ExperimentKind::OracleCheck => "oracle_check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    HollowGaussian,
    Sinusoid,
    FourGaussians,
    Grid2d,
    GaussianNd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial,
    Gaussian,
    Laplace,
}

/// Bandwidth for Gaussian and Laplace kernels: a number, or `"median"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "BandwidthRepr", into = "BandwidthRepr")]
pub enum Bandwidth {
    #[default]
    Median,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BandwidthRepr {
    Number(f64),
    Word(String),
}

impl TryFrom<BandwidthRepr> for Bandwidth {
    type Error = String;

    fn try_from(r: BandwidthRepr) -> Result<Self, String> {
        match r {
            BandwidthRepr::Number(v) if v > 0.0 && v.is_finite() => Ok(Bandwidth::Fixed(v)),
            BandwidthRepr::Number(v) => Err(format!("bandwidth must be positive, got {v}")),
            BandwidthRepr::Word(w) if w == "median" => Ok(Bandwidth::Median),
            BandwidthRepr::Word(w) => Err(format!("bandwidth must be a number or \"median\", got {w:?}")),
        }
    }
}

impl From<Bandwidth> for BandwidthRepr {
    fn from(b: Bandwidth) -> Self {
        match b {
            Bandwidth::Median => BandwidthRepr::Word("median".into()),
            Bandwidth::Fixed(v) => BandwidthRepr::Number(v),
        }
    }
}

/// Parameter varied across sweep points. `N` sweeps over the `n` list alone;
/// any other parameter is crossed with every `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    #[default]
    N,
    Radius,
    Theta,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub distribution: DistributionKind,
    /// Break all dependence by permuting y (exact null data).
    #[serde(default)]
    pub independent: bool,
    #[serde(default = "defaults::radius")]
    pub radius: f64,
    #[serde(default = "defaults::frequency")]
    pub frequency: f64,
    #[serde(default = "defaults::amplitude")]
    pub amplitude: f64,
    /// Tilt of the four-Gaussian configuration, in radians.
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "defaults::center")]
    pub center: f64,
    #[serde(default = "defaults::spread")]
    pub spread: f64,
    #[serde(default = "defaults::cells")]
    pub cells: usize,
    #[serde(default = "defaults::dim")]
    pub dim: usize,

    pub kernel: KernelKind,
    /// Kernel on y; defaults to `kernel`.
    #[serde(default)]
    pub kernel_y: Option<KernelKind>,
    #[serde(default)]
    pub bandwidth: Bandwidth,
    #[serde(default = "defaults::degree")]
    pub degree: u32,
    #[serde(default = "defaults::offset")]
    pub offset: f64,

    pub n: Vec<usize>,
    #[serde(default)]
    pub sweep: SweepParam,
    #[serde(default)]
    pub sweep_values: Vec<f64>,
    #[serde(default = "defaults::repetitions")]
    pub repetitions: usize,
    #[serde(default = "defaults::permutations")]
    pub permutations: usize,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::proxy_n")]
    pub proxy_n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::lambda_grid_points")]
    pub lambda_grid_points: usize,
    /// Number of singular values reported by `spectra`.
    #[serde(default = "defaults::top_k")]
    pub top_k: usize,
    /// Shrunk statistic plotted against plain HSIC by `scatter`.
    #[serde(default = "defaults::statistic")]
    pub statistic: StatisticKind,
}

mod defaults {
    use kshrink::hsic::StatisticKind;

    pub fn radius() -> f64 {
        1.0
    }
    pub fn frequency() -> f64 {
        1.0
    }
    pub fn amplitude() -> f64 {
        1.0
    }
    pub fn center() -> f64 {
        2.0
    }
    pub fn spread() -> f64 {
        0.5
    }
    pub fn cells() -> usize {
        4
    }
    pub fn dim() -> usize {
        2
    }
    pub fn degree() -> u32 {
        2
    }
    pub fn offset() -> f64 {
        1.0
    }
    pub fn repetitions() -> usize {
        100
    }
    pub fn permutations() -> usize {
        200
    }
    pub fn alpha() -> f64 {
        0.05
    }
    pub fn proxy_n() -> usize {
        2000
    }
    pub fn lambda_grid_points() -> usize {
        30
    }
    pub fn top_k() -> usize {
        10
    }
    pub fn statistic() -> StatisticKind {
        StatisticKind::HsicLw
    }
}

/// One cell of the sweep: a sample size and, unless sweeping `n`, a parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    /// Index of the parameter value; cells sharing it share a distribution.
    pub param_index: usize,
    pub n: usize,
    pub value: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| AppError::Input(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Parses a config file (if any) and applies `key=value` overrides.
    pub fn resolve(base: Option<&str>, overrides: &[String]) -> AppResult<Self> {
        let mut table: toml::Table = match base {
            Some(text) => text.parse().map_err(|e| AppError::Input(format!("invalid config: {e}")))?,
            None => toml::Table::new(),
        };
        for item in overrides {
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| AppError::Input(format!("override {item:?} is not of the form key=value")))?;
            table.insert(key.trim().to_string(), parse_value(raw.trim())?);
        }
        let cfg: ExperimentConfig =
            table.try_into().map_err(|e: toml::de::Error| AppError::Input(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> AppResult<()> {
        let bad = |msg: String| Err(AppError::Input(msg));
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            return bad("n must list sample sizes >= 2".into());
        }
        if self.repetitions < 1 {
            return bad("repetitions must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.uses_permutations() && (self.permutations as f64) < 1.0 / self.alpha - 1.0 {
            return bad(format!(
                "permutations = {} cannot reach level alpha = {} (need at least {})",
                self.permutations,
                self.alpha,
                (1.0 / self.alpha - 1.0).ceil()
            ));
        }
        if self.uses_proxy() && self.proxy_n <= self.max_n() {
            return bad(format!("proxy_n = {} must exceed the largest n = {}", self.proxy_n, self.max_n()));
        }
        if self.lambda_grid_points < 1 {
            return bad("lambda_grid_points must be >= 1".into());
        }
        if self.top_k < 1 {
            return bad("top_k must be >= 1".into());
        }
        match self.sweep {
            SweepParam::N if !self.sweep_values.is_empty() => {
                return bad("sweep_values must be empty when sweeping n".into());
            }
            SweepParam::N => {}
            _ if self.sweep_values.is_empty() => return bad("sweep_values is required for this sweep".into()),
            _ => {}
        }
        let needs_sweep = matches!(
            (self.sweep, self.distribution),
            (SweepParam::Radius, DistributionKind::HollowGaussian)
                | (SweepParam::Theta, DistributionKind::FourGaussians)
                | (SweepParam::Frequency, DistributionKind::Sinusoid | DistributionKind::Grid2d)
                | (SweepParam::N, _)
        );
        if !needs_sweep {
            return bad(format!("sweep {:?} does not apply to distribution {:?}", self.sweep, self.distribution));
        }
        if self.experiment == ExperimentKind::Scatter && !self.statistic.is_shrunk() {
            return bad("scatter needs a shrunk statistic (hsic_lw, hsic_s or hsic_f)".into());
        }
        if self.experiment == ExperimentKind::OracleCheck && self.repetitions < 100 {
            return bad("oracle_check needs at least 100 repetitions".into());
        }
        for p in self.sweep_points() {
            self.distribution_at(p).validate().map_err(AppError::from)?;
        }
        self.check_polynomial()?;
        Ok(())
    }

    fn check_polynomial(&self) -> AppResult<()> {
        if self.degree < 1 {
            return Err(AppError::Input("polynomial degree must be >= 1".into()));
        }
        if !(self.offset >= 0.0 && self.offset.is_finite()) {
            return Err(AppError::Input("polynomial offset must be >= 0".into()));
        }
        Ok(())
    }

    fn uses_permutations(&self) -> bool {
        matches!(self.experiment, ExperimentKind::PowerCurve | ExperimentKind::Scatter | ExperimentKind::RatioBars)
    }

    fn uses_proxy(&self) -> bool {
        matches!(
            self.experiment,
            ExperimentKind::RiskCurve | ExperimentKind::Spectra | ExperimentKind::SingularStudy | ExperimentKind::OracleCheck
        )
    }

    pub fn max_n(&self) -> usize {
        self.n.iter().copied().max().unwrap_or(0)
    }

    /// Sweep cells in order: parameter values outermost, then sample sizes.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let values: Vec<Option<f64>> = match self.sweep {
            SweepParam::N => vec![None],
            _ => self.sweep_values.iter().copied().map(Some).collect(),
        };
        let mut out = Vec::new();
        for (param_index, v) in values.into_iter().enumerate() {
            for &n in &self.n {
                out.push(SweepPoint { index: out.len(), param_index, n, value: v.unwrap_or(n as f64) });
            }
        }
        out
    }

    /// Distribution with the sweep parameter substituted.
    pub fn distribution_at(&self, p: SweepPoint) -> DistributionSpec {
        let v = p.value;
        let pick = |param: SweepParam, base: f64| if self.sweep == param { v } else { base };
        let base = match self.distribution {
            DistributionKind::HollowGaussian => DistributionSpec::HollowGaussian { radius: pick(SweepParam::Radius, self.radius) },
            DistributionKind::Sinusoid => DistributionSpec::Sinusoid {
                frequency: pick(SweepParam::Frequency, self.frequency),
                amplitude: self.amplitude,
            },
            DistributionKind::FourGaussians => DistributionSpec::FourGaussians {
                theta: pick(SweepParam::Theta, self.theta),
                center: self.center,
                spread: self.spread,
            },
            DistributionKind::Grid2d => DistributionSpec::Grid2d {
                frequency: pick(SweepParam::Frequency, self.frequency),
                cells: self.cells,
                spread: self.spread,
            },
            DistributionKind::GaussianNd => DistributionSpec::GaussianNd { dim: self.dim },
        };
        if self.independent {
            DistributionSpec::IndependentProduct { base: Box::new(base) }
        } else {
            base
        }
    }

    /// Kernel pair for samples `x`, `y`; median bandwidths are taken from these samples.
    pub fn kernels_for(&self, x: &SampleSet, y: &SampleSet) -> AppResult<(KernelSpec, KernelSpec)> {
        Ok((
            self.kernel_spec(self.kernel, x)?,
            self.kernel_spec(self.kernel_y.unwrap_or(self.kernel), y)?,
        ))
    }

    fn kernel_spec(&self, kind: KernelKind, s: &SampleSet) -> AppResult<KernelSpec> {
        build_kernel(kind, self.bandwidth, self.degree, self.offset, s)
    }

    /// Canonical TOML text of the effective configuration.
    pub fn resolved_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.resolved_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Kernel of the given kind; a median bandwidth is computed on `s`.
pub fn build_kernel(kind: KernelKind, bandwidth: Bandwidth, degree: u32, offset: f64, s: &SampleSet) -> AppResult<KernelSpec> {
    let bw = || -> AppResult<f64> {
        match bandwidth {
            Bandwidth::Fixed(v) => Ok(v),
            Bandwidth::Median => Ok(median_heuristic(s)?),
        }
    };
    Ok(match kind {
        KernelKind::Linear => KernelSpec::Linear,
        KernelKind::Polynomial => KernelSpec::polynomial(degree, offset)?,
        KernelKind::Gaussian => KernelSpec::gaussian(bw()?)?,
        KernelKind::Laplace => KernelSpec::laplace(bw()?)?,
    })
}

/// Reads an override value: TOML syntax first, bare words as strings.
/// `pi` multiples such as `pi/16` or `3*pi/32` are accepted for angles.
fn parse_value(raw: &str) -> AppResult<toml::Value> {
    if let Ok(table) = format!("v = {raw}").parse::<toml::Table>() {
        if let Some(v) = table.get("v") {
            return Ok(v.clone());
        }
    }
    if let Some(v) = parse_pi_expression(raw) {
        return Ok(toml::Value::Float(v));
    }
    if raw.starts_with('[') {
        let items: AppResult<Vec<toml::Value>> = raw
            .trim_start_matches('[')
            .trim_end_matches(']')
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_value(s.trim()))
            .collect();
        return Ok(toml::Value::Array(items?));
    }
    Ok(toml::Value::String(raw.to_string()))
}

pub fn parse_pi_expression(raw: &str) -> Option<f64> {
    let s = raw.replace(' ', "");
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let coeff = match num.as_str() {
        "pi" => 1.0,
        other => other.strip_suffix("*pi")?.parse::<f64>().ok()?,
    };
    Some(coeff * PI / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "risk_curve"
distribution = "hollow_gaussian"
kernel = "gaussian"
n = [20, 50]
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.permutations, 200);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.bandwidth, Bandwidth::Median);
        assert_eq!(c.degree, 2);
        assert_eq!(c.sweep_points().len(), 2);
        assert_eq!(c.sweep_points()[1].value, 50.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml(&format!("{BASE}\nbogus = 3\n")).unwrap_err();
        assert!(matches!(err, AppError::Input(_)));
    }

    #[test]
    fn overrides_apply_and_change_hash() {
        let a = ExperimentConfig::resolve(Some(BASE), &[]).unwrap();
        let b = ExperimentConfig::resolve(Some(BASE), &["seed=9".into(), "bandwidth=0.7".into()]).unwrap();
        assert_eq!(b.seed, 9);
        assert_eq!(b.bandwidth, Bandwidth::Fixed(0.7));
        assert_ne!(a.hash(), b.hash());
        let c = ExperimentConfig::from_toml(&b.resolved_text()).unwrap();
        assert_eq!(b, c);
        assert_eq!(b.hash(), c.hash());
    }

    #[test]
    fn angle_and_list_overrides() {
        let c = ExperimentConfig::resolve(
            Some(BASE),
            &[
                "distribution=four_gaussians".into(),
                "experiment=power_curve".into(),
                "theta=pi/16".into(),
                "sweep=theta".into(),
                "sweep_values=[0, 3*pi/32]".into(),
            ],
        )
        .unwrap();
        assert!((c.theta - PI / 16.0).abs() < 1e-15);
        assert_eq!(c.sweep_values.len(), 2);
        assert!((c.sweep_values[1] - 3.0 * PI / 32.0).abs() < 1e-15);
        assert_eq!(c.sweep_points().len(), 4);
    }

    #[test]
    fn invariants_are_enforced() {
        let power = BASE.replace("risk_curve", "power_curve");
        assert!(ExperimentConfig::resolve(Some(&power), &["permutations=18".into()]).is_err());
        assert!(ExperimentConfig::resolve(Some(&power), &["permutations=19".into()]).is_ok());
        assert!(ExperimentConfig::resolve(Some(BASE), &["proxy_n=50".into()]).is_err());
        assert!(ExperimentConfig::resolve(Some(BASE), &["bandwidth=-1".into()]).is_err());
        assert!(ExperimentConfig::resolve(Some(BASE), &["sweep=theta".into(), "sweep_values=[0.1]".into()]).is_err());
        assert!(ExperimentConfig::resolve(Some(BASE), &["n=[1]".into()]).is_err());
        assert!(ExperimentConfig::resolve(Some(BASE), &["nonsense".into()]).is_err());
    }
}
