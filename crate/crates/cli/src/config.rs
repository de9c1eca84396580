//! Sweep configuration: a JSON tree, dotted `key=value` overrides, and named
//! variants that patch the base tree.

use std::fmt;

use anyhow::{bail, Context, Result};
use cvtele::{CoherentCutoff, InputEnsemble, InputFamily, ResourceFamily};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceName {
    Tmsv,
    Pa,
    Ps,
}

impl ResourceName {
    pub fn family(self) -> ResourceFamily {
        match self {
            ResourceName::Tmsv => ResourceFamily::Tmsv,
            ResourceName::Pa => ResourceFamily::PhotonAdded,
            ResourceName::Ps => ResourceFamily::PhotonSubtracted,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.family().as_str()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionName {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputName {
    Coherent,
    Squeezed,
    SqueezedCoherent,
}

impl From<InputName> for InputFamily {
    fn from(n: InputName) -> Self {
        match n {
            InputName::Coherent => InputFamily::Coherent,
            InputName::Squeezed => InputFamily::Squeezed,
            InputName::SqueezedCoherent => InputFamily::SqueezedCoherent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffName {
    /// `b ≤ sinh L`
    Squeezing,
    /// `b ≤ L`
    Displacement,
}

impl From<CutoffName> for CoherentCutoff {
    fn from(n: CutoffName) -> Self {
        match n {
            CutoffName::Squeezing => CoherentCutoff::SqueezingEquivalent,
            CutoffName::Displacement => CoherentCutoff::DisplacementRadius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub kind: DistributionName,
    pub family: InputName,
    /// Energy cutoff `L` of uniform ensembles.
    #[serde(default, rename = "L")]
    pub cutoff: Option<f64>,
    #[serde(default)]
    pub coherent_cutoff: Option<CutoffName>,
    #[serde(default)]
    pub sigma_s: Option<f64>,
    #[serde(default)]
    pub sigma_c: Option<f64>,
}

impl EnsembleConfig {
    pub fn build(&self) -> cvtele::Result<InputEnsemble> {
        let family = InputFamily::from(self.family);
        match self.kind {
            DistributionName::Uniform => {
                let cutoff = self.cutoff.unwrap_or(f64::NAN);
                let ens = InputEnsemble::uniform(family, cutoff)?;
                Ok(match self.coherent_cutoff {
                    Some(c) => ens.with_coherent_cutoff(c.into()),
                    None => ens,
                })
            }
            DistributionName::Gaussian => InputEnsemble::gaussian(family, self.sigma_s, self.sigma_c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "r")]
    Squeezing,
    #[serde(rename = "L")]
    Cutoff,
    #[serde(rename = "sigma_s")]
    SigmaS,
    #[serde(rename = "sigma_c")]
    SigmaC,
    #[serde(rename = "R")]
    Reflectivity,
    #[serde(rename = "tau")]
    Tau,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::Squeezing => "r",
            AxisName::Cutoff => "L",
            AxisName::SigmaS => "sigma_s",
            AxisName::SigmaC => "sigma_c",
            AxisName::Reflectivity => "R",
            AxisName::Tau => "tau",
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: AxisName,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub n_points: Option<usize>,
    /// Explicit grid; takes precedence over `start`/`stop`/`n_points`.
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl AxisConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        match (&self.values, self.start, self.stop, self.n_points) {
            (Some(v), ..) => {
                if v.is_empty() {
                    bail!("axis.values is empty");
                }
                Ok(v.clone())
            }
            (None, Some(a), Some(b), Some(n)) => {
                if n < 2 {
                    bail!("axis.n_points must be at least 2, got {n}");
                }
                Ok((0..n)
                    .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
                    .collect())
            }
            _ => bail!("axis needs either `values` or all of `start`, `stop`, `n_points`"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizeKeyword {
    Optimize,
}

/// `"optimize"` or a fixed gain in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainMode {
    Optimize(OptimizeKeyword),
    Fixed(f64),
}

impl Default for GainMode {
    fn default() -> Self {
        GainMode::Optimize(OptimizeKeyword::Optimize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rel_tol: f64,
    pub max_evals: u64,
    pub gain_grid_points: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel_tol: 1e-7,
            max_evals: 10_000_000,
            gain_grid_points: 101,
        }
    }
}

impl Tolerances {
    pub fn moment_options(&self) -> cvtele::MomentOptions {
        let mut o = cvtele::MomentOptions::default();
        o.quadrature.rel_tol = self.rel_tol;
        o.quadrature.max_evals = self.max_evals;
        o.gain_search.grid_points = self.gain_grid_points;
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McCheck {
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for McCheck {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    /// Dotted keys patched into the base configuration.
    #[serde(default)]
    pub set: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub description: Option<String>,
    /// Qualitative property the output is expected to show.
    #[serde(default)]
    pub assertion: Option<String>,
    #[serde(default = "all_resources")]
    pub resources: Vec<ResourceName>,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default, rename = "R")]
    pub reflectivity: f64,
    #[serde(default)]
    pub gain: GainMode,
    #[serde(default)]
    pub axis: Option<AxisConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub mc_check: Option<McCheck>,
    /// Extra horizontal reference fidelity, reported alongside the bounds.
    #[serde(default)]
    pub reference_line: Option<f64>,
    /// Advantage requires `F - err_F > bound + advantage_margin`.
    #[serde(default)]
    pub advantage_margin: f64,
    #[serde(default)]
    pub variants: Vec<Variant>,
}

fn all_resources() -> Vec<ResourceName> {
    vec![ResourceName::Tmsv, ResourceName::Pa, ResourceName::Ps]
}

/// A configuration ready to run: the effective JSON tree (used for hashing
/// and provenance) and one resolved config per variant.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub tree: Value,
    pub runs: Vec<(String, SweepConfig)>,
}

/// Parses `value` as JSON, falling back to a plain string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `path` (dot-separated) in `tree`, creating objects as needed.
pub fn set_dotted(tree: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("malformed key `{path}`");
    }
    for (i, part) in parts.iter().enumerate() {
        let obj = match node {
            Value::Object(m) => m,
            Value::Null => {
                *node = Value::Object(Map::new());
                node.as_object_mut().expect("just created")
            }
            _ => bail!("cannot set `{path}`: `{}` is not an object", parts[..i].join(".")),
        };
        if i == parts.len() - 1 {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        node = obj.entry((*part).to_string()).or_insert(Value::Null);
    }
    unreachable!("loop returns on the last segment")
}

/// Applies `key=value` overrides.
pub fn apply_overrides(tree: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .with_context(|| format!("override `{item}` is not of the form key=value"))?;
        set_dotted(tree, key.trim(), parse_value(raw.trim()))?;
    }
    Ok(())
}

fn deserialize(tree: &Value, context: &str) -> Result<SweepConfig> {
    let cfg: SweepConfig = serde_path_to_error::deserialize(tree).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("invalid configuration{context} at `{path}`: {}", e.into_inner())
    })?;
    Ok(cfg)
}

/// Builds the resolved runs from an effective tree.
pub fn resolve(tree: Value) -> Result<LoadedConfig> {
    let base = deserialize(&tree, "")?;
    let mut runs = Vec::new();
    if base.variants.is_empty() {
        validate(&base, "")?;
        runs.push((String::new(), base));
    } else {
        let mut stripped = tree.clone();
        if let Value::Object(m) = &mut stripped {
            m.remove("variants");
        }
        for (i, variant) in base.variants.iter().enumerate() {
            let mut t = stripped.clone();
            for (k, v) in &variant.set {
                set_dotted(&mut t, k, v.clone())?;
            }
            let context = format!(" (variant {i} `{}`)", variant.label);
            let cfg = deserialize(&t, &context)?;
            validate(&cfg, &context)?;
            runs.push((variant.label.clone(), cfg));
        }
    }
    Ok(LoadedConfig { tree, runs })
}

/// Reads a file (or starts from an empty tree), applies overrides and
/// resolves variants.
pub fn load(path: Option<&std::path::Path>, overrides: &[String]) -> Result<LoadedConfig> {
    let mut tree = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Value::Object(Map::new()),
    };
    apply_overrides(&mut tree, overrides)?;
    resolve(tree)
}

fn validate(cfg: &SweepConfig, context: &str) -> Result<()> {
    if let Some(axis) = &cfg.axis {
        axis.grid().with_context(|| format!("invalid configuration{context} at `axis`"))?;
    }
    if let GainMode::Fixed(g) = cfg.gain {
        if !(0.0..=1.0).contains(&g) {
            bail!("invalid configuration{context} at `gain`: {g} is not in [0, 1]");
        }
    }
    if !(cfg.tolerances.rel_tol > 0.0) {
        bail!("invalid configuration{context} at `tolerances.rel_tol`: must be positive");
    }
    if cfg.tolerances.gain_grid_points < 2 {
        bail!("invalid configuration{context} at `tolerances.gain_grid_points`: must be at least 2");
    }
    if let Some(mc) = cfg.mc_check {
        if mc.n_samples < cvtele::oracle::MIN_SAMPLES {
            bail!(
                "invalid configuration{context} at `mc_check.n_samples`: need at least {}",
                cvtele::oracle::MIN_SAMPLES
            );
        }
    }
    Ok(())
}
