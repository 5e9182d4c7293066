//! Versioned JSON run configuration and `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub dataset: Option<DatasetConfig>,
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub variants: Vec<VariantConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub stopping: StoppingConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationConfig {
    #[default]
    None,
    UnitL2,
}

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Libsvm {
        path: PathBuf,
        #[serde(default)]
        max_rows: Option<usize>,
    },
    /// Labels from a logistic model with random weights.
    SyntheticLogistic { n: usize, d: usize, nnz: usize, #[serde(default = "one")] signal: f64, seed: u64 },
    /// Dense Gaussian rows and a noisy linear model.
    SyntheticLeastSquares { n: usize, d: usize, #[serde(default)] noise: f64, seed: u64 },
    /// Unit rows except the first, scaled to `outlier_norm`.
    SyntheticSkewed { n: usize, d: usize, outlier_norm: f64, #[serde(default)] noise: f64, seed: u64 },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: DatasetSource,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    /// Raises the feature dimension (datasets of one family share a space).
    #[serde(default)]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossConfig {
    #[default]
    Logistic,
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerConfig {
    #[serde(default)]
    pub l1: f64,
    #[serde(default)]
    pub l2: f64,
    /// Box constraint bounds; exclusive with `l1` and `l2`.
    #[serde(default)]
    pub lo: Option<Vec<f64>>,
    #[serde(default)]
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub loss: LossConfig,
    #[serde(default)]
    pub regularizer: RegularizerConfig,
    /// Ridge term folded into every loss, making the smooth part strongly convex.
    #[serde(default)]
    pub smooth_ridge: f64,
    /// Strong convexity or growth constant, when known.
    #[serde(default)]
    pub mu: Option<f64>,
}

/// Sampling by name (`uniform-serial`, `tau-nice(10)`, `importance-serial`,
/// `importance-independent(50)`) or by explicit payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SamplingConfig {
    Directive(String),
    Explicit(ExplicitSampling),
}

/// Explicit payloads; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExplicitSampling {
    Serial { probs: Vec<f64> },
    TauNice { tau: usize },
    Independent { probs: Vec<f64> },
    Partition { groups: Vec<Vec<usize>>, probs: Vec<f64> },
    /// Either a file of `p_C i1 .. ik` lines or inline `[p_C, [i1, ..]]` pairs.
    Enumerated {
        #[serde(default)]
        file: Option<PathBuf>,
        #[serde(default)]
        support: Option<Vec<(f64, Vec<usize>)>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcrvConfig {
    #[default]
    MarginalInverse,
    SizeOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeConfig {
    #[default]
    Auto,
    SmoothStrong,
    Growth,
    GrowthMuFree,
    StrongRegularizer,
    PartitionSmooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodConfig {
    #[default]
    Saga,
    /// Deterministic proximal gradient descent; one iteration is one pass.
    ProxGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub name: String,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub bcrv: BcrvConfig,
    #[serde(default)]
    pub regime: RegimeConfig,
    /// Overrides the planned step size.
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn default_sampling() -> SamplingConfig {
    SamplingConfig::Directive("uniform-serial".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingConfig {
    #[serde(default = "default_max_passes")]
    pub max_passes: f64,
    #[serde(default)]
    pub max_iters: Option<u64>,
    /// Stop once `(P - P*)/(P(x0) - P*)` reaches this.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "one")]
    pub record_every: f64,
    /// Records wall-clock milliseconds; traces are then no longer reproducible byte for byte.
    #[serde(default)]
    pub wall_time: bool,
}

fn default_max_passes() -> f64 {
    100.0
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self { max_passes: default_max_passes(), max_iters: None, eps: None, record_every: 1.0, wall_time: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Computes `x*` by proximal gradient descent for gaps and distances.
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_reference_iters")]
    pub max_iters: u64,
    #[serde(default = "default_step_tol")]
    pub step_tol: f64,
}

fn yes() -> bool {
    true
}

fn default_reference_iters() -> u64 {
    saga_core::reference::REFERENCE_MAX_ITERS
}

fn default_step_tol() -> f64 {
    1e-14
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { enabled: true, max_iters: default_reference_iters(), step_tol: default_step_tol() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormatConfig {
    #[default]
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative to the output root (`SAGA_OUTPUT_DIR`, else the working directory).
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: TraceFormatConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("saga-out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir(), format: TraceFormatConfig::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_validate_seed")]
    pub seed: u64,
    #[serde(default = "default_states")]
    pub states: usize,
    /// Scales `beta` in the smooth contraction check; one unless probing the check itself.
    #[serde(default = "one")]
    pub beta_scale: f64,
}

fn default_validate_seed() -> u64 {
    2024
}

fn default_states() -> usize {
    50
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self { seed: default_validate_seed(), states: default_states(), beta_scale: 1.0 }
    }
}

/// Output root: `SAGA_OUTPUT_DIR` when set.
pub const OUTPUT_ENV: &str = "SAGA_OUTPUT_DIR";

impl RunConfig {
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ENV) {
            Some(root) => PathBuf::from(root).join(&self.output.dir),
            None => self.output.dir.clone(),
        }
    }
}

/// Parses a config from JSON text, applying `key=value` overrides first.
/// Keys are dotted paths (`stopping.max_passes`, `variants.0.alpha`); values
/// are JSON, or plain strings when they do not parse as JSON.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })?;
    if config.version != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "version: unsupported config version {} (expected {CONFIG_VERSION})",
            config.version
        )));
    }
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (key, raw) =
        item.split_once('=').ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert((*part).to_string(), new);
                    return Ok(());
                }
                map.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = part
                    .parse()
                    .map_err(|_| CliError::Config(format!("{key}: {part:?} is not an array index")))?;
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Config(format!("{key}: index {idx} out of range")))?;
                if last {
                    *slot = new;
                    return Ok(());
                }
                slot
            }
            _ => return Err(CliError::Config(format!("{key}: {part:?} is not inside an object or array"))),
        };
    }
    Err(CliError::Config(format!("override {item:?} has an empty key")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"version": 1}"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config(MINIMAL, &[]).unwrap();
        assert_eq!(c.seeds, vec![0]);
        assert_eq!(c.stopping.max_passes, 100.0);
        assert!(c.dataset.is_none() && c.variants.is_empty());
    }

    #[test]
    fn full_config_parses() {
        let text = r#"{
            "version": 1,
            "dataset": {"source": {"kind": "libsvm", "path": "data/a9a"}, "normalization": "unit_l2", "dim": 124},
            "problem": {"loss": "logistic", "regularizer": {"l2": 1e-5}},
            "variants": [
                {"name": "t1", "sampling": "tau-nice(1)"},
                {"name": "imp", "sampling": {"kind": "independent", "probs": [0.5, 0.5]}, "bcrv": "size_optimal"},
                {"name": "enum", "sampling": {"kind": "enumerated", "support": [[0.5, [1]], [0.5, [1, 2]]]}},
                {"name": "gd", "method": "prox_gradient"}
            ],
            "seeds": [1, 2],
            "stopping": {"max_passes": 30, "eps": 1e-6},
            "output": {"dir": "out/a9a", "format": "both"}
        }"#;
        let c = parse_config(text, &[]).unwrap();
        let ds = c.dataset.unwrap();
        assert_eq!(ds.normalization, NormalizationConfig::UnitL2);
        assert!(matches!(ds.source, DatasetSource::Libsvm { .. }));
        assert_eq!(c.variants.len(), 4);
        assert!(matches!(c.variants[1].sampling, SamplingConfig::Explicit(ExplicitSampling::Independent { .. })));
        assert_eq!(c.variants[3].method, MethodConfig::ProxGradient);
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let e = parse_config(r#"{"version": 1, "stopping": {"max_pases": 3}}"#, &[]).unwrap_err();
        let CliError::Config(msg) = e else { panic!() };
        assert!(msg.starts_with("stopping"), "{msg}");
        assert!(parse_config(r#"{"version": 1, "extra": 3}"#, &[]).is_err());
        let e = parse_config(r#"{"version": 1, "problem": {"loss": "hinge"}}"#, &[]).unwrap_err();
        assert!(e.to_string().contains("problem.loss"), "{e}");
    }

    #[test]
    fn version_is_required_and_checked() {
        assert!(parse_config("{}", &[]).is_err());
        assert!(parse_config(r#"{"version": 2}"#, &[]).is_err());
    }

    #[test]
    fn overrides_apply_before_validation() {
        let text = r#"{"version": 1, "variants": [{"name": "a"}]}"#;
        let c = parse_config(
            text,
            &["stopping.max_passes=5".into(), "variants.0.alpha=0.25".into(), "seeds=[3,4]".into()],
        )
        .unwrap();
        assert_eq!(c.stopping.max_passes, 5.0);
        assert_eq!(c.variants[0].alpha, Some(0.25));
        assert_eq!(c.seeds, vec![3, 4]);
        let c = parse_config(text, &["variants.0.sampling=tau-nice(3)".into()]).unwrap();
        assert_eq!(c.variants[0].sampling, SamplingConfig::Directive("tau-nice(3)".into()));
        assert!(parse_config(text, &["nokey".into()]).is_err());
        assert!(parse_config(text, &["stopping.bogus=1".into()]).is_err());
        assert!(parse_config(text, &["variants.3.alpha=1".into()]).is_err());
    }
}
