//! Experiment configuration: defaults, file merge, `key = value` overrides
//! and validation.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use torsionfield_core::geom::{builtin, Manifold};
use torsionfield_core::random_field::{BasisKind, FieldSpec};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "TORSIONFIELD_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "torsionfield-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldConfig,
    pub field_spec: FieldSpecConfig,
    pub integrator: IntegratorConfig,
    pub monte_carlo: MonteCarloConfig,
    pub quadrature: QuadratureConfig,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldConfig {
    /// `sphere`, `flat-torus` or `half-plane`.
    pub name: String,
    pub params: ManifoldParams,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self { name: "sphere".into(), params: ManifoldParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldParams {
    /// Sphere radius; ignored elsewhere.
    pub radius: f64,
}

impl Default for ManifoldParams {
    fn default() -> Self {
        Self { radius: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisChoice {
    /// The eigenbasis of the manifold; the torus Fourier basis on the half-plane.
    Auto,
    TorusFourier,
    SphereHarmonics,
    Bumps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpsConfig {
    pub centers: Vec<[f64; 2]>,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSpecConfig {
    pub basis: BasisChoice,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha_exp: f64,
    pub c: f64,
    pub bumps: Option<BumpsConfig>,
}

impl Default for FieldSpecConfig {
    fn default() -> Self {
        Self { basis: BasisChoice::Auto, n: 64, alpha_exp: 3.0, c: 0.1, bumps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub h: f64,
    #[serde(rename = "T")]
    pub t: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { h: 1e-3, t: TAU }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneratePolicy {
    Abort,
    ResampleAndReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    /// Draws for moment estimates and Brownian paths.
    pub n_samples: usize,
    pub master_seed: u64,
    pub degenerate_policy: DegeneratePolicy,
    /// Realizations in the Gauss–Bonnet Monte Carlo.
    pub n_realizations: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_samples: 10_000,
            master_seed: 42,
            degenerate_policy: DegeneratePolicy::ResampleAndReport,
            n_realizations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { n_theta: 64, n_phi: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Falls back to `$TORSIONFIELD_OUTPUT_DIR`, then `torsionfield-out`.
    pub directory: Option<PathBuf>,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: None, formats: vec![OutputFormat::Json, OutputFormat::Csv] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Random samples per pointwise identity.
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { samples: 100 }
    }
}

/// Parses an override value: JSON if it parses, a bare string otherwise.
pub fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `value` at a dotted path, creating intermediate objects.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> CliResult<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(path, "empty key in override path"));
    }
    let mut node = root;
    for (depth, key) in keys.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(CliError::config(keys[..depth].join("."), "not an object; cannot set a field inside it"));
            }
        }
        let map = node.as_object_mut().expect("checked above");
        if depth + 1 == keys.len() {
            map.insert((*key).to_string(), value);
            return Ok(());
        }
        node = map.entry((*key).to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Reads a config file as raw JSON.
pub fn read_config_file(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(path.display().to_string(), format!("cannot read config file: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(path.display().to_string(), format!("not valid JSON: {e}")))?;
    if !value.is_object() {
        return Err(CliError::config(path.display().to_string(), "top level must be a JSON object"));
    }
    Ok(value)
}

/// File contents (or `{}`) with `overrides` applied, deserialized over the
/// defaults. Errors name the offending field.
pub fn load(file: Option<&Path>, overrides: &[(String, Value)]) -> CliResult<ExperimentConfig> {
    let mut raw = match file {
        Some(p) => read_config_file(p)?,
        None => Value::Object(Map::new()),
    };
    for (path, value) in overrides {
        set_path(&mut raw, path, value.clone())?;
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(raw).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(if path.is_empty() { ".".to_string() } else { path }, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

fn require(ok: bool, path: &str, message: impl FnOnce() -> String) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(path, message()))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let known = ["sphere", "flat-torus", "torus", "half-plane"];
        require(known.contains(&self.manifold.name.as_str()), "manifold.name", || {
            format!("unknown manifold {:?} (expected sphere, flat-torus or half-plane)", self.manifold.name)
        })?;
        let r = self.manifold.params.radius;
        require(r > 0.0 && r.is_finite(), "manifold.params.radius", || format!("radius must be positive, got {r}"))?;
        let fs = &self.field_spec;
        require(fs.alpha_exp > 2.0 && fs.alpha_exp.is_finite(), "field_spec.alpha_exp", || {
            format!("decay exponent must exceed 2 for an almost surely C² field, got {}", fs.alpha_exp)
        })?;
        require(fs.c >= 0.0 && fs.c.is_finite(), "field_spec.c", || format!("amplitude must be >= 0, got {}", fs.c))?;
        require(fs.n >= 1, "field_spec.N", || "truncation must be at least 1".into())?;
        if fs.basis == BasisChoice::Bumps {
            let b = fs.bumps.as_ref();
            require(b.is_some(), "field_spec.bumps", || "basis bumps needs centers and width".into())?;
            let b = b.expect("checked above");
            require(b.width > 0.0 && b.width.is_finite(), "field_spec.bumps.width", || {
                format!("width must be positive, got {}", b.width)
            })?;
            require(b.centers.len() >= fs.n, "field_spec.bumps.centers", || {
                format!("{} centers supplied for N = {}", b.centers.len(), fs.n)
            })?;
        }
        let h = self.integrator.h;
        require(h > 0.0 && h.is_finite(), "integrator.h", || format!("step must be positive, got {h}"))?;
        let t = self.integrator.t;
        require(t > 0.0 && t.is_finite(), "integrator.T", || format!("duration must be positive, got {t}"))?;
        require(t / h <= 1e8, "integrator.h", || format!("{} steps requested", (t / h).ceil()))?;
        require(self.monte_carlo.n_samples >= 2, "monte_carlo.n_samples", || "need at least 2 samples".into())?;
        require(self.monte_carlo.n_realizations >= 2, "monte_carlo.n_realizations", || {
            "need at least 2 realizations".into()
        })?;
        require(self.quadrature.n_theta >= 2, "quadrature.n_theta", || "need at least 2 nodes".into())?;
        require(self.quadrature.n_phi >= 2, "quadrature.n_phi", || "need at least 2 nodes".into())?;
        require(self.verify.samples >= 1, "verify.samples", || "need at least 1 sample".into())?;
        Ok(())
    }

    pub fn manifold(&self) -> CliResult<Arc<dyn Manifold>> {
        builtin(&self.manifold.name, Some(self.manifold.params.radius))
            .map_err(|e| CliError::config("manifold", e.to_string()))
    }

    pub fn basis_kind(&self) -> CliResult<BasisKind> {
        let m = &self.manifold;
        let kind = match self.field_spec.basis {
            BasisChoice::Auto if m.name == "half-plane" => BasisKind::TorusFourier,
            BasisChoice::Auto => BasisKind::for_builtin(&m.name, Some(m.params.radius))
                .map_err(|e| CliError::config("field_spec.basis", e.to_string()))?,
            BasisChoice::TorusFourier => BasisKind::TorusFourier,
            BasisChoice::SphereHarmonics => BasisKind::SphereHarmonics { radius: m.params.radius },
            BasisChoice::Bumps => {
                let b = self
                    .field_spec
                    .bumps
                    .as_ref()
                    .ok_or_else(|| CliError::config("field_spec.bumps", "basis bumps needs centers and width"))?;
                BasisKind::Bumps {
                    centers: b.centers[..self.field_spec.n].to_vec(),
                    width: b.width,
                    domain: self.manifold()?.domain(),
                }
            }
        };
        Ok(kind)
    }

    pub fn field_spec(&self) -> CliResult<Arc<FieldSpec>> {
        let fs = &self.field_spec;
        FieldSpec::new(self.basis_kind()?, fs.n, fs.alpha_exp, fs.c)
            .map(Arc::new)
            .map_err(|e| CliError::config("field_spec", e.to_string()))
    }

    /// `output.directory`, else the environment variable, else the default.
    pub fn resolve_output_dir(&mut self) {
        if self.output.directory.is_none() {
            let dir = std::env::var_os(OUTPUT_DIR_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
            self.output.directory = Some(dir);
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.directory.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn wants(&self, format: OutputFormat) -> bool {
        self.output.formats.contains(&format)
    }

    /// SHA-256 of the canonical JSON of everything except the output
    /// directory, so moving the outputs does not change the stamp.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output.directory = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn empty_file_gives_defaults() {
        let c = load(None, &[]).unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.field_spec.n, 64);
        assert_eq!(c.monte_carlo.degenerate_policy, DegeneratePolicy::ResampleAndReport);
    }

    #[test]
    fn overrides_apply_on_top_of_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"field_spec": {"c": 0.2, "N": 16}, "manifold": {"name": "flat-torus"}}"#).unwrap();
        let c = load(Some(&path), &[("field_spec.c".into(), json!(0.0))]).unwrap();
        assert_eq!(c.field_spec.c, 0.0);
        assert_eq!(c.field_spec.n, 16);
        assert_eq!(c.manifold.name, "flat-torus");
        assert_eq!(c.field_spec.alpha_exp, 3.0);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let err = load(None, &[("field_spec.N".into(), json!("many"))]).unwrap_err();
        assert!(matches!(&err, CliError::Config { path, .. } if path == "field_spec.N"), "{err}");
        let err = load(None, &[("monte_carlo.bogus".into(), json!(1))]).unwrap_err();
        assert!(matches!(&err, CliError::Config { path, .. } if path.starts_with("monte_carlo")), "{err}");
        let err = load(None, &[("monte_carlo.degenerate_policy".into(), json!("retry"))]).unwrap_err();
        assert!(matches!(&err, CliError::Config { path, .. } if path == "monte_carlo.degenerate_policy"), "{err}");
    }

    #[test]
    fn rough_fields_are_rejected() {
        let err = load(None, &[("field_spec.alpha_exp".into(), json!(1.5))]).unwrap_err();
        match err {
            CliError::Config { path, message } => {
                assert_eq!(path, "field_spec.alpha_exp");
                assert!(message.contains("C²"));
            }
            other => panic!("{other}"),
        }
        assert_eq!(load(None, &[("field_spec.alpha_exp".into(), json!(2.0))]).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn override_values_parse_as_json_or_string() {
        assert_eq!(parse_override_value("0"), json!(0));
        assert_eq!(parse_override_value("[\"json\"]"), json!(["json"]));
        assert_eq!(parse_override_value("sphere"), json!("sphere"));
    }

    #[test]
    fn hash_ignores_output_directory_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output.directory = Some("/elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.field_spec.c = 0.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn auto_basis_follows_the_manifold() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.basis_kind().unwrap().name(), "sphere-harmonics");
        c.manifold.name = "half-plane".into();
        assert_eq!(c.basis_kind().unwrap().name(), "torus-fourier");
    }
}
