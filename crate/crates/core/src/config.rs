//! Declarative experiment configuration.
//!
//! One config drives the whole pipeline (collect, train-eval, stabilize,
//! report); commands hash it to detect stale inputs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contact::{MaterialSpec, RigConfig};
use crate::control::{ControllerConfig, ScoreWeights};
use crate::error::{Error, Result};
use crate::features::{ElectrodeSubset, WindowSpec};
use crate::svr::{SvrKernel, SvrParams};
use crate::vibro::SensorSuite;

/// Estimation method under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// AC pressure with vibration injection (the proposed method).
    Injection,
    /// AC pressure without injection (passive slip bursts).
    Vibrotactile,
    /// Full 19-electrode pressure distribution.
    E19,
    /// 10-electrode subset.
    E10,
    /// 4-electrode subset.
    E4,
    /// Center electrode only.
    E1,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Injection,
        Method::Vibrotactile,
        Method::E19,
        Method::E10,
        Method::E4,
        Method::E1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Injection => "injection",
            Method::Vibrotactile => "vibrotactile",
            Method::E19 => "e19",
            Method::E10 => "e10",
            Method::E4 => "e4",
            Method::E1 => "e1",
        }
    }

    /// Electrode subset backing this method, if it is a pressure-
    /// distribution method.
    pub fn electrode_subset(self) -> Option<ElectrodeSubset> {
        match self {
            Method::E19 => Some(ElectrodeSubset::E19),
            Method::E10 => Some(ElectrodeSubset::E10),
            Method::E4 => Some(ElectrodeSubset::E4),
            Method::E1 => Some(ElectrodeSubset::E1),
            _ => None,
        }
    }

    /// Feature dimensionality for this method.
    pub fn feature_dim(self) -> usize {
        match self.electrode_subset() {
            Some(s) => s.len(),
            None => crate::features::SpectrumFeature::band_count(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.trim().to_ascii_lowercase().as_str() {
            "injection" => Ok(Method::Injection),
            "vibrotactile" => Ok(Method::Vibrotactile),
            "e19" => Ok(Method::E19),
            "e10" => Ok(Method::E10),
            "e4" => Ok(Method::E4),
            "e1" => Ok(Method::E1),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Parse a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(Method::from_str)
        .collect()
}

/// Whole-pipeline experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Master seed; every stream in the pipeline derives from it.
    pub seed: u64,
    /// Material preset names to simulate.
    pub materials: Vec<String>,
    /// Loading trials per material.
    pub trials_per_material: usize,
    /// Methods to compare.
    pub methods: Vec<Method>,
    /// Output directory for artifacts.
    pub output_dir: PathBuf,
    /// Cross-validation folds for the grid search.
    pub cv_folds: usize,
    /// Sample budget for the grid-search cross-validation.
    pub cv_subsample: usize,
    /// Sample budget for the final model fit.
    pub train_cap: usize,
    /// Controlled stabilization trials per method.
    pub stabilize_trials: usize,
    pub rig: RigConfig,
    pub window: WindowSpec,
    pub sensors: SensorSuite,
    pub controller: ControllerConfig,
    pub weights: ScoreWeights,
    /// Hyperparameter grid; empty means the built-in default grid.
    pub grid: Vec<SvrParams>,
    /// Additional material definitions overriding or extending the presets.
    pub custom_materials: Vec<MaterialSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            materials: MaterialSpec::presets()
                .into_iter()
                .map(|m| m.name)
                .collect(),
            trials_per_material: 100,
            methods: Method::ALL.to_vec(),
            output_dir: PathBuf::from("runs/full"),
            cv_folds: 5,
            cv_subsample: 800,
            train_cap: 2500,
            stabilize_trials: 10,
            rig: RigConfig::default(),
            window: WindowSpec::default(),
            sensors: SensorSuite::default(),
            controller: ControllerConfig::default(),
            weights: ScoreWeights::default(),
            grid: Vec::new(),
            custom_materials: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    /// Small profile for fast runs and CI: 2 materials x 10 trials.
    pub fn demo() -> Self {
        ExperimentConfig {
            materials: vec!["pla".into(), "abs".into()],
            trials_per_material: 10,
            cv_folds: 3,
            cv_subsample: 600,
            train_cap: 2200,
            output_dir: PathBuf::from("runs/demo"),
            ..ExperimentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be non-empty".into()));
        }
        if self.trials_per_material == 0 {
            return Err(Error::Config("trials_per_material must be >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be >= 2".into()));
        }
        self.rig.validate()?;
        self.sensors.validate()?;
        self.window.validate(self.sensors.injection.sample_rate)?;
        self.controller.validate()?;
        self.weights.validate()?;
        for m in &self.custom_materials {
            m.validate()?;
        }
        for name in &self.materials {
            self.material(name)?;
        }
        Ok(())
    }

    /// Resolve a material by name: custom definitions shadow presets.
    pub fn material(&self, name: &str) -> Result<MaterialSpec> {
        if let Some(m) = self.custom_materials.iter().find(|m| m.name == name) {
            return Ok(m.clone());
        }
        MaterialSpec::preset(name)
    }

    /// The resolved material list in configured order.
    pub fn material_specs(&self) -> Result<Vec<MaterialSpec>> {
        self.materials.iter().map(|n| self.material(n)).collect()
    }

    /// Hyperparameter grid: configured entries, or the built-in default.
    pub fn svr_grid(&self, feature_dim: usize) -> Vec<SvrParams> {
        if !self.grid.is_empty() {
            return self.grid.clone();
        }
        default_grid(feature_dim)
    }

    /// Load from a TOML file.
    pub fn from_toml_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = toml::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hash of the canonical serialized config (hex).
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Default search grid: kernels {linear, rbf}, C in {0.1, 1, 10, 100},
/// epsilon in {0.001, 0.01, 0.05}, gamma in {0.01, 0.1, 1} / dim.
pub fn default_grid(feature_dim: usize) -> Vec<SvrParams> {
    let cs = [0.1, 1.0, 10.0, 100.0];
    let epsilons = [0.001, 0.01, 0.05];
    let gammas = [0.01, 0.1, 1.0];
    let mut grid = Vec::new();
    for &c in &cs {
        for &epsilon in &epsilons {
            grid.push(SvrParams {
                kernel: SvrKernel::Linear,
                c,
                epsilon,
            });
            for &g in &gammas {
                grid.push(SvrParams {
                    kernel: SvrKernel::Rbf {
                        gamma: g / feature_dim.max(1) as f64,
                    },
                    c,
                    epsilon,
                });
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_round_trips_through_strings() {
        for m in Method::ALL {
            assert_eq!(Method::from_str(m.as_str()).unwrap(), m);
        }
        assert!(Method::from_str("sonar").is_err());
        let list = parse_methods("injection, e19,e1").unwrap();
        assert_eq!(list, vec![Method::Injection, Method::E19, Method::E1]);
    }

    #[test]
    fn default_config_validates_and_hashes_stably() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.materials.len(), 5);
        assert_eq!(cfg.trials_per_material, 100);
        assert_eq!(cfg.config_hash(), cfg.config_hash());
        let demo = ExperimentConfig::demo();
        demo.validate().unwrap();
        assert_ne!(cfg.config_hash(), demo.config_hash());
    }

    #[test]
    fn default_grid_spans_both_kernels() {
        let grid = default_grid(110);
        assert_eq!(grid.len(), 48);
        assert!(grid.iter().any(|p| p.kernel == SvrKernel::Linear));
        assert!(grid
            .iter()
            .any(|p| matches!(p.kernel, SvrKernel::Rbf { .. })));
    }

    #[test]
    fn toml_round_trip_with_overrides() {
        let text = r#"
            seed = 7
            materials = ["pla"]
            trials_per_material = 3
            methods = ["injection", "e1"]

            [rig]
            total_steps = 100

            [[custom_materials]]
            name = "pla"
            mu = 0.5
            shear_stiffness = 0.3
            damping_scale = 1.0
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.rig.total_steps, 100);
        // Custom definition shadows the preset.
        assert_eq!(cfg.material("pla").unwrap().mu, 0.5);
    }
}
