//! Run configuration files.
//!
//! One TOML file drives every subcommand. Top-level keys are `seed`,
//! `workers` and `out`; each subcommand reads its own table. Unknown keys
//! are rejected everywhere. The `[model]` table starts from a preset and
//! overlays whatever the file sets:
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! preset = "model2"
//! params = { branching_probability = 0.038, speed = 100.0 }
//! ```

use std::path::{Path, PathBuf};

use neurocal_core::growth::{Model, ModelSetup};
use neurocal_core::morphometrics::Morphometric;
use neurocal_core::sensitivity::{ParamSpace, SeedScheme};
use neurocal_core::smcabc::{Prior, SmcConfig};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Invalid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Defaults to the available parallelism.
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub model: ModelConfig,
    pub simulate: SimulateConfig,
    pub morphometrics: MorphometricsConfig,
    pub calibrate: CalibrateConfig,
    pub sensitivity: SensitivityConfig,
    pub pair: PairConfig,
    pub wasserstein_study: StudyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            workers: None,
            out: PathBuf::from("out"),
            model: ModelConfig::default(),
            simulate: SimulateConfig::default(),
            morphometrics: MorphometricsConfig::default(),
            calibrate: CalibrateConfig::default(),
            sensitivity: SensitivityConfig::default(),
            pair: PairConfig::default(),
            wasserstein_study: StudyConfig::default(),
        }
    }
}

/// Growth model selection. `params`, `soma` and `field` are partial tables
/// merged over the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub preset: Model,
    pub params: toml::Table,
    pub soma: toml::Table,
    /// Replaces the preset cue entirely when present.
    pub field: Option<toml::Table>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            preset: Model::Model2,
            params: toml::Table::new(),
            soma: toml::Table::new(),
            field: None,
        }
    }
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<ModelSetup, Invalid> {
        let preset = ModelSetup::preset(self.preset);
        let mut base =
            toml::Table::try_from(&preset).map_err(|e| invalid(format!("model preset: {e}")))?;
        overlay(&mut base, "params", &self.params)?;
        overlay(&mut base, "soma", &self.soma)?;
        if let Some(f) = &self.field {
            base.insert("field".into(), toml::Value::Table(f.clone()));
        }
        let setup: ModelSetup = toml::Value::Table(base)
            .try_into()
            .map_err(|e| invalid(format!("model: {e}")))?;
        setup
            .params
            .validate()
            .map_err(|e| invalid(format!("model.params: {e}")))?;
        setup
            .soma
            .validate()
            .map_err(|e| invalid(format!("model.soma: {e}")))?;
        Ok(setup)
    }
}

fn overlay(base: &mut toml::Table, section: &str, patch: &toml::Table) -> Result<(), Invalid> {
    let Some(toml::Value::Table(target)) = base.get_mut(section) else {
        return Err(invalid(format!("model preset has no {section} table")));
    };
    for (k, v) in patch {
        if !target.contains_key(k) {
            return Err(invalid(format!("model.{section}: unknown key '{k}'")));
        }
        target.insert(k.clone(), v.clone());
    }
    Ok(())
}

fn default_selection() -> Vec<Morphometric> {
    Morphometric::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub count: usize,
    pub selection: Vec<Morphometric>,
    /// Write one SWC file per neuron.
    pub write_swc: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            count: 10,
            selection: default_selection(),
            write_swc: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MorphometricsConfig {
    /// SWC files or directories (scanned for `*.swc`, non-recursively).
    pub inputs: Vec<PathBuf>,
    pub selection: Vec<Morphometric>,
    /// Keep only these structure type codes before extraction.
    pub subtree: Option<Vec<i32>>,
}

impl Default for MorphometricsConfig {
    fn default() -> Self {
        MorphometricsConfig {
            inputs: Vec::new(),
            selection: default_selection(),
            subtree: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationTarget {
    /// The growth model of `[model]` with `θ = (p_bra, R, v)`.
    Growth,
    /// `N(θ, C)` in as many dimensions as the observed CSV has columns.
    ToyGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub target: CalibrationTarget,
    pub observed: Option<PathBuf>,
    /// Defaults to the columns of the observed CSV.
    pub selection: Option<Vec<Morphometric>>,
    /// Defaults to the sensitivity bounds for growth and `[-10, 10]^d` for
    /// the toy model.
    pub prior: Option<Prior>,
    pub smc: SmcConfig,
    pub kde_resolution: usize,
    /// Run the posterior predictive check after sampling.
    pub predictive_check: bool,
    /// Continue from `checkpoint.json` in the output directory if present.
    pub resume: bool,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        CalibrateConfig {
            target: CalibrationTarget::Growth,
            observed: None,
            selection: None,
            prior: None,
            smc: SmcConfig::default(),
            kde_resolution: 512,
            predictive_check: true,
            resume: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityTarget {
    Growth,
    Ishigami,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    pub target: SensitivityTarget,
    pub n_base: usize,
    pub replicates: usize,
    pub selection: Vec<Morphometric>,
    pub space: Option<ParamSpace>,
    pub seed_scheme: SeedScheme,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            target: SensitivityTarget::Growth,
            n_base: 256,
            replicates: 10,
            selection: default_selection(),
            space: None,
            seed_scheme: SeedScheme::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub data: Option<PathBuf>,
    pub sim: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub dims: Vec<usize>,
    pub sizes: Vec<usize>,
    pub repetitions: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            dims: vec![1, 2, 4],
            sizes: vec![100, 200, 500, 1000],
            repetitions: 100,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Invalid> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, Invalid> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// Checks the sections every subcommand relies on.
    pub fn validate(&self) -> Result<(), Invalid> {
        if self.workers == Some(0) {
            return Err(invalid("workers must be >= 1"));
        }
        self.model.resolve()?;
        self.calibrate
            .smc
            .validate()
            .map_err(|e| invalid(format!("calibrate.smc: {e}")))?;
        if let Some(p) = &self.calibrate.prior {
            p.validate()
                .map_err(|e| invalid(format!("calibrate.prior: {e}")))?;
        }
        if let Some(s) = &self.sensitivity.space {
            s.validate()
                .map_err(|e| invalid(format!("sensitivity.space: {e}")))?;
        }
        if self.sensitivity.n_base == 0 || self.sensitivity.replicates == 0 {
            return Err(invalid(
                "sensitivity.n_base and sensitivity.replicates must be >= 1",
            ));
        }
        if self.calibrate.kde_resolution < 2 {
            return Err(invalid("calibrate.kde_resolution must be >= 2"));
        }
        Ok(())
    }
}

/// Default growth prior: the sensitivity-analysis bounds.
pub fn growth_prior() -> Prior {
    let s = ParamSpace::growth_default();
    Prior {
        names: s.names,
        lower: s.lower,
        upper: s.upper,
    }
}
