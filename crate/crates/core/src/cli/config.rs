use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::calibration::{CalibrationConfig, CostModel};
use crate::estimators::{ErrorModel, SeedMode};
use crate::optimizer::{OptimizerOptions, Variant};
use crate::stochastic::DeviceModel;

/// Problem constants; reads a full calibration report as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub error_model: ErrorModel,
    pub cost_model: CostModel,
}

impl Constants {
    pub fn validate(&self) -> Result<(), CliError> {
        self.error_model.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.cost_model.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Strictly decreasing.
    pub tolerances: Vec<f64>,
    /// Tolerances are multiples of the calibrated `C00`.
    pub relative_tolerances: bool,
    pub variants: Vec<Variant>,
    pub l_max: usize,
    pub out: PathBuf,
    /// 0 selects the available parallelism.
    pub threads: usize,
    pub seed_mode: SeedMode,
    /// Separate TOML file holding the device model, relative to the config file.
    pub device_file: Option<PathBuf>,
    pub device: DeviceModel,
    pub calibration: CalibrationConfig,
    pub optimizer: OptimizerOptions,
    /// Used by `optimize` and `estimate` when no report is given.
    pub constants: Option<Constants>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            tolerances: vec![0.5, 0.25, 0.15, 0.1, 0.05, 0.025],
            relative_tolerances: true,
            variants: vec![Variant::Mc, Variant::Geometric, Variant::Free],
            l_max: 8,
            out: PathBuf::from("out"),
            threads: 0,
            seed_mode: SeedMode::Independent,
            device_file: None,
            device: DeviceModel { qoi: crate::fem::QoiKind::SurfaceField, ..Default::default() },
            calibration: CalibrationConfig::default(),
            optimizer: OptimizerOptions { h_max: 5.0, ..Default::default() },
            constants: None,
        }
    }
}

impl RunConfig {
    /// Parses a config file; `device_file` is resolved and loaded.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(file) = &cfg.device_file {
            let file = path.parent().unwrap_or(Path::new(".")).join(file);
            let text = std::fs::read_to_string(&file)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", file.display())))?;
            cfg.device = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))?;
            cfg.device_file = Some(file);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_tolerances(&self.tolerances)?;
        if self.variants.is_empty() {
            return Err(CliError::Config("no variants selected".into()));
        }
        self.device.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.calibration.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.optimizer.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(c) = &self.constants {
            c.validate()?;
        }
        Ok(())
    }

    /// Absolute tolerances for the given constants.
    pub fn resolve_tolerances(&self, constants: &Constants) -> Vec<f64> {
        let scale = if self.relative_tolerances { constants.error_model.c00 } else { 1.0 };
        self.tolerances.iter().map(|t| t * scale).collect()
    }

    /// Creates the output directory and checks that a file can be written there.
    pub fn prepare_output(&self) -> Result<(), CliError> {
        let io = |e: std::io::Error| {
            CliError::Config(format!("output directory {} is not writable: {e}", self.out.display()))
        };
        std::fs::create_dir_all(&self.out).map_err(io)?;
        let probe = self.out.join(".mlmc-ddp-probe");
        std::fs::write(&probe, b"").map_err(io)?;
        std::fs::remove_file(&probe).map_err(io)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))
    }
}

pub fn check_tolerances(tol: &[f64]) -> Result<(), CliError> {
    if tol.is_empty() {
        return Err(CliError::Config("empty tolerance list".into()));
    }
    if let Some(t) = tol.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(CliError::Config(format!("tolerance {t} is not positive")));
    }
    if tol.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Config(format!("tolerances must be strictly decreasing, got {tol:?}")));
    }
    Ok(())
}

pub fn load_constants(path: &Path) -> Result<Constants, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let c: Constants = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    c.validate()?;
    Ok(c)
}
