//! Experiment configuration: JSON schema with defaults, validation, and the
//! conversion into core types.
//!
//! Every field is optional in the file; omitted fields take the defaults
//! below. Command-line flags override file values after parsing.
//!
//! ```json
//! {
//!   "theta_grid": [1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
//!   "seeds": [1, 2, 3],
//!   "field": {
//!     "grid_side": 32,
//!     "kernel_variance": 1.0,
//!     "length_scale": 0.2,
//!     "t_dof": 3.0,
//!     "noise_scale": 0.05,
//!     "jitter": 1e-8
//!   },
//!   "embedding": { "centers_per_side": 8, "tau": 0.3 },
//!   "calibration": {
//!     "lambda_w": 0.1,
//!     "lambda_moment": 1.0,
//!     "lambda_corr": 1.0,
//!     "gp_coefficient": 10.0,
//!     "critic_steps_per_update": 5,
//!     "learning_rate": 1e-3,
//!     "critic_learning_rate": 1e-4,
//!     "iterations": 2000,
//!     "batch_size": 256,
//!     "moment_matches_variance": false
//!   },
//!   "output_dir": "a2sbnn-out",
//!   "emit_plots": false,
//!   "shapiro_full_grid": false
//! }
//! ```

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use sbnn_core::{CalibrationConfig, EmbeddingConfig, FieldConfig, ModelConfig};

fn default_theta_grid() -> Vec<f64> {
    vec![1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("a2sbnn-out")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSettings {
    pub grid_side: usize,
    pub kernel_variance: f64,
    pub length_scale: f64,
    pub t_dof: f64,
    pub noise_scale: f64,
    pub jitter: f64,
}

impl Default for FieldSettings {
    fn default() -> Self {
        let d = FieldConfig::default();
        Self {
            grid_side: 32,
            kernel_variance: d.kernel_variance,
            length_scale: d.length_scale,
            t_dof: d.t_dof,
            noise_scale: d.noise_scale,
            jitter: d.jitter,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSettings {
    pub centers_per_side: usize,
    pub tau: f64,
}

impl Default for EmbeddingSettings {
    fn default() -> Self {
        Self {
            centers_per_side: 8,
            tau: 0.3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSettings {
    pub lambda_w: f64,
    pub lambda_moment: f64,
    pub lambda_corr: f64,
    pub gp_coefficient: f64,
    pub critic_steps_per_update: usize,
    pub learning_rate: f64,
    pub critic_learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub moment_matches_variance: bool,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        let d = CalibrationConfig::default();
        Self {
            lambda_w: d.lambda_w,
            lambda_moment: d.lambda_moment,
            lambda_corr: d.lambda_corr,
            gp_coefficient: d.gp_coefficient,
            critic_steps_per_update: d.critic_steps_per_update,
            learning_rate: d.learning_rate,
            critic_learning_rate: d.critic_learning_rate,
            iterations: d.iterations,
            batch_size: d.batch_size,
            moment_matches_variance: d.moment_matches_variance,
        }
    }
}

/// The full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    #[serde(rename = "theta_grid")]
    pub theta_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub field: FieldSettings,
    pub embedding: EmbeddingSettings,
    pub calibration: CalibrationSettings,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    /// Run Shapiro-Wilk on all grid residuals instead of the fixed-seed
    /// 500-point subsample.
    pub shapiro_full_grid: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta_grid: default_theta_grid(),
            seeds: default_seeds(),
            field: FieldSettings::default(),
            embedding: EmbeddingSettings::default(),
            calibration: CalibrationSettings::default(),
            output_dir: default_output_dir(),
            emit_plots: false,
            shapiro_full_grid: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.theta_grid.is_empty() {
            return Err("theta_grid must not be empty".into());
        }
        if let Some(bad) = self.theta_grid.iter().find(|&&t| !(t >= 1.0)) {
            return Err(format!("theta values must be >= 1, found {bad}"));
        }
        if self.seeds.is_empty() {
            return Err("seeds must not be empty".into());
        }
        if self.field.grid_side < 2 {
            return Err(format!(
                "field.grid_side must be at least 2, got {}",
                self.field.grid_side
            ));
        }
        if self.embedding.centers_per_side < 2 {
            return Err(format!(
                "embedding.centers_per_side must be at least 2, got {}",
                self.embedding.centers_per_side
            ));
        }
        self.field_config(0)
            .validate()
            .map_err(|e| e.to_string())?;
        self.embedding_config().map_err(|e| e.to_string())?;
        self.calibration_config(0)
            .validate(self.field.grid_side * self.field.grid_side)
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn field_config(&self, seed: u64) -> FieldConfig {
        FieldConfig {
            kernel_variance: self.field.kernel_variance,
            length_scale: self.field.length_scale,
            t_dof: self.field.t_dof,
            noise_scale: self.field.noise_scale,
            jitter: self.field.jitter,
            seed,
        }
    }

    pub fn embedding_config(&self) -> sbnn_core::Result<EmbeddingConfig> {
        EmbeddingConfig::grid(self.embedding.centers_per_side, self.embedding.tau)
    }

    pub fn model_config(&self) -> sbnn_core::Result<ModelConfig> {
        Ok(ModelConfig {
            embedding: self.embedding_config()?,
            hidden_width: 64,
        })
    }

    pub fn calibration_config(&self, seed: u64) -> CalibrationConfig {
        CalibrationConfig {
            lambda_w: self.calibration.lambda_w,
            lambda_moment: self.calibration.lambda_moment,
            lambda_corr: self.calibration.lambda_corr,
            gp_coefficient: self.calibration.gp_coefficient,
            critic_steps_per_update: self.calibration.critic_steps_per_update,
            learning_rate: self.calibration.learning_rate,
            critic_learning_rate: self.calibration.critic_learning_rate,
            iterations: self.calibration.iterations,
            batch_size: self.calibration.batch_size,
            moment_matches_variance: self.calibration.moment_matches_variance,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_gives_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.theta_grid.len(), 10);
        assert_eq!(cfg.calibration.iterations, 2000);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ExperimentConfig>(r#"{"thetas": [2.0]}"#);
        assert!(err.is_err());
    }

    #[test]
    fn partial_overrides_work() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"theta_grid": [2.0], "field": {"grid_side": 16}, "calibration": {"iterations": 10}}"#,
        )
        .unwrap();
        assert_eq!(cfg.theta_grid, vec![2.0]);
        assert_eq!(cfg.field.grid_side, 16);
        assert_eq!(cfg.calibration.iterations, 10);
        assert_eq!(cfg.calibration.batch_size, 256);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut cfg = ExperimentConfig::default();
        cfg.theta_grid = vec![];
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.theta_grid = vec![0.5];
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.seeds = vec![];
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::default();
        cfg.field.grid_side = 10;
        // batch 256 > 100 grid points
        assert!(cfg.validate().is_err());
    }
}
