//! The theta-sweep runner: one target field per seed, one calibration per
//! (theta, seed) cell, metrics over the full grid.
//!
//! Cells are independent and run on a worker pool; determinism is preserved
//! because every random stream is derived from the cell's (seed, theta
//! index) alone, never from scheduling order.

use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

use sbnn_core::calibrate::{calibrate, Critic, LossBreakdown};
use sbnn_core::copula::A2Params;
use sbnn_core::field::{make_grid, synthesize_target, TargetField};
use sbnn_core::model::SbnnModel;
use sbnn_core::rng::RngStream;
use sbnn_core::shapiro::shapiro_wilk;
use sbnn_core::stats::{pearson, rmse};
use sbnn_core::{Error, Result};

use crate::config::ExperimentConfig;

// per-cell substream allocation: streams 0..15 are reserved for field
// synthesis and calibration internals, cells start at 16
const CELL_STREAM_SPACING: u64 = 16;
const CELL_MODEL_INIT: u64 = 0;
const CELL_CRITIC_INIT: u64 = 1;
const CELL_SHAPIRO: u64 = 2;

const SHAPIRO_SUBSAMPLE: usize = 500;

/// Metrics of one calibrated (theta, seed) cell.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub theta: f64,
    pub seed: u64,
    pub correlation: f64,
    pub rmse: f64,
    pub shapiro_w: f64,
    pub shapiro_p: f64,
    pub runtime_seconds: f64,
    pub final_loss: LossBreakdown,
}

/// Everything a cell produces beyond its metrics row.
#[derive(Debug, Clone)]
pub struct CellArtifacts {
    pub report: MetricsReport,
    pub predictions: Vec<f64>,
    pub residuals: Vec<f64>,
    pub trajectory: Vec<LossBreakdown>,
}

/// The sweep result: per-seed targets plus per-cell artifacts, ordered by
/// (seed, theta).
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub targets: Vec<(u64, Arc<TargetField>)>,
    pub cells: Vec<CellArtifacts>,
}

impl SweepOutput {
    pub fn reports(&self) -> Vec<&MetricsReport> {
        self.cells.iter().map(|c| &c.report).collect()
    }
}

fn mix_cell_seed(seed: u64, theta_idx: usize) -> u64 {
    // splitmix-style mixing keeps calibration streams disjoint from the
    // field and init streams of the same experiment seed
    let mut z = seed
        .wrapping_mul(0x9E3779B97F4A7C15)
        .wrapping_add(theta_idx as u64 + 1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Runs every (theta, seed) cell and returns all artifacts. The output
/// directory must already be writable; no files are written here.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate().map_err(Error::Domain)?;

    let grid = make_grid(cfg.field.grid_side)?;
    let mut targets = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let field = synthesize_target(&grid, &cfg.field_config(seed))?;
        targets.push((seed, Arc::new(field)));
    }

    let mut jobs = Vec::new();
    for (seed_idx, &seed) in cfg.seeds.iter().enumerate() {
        for (theta_idx, &theta) in cfg.theta_grid.iter().enumerate() {
            jobs.push((seed_idx, seed, theta_idx, theta));
        }
    }

    let cells: Result<Vec<CellArtifacts>> = jobs
        .par_iter()
        .map(|&(seed_idx, seed, theta_idx, theta)| {
            run_cell(cfg, &targets[seed_idx].1, seed, theta_idx, theta)
        })
        .collect();

    Ok(SweepOutput {
        targets,
        cells: cells?,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    target: &TargetField,
    seed: u64,
    theta_idx: usize,
    theta: f64,
) -> Result<CellArtifacts> {
    let started = Instant::now();
    let base_stream = CELL_STREAM_SPACING * (theta_idx as u64 + 1);

    let a2 = A2Params::new(theta)?;
    let model_cfg = cfg.model_config()?;
    let mut model = SbnnModel::init(
        &model_cfg,
        &a2,
        &mut RngStream::new(seed, base_stream + CELL_MODEL_INIT),
    )?;
    let mut critic = Critic::init(
        64,
        &a2,
        &mut RngStream::new(seed, base_stream + CELL_CRITIC_INIT),
    )?;

    let cal_cfg = cfg.calibration_config(mix_cell_seed(seed, theta_idx));
    let run = calibrate(target, &mut model, &mut critic, &cal_cfg)?;

    let predictions = model.predict(target.grid.coords())?;
    let correlation = pearson(&predictions, &target.values)?;
    let err = rmse(&predictions, &target.values)?;
    let residuals: Vec<f64> = predictions
        .iter()
        .zip(&target.values)
        .map(|(p, t)| p - t)
        .collect();

    let sample = if cfg.shapiro_full_grid || residuals.len() <= SHAPIRO_SUBSAMPLE {
        residuals.clone()
    } else {
        let mut rng = RngStream::new(seed, base_stream + CELL_SHAPIRO);
        rng.sample_indices(residuals.len(), SHAPIRO_SUBSAMPLE)
            .into_iter()
            .map(|i| residuals[i])
            .collect()
    };
    let (shapiro_w, shapiro_p) = shapiro_wilk(&sample)?;

    let final_loss = *run
        .trajectory
        .last()
        .expect("calibration always logs at least one iteration");

    Ok(CellArtifacts {
        report: MetricsReport {
            theta,
            seed,
            correlation,
            rmse: err,
            shapiro_w,
            shapiro_p,
            runtime_seconds: started.elapsed().as_secs_f64(),
            final_loss,
        },
        predictions,
        residuals,
        trajectory: run.trajectory,
    })
}
