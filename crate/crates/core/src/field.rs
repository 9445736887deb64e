//! Spatial grids and synthesis of the fixed calibration target field.
//!
//! The target is one draw of a Gaussian process with a squared-exponential
//! kernel on the unit square, perturbed by Student-t noise so the field has
//! heavy-tailed variability, then min-max normalized to `[0, 1]`.

use crate::error::{Error, Result};
use crate::matrix::{cholesky, Matrix};
use crate::rng::RngStream;
use crate::stats::sample_student_t;

// substream allocation under the field seed
const STREAM_GP: u64 = 0;
const STREAM_NOISE: u64 = 1;

/// Evenly spaced `side x side` points covering `[0, 1]^2`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    side: usize,
    coords: Vec<(f64, f64)>,
}

impl SpatialGrid {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        self.coords[idx]
    }
}

/// Hyperparameters of the target-field synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    /// Kernel variance sigma^2.
    pub kernel_variance: f64,
    /// Kernel length scale.
    pub length_scale: f64,
    /// Degrees of freedom of the injected Student-t noise.
    pub t_dof: f64,
    /// Scale of the injected noise; zero yields a pure process draw.
    pub noise_scale: f64,
    /// Diagonal jitter added before Cholesky.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            kernel_variance: 1.0,
            length_scale: 0.2,
            t_dof: 3.0,
            noise_scale: 0.05,
            jitter: 1e-8,
            seed: 0,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kernel_variance > 0.0) {
            return Err(Error::Domain(format!(
                "kernel variance must be positive, got {}",
                self.kernel_variance
            )));
        }
        if !(self.length_scale > 0.0) {
            return Err(Error::Domain(format!(
                "length scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.t_dof > 0.0) {
            return Err(Error::Domain(format!(
                "t degrees of freedom must be positive, got {}",
                self.t_dof
            )));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::Domain(format!(
                "noise scale must be nonnegative, got {}",
                self.noise_scale
            )));
        }
        if !(self.jitter >= 0.0) {
            return Err(Error::Domain(format!(
                "jitter must be nonnegative, got {}",
                self.jitter
            )));
        }
        Ok(())
    }
}

/// The fixed target field: grid plus values min-max normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetField {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl TargetField {
    /// CSV with one line per grid row, values at full precision.
    pub fn to_csv(&self) -> String {
        let side = self.grid.side();
        let mut out = String::new();
        for row in 0..side {
            let line: Vec<String> = (0..side)
                .map(|col| format!("{:.16e}", self.values[row * side + col]))
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Builds the evenly spaced grid; `side >= 2` so both endpoints appear.
pub fn make_grid(side: usize) -> Result<SpatialGrid> {
    if side < 2 {
        return Err(Error::Domain(format!(
            "grid side must be at least 2, got {side}"
        )));
    }
    let step = 1.0 / (side - 1) as f64;
    let mut coords = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            coords.push((i as f64 * step, j as f64 * step));
        }
    }
    Ok(SpatialGrid { side, coords })
}

/// Squared-exponential covariance
/// `C[i][j] = sigma^2 exp(-|x_i - x_j|^2 / (2 l^2))`.
pub fn se_covariance(grid: &SpatialGrid, sigma2: f64, ell: f64) -> Result<Matrix> {
    if !(sigma2 > 0.0) || !(ell > 0.0) {
        return Err(Error::Domain(format!(
            "kernel parameters must be positive, got sigma2={sigma2}, ell={ell}"
        )));
    }
    let n = grid.len();
    let inv_two_ell2 = 1.0 / (2.0 * ell * ell);
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        let (xi, yi) = grid.point(i);
        for j in 0..=i {
            let (xj, yj) = grid.point(j);
            let d2 = (xi - xj) * (xi - xj) + (yi - yj) * (yi - yj);
            let v = sigma2 * (-d2 * inv_two_ell2).exp();
            c.set(i, j, v);
            c.set(j, i, v);
        }
    }
    Ok(c)
}

/// Draws the target field: `f = L z + noise_scale * t_nu`, min-max
/// normalized. Deterministic given `cfg.seed`.
pub fn synthesize_target(grid: &SpatialGrid, cfg: &FieldConfig) -> Result<TargetField> {
    cfg.validate()?;
    let n = grid.len();
    let cov = se_covariance(grid, cfg.kernel_variance, cfg.length_scale)?;
    let l = cholesky(&cov, cfg.jitter)?;

    let z = RngStream::new(cfg.seed, STREAM_GP).normal_vec(n);
    let mut values = l.matvec(&z)?;
    if cfg.noise_scale > 0.0 {
        let mut noise_rng = RngStream::new(cfg.seed, STREAM_NOISE);
        let noise = sample_student_t(&mut noise_rng, cfg.t_dof, n)?;
        for (v, e) in values.iter_mut().zip(noise) {
            *v += cfg.noise_scale * e;
        }
    }

    normalize_min_max(&mut values)?;
    Ok(TargetField {
        grid: grid.clone(),
        values,
    })
}

/// Pre-normalization draw, exposed for distributional tests.
pub fn synthesize_raw(grid: &SpatialGrid, cfg: &FieldConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let cov = se_covariance(grid, cfg.kernel_variance, cfg.length_scale)?;
    let l = cholesky(&cov, cfg.jitter)?;
    let z = RngStream::new(cfg.seed, STREAM_GP).normal_vec(grid.len());
    let mut values = l.matvec(&z)?;
    if cfg.noise_scale > 0.0 {
        let mut noise_rng = RngStream::new(cfg.seed, STREAM_NOISE);
        let noise = sample_student_t(&mut noise_rng, cfg.t_dof, grid.len())?;
        for (v, e) in values.iter_mut().zip(noise) {
            *v += cfg.noise_scale * e;
        }
    }
    Ok(values)
}

fn normalize_min_max(values: &mut [f64]) -> Result<()> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Numeric("non-finite field values".into()));
    }
    if hi == lo {
        return Err(Error::Degenerate(
            "constant field cannot be min-max normalized".into(),
        ));
    }
    let range = hi - lo;
    for v in values.iter_mut() {
        *v = (*v - lo) / range;
    }
    Ok(())
}
