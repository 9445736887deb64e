//! A2 copula inverse generator and copula-driven weight initialization.
//!
//! The A2 Archimedean copula models dependence in both tails; its inverse
//! generator seeds the weight distribution of every fully connected layer.
//! The initialization pipeline is: sample uniforms, clamp away from {0, 1},
//! push through the inverse generator and scale, standardize and squash with
//! a logistic sigmoid, map through the normal quantile, then clip to the
//! theta-dependent bound.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::RngStream;
use crate::special::inv_normal_cdf;
use crate::stats::{mean, variance};

/// Copula parameter and the constants derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct A2Params {
    /// Tail-dependence intensity, `theta >= 1`.
    pub theta: f64,
    /// Spread factor applied after the inverse generator.
    pub scale: f64,
    /// Margin subtracted from the clip bound.
    pub clip_epsilon: f64,
    /// Lower clamp for sampled uniforms.
    pub clamp_lo: f64,
    /// Upper clamp for sampled uniforms.
    pub clamp_hi: f64,
}

impl A2Params {
    /// Parameters with the standard constants (scale 4.0, epsilon 1e-3,
    /// uniform clamp `[1e-9, 1 - 1e-9]`).
    pub fn new(theta: f64) -> Result<Self> {
        let p = Self {
            theta,
            scale: 4.0,
            clip_epsilon: 1e-3,
            clamp_lo: 1e-9,
            clamp_hi: 1.0 - 1e-9,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= 1.0) {
            return Err(Error::Domain(format!(
                "copula parameter theta must be >= 1, got {}",
                self.theta
            )));
        }
        if !(self.clamp_lo > 0.0 && self.clamp_lo < self.clamp_hi && self.clamp_hi < 1.0) {
            return Err(Error::Domain(format!(
                "clamp bounds must satisfy 0 < lo < hi < 1, got [{}, {}]",
                self.clamp_lo, self.clamp_hi
            )));
        }
        if !(self.clip_epsilon >= 0.0 && self.clip_epsilon < self.clip_bound()) {
            return Err(Error::Domain(format!(
                "clip epsilon {} must be nonnegative and below the bound {}",
                self.clip_epsilon,
                self.clip_bound()
            )));
        }
        Ok(())
    }

    /// Clip bound `B(theta) = 0.25 / sqrt(theta)`, strictly decreasing in theta.
    pub fn clip_bound(&self) -> f64 {
        0.25 / self.theta.sqrt()
    }

    /// Half-width of the effective weight interval, `B(theta) - epsilon`.
    pub fn clip_limit(&self) -> f64 {
        self.clip_bound() - self.clip_epsilon
    }
}

/// Inverse generator of the A2 copula.
///
/// With `s = t^(1/theta)`, returns the smaller root of
/// `v^2 - (2 + s) v + 1 = 0`, evaluated as `2 / (2 + s + sqrt(s (s + 4)))`
/// (the product of the roots is 1), which avoids the subtraction in the
/// textbook form. Strictly decreasing in `t`, from 1 at `t = 0` down to
/// `(3 - sqrt(5))/2` at `t = 1`. Callers feeding sampled uniforms clamp
/// them away from the endpoints first (see [`init_weights`]).
pub fn inv_generator(t: f64, theta: f64) -> Result<f64> {
    if !(theta >= 1.0) {
        return Err(Error::Domain(format!(
            "inverse generator requires theta >= 1, got {theta}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!(
            "inverse generator argument must lie in [0, 1], got {t}"
        )));
    }
    Ok(inv_generator_unchecked(t, theta))
}

#[inline]
fn inv_generator_unchecked(t: f64, theta: f64) -> f64 {
    let s = t.powf(1.0 / theta);
    2.0 / (2.0 + s + (s * (s + 4.0)).sqrt())
}

/// Initializes a `(fan_out, fan_in)` weight matrix with the five-step copula
/// pipeline. Deterministic given the stream.
pub fn init_weights(
    rng: &mut RngStream,
    fan_out: usize,
    fan_in: usize,
    params: &A2Params,
) -> Result<Matrix> {
    if fan_out == 0 || fan_in == 0 {
        return Err(Error::Shape(format!(
            "weight matrix must be non-empty, got {fan_out}x{fan_in}"
        )));
    }
    params.validate()?;

    let n = fan_out * fan_in;
    // steps 1-2: clamped uniforms through the inverse generator, scaled
    let mut values: Vec<f64> = (0..n)
        .map(|_| {
            let t = rng.next_f64().clamp(params.clamp_lo, params.clamp_hi);
            params.scale * inv_generator_unchecked(t, params.theta)
        })
        .collect();

    // step 3: standardize (population variance) and squash to (0, 1)
    let m = mean(&values);
    let sd = variance(&values).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return Err(Error::Numeric(
            "degenerate standardization: transformed sample has zero spread".into(),
        ));
    }
    for v in values.iter_mut() {
        *v = sigmoid((*v - m) / sd);
    }

    // steps 4-5: normal quantile, then clip to +/- (B - epsilon)
    let limit = params.clip_limit();
    for v in values.iter_mut() {
        *v = inv_normal_cdf(*v)?.clamp(-limit, limit);
    }

    Matrix::from_vec(fan_out, fan_in, values)
}

/// Zero bias vector of length `fan_out`.
pub fn init_bias(fan_out: usize) -> Result<Vec<f64>> {
    if fan_out == 0 {
        return Err(Error::Shape("bias vector must be non-empty".into()));
    }
    Ok(vec![0.0; fan_out])
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
