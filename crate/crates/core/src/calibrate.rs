//! Calibration of the network against the fixed target field.
//!
//! The total loss combines pointwise mean squared error, a Wasserstein term
//! estimated by a critic network trained with a gradient penalty, a
//! mean-matching term, and a Pearson-correlation penalty:
//!
//! `L = L_sup + lambda_w L_w + lambda_moment L_moment + lambda_corr L_corr`
//!
//! Each outer iteration runs several critic updates (maximizing the critic's
//! separation of prediction and target value distributions under the
//! Lipschitz penalty) followed by one model update. Both optimizers are
//! Adam. Everything is deterministic given the config seed.

use crate::autodiff::{backward, grad_wrt_input, Gradients, Tape, Var};
use crate::copula::{init_bias, init_weights, A2Params};
use crate::error::{Error, Result};
use crate::field::TargetField;
use crate::matrix::Matrix;
use crate::model::{Mode, SbnnModel};
use crate::rng::RngStream;
use crate::stats::{pearson, rmse};

// substream allocation under the calibration seed
const STREAM_BATCH: u64 = 0;
const STREAM_INTERP: u64 = 1;

// below this, a batch of predictions is treated as constant and the
// correlation penalty returns its maximum with a zero subgradient
const VARIANCE_FLOOR: f64 = 1e-24;

// epsilon under the square root of the interpolate-gradient norm
const GP_NORM_EPS: f64 = 1e-12;

/// Weights, schedule, and seed of one calibration run.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub lambda_w: f64,
    pub lambda_moment: f64,
    pub lambda_corr: f64,
    pub gp_coefficient: f64,
    pub critic_steps_per_update: usize,
    pub learning_rate: f64,
    pub critic_learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    /// Extends the moment loss with a variance-matching term.
    pub moment_matches_variance: bool,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            lambda_w: 0.1,
            lambda_moment: 1.0,
            lambda_corr: 1.0,
            gp_coefficient: 10.0,
            critic_steps_per_update: 5,
            learning_rate: 1e-3,
            critic_learning_rate: 1e-4,
            iterations: 2000,
            batch_size: 256,
            moment_matches_variance: false,
            seed: 0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self, grid_len: usize) -> Result<()> {
        for (name, v) in [
            ("lambda_w", self.lambda_w),
            ("lambda_moment", self.lambda_moment),
            ("lambda_corr", self.lambda_corr),
            ("gp_coefficient", self.gp_coefficient),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Domain(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.learning_rate > 0.0) || !(self.critic_learning_rate > 0.0) {
            return Err(Error::Domain("learning rates must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Domain("iterations must be at least 1".into()));
        }
        if self.critic_steps_per_update == 0 {
            return Err(Error::Domain("critic_steps_per_update must be at least 1".into()));
        }
        if self.batch_size < 2 || self.batch_size > grid_len {
            return Err(Error::Domain(format!(
                "batch_size must lie in [2, {grid_len}], got {}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Loss components at one logged iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub iteration: usize,
    pub l_sup: f64,
    pub l_w: f64,
    pub l_moment: f64,
    pub l_corr: f64,
    pub l_total: f64,
}

/// Full-grid eval-mode metrics logged periodically during calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRecord {
    pub iteration: usize,
    pub rmse: f64,
    pub correlation: f64,
}

/// Output of [`calibrate`]: the per-iteration loss trajectory plus periodic
/// full-grid evaluations. The calibrated parameters live in the model that
/// was passed in.
#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub trajectory: Vec<LossBreakdown>,
    pub evals: Vec<EvalRecord>,
}

// --- critic -----------------------------------------------------------------

/// Parameters of the scalar critic MLP (1 -> H -> H -> 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CriticParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w3: Matrix,
    pub b3: Matrix,
}

impl CriticParams {
    pub fn tensors(&self) -> Vec<&Matrix> {
        vec![&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        vec![
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }
}

/// The Wasserstein critic: leaky-ReLU MLP on scalar field values, no batch
/// normalization (the gradient penalty replaces weight constraints).
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub params: CriticParams,
    pub slope: f64,
}

/// Graph handles for the critic tensors, in [`CriticParams::tensors`] order.
pub struct CriticLeaves<'t> {
    pub all: Vec<Var<'t>>,
}

impl Critic {
    /// Copula-initialized critic with the given hidden width.
    pub fn init(hidden: usize, a2: &A2Params, rng: &mut RngStream) -> Result<Self> {
        if hidden == 0 {
            return Err(Error::Domain("critic hidden width must be positive".into()));
        }
        let params = CriticParams {
            w1: init_weights(rng, hidden, 1, a2)?,
            b1: Matrix::from_vec(1, hidden, init_bias(hidden)?)?,
            w2: init_weights(rng, hidden, hidden, a2)?,
            b2: Matrix::from_vec(1, hidden, init_bias(hidden)?)?,
            w3: init_weights(rng, 1, hidden, a2)?,
            b3: Matrix::from_vec(1, 1, init_bias(1)?)?,
        };
        Ok(Self {
            params,
            slope: 0.2,
        })
    }

    pub fn leaves<'t>(&self, tape: &'t Tape, trainable: bool) -> Result<CriticLeaves<'t>> {
        let mut all = Vec::with_capacity(6);
        for t in self.params.tensors() {
            let var = if trainable {
                tape.leaf(t.rows(), t.cols(), t.values().to_vec())?
            } else {
                tape.constant(t.rows(), t.cols(), t.values().to_vec())?
            };
            all.push(var);
        }
        Ok(CriticLeaves { all })
    }

    /// Scores a `(batch, 1)` column of field values.
    pub fn forward_graph<'t>(
        &self,
        leaves: &CriticLeaves<'t>,
        input: Var<'t>,
    ) -> Result<Var<'t>> {
        if input.cols() != 1 {
            return Err(Error::Shape(format!(
                "critic input must be a column, got {:?}",
                input.shape()
            )));
        }
        let batch = input.rows();
        let [w1, b1, w2, b2, w3, b3] = [
            leaves.all[0],
            leaves.all[1],
            leaves.all[2],
            leaves.all[3],
            leaves.all[4],
            leaves.all[5],
        ];
        let h1 = input
            .matmul_nt(w1)?
            .add(b1.broadcast_row(batch)?)?
            .leaky_relu(self.slope);
        let h2 = h1
            .matmul_nt(w2)?
            .add(b2.broadcast_row(batch)?)?
            .leaky_relu(self.slope);
        h2.matmul_nt(w3)?.add(b3.broadcast_row(batch)?)
    }

    /// Plain scores for a slice of values (no gradients).
    pub fn score(&self, values: &[f64]) -> Result<Vec<f64>> {
        let tape = Tape::new();
        let leaves = self.leaves(&tape, false)?;
        let input = tape.constant(values.len(), 1, values.to_vec())?;
        Ok(self.forward_graph(&leaves, input)?.value())
    }

    /// The critic's Wasserstein-1 estimate `mean D(target) - mean D(pred)`.
    pub fn wasserstein_estimate(&self, pred: &[f64], target: &[f64]) -> Result<f64> {
        let dp = self.score(pred)?;
        let dt = self.score(target)?;
        Ok(crate::stats::mean(&dt) - crate::stats::mean(&dp))
    }
}

// --- loss components ---------------------------------------------------------

/// Mean squared error.
pub fn loss_sup<'t>(pred: Var<'t>, target: Var<'t>) -> Result<Var<'t>> {
    Ok(pred.sub(target)?.square().mean())
}

/// Squared difference of means, optionally extended by the squared
/// difference of population variances.
pub fn loss_moment<'t>(
    pred: Var<'t>,
    target: Var<'t>,
    match_variance: bool,
) -> Result<Var<'t>> {
    let base = pred.mean().sub(target.mean())?.square();
    if !match_variance {
        return Ok(base);
    }
    let n = pred.len();
    let center = |v: Var<'t>| -> Result<Var<'t>> {
        let (r, c) = v.shape();
        let m = v.mean().broadcast_to(r, c)?;
        v.sub(m)
    };
    let var_p = center(pred)?.square().mean();
    let var_t = center(target)?.square().mean();
    debug_assert!(n > 0);
    base.add(var_p.sub(var_t)?.square())
}

/// `1 - pearson(pred, target)`.
///
/// A constant prediction batch yields the maximum penalty 1 with a zero
/// subgradient instead of an error, so early training survives degenerate
/// batches. A constant target is a degenerate-target error.
pub fn loss_corr<'t>(tape: &'t Tape, pred: Var<'t>, target: Var<'t>) -> Result<Var<'t>> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "loss_corr: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::Domain("loss_corr needs at least 2 points".into()));
    }
    let center = |v: Var<'t>| -> Result<Var<'t>> {
        let (r, c) = v.shape();
        let m = v.mean().broadcast_to(r, c)?;
        v.sub(m)
    };
    let ct = center(target)?;
    let var_t = ct.square().mean();
    if var_t.scalar_value() <= VARIANCE_FLOOR {
        return Err(Error::Degenerate(
            "correlation penalty is undefined for a constant target".into(),
        ));
    }
    let cp = center(pred)?;
    let var_p = cp.square().mean();
    if var_p.scalar_value() <= VARIANCE_FLOOR {
        return Ok(tape.scalar(1.0));
    }
    let cov = cp.mul(ct)?.mean();
    let rho = cov.div(var_p.sqrt()?.mul(var_t.sqrt()?)?)?;
    Ok(rho.neg().add_scalar(1.0))
}

/// The Wasserstein pieces for one batch.
pub struct WassersteinLosses<'t> {
    /// Generator-side term `-mean D(pred)`; differentiable through `pred`.
    pub l_w: Var<'t>,
    /// Critic objective `mean D(pred) - mean D(target) + gp_coefficient * gp`.
    pub critic_loss: Var<'t>,
    /// The raw gradient-penalty term.
    pub gradient_penalty: Var<'t>,
}

/// Builds the critic objective with its gradient penalty, plus the
/// generator-side Wasserstein term.
///
/// The penalty samples one interpolation weight per element:
/// `v = u * target + (1 - u) * pred`, and pushes `|dD/dv|` toward 1. The
/// interpolate enters the graph as a fresh differentiable leaf, so the
/// penalty differentiates through the critic twice (value and input
/// gradient) but never back into the generator.
pub fn loss_wasserstein_and_gp<'t>(
    tape: &'t Tape,
    critic: &Critic,
    leaves: &CriticLeaves<'t>,
    pred: Var<'t>,
    target: Var<'t>,
    rng: &mut RngStream,
    gp_coefficient: f64,
) -> Result<WassersteinLosses<'t>> {
    if pred.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "wasserstein loss: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let batch = pred.rows();
    let pred_vals = pred.value();
    let target_vals = target.value();
    let v_vals: Vec<f64> = pred_vals
        .iter()
        .zip(&target_vals)
        .map(|(&p, &t)| {
            let u = rng.next_f64();
            u * t + (1.0 - u) * p
        })
        .collect();
    let v = tape.leaf(batch, 1, v_vals)?;

    let d_pred = critic.forward_graph(leaves, pred)?;
    let d_target = critic.forward_graph(leaves, target)?;
    let d_v = critic.forward_graph(leaves, v)?;

    let grad_v = grad_wrt_input(d_v.sum(), v)?;
    let gp = grad_v
        .row_norms(GP_NORM_EPS)?
        .add_scalar(-1.0)
        .square()
        .mean();

    let l_w = d_pred.mean().neg();
    let critic_loss = d_pred
        .mean()
        .sub(d_target.mean())?
        .add(gp.scale(gp_coefficient))?;
    Ok(WassersteinLosses {
        l_w,
        critic_loss,
        gradient_penalty: gp,
    })
}

/// Trains only the critic on two fixed sample sets, leaving every other
/// parameter untouched. Used to validate the critic's Wasserstein estimate
/// against the exact sorted-sample oracle.
pub fn train_critic_only(
    critic: &mut Critic,
    pred: &[f64],
    target: &[f64],
    steps: usize,
    learning_rate: f64,
    gp_coefficient: f64,
    rng: &mut RngStream,
) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "critic training sets differ in length: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    let sizes: Vec<usize> = critic.params.tensors().iter().map(|t| t.values().len()).collect();
    let mut adam = Adam::new(learning_rate, 0.5, 0.9, &sizes);
    for iteration in 0..steps {
        let tape = Tape::new();
        let leaves = critic.leaves(&tape, true)?;
        let p = tape.constant(pred.len(), 1, pred.to_vec())?;
        let t = tape.constant(target.len(), 1, target.to_vec())?;
        let losses = loss_wasserstein_and_gp(&tape, critic, &leaves, p, t, rng, gp_coefficient)?;
        if !losses.critic_loss.scalar_value().is_finite() {
            return Err(Error::NonFiniteLoss { iteration });
        }
        let grads = backward(losses.critic_loss)?;
        let gvals = collect_grads(&grads, &leaves.all);
        adam.step(&gvals, critic.params.tensors_mut());
    }
    Ok(())
}

// --- optimizer ----------------------------------------------------------------

/// Adam with bias correction; state is keyed by tensor position.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64, sizes: &[usize]) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            step: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn step(&mut self, grads: &[Vec<f64>], mut params: Vec<&mut Matrix>) {
        debug_assert_eq!(grads.len(), params.len());
        self.step += 1;
        let t = self.step as i32;
        let lr_t = self.lr * (1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t));
        for ((tensor, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for ((p, &g), (mi, vi)) in tensor
                .values_mut()
                .iter_mut()
                .zip(grad)
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                *p -= lr_t * *mi / (vi.sqrt() + self.eps);
            }
        }
    }
}

// --- calibration loop ----------------------------------------------------------

/// Runs the calibration loop, mutating `model` and `critic` in place.
///
/// Per outer iteration: sample a grid batch, run `critic_steps_per_update`
/// critic updates against the current (detached) predictions, then one model
/// update on the composite loss; the model update is the only point where
/// batch-norm running statistics advance. Aborts with a numeric error
/// carrying the iteration index if any loss goes non-finite.
pub fn calibrate(
    target: &TargetField,
    model: &mut SbnnModel,
    critic: &mut Critic,
    cfg: &CalibrationConfig,
) -> Result<CalibrationRun> {
    let n = target.grid.len();
    cfg.validate(n)?;

    let phi_full = model.embed(target.grid.coords());
    let k = phi_full.cols();

    let mut rng_batch = RngStream::new(cfg.seed, STREAM_BATCH);
    let mut rng_interp = RngStream::new(cfg.seed, STREAM_INTERP);

    let model_sizes: Vec<usize> = model.params.tensors().iter().map(|t| t.values().len()).collect();
    let critic_sizes: Vec<usize> = critic.params.tensors().iter().map(|t| t.values().len()).collect();
    let mut adam_model = Adam::new(cfg.learning_rate, 0.9, 0.999, &model_sizes);
    let mut adam_critic = Adam::new(cfg.critic_learning_rate, 0.5, 0.9, &critic_sizes);

    let mut trajectory = Vec::with_capacity(cfg.iterations);
    let mut evals = Vec::new();

    for iteration in 0..cfg.iterations {
        // assemble the batch
        let idx = rng_batch.sample_indices(n, cfg.batch_size);
        let mut phi_vals = Vec::with_capacity(cfg.batch_size * k);
        let mut y_vals = Vec::with_capacity(cfg.batch_size);
        for &i in &idx {
            phi_vals.extend_from_slice(phi_full.row(i));
            y_vals.push(target.values[i]);
        }
        let phi_batch = Matrix::from_vec(cfg.batch_size, k, phi_vals)?;

        // critic updates against detached predictions
        if cfg.lambda_w > 0.0 {
            let pred_vals = {
                let tape = Tape::new();
                let leaves = model.leaves(&tape, false)?;
                let trace = model.forward_graph(&tape, &leaves, &phi_batch, Mode::Train)?;
                trace.pred.value()
            };
            for _ in 0..cfg.critic_steps_per_update {
                let tape = Tape::new();
                let leaves = critic.leaves(&tape, true)?;
                let pred = tape.constant(cfg.batch_size, 1, pred_vals.clone())?;
                let targ = tape.constant(cfg.batch_size, 1, y_vals.clone())?;
                let losses = loss_wasserstein_and_gp(
                    &tape,
                    critic,
                    &leaves,
                    pred,
                    targ,
                    &mut rng_interp,
                    cfg.gp_coefficient,
                )?;
                if !losses.critic_loss.scalar_value().is_finite() {
                    return Err(Error::NonFiniteLoss { iteration });
                }
                let grads = backward(losses.critic_loss)?;
                let gvals = collect_grads(&grads, &leaves.all);
                adam_critic.step(&gvals, critic.params.tensors_mut());
            }
        }

        // model update on the composite loss
        let tape = Tape::new();
        let model_leaves = model.leaves(&tape, true)?;
        let trace = model.forward_graph(&tape, &model_leaves, &phi_batch, Mode::Train)?;
        if let Some(stats) = &trace.batch_stats {
            model.commit_batch_stats(stats);
        }
        let pred = trace.pred;
        let targ = tape.constant(cfg.batch_size, 1, y_vals.clone())?;

        let l_sup = loss_sup(pred, targ)?;
        let l_moment = loss_moment(pred, targ, cfg.moment_matches_variance)?;
        let l_corr = loss_corr(&tape, pred, targ)?;
        let l_w = if cfg.lambda_w > 0.0 {
            let critic_leaves = critic.leaves(&tape, false)?;
            critic.forward_graph(&critic_leaves, pred)?.mean().neg()
        } else {
            tape.scalar(0.0)
        };

        let l_total = l_sup
            .add(l_w.scale(cfg.lambda_w))?
            .add(l_moment.scale(cfg.lambda_moment))?
            .add(l_corr.scale(cfg.lambda_corr))?;
        if !l_total.scalar_value().is_finite() {
            return Err(Error::NonFiniteLoss { iteration });
        }

        let grads = backward(l_total)?;
        let gvals = collect_grads(&grads, &model_leaves.all);
        adam_model.step(&gvals, model.params.tensors_mut());

        trajectory.push(LossBreakdown {
            iteration,
            l_sup: l_sup.scalar_value(),
            l_w: l_w.scalar_value(),
            l_moment: l_moment.scalar_value(),
            l_corr: l_corr.scalar_value(),
            l_total: l_total.scalar_value(),
        });

        if iteration % 100 == 0 || iteration + 1 == cfg.iterations {
            evals.push(full_grid_eval(model, &phi_full, target, iteration)?);
        }
    }

    Ok(CalibrationRun { trajectory, evals })
}

fn collect_grads(grads: &Gradients<'_>, leaves: &[Var<'_>]) -> Vec<Vec<f64>> {
    leaves.iter().map(|&l| grads.value_wrt(l)).collect()
}

fn full_grid_eval(
    model: &SbnnModel,
    phi_full: &Matrix,
    target: &TargetField,
    iteration: usize,
) -> Result<EvalRecord> {
    let pred = model.predict_embedded(phi_full)?;
    let err = rmse(&pred, &target.values)?;
    let correlation = pearson(&pred, &target.values).unwrap_or(f64::NAN);
    Ok(EvalRecord {
        iteration,
        rmse: err,
        correlation,
    })
}
