//! The spatial network: RBF coordinate embedding, three batch-normalized ELU
//! hidden layers with a residual bridge between the first two, and a linear
//! head over the concatenation of the last hidden layer with the raw
//! embedding. Multi-replica ensemble inference approximates the predictive
//! distribution.

use crate::autodiff::{Tape, Var};
use crate::copula::{init_bias, init_weights, A2Params};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::RngStream;
use crate::stats::mean;

/// RBF embedding: `phi(x)_k = exp(-|x - c_k|^2 / tau^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    pub centers: Vec<(f64, f64)>,
    pub tau: f64,
}

impl EmbeddingConfig {
    /// `side x side` centers on a regular grid over the unit square.
    pub fn grid(side: usize, tau: f64) -> Result<Self> {
        if side < 2 {
            return Err(Error::Domain(format!(
                "embedding grid side must be at least 2, got {side}"
            )));
        }
        let step = 1.0 / (side - 1) as f64;
        let mut centers = Vec::with_capacity(side * side);
        for i in 0..side {
            for j in 0..side {
                centers.push((i as f64 * step, j as f64 * step));
            }
        }
        let cfg = Self { centers, tau };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.centers.is_empty() {
            return Err(Error::Domain("embedding needs at least one center".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Domain(format!(
                "embedding length scale must be positive, got {}",
                self.tau
            )));
        }
        if self
            .centers
            .iter()
            .any(|&(x, y)| !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y))
        {
            return Err(Error::Domain(
                "embedding centers must lie in the unit square".into(),
            ));
        }
        Ok(())
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self::grid(8, 0.3).expect("default embedding grid")
    }
}

/// Embeds a batch of coordinates into a `(batch, K)` feature matrix.
/// Out-of-square points are allowed; the kernel is defined everywhere.
pub fn embed(xs: &[(f64, f64)], cfg: &EmbeddingConfig) -> Matrix {
    let k = cfg.k();
    let inv_tau2 = 1.0 / (cfg.tau * cfg.tau);
    let mut values = Vec::with_capacity(xs.len() * k);
    for &(x, y) in xs {
        for &(cx, cy) in &cfg.centers {
            let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            values.push((-d2 * inv_tau2).exp());
        }
    }
    Matrix::from_vec(xs.len().max(1), k, values).expect("embedding shape")
}

/// Per-feature batch normalization state.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormState {
    pub gamma: Matrix,
    pub beta: Matrix,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub eps: f64,
}

impl BatchNormState {
    pub fn new(features: usize) -> Self {
        Self {
            gamma: Matrix::from_vec(1, features, vec![1.0; features]).unwrap(),
            beta: Matrix::zeros(1, features),
            running_mean: vec![0.0; features],
            running_var: vec![1.0; features],
            momentum: 0.1,
            eps: 1e-5,
        }
    }

    fn update_running(&mut self, batch_mean: &[f64], batch_var_unbiased: &[f64]) {
        let m = self.momentum;
        for (r, &b) in self.running_mean.iter_mut().zip(batch_mean) {
            *r = (1.0 - m) * *r + m * b;
        }
        for (r, &b) in self.running_var.iter_mut().zip(batch_var_unbiased) {
            *r = ((1.0 - m) * *r + m * b).max(self.eps);
        }
    }
}

/// One hidden layer: weights in `(fan_out, fan_in)` order, a `(1, fan_out)`
/// bias row, and batch-norm state.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Matrix,
    pub bias: Matrix,
    pub bn: BatchNormState,
}

/// All trainable state of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: [LayerParams; 3],
    pub w_out: Matrix,
    pub b_out: Matrix,
}

impl ModelParams {
    /// Hidden width shared by the three hidden layers.
    pub fn hidden_width(&self) -> usize {
        self.layers[0].weight.rows()
    }

    /// Embedding width the first layer consumes.
    pub fn embedding_width(&self) -> usize {
        self.layers[0].weight.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let d1 = self.hidden_width();
        let k = self.embedding_width();
        for (i, layer) in self.layers.iter().enumerate() {
            let want_in = if i == 0 { k } else { d1 };
            if layer.weight.rows() != d1 || layer.weight.cols() != want_in {
                return Err(Error::Shape(format!(
                    "layer {i} weight is {}x{}, expected {d1}x{want_in}",
                    layer.weight.rows(),
                    layer.weight.cols()
                )));
            }
            if layer.bias.cols() != d1 || layer.bn.gamma.cols() != d1 {
                return Err(Error::Shape(format!("layer {i} bias/bn width mismatch")));
            }
            if layer.bn.running_var.iter().any(|&v| v <= 0.0) {
                return Err(Error::Numeric(format!(
                    "layer {i} running variance must stay positive"
                )));
            }
        }
        if self.w_out.rows() != 1 || self.w_out.cols() != d1 + k {
            return Err(Error::Shape(format!(
                "output weight is {}x{}, expected 1x{}",
                self.w_out.rows(),
                self.w_out.cols(),
                d1 + k
            )));
        }
        Ok(())
    }

    /// Trainable tensors in a fixed order (the optimizer state is keyed by
    /// position in this list).
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out = Vec::with_capacity(14);
        for layer in &self.layers {
            out.push(&layer.weight);
            out.push(&layer.bias);
            out.push(&layer.bn.gamma);
            out.push(&layer.bn.beta);
        }
        out.push(&self.w_out);
        out.push(&self.b_out);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = Vec::with_capacity(14);
        for layer in &mut self.layers {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
            out.push(&mut layer.bn.gamma);
            out.push(&mut layer.bn.beta);
        }
        out.push(&mut self.w_out);
        out.push(&mut self.b_out);
        out
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub embedding: EmbeddingConfig,
    pub hidden_width: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embedding: EmbeddingConfig::default(),
            hidden_width: 64,
        }
    }
}

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics for normalization; the caller decides whether to
    /// fold the returned statistics into the running state.
    Train,
    /// Running statistics; pure.
    Eval,
}

/// Graph handles for every trainable tensor, in [`ModelParams::tensors`]
/// order.
pub struct ModelLeaves<'t> {
    pub all: Vec<Var<'t>>,
}

impl<'t> ModelLeaves<'t> {
    fn layer(&self, i: usize) -> (Var<'t>, Var<'t>, Var<'t>, Var<'t>) {
        (
            self.all[4 * i],
            self.all[4 * i + 1],
            self.all[4 * i + 2],
            self.all[4 * i + 3],
        )
    }

    fn w_out(&self) -> Var<'t> {
        self.all[12]
    }

    fn b_out(&self) -> Var<'t> {
        self.all[13]
    }
}

/// Batch statistics observed by one train-mode forward pass.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var_unbiased: Vec<f64>,
}

/// Intermediate activations and output of one forward pass.
pub struct ForwardTrace<'t> {
    pub h1: Var<'t>,
    pub h2: Var<'t>,
    pub h3: Var<'t>,
    /// `(batch, 1)` predictions.
    pub pred: Var<'t>,
    /// Present in train mode, one entry per hidden layer.
    pub batch_stats: Option<Vec<BatchStats>>,
}

/// The network: frozen embedding plus trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SbnnModel {
    pub embedding: EmbeddingConfig,
    pub params: ModelParams,
}

impl SbnnModel {
    /// Copula-initialized network. Weight matrices get the full five-step
    /// pipeline; biases start at zero; batch-norm at identity.
    pub fn init(cfg: &ModelConfig, a2: &A2Params, rng: &mut RngStream) -> Result<Self> {
        cfg.embedding.validate()?;
        if cfg.hidden_width == 0 {
            return Err(Error::Domain("hidden width must be positive".into()));
        }
        let k = cfg.embedding.k();
        let d1 = cfg.hidden_width;

        let mut layer = |fan_out: usize, fan_in: usize| -> Result<LayerParams> {
            Ok(LayerParams {
                weight: init_weights(rng, fan_out, fan_in, a2)?,
                bias: Matrix::from_vec(1, fan_out, init_bias(fan_out)?)?,
                bn: BatchNormState::new(fan_out),
            })
        };
        let layers = [layer(d1, k)?, layer(d1, d1)?, layer(d1, d1)?];
        let w_out = init_weights(rng, 1, d1 + k, a2)?;
        let b_out = Matrix::from_vec(1, 1, init_bias(1)?)?;

        let params = ModelParams {
            layers,
            w_out,
            b_out,
        };
        params.validate()?;
        Ok(Self {
            embedding: cfg.embedding.clone(),
            params,
        })
    }

    pub fn embed(&self, xs: &[(f64, f64)]) -> Matrix {
        embed(xs, &self.embedding)
    }

    /// Creates graph leaves for all trainable tensors. `trainable` controls
    /// whether they receive gradients.
    pub fn leaves<'t>(&self, tape: &'t Tape, trainable: bool) -> Result<ModelLeaves<'t>> {
        let mut all = Vec::with_capacity(14);
        for t in self.params.tensors() {
            let var = if trainable {
                tape.leaf(t.rows(), t.cols(), t.values().to_vec())?
            } else {
                tape.constant(t.rows(), t.cols(), t.values().to_vec())?
            };
            all.push(var);
        }
        Ok(ModelLeaves { all })
    }

    /// One forward pass over a pre-embedded batch.
    pub fn forward_graph<'t>(
        &self,
        tape: &'t Tape,
        leaves: &ModelLeaves<'t>,
        phi: &Matrix,
        mode: Mode,
    ) -> Result<ForwardTrace<'t>> {
        let batch = phi.rows();
        if mode == Mode::Train && batch < 2 {
            return Err(Error::Degenerate(format!(
                "train-mode forward needs a batch of at least 2, got {batch}"
            )));
        }
        if phi.cols() != self.params.embedding_width() {
            return Err(Error::Shape(format!(
                "embedding width {} does not match the first layer ({})",
                phi.cols(),
                self.params.embedding_width()
            )));
        }

        let phi_var = tape.constant(batch, phi.cols(), phi.values().to_vec())?;
        let mut stats = mode.eq(&Mode::Train).then(Vec::new);

        let mut hidden = |input: Var<'t>, i: usize| -> Result<Var<'t>> {
            let (w, b, gamma, beta) = leaves.layer(i);
            let pre = input
                .matmul_nt(w)?
                .add(b.broadcast_row(batch)?)?;
            let (normed, batch_stats) =
                batchnorm(tape, pre, gamma, beta, &self.params.layers[i].bn, mode)?;
            if let (Some(all), Some(s)) = (stats.as_mut(), batch_stats) {
                all.push(s);
            }
            Ok(normed.elu(1.0))
        };

        let h1 = hidden(phi_var, 0)?;
        let h2 = hidden(h1, 1)?.add(h1)?;
        let h3 = hidden(h2, 2)?;

        let features = h3.concat_cols(phi_var)?;
        let pred = features
            .matmul_nt(leaves.w_out())?
            .add(leaves.b_out().broadcast_row(batch)?)?;

        Ok(ForwardTrace {
            h1,
            h2,
            h3,
            pred,
            batch_stats: stats,
        })
    }

    /// Folds train-mode batch statistics into the running state.
    pub fn commit_batch_stats(&mut self, stats: &[BatchStats]) {
        for (layer, s) in self.params.layers.iter_mut().zip(stats) {
            layer.bn.update_running(&s.mean, &s.var_unbiased);
        }
    }

    /// Pure eval-mode prediction for a batch of coordinates.
    pub fn predict(&self, xs: &[(f64, f64)]) -> Result<Vec<f64>> {
        let phi = self.embed(xs);
        self.predict_embedded(&phi)
    }

    /// Pure eval-mode prediction for a pre-embedded batch.
    pub fn predict_embedded(&self, phi: &Matrix) -> Result<Vec<f64>> {
        let tape = Tape::new();
        let leaves = self.leaves(&tape, false)?;
        let trace = self.forward_graph(&tape, &leaves, phi, Mode::Eval)?;
        Ok(trace.pred.value())
    }
}

fn batchnorm<'t>(
    tape: &'t Tape,
    x: Var<'t>,
    gamma: Var<'t>,
    beta: Var<'t>,
    state: &BatchNormState,
    mode: Mode,
) -> Result<(Var<'t>, Option<BatchStats>)> {
    let (batch, features) = x.shape();
    let expand = |row: Var<'t>| row.broadcast_row(batch);
    match mode {
        Mode::Train => {
            let mu = x.mean_axis0();
            let centered = x.sub(expand(mu)?)?;
            let var = centered.square().mean_axis0();
            let std = var.add_scalar(state.eps).sqrt()?;
            let normed = centered.div(expand(std)?)?;
            let out = normed.mul(expand(gamma)?)?.add(expand(beta)?)?;
            let n = batch as f64;
            let correction = n / (n - 1.0);
            let stats = BatchStats {
                mean: mu.value(),
                var_unbiased: var.value().iter().map(|v| v * correction).collect(),
            };
            Ok((out, Some(stats)))
        }
        Mode::Eval => {
            let rm = tape.constant(1, features, state.running_mean.clone())?;
            let sd: Vec<f64> = state
                .running_var
                .iter()
                .map(|&v| (v + state.eps).sqrt())
                .collect();
            let rs = tape.constant(1, features, sd)?;
            let normed = x.sub(expand(rm)?)?.div(expand(rs)?)?;
            let out = normed.mul(expand(gamma)?)?.add(expand(beta)?)?;
            Ok((out, None))
        }
    }
}

/// Ensemble prediction: per-point mean and population standard deviation
/// across replica eval-mode forwards.
pub fn predict_ensemble(
    xs: &[(f64, f64)],
    replicas: &[SbnnModel],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if replicas.len() < 2 {
        return Err(Error::Domain(format!(
            "ensemble inference needs at least 2 replicas, got {}",
            replicas.len()
        )));
    }
    let preds: Vec<Vec<f64>> = replicas
        .iter()
        .map(|m| m.predict(xs))
        .collect::<Result<_>>()?;
    let r = replicas.len() as f64;
    let mut means = Vec::with_capacity(xs.len());
    let mut stds = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        let vals: Vec<f64> = preds.iter().map(|p| p[i]).collect();
        let m = mean(&vals);
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / r;
        means.push(m);
        stds.push(var.sqrt());
    }
    Ok((means, stds))
}

// --- checkpoint format -----------------------------------------------------
//
// Little-endian binary, self-contained:
//   magic "SBNNCKPT", version u32 = 1,
//   tau f64, K u64, centers as 2K f64,
//   per hidden layer: weight, bias, gamma, beta, running_mean, running_var,
//     momentum f64, eps f64,
//   then w_out, b_out.
// Every tensor is (rows u64, cols u64, rows*cols f64).

const CKPT_MAGIC: &[u8; 8] = b"SBNNCKPT";
const CKPT_VERSION: u32 = 1;

struct ByteWriter(Vec<u8>);

impl ByteWriter {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn tensor(&mut self, rows: usize, cols: usize, values: &[f64]) {
        self.u64(rows as u64);
        self.u64(cols as u64);
        for &v in values {
            self.f64(v);
        }
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Numeric("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.u64()? as usize;
        let cols = self.u64()? as usize;
        if rows == 0 || cols == 0 || rows.saturating_mul(cols) > 1 << 28 {
            return Err(Error::Numeric(format!(
                "implausible checkpoint tensor {rows}x{cols}"
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(self.f64()?);
        }
        Matrix::from_vec(rows, cols, values)
    }
    fn vector(&mut self) -> Result<Vec<f64>> {
        Ok(self.matrix()?.into_values())
    }
}

impl SbnnModel {
    /// Serializes the calibrated network (embedding plus all parameters and
    /// batch-norm state) so a replica can be reloaded exactly.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter(Vec::new());
        w.0.extend_from_slice(CKPT_MAGIC);
        w.u32(CKPT_VERSION);
        w.f64(self.embedding.tau);
        w.u64(self.embedding.k() as u64);
        for &(x, y) in &self.embedding.centers {
            w.f64(x);
            w.f64(y);
        }
        for layer in &self.params.layers {
            w.tensor(layer.weight.rows(), layer.weight.cols(), layer.weight.values());
            w.tensor(layer.bias.rows(), layer.bias.cols(), layer.bias.values());
            w.tensor(layer.bn.gamma.rows(), layer.bn.gamma.cols(), layer.bn.gamma.values());
            w.tensor(layer.bn.beta.rows(), layer.bn.beta.cols(), layer.bn.beta.values());
            w.tensor(1, layer.bn.running_mean.len(), &layer.bn.running_mean);
            w.tensor(1, layer.bn.running_var.len(), &layer.bn.running_var);
            w.f64(layer.bn.momentum);
            w.f64(layer.bn.eps);
        }
        w.tensor(self.params.w_out.rows(), self.params.w_out.cols(), self.params.w_out.values());
        w.tensor(self.params.b_out.rows(), self.params.b_out.cols(), self.params.b_out.values());
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(8)? != CKPT_MAGIC {
            return Err(Error::Numeric("not a model checkpoint".into()));
        }
        let version = r.u32()?;
        if version != CKPT_VERSION {
            return Err(Error::Numeric(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let tau = r.f64()?;
        let k = r.u64()? as usize;
        if k == 0 || k > 1 << 20 {
            return Err(Error::Numeric(format!("implausible center count {k}")));
        }
        let mut centers = Vec::with_capacity(k);
        for _ in 0..k {
            let x = r.f64()?;
            let y = r.f64()?;
            centers.push((x, y));
        }
        let embedding = EmbeddingConfig { centers, tau };
        embedding.validate()?;

        let mut read_layer = || -> Result<LayerParams> {
            let weight = r.matrix()?;
            let bias = r.matrix()?;
            let gamma = r.matrix()?;
            let beta = r.matrix()?;
            let running_mean = r.vector()?;
            let running_var = r.vector()?;
            let momentum = r.f64()?;
            let eps = r.f64()?;
            Ok(LayerParams {
                weight,
                bias,
                bn: BatchNormState {
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    momentum,
                    eps,
                },
            })
        };
        let layers = [read_layer()?, read_layer()?, read_layer()?];
        let w_out = r.matrix()?;
        let b_out = r.matrix()?;

        let params = ModelParams {
            layers,
            w_out,
            b_out,
        };
        params.validate()?;
        Ok(Self { embedding, params })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
