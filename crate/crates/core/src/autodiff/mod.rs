//! Reverse-mode automatic differentiation over dynamically built graphs.
//!
//! Values are dense row-major matrices (scalars are 1x1). Operations append
//! nodes to a [`Tape`]; [`backward`] walks the tape in reverse and builds
//! each pullback *out of the same primitive operations*, so gradients are
//! themselves differentiable graph nodes. That is what lets the critic's
//! gradient penalty, a function of an input gradient, be differentiated
//! with respect to network parameters.
//!
//! A tape is single-threaded; independent tapes can live on separate threads.

mod kernels;

use crate::error::{Error, Result};
use std::cell::RefCell;

/// Append-only computation graph.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    op: Op,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

// some variants keep their input id or attribute purely as provenance
#[allow(dead_code)]
#[derive(Clone, Copy)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddScalar(usize, f64),
    MatMul(usize, usize),
    /// a * b^T
    MatMulNT(usize, usize),
    /// a^T * b
    MatMulTN(usize, usize),
    SumAll(usize),
    MeanAll(usize),
    SumAxis0(usize),
    SumAxis1(usize),
    BroadcastRow(usize),
    BroadcastCol(usize),
    Sqrt(usize),
    Square(usize),
    Exp(usize),
    Sigmoid(usize),
    Abs(usize),
    Sign(usize),
    Elu(usize, f64),
    EluGrad(usize, f64),
    EluGrad2(usize, f64),
    LeakyRelu(usize, f64),
    LeakyReluGrad(usize, f64),
    ConcatCols(usize, usize),
    SliceCols(usize, usize, usize),
}

/// Handle to a node on a tape. Cheap to copy; all operations go through it.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A differentiable leaf (a parameter or an input that will receive a
    /// gradient).
    pub fn leaf(&self, rows: usize, cols: usize, values: Vec<f64>) -> Result<Var<'_>> {
        self.push_checked(rows, cols, values, Op::Leaf, true)
    }

    /// A non-differentiable constant.
    pub fn constant(&self, rows: usize, cols: usize, values: Vec<f64>) -> Result<Var<'_>> {
        self.push_checked(rows, cols, values, Op::Leaf, false)
    }

    pub fn scalar(&self, v: f64) -> Var<'_> {
        self.push(1, 1, vec![v], Op::Leaf, false)
    }

    /// Clears accumulated `.grad` buffers on every node.
    pub fn zero_grad(&self) {
        for node in self.nodes.borrow_mut().iter_mut() {
            node.grad = None;
        }
    }

    fn push_checked(
        &self,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        op: Op,
        requires_grad: bool,
    ) -> Result<Var<'_>> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "node {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(self.push(rows, cols, values, op, requires_grad))
    }

    fn push(&self, rows: usize, cols: usize, values: Vec<f64>, op: Op, requires_grad: bool) -> Var<'_> {
        debug_assert_eq!(values.len(), rows * cols);
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            rows,
            cols,
            values,
            op,
            requires_grad,
            grad: None,
        });
        Var { tape: self, id }
    }

    fn dims(&self, id: usize) -> (usize, usize) {
        let nodes = self.nodes.borrow();
        (nodes[id].rows, nodes[id].cols)
    }

    fn requires(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    fn values_of(&self, id: usize) -> Vec<f64> {
        self.nodes.borrow()[id].values.clone()
    }

    fn with_values<R>(&self, id: usize, f: impl FnOnce(&[f64]) -> R) -> R {
        f(&self.nodes.borrow()[id].values)
    }

    fn with_values2<R>(&self, a: usize, b: usize, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
        let nodes = self.nodes.borrow();
        f(&nodes[a].values, &nodes[b].values)
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn rows(&self) -> usize {
        self.tape.dims(self.id).0
    }

    pub fn cols(&self) -> usize {
        self.tape.dims(self.id).1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.dims(self.id)
    }

    pub fn len(&self) -> usize {
        let (r, c) = self.shape();
        r * c
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_scalar(&self) -> bool {
        self.shape() == (1, 1)
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.requires(self.id)
    }

    pub fn value(&self) -> Vec<f64> {
        self.tape.values_of(self.id)
    }

    pub fn scalar_value(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.tape.nodes.borrow()[self.id].values[0]
    }

    /// Accumulated gradient buffer, if [`backward`] has deposited one.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.tape.nodes.borrow()[self.id].grad.clone()
    }

    fn same_tape(&self, other: Var<'t>) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::Graph("operands belong to different tapes".into()))
        }
    }

    fn same_shape(&self, other: Var<'t>, what: &str) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    fn binary_elementwise(
        self,
        other: Var<'t>,
        what: &str,
        op: fn(usize, usize) -> Op,
        kernel: fn(&[f64], &[f64]) -> Vec<f64>,
    ) -> Result<Var<'t>> {
        self.same_tape(other)?;
        self.same_shape(other, what)?;
        let values = self.tape.with_values2(self.id, other.id, kernel);
        let rg = self.requires_grad() || other.requires_grad();
        let (r, c) = self.shape();
        Ok(self.tape.push(r, c, values, op(self.id, other.id), rg))
    }

    fn unary_map(self, op: Op, f: impl Fn(f64) -> f64) -> Var<'t> {
        let values: Vec<f64> = self.tape.with_values(self.id, |v| v.iter().map(|&x| f(x)).collect());
        let (r, c) = self.shape();
        self.tape.push(r, c, values, op, self.requires_grad())
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_elementwise(other, "add", Op::Add, kernels::add)
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_elementwise(other, "sub", Op::Sub, kernels::sub)
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_elementwise(other, "mul", Op::Mul, kernels::mul)
    }

    pub fn div(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_elementwise(other, "div", Op::Div, kernels::div)
    }

    pub fn neg(self) -> Var<'t> {
        self.unary_map(Op::Neg(self.id), |x| -x)
    }

    pub fn scale(self, c: f64) -> Var<'t> {
        self.unary_map(Op::Scale(self.id, c), |x| c * x)
    }

    pub fn add_scalar(self, c: f64) -> Var<'t> {
        self.unary_map(Op::AddScalar(self.id, c), |x| x + c)
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let (m, k) = self.shape();
        let (k2, n) = other.shape();
        if k != k2 {
            return Err(Error::Shape(format!("matmul: {m}x{k} by {k2}x{n}")));
        }
        let values = self
            .tape
            .with_values2(self.id, other.id, |a, b| kernels::matmul(a, b, m, k, n));
        let rg = self.requires_grad() || other.requires_grad();
        Ok(self
            .tape
            .push(m, n, values, Op::MatMul(self.id, other.id), rg))
    }

    /// `self * other^T`.
    pub fn matmul_nt(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let (m, k) = self.shape();
        let (n, k2) = other.shape();
        if k != k2 {
            return Err(Error::Shape(format!("matmul_nt: {m}x{k} by ({n}x{k2})^T")));
        }
        let values = self
            .tape
            .with_values2(self.id, other.id, |a, b| kernels::matmul_nt(a, b, m, k, n));
        let rg = self.requires_grad() || other.requires_grad();
        Ok(self
            .tape
            .push(m, n, values, Op::MatMulNT(self.id, other.id), rg))
    }

    /// `self^T * other`.
    pub fn matmul_tn(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let (k, m) = self.shape();
        let (k2, n) = other.shape();
        if k != k2 {
            return Err(Error::Shape(format!("matmul_tn: ({k}x{m})^T by {k2}x{n}")));
        }
        let values = self
            .tape
            .with_values2(self.id, other.id, |a, b| kernels::matmul_tn(a, b, m, k, n));
        let rg = self.requires_grad() || other.requires_grad();
        Ok(self
            .tape
            .push(m, n, values, Op::MatMulTN(self.id, other.id), rg))
    }

    pub fn sum(self) -> Var<'t> {
        let total: f64 = self.tape.with_values(self.id, |v| v.iter().sum());
        self.tape
            .push(1, 1, vec![total], Op::SumAll(self.id), self.requires_grad())
    }

    pub fn mean(self) -> Var<'t> {
        let total: f64 = self.tape.with_values(self.id, |v| v.iter().sum());
        let n = self.len() as f64;
        self.tape.push(
            1,
            1,
            vec![total / n],
            Op::MeanAll(self.id),
            self.requires_grad(),
        )
    }

    /// Column sums: `(B, F) -> (1, F)`.
    pub fn sum_axis0(self) -> Var<'t> {
        let (r, c) = self.shape();
        let values = self.tape.with_values(self.id, |v| kernels::sum_axis0(v, r, c));
        self.tape
            .push(1, c, values, Op::SumAxis0(self.id), self.requires_grad())
    }

    /// Row sums: `(B, F) -> (B, 1)`.
    pub fn sum_axis1(self) -> Var<'t> {
        let (r, c) = self.shape();
        let values = self.tape.with_values(self.id, |v| kernels::sum_axis1(v, r, c));
        self.tape
            .push(r, 1, values, Op::SumAxis1(self.id), self.requires_grad())
    }

    /// Column means: `(B, F) -> (1, F)`.
    pub fn mean_axis0(self) -> Var<'t> {
        let rows = self.rows() as f64;
        self.sum_axis0().scale(1.0 / rows)
    }

    /// Repeats a `(1, F)` row down to `(rows, F)`.
    pub fn broadcast_row(self, rows: usize) -> Result<Var<'t>> {
        let (r, c) = self.shape();
        if r != 1 {
            return Err(Error::Shape(format!(
                "broadcast_row needs a 1-row input, got {r}x{c}"
            )));
        }
        let values = self
            .tape
            .with_values(self.id, |v| kernels::broadcast_row(v, rows));
        Ok(self
            .tape
            .push(rows, c, values, Op::BroadcastRow(self.id), self.requires_grad()))
    }

    /// Repeats a `(B, 1)` column out to `(B, cols)`.
    pub fn broadcast_col(self, cols: usize) -> Result<Var<'t>> {
        let (r, c) = self.shape();
        if c != 1 {
            return Err(Error::Shape(format!(
                "broadcast_col needs a 1-column input, got {r}x{c}"
            )));
        }
        let values = self
            .tape
            .with_values(self.id, |v| kernels::broadcast_col(v, cols));
        Ok(self
            .tape
            .push(r, cols, values, Op::BroadcastCol(self.id), self.requires_grad()))
    }

    /// Broadcasts a scalar to an arbitrary shape.
    pub fn broadcast_to(self, rows: usize, cols: usize) -> Result<Var<'t>> {
        if !self.is_scalar() {
            return Err(Error::Shape("broadcast_to needs a scalar".into()));
        }
        self.broadcast_col(cols)?.broadcast_row(rows)
    }

    pub fn sqrt(self) -> Result<Var<'t>> {
        if self.tape.with_values(self.id, |v| v.iter().any(|&x| x < 0.0)) {
            return Err(Error::Numeric(format!(
                "sqrt of negative value (node {})",
                self.id
            )));
        }
        Ok(self.unary_map(Op::Sqrt(self.id), f64::sqrt))
    }

    pub fn square(self) -> Var<'t> {
        self.unary_map(Op::Square(self.id), |x| x * x)
    }

    pub fn exp(self) -> Var<'t> {
        self.unary_map(Op::Exp(self.id), f64::exp)
    }

    pub fn sigmoid(self) -> Var<'t> {
        self.unary_map(Op::Sigmoid(self.id), kernels::sigmoid)
    }

    pub fn abs(self) -> Var<'t> {
        self.unary_map(Op::Abs(self.id), f64::abs)
    }

    /// Elementwise sign; treated as piecewise constant (zero derivative).
    pub fn sign(self) -> Var<'t> {
        let values: Vec<f64> = self
            .tape
            .with_values(self.id, |v| v.iter().map(|&x| kernels::sign(x)).collect());
        let (r, c) = self.shape();
        self.tape.push(r, c, values, Op::Sign(self.id), false)
    }

    pub fn elu(self, alpha: f64) -> Var<'t> {
        self.unary_map(Op::Elu(self.id, alpha), |x| kernels::elu(x, alpha))
    }

    fn elu_grad(self, alpha: f64) -> Var<'t> {
        self.unary_map(Op::EluGrad(self.id, alpha), |x| kernels::elu_grad(x, alpha))
    }

    fn elu_grad2(self, alpha: f64) -> Var<'t> {
        self.unary_map(Op::EluGrad2(self.id, alpha), |x| kernels::elu_grad2(x, alpha))
    }

    pub fn leaky_relu(self, slope: f64) -> Var<'t> {
        self.unary_map(Op::LeakyRelu(self.id, slope), |x| {
            kernels::leaky_relu(x, slope)
        })
    }

    /// Piecewise-constant slope factor of leaky ReLU (zero derivative).
    fn leaky_relu_grad(self, slope: f64) -> Var<'t> {
        let values: Vec<f64> = self.tape.with_values(self.id, |v| {
            v.iter().map(|&x| kernels::leaky_relu_grad(x, slope)).collect()
        });
        let (r, c) = self.shape();
        self.tape
            .push(r, c, values, Op::LeakyReluGrad(self.id, slope), false)
    }

    pub fn concat_cols(self, other: Var<'t>) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let (r, ca) = self.shape();
        let (r2, cb) = other.shape();
        if r != r2 {
            return Err(Error::Shape(format!(
                "concat_cols: row counts {r} vs {r2}"
            )));
        }
        let values = self.tape.with_values2(self.id, other.id, |a, b| {
            kernels::concat_cols(a, b, r, ca, cb)
        });
        let rg = self.requires_grad() || other.requires_grad();
        Ok(self
            .tape
            .push(r, ca + cb, values, Op::ConcatCols(self.id, other.id), rg))
    }

    pub fn slice_cols(self, start: usize, end: usize) -> Result<Var<'t>> {
        let (r, c) = self.shape();
        if start >= end || end > c {
            return Err(Error::Shape(format!(
                "slice_cols [{start}, {end}) of {r}x{c}"
            )));
        }
        let values = self
            .tape
            .with_values(self.id, |v| kernels::slice_cols(v, r, c, start, end));
        Ok(self.tape.push(
            r,
            end - start,
            values,
            Op::SliceCols(self.id, start, end),
            self.requires_grad(),
        ))
    }

    /// Euclidean norm of all entries: `sqrt(sum(x^2))`.
    pub fn norm2(self) -> Result<Var<'t>> {
        self.square().sum().sqrt()
    }

    /// Per-row Euclidean norms `(B, F) -> (B, 1)`, with a small epsilon under
    /// the root so the gradient stays finite at zero.
    pub fn row_norms(self, eps: f64) -> Result<Var<'t>> {
        self.square().sum_axis1().add_scalar(eps).sqrt()
    }
}

/// Cotangent handles produced by a backward pass.
pub struct Gradients<'t> {
    tape: &'t Tape,
    cotangent: Vec<Option<usize>>,
}

impl<'t> Gradients<'t> {
    /// The gradient of the loss with respect to `v`, as a graph node, if `v`
    /// participates in the loss.
    pub fn wrt(&self, v: Var<'t>) -> Option<Var<'t>> {
        if !std::ptr::eq(self.tape, v.tape) {
            return None;
        }
        self.cotangent
            .get(v.id)
            .copied()
            .flatten()
            .map(|id| Var { tape: self.tape, id })
    }

    /// Gradient values for `v`; zeros when `v` does not affect the loss.
    pub fn value_wrt(&self, v: Var<'t>) -> Vec<f64> {
        match self.wrt(v) {
            Some(g) => g.value(),
            None => vec![0.0; v.len()],
        }
    }
}

/// Reverse pass from a scalar loss.
///
/// Builds gradient nodes for every differentiable ancestor and additionally
/// accumulates values into the `.grad` buffer of each `requires_grad` leaf;
/// calling it twice therefore doubles leaf gradients.
pub fn backward(loss: Var<'_>) -> Result<Gradients<'_>> {
    let grads = backward_nodes(loss)?;
    let mut nodes = loss.tape.nodes.borrow_mut();
    for id in 0..grads.cotangent.len() {
        if let Some(cot) = grads.cotangent[id] {
            if matches!(nodes[id].op, Op::Leaf) && nodes[id].requires_grad {
                let contribution = nodes[cot].values.clone();
                match &mut nodes[id].grad {
                    Some(buf) => {
                        for (b, c) in buf.iter_mut().zip(&contribution) {
                            *b += c;
                        }
                    }
                    slot => *slot = Some(contribution),
                }
            }
        }
    }
    drop(nodes);
    Ok(grads)
}

/// The gradient of a scalar `loss` with respect to `x`, returned as graph
/// nodes so it can participate in further differentiable expressions.
/// No `.grad` buffers are touched.
pub fn grad_wrt_input<'t>(loss: Var<'t>, x: Var<'t>) -> Result<Var<'t>> {
    if !std::ptr::eq(loss.tape, x.tape) {
        return Err(Error::Graph(
            "input does not belong to the loss's graph".into(),
        ));
    }
    if !x.requires_grad() {
        return Err(Error::Graph(format!(
            "node {} is not differentiable (requires_grad is false)",
            x.id
        )));
    }
    let grads = backward_nodes(loss)?;
    match grads.wrt(x) {
        Some(g) => Ok(g),
        // reachable but unaffected: the gradient is identically zero
        None => x.tape.constant(x.rows(), x.cols(), vec![0.0; x.len()]),
    }
}

fn backward_nodes(loss: Var<'_>) -> Result<Gradients<'_>> {
    if !loss.is_scalar() {
        return Err(Error::Shape(format!(
            "backward needs a scalar loss, got {:?}",
            loss.shape()
        )));
    }
    let tape = loss.tape;
    let mut cot: Vec<Option<usize>> = vec![None; loss.id + 1];
    cot[loss.id] = Some(tape.scalar(1.0).id);

    for id in (0..=loss.id).rev() {
        let Some(g_id) = cot[id] else { continue };
        if !tape.requires(id) {
            continue;
        }
        let op = tape.nodes.borrow()[id].op;
        let out = Var { tape, id };
        let g = Var { tape, id: g_id };
        pullback(op, out, g, &mut cot)?;
    }
    Ok(Gradients {
        tape,
        cotangent: cot,
    })
}

fn accumulate<'t>(cot: &mut [Option<usize>], input: Var<'t>, contribution: Var<'t>) -> Result<()> {
    if !input.requires_grad() {
        return Ok(());
    }
    cot[input.id] = Some(match cot[input.id] {
        None => contribution.id,
        Some(prev) => {
            let prev = Var {
                tape: input.tape,
                id: prev,
            };
            prev.add(contribution)?.id
        }
    });
    Ok(())
}

// One vector-Jacobian product, expressed in primitive ops so that the result
// is itself differentiable.
fn pullback<'t>(op: Op, out: Var<'t>, g: Var<'t>, cot: &mut [Option<usize>]) -> Result<()> {
    let tape = out.tape;
    let v = |id: usize| Var { tape, id };
    match op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            accumulate(cot, v(a), g)?;
            accumulate(cot, v(b), g)?;
        }
        Op::Sub(a, b) => {
            accumulate(cot, v(a), g)?;
            accumulate(cot, v(b), g.neg())?;
        }
        Op::Mul(a, b) => {
            accumulate(cot, v(a), g.mul(v(b))?)?;
            accumulate(cot, v(b), g.mul(v(a))?)?;
        }
        Op::Div(a, b) => {
            accumulate(cot, v(a), g.div(v(b))?)?;
            // d(a/b)/db = -out/b
            accumulate(cot, v(b), g.mul(out)?.div(v(b))?.neg())?;
        }
        Op::Neg(a) => accumulate(cot, v(a), g.neg())?,
        Op::Scale(a, c) => accumulate(cot, v(a), g.scale(c))?,
        Op::AddScalar(a, _) => accumulate(cot, v(a), g)?,
        Op::MatMul(a, b) => {
            accumulate(cot, v(a), g.matmul_nt(v(b))?)?;
            accumulate(cot, v(b), v(a).matmul_tn(g)?)?;
        }
        Op::MatMulNT(a, b) => {
            accumulate(cot, v(a), g.matmul(v(b))?)?;
            accumulate(cot, v(b), g.matmul_tn(v(a))?)?;
        }
        Op::MatMulTN(a, b) => {
            accumulate(cot, v(a), v(b).matmul_nt(g)?)?;
            accumulate(cot, v(b), v(a).matmul(g)?)?;
        }
        Op::SumAll(a) => {
            let (r, c) = v(a).shape();
            accumulate(cot, v(a), g.broadcast_to(r, c)?)?;
        }
        Op::MeanAll(a) => {
            let (r, c) = v(a).shape();
            let n = (r * c) as f64;
            accumulate(cot, v(a), g.scale(1.0 / n).broadcast_to(r, c)?)?;
        }
        Op::SumAxis0(a) => {
            let rows = v(a).rows();
            accumulate(cot, v(a), g.broadcast_row(rows)?)?;
        }
        Op::SumAxis1(a) => {
            let cols = v(a).cols();
            accumulate(cot, v(a), g.broadcast_col(cols)?)?;
        }
        Op::BroadcastRow(a) => accumulate(cot, v(a), g.sum_axis0())?,
        Op::BroadcastCol(a) => accumulate(cot, v(a), g.sum_axis1())?,
        Op::Sqrt(a) => {
            // d sqrt(x) = g / (2 sqrt(x))
            accumulate(cot, v(a), g.div(out)?.scale(0.5))?;
        }
        Op::Square(a) => accumulate(cot, v(a), g.mul(v(a))?.scale(2.0))?,
        Op::Exp(a) => accumulate(cot, v(a), g.mul(out)?)?,
        Op::Sigmoid(a) => {
            // s (1 - s) in terms of the output node
            let one_minus = out.neg().add_scalar(1.0);
            accumulate(cot, v(a), g.mul(out)?.mul(one_minus)?)?;
        }
        Op::Abs(a) => accumulate(cot, v(a), g.mul(v(a).sign())?)?,
        Op::Sign(_) | Op::LeakyReluGrad(_, _) => {
            // piecewise constant: zero derivative almost everywhere
        }
        Op::Elu(a, alpha) => accumulate(cot, v(a), g.mul(v(a).elu_grad(alpha))?)?,
        Op::EluGrad(a, alpha) | Op::EluGrad2(a, alpha) => {
            // alpha e^x below zero is its own derivative; zero above
            accumulate(cot, v(a), g.mul(v(a).elu_grad2(alpha))?)?;
        }
        Op::LeakyRelu(a, slope) => {
            accumulate(cot, v(a), g.mul(v(a).leaky_relu_grad(slope))?)?;
        }
        Op::ConcatCols(a, b) => {
            let ca = v(a).cols();
            let cb = v(b).cols();
            accumulate(cot, v(a), g.slice_cols(0, ca)?)?;
            accumulate(cot, v(b), g.slice_cols(ca, ca + cb)?)?;
        }
        Op::SliceCols(a, start, end) => {
            let (r, c) = v(a).shape();
            let mut padded = g;
            if start > 0 {
                let zeros = tape.constant(r, start, vec![0.0; r * start])?;
                padded = zeros.concat_cols(padded)?;
            }
            if end < c {
                let zeros = tape.constant(r, c - end, vec![0.0; r * (c - end)])?;
                padded = padded.concat_cols(zeros)?;
            }
            accumulate(cot, v(a), padded)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf<'t>(tape: &'t Tape, rows: usize, cols: usize, values: &[f64]) -> Var<'t> {
        tape.leaf(rows, cols, values.to_vec()).unwrap()
    }

    #[test]
    fn sum_gradient_is_ones() {
        let tape = Tape::new();
        let w = leaf(&tape, 2, 3, &[1.0, -2.0, 0.5, 3.0, 0.0, -1.0]);
        let loss = w.sum();
        backward(loss).unwrap();
        assert_eq!(w.grad().unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn quadratic_gradient() {
        let tape = Tape::new();
        let w = leaf(&tape, 1, 4, &[0.0, 1.0, 2.0, 3.0]);
        let c = tape.constant(1, 4, vec![1.0; 4]).unwrap();
        let loss = w.sub(c).unwrap().square().mean();
        backward(loss).unwrap();
        let grad = w.grad().unwrap();
        for (i, x) in [0.0f64, 1.0, 2.0, 3.0].iter().enumerate() {
            let want = 2.0 * (x - 1.0) / 4.0;
            assert!((grad[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn repeated_backward_accumulates() {
        let tape = Tape::new();
        let w = leaf(&tape, 1, 2, &[2.0, 5.0]);
        let loss = w.sum();
        backward(loss).unwrap();
        backward(loss).unwrap();
        assert_eq!(w.grad().unwrap(), vec![2.0, 2.0]);
        tape.zero_grad();
        assert!(w.grad().is_none());
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let tape = Tape::new();
        let w = leaf(&tape, 2, 2, &[1.0; 4]);
        assert!(matches!(backward(w), Err(Error::Shape(_))));
    }

    #[test]
    fn elu_values() {
        let tape = Tape::new();
        let x = leaf(&tape, 1, 3, &[-50.0, 0.0, 2.5]);
        let y = x.elu(1.3);
        let v = y.value();
        assert!((v[0] + 1.3).abs() < 1e-12, "elu(-inf) -> -alpha");
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 2.5);
    }

    #[test]
    fn sigmoid_derivative_at_zero() {
        let tape = Tape::new();
        let x = leaf(&tape, 1, 1, &[0.0]);
        let y = x.sigmoid();
        backward(y).unwrap();
        assert!((x.grad().unwrap()[0] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn linearity_of_backward() {
        // grad(a f + b g) == a grad(f) + b grad(g)
        fn make_losses(tape: &Tape) -> (Var<'_>, Var<'_>, Var<'_>) {
            let w = tape.leaf(1, 3, vec![0.3, -1.2, 2.2]).unwrap();
            let f = w.square().sum();
            let g = w.exp().mean();
            (w, f, g)
        }

        let t1 = Tape::new();
        let (w1, f1, g1) = make_losses(&t1);
        let combined = f1.scale(2.5).add(g1.scale(-0.7)).unwrap();
        backward(combined).unwrap();
        let got = w1.grad().unwrap();

        let t2 = Tape::new();
        let (w2, f2, _) = make_losses(&t2);
        backward(f2).unwrap();
        let gf = w2.grad().unwrap();
        let t3 = Tape::new();
        let (w3, _, g3) = make_losses(&t3);
        backward(g3).unwrap();
        let gg = w3.grad().unwrap();

        for i in 0..3 {
            let want = 2.5 * gf[i] - 0.7 * gg[i];
            assert!((got[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_wrt_input_quadratic() {
        // f = 0.5 |x|^2  =>  df/dx = x
        let tape = Tape::new();
        let x = leaf(&tape, 1, 3, &[1.0, -2.0, 3.0]);
        let f = x.square().sum().scale(0.5);
        let gx = grad_wrt_input(f, x).unwrap();
        assert_eq!(gx.value(), vec![1.0, -2.0, 3.0]);
        // and the gradient is itself differentiable: sum(gx) has d/dx = 1
        let s = gx.sum();
        backward(s).unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn grad_wrt_input_linear_penalty_has_no_param_grad() {
        // f = c . x with constant c: grad_x f == c does not depend on x,
        // so x receives zero gradient through the penalty.
        let tape = Tape::new();
        let x = leaf(&tape, 1, 2, &[0.7, -0.4]);
        let c = tape.constant(1, 2, vec![3.0, 4.0]).unwrap();
        let f = x.mul(c).unwrap().sum();
        let gx = grad_wrt_input(f, x).unwrap();
        assert_eq!(gx.value(), vec![3.0, 4.0]);
        let penalty = gx.norm2().unwrap().add_scalar(-1.0).square();
        let grads = backward(penalty).unwrap();
        // |c| = 5 regardless of x
        assert!((penalty.scalar_value() - 16.0).abs() < 1e-12);
        assert_eq!(grads.value_wrt(x), vec![0.0, 0.0]);
    }

    #[test]
    fn grad_wrt_input_rejects_foreign_and_constant_nodes() {
        let tape = Tape::new();
        let x = leaf(&tape, 1, 1, &[1.0]);
        let f = x.square().sum();
        let other = Tape::new();
        let y = leaf(&other, 1, 1, &[1.0]);
        assert!(matches!(grad_wrt_input(f, y), Err(Error::Graph(_))));
        let c = tape.constant(1, 1, vec![2.0]).unwrap();
        assert!(matches!(grad_wrt_input(f, c), Err(Error::Graph(_))));
    }

    #[test]
    fn double_backward_through_scaled_input() {
        // x = theta * u, f = 0.5 |x|^2, penalty = |grad_x f|^2 = theta^2 |u|^2
        // => d penalty / d theta = 2 theta |u|^2
        let tape = Tape::new();
        let theta = leaf(&tape, 1, 1, &[1.5]);
        let u = tape.constant(1, 3, vec![1.0, 2.0, 2.0]).unwrap();
        let x = theta.broadcast_col(3).unwrap().mul(u).unwrap();
        let f = x.square().sum().scale(0.5);
        let gx = grad_wrt_input(f, x).unwrap();
        let penalty = gx.square().sum();
        backward(penalty).unwrap();
        let got = theta.grad().unwrap()[0];
        let want = 2.0 * 1.5 * 9.0;
        assert!((got - want).abs() < 1e-10, "got {got}, want {want}");
    }

    #[test]
    fn concat_slice_roundtrip_gradients() {
        let tape = Tape::new();
        let a = leaf(&tape, 2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = leaf(&tape, 2, 1, &[5.0, 6.0]);
        let cat = a.concat_cols(b).unwrap();
        // weight only the middle column
        let w = tape
            .constant(2, 3, vec![0.0, 1.0, 0.0, 0.0, 1.0, 0.0])
            .unwrap();
        let loss = cat.mul(w).unwrap().sum();
        backward(loss).unwrap();
        assert_eq!(a.grad().unwrap(), vec![0.0, 1.0, 0.0, 1.0]);
        assert_eq!(b.grad().unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let tape = Tape::new();
        let a = leaf(&tape, 2, 2, &[1.0; 4]);
        let b = leaf(&tape, 1, 4, &[1.0; 4]);
        assert!(matches!(a.add(b), Err(Error::Shape(_))));
        assert!(matches!(a.matmul(b), Err(Error::Shape(_))));
    }

    #[test]
    fn sqrt_of_negative_is_numeric_error() {
        let tape = Tape::new();
        let a = leaf(&tape, 1, 2, &[1.0, -0.5]);
        assert!(matches!(a.sqrt(), Err(Error::Numeric(_))));
    }

    #[test]
    fn graph_replay_is_bit_identical() {
        let run = || {
            let tape = Tape::new();
            let w = leaf(&tape, 3, 3, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
            let x = tape
                .constant(3, 3, vec![1.0, -1.0, 0.5, 0.25, 2.0, -2.0, 0.0, 1.5, -0.5])
                .unwrap();
            let y = w.matmul(x).unwrap().elu(1.0).mean();
            backward(y).unwrap();
            (y.scalar_value(), w.grad().unwrap())
        };
        assert_eq!(run(), run());
    }
}
