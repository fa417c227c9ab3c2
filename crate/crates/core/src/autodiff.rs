//! Reverse-mode automatic differentiation on an append-only graph.
//!
//! Nodes live in an arena indexed by [`NodeId`]; parents always precede
//! children, so node order is a topological order and forward evaluation
//! is a single pass. [`Graph::gradient`] does not compute numbers: it
//! appends new nodes expressing the adjoints, so a gradient is itself
//! differentiable and training through a penalty on input gradients
//! needs no special machinery.
//!
//! All values are dense `f64` matrices; scalars are 1x1. Detached ops
//! ([`Graph::relu_mask`], [`Graph::row_max_detach`]) pass no gradient,
//! which makes relu second derivatives zero and keeps the stabilised
//! log-sum-exp exact under double backprop.

use std::collections::BTreeMap;
use std::fmt;

use ndarray::{Array2, Axis};
use thiserror::Error;

/// Handle to a node in a [`Graph`] arena.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId(pub(crate) usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Matrix shape; scalars are 1x1.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Self {
        Shape { rows, cols }
    }

    pub fn is_scalar(&self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch, {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("node {0} is not part of this graph")]
    UnknownNode(NodeId),
    #[error("no value bound for input node {0}")]
    UnboundInput(NodeId),
    #[error("gradient target {node} has shape {shape}, expected a 1x1 scalar")]
    NonScalarTarget { node: NodeId, shape: Shape },
    #[error("{context}: non-finite value encountered")]
    NonFinite { context: String },
    #[error("finite-difference step {0:e} outside [1e-7, 1e-3]")]
    StepOutOfRange(f64),
}

fn mismatch(op: &'static str, detail: String) -> AutodiffError {
    AutodiffError::ShapeMismatch { op, detail }
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Constant(Array2<f64>),
    Add,
    Sub,
    Mul,
    Div,
    AddScalar(f64),
    MulScalar(f64),
    MatMul,
    Transpose,
    Relu,
    /// 1 where the parent is positive, else 0. Detached: passes no gradient.
    ReluMask,
    Exp,
    Log,
    Square,
    Sqrt,
    SumAll,
    RowSums,
    ColSums,
    Broadcast,
    /// Per-row maximum. Detached: passes no gradient.
    RowMaxDetach,
    SelectRows(Vec<usize>),
    ScatterRows(Vec<usize>),
    /// Elementwise product whose gradient flows only to the first parent;
    /// the mask parent is treated as data.
    DropoutApply,
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    parents: Vec<NodeId>,
    shape: Shape,
}

/// Append-only computation graph.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Values for the input nodes of one forward pass.
#[derive(Default)]
pub struct Bindings {
    entries: Vec<(NodeId, Array2<f64>)>,
}

impl Bindings {
    pub fn new() -> Self {
        Bindings::default()
    }

    /// Binds `value` to input `id`, replacing any previous binding.
    pub fn set(&mut self, id: NodeId, value: Array2<f64>) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == id) {
            slot.1 = value;
        } else {
            self.entries.push((id, value));
        }
        self
    }

    fn get(&self, id: NodeId) -> Option<&Array2<f64>> {
        self.entries.iter().find(|(n, _)| *n == id).map(|(_, v)| v)
    }
}

/// Values of every node after one forward pass.
#[derive(Debug)]
pub struct Evaluation {
    values: Vec<Array2<f64>>,
}

impl Evaluation {
    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.values[id.0]
    }

    /// Value of a 1x1 node as a plain f64.
    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        debug_assert_eq!(v.dim(), (1, 1), "scalar() on non-scalar node {id}");
        v[(0, 0)]
    }
}

/// Maps each requested node to the node holding its gradient.
#[derive(Debug)]
pub struct GradientMap {
    grads: BTreeMap<NodeId, NodeId>,
}

impl GradientMap {
    /// Gradient node for `wrt`. Panics if `wrt` was not in the request.
    pub fn grad(&self, wrt: NodeId) -> NodeId {
        *self
            .grads
            .get(&wrt)
            .unwrap_or_else(|| panic!("node {wrt} was not in the gradient request"))
    }
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn shape(&self, id: NodeId) -> Shape {
        self.nodes[id.0].shape
    }

    /// True when the node is a placeholder bound at evaluation time.
    pub fn is_input(&self, id: NodeId) -> bool {
        matches!(self.nodes.get(id.0), Some(node) if matches!(node.op, Op::Input))
    }

    fn push(&mut self, op: Op, parents: Vec<NodeId>, shape: Shape) -> NodeId {
        self.nodes.push(Node { op, parents, shape });
        NodeId(self.nodes.len() - 1)
    }

    fn check(&self, id: NodeId) -> Result<Shape, AutodiffError> {
        self.nodes
            .get(id.0)
            .map(|n| n.shape)
            .ok_or(AutodiffError::UnknownNode(id))
    }

    /// Placeholder bound at evaluation time.
    pub fn input(&mut self, rows: usize, cols: usize) -> Result<NodeId, AutodiffError> {
        if rows == 0 || cols == 0 {
            return Err(mismatch("input", format!("empty shape {rows}x{cols}")));
        }
        Ok(self.push(Op::Input, vec![], Shape::new(rows, cols)))
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Result<NodeId, AutodiffError> {
        let (rows, cols) = value.dim();
        if rows == 0 || cols == 0 {
            return Err(mismatch("constant", format!("empty shape {rows}x{cols}")));
        }
        let shape = Shape::new(rows, cols);
        Ok(self.push(Op::Constant(value), vec![], shape))
    }

    /// 1x1 constant.
    pub fn scalar(&mut self, value: f64) -> NodeId {
        let shape = Shape::new(1, 1);
        self.push(
            Op::Constant(Array2::from_elem((1, 1), value)),
            vec![],
            shape,
        )
    }

    fn binary_same_shape(
        &mut self,
        op_name: &'static str,
        op: Op,
        a: NodeId,
        b: NodeId,
    ) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        let sb = self.check(b)?;
        if sa != sb {
            return Err(mismatch(op_name, format!("{sa} vs {sb}")));
        }
        Ok(self.push(op, vec![a, b], sa))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.binary_same_shape("add", Op::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.binary_same_shape("sub", Op::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.binary_same_shape("mul", Op::Mul, a, b)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.binary_same_shape("div", Op::Div, a, b)
    }

    pub fn add_scalar(&mut self, a: NodeId, value: f64) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::AddScalar(value), vec![a], shape))
    }

    pub fn mul_scalar(&mut self, a: NodeId, value: f64) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::MulScalar(value), vec![a], shape))
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        let sb = self.check(b)?;
        if sa.cols != sb.rows {
            return Err(mismatch("matmul", format!("{sa} . {sb}")));
        }
        Ok(self.push(Op::MatMul, vec![a, b], Shape::new(sa.rows, sb.cols)))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        Ok(self.push(Op::Transpose, vec![a], Shape::new(sa.cols, sa.rows)))
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::Relu, vec![a], shape))
    }

    /// Indicator of positive entries; carries no gradient.
    pub fn relu_mask(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::ReluMask, vec![a], shape))
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::Exp, vec![a], shape))
    }

    pub fn log(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::Log, vec![a], shape))
    }

    pub fn square(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::Square, vec![a], shape))
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let shape = self.check(a)?;
        Ok(self.push(Op::Sqrt, vec![a], shape))
    }

    /// Sum of all entries, as a 1x1 node.
    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.check(a)?;
        Ok(self.push(Op::SumAll, vec![a], Shape::new(1, 1)))
    }

    /// Row sums: n x m -> n x 1.
    pub fn row_sums(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        Ok(self.push(Op::RowSums, vec![a], Shape::new(sa.rows, 1)))
    }

    /// Column sums: n x m -> 1 x m.
    pub fn col_sums(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        Ok(self.push(Op::ColSums, vec![a], Shape::new(1, sa.cols)))
    }

    /// Expands a scalar, row vector, or column vector to `shape`.
    /// Expanding to the node's own shape returns the node unchanged.
    pub fn broadcast_to(&mut self, a: NodeId, shape: Shape) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        if sa == shape {
            return Ok(a);
        }
        let ok = sa.is_scalar()
            || (sa.rows == shape.rows && sa.cols == 1)
            || (sa.cols == shape.cols && sa.rows == 1);
        if !ok {
            return Err(mismatch("broadcast", format!("{sa} -> {shape}")));
        }
        Ok(self.push(Op::Broadcast, vec![a], shape))
    }

    /// Per-row maximum, n x m -> n x 1; carries no gradient.
    pub fn row_max_detach(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        Ok(self.push(Op::RowMaxDetach, vec![a], Shape::new(sa.rows, 1)))
    }

    /// Gathers the given rows in order; indices may repeat.
    pub fn select_rows(&mut self, a: NodeId, indices: &[usize]) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        if indices.is_empty() {
            return Err(mismatch("select_rows", "empty index list".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= sa.rows) {
            return Err(mismatch(
                "select_rows",
                format!("row index {bad} out of bounds for {sa}"),
            ));
        }
        let shape = Shape::new(indices.len(), sa.cols);
        Ok(self.push(Op::SelectRows(indices.to_vec()), vec![a], shape))
    }

    /// Adds row i of `a` into row `indices[i]` of a zero matrix with
    /// `rows` rows. Adjoint of [`Graph::select_rows`].
    pub fn scatter_rows(
        &mut self,
        a: NodeId,
        indices: &[usize],
        rows: usize,
    ) -> Result<NodeId, AutodiffError> {
        let sa = self.check(a)?;
        if indices.len() != sa.rows {
            return Err(mismatch(
                "scatter_rows",
                format!("{} indices for {sa}", indices.len()),
            ));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(mismatch(
                "scatter_rows",
                format!("row index {bad} out of bounds for {rows} rows"),
            ));
        }
        let shape = Shape::new(rows, sa.cols);
        Ok(self.push(Op::ScatterRows(indices.to_vec()), vec![a], shape))
    }

    /// Multiplies `a` by a precomputed dropout mask. The gradient flows
    /// to `a` only; the mask is data even though it came from an input.
    pub fn dropout_apply(&mut self, a: NodeId, mask: NodeId) -> Result<NodeId, AutodiffError> {
        self.binary_same_shape("dropout_apply", Op::DropoutApply, a, mask)
    }

    /// Evaluates every node in insertion order.
    pub fn forward(&self, bindings: &Bindings) -> Result<Evaluation, AutodiffError> {
        let mut values: Vec<Array2<f64>> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            let p = |k: usize| &values[node.parents[k].0];
            let value = match &node.op {
                Op::Input => {
                    let v = bindings.get(id).ok_or(AutodiffError::UnboundInput(id))?;
                    let (r, c) = v.dim();
                    if Shape::new(r, c) != node.shape {
                        return Err(mismatch(
                            "input",
                            format!("bound {r}x{c} to node {id} of shape {}", node.shape),
                        ));
                    }
                    v.clone()
                }
                Op::Constant(v) => v.clone(),
                Op::Add => p(0) + p(1),
                Op::Sub => p(0) - p(1),
                Op::Mul | Op::DropoutApply => p(0) * p(1),
                Op::Div => p(0) / p(1),
                Op::AddScalar(s) => p(0).mapv(|x| x + s),
                Op::MulScalar(s) => p(0).mapv(|x| x * s),
                Op::MatMul => p(0).dot(p(1)),
                Op::Transpose => p(0).t().to_owned(),
                Op::Relu => p(0).mapv(|x| x.max(0.0)),
                Op::ReluMask => p(0).mapv(|x| if x > 0.0 { 1.0 } else { 0.0 }),
                Op::Exp => p(0).mapv(f64::exp),
                Op::Log => p(0).mapv(f64::ln),
                Op::Square => p(0).mapv(|x| x * x),
                Op::Sqrt => p(0).mapv(f64::sqrt),
                Op::SumAll => Array2::from_elem((1, 1), p(0).sum()),
                Op::RowSums => p(0).sum_axis(Axis(1)).insert_axis(Axis(1)),
                Op::ColSums => p(0).sum_axis(Axis(0)).insert_axis(Axis(0)),
                Op::Broadcast => {
                    let target = (node.shape.rows, node.shape.cols);
                    p(0).broadcast(target).expect("checked at build").to_owned()
                }
                Op::RowMaxDetach => p(0)
                    .map_axis(Axis(1), |row| row.fold(f64::NEG_INFINITY, |m, &v| m.max(v)))
                    .insert_axis(Axis(1)),
                Op::SelectRows(indices) => p(0).select(Axis(0), indices),
                Op::ScatterRows(indices) => {
                    let src = p(0);
                    let mut out = Array2::zeros((node.shape.rows, node.shape.cols));
                    for (j, &r) in indices.iter().enumerate() {
                        let mut row = out.row_mut(r);
                        row += &src.row(j);
                    }
                    out
                }
            };
            debug_assert_eq!(value.dim(), (node.shape.rows, node.shape.cols));
            values.push(value);
        }
        Ok(Evaluation { values })
    }

    /// Appends nodes computing d`target`/d`wrt` for each requested node
    /// and returns their ids. Existing nodes are never modified, so the
    /// returned gradients can themselves be differentiated. Nodes that
    /// cannot reach `target` get a zero constant of their own shape.
    pub fn gradient(
        &mut self,
        target: NodeId,
        wrt: &[NodeId],
    ) -> Result<GradientMap, AutodiffError> {
        let ts = self.check(target)?;
        for &w in wrt {
            self.check(w)?;
        }
        if !ts.is_scalar() {
            return Err(AutodiffError::NonScalarTarget {
                node: target,
                shape: ts,
            });
        }
        // Adjoints of the nodes that existed when the call started; new
        // nodes only express those adjoints. Reverse id order is reverse
        // topological order because parents precede children.
        let mut adj: Vec<Option<NodeId>> = vec![None; self.nodes.len()];
        adj[target.0] = Some(self.scalar(1.0));
        for i in (0..=target.0).rev() {
            let g = match adj[i] {
                Some(g) => g,
                None => continue,
            };
            let node = self.nodes[i].clone();
            let c = NodeId(i);
            match &node.op {
                Op::Input | Op::Constant(_) | Op::ReluMask | Op::RowMaxDetach => {}
                Op::Add => {
                    self.accum(&mut adj, node.parents[0], g)?;
                    self.accum(&mut adj, node.parents[1], g)?;
                }
                Op::Sub => {
                    self.accum(&mut adj, node.parents[0], g)?;
                    let neg = self.mul_scalar(g, -1.0)?;
                    self.accum(&mut adj, node.parents[1], neg)?;
                }
                Op::Mul => {
                    let (a, b) = (node.parents[0], node.parents[1]);
                    let da = self.mul(g, b)?;
                    self.accum(&mut adj, a, da)?;
                    let db = self.mul(g, a)?;
                    self.accum(&mut adj, b, db)?;
                }
                Op::Div => {
                    let (a, b) = (node.parents[0], node.parents[1]);
                    let da = self.div(g, b)?;
                    self.accum(&mut adj, a, da)?;
                    // d(a/b)/db = -(a/b)/b, reusing the quotient node.
                    let gc = self.mul(g, c)?;
                    let gcb = self.div(gc, b)?;
                    let db = self.mul_scalar(gcb, -1.0)?;
                    self.accum(&mut adj, b, db)?;
                }
                Op::AddScalar(_) => self.accum(&mut adj, node.parents[0], g)?,
                Op::MulScalar(s) => {
                    let da = self.mul_scalar(g, *s)?;
                    self.accum(&mut adj, node.parents[0], da)?;
                }
                Op::MatMul => {
                    let (a, b) = (node.parents[0], node.parents[1]);
                    let bt = self.transpose(b)?;
                    let da = self.matmul(g, bt)?;
                    self.accum(&mut adj, a, da)?;
                    let at = self.transpose(a)?;
                    let db = self.matmul(at, g)?;
                    self.accum(&mut adj, b, db)?;
                }
                Op::Transpose => {
                    let da = self.transpose(g)?;
                    self.accum(&mut adj, node.parents[0], da)?;
                }
                Op::Relu => {
                    let a = node.parents[0];
                    let mask = self.relu_mask(a)?;
                    let da = self.mul(g, mask)?;
                    self.accum(&mut adj, a, da)?;
                }
                Op::Exp => {
                    let da = self.mul(g, c)?;
                    self.accum(&mut adj, node.parents[0], da)?;
                }
                Op::Log => {
                    let da = self.div(g, node.parents[0])?;
                    self.accum(&mut adj, node.parents[0], da)?;
                }
                Op::Square => {
                    let a = node.parents[0];
                    let ga = self.mul(g, a)?;
                    let da = self.mul_scalar(ga, 2.0)?;
                    self.accum(&mut adj, a, da)?;
                }
                Op::Sqrt => {
                    let gc = self.div(g, c)?;
                    let da = self.mul_scalar(gc, 0.5)?;
                    self.accum(&mut adj, node.parents[0], da)?;
                }
                Op::SumAll | Op::RowSums | Op::ColSums => {
                    let a = node.parents[0];
                    let sa = self.shape(a);
                    let da = self.broadcast_to(g, sa)?;
                    self.accum(&mut adj, a, da)?;
                }
                Op::Broadcast => {
                    let a = node.parents[0];
                    let sa = self.shape(a);
                    let da = if sa.is_scalar() {
                        self.sum_all(g)?
                    } else if sa.cols == 1 {
                        self.row_sums(g)?
                    } else {
                        self.col_sums(g)?
                    };
                    self.accum(&mut adj, a, da)?;
                }
                Op::SelectRows(indices) => {
                    let a = node.parents[0];
                    let rows = self.shape(a).rows;
                    let da = self.scatter_rows(g, indices, rows)?;
                    self.accum(&mut adj, a, da)?;
                }
                Op::ScatterRows(indices) => {
                    let da = self.select_rows(g, indices)?;
                    self.accum(&mut adj, node.parents[0], da)?;
                }
                Op::DropoutApply => {
                    let (a, mask) = (node.parents[0], node.parents[1]);
                    let da = self.dropout_apply(g, mask)?;
                    self.accum(&mut adj, a, da)?;
                }
            }
        }
        let mut grads = BTreeMap::new();
        for &w in wrt {
            let gid = match adj[w.0] {
                Some(gid) => gid,
                None => {
                    let s = self.shape(w);
                    self.constant(Array2::zeros((s.rows, s.cols)))?
                }
            };
            grads.insert(w, gid);
        }
        Ok(GradientMap { grads })
    }

    fn accum(
        &mut self,
        adj: &mut [Option<NodeId>],
        parent: NodeId,
        contrib: NodeId,
    ) -> Result<(), AutodiffError> {
        adj[parent.0] = Some(match adj[parent.0] {
            Some(prev) => self.add(prev, contrib)?,
            None => contrib,
        });
        Ok(())
    }
}

/// Compares the graph gradient of a scalar function against central
/// finite differences at `point` and returns the worst relative error,
/// measured against `max(1, |fd|)` per coordinate.
///
/// `build` receives a fresh graph and the input node for `point` and
/// must return a scalar target node.
pub fn finite_diff_check<F>(build: F, point: &Array2<f64>, eps: f64) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Graph, NodeId) -> Result<NodeId, AutodiffError>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(AutodiffError::StepOutOfRange(eps));
    }
    if point.iter().any(|v| !v.is_finite()) {
        return Err(AutodiffError::NonFinite {
            context: "finite_diff_check point".into(),
        });
    }
    let (rows, cols) = point.dim();
    let mut graph = Graph::new();
    let x = graph.input(rows, cols)?;
    let target = build(&mut graph, x)?;
    let ts = graph.shape(target);
    if !ts.is_scalar() {
        return Err(AutodiffError::NonScalarTarget {
            node: target,
            shape: ts,
        });
    }
    let grads = graph.gradient(target, &[x])?;
    let gx = grads.grad(x);

    let mut bindings = Bindings::new();
    bindings.set(x, point.clone());
    let analytic = graph.forward(&bindings)?.value(gx).clone();

    let mut worst = 0.0f64;
    let mut probe = point.clone();
    for r in 0..rows {
        for c in 0..cols {
            let orig = probe[(r, c)];
            probe[(r, c)] = orig + eps;
            bindings.set(x, probe.clone());
            let up = graph.forward(&bindings)?.scalar(target);
            probe[(r, c)] = orig - eps;
            bindings.set(x, probe.clone());
            let down = graph.forward(&bindings)?.scalar(target);
            probe[(r, c)] = orig;
            let fd = (up - down) / (2.0 * eps);
            let ad = analytic[(r, c)];
            if !fd.is_finite() || !ad.is_finite() {
                return Err(AutodiffError::NonFinite {
                    context: format!("finite_diff_check coordinate ({r}, {c})"),
                });
            }
            worst = worst.max((ad - fd).abs() / fd.abs().max(1.0));
        }
    }
    Ok(worst)
}
