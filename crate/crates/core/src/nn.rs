//! Multilayer perceptrons with AdamW, early stopping, and a step
//! learning-rate schedule.
//!
//! Training builds the loss as an autodiff graph so a penalty hook can
//! splice extra terms (including terms that contain gradients) into
//! the objective before parameter gradients are taken. Prediction and
//! the validation metric use a plain matrix forward pass that matches
//! the graph's arithmetic operation for operation, so eval-mode graph
//! output and [`predict`] agree bitwise.
//!
//! Everything that consumes randomness (init, shuffling, dropout
//! masks) draws from its own labelled stream of the config seed, so a
//! fit is reproducible bit for bit.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AutodiffError, Bindings, Graph, NodeId, Shape};
use crate::data::{Targets, Task};
use crate::seeds;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("bad spec: {0}")]
    BadSpec(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("model expects {expected} input features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class index {class} outside 0..{n_classes}")]
    ClassOutOfRange { class: usize, n_classes: usize },
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("penalty hook: {0}")]
    Hook(String),
    #[error(transparent)]
    Graph(#[from] AutodiffError),
    #[error("checkpoint: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Largest dropout rate [`MlpSpec`] accepts; also the upper end of
/// the dropout tuning range.
pub const MAX_DROPOUT: f64 = 0.5;

/// Network shape: `n_layers` hidden layers of uniform width between
/// the input and output projections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub n_layers: usize,
    pub layer_size: usize,
    /// Probability of dropping a hidden activation during training.
    pub dropout: f64,
    pub in_dim: usize,
    /// 1 for regression, the class count for classification.
    pub out_dim: usize,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.n_layers < 1 || self.n_layers > 64 {
            return Err(TrainError::BadSpec(format!(
                "n_layers {} outside 1..=64",
                self.n_layers
            )));
        }
        if self.layer_size < 1 || self.layer_size > 8192 {
            return Err(TrainError::BadSpec(format!(
                "layer_size {} outside 1..=8192",
                self.layer_size
            )));
        }
        if !self.dropout.is_finite() || !(0.0..=MAX_DROPOUT).contains(&self.dropout) {
            return Err(TrainError::BadSpec(format!(
                "dropout {} outside [0, {MAX_DROPOUT}]",
                self.dropout
            )));
        }
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(TrainError::BadSpec("zero input or output width".into()));
        }
        Ok(())
    }

    /// Layer widths from input to output, length n_layers + 2.
    fn widths(&self) -> Vec<usize> {
        let mut w = Vec::with_capacity(self.n_layers + 2);
        w.push(self.in_dim);
        w.extend(std::iter::repeat_n(self.layer_size, self.n_layers));
        w.push(self.out_dim);
        w
    }
}

/// Fitted (or freshly initialized) network parameters. Weight matrices
/// are input-rows by output-columns, so row j of `weights[0]` holds
/// everything leaving input feature j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub weights: Vec<Array2<f64>>,
    /// One 1-row matrix per layer.
    pub biases: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn n_params(&self) -> usize {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .map(|t| t.len())
            .sum()
    }
}

/// Uniform fan-in init: every weight and bias of a layer is drawn from
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), one seeded stream per layer.
pub fn build_mlp(spec: &MlpSpec, seed: u64) -> Result<Mlp, TrainError> {
    spec.validate()?;
    let widths = spec.widths();
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for layer in 0..widths.len() - 1 {
        let mut rng = seeds::stream_rng(seed, "mlp-init", &[layer as u64]);
        let bound = 1.0 / (widths[layer] as f64).sqrt();
        weights.push(Array2::from_shape_fn(
            (widths[layer], widths[layer + 1]),
            |_| rng.random_range(-bound..bound),
        ));
        biases.push(Array2::from_shape_fn((1, widths[layer + 1]), |_| {
            rng.random_range(-bound..bound)
        }));
    }
    Ok(Mlp {
        spec: spec.clone(),
        weights,
        biases,
    })
}

/// Training hyperparameters. The learning rate is multiplied by
/// `lr_decay_factor` once each listed epoch has completed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub lr_decay_epochs: Vec<usize>,
    pub lr_decay_factor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            patience: 20,
            batch_size: 512,
            lr: 1e-3,
            weight_decay: 0.0,
            lr_decay_epochs: vec![40, 80],
            lr_decay_factor: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.max_epochs < 1 {
            return Err(TrainError::BadConfig("max_epochs must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(TrainError::BadConfig("patience must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(TrainError::BadConfig("batch_size must be >= 1".into()));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(TrainError::BadConfig(format!(
                "lr {} must be positive",
                self.lr
            )));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(TrainError::BadConfig(format!(
                "weight_decay {} must be nonnegative",
                self.weight_decay
            )));
        }
        if !self.lr_decay_factor.is_finite()
            || self.lr_decay_factor <= 0.0
            || self.lr_decay_factor > 1.0
        {
            return Err(TrainError::BadConfig(format!(
                "lr_decay_factor {} outside (0, 1]",
                self.lr_decay_factor
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Mean training objective over the epoch, penalty included.
    pub train_loss: f64,
    /// Validation accuracy (classification) or RMSE (regression).
    pub val_metric: f64,
}

/// Parameters restored from the best validation epoch, plus the full
/// per-epoch history. `best_epoch` is 1-based into `history`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: Mlp,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String, TrainError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, TrainError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Everything a penalty hook may build on: the base loss, the batch
/// input node, and the parameter nodes in layer order.
pub struct HookContext<'a> {
    pub loss: NodeId,
    pub x: NodeId,
    pub weights: &'a [NodeId],
    pub biases: &'a [NodeId],
    pub n_batch: usize,
    pub in_dim: usize,
}

/// Replaces the training objective with an augmented node, typically
/// alpha * loss + (1 - alpha) * penalty.
pub trait PenaltyHook {
    fn augment(&self, graph: &mut Graph, ctx: &HookContext) -> Result<NodeId, TrainError>;
}

/// Network nodes of one forward graph. `masks` is empty when the graph
/// is built for evaluation.
pub(crate) struct NetworkNodes {
    pub x: NodeId,
    pub weights: Vec<NodeId>,
    pub biases: Vec<NodeId>,
    pub masks: Vec<NodeId>,
    pub output: NodeId,
}

/// Input, parameter inputs, and the forward pass for a batch of `b`
/// rows. Dropout is a multiplication by a mask input so the mask can
/// be bound to scaled Bernoulli draws (training) or ones (never, in
/// eval graphs the node is omitted).
pub(crate) fn build_network(
    graph: &mut Graph,
    spec: &MlpSpec,
    b: usize,
    with_dropout: bool,
) -> Result<NetworkNodes, AutodiffError> {
    let widths = spec.widths();
    let x = graph.input(b, spec.in_dim)?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    let mut masks = Vec::new();
    let mut h = x;
    for layer in 0..widths.len() - 1 {
        let w = graph.input(widths[layer], widths[layer + 1])?;
        let bias = graph.input(1, widths[layer + 1])?;
        let z = graph.matmul(h, w)?;
        let spread = graph.broadcast_to(bias, Shape::new(b, widths[layer + 1]))?;
        let shifted = graph.add(z, spread)?;
        h = if layer + 2 < widths.len() {
            let activated = graph.relu(shifted)?;
            if with_dropout {
                let mask = graph.input(b, widths[layer + 1])?;
                masks.push(mask);
                graph.dropout_apply(activated, mask)?
            } else {
                activated
            }
        } else {
            shifted
        };
        weights.push(w);
        biases.push(bias);
    }
    Ok(NetworkNodes {
        x,
        weights,
        biases,
        masks,
        output: h,
    })
}

/// Mean-reduced loss on top of an outputs node: squared error, or
/// cross entropy through a max-shifted log-sum-exp. `target` is a
/// same-shaped node holding values (regression) or a one-hot matrix.
/// `norm` is the divisor, usually the batch size.
pub(crate) fn attach_loss(
    graph: &mut Graph,
    outputs: NodeId,
    target: NodeId,
    classification: bool,
    norm: f64,
) -> Result<NodeId, AutodiffError> {
    let per_row = if classification {
        let shape = graph.shape(outputs);
        let row_max = graph.row_max_detach(outputs)?;
        let spread = graph.broadcast_to(row_max, shape)?;
        let shifted = graph.sub(outputs, spread)?;
        let exps = graph.exp(shifted)?;
        let sums = graph.row_sums(exps)?;
        let logs = graph.log(sums)?;
        let lse = graph.add(logs, row_max)?;
        let picked = graph.mul(outputs, target)?;
        let label_logit = graph.row_sums(picked)?;
        graph.sub(lse, label_logit)?
    } else {
        let diff = graph.sub(outputs, target)?;
        graph.square(diff)?
    };
    let total = graph.sum_all(per_row)?;
    graph.mul_scalar(total, 1.0 / norm)
}

/// Target payload for a row subset: an n x 1 value column or an
/// n x out_dim one-hot matrix.
pub(crate) fn target_matrix(
    y: &Targets,
    rows: &[usize],
    out_dim: usize,
) -> Result<Array2<f64>, TrainError> {
    match y {
        Targets::Regression(values) => Ok(Array2::from_shape_fn((rows.len(), 1), |(i, _)| {
            values[rows[i]]
        })),
        Targets::Classification(labels) => {
            let mut one_hot = Array2::zeros((rows.len(), out_dim));
            for (i, &row) in rows.iter().enumerate() {
                let class = labels[row];
                if class >= out_dim {
                    return Err(TrainError::ClassOutOfRange {
                        class,
                        n_classes: out_dim,
                    });
                }
                one_hot[[i, class]] = 1.0;
            }
            Ok(one_hot)
        }
    }
}

/// Scalar loss node for given outputs and targets, with targets baked
/// in as a constant. Regression targets go through squared error,
/// labels through cross entropy.
pub fn loss_node(graph: &mut Graph, outputs: NodeId, y: &Targets) -> Result<NodeId, TrainError> {
    let shape = graph.shape(outputs);
    if y.len() != shape.rows {
        return Err(TrainError::Length(format!(
            "{} targets for {} output rows",
            y.len(),
            shape.rows
        )));
    }
    if matches!(y, Targets::Regression(_)) && shape.cols != 1 {
        return Err(TrainError::Length(format!(
            "regression loss needs 1 output column, got {}",
            shape.cols
        )));
    }
    let rows: Vec<usize> = (0..shape.rows).collect();
    let values = target_matrix(y, &rows, shape.cols)?;
    let target = graph.constant(values)?;
    let classification = matches!(y, Targets::Classification(_));
    Ok(attach_loss(
        graph,
        outputs,
        target,
        classification,
        shape.rows as f64,
    )?)
}

pub(crate) struct AdamState {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl AdamState {
    pub(crate) fn new(tensors: &[&Array2<f64>]) -> Self {
        AdamState {
            m: tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect(),
            v: tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect(),
        }
    }

    /// One decoupled-weight-decay Adam step; `step` counts from 1 for
    /// bias correction.
    pub(crate) fn update(
        &mut self,
        params: Vec<&mut Array2<f64>>,
        grads: &[&Array2<f64>],
        step: usize,
        lr: f64,
        weight_decay: f64,
    ) {
        let correction1 = 1.0 - BETA1.powi(step as i32);
        let correction2 = 1.0 - BETA2.powi(step as i32);
        for (((param, grad), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            Zip::from(param)
                .and(*grad)
                .and(m)
                .and(v)
                .for_each(|p, &g, m, v| {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    let m_hat = *m / correction1;
                    let v_hat = *v / correction2;
                    *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS) + lr * weight_decay * *p;
                });
        }
    }
}

struct BestCheckpoint {
    epoch: usize,
    metric: f64,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array2<f64>>,
}

struct StepGraph {
    graph: Graph,
    nodes: NetworkNodes,
    target: NodeId,
    objective: NodeId,
    grad_ids: Vec<NodeId>,
}

fn build_step_graph(
    spec: &MlpSpec,
    classification: bool,
    b: usize,
    hook: Option<&dyn PenaltyHook>,
) -> Result<StepGraph, TrainError> {
    let mut graph = Graph::new();
    let nodes = build_network(&mut graph, spec, b, true)?;
    let target_cols = if classification { spec.out_dim } else { 1 };
    let target = graph.input(b, target_cols)?;
    let loss = attach_loss(&mut graph, nodes.output, target, classification, b as f64)?;
    let objective = match hook {
        Some(hook) => {
            let ctx = HookContext {
                loss,
                x: nodes.x,
                weights: &nodes.weights,
                biases: &nodes.biases,
                n_batch: b,
                in_dim: spec.in_dim,
            };
            hook.augment(&mut graph, &ctx)?
        }
        None => loss,
    };
    let params: Vec<NodeId> = nodes
        .weights
        .iter()
        .chain(nodes.biases.iter())
        .copied()
        .collect();
    let grads = graph.gradient(objective, &params)?;
    let grad_ids = params.iter().map(|&p| grads.grad(p)).collect();
    Ok(StepGraph {
        graph,
        nodes,
        target,
        objective,
        grad_ids,
    })
}

pub(crate) fn gather_rows(x: ArrayView2<f64>, rows: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), x.ncols()), |(i, j)| x[[rows[i], j]])
}

/// Inverted-dropout mask: kept entries are scaled by 1/keep so the
/// expected activation is unchanged.
fn draw_mask(rng: &mut impl Rng, rows: usize, cols: usize, dropout: f64) -> Array2<f64> {
    if dropout == 0.0 {
        return Array2::ones((rows, cols));
    }
    let keep = 1.0 - dropout;
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.random_bool(keep) {
            1.0 / keep
        } else {
            0.0
        }
    })
}

fn task_for(spec: &MlpSpec, y: &Targets) -> Result<Task, TrainError> {
    match y {
        Targets::Regression(_) => {
            if spec.out_dim != 1 {
                return Err(TrainError::BadSpec(format!(
                    "regression needs out_dim 1, got {}",
                    spec.out_dim
                )));
            }
            Ok(Task::Regression)
        }
        Targets::Classification(_) => {
            if spec.out_dim < 2 {
                return Err(TrainError::BadSpec(
                    "classification needs out_dim >= 2".into(),
                ));
            }
            Ok(Task::Classification {
                n_classes: spec.out_dim,
            })
        }
    }
}

fn metric_improves(task: Task, new: f64, old: f64) -> bool {
    match task {
        Task::Classification { .. } => new > old,
        Task::Regression => new < old,
    }
}

/// Trains with AdamW and per-epoch shuffling, watches the validation
/// metric, and returns the parameters of the best epoch. The last
/// short batch of an epoch is kept. A non-finite objective aborts with
/// the failing epoch and batch (both 1-based).
pub fn fit(
    spec: &MlpSpec,
    x_train: ArrayView2<f64>,
    y_train: &Targets,
    x_val: ArrayView2<f64>,
    y_val: &Targets,
    cfg: &TrainConfig,
    hook: Option<&dyn PenaltyHook>,
) -> Result<TrainedModel, TrainError> {
    spec.validate()?;
    cfg.validate()?;
    let task = task_for(spec, y_train)?;
    if task_for(spec, y_val)? != task {
        return Err(TrainError::Length(
            "train and validation targets disagree on the task".into(),
        ));
    }
    for (name, x, y) in [
        ("train", x_train.view(), y_train),
        ("validation", x_val.view(), y_val),
    ] {
        if x.nrows() == 0 {
            return Err(TrainError::EmptySplit(name));
        }
        if x.ncols() != spec.in_dim {
            return Err(TrainError::DimensionMismatch {
                expected: spec.in_dim,
                got: x.ncols(),
            });
        }
        if y.len() != x.nrows() {
            return Err(TrainError::Length(format!(
                "{name} split has {} rows and {} targets",
                x.nrows(),
                y.len()
            )));
        }
        if let Targets::Classification(labels) = y {
            if let Some(&class) = labels.iter().find(|&&c| c >= spec.out_dim) {
                return Err(TrainError::ClassOutOfRange {
                    class,
                    n_classes: spec.out_dim,
                });
            }
        }
    }

    let classification = task.is_classification();
    let mut model = build_mlp(spec, cfg.seed)?;
    let tensors: Vec<&Array2<f64>> = model.weights.iter().chain(model.biases.iter()).collect();
    let mut state = AdamState::new(&tensors);
    drop(tensors);

    let n = x_train.nrows();
    let mut cache: HashMap<usize, StepGraph> = HashMap::new();
    let mut history: Vec<EpochRecord> = Vec::new();
    let mut best: Option<BestCheckpoint> = None;
    let mut step = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let decays = cfg
            .lr_decay_epochs
            .iter()
            .filter(|&&boundary| epoch > boundary)
            .count();
        let lr_now = cfg.lr * cfg.lr_decay_factor.powi(decays as i32);

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seeds::stream_rng(
            cfg.seed,
            "epoch-shuffle",
            &[epoch as u64],
        ));

        let mut loss_total = 0.0;
        for (batch_index, rows) in order.chunks(cfg.batch_size).enumerate() {
            let b = rows.len();
            let sg = match cache.entry(b) {
                Entry::Occupied(entry) => entry.into_mut(),
                Entry::Vacant(entry) => {
                    entry.insert(build_step_graph(spec, classification, b, hook)?)
                }
            };
            let sg = &*sg;

            let mut bindings = Bindings::new();
            bindings.set(sg.nodes.x, gather_rows(x_train, rows));
            bindings.set(sg.target, target_matrix(y_train, rows, spec.out_dim)?);
            let mut mask_rng = seeds::stream_rng(
                cfg.seed,
                "dropout-masks",
                &[epoch as u64, batch_index as u64],
            );
            for &mask in &sg.nodes.masks {
                bindings.set(
                    mask,
                    draw_mask(&mut mask_rng, b, spec.layer_size, spec.dropout),
                );
            }
            for (&node, value) in sg.nodes.weights.iter().zip(&model.weights) {
                bindings.set(node, value.clone());
            }
            for (&node, value) in sg.nodes.biases.iter().zip(&model.biases) {
                bindings.set(node, value.clone());
            }

            let eval = sg.graph.forward(&bindings)?;
            let objective = eval.scalar(sg.objective);
            if !objective.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: batch_index + 1,
                });
            }
            loss_total += objective * b as f64;

            step += 1;
            let grads: Vec<&Array2<f64>> = sg.grad_ids.iter().map(|&g| eval.value(g)).collect();
            let params: Vec<&mut Array2<f64>> = model
                .weights
                .iter_mut()
                .chain(model.biases.iter_mut())
                .collect();
            state.update(params, &grads, step, lr_now, cfg.weight_decay);
        }

        let train_loss = loss_total / n as f64;
        let val_metric = evaluate(&model, x_val, y_val)?;
        history.push(EpochRecord {
            train_loss,
            val_metric,
        });

        let improved = match &best {
            None => true,
            Some(incumbent) => metric_improves(task, val_metric, incumbent.metric),
        };
        if improved {
            best = Some(BestCheckpoint {
                epoch,
                metric: val_metric,
                weights: model.weights.clone(),
                biases: model.biases.clone(),
            });
        }
        let best_epoch = best.as_ref().expect("set on first epoch").epoch;
        if epoch - best_epoch >= cfg.patience {
            break;
        }
    }

    let best = best.expect("at least one epoch ran");
    model.weights = best.weights;
    model.biases = best.biases;
    Ok(TrainedModel {
        model,
        history,
        best_epoch: best.epoch,
    })
}

/// Eval-mode forward pass: affine, relu between hidden layers, no
/// dropout. Mirrors the training graph's arithmetic exactly.
pub fn predict(model: &Mlp, x: ArrayView2<f64>) -> Result<Array2<f64>, TrainError> {
    if x.ncols() != model.spec.in_dim {
        return Err(TrainError::DimensionMismatch {
            expected: model.spec.in_dim,
            got: x.ncols(),
        });
    }
    let mut h = x.to_owned();
    let last = model.weights.len() - 1;
    for (layer, (w, bias)) in model.weights.iter().zip(&model.biases).enumerate() {
        let mut z = h.dot(w) + bias;
        if layer < last {
            z.mapv_inplace(|v| v.max(0.0));
        }
        h = z;
    }
    Ok(h)
}

/// Index of the largest entry, lowest index on ties.
fn argmax(row: ndarray::ArrayView1<f64>) -> usize {
    let mut arg = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[arg] {
            arg = j;
        }
    }
    arg
}

/// Typed predictions: the single output column for regression, the
/// argmax class per row for classification.
pub fn predict_targets(model: &Mlp, x: ArrayView2<f64>, task: Task) -> Result<Targets, TrainError> {
    let outputs = predict(model, x)?;
    Ok(match task {
        Task::Regression => Targets::Regression(outputs.column(0).to_vec()),
        Task::Classification { .. } => {
            Targets::Classification(outputs.rows().into_iter().map(argmax).collect())
        }
    })
}

/// Accuracy for labels, RMSE for values. Argmax ties go to the lower
/// class index.
pub fn evaluate(model: &Mlp, x: ArrayView2<f64>, y: &Targets) -> Result<f64, TrainError> {
    if y.len() != x.nrows() {
        return Err(TrainError::Length(format!(
            "{} targets for {} rows",
            y.len(),
            x.nrows()
        )));
    }
    let outputs = predict(model, x)?;
    match y {
        Targets::Regression(values) => {
            if outputs.ncols() != 1 {
                return Err(TrainError::Length(format!(
                    "regression metric needs 1 output column, got {}",
                    outputs.ncols()
                )));
            }
            let mse = values
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let d = outputs[[i, 0]] - v;
                    d * d
                })
                .sum::<f64>()
                / values.len() as f64;
            Ok(mse.sqrt())
        }
        Targets::Classification(labels) => {
            if let Some(&class) = labels.iter().find(|&&c| c >= outputs.ncols()) {
                return Err(TrainError::ClassOutOfRange {
                    class,
                    n_classes: outputs.ncols(),
                });
            }
            let correct = labels
                .iter()
                .enumerate()
                .filter(|&(i, &label)| argmax(outputs.row(i)) == label)
                .count();
            Ok(correct as f64 / labels.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::stream_rng;
    use ndarray::arr2;
    use rand_distr::{Distribution, StandardNormal};

    fn spec(n_layers: usize, layer_size: usize, in_dim: usize, out_dim: usize) -> MlpSpec {
        MlpSpec {
            n_layers,
            layer_size,
            dropout: 0.0,
            in_dim,
            out_dim,
        }
    }

    fn design(n: usize, m: usize, seed: u64) -> Array2<f64> {
        let mut rng = stream_rng(seed, "nn-test-design", &[]);
        Array2::from_shape_fn((n, m), |_| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn parameter_count_example() {
        let model = build_mlp(&spec(1, 4, 2, 1), 0).unwrap();
        assert_eq!(model.n_params(), 17);
    }

    #[test]
    fn same_seed_same_init() {
        let a = build_mlp(&spec(2, 8, 3, 2), 5).unwrap();
        let b = build_mlp(&spec(2, 8, 3, 2), 5).unwrap();
        assert_eq!(a, b);
        let c = build_mlp(&spec(2, 8, 3, 2), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let model = build_mlp(&spec(1, 32, 16, 2), 1).unwrap();
        let bound = 1.0 / 4.0;
        assert!(model.weights[0].iter().all(|&w| w.abs() < bound));
        assert!(model.weights[0].iter().any(|&w| w.abs() > bound / 2.0));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(build_mlp(&spec(0, 4, 2, 1), 0).is_err());
        assert!(build_mlp(&spec(1, 0, 2, 1), 0).is_err());
        assert!(build_mlp(&spec(1, 4, 0, 1), 0).is_err());
        let mut bad = spec(1, 4, 2, 1);
        bad.dropout = 0.6;
        assert!(build_mlp(&bad, 0).is_err());
    }

    #[test]
    fn mse_of_exact_outputs_is_zero() {
        let mut graph = Graph::new();
        let outputs = graph.constant(arr2(&[[1.0], [2.0]])).unwrap();
        let loss = loss_node(&mut graph, outputs, &Targets::Regression(vec![1.0, 2.0])).unwrap();
        let value = graph.forward(&Bindings::new()).unwrap().scalar(loss);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn uniform_logits_cross_entropy_is_ln_two() {
        let mut graph = Graph::new();
        let outputs = graph.constant(arr2(&[[0.0, 0.0]])).unwrap();
        let loss = loss_node(&mut graph, outputs, &Targets::Classification(vec![0])).unwrap();
        let value = graph.forward(&Bindings::new()).unwrap().scalar(loss);
        assert!(
            (value - std::f64::consts::LN_2).abs() < 1e-12,
            "ce = {value}"
        );
        assert!((value - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_class_rejected() {
        let mut graph = Graph::new();
        let outputs = graph.constant(arr2(&[[0.0, 0.0]])).unwrap();
        assert!(matches!(
            loss_node(&mut graph, outputs, &Targets::Classification(vec![2])),
            Err(TrainError::ClassOutOfRange {
                class: 2,
                n_classes: 2
            })
        ));
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let targets = Targets::Regression(vec![0.5, -1.0, 2.0]);
        let max_rel = crate::autodiff::finite_diff_check(
            |graph, outputs| {
                let t = graph.constant(arr2(&[[0.5], [-1.0], [2.0]])).unwrap();
                attach_loss(graph, outputs, t, false, 3.0)
            },
            &arr2(&[[0.1], [0.2], [-0.3]]),
            1e-5,
        )
        .unwrap();
        assert!(max_rel <= 1e-6, "max rel error {max_rel}");
        drop(targets);
    }

    #[test]
    fn cross_entropy_gradient_matches_finite_differences() {
        let max_rel = crate::autodiff::finite_diff_check(
            |graph, outputs| {
                let t = graph
                    .constant(arr2(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
                    .unwrap();
                attach_loss(graph, outputs, t, true, 2.0)
            },
            &arr2(&[[0.3, -0.2, 0.5], [1.0, 0.4, -0.6]]),
            1e-5,
        )
        .unwrap();
        assert!(max_rel <= 1e-6, "max rel error {max_rel}");
    }

    #[test]
    fn adamw_first_step_moves_by_lr() {
        let mut state = AdamState::new(&[&Array2::zeros((1, 1))]);
        let mut p = Array2::from_elem((1, 1), 1.0);
        let g = Array2::from_elem((1, 1), 1.0);
        state.update(vec![&mut p], &[&g], 1, 0.1, 0.0);
        assert!((p[[0, 0]] - 0.9).abs() < 1e-8, "p = {}", p[[0, 0]]);
    }

    #[test]
    fn adamw_decay_is_decoupled_from_gradient() {
        let mut state = AdamState::new(&[&Array2::zeros((1, 1))]);
        let mut p = Array2::from_elem((1, 1), 1.0);
        let g = Array2::zeros((1, 1));
        state.update(vec![&mut p], &[&g], 1, 0.1, 0.1);
        assert!((p[[0, 0]] - 0.99).abs() < 1e-15, "p = {}", p[[0, 0]]);
    }

    fn linear_data(n: usize, seed: u64) -> (Array2<f64>, Targets) {
        let x = design(n, 3, seed);
        let y = (0..n)
            .map(|i| 0.7 * x[[i, 0]] - 1.2 * x[[i, 1]] + 0.4 * x[[i, 2]])
            .collect();
        (x, Targets::Regression(y))
    }

    #[test]
    fn noiseless_regression_loss_collapses() {
        let (x, y) = linear_data(200, 30);
        let cfg = TrainConfig {
            max_epochs: 60,
            patience: 60,
            batch_size: 64,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        let trained = fit(&spec(1, 16, 3, 1), x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        let first = trained.history.first().unwrap().train_loss;
        let last = trained.history.last().unwrap().train_loss;
        assert!(last < 1e-2 * first, "first {first}, last {last}");
    }

    #[test]
    fn histories_repeat_under_one_seed() {
        let (x, y) = linear_data(120, 31);
        let cfg = TrainConfig {
            max_epochs: 5,
            batch_size: 32,
            lr: 1e-2,
            seed: 9,
            ..TrainConfig::default()
        };
        let s = MlpSpec {
            dropout: 0.3,
            ..spec(2, 8, 3, 1)
        };
        let a = fit(&s, x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        let b = fit(&s, x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
        let other = TrainConfig { seed: 10, ..cfg };
        let c = fit(&s, x.view(), &y, x.view(), &y, &other, None).unwrap();
        assert_ne!(a.history, c.history);
    }

    struct IdentityHook;

    impl PenaltyHook for IdentityHook {
        fn augment(&self, _graph: &mut Graph, ctx: &HookContext) -> Result<NodeId, TrainError> {
            Ok(ctx.loss)
        }
    }

    #[test]
    fn identity_hook_changes_nothing() {
        let (x, y) = linear_data(100, 32);
        let cfg = TrainConfig {
            max_epochs: 4,
            batch_size: 32,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        let s = spec(1, 8, 3, 1);
        let plain = fit(&s, x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        let hooked = fit(&s, x.view(), &y, x.view(), &y, &cfg, Some(&IdentityHook)).unwrap();
        assert_eq!(plain.history, hooked.history);
        assert_eq!(plain.model, hooked.model);
    }

    #[test]
    fn flat_metric_stops_after_patience() {
        let (x, y) = linear_data(50, 33);
        let cfg = TrainConfig {
            max_epochs: 10,
            patience: 1,
            batch_size: 50,
            lr: 1e-300,
            ..TrainConfig::default()
        };
        let trained = fit(&spec(1, 4, 3, 1), x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        assert_eq!(trained.history.len(), 2);
        assert_eq!(trained.best_epoch, 1);
    }

    #[test]
    fn best_epoch_dominates_history() {
        let x = design(150, 2, 34);
        let labels: Vec<usize> = (0..150).map(|i| usize::from(x[[i, 0]] > 0.0)).collect();
        let y = Targets::Classification(labels);
        let cfg = TrainConfig {
            max_epochs: 15,
            patience: 15,
            batch_size: 32,
            lr: 5e-3,
            ..TrainConfig::default()
        };
        let trained = fit(&spec(1, 8, 2, 2), x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        let best = trained.history[trained.best_epoch - 1].val_metric;
        assert!(trained
            .history
            .iter()
            .all(|record| record.val_metric <= best));
    }

    #[test]
    fn nan_target_surfaces_as_non_finite_loss() {
        let (x, y) = linear_data(40, 35);
        let mut values = match y {
            Targets::Regression(v) => v,
            Targets::Classification(_) => unreachable!(),
        };
        values[7] = f64::NAN;
        let y = Targets::Regression(values);
        let cfg = TrainConfig {
            max_epochs: 3,
            batch_size: 40,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        match fit(&spec(1, 4, 3, 1), x.view(), &y, x.view(), &y, &cfg, None) {
            Err(TrainError::NonFiniteLoss { epoch: 1, batch: 1 }) => {}
            other => panic!("expected non-finite loss, got {other:?}"),
        }
    }

    #[test]
    fn train_graph_without_dropout_matches_predict() {
        let s = spec(2, 6, 3, 2);
        let model = build_mlp(&s, 40).unwrap();
        let x = design(9, 3, 41);

        let mut graph = Graph::new();
        let nodes = build_network(&mut graph, &s, 9, true).unwrap();
        let mut bindings = Bindings::new();
        bindings.set(nodes.x, x.clone());
        for (&node, value) in nodes.weights.iter().zip(&model.weights) {
            bindings.set(node, value.clone());
        }
        for (&node, value) in nodes.biases.iter().zip(&model.biases) {
            bindings.set(node, value.clone());
        }
        for &mask in &nodes.masks {
            bindings.set(mask, Array2::ones((9, 6)));
        }
        let graph_out = graph
            .forward(&bindings)
            .unwrap()
            .value(nodes.output)
            .clone();
        let direct = predict(&model, x.view()).unwrap();
        assert_eq!(graph_out, direct);
    }

    #[test]
    fn zero_model_rmse_on_unit_variance_target_is_one() {
        let s = spec(1, 4, 2, 1);
        let mut model = build_mlp(&s, 0).unwrap();
        for w in model.weights.iter_mut().chain(model.biases.iter_mut()) {
            w.fill(0.0);
        }
        let x = design(40, 2, 42);
        let y = Targets::Regression(
            (0..40)
                .map(|i| if i % 2 == 0 { -1.0 } else { 1.0 })
                .collect(),
        );
        let rmse = evaluate(&model, x.view(), &y).unwrap();
        assert!((rmse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_class_predictor_scores_half() {
        let s = spec(1, 4, 2, 2);
        let mut model = build_mlp(&s, 1).unwrap();
        for w in model.weights.iter_mut().chain(model.biases.iter_mut()) {
            w.fill(0.0);
        }
        model.biases[1] = arr2(&[[1.0, 0.0]]);
        let x = design(40, 2, 43);
        let y = Targets::Classification((0..40).map(|i| i % 2).collect());
        let accuracy = evaluate(&model, x.view(), &y).unwrap();
        assert_eq!(accuracy, 0.5);
    }

    #[test]
    fn checkpoint_round_trips() {
        let (x, y) = linear_data(60, 36);
        let cfg = TrainConfig {
            max_epochs: 3,
            batch_size: 32,
            lr: 1e-2,
            ..TrainConfig::default()
        };
        let trained = fit(&spec(1, 6, 3, 1), x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        trained.save(&path).unwrap();
        let restored = TrainedModel::load(&path).unwrap();
        assert_eq!(trained, restored);
    }

    #[test]
    fn lr_schedule_counts_completed_boundaries() {
        // Matching the fit loop: epoch 40 still runs at full lr, epoch
        // 41 at lr/10, epoch 81 at lr/100.
        let cfg = TrainConfig::default();
        let lr_at = |epoch: usize| {
            let decays = cfg
                .lr_decay_epochs
                .iter()
                .filter(|&&boundary| epoch > boundary)
                .count();
            cfg.lr * cfg.lr_decay_factor.powi(decays as i32)
        };
        assert_eq!(lr_at(40), cfg.lr);
        assert!((lr_at(41) - cfg.lr * 0.1).abs() < 1e-18);
        assert!((lr_at(81) - cfg.lr * 0.01).abs() < 1e-18);
    }

    #[test]
    fn dropout_masks_scale_kept_entries() {
        let mut rng = stream_rng(0, "mask-test", &[]);
        let mask = draw_mask(&mut rng, 200, 50, 0.2);
        let kept = mask.iter().filter(|&&v| v != 0.0).count();
        assert!(mask.iter().all(|&v| v == 0.0 || (v - 1.25).abs() < 1e-15));
        let frac = kept as f64 / mask.len() as f64;
        assert!((frac - 0.8).abs() < 0.02, "kept fraction {frac}");
    }

    #[test]
    fn mismatched_feature_count_rejected() {
        let model = build_mlp(&spec(1, 4, 3, 1), 0).unwrap();
        let x = design(5, 2, 44);
        assert!(matches!(
            predict(&model, x.view()),
            Err(TrainError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }
}
