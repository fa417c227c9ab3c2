//! Selectors that ride on network training: group-lasso penalties on
//! the first layer, the two-stage adaptive variant, and the
//! input-gradient regularizer.
//!
//! Each fit augments the training objective through a penalty hook, so
//! the optimizer sees alpha * loss + (1 - alpha) * penalty while the
//! validation metric and early stopping stay on the raw loss scale.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use ndarray::ArrayView2;

use super::{deep_lasso_penalty, group_lasso_penalty, FeatureScores, FsError, PenaltyConfig};
use crate::autodiff::{Bindings, Graph, NodeId};
use crate::data::Targets;
use crate::nn::{
    self, HookContext, Mlp, MlpSpec, PenaltyHook, TrainConfig, TrainError, TrainedModel,
};
use crate::seeds;

fn check_alpha(alpha: f64) -> Result<(), FsError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
        return Err(FsError::BadAlpha(alpha));
    }
    Ok(())
}

/// Objective node alpha * loss + (1 - alpha) * penalty.
fn combine(
    graph: &mut Graph,
    loss: NodeId,
    penalty: NodeId,
    alpha: f64,
) -> Result<NodeId, TrainError> {
    let scaled_loss = graph.mul_scalar(loss, alpha)?;
    let scaled_penalty = graph.mul_scalar(penalty, 1.0 - alpha)?;
    Ok(graph.add(scaled_loss, scaled_penalty)?)
}

struct GroupLassoHook {
    alpha: f64,
    eps_norm: f64,
    group_weights: Option<Vec<f64>>,
}

impl PenaltyHook for GroupLassoHook {
    fn augment(&self, graph: &mut Graph, ctx: &HookContext) -> Result<NodeId, TrainError> {
        let penalty = group_lasso_penalty(
            graph,
            ctx.weights[0],
            self.group_weights.as_deref(),
            self.eps_norm,
        )
        .map_err(|e| TrainError::Hook(e.to_string()))?;
        combine(graph, ctx.loss, penalty, self.alpha)
    }
}

struct DeepLassoHook {
    alpha: f64,
    eps_norm: f64,
}

impl PenaltyHook for DeepLassoHook {
    fn augment(&self, graph: &mut Graph, ctx: &HookContext) -> Result<NodeId, TrainError> {
        let penalty = deep_lasso_penalty(
            graph,
            ctx.loss,
            ctx.x,
            ctx.in_dim,
            ctx.n_batch,
            self.eps_norm,
        )
        .map_err(|e| TrainError::Hook(e.to_string()))?;
        combine(graph, ctx.loss, penalty, self.alpha)
    }
}

/// Exact L2 norm of each first-layer row, one per input feature. The
/// smoothing constant lives only inside the training penalty.
fn first_layer_norms(model: &Mlp) -> Vec<f64> {
    model.weights[0]
        .outer_iter()
        .map(|row| row.iter().map(|&w| w * w).sum::<f64>().sqrt())
        .collect()
}

/// Trains the network under a group-lasso penalty on the first layer
/// and scores feature j by the norm of its weight group in the best
/// checkpoint.
pub fn first_layer_lasso_fit(
    spec: &MlpSpec,
    x_train: ArrayView2<f64>,
    y_train: &Targets,
    x_val: ArrayView2<f64>,
    y_val: &Targets,
    cfg: &TrainConfig,
    pcfg: &PenaltyConfig,
) -> Result<(TrainedModel, FeatureScores), FsError> {
    check_alpha(pcfg.alpha)?;
    let hook = GroupLassoHook {
        alpha: pcfg.alpha,
        eps_norm: pcfg.eps_norm,
        group_weights: None,
    };
    let trained = nn::fit(spec, x_train, y_train, x_val, y_val, cfg, Some(&hook))?;
    let scores = FeatureScores::new(
        first_layer_norms(&trained.model),
        "first_layer_lasso",
        "train",
    )?;
    Ok((trained, scores))
}

/// Per-group penalty weights 1 / (norm^gamma + eps_norm) from the
/// stage-1 estimate. Gamma zero is scale free, every weight is exactly
/// one. A group the first stage zeroed out gets the cap 1 / eps_norm.
pub(crate) fn adaptive_weights(stage1_norms: &[f64], gamma: f64, eps_norm: f64) -> Vec<f64> {
    if gamma == 0.0 {
        return vec![1.0; stage1_norms.len()];
    }
    if stage1_norms.iter().all(|&norm| norm == 0.0) {
        log::warn!(
            "all stage-1 group norms are zero; adaptive weights capped at {:e}",
            1.0 / eps_norm
        );
    }
    stage1_norms
        .iter()
        .map(|&norm| 1.0 / (norm.powf(gamma) + eps_norm))
        .collect()
}

/// Two-stage selector: a plain first-layer group-lasso fit produces
/// per-group norms, then a fresh network is trained with each group's
/// penalty reweighted by the inverse of its stage-1 norm. Groups the
/// first stage suppressed are pushed harder toward zero. Scores come
/// from the stage-2 checkpoint.
pub fn adaptive_group_lasso_fit(
    spec: &MlpSpec,
    x_train: ArrayView2<f64>,
    y_train: &Targets,
    x_val: ArrayView2<f64>,
    y_val: &Targets,
    cfg: &TrainConfig,
    pcfg: &PenaltyConfig,
) -> Result<(TrainedModel, FeatureScores), FsError> {
    check_alpha(pcfg.alpha)?;
    if !pcfg.gamma.is_finite() || pcfg.gamma < 0.0 {
        return Err(FsError::PenaltyInput(format!(
            "gamma {} must be finite and nonnegative",
            pcfg.gamma
        )));
    }
    let (_, stage1) = first_layer_lasso_fit(spec, x_train, y_train, x_val, y_val, cfg, pcfg)?;
    let hook = GroupLassoHook {
        alpha: pcfg.alpha,
        eps_norm: pcfg.eps_norm,
        group_weights: Some(adaptive_weights(&stage1.scores, pcfg.gamma, pcfg.eps_norm)),
    };
    let stage2_cfg = TrainConfig {
        seed: seeds::stream_seed(cfg.seed, "agl-stage2", &[]),
        ..cfg.clone()
    };
    let trained = nn::fit(
        spec,
        x_train,
        y_train,
        x_val,
        y_val,
        &stage2_cfg,
        Some(&hook),
    )?;
    let scores = FeatureScores::new(
        first_layer_norms(&trained.model),
        "adaptive_group_lasso",
        "train",
    )?;
    Ok((trained, scores))
}

/// Trains the network with the input-gradient group penalty folded
/// into every mini-batch objective, then scores features by their
/// post-training input-gradient norms over the full training split.
pub fn deep_lasso_fit(
    spec: &MlpSpec,
    x_train: ArrayView2<f64>,
    y_train: &Targets,
    x_val: ArrayView2<f64>,
    y_val: &Targets,
    cfg: &TrainConfig,
    pcfg: &PenaltyConfig,
) -> Result<(TrainedModel, FeatureScores), FsError> {
    check_alpha(pcfg.alpha)?;
    let hook = DeepLassoHook {
        alpha: pcfg.alpha,
        eps_norm: pcfg.eps_norm,
    };
    let trained = nn::fit(spec, x_train, y_train, x_val, y_val, cfg, Some(&hook))?;
    let norms = input_gradient_norms_scaled(&trained.model, x_train, y_train, cfg.batch_size, 1.0)?;
    let scores = FeatureScores::new(norms, "deep_lasso", "train")?;
    Ok((trained, scores))
}

/// Feature j scored as the root of the summed squared loss gradients
/// with respect to x_ij over every row of the split, with the loss
/// normalized by the split size. Dropout is off; batches only bound
/// the graph size, each row's gradient is accumulated exactly once.
pub fn input_gradient_norms(
    model: &Mlp,
    x: ArrayView2<f64>,
    y: &Targets,
    batch_size: usize,
) -> Result<FeatureScores, FsError> {
    let norms = input_gradient_norms_scaled(model, x, y, batch_size, 1.0)?;
    FeatureScores::new(norms, "input_gradient", "train")
}

struct EvalGraph {
    graph: Graph,
    x: NodeId,
    weights: Vec<NodeId>,
    biases: Vec<NodeId>,
    target: NodeId,
    grad_x: NodeId,
}

fn build_eval_graph(
    spec: &MlpSpec,
    classification: bool,
    b: usize,
    norm: f64,
) -> Result<EvalGraph, FsError> {
    let mut graph = Graph::new();
    let nodes = nn::build_network(&mut graph, spec, b, false)?;
    let target_cols = if classification { spec.out_dim } else { 1 };
    let target = graph.input(b, target_cols)?;
    let loss = nn::attach_loss(&mut graph, nodes.output, target, classification, norm)?;
    let grads = graph.gradient(loss, &[nodes.x])?;
    let grad_x = grads.grad(nodes.x);
    Ok(EvalGraph {
        graph,
        x: nodes.x,
        weights: nodes.weights,
        biases: nodes.biases,
        target,
        grad_x,
    })
}

/// Core of [`input_gradient_norms`] with the loss multiplied by
/// `loss_scale`, which rescales every gradient by the same factor.
pub(crate) fn input_gradient_norms_scaled(
    model: &Mlp,
    x: ArrayView2<f64>,
    y: &Targets,
    batch_size: usize,
    loss_scale: f64,
) -> Result<Vec<f64>, FsError> {
    if batch_size == 0 {
        return Err(FsError::PenaltyInput(
            "batch_size must be at least 1".into(),
        ));
    }
    let n = x.nrows();
    if n == 0 {
        return Err(TrainError::EmptySplit("scored").into());
    }
    if x.ncols() != model.spec.in_dim {
        return Err(TrainError::DimensionMismatch {
            expected: model.spec.in_dim,
            got: x.ncols(),
        }
        .into());
    }
    if y.len() != n {
        return Err(TrainError::Length(format!("{} targets for {} rows", y.len(), n)).into());
    }
    let classification = matches!(y, Targets::Classification(_));
    let norm = n as f64 / loss_scale;

    let rows: Vec<usize> = (0..n).collect();
    let mut cache: HashMap<usize, EvalGraph> = HashMap::new();
    let mut accumulated = vec![0.0f64; model.spec.in_dim];
    for batch in rows.chunks(batch_size) {
        let b = batch.len();
        let eg = match cache.entry(b) {
            Entry::Occupied(entry) => entry.into_mut(),
            Entry::Vacant(entry) => {
                entry.insert(build_eval_graph(&model.spec, classification, b, norm)?)
            }
        };
        let eg = &*eg;

        let mut bindings = Bindings::new();
        bindings.set(eg.x, nn::gather_rows(x, batch));
        bindings.set(eg.target, nn::target_matrix(y, batch, model.spec.out_dim)?);
        for (&node, value) in eg.weights.iter().zip(&model.weights) {
            bindings.set(node, value.clone());
        }
        for (&node, value) in eg.biases.iter().zip(&model.biases) {
            bindings.set(node, value.clone());
        }

        let eval = eg.graph.forward(&bindings)?;
        let grad = eval.value(eg.grad_x);
        for i in 0..b {
            for (j, slot) in accumulated.iter_mut().enumerate() {
                *slot += grad[[i, j]] * grad[[i, j]];
            }
        }
    }
    Ok(accumulated.into_iter().map(f64::sqrt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{build_mlp, fit};
    use crate::seeds::stream_rng;
    use crate::selectors::select_top_k;
    use ndarray::Array2;
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

    /// Feature 0 duplicates the target, feature 1 is independent noise.
    fn copy_and_noise(n: usize, seed: u64) -> (Array2<f64>, Targets) {
        let mut rng = stream_rng(seed, "neural-test-data", &[]);
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            if j == 0 {
                y[i]
            } else {
                StandardNormal.sample(&mut rng)
            }
        });
        (x, Targets::Regression(y))
    }

    fn quick_cfg(seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: 4,
            batch_size: 32,
            lr: 1e-2,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn full_loss_weight_matches_plain_training() {
        let (x, y) = copy_and_noise(80, 1);
        let s = spec(1, 4, 2, 1);
        let cfg = quick_cfg(1);
        let pcfg = PenaltyConfig {
            alpha: 1.0,
            ..PenaltyConfig::default()
        };
        let (trained, scores) =
            first_layer_lasso_fit(&s, x.view(), &y, x.view(), &y, &cfg, &pcfg).unwrap();
        let plain = fit(&s, x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        assert_eq!(trained.history, plain.history);
        assert_eq!(trained.model, plain.model);
        assert_eq!(scores.scores, first_layer_norms(&plain.model));
    }

    #[test]
    fn dominant_penalty_shrinks_every_group() {
        // Zero target: loss and penalty agree that every parameter
        // should vanish, so validation improves monotonically and the
        // best checkpoint is a late, fully shrunken epoch.
        let mut rng = stream_rng(2, "neural-shrink-data", &[]);
        let n = 120;
        let x = Array2::from_shape_fn((n, 3), |_| StandardNormal.sample(&mut rng));
        let y = Targets::Regression(vec![0.0; n]);
        let x_val = Array2::from_shape_fn((60, 3), |_| StandardNormal.sample(&mut rng));
        let y_val = Targets::Regression(vec![0.0; 60]);
        let cfg = TrainConfig {
            max_epochs: 120,
            patience: 120,
            batch_size: 64,
            lr: 1e-2,
            lr_decay_epochs: vec![40, 70, 100],
            lr_decay_factor: 0.1,
            seed: 2,
            ..TrainConfig::default()
        };
        let pcfg = PenaltyConfig {
            alpha: 0.01,
            ..PenaltyConfig::default()
        };
        let (trained, scores) = first_layer_lasso_fit(
            &spec(1, 4, 3, 1),
            x.view(),
            &y,
            x_val.view(),
            &y_val,
            &cfg,
            &pcfg,
        )
        .unwrap();
        assert!(
            scores.scores.iter().all(|&s| s < 1e-3),
            "scores {:?} best_epoch {} history {:?}",
            scores.scores,
            trained.best_epoch,
            &trained.history[trained.best_epoch.saturating_sub(3)..]
        );
    }

    #[test]
    fn informative_feature_outranks_noise_across_seeds() {
        let mut wins = 0;
        for seed in 0..10u64 {
            let (x, y) = copy_and_noise(120, 100 + seed);
            let (x_val, y_val) = copy_and_noise(60, 600 + seed);
            let cfg = TrainConfig {
                max_epochs: 30,
                batch_size: 32,
                lr: 1e-2,
                seed,
                ..TrainConfig::default()
            };
            let pcfg = PenaltyConfig {
                alpha: 0.5,
                ..PenaltyConfig::default()
            };
            let (_, scores) = first_layer_lasso_fit(
                &spec(1, 8, 2, 1),
                x.view(),
                &y,
                x_val.view(),
                &y_val,
                &cfg,
                &pcfg,
            )
            .unwrap();
            if scores.scores[1] < scores.scores[0] {
                wins += 1;
            }
        }
        assert!(
            wins >= 9,
            "noise outranked the target copy in {} of 10 seeds",
            10 - wins
        );
    }

    #[test]
    fn zero_exponent_reduces_to_first_layer_lasso() {
        let (x, y) = copy_and_noise(90, 3);
        let s = spec(1, 4, 2, 1);
        let cfg = quick_cfg(3);
        let pcfg = PenaltyConfig {
            alpha: 0.6,
            gamma: 0.0,
            ..PenaltyConfig::default()
        };
        let (agl_model, agl_scores) =
            adaptive_group_lasso_fit(&s, x.view(), &y, x.view(), &y, &cfg, &pcfg).unwrap();
        let stage2_cfg = TrainConfig {
            seed: seeds::stream_seed(cfg.seed, "agl-stage2", &[]),
            ..cfg.clone()
        };
        let (fll_model, fll_scores) =
            first_layer_lasso_fit(&s, x.view(), &y, x.view(), &y, &stage2_cfg, &pcfg).unwrap();
        assert_eq!(agl_model.history, fll_model.history);
        assert_eq!(agl_model.model, fll_model.model);
        assert_eq!(agl_scores.scores, fll_scores.scores);
    }

    #[test]
    fn adaptive_weights_invert_stage_one_norms() {
        let w = adaptive_weights(&[0.1], 1.0, 1e-12);
        assert!((w[0] - 10.0).abs() / 10.0 < 1e-8, "w = {:?}", w);
        let capped = adaptive_weights(&[0.0, 2.0], 1.0, 1e-12);
        assert!((capped[0] - 1e12).abs() < 1.0);
        assert!((capped[1] - 0.5).abs() < 1e-9);
        assert_eq!(adaptive_weights(&[0.3, 0.0], 0.0, 1e-12), vec![1.0, 1.0]);
    }

    #[test]
    fn second_stage_keeps_noise_groups_down() {
        // Stage 1 shrinks the noise group well below the informative
        // one, so its adaptive weight is large and stage 2 must push
        // it at least as low again.
        let (x, y) = copy_and_noise(150, 7);
        let (x_val, y_val) = copy_and_noise(60, 507);
        let s = spec(1, 8, 2, 1);
        let cfg = TrainConfig {
            max_epochs: 40,
            patience: 40,
            batch_size: 64,
            lr: 1e-2,
            lr_decay_epochs: vec![20, 30],
            lr_decay_factor: 0.1,
            seed: 7,
            ..TrainConfig::default()
        };
        let pcfg = PenaltyConfig {
            alpha: 0.3,
            gamma: 1.0,
            ..PenaltyConfig::default()
        };
        let (_, stage1) =
            first_layer_lasso_fit(&s, x.view(), &y, x_val.view(), &y_val, &cfg, &pcfg).unwrap();
        let (_, stage2) =
            adaptive_group_lasso_fit(&s, x.view(), &y, x_val.view(), &y_val, &cfg, &pcfg).unwrap();
        assert!(
            stage2.scores[1] <= stage1.scores[1],
            "noise group grew from {} to {}",
            stage1.scores[1],
            stage2.scores[1]
        );
    }

    #[test]
    fn full_loss_weight_matches_plain_gradient_norms() {
        let (x, y) = copy_and_noise(80, 8);
        let s = spec(1, 4, 2, 1);
        let cfg = quick_cfg(8);
        let pcfg = PenaltyConfig {
            alpha: 1.0,
            ..PenaltyConfig::default()
        };
        let (trained, scores) =
            deep_lasso_fit(&s, x.view(), &y, x.view(), &y, &cfg, &pcfg).unwrap();
        let plain = fit(&s, x.view(), &y, x.view(), &y, &cfg, None).unwrap();
        assert_eq!(trained.model, plain.model);
        let reference = input_gradient_norms(&plain.model, x.view(), &y, cfg.batch_size).unwrap();
        assert_eq!(scores.scores, reference.scores);
    }

    #[test]
    fn doubling_the_loss_doubles_scores_and_keeps_ranking() {
        let (x, y) = copy_and_noise(64, 9);
        let model = build_mlp(&spec(1, 6, 2, 1), 9).unwrap();
        let base = input_gradient_norms_scaled(&model, x.view(), &y, 32, 1.0).unwrap();
        let doubled = input_gradient_norms_scaled(&model, x.view(), &y, 32, 2.0).unwrap();
        for (b, d) in base.iter().zip(&doubled) {
            assert_eq!(*d, 2.0 * *b);
        }
        let rank_base = FeatureScores::new(base, "input_gradient", "train").unwrap();
        let rank_doubled = FeatureScores::new(doubled, "input_gradient", "train").unwrap();
        assert_eq!(
            select_top_k(&rank_base, 1).unwrap(),
            select_top_k(&rank_doubled, 1).unwrap()
        );
    }

    #[test]
    fn classification_gradients_scale_with_the_loss_too() {
        let mut rng = stream_rng(10, "neural-class-data", &[]);
        let n = 60;
        let x = Array2::from_shape_fn((n, 3), |_| StandardNormal.sample(&mut rng));
        let labels: Vec<usize> = (0..n).map(|i| usize::from(x[[i, 0]] > 0.0)).collect();
        let y = Targets::Classification(labels);
        let model = build_mlp(&spec(1, 6, 3, 2), 10).unwrap();
        let base = input_gradient_norms_scaled(&model, x.view(), &y, 25, 1.0).unwrap();
        let doubled = input_gradient_norms_scaled(&model, x.view(), &y, 25, 2.0).unwrap();
        for (b, d) in base.iter().zip(&doubled) {
            assert_eq!(*d, 2.0 * *b);
        }
    }

    #[test]
    fn batch_size_does_not_change_gradient_norms() {
        let (x, y) = copy_and_noise(70, 11);
        let model = build_mlp(&spec(2, 5, 2, 1), 11).unwrap();
        let small = input_gradient_norms(&model, x.view(), &y, 17).unwrap();
        let large = input_gradient_norms(&model, x.view(), &y, 70).unwrap();
        for (a, b) in small.scores.iter().zip(&large.scores) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn tuned_penalty_suppresses_noise_gradients() {
        // Five informative features drive the target, five are pure
        // noise; the penalty should leave the noise gradients an order
        // of magnitude below the informative ones.
        let mut rng = stream_rng(11, "neural-separation-data", &[]);
        let n = 256;
        let coefficients = [2.0, -1.5, 1.0, 0.75, 0.5];
        let x = Array2::from_shape_fn((n, 10), |_| StandardNormal.sample(&mut rng));
        let y = Targets::Regression(
            (0..n)
                .map(|i| {
                    let signal: f64 = coefficients
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c * x[[i, j]])
                        .sum();
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    signal + 0.01 * noise
                })
                .collect(),
        );
        let cfg = TrainConfig {
            max_epochs: 40,
            patience: 40,
            batch_size: 128,
            lr: 5e-3,
            seed: 11,
            ..TrainConfig::default()
        };
        let pcfg = PenaltyConfig {
            alpha: 0.5,
            ..PenaltyConfig::default()
        };
        let (_, scores) =
            deep_lasso_fit(&spec(1, 16, 10, 1), x.view(), &y, x.view(), &y, &cfg, &pcfg).unwrap();
        let informative: f64 = scores.scores[..5].iter().sum::<f64>() / 5.0;
        let noise: f64 = scores.scores[5..].iter().sum::<f64>() / 5.0;
        assert!(
            noise <= 0.1 * informative,
            "noise mean {noise} vs informative mean {informative}"
        );
    }

    #[test]
    fn bad_alpha_rejected_before_training() {
        let (x, y) = copy_and_noise(40, 12);
        let s = spec(1, 4, 2, 1);
        let cfg = quick_cfg(12);
        for alpha in [0.0, -0.5, 1.5, f64::NAN] {
            let pcfg = PenaltyConfig {
                alpha,
                ..PenaltyConfig::default()
            };
            assert!(matches!(
                first_layer_lasso_fit(&s, x.view(), &y, x.view(), &y, &cfg, &pcfg),
                Err(FsError::BadAlpha(_))
            ));
            assert!(matches!(
                deep_lasso_fit(&s, x.view(), &y, x.view(), &y, &cfg, &pcfg),
                Err(FsError::BadAlpha(_))
            ));
        }
        let pcfg = PenaltyConfig {
            gamma: -1.0,
            ..PenaltyConfig::default()
        };
        assert!(matches!(
            adaptive_group_lasso_fit(&s, x.view(), &y, x.view(), &y, &cfg, &pcfg),
            Err(FsError::PenaltyInput(_))
        ));
    }
}
