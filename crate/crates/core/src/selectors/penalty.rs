//! Penalty terms built as graph nodes so they can be added to a
//! training loss and differentiated.
//!
//! Both penalties are sums of group L2 norms smoothed as
//! sqrt(sum-of-squares + eps_norm), which keeps the gradient defined
//! when a whole group is zero. For the weight penalty a group is one
//! weight-matrix row (one input feature feeding every hidden unit);
//! for the input-gradient penalty a group is one column of
//! d(loss)/d(batch), so the penalty sees how strongly each feature
//! moves the loss across the batch.

use crate::autodiff::{Graph, NodeId};

use super::FsError;

fn check_eps(eps_norm: f64) -> Result<(), FsError> {
    if !eps_norm.is_finite() || eps_norm < 0.0 {
        return Err(FsError::PenaltyInput(format!(
            "eps_norm must be finite and nonnegative, got {eps_norm}"
        )));
    }
    Ok(())
}

/// Sum of per-row group norms of `w`, optionally scaled per group.
/// Row j of `w` holds the weights leaving input feature j.
pub fn group_lasso_penalty(
    graph: &mut Graph,
    w: NodeId,
    group_weights: Option<&[f64]>,
    eps_norm: f64,
) -> Result<NodeId, FsError> {
    check_eps(eps_norm)?;
    let shape = graph.shape(w);
    if let Some(weights) = group_weights {
        if weights.len() != shape.rows {
            return Err(FsError::PenaltyInput(format!(
                "{} group weights for {} rows",
                weights.len(),
                shape.rows
            )));
        }
        if let Some(&bad) = weights.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(FsError::PenaltyInput(format!(
                "group weight {bad} must be finite and nonnegative"
            )));
        }
    }
    let squared = graph.square(w)?;
    let row_totals = graph.row_sums(squared)?;
    let shifted = graph.add_scalar(row_totals, eps_norm)?;
    let norms = graph.sqrt(shifted)?;
    let weighted = match group_weights {
        Some(weights) => {
            let column = ndarray::Array2::from_shape_fn((shape.rows, 1), |(i, _)| weights[i]);
            let scale = graph.constant(column)?;
            graph.mul(norms, scale)?
        }
        None => norms,
    };
    Ok(graph.sum_all(weighted)?)
}

/// Sum over features of the batch group norm of d(loss)/dx. The
/// gradient is appended as differentiable nodes, so the returned
/// penalty can itself be trained through.
pub fn deep_lasso_penalty(
    graph: &mut Graph,
    loss: NodeId,
    x: NodeId,
    m: usize,
    n_batch: usize,
    eps_norm: f64,
) -> Result<NodeId, FsError> {
    check_eps(eps_norm)?;
    if !graph.is_input(x) {
        return Err(FsError::PenaltyInput(
            "input-gradient penalty needs x to be an input node".into(),
        ));
    }
    let shape = graph.shape(x);
    if shape.rows != n_batch || shape.cols != m {
        return Err(FsError::PenaltyInput(format!(
            "x is {}x{}, expected {n_batch}x{m}",
            shape.rows, shape.cols
        )));
    }
    let grads = graph.gradient(loss, &[x])?;
    let gx = grads.grad(x);
    let squared = graph.square(gx)?;
    let column_totals = graph.col_sums(squared)?;
    let shifted = graph.add_scalar(column_totals, eps_norm)?;
    let norms = graph.sqrt(shifted)?;
    Ok(graph.sum_all(norms)?)
}
