//! Multiscale backbone extraction via the disparity filter, plus the naive
//! fixed-threshold filter used as a baseline.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SimilarityGraph;

/// Which endpoints must find an edge significant for it to survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeepRule {
    /// Keep the edge if it is significant for at least one endpoint.
    EitherEndpoint,
    /// Keep the edge only if it is significant for both endpoints.
    BothEndpoints,
}

#[derive(Debug, Clone, Copy)]
pub struct BackboneConfig {
    /// Significance level; an edge survives when its score is strictly below
    /// this. Must lie in `(0, 1)`.
    pub alpha: f64,
    pub keep_rule: KeepRule,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig { alpha: 0.05, keep_rule: KeepRule::EitherEndpoint }
    }
}

/// Disparity significance of an edge of weight `w` seen from an endpoint
/// with strength `s` and degree `k`: `(1 - w/s)^(k-1)`. Degree-1 endpoints
/// score exactly 1 and therefore never make an edge significant.
fn disparity_significance(w: f64, s: f64, k: usize) -> f64 {
    let p = (1.0 - w / s).max(0.0);
    p.powi(k as i32 - 1)
}

/// Per-edge disparity significances `(from_a, from_b)` in canonical edge
/// order, useful for diagnostics and validation.
pub fn edge_significances(graph: &SimilarityGraph) -> Vec<(f64, f64)> {
    graph
        .edges()
        .iter()
        .map(|&(a, b, w)| {
            (
                disparity_significance(w, graph.strength(a), graph.degree(a)),
                disparity_significance(w, graph.strength(b), graph.degree(b)),
            )
        })
        .collect()
}

/// Extracts the multiscale backbone: an edge survives when its disparity
/// significance falls below `config.alpha` at one endpoint
/// (`EitherEndpoint`) or both (`BothEndpoints`). Weights are preserved and
/// nodes left with degree zero are removed. An empty graph yields an empty
/// result.
pub fn disparity_filter(
    graph: &SimilarityGraph,
    config: &BackboneConfig,
) -> Result<SimilarityGraph> {
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Config(format!(
            "disparity alpha must lie in (0, 1), got {}",
            config.alpha
        )));
    }
    let keep: Vec<bool> = graph
        .edges()
        .par_iter()
        .map(|&(a, b, w)| {
            let sig_a = disparity_significance(w, graph.strength(a), graph.degree(a));
            let sig_b = disparity_significance(w, graph.strength(b), graph.degree(b));
            match config.keep_rule {
                KeepRule::EitherEndpoint => sig_a < config.alpha || sig_b < config.alpha,
                KeepRule::BothEndpoints => sig_a < config.alpha && sig_b < config.alpha,
            }
        })
        .collect();
    let mut it = keep.iter();
    Ok(graph.retain_edges(|_, _, _| *it.next().unwrap()).drop_isolated())
}

/// Keeps edges with weight at least `threshold`, then removes nodes left
/// with degree zero.
pub fn fixed_threshold_filter(graph: &SimilarityGraph, threshold: f64) -> SimilarityGraph {
    graph.retain_edges(|_, _, w| w >= threshold).drop_isolated()
}
