//! Node centralities over the answer/claim graph.
//!
//! Raw scores are computed for every node (answers first, then claims, in
//! graph order); [`score_confidence`] keeps the claim entries and min-max
//! normalizes them.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use super::EntailmentGraph;
use crate::domain::{CentralityMetric, ClosenessVariant};

pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 500;
pub const DAMPING: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CentralityError {
    #[error("{metric:?} did not converge within {iterations} iterations")]
    NonConvergence { metric: CentralityMetric, iterations: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
}

/// Unweighted hop distances from `source`; `None` when unreachable.
pub fn bfs_distances(adj: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adj.len()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

pub fn closeness(adj: &[Vec<usize>], variant: ClosenessVariant) -> Vec<f64> {
    let n = adj.len();
    (0..n)
        .map(|u| {
            let dist = bfs_distances(adj, u);
            let reach: Vec<usize> = dist.iter().flatten().copied().collect();
            let total: usize = reach.iter().sum();
            let comp = reach.len();
            if total == 0 {
                return 0.0;
            }
            let (n, comp, total) = (n as f64, comp as f64, total as f64);
            match variant {
                ClosenessVariant::AsWritten => (n - 1.0) / total * (n / comp),
                ClosenessVariant::WassermanFaust => (comp - 1.0) / total * (comp - 1.0) / (n - 1.0),
            }
        })
        .collect()
}

pub fn degree(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    if n < 2 {
        return vec![0.0; n];
    }
    adj.iter().map(|l| l.len() as f64 / (n - 1) as f64).collect()
}

/// Brandes' algorithm for unweighted undirected graphs.
pub fn betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut cb = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in &adj[v] {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                cb[w] += delta[w];
            }
        }
    }
    if n <= 2 {
        return vec![0.0; n];
    }
    // each unordered pair was counted from both ends
    let scale = 1.0 / ((n - 1) * (n - 2)) as f64;
    cb.iter().map(|x| x * scale).collect()
}

/// Power iteration on `A + I`; the shift keeps bipartite spectra from
/// oscillating without changing the eigenvectors.
pub fn eigenvector(adj: &[Vec<usize>]) -> Result<Vec<f64>, CentralityError> {
    let n = adj.len();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..POWER_MAX_ITER {
        let mut y: Vec<f64> = (0..n).map(|u| x[u] + adj[u].iter().map(|&v| x[v]).sum::<f64>()).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let diff: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if diff < n as f64 * POWER_TOL {
            return Ok(x.into_iter().map(f64::abs).collect());
        }
    }
    Err(CentralityError::NonConvergence {
        metric: CentralityMetric::Eigenvector,
        iterations: POWER_MAX_ITER,
    })
}

/// PageRank with uniform teleport; isolated nodes spread their mass uniformly.
pub fn pagerank(adj: &[Vec<usize>]) -> Result<Vec<f64>, CentralityError> {
    let n = adj.len();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..POWER_MAX_ITER {
        let dangling: f64 = (0..n).filter(|&u| adj[u].is_empty()).map(|u| x[u]).sum();
        let base = (1.0 - DAMPING) / nf + DAMPING * dangling / nf;
        let mut y = vec![base; n];
        for u in 0..n {
            if adj[u].is_empty() {
                continue;
            }
            let share = DAMPING * x[u] / adj[u].len() as f64;
            for &v in &adj[u] {
                y[v] += share;
            }
        }
        let diff: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = y;
        if diff < nf * POWER_TOL {
            return Ok(x);
        }
    }
    Err(CentralityError::NonConvergence {
        metric: CentralityMetric::Pagerank,
        iterations: POWER_MAX_ITER,
    })
}

/// Unnormalized scores for every node, answers first.
pub fn raw_scores(
    graph: &EntailmentGraph,
    metric: CentralityMetric,
    variant: ClosenessVariant,
) -> Result<Vec<f64>, CentralityError> {
    if graph.is_empty() {
        return Err(CentralityError::EmptyGraph);
    }
    let adj = graph.adjacency();
    Ok(match metric {
        CentralityMetric::Closeness => closeness(&adj, variant),
        CentralityMetric::Degree => degree(&adj),
        CentralityMetric::Betweenness => betweenness(&adj),
        CentralityMetric::Eigenvector => eigenvector(&adj)?,
        CentralityMetric::Pagerank => pagerank(&adj)?,
    })
}

/// Min-max scaling to [0, 1]; a constant vector maps to all ones.
pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![1.0; values.len()];
    }
    values.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}

/// Per-claim confidence: the chosen centrality, min-max normalized over claims.
pub fn score_confidence(
    graph: &EntailmentGraph,
    metric: CentralityMetric,
    variant: ClosenessVariant,
) -> Result<BTreeMap<String, f64>, CentralityError> {
    let raw = raw_scores(graph, metric, variant)?;
    let claims = &raw[graph.answer_nodes.len()..];
    Ok(graph.claim_nodes.iter().cloned().zip(min_max(claims)).collect())
}
