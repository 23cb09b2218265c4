//! Pretraining episodes: context/query splits and masked-graph-modeling
//! edge samples.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng as _;
use thiserror::Error;

use crate::dataset::AttributedGraphDataset;
use crate::graph::GraphStructure;
use crate::rng::Rng;

/// Rejection draws allowed per required negative pair.
pub const NEGATIVE_ATTEMPTS_PER_SAMPLE: usize = 100;

/// Graphs denser than this cannot be used for negative sampling.
pub const MAX_NEGATIVE_DENSITY: f64 = 0.99;

#[derive(Debug, Error, PartialEq)]
pub enum EpisodeError {
    #[error("graph too dense for negative sampling (density {density:.4}, {found} of {needed} negatives found)")]
    Saturated { density: f64, found: usize, needed: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// One pretraining unit over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// `true` for context (labeled) nodes, `false` for query nodes.
    pub context_mask: Vec<bool>,
    /// Removed edges, `(u, v)` with `u < v`.
    pub mgm_positives: Vec<(u32, u32)>,
    /// Non-adjacent pairs, `(u, v)` with `u < v`.
    pub mgm_negatives: Vec<(u32, u32)>,
    pub pruned_graph: GraphStructure,
}

impl Episode {
    pub fn n_context(&self) -> usize {
        self.context_mask.iter().filter(|&&c| c).count()
    }

    /// Checks the episode against the graph it was built from.
    pub fn validate(&self, graph: &GraphStructure) -> Result<(), EpisodeError> {
        let bad = |m: &str| Err(EpisodeError::InvalidArgument(m.into()));
        let n = graph.n_nodes();
        if self.context_mask.len() != n || self.pruned_graph.n_nodes() != n {
            return bad("episode size does not match the graph");
        }
        let context = self.n_context();
        if context == 0 || context == n {
            return bad("context and query sets must both be non-empty");
        }
        if self.mgm_positives.len() != self.mgm_negatives.len() {
            return bad("positive and negative counts differ");
        }
        let mut seen = HashSet::new();
        for &(u, v) in &self.mgm_positives {
            if u >= v || !graph.has_edge(u as usize, v as usize) || !seen.insert((u, v)) {
                return bad("positive pair is not a distinct graph edge");
            }
        }
        seen.clear();
        for &(u, v) in &self.mgm_negatives {
            if u >= v || v as usize >= n || graph.has_edge(u as usize, v as usize) || !seen.insert((u, v)) {
                return bad("negative pair is not a distinct non-edge");
            }
        }
        if self.pruned_graph.n_edges() + self.mgm_positives.len() != graph.n_edges()
            || self
                .mgm_positives
                .iter()
                .any(|&(u, v)| self.pruned_graph.has_edge(u as usize, v as usize))
            || self
                .pruned_graph
                .edges()
                .any(|(u, v)| !graph.has_edge(u as usize, v as usize))
        {
            return bad("pruned graph is not the graph minus the positives");
        }
        Ok(())
    }
}

/// Number of context nodes: `max(1, round(fraction * n))`, leaving at least
/// one query node.
pub fn context_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Samples the context set uniformly without replacement.
pub fn split_context_query(n: usize, fraction: f64, rng: &mut Rng) -> Result<Vec<bool>, EpisodeError> {
    if n < 2 {
        return Err(EpisodeError::InvalidArgument(format!("need at least 2 nodes, got {n}")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EpisodeError::InvalidArgument(format!("context fraction {fraction} outside (0, 1)")));
    }
    let mut mask = vec![false; n];
    for i in index::sample(rng, n, context_size(n, fraction)) {
        mask[i] = true;
    }
    Ok(mask)
}

/// Masked-graph-modeling samples of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MgmSample {
    pub positives: Vec<(u32, u32)>,
    pub negatives: Vec<(u32, u32)>,
    pub pruned_graph: GraphStructure,
}

/// Removes `floor(fraction * |E|)` uniformly chosen edges and draws as many
/// uniformly random non-adjacent pairs by rejection.
pub fn sample_mgm(graph: &GraphStructure, fraction: f64, rng: &mut Rng) -> Result<MgmSample, EpisodeError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(EpisodeError::InvalidArgument(format!("MGM fraction {fraction} outside (0, 1)")));
    }
    let edges: Vec<(u32, u32)> = graph.edges().collect();
    let count = (fraction * edges.len() as f64).floor() as usize;
    if count == 0 {
        return Ok(MgmSample {
            positives: Vec::new(),
            negatives: Vec::new(),
            pruned_graph: graph.clone(),
        });
    }
    let n = graph.n_nodes();
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    let density = edges.len() as f64 / pairs;
    let non_edges = pairs - edges.len() as f64;
    if density > MAX_NEGATIVE_DENSITY || non_edges < count as f64 {
        return Err(EpisodeError::Saturated { density, found: 0, needed: count });
    }

    let mut chosen = index::sample(rng, edges.len(), count).into_vec();
    chosen.sort_unstable();
    let positives: Vec<(u32, u32)> = chosen.iter().map(|&i| edges[i]).collect();

    let mut negatives = Vec::with_capacity(count);
    let mut seen = HashSet::with_capacity(count);
    let budget = NEGATIVE_ATTEMPTS_PER_SAMPLE * count;
    for _ in 0..budget {
        if negatives.len() == count {
            break;
        }
        let u = rng.random_range(0..n as u32);
        let v = rng.random_range(0..n as u32);
        if u == v {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if graph.has_edge(u as usize, v as usize) || !seen.insert(pair) {
            continue;
        }
        negatives.push(pair);
    }
    if negatives.len() < count {
        return Err(EpisodeError::Saturated { density, found: negatives.len(), needed: count });
    }

    let mut removed = vec![false; edges.len()];
    chosen.iter().for_each(|&i| removed[i] = true);
    let pruned_graph = GraphStructure::from_edges(
        n,
        edges.iter().zip(&removed).filter(|(_, &r)| !r).map(|(&e, _)| e),
    );
    Ok(MgmSample {
        positives,
        negatives,
        pruned_graph,
    })
}

/// Context split plus MGM samples, using the dataset's context and MGM
/// fractions.
pub fn build_episode(dataset: &AttributedGraphDataset, rng: &mut Rng) -> Result<Episode, EpisodeError> {
    let context_mask = split_context_query(dataset.n_nodes(), dataset.prior.context_fraction, rng)?;
    let mgm = sample_mgm(&dataset.graph, dataset.prior.mgm_fraction, rng)?;
    Ok(Episode {
        context_mask,
        mgm_positives: mgm.positives,
        mgm_negatives: mgm.negatives,
        pruned_graph: mgm.pruned_graph,
    })
}

/// `count` episodes on independent sub-streams of the dataset seed.
pub fn build_episodes(dataset: &AttributedGraphDataset, count: usize) -> Result<Vec<Episode>, EpisodeError> {
    (0..count)
        .map(|i| {
            let mut rng = crate::rng::substream(dataset.seed, crate::rng::StreamTag::Episode, i as u64);
            build_episode(dataset, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamTag};

    fn rng(seed: u64) -> Rng {
        stream(seed, StreamTag::Episode)
    }

    #[test]
    fn context_counts() {
        let m = split_context_query(100, 0.1, &mut rng(0)).unwrap();
        assert_eq!(m.iter().filter(|&&c| c).count(), 10);
        let m = split_context_query(2, 0.01, &mut rng(0)).unwrap();
        assert_eq!(m.iter().filter(|&&c| c).count(), 1);
        let m = split_context_query(3, 0.99, &mut rng(0)).unwrap();
        assert_eq!(m.iter().filter(|&&c| c).count(), 2);
    }

    #[test]
    fn context_preconditions() {
        assert!(split_context_query(1, 0.5, &mut rng(0)).is_err());
        assert!(split_context_query(10, 0.0, &mut rng(0)).is_err());
        assert!(split_context_query(10, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn ten_edges_one_positive() {
        let g = GraphStructure::from_edges(12, (0..10).map(|i| (i, i + 1)));
        let s = sample_mgm(&g, 0.1, &mut rng(1)).unwrap();
        assert_eq!((s.positives.len(), s.negatives.len()), (1, 1));
        assert_eq!(s.pruned_graph.n_edges(), 9);
        let (u, v) = s.negatives[0];
        assert!(!g.has_edge(u as usize, v as usize));
    }

    #[test]
    fn tiny_fraction_is_noop() {
        let g = GraphStructure::from_edges(5, [(0, 1), (1, 2)]);
        let s = sample_mgm(&g, 0.1, &mut rng(1)).unwrap();
        assert!(s.positives.is_empty() && s.negatives.is_empty());
        assert_eq!(s.pruned_graph, g);
    }

    #[test]
    fn complete_graph_saturates() {
        let g = GraphStructure::from_edges(
            12,
            (0..12u32).flat_map(|u| (u + 1..12).map(move |v| (u, v))),
        );
        assert!(matches!(sample_mgm(&g, 0.1, &mut rng(0)), Err(EpisodeError::Saturated { .. })));
    }
}
