//! Graph structure generation.
//!
//! Several degree-corrected SBM graphs ("first level") are drawn and their
//! edges transferred through a random bijection onto another DC-SBM graph
//! ("second level") over the same total node count. A preferential attachment
//! process with random per-node degrees then grows a low-degree periphery.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Pareto, Poisson, Zeta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphStructure;
use crate::prior::PriorSample;
use crate::rng::{self, Rng};

/// Largest arc count a [`GraphStructure`] is expected to hold.
pub const MAX_ARCS: u64 = u32::MAX as u64;

/// Number of full resampling attempts before edges are subsampled to the cap.
pub const EDGE_CAP_ATTEMPTS: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum StructureError {
    #[error("invalid DC-SBM parameters: {0}")]
    InvalidParams(String),
    #[error("expected edge count {expected:.3e} exceeds the representable limit")]
    Overflow { expected: f64 },
    #[error("node count mismatch: first-level graphs have {first} nodes, second level has {second}")]
    SizeMismatch { first: usize, second: usize },
    #[error("level mapping is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("preferential attachment needs a node with positive degree to start from")]
    NoSeedEdges,
    #[error("cannot generate a graph with {0} nodes (need at least 2)")]
    TooFewNodes(usize),
}

/// Block structure of one DC-SBM as drawn by the prior. Degree propensities
/// are drawn from a power law with `degree_exponent` when the model is
/// materialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcsbmSpec {
    pub block_sizes: Vec<usize>,
    /// Expected edge counts between block pairs; diagonal entries are twice
    /// the expected number of edges inside the block.
    pub omega: Vec<Vec<f64>>,
    pub degree_exponent: f64,
}

impl DcsbmSpec {
    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// Draws power-law degree propensities and normalizes them per block.
    /// Raw propensities are capped at the block size.
    pub fn materialize(&self, rng: &mut Rng) -> DcsbmParams {
        let pareto = Pareto::new(1.0, self.degree_exponent - 1.0).expect("exponent > 1");
        let mut theta = Vec::with_capacity(self.n());
        for &size in &self.block_sizes {
            let start = theta.len();
            theta.extend((0..size).map(|_| pareto.sample(rng).min(size as f64)));
            let sum: f64 = theta[start..].iter().sum();
            theta[start..].iter_mut().for_each(|t| *t /= sum);
        }
        DcsbmParams {
            n: self.n(),
            block_sizes: self.block_sizes.clone(),
            omega: self.omega.clone(),
            theta,
        }
    }
}

/// Fully specified degree-corrected SBM. Nodes of block `r` occupy the
/// contiguous id range following blocks `0..r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DcsbmParams {
    pub n: usize,
    pub block_sizes: Vec<usize>,
    pub omega: Vec<Vec<f64>>,
    /// Degree propensities, summing to 1 within each block.
    pub theta: Vec<f64>,
}

impl DcsbmParams {
    /// Model with uniform propensities inside every block.
    pub fn uniform(block_sizes: Vec<usize>, omega: Vec<Vec<f64>>) -> Self {
        let theta = block_sizes
            .iter()
            .flat_map(|&s| std::iter::repeat_n(1.0 / s as f64, s))
            .collect();
        Self {
            n: block_sizes.iter().sum(),
            block_sizes,
            omega,
            theta,
        }
    }

    pub fn validate(&self) -> Result<(), StructureError> {
        let bad = |m: String| Err(StructureError::InvalidParams(m));
        let b = self.block_sizes.len();
        if b == 0 {
            return bad("no blocks".into());
        }
        if self.block_sizes.contains(&0) {
            return bad("empty block".into());
        }
        if self.block_sizes.iter().sum::<usize>() != self.n {
            return bad(format!("block sizes do not sum to n = {}", self.n));
        }
        if self.n > u32::MAX as usize {
            return bad(format!("{} nodes do not fit u32 ids", self.n));
        }
        if self.omega.len() != b || self.omega.iter().any(|row| row.len() != b) {
            return bad(format!("omega must be {b} x {b}"));
        }
        for r in 0..b {
            for s in 0..b {
                let w = self.omega[r][s];
                if !w.is_finite() || w < 0.0 {
                    return bad(format!("omega[{r}][{s}] = {w} is not a non-negative number"));
                }
                if w != self.omega[s][r] {
                    return bad(format!("omega is not symmetric at ({r}, {s})"));
                }
            }
        }
        if self.theta.len() != self.n {
            return bad(format!("theta has length {}, expected {}", self.theta.len(), self.n));
        }
        let mut start = 0;
        for (r, &size) in self.block_sizes.iter().enumerate() {
            let block = &self.theta[start..start + size];
            if block.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return bad(format!("theta of block {r} has a negative or non-finite entry"));
            }
            let sum: f64 = block.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return bad(format!("theta of block {r} sums to {sum}, not 1"));
            }
            start += size;
        }
        Ok(())
    }

    /// Expected number of undirected edges before simplification.
    pub fn expected_edges(&self) -> f64 {
        let b = self.block_sizes.len();
        (0..b)
            .map(|r| self.omega[r][r] / 2.0 + (r + 1..b).map(|s| self.omega[r][s]).sum::<f64>())
            .sum()
    }
}

/// Planted-partition block matrix with the given target mean degree.
///
/// A fraction `within` of the `mean_degree * n / 2` expected edges is spread
/// over the blocks proportionally to their size; the rest goes to block pairs
/// proportionally to `n_r * n_s`.
pub fn planted_omega(block_sizes: &[usize], mean_degree: f64, within: f64) -> Vec<Vec<f64>> {
    let b = block_sizes.len();
    let n: f64 = block_sizes.iter().sum::<usize>() as f64;
    let total_edges = mean_degree * n / 2.0;
    let mut omega = vec![vec![0.0; b]; b];
    let cross_norm: f64 = (0..b)
        .flat_map(|r| (r + 1..b).map(move |s| (r, s)))
        .map(|(r, s)| (block_sizes[r] * block_sizes[s]) as f64)
        .sum();
    let within = if b == 1 { 1.0 } else { within };
    for r in 0..b {
        omega[r][r] = within * mean_degree * block_sizes[r] as f64;
        for s in r + 1..b {
            let w = (1.0 - within) * total_edges * (block_sizes[r] * block_sizes[s]) as f64 / cross_norm;
            omega[r][s] = w;
            omega[s][r] = w;
        }
    }
    omega
}

/// A DC-SBM draw before simplification.
#[derive(Debug, Clone)]
pub struct RawDcsbmDraw {
    pub n: usize,
    /// Sampled endpoint pairs, possibly with self-loops and repeats.
    pub edges: Vec<(u32, u32)>,
    /// Sampled edge count per block pair, indexed `[r][s]` with `r <= s`.
    pub pair_counts: Vec<Vec<u64>>,
}

impl RawDcsbmDraw {
    pub fn simplify(&self) -> GraphStructure {
        GraphStructure::from_edges(self.n, self.edges.iter().copied())
    }
}

fn poisson(mean: f64, rng: &mut Rng) -> u64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

/// Draws a DC-SBM multigraph: for each block pair the edge count is Poisson
/// with mean `omega[r][s]` (`omega[r][r] / 2` inside a block) and endpoints
/// are chosen within their block proportionally to `theta`.
pub fn sample_dcsbm_raw(params: &DcsbmParams, rng: &mut Rng) -> Result<RawDcsbmDraw, StructureError> {
    params.validate()?;
    let expected = params.expected_edges();
    if expected > 4.0 * MAX_ARCS as f64 {
        return Err(StructureError::Overflow { expected });
    }
    let b = params.block_sizes.len();
    let mut starts = Vec::with_capacity(b);
    let mut acc = 0usize;
    for &s in &params.block_sizes {
        starts.push(acc);
        acc += s;
    }
    let samplers: Vec<Option<WeightedAliasIndex<f64>>> = (0..b)
        .map(|r| {
            let slice = &params.theta[starts[r]..starts[r] + params.block_sizes[r]];
            // A block whose propensities are all zero cannot receive edges.
            WeightedAliasIndex::new(slice.to_vec()).ok()
        })
        .collect();

    let mut edges = Vec::with_capacity(expected.ceil() as usize + 16);
    let mut pair_counts = vec![vec![0u64; b]; b];
    for r in 0..b {
        for s in r..b {
            let mean = if r == s {
                params.omega[r][r] / 2.0
            } else {
                params.omega[r][s]
            };
            let count = poisson(mean, rng);
            pair_counts[r][s] = count;
            if count == 0 {
                continue;
            }
            let (Some(sr), Some(ss)) = (&samplers[r], &samplers[s]) else {
                continue;
            };
            for _ in 0..count {
                let u = starts[r] + sr.sample(rng);
                let v = starts[s] + ss.sample(rng);
                edges.push((u as u32, v as u32));
            }
        }
    }
    Ok(RawDcsbmDraw {
        n: params.n,
        edges,
        pair_counts,
    })
}

/// Draws a simple graph from a DC-SBM (self-loops and repeated edges are
/// dropped after sampling).
pub fn sample_dcsbm(params: &DcsbmParams, rng: &mut Rng) -> Result<GraphStructure, StructureError> {
    Ok(sample_dcsbm_raw(params, rng)?.simplify())
}

/// Bijection from first-level node ids (concatenated in graph order) to
/// second-level node ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMapping {
    f: Vec<u32>,
}

impl LevelMapping {
    pub fn new(f: Vec<u32>) -> Result<Self, StructureError> {
        let n = f.len();
        let mut seen = vec![false; n];
        for &x in &f {
            let x = x as usize;
            if x >= n || seen[x] {
                return Err(StructureError::NotAPermutation(n));
            }
            seen[x] = true;
        }
        Ok(Self { f })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            f: (0..n as u32).collect(),
        }
    }

    /// Uniformly random permutation.
    pub fn random(n: usize, rng: &mut Rng) -> Self {
        let mut f: Vec<u32> = (0..n as u32).collect();
        f.shuffle(rng);
        Self { f }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.f
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Transfers every first-level edge `{u, v}` onto `{f(u), f(v)}` of the
/// second-level graph under a fixed mapping.
pub fn combine_levels_with(
    first_level: &[GraphStructure],
    second_level: &GraphStructure,
    mapping: &LevelMapping,
) -> Result<GraphStructure, StructureError> {
    let first: usize = first_level.iter().map(GraphStructure::n_nodes).sum();
    let second = second_level.n_nodes();
    if first != second {
        return Err(StructureError::SizeMismatch { first, second });
    }
    if mapping.len() != second {
        return Err(StructureError::NotAPermutation(second));
    }
    let f = mapping.as_slice();
    let mut edges: Vec<(u32, u32)> = second_level.edges().collect();
    let mut offset = 0usize;
    for g in first_level {
        edges.extend(
            g.edges()
                .map(|(u, v)| (f[offset + u as usize], f[offset + v as usize])),
        );
        offset += g.n_nodes();
    }
    Ok(GraphStructure::from_edges(second, edges))
}

/// [`combine_levels_with`] under a uniformly random bijection.
pub fn combine_levels(
    first_level: &[GraphStructure],
    second_level: &GraphStructure,
    rng: &mut Rng,
) -> Result<(GraphStructure, LevelMapping), StructureError> {
    let first: usize = first_level.iter().map(GraphStructure::n_nodes).sum();
    if first != second_level.n_nodes() {
        return Err(StructureError::SizeMismatch {
            first,
            second: second_level.n_nodes(),
        });
    }
    let mapping = LevelMapping::random(first, rng);
    let g = combine_levels_with(first_level, second_level, &mapping)?;
    Ok((g, mapping))
}

/// Initial degree distribution of nodes added by preferential attachment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DegreeSampler {
    /// `min(Zipf(exponent), cap)` over the positive integers.
    Zipf { exponent: f64, cap: usize },
    /// Every new node asks for exactly this many edges.
    Fixed { degree: usize },
}

impl DegreeSampler {
    fn sample(&self, rng: &mut Rng) -> usize {
        match *self {
            DegreeSampler::Zipf { exponent, cap } => {
                let d = Zeta::new(exponent).expect("exponent > 1").sample(rng);
                if d >= cap as f64 {
                    cap
                } else {
                    d as usize
                }
            }
            DegreeSampler::Fixed { degree } => degree,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaParams {
    pub n_new: usize,
    pub degree: DegreeSampler,
}

/// Grows `graph` by `params.n_new` nodes. Each new node draws a degree `d`
/// (at most the current node count) and links to `d` distinct existing nodes
/// chosen with probability proportional to `degree + 1`.
pub fn augment_preferential(
    graph: &GraphStructure,
    params: &BaParams,
    rng: &mut Rng,
) -> Result<GraphStructure, StructureError> {
    if params.n_new > 0 && graph.n_edges() == 0 {
        return Err(StructureError::NoSeedEdges);
    }
    Ok(grow_preferential(graph, params, rng))
}

fn grow_preferential(graph: &GraphStructure, params: &BaParams, rng: &mut Rng) -> GraphStructure {
    if params.n_new == 0 {
        return graph.clone();
    }
    let n0 = graph.n_nodes();
    let n = n0 + params.n_new;
    let mut edges: Vec<(u32, u32)> = graph.edges().collect();
    // Node v appears degree(v) + 1 times, so a uniform draw from the pool is
    // proportional to the smoothed degree.
    let mut pool: Vec<u32> = Vec::with_capacity(n0 + graph.n_arcs() + params.n_new * 4);
    for v in 0..n0 {
        pool.extend(std::iter::repeat_n(v as u32, graph.degree(v) + 1));
    }
    let mut targets: Vec<u32> = Vec::new();
    for new in n0..n {
        let d = params.degree.sample(rng).min(new);
        targets.clear();
        while targets.len() < d {
            let t = pool[rng.random_range(0..pool.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, new as u32));
            pool.push(t);
            pool.push(new as u32);
        }
        pool.push(new as u32);
    }
    GraphStructure::from_edges(n, edges)
}

/// Intermediate graphs of one [`generate_structure`] run.
#[derive(Debug, Clone)]
pub struct StructureTrace {
    pub first_level: Vec<GraphStructure>,
    pub second_level: GraphStructure,
    pub mapping: LevelMapping,
    /// Second-level graph with the transferred edges.
    pub combined: GraphStructure,
    pub graph: GraphStructure,
    /// Number of draws made (1 when the first draw respected the edge cap).
    pub attempts: usize,
    /// Whether edges were subsampled to meet the cap.
    pub subsampled: bool,
}

fn draw_once(prior: &PriorSample, rng: &mut Rng) -> Result<StructureTrace, StructureError> {
    let first_level = prior
        .first_level
        .iter()
        .map(|spec| {
            let params = spec.materialize(rng);
            sample_dcsbm(&params, rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let params = prior.second_level.materialize(rng);
    let second_level = sample_dcsbm(&params, rng)?;
    let (combined, mapping) = combine_levels(&first_level, &second_level, rng)?;
    let graph = grow_preferential(&combined, &prior.ba, rng);
    Ok(StructureTrace {
        first_level,
        second_level,
        mapping,
        combined,
        graph,
        attempts: 1,
        subsampled: false,
    })
}

/// Runs the full structure pipeline and keeps the intermediate graphs.
pub fn generate_structure_traced(prior: &PriorSample, rng: &mut Rng) -> Result<StructureTrace, StructureError> {
    if prior.n_total < 2 {
        return Err(StructureError::TooFewNodes(prior.n_total));
    }
    let cap = prior.max_edges as usize;
    let mut attempt = 0;
    loop {
        let mut stage = rng::child(rng);
        let mut trace = draw_once(prior, &mut stage)?;
        attempt += 1;
        trace.attempts = attempt;
        if trace.graph.n_edges() <= cap {
            return Ok(trace);
        }
        if attempt == EDGE_CAP_ATTEMPTS {
            let edges: Vec<(u32, u32)> = trace.graph.edges().collect();
            let mut keep = index::sample(&mut stage, edges.len(), cap).into_vec();
            keep.sort_unstable();
            trace.graph =
                GraphStructure::from_edges(trace.graph.n_nodes(), keep.into_iter().map(|i| edges[i]));
            trace.subsampled = true;
            return Ok(trace);
        }
    }
}

/// Generates the graph of one dataset: first-level DC-SBMs, level
/// combination, then preferential attachment, redrawn or subsampled to
/// respect `prior.max_edges`.
pub fn generate_structure(
    prior: &PriorSample,
    rng: &mut Rng,
) -> Result<(GraphStructure, LevelMapping), StructureError> {
    let trace = generate_structure_traced(prior, rng)?;
    Ok((trace.graph, trace.mapping))
}
