//! Structural statistics of generated graphs.

use std::fmt;

use rand::Rng as _;
use rand::SeedableRng;

use crate::graph::GraphStructure;
use crate::rng::Rng;

/// Wedge budget used by [`compute_report`].
pub const DEFAULT_WEDGE_BUDGET: u64 = 1_000_000;

/// Nodes of at most this degree count as periphery.
pub const PERIPHERY_DEGREE: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStatsReport {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
    /// Bin 0 counts isolated nodes; bin `i >= 1` counts degrees in
    /// `[2^(i-1), 2^i)`.
    pub degree_histogram: Vec<u64>,
    pub global_density: f64,
    pub mean_local_clustering: f64,
    pub component_count: usize,
    pub largest_component_fraction: f64,
    pub degree_assortativity: f64,
    pub periphery_fraction: f64,
}

/// Sampled estimate of the mean local clustering coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusteringEstimate {
    pub mean: f64,
    pub std_error: f64,
}

fn wedges(graph: &GraphStructure) -> u64 {
    (0..graph.n_nodes())
        .map(|v| {
            let d = graph.degree(v) as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum()
}

/// Exact mean local clustering; nodes of degree < 2 contribute 0.
pub fn exact_clustering(graph: &GraphStructure) -> f64 {
    let n = graph.n_nodes();
    if n == 0 {
        return 0.0;
    }
    let mut mark = vec![false; n];
    let mut total = 0.0;
    for v in 0..n {
        let nbrs = graph.neighbors(v);
        let d = nbrs.len();
        if d < 2 {
            continue;
        }
        nbrs.iter().for_each(|&u| mark[u as usize] = true);
        let mut closed = 0u64;
        for &u in nbrs {
            closed += graph.neighbors(u as usize).iter().filter(|&&w| mark[w as usize]).count() as u64;
        }
        nbrs.iter().for_each(|&u| mark[u as usize] = false);
        // every triangle through v is seen from both of its other corners
        total += closed as f64 / (d * (d - 1)) as f64;
    }
    total / n as f64
}

/// Unbiased estimate of the mean local clustering from `samples` draws: a
/// uniform node, then a uniform pair of its neighbors.
pub fn estimate_clustering(graph: &GraphStructure, samples: u64, rng: &mut Rng) -> ClusteringEstimate {
    let n = graph.n_nodes();
    if n == 0 || samples == 0 {
        return ClusteringEstimate { mean: 0.0, std_error: 0.0 };
    }
    let mut hits = 0u64;
    for _ in 0..samples {
        let v = rng.random_range(0..n);
        let nbrs = graph.neighbors(v);
        if nbrs.len() < 2 {
            continue;
        }
        let i = rng.random_range(0..nbrs.len());
        let mut j = rng.random_range(0..nbrs.len() - 1);
        if j >= i {
            j += 1;
        }
        if graph.has_edge(nbrs[i] as usize, nbrs[j] as usize) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    ClusteringEstimate {
        mean: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
    }
}

/// Mean local clustering: exact when the graph has at most `sample_budget`
/// wedges, otherwise estimated from `sample_budget` samples with a fixed seed.
pub fn clustering_coefficient(graph: &GraphStructure, sample_budget: u64) -> f64 {
    if wedges(graph) <= sample_budget {
        exact_clustering(graph)
    } else {
        let mut rng = Rng::seed_from_u64(0x0c10_57e2);
        estimate_clustering(graph, sample_budget, &mut rng).mean
    }
}

/// Pearson correlation of endpoint degrees over all arcs; 0 when undefined.
pub fn degree_assortativity(graph: &GraphStructure) -> f64 {
    let arcs = graph.n_arcs() as f64;
    if arcs == 0.0 {
        return 0.0;
    }
    // Over arcs both endpoint sequences have the same marginal.
    let (mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for v in 0..graph.n_nodes() {
        let dv = graph.degree(v) as f64;
        for &u in graph.neighbors(v) {
            let du = graph.degree(u as usize) as f64;
            sx += dv;
            sxx += dv * dv;
            sxy += dv * du;
        }
    }
    let mean = sx / arcs;
    let var = sxx / arcs - mean * mean;
    if var <= 1e-12 * mean * mean.max(1.0) {
        return 0.0;
    }
    ((sxy / arcs - mean * mean) / var).clamp(-1.0, 1.0)
}

pub fn degree_histogram(graph: &GraphStructure) -> Vec<u64> {
    let mut hist: Vec<u64> = vec![0];
    for v in 0..graph.n_nodes() {
        let d = graph.degree(v);
        let bin = if d == 0 { 0 } else { (usize::BITS - d.leading_zeros()) as usize };
        if hist.len() <= bin {
            hist.resize(bin + 1, 0);
        }
        hist[bin] += 1;
    }
    hist
}

pub fn compute_report(graph: &GraphStructure) -> GraphStatsReport {
    let n = graph.n_nodes();
    let m = graph.n_edges();
    let degrees = graph.degrees();
    let (comp, component_count) = graph.components();
    let mut sizes = vec![0usize; component_count];
    comp.iter().for_each(|&c| sizes[c as usize] += 1);
    let nf = n.max(1) as f64;
    GraphStatsReport {
        n_nodes: n,
        n_edges: m,
        mean_degree: if n == 0 { 0.0 } else { 2.0 * m as f64 / n as f64 },
        max_degree: degrees.iter().copied().max().unwrap_or(0),
        degree_histogram: degree_histogram(graph),
        global_density: if n < 2 { 0.0 } else { 2.0 * m as f64 / (n as f64 * (n as f64 - 1.0)) },
        mean_local_clustering: clustering_coefficient(graph, DEFAULT_WEDGE_BUDGET),
        component_count,
        largest_component_fraction: sizes.iter().copied().max().unwrap_or(0) as f64 / nf,
        degree_assortativity: degree_assortativity(graph),
        periphery_fraction: degrees.iter().filter(|&&d| d <= PERIPHERY_DEGREE).count() as f64 / nf,
    }
}

/// One `key = value` line per field; floats always carry a decimal point.
impl fmt::Display for GraphStatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_nodes = {}", self.n_nodes)?;
        writeln!(f, "n_edges = {}", self.n_edges)?;
        writeln!(f, "mean_degree = {:?}", self.mean_degree)?;
        writeln!(f, "max_degree = {}", self.max_degree)?;
        let hist: Vec<String> = self.degree_histogram.iter().map(u64::to_string).collect();
        writeln!(f, "degree_histogram = [{}]", hist.join(", "))?;
        writeln!(f, "global_density = {:?}", self.global_density)?;
        writeln!(f, "mean_local_clustering = {:?}", self.mean_local_clustering)?;
        writeln!(f, "components = {}", self.component_count)?;
        writeln!(f, "largest_component_fraction = {:?}", self.largest_component_fraction)?;
        writeln!(f, "degree_assortativity = {:?}", self.degree_assortativity)?;
        writeln!(f, "periphery_fraction = {:?}", self.periphery_fraction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(n: u32) -> GraphStructure {
        GraphStructure::from_edges(n as usize, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    fn cycle(n: u32) -> GraphStructure {
        GraphStructure::from_edges(n as usize, (0..n).map(|i| (i, (i + 1) % n)))
    }

    #[test]
    fn k4_clustering_is_one() {
        assert_eq!(clustering_coefficient(&complete(4), 10), 1.0);
        assert_eq!(clustering_coefficient(&complete(4), 100), 1.0);
    }

    #[test]
    fn star_clustering_is_zero() {
        let star = GraphStructure::from_edges(10, (1..10).map(|v| (0, v)));
        assert_eq!(clustering_coefficient(&star, 100), 0.0);
        assert_eq!(clustering_coefficient(&star, 10), 0.0);
    }

    #[test]
    fn triangle_with_tail() {
        // node 2 has neighbors {0, 1, 3}: one closed pair of three
        let g = GraphStructure::from_edges(4, [(0, 1), (1, 2), (0, 2), (2, 3)]);
        let expect = (1.0 + 1.0 + 1.0 / 3.0) / 4.0;
        assert!((exact_clustering(&g) - expect).abs() < 1e-15);
    }

    #[test]
    fn edgeless_report() {
        let r = compute_report(&GraphStructure::empty(7));
        assert_eq!(r.mean_degree, 0.0);
        assert_eq!(r.component_count, 7);
        assert_eq!(r.periphery_fraction, 1.0);
        assert_eq!(r.degree_histogram, vec![7]);
        assert_eq!(r.degree_assortativity, 0.0);
    }

    #[test]
    fn cycle_report() {
        let r = compute_report(&cycle(9));
        assert_eq!(r.mean_degree, 2.0);
        assert_eq!(r.mean_local_clustering, 0.0);
        assert_eq!(r.component_count, 1);
        assert_eq!(r.largest_component_fraction, 1.0);
        assert_eq!(r.degree_assortativity, 0.0);
    }

    #[test]
    fn path_assortativity() {
        let p4 = GraphStructure::from_edges(4, [(0, 1), (1, 2), (2, 3)]);
        assert!((degree_assortativity(&p4) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn histogram_bins() {
        // degrees 3 (hub), 1, 1, 1, 0
        let g = GraphStructure::from_edges(5, [(0, 1), (0, 2), (0, 3)]);
        assert_eq!(degree_histogram(&g), vec![1, 3, 1]);
    }

    #[test]
    fn display_has_every_field() {
        let text = compute_report(&cycle(4)).to_string();
        assert_eq!(text.lines().count(), 11);
        assert!(text.contains("components = 1"));
    }
}
