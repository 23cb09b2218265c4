#![allow(dead_code)]

use std::collections::BTreeSet;

use gpfn::graph::GraphStructure;
use gpfn::rng::{stream, StreamTag};
use gpfn::PriorConfig;
use rand::Rng as _;

/// Default prior with graphs small enough for exhaustive checks.
pub fn small_config() -> PriorConfig {
    PriorConfig::from_toml_str("node_count_range = { min = 40, max = 400 }\n").unwrap()
}

pub fn config(toml: &str) -> PriorConfig {
    PriorConfig::from_toml_str(toml).unwrap()
}

pub fn path(n: usize) -> GraphStructure {
    GraphStructure::from_edges(n, (1..n as u32).map(|v| (v - 1, v)))
}

pub fn cycle(n: usize) -> GraphStructure {
    GraphStructure::from_edges(n, (0..n as u32).map(|v| (v, (v + 1) % n as u32)))
}

pub fn complete(n: usize) -> GraphStructure {
    let n32 = n as u32;
    GraphStructure::from_edges(n, (0..n32).flat_map(|u| (u + 1..n32).map(move |v| (u, v))))
}

pub fn star(leaves: usize) -> GraphStructure {
    GraphStructure::from_edges(leaves + 1, (1..=leaves as u32).map(|v| (0, v)))
}

/// Each pair is an edge independently with probability `p`.
pub fn gnp(n: usize, p: f64, seed: u64) -> GraphStructure {
    let mut rng = stream(seed, StreamTag::Episode);
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    GraphStructure::from_edges(n, edges)
}

/// Undirected edges as `(min, max)` pairs, read straight from the CSR arrays.
pub fn edge_set(g: &GraphStructure) -> BTreeSet<(u32, u32)> {
    let mut set = BTreeSet::new();
    for v in 0..g.n_nodes() {
        for &u in g.neighbors(v) {
            set.insert((u.min(v as u32), u.max(v as u32)));
        }
    }
    set
}

/// Structural invariants checked without the library's own validator.
pub fn assert_simple_symmetric(g: &GraphStructure) {
    let off = g.offsets();
    assert_eq!(off.len(), g.n_nodes() + 1);
    assert_eq!(off[0], 0);
    assert!(off.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(*off.last().unwrap() as usize, g.indices().len());
    for v in 0..g.n_nodes() {
        let nb = g.neighbors(v);
        assert!(nb.windows(2).all(|w| w[0] < w[1]), "row {v} not strictly sorted");
        for &u in nb {
            assert_ne!(u as usize, v, "self-loop at {v}");
            assert!(g.neighbors(u as usize).binary_search(&(v as u32)).is_ok(), "arc {v}->{u} not mirrored");
        }
    }
}

pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
