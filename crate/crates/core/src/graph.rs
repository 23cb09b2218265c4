//! Simple undirected graphs in compressed sparse row form.

use std::fmt;

use thiserror::Error;

/// A violated [`GraphStructure`] invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("offsets must have length n_nodes + 1 = {expected}, got {got}")]
    OffsetsLength { expected: usize, got: usize },
    #[error("offsets must start at 0 and end at {arcs} (the number of stored arcs)")]
    OffsetsBounds { arcs: usize },
    #[error("offsets decrease at node {node}")]
    OffsetsNotMonotone { node: usize },
    #[error("neighbor {neighbor} of node {node} is out of range")]
    NeighborOutOfRange { node: usize, neighbor: u32 },
    #[error("node {node} has a self-loop")]
    SelfLoop { node: usize },
    #[error("neighbors of node {node} are not strictly ascending")]
    NotSorted { node: usize },
    #[error("arc ({from}, {to}) has no reverse arc")]
    Asymmetric { from: usize, to: u32 },
    #[error("graph has {0} nodes; node ids must fit in u32")]
    TooManyNodes(usize),
}

/// Simple undirected graph stored as a symmetric CSR adjacency.
///
/// Every undirected edge `{u, v}` is stored as the two arcs `u -> v` and
/// `v -> u`; neighbor lists are strictly ascending.
#[derive(Clone, PartialEq, Eq)]
pub struct GraphStructure {
    offsets: Vec<u64>,
    indices: Vec<u32>,
}

impl fmt::Debug for GraphStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphStructure")
            .field("n_nodes", &self.n_nodes())
            .field("n_edges", &self.n_edges())
            .finish()
    }
}

impl GraphStructure {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            indices: Vec::new(),
        }
    }

    /// Builds a simple graph from undirected edges, dropping self-loops and
    /// duplicates. Endpoints must be `< n`.
    pub fn from_edges<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        let mut keys: Vec<u64> = edges
            .into_iter()
            .filter(|&(u, v)| u != v)
            .map(|(u, v)| {
                debug_assert!((u as usize) < n && (v as usize) < n);
                let (a, b) = if u < v { (u, v) } else { (v, u) };
                ((a as u64) << 32) | b as u64
            })
            .collect();
        keys.sort_unstable();
        keys.dedup();
        Self::from_sorted_keys(n, &keys)
    }

    /// `keys` are `(min << 32) | max`, strictly ascending.
    fn from_sorted_keys(n: usize, keys: &[u64]) -> Self {
        let mut degree = vec![0u64; n];
        for &k in keys {
            degree[(k >> 32) as usize] += 1;
            degree[(k & 0xffff_ffff) as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        let mut acc = 0u64;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor: Vec<u64> = offsets[..n].to_vec();
        let mut indices = vec![0u32; acc as usize];
        // Pass 1 fills each row's smaller neighbors, pass 2 its larger ones;
        // both arrive in ascending order because keys are sorted.
        for &k in keys {
            let (a, b) = ((k >> 32) as usize, (k & 0xffff_ffff) as u32);
            let slot = &mut cursor[b as usize];
            indices[*slot as usize] = a as u32;
            *slot += 1;
        }
        for &k in keys {
            let (a, b) = ((k >> 32) as usize, (k & 0xffff_ffff) as u32);
            let slot = &mut cursor[a];
            indices[*slot as usize] = b;
            *slot += 1;
        }
        Self { offsets, indices }
    }

    /// Wraps raw CSR arrays after checking every invariant.
    pub fn from_csr(offsets: Vec<u64>, indices: Vec<u32>) -> Result<Self, GraphError> {
        let g = Self { offsets, indices };
        g.validate()?;
        Ok(g)
    }

    /// Checks offsets monotonicity, sorted duplicate-free rows, no self-loops
    /// and arc symmetry.
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.offsets.is_empty() {
            return Err(GraphError::OffsetsLength { expected: 1, got: 0 });
        }
        let n = self.offsets.len() - 1;
        if n > u32::MAX as usize {
            return Err(GraphError::TooManyNodes(n));
        }
        let arcs = self.indices.len();
        if self.offsets[0] != 0 || self.offsets[n] != arcs as u64 {
            return Err(GraphError::OffsetsBounds { arcs });
        }
        for v in 0..n {
            if self.offsets[v] > self.offsets[v + 1] {
                return Err(GraphError::OffsetsNotMonotone { node: v });
            }
        }
        for v in 0..n {
            let row = self.neighbors(v);
            for (i, &u) in row.iter().enumerate() {
                if u as usize >= n {
                    return Err(GraphError::NeighborOutOfRange { node: v, neighbor: u });
                }
                if u as usize == v {
                    return Err(GraphError::SelfLoop { node: v });
                }
                if i > 0 && row[i - 1] >= u {
                    return Err(GraphError::NotSorted { node: v });
                }
            }
        }
        for v in 0..n {
            for &u in self.neighbors(v) {
                if !self.has_edge(u as usize, v) {
                    return Err(GraphError::Asymmetric { from: v, to: u });
                }
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of stored directed arcs, `2 * n_edges()`.
    pub fn n_arcs(&self) -> usize {
        self.indices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.indices.len() / 2
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.indices[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes()).map(|v| self.degree(v)).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n_nodes() && v < self.n_nodes() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| v as usize > u)
                .map(move |&v| (u as u32, v))
        })
    }

    /// Same graph with node `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[u32]) -> Self {
        assert_eq!(perm.len(), self.n_nodes());
        Self::from_edges(
            self.n_nodes(),
            self.edges().map(|(u, v)| (perm[u as usize], perm[v as usize])),
        )
    }

    /// Connected component id per node (ids dense, in order of first node)
    /// and the component count.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let n = self.n_nodes();
        let mut comp = vec![u32::MAX; n];
        let mut count = 0usize;
        let mut queue = Vec::new();
        for s in 0..n {
            if comp[s] != u32::MAX {
                continue;
            }
            comp[s] = count as u32;
            queue.clear();
            queue.push(s as u32);
            let mut head = 0;
            while head < queue.len() {
                let v = queue[head] as usize;
                head += 1;
                for &u in self.neighbors(v) {
                    if comp[u as usize] == u32::MAX {
                        comp[u as usize] = count as u32;
                        queue.push(u);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }
}
