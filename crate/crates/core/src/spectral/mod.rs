//! Normalized graph Laplacians and Laplacian positional encodings.

mod lanczos;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng as _;
use thiserror::Error;

use crate::graph::GraphStructure;
use crate::rng::Rng;

pub use lanczos::{MAX_RESTARTS, RESIDUAL_TOL};

/// Blocks up to this size are diagonalized densely under [`EigenSolver::Auto`].
pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("eigensolver did not converge after {MAX_RESTARTS} restarts (residual {residual:.3e})")]
    Convergence { residual: f64 },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Symmetric sparse matrix in CSR form, diagonal stored explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSym {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&(j as u32)).map_or(0.0, |p| vals[p])
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&c, &v)| v * x[c as usize]).sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                d[(i, c as usize)] = v;
            }
        }
        d
    }

    /// Principal submatrix on `nodes` (ascending), reindexed to `0..len`.
    fn submatrix(&self, nodes: &[u32], local: &[u32]) -> SparseSym {
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        offsets.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &g in nodes {
            let (c, v) = self.row(g as usize);
            for (&c, &v) in c.iter().zip(v) {
                cols.push(local[c as usize]);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        SparseSym { offsets, cols, vals }
    }

    /// Connected blocks of the off-diagonal sparsity pattern, each as an
    /// ascending node list, ordered by smallest node.
    fn blocks(&self) -> Vec<Vec<u32>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut members = vec![s as u32];
            let mut head = 0;
            while head < members.len() {
                let v = members[head] as usize;
                head += 1;
                let (cols, vals) = self.row(v);
                for (&c, &val) in cols.iter().zip(vals) {
                    if val != 0.0 && !seen[c as usize] {
                        seen[c as usize] = true;
                        members.push(c);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

/// `L = I - D^{-1/2} A D^{-1/2}`, with `D^{-1/2} = 0` on isolated nodes (whose
/// rows are entirely zero).
pub fn normalized_laplacian(graph: &GraphStructure) -> SparseSym {
    let n = graph.n_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| match graph.degree(v) {
            0 => 0.0,
            d => 1.0 / (d as f64).sqrt(),
        })
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    let mut cols = Vec::with_capacity(graph.n_arcs() + n);
    let mut vals = Vec::with_capacity(graph.n_arcs() + n);
    for v in 0..n {
        let nbrs = graph.neighbors(v);
        let mut diag_done = nbrs.is_empty();
        for &u in nbrs {
            if !diag_done && u as usize > v {
                cols.push(v as u32);
                vals.push(1.0);
                diag_done = true;
            }
            cols.push(u);
            vals.push(-inv_sqrt[v] * inv_sqrt[u as usize]);
        }
        if !diag_done {
            cols.push(v as u32);
            vals.push(1.0);
        }
        offsets.push(cols.len());
    }
    SparseSym { offsets, cols, vals }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenSolver {
    /// Dense per block up to [`DENSE_LIMIT`] rows, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Eigenpairs in ascending eigenvalue order; `vectors[i]` pairs with
/// `values[i]` and has unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenPairs {
    /// Largest `‖A v - λ v‖∞` over the pairs.
    pub fn max_residual(&self, a: &SparseSym) -> f64 {
        let mut av = vec![0.0; a.n()];
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&l, v)| {
                a.matvec(v, &mut av);
                av.iter().zip(v).map(|(x, y)| (x - l * y).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

struct BlockPairs {
    nodes: Vec<u32>,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

fn dense_smallest(a: &SparseSym, m: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut order: Vec<usize> = (0..a.n()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    order[..m]
        .iter()
        .map(|&c| (eig.eigenvalues[c], eig.eigenvectors.column(c).iter().copied().collect()))
        .unzip()
}

/// Smallest `count(block_size)` eigenpairs of every diagonal block.
fn block_eigenpairs(
    a: &SparseSym,
    count: impl Fn(usize) -> usize,
    solver: EigenSolver,
) -> Result<Vec<BlockPairs>, SpectralError> {
    let n = a.n();
    let mut local = vec![0u32; n];
    let mut out = Vec::new();
    for nodes in a.blocks() {
        let size = nodes.len();
        let want = count(size).min(size);
        if want == 0 {
            continue;
        }
        if size == 1 {
            out.push(BlockPairs {
                values: vec![a.get(nodes[0] as usize, nodes[0] as usize)],
                vectors: vec![vec![1.0]],
                nodes,
            });
            continue;
        }
        for (i, &g) in nodes.iter().enumerate() {
            local[g as usize] = i as u32;
        }
        let sub = a.submatrix(&nodes, &local);
        let dense = match solver {
            EigenSolver::Auto => size <= DENSE_LIMIT,
            EigenSolver::Dense => true,
            EigenSolver::Lanczos => false,
        };
        let (values, vectors) = if dense {
            dense_smallest(&sub, want)
        } else {
            lanczos::smallest(&sub, want)?
        };
        out.push(BlockPairs { nodes, values, vectors });
    }
    Ok(out)
}

/// Merges per-block pairs into the `m` globally smallest, as full-length
/// vectors. Ties keep block order.
fn merge(n: usize, blocks: &[BlockPairs], m: usize) -> EigenPairs {
    let mut cands: Vec<(f64, usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, bp)| bp.values.iter().enumerate().map(move |(i, &v)| (v, b, i)))
        .collect();
    cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    cands.truncate(m);
    let mut values = Vec::with_capacity(cands.len());
    let mut vectors = Vec::with_capacity(cands.len());
    for (v, b, i) in cands {
        let mut full = vec![0.0; n];
        for (&g, &x) in blocks[b].nodes.iter().zip(&blocks[b].vectors[i]) {
            full[g as usize] = x;
        }
        values.push(v);
        vectors.push(full);
    }
    EigenPairs { values, vectors }
}

/// The `m` algebraically smallest eigenpairs of a symmetric matrix.
pub fn smallest_eigenpairs(a: &SparseSym, m: usize) -> Result<EigenPairs, SpectralError> {
    smallest_eigenpairs_with(a, m, EigenSolver::Auto)
}

pub fn smallest_eigenpairs_with(
    a: &SparseSym,
    m: usize,
    solver: EigenSolver,
) -> Result<EigenPairs, SpectralError> {
    if m > a.n() {
        return Err(SpectralError::InvalidArgument(format!(
            "requested {m} eigenpairs of a {n} x {n} matrix",
            n = a.n()
        )));
    }
    if m == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let blocks = block_eigenpairs(a, |_| m, solver)?;
    Ok(merge(a.n(), &blocks, m))
}

/// Laplacian positional encodings: `n_nodes x k`, row-major.
///
/// Column `j < n_informative()` holds the eigenvector of the `j`-th smallest
/// nonzero eigenvalue of the normalized Laplacian, with a random sign; the
/// remaining columns are zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct LapPeMatrix {
    pub n_nodes: usize,
    pub k: usize,
    pub values: Vec<f64>,
    /// Eigenvalues of the informative columns, non-decreasing.
    pub eigenvalues: Vec<f64>,
}

impl LapPeMatrix {
    pub fn n_informative(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_nodes).map(|v| self.values[v * self.k + j]).collect()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        &self.values[v * self.k..(v + 1) * self.k]
    }
}

/// Orients an eigenvector by a relabeling-invariant rule so the random sign
/// is the only source of sign variation.
fn canonical_sign(v: &[f64]) -> f64 {
    let cubes: f64 = v.iter().map(|x| x * x * x).sum();
    let scale: f64 = v.iter().map(|x| x.abs().powi(3)).sum();
    if cubes.abs() > 1e-9 * scale {
        return cubes.signum();
    }
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// LapPE with `k` columns. On a graph with `c` connected components the `c`
/// kernel eigenvectors are skipped and the next `k` eigenvectors are kept.
pub fn laplacian_pe(graph: &GraphStructure, k: usize, rng: &mut Rng) -> Result<LapPeMatrix, SpectralError> {
    laplacian_pe_with(graph, k, rng, EigenSolver::Auto)
}

pub fn laplacian_pe_with(
    graph: &GraphStructure,
    k: usize,
    rng: &mut Rng,
    solver: EigenSolver,
) -> Result<LapPeMatrix, SpectralError> {
    if k == 0 {
        return Err(SpectralError::InvalidArgument("LapPE needs k >= 1".into()));
    }
    let n = graph.n_nodes();
    let lap = normalized_laplacian(graph);
    // Each component contributes exactly one kernel vector: its smallest pair.
    let mut blocks = block_eigenpairs(&lap, |size| if size > 1 { k + 1 } else { 0 }, solver)?;
    for b in &mut blocks {
        b.values.remove(0);
        b.vectors.remove(0);
    }
    let pairs = merge(n, &blocks, k);
    let signs: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
    let mut values = vec![0.0; n * k];
    for (j, v) in pairs.vectors.iter().enumerate() {
        let s = signs[j] * canonical_sign(v);
        for (i, &x) in v.iter().enumerate() {
            values[i * k + j] = s * x;
        }
    }
    Ok(LapPeMatrix {
        n_nodes: n,
        k,
        values,
        eigenvalues: pairs.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamTag};

    fn path(n: usize) -> GraphStructure {
        GraphStructure::from_edges(n, (0..n as u32 - 1).map(|i| (i, i + 1)))
    }

    fn complete(n: usize) -> GraphStructure {
        GraphStructure::from_edges(
            n,
            (0..n as u32).flat_map(|u| (u + 1..n as u32).map(move |v| (u, v))),
        )
    }

    #[test]
    fn edgeless_laplacian_is_zero() {
        let l = normalized_laplacian(&GraphStructure::empty(4));
        assert!(l.to_dense().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_edge_laplacian() {
        let l = normalized_laplacian(&path(2));
        assert_eq!(l.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
    }

    #[test]
    fn laplacian_is_symmetric_with_unit_diagonal() {
        let g = GraphStructure::from_edges(6, [(0, 1), (1, 2), (2, 0), (2, 3), (4, 3)]);
        let d = normalized_laplacian(&g).to_dense();
        assert_eq!(d.clone(), d.transpose());
        for v in 0..5 {
            assert_eq!(d[(v, v)], 1.0);
        }
        assert_eq!(d[(5, 5)], 0.0);
        assert!((d[(2, 3)] + 1.0 / (3.0f64 * 2.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_edge_spectrum() {
        let l = normalized_laplacian(&path(2));
        for solver in [EigenSolver::Dense, EigenSolver::Lanczos] {
            let p = smallest_eigenpairs_with(&l, 2, solver).unwrap();
            assert!((p.values[0]).abs() < 1e-12 && (p.values[1] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_vector_is_sqrt_degree() {
        let g = GraphStructure::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)]);
        let l = normalized_laplacian(&g);
        let p = smallest_eigenpairs(&l, 1).unwrap();
        assert!(p.values[0].abs() < 1e-12);
        let d: Vec<f64> = g.degrees().iter().map(|&d| (d as f64).sqrt()).collect();
        let nrm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        let s = p.vectors[0][0].signum();
        for (x, y) in p.vectors[0].iter().zip(&d) {
            assert!((s * x - y / nrm).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_pairs_is_an_error() {
        let l = normalized_laplacian(&path(3));
        assert!(matches!(smallest_eigenpairs(&l, 4), Err(SpectralError::InvalidArgument(_))));
    }

    #[test]
    fn lanczos_recovers_repeated_eigenvalues() {
        // K_{1,6}: eigenvalue 1 with multiplicity 5
        let star = GraphStructure::from_edges(7, (1..7).map(|v| (0, v)));
        let l = normalized_laplacian(&star);
        let p = smallest_eigenpairs_with(&l, 7, EigenSolver::Lanczos).unwrap();
        let expect = [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 2.0];
        for (a, b) in p.values.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{:?}", p.values);
        }
        assert!(p.max_residual(&l) < 1e-10);
    }

    #[test]
    fn lappe_pads_when_few_eigenpairs() {
        // two components on 5 nodes: a triangle and an edge
        let g = GraphStructure::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4)]);
        let pe = laplacian_pe(&g, 10, &mut stream(1, StreamTag::LapPe)).unwrap();
        assert_eq!(pe.n_informative(), 3);
        for j in 3..10 {
            assert!(pe.column(j).iter().all(|&x| x == 0.0));
        }
        for j in 0..3 {
            let nrm: f64 = pe.column(j).iter().map(|x| x * x).sum();
            assert!((nrm - 1.0).abs() < 1e-9);
        }
        // triangle: 1.5 twice; edge: 2
        let expect = [1.5, 1.5, 2.0];
        for (a, b) in pe.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lappe_is_deterministic_and_rejects_zero_k() {
        let g = path(12);
        let a = laplacian_pe(&g, 4, &mut stream(3, StreamTag::LapPe)).unwrap();
        let b = laplacian_pe(&g, 4, &mut stream(3, StreamTag::LapPe)).unwrap();
        assert_eq!(a, b);
        assert!(laplacian_pe(&g, 0, &mut stream(3, StreamTag::LapPe)).is_err());
    }

    #[test]
    fn complete_graph_lappe() {
        let pe = laplacian_pe(&complete(4), 2, &mut stream(0, StreamTag::LapPe)).unwrap();
        for &l in &pe.eigenvalues {
            assert!((l - 4.0 / 3.0).abs() < 1e-9);
        }
    }
}
