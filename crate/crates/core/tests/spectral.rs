mod common;

use common::*;
use gpfn::graph::GraphStructure;
use gpfn::rng::{stream, substream, StreamTag};
use gpfn::spectral::*;
use gpfn::structure::{planted_omega, sample_dcsbm, DcsbmSpec};
use nalgebra::{DMatrix, SymmetricEigen};

/// Dense normalized Laplacian built from the edge list.
fn dense_laplacian(g: &GraphStructure) -> DMatrix<f64> {
    let n = g.n_nodes();
    let d: Vec<f64> = (0..n).map(|v| g.degree(v) as f64).collect();
    let mut l = DMatrix::zeros(n, n);
    for v in 0..n {
        if d[v] > 0.0 {
            l[(v, v)] = 1.0;
        }
    }
    for (u, v) in edge_set(g) {
        let w = -1.0 / (d[u as usize] * d[v as usize]).sqrt();
        l[(u as usize, v as usize)] = w;
        l[(v as usize, u as usize)] = w;
    }
    l
}

fn oracle_spectrum(g: &GraphStructure) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(dense_laplacian(g)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn dcsbm_graph(n: usize, mean_degree: f64, seed: u64) -> GraphStructure {
    let sizes = vec![n / 4, n / 4, n - n / 2];
    let spec = DcsbmSpec {
        omega: planted_omega(&sizes, mean_degree, 0.8),
        block_sizes: sizes,
        degree_exponent: 2.5,
    };
    let mut rng = stream(seed, StreamTag::Structure);
    sample_dcsbm(&spec.materialize(&mut rng), &mut rng).unwrap()
}

#[test]
fn laplacian_matches_dense_construction() {
    for seed in 0..5 {
        let g = dcsbm_graph(80, 4.0, seed);
        let diff = normalized_laplacian(&g).to_dense() - dense_laplacian(&g);
        assert!(diff.amax() <= 1e-15);
    }
}

#[test]
fn path3_spectrum() {
    let lap = normalized_laplacian(&path(3));
    for solver in [EigenSolver::Dense, EigenSolver::Lanczos] {
        let pairs = smallest_eigenpairs_with(&lap, 3, solver).unwrap();
        for (got, want) in pairs.values.iter().zip([0.0, 1.0, 2.0]) {
            assert!((got - want).abs() <= 1e-9, "{solver:?}: {:?}", pairs.values);
        }
    }
}

#[test]
fn single_edge_spectrum() {
    let pairs = smallest_eigenpairs(&normalized_laplacian(&path(2)), 2).unwrap();
    assert!(pairs.values[0].abs() <= 1e-12 && (pairs.values[1] - 2.0).abs() <= 1e-12);
}

#[test]
fn complete4_positional_encodings() {
    let g = complete(4);
    let pe = laplacian_pe(&g, 2, &mut stream(0, StreamTag::LapPe)).unwrap();
    assert_eq!(pe.n_informative(), 2);
    for &ev in &pe.eigenvalues {
        assert!((ev - 4.0 / 3.0).abs() <= 1e-9, "{ev}");
    }
}

#[test]
fn kernel_vector_is_sqrt_degree() {
    let g = gnp(40, 0.3, 2);
    assert_eq!(g.components().1, 1);
    let pairs = smallest_eigenpairs(&normalized_laplacian(&g), 1).unwrap();
    assert!(pairs.values[0].abs() < 1e-10);
    let v = &pairs.vectors[0];
    let norm: f64 = (0..40).map(|i| g.degree(i) as f64).sum::<f64>().sqrt();
    let sign = v[0].signum();
    for (i, x) in v.iter().enumerate() {
        assert!((sign * x - (g.degree(i) as f64).sqrt() / norm).abs() < 1e-9);
    }
}

#[test]
fn dense_and_lanczos_agree_on_dcsbm() {
    let g = dcsbm_graph(500, 8.0, 3);
    let lap = normalized_laplacian(&g);
    let dense = smallest_eigenpairs_with(&lap, 16, EigenSolver::Dense).unwrap();
    let lanczos = smallest_eigenpairs_with(&lap, 16, EigenSolver::Lanczos).unwrap();
    let oracle = oracle_spectrum(&g);
    for i in 0..16 {
        assert!((dense.values[i] - lanczos.values[i]).abs() <= 1e-5, "pair {i}");
        assert!((dense.values[i] - oracle[i]).abs() <= 1e-9, "pair {i}");
    }
    assert!(lanczos.max_residual(&lap) <= 1e-6);
}

#[test]
fn small_graphs_match_oracle() {
    for seed in 0..30u64 {
        let n = 5 + (seed as usize * 7) % 60;
        let g = gnp(n, 0.15, seed);
        let lap = normalized_laplacian(&g);
        let oracle = oracle_spectrum(&g);
        let m = n.min(10);
        for solver in [EigenSolver::Dense, EigenSolver::Lanczos] {
            let pairs = smallest_eigenpairs_with(&lap, m, solver).unwrap();
            for i in 0..m {
                assert!((pairs.values[i] - oracle[i]).abs() <= 1e-8, "n={n} {solver:?} pair {i}");
            }
        }
    }
}

fn check_pairs(lap: &SparseSym, pairs: &EigenPairs) {
    assert!(pairs.max_residual(lap) <= 1e-6);
    assert!(pairs.values.windows(2).all(|w| w[0] <= w[1]));
    assert!(pairs.values.iter().all(|&v| (-1e-9..=2.0 + 1e-9).contains(&v)));
    for (i, a) in pairs.vectors.iter().enumerate() {
        for (j, b) in pairs.vectors.iter().enumerate().skip(i) {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-8, "({i}, {j}) {dot}");
        }
    }
}

#[test]
fn residuals_bounds_and_orthonormality() {
    for seed in 0..8 {
        let g = dcsbm_graph(300 + 400 * seed as usize, 6.0, seed);
        let lap = normalized_laplacian(&g);
        check_pairs(&lap, &smallest_eigenpairs(&lap, 12).unwrap());
    }
    // large connected component goes through the iterative solver
    let g = gnp(1500, 0.004, 77);
    let lap = normalized_laplacian(&g);
    check_pairs(&lap, &smallest_eigenpairs(&lap, 20).unwrap());
}

#[test]
fn too_many_pairs_is_an_error() {
    let lap = normalized_laplacian(&path(3));
    assert!(matches!(smallest_eigenpairs(&lap, 4), Err(SpectralError::InvalidArgument(_))));
}

#[test]
fn positional_encoding_columns_are_unit_eigenvectors() {
    let g = dcsbm_graph(1200, 5.0, 9);
    let lap = normalized_laplacian(&g);
    let k = 12;
    let pe = laplacian_pe(&g, k, &mut stream(9, StreamTag::LapPe)).unwrap();
    assert_eq!(pe.n_informative(), k);
    for j in 0..k {
        let v = pe.column(j);
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-6);
        let mut lv = vec![0.0; v.len()];
        lap.matvec(&v, &mut lv);
        let ev = pe.eigenvalues[j];
        assert!(ev > 1e-9);
        let res = lv.iter().zip(&v).map(|(a, b)| (a - ev * b).abs()).fold(0.0, f64::max);
        assert!(res <= 1e-6);
    }
}

#[test]
fn two_components_pad_missing_columns() {
    let g = GraphStructure::from_edges(5, [(0, 1), (2, 3), (3, 4)]);
    let pe = laplacian_pe(&g, 10, &mut stream(1, StreamTag::LapPe)).unwrap();
    assert_eq!(pe.n_informative(), 3);
    for j in 3..10 {
        assert!(pe.column(j).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn positional_encodings_are_deterministic() {
    let g = dcsbm_graph(700, 6.0, 4);
    let a = laplacian_pe(&g, 8, &mut stream(5, StreamTag::LapPe)).unwrap();
    let b = laplacian_pe(&g, 8, &mut stream(5, StreamTag::LapPe)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn positional_encodings_follow_relabeling() {
    let mut checked = 0;
    for seed in 0..20u64 {
        let g = gnp(30, 0.2, 500 + seed);
        if g.components().1 != 1 {
            continue;
        }
        let spectrum = oracle_spectrum(&g);
        if spectrum.windows(2).any(|w| w[1] - w[0] < 1e-6) {
            continue;
        }
        let mut perm: Vec<u32> = (0..30).collect();
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut substream(seed, StreamTag::Episode, 1));
        let h = g.relabel(&perm);
        let k = 6;
        let a = laplacian_pe(&g, k, &mut stream(seed, StreamTag::LapPe)).unwrap();
        let b = laplacian_pe(&h, k, &mut stream(seed, StreamTag::LapPe)).unwrap();
        for v in 0..30 {
            for j in 0..k {
                let (x, y) = (a.row(v)[j], b.row(perm[v] as usize)[j]);
                assert!((x - y).abs() < 1e-8, "node {v} column {j}: {x} vs {y}");
            }
        }
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} multiplicity-free graphs");
}

#[test]
fn zero_k_is_rejected() {
    assert!(laplacian_pe(&path(3), 0, &mut stream(0, StreamTag::LapPe)).is_err());
}
