//! Thick-restart Lanczos with full reorthogonalization.
//!
//! The basis `V` and the projected matrix `T = Vᵀ A V` are kept explicitly,
//! so the relation `A V = V T + β v_next e_lastᵀ` holds after every restart
//! and Ritz residuals are read off the last row of the Ritz vectors. When the
//! Krylov space becomes invariant a fresh random direction is injected, which
//! also recovers further copies of repeated eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SparseSym, SpectralError};

/// Restart cycles before giving up.
pub const MAX_RESTARTS: usize = 400;

/// Target 2-norm residual of every returned Ritz pair.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalizes `w` against `basis` twice; returns the accumulated
/// coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (i, v) in basis.iter().enumerate() {
            let c = dot(v, w);
            axpy(-c, v, w);
            h[i] += c;
        }
    }
    h
}

fn random_unit(n: usize, basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(basis, &mut w);
        let nrm = norm(&w);
        if nrm > 1e-8 {
            w.iter_mut().for_each(|x| *x /= nrm);
            return Some(w);
        }
    }
    None
}

/// The `m` algebraically smallest eigenpairs of `a`, ascending.
pub fn smallest(a: &SparseSym, m: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), SpectralError> {
    let n = a.n();
    assert!(m >= 1 && m <= n);
    let max_dim = n.min((3 * m + 40).max(80));
    let keep = (m + (max_dim - m) / 2).min(max_dim - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_205e ^ n as u64);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + 1);
    let mut t = DMatrix::<f64>::zeros(max_dim, max_dim);
    let mut next = random_unit(n, &[], &mut rng).expect("n >= 1");
    let mut beta = 0.0;
    let mut w = vec![0.0; n];
    let mut achieved = f64::INFINITY;

    for _restart in 0..MAX_RESTARTS {
        // Extend the basis to max_dim.
        while basis.len() < max_dim {
            let j = basis.len();
            basis.push(std::mem::take(&mut next));
            a.matvec(&basis[j], &mut w);
            let h = orthogonalize(&basis, &mut w);
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
            }
            beta = norm(&w);
            let scale = h.iter().map(|x| x.abs()).fold(1.0, f64::max);
            if beta <= 1e-12 * scale {
                beta = 0.0;
                if basis.len() == n {
                    break;
                }
                match random_unit(n, &basis, &mut rng) {
                    Some(v) => next = v,
                    None => break,
                }
            } else {
                next = w.iter().map(|x| x / beta).collect();
            }
        }

        let dim = basis.len();
        let proj = t.view((0, 0), (dim, dim)).into_owned();
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));

        let exhausted = dim == n || (beta == 0.0 && next.is_empty());
        let residual = |col: usize| (beta * eig.eigenvectors[(dim - 1, col)]).abs();
        achieved = order[..m].iter().map(|&c| residual(c)).fold(0.0, f64::max);
        let converged = exhausted || achieved <= RESIDUAL_TOL;

        let kept = if converged { m } else { keep.min(dim) };
        let ritz: Vec<Vec<f64>> = order[..kept]
            .iter()
            .map(|&c| {
                let mut y = vec![0.0; n];
                for (i, v) in basis.iter().enumerate() {
                    axpy(eig.eigenvectors[(i, c)], v, &mut y);
                }
                y
            })
            .collect();

        if converged {
            let mut values = Vec::with_capacity(m);
            let mut vectors = Vec::with_capacity(m);
            for (idx, mut y) in order[..m].iter().zip(ritz) {
                let nrm = norm(&y);
                y.iter_mut().for_each(|x| *x /= nrm);
                values.push(eig.eigenvalues[*idx]);
                vectors.push(y);
            }
            return Ok((values, vectors));
        }

        // Thick restart: keep the wanted end of the spectrum, continue from
        // the current residual direction.
        t.fill(0.0);
        for (i, &c) in order[..kept].iter().enumerate() {
            t[(i, i)] = eig.eigenvalues[c];
        }
        basis = ritz;
        if beta == 0.0 {
            match random_unit(n, &basis, &mut rng) {
                Some(v) => next = v,
                None => return Err(SpectralError::Convergence { residual: achieved }),
            }
        }
        // `next` is orthogonal to the old basis and therefore to the Ritz vectors.
    }
    Err(SpectralError::Convergence { residual: achieved })
}
