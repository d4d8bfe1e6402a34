//! Partial eigendecomposition of a Hermitian operator given only through
//! matrix-vector products.
//!
//! Lanczos with full reorthogonalization. The Krylov basis is extended until
//! every Ritz pair with `|theta| > threshold` has converged and the largest
//! remaining Ritz value, widened by its residual bound, stays below the
//! threshold. An invariant subspace (exact breakdown) is handled by restarting
//! from a fresh vector orthogonal to the current basis, so repeated
//! eigenvalues are eventually all found.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{CMatrix, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Eigenpairs with `|lambda| > threshold`, in descending order of
/// `lambda`.
#[derive(Debug, Clone)]
pub struct PartialEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
    /// Krylov dimension used.
    pub krylov_dim: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Relative residual tolerance `||A x - theta x|| <= tol * max(1, |theta|max)`.
    pub tol: f64,
    /// Krylov vectors added between convergence checks.
    pub check_every: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            check_every: 8,
            seed: 0x5eed_1a9c,
        }
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let h = dot(q, w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= h * qi;
            }
        }
    }
}

/// All eigenpairs of the Hermitian operator `apply` (of dimension `dim`) whose
/// eigenvalue magnitude exceeds `threshold`. `want` is the expected number of
/// such pairs and only decides when convergence is first checked; `start` seeds the Krylov space (a
/// random vector is used when it is `None` or zero).
pub fn partial_eigh(
    dim: usize,
    mut apply: impl FnMut(&[C64], &mut [C64]),
    threshold: f64,
    want: usize,
    start: Option<&[C64]>,
    opts: LanczosOptions,
) -> PartialEigen {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        (0..dim)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    };

    let want = want.clamp(1, dim);
    let mut q: Vec<C64> = match start {
        Some(s) if s.len() == dim && norm(s) > 0.0 => s.to_vec(),
        _ => random_vec(&mut rng),
    };
    let nq = norm(&q);
    q.iter_mut().for_each(|z| *z /= nq);

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(dim.min(4 * want + 32));
    let mut alpha: Vec<f64> = Vec::new();
    // beta[j] couples basis vectors j and j+1; zero at a restart
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];
    let mut scale = 0.0f64;
    let mut next_check = (want + opts.check_every).min(dim);

    loop {
        let j = basis.len();
        apply(&q, &mut w);
        let a = dot(&q, &w).re;
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= a * qi;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, pi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= b * pi;
            }
        }
        basis.push(std::mem::take(&mut q));
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let mut b = norm(&w);
        scale = scale.max(a.abs()).max(b);

        let full = basis.len() == dim;
        let mut restarted = false;
        if !full && b <= 1e-12 * scale.max(1.0) {
            // invariant subspace: restart orthogonally to everything so far
            let mut fresh = random_vec(&mut rng);
            orthogonalize(&mut fresh, &basis);
            let nf = norm(&fresh);
            w = fresh.into_iter().map(|z| z / nf).collect();
            b = 0.0;
            q = w.clone();
            restarted = true;
        } else if !full {
            q = w.iter().map(|z| z / b).collect();
        }
        beta.push(b);

        // right after a restart the unexplored complement has not been
        // sampled yet, so convergence cannot be judged
        if (basis.len() < next_check || restarted) && !full {
            continue;
        }
        next_check = (basis.len() + opts.check_every).min(dim);

        let k = basis.len();
        let t = DMatrix::<f64>::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].abs().total_cmp(&eig.eigenvalues[x].abs()));
        let top = eig.eigenvalues[order[0]].abs().max(1.0);
        let last_beta = if full { 0.0 } else { beta[k - 1] };
        let residual = |i: usize| (last_beta * eig.eigenvectors[(k - 1, i)]).abs();
        let above = order.iter().take_while(|&&i| eig.eigenvalues[i].abs() > threshold).count();

        // every pair above the threshold has converged, and the largest Ritz
        // value below it cannot be hiding an eigenvalue above it
        let converged = full
            || (above < k
                && order[..above].iter().all(|&i| residual(i) <= opts.tol * top)
                && {
                    let i = order[above];
                    eig.eigenvalues[i].abs() + residual(i) < threshold || residual(i) <= opts.tol * top
                });
        if !converged {
            continue;
        }
        let mut sel: Vec<usize> = order[..above].to_vec();
        sel.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let mut vectors = CMatrix::zeros(dim, sel.len());
        for (col, &i) in sel.iter().enumerate() {
            for (r, qv) in basis.iter().enumerate() {
                let s = eig.eigenvectors[(r, i)];
                if s == 0.0 {
                    continue;
                }
                for (row, z) in qv.iter().enumerate() {
                    vectors[(row, col)] += z * s;
                }
            }
        }
        return PartialEigen {
            values: sel.iter().map(|&i| eig.eigenvalues[i]).collect(),
            vectors,
            krylov_dim: k,
        };
    }
}
