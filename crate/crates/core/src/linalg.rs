//! Small dense linear-algebra helpers on top of nalgebra.

use crate::{CMatrix, C64};

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    /// Rebuilds `sum_k f(values[k]) v_k v_k^†`, skipping terms where `f`
    /// returns zero.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.vectors.nrows();
        let mut out = CMatrix::zeros(d, d);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            for j in 0..d {
                let vj = v[j].conj() * w;
                for i in 0..d {
                    out[(i, j)] += v[i] * vj;
                }
            }
        }
        out
    }
}

/// Full eigendecomposition of `m`, which is assumed Hermitian. Only the lower
/// triangle's information is trusted; the matrix is symmetrized first.
pub fn eigh(m: &CMatrix) -> HermitianEigen {
    let sym = hermitian_part(m);
    let eig = sym.symmetric_eigen();
    let d = m.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, descending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let sym = hermitian_part(m);
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// `(M + M^†) / 2`
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    let d = m.nrows();
    CMatrix::from_fn(d, d, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// Largest elementwise `|M - M^†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..d {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Frobenius norm `sqrt(tr(M^† M))`.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `tr(A^† B)`
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// In-place unnormalized Walsh-Hadamard transform:
/// `x[v] <- sum_j (-1)^{popcount(v & j)} x[j]`. The length must be a power of
/// two.
pub fn walsh_hadamard(x: &mut [C64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*a + *b, *a - *b);
                *a = s;
                *b = t;
            }
        }
        h *= 2;
    }
}
