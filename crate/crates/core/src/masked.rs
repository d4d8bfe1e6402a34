//! Linear combinations of Pauli observables, grouped by X-mask.
//!
//! All observables sharing an X-mask `u` have their nonzeros at the same
//! positions `(j ^ u, j)`. For a fixed `u`, the map between the Z-mask
//! coefficients and the values on those positions is a Walsh-Hadamard
//! transform:
//!
//! ```text
//! (sum_v y_v w(u,v))[j ^ u, j] = sum_v y_v i^{|u & v|} (-1)^{|v & j|}
//! tr(M w(u,v))                  = i^{|u & v|} sum_j M[j, j ^ u] (-1)^{|v & j|}
//! ```
//!
//! so synthesis and analysis cost `O(d log d)` per distinct mask instead of
//! `O(d)` per observable.

use std::collections::BTreeMap;

use crate::linalg::walsh_hadamard;
use crate::pauli::PauliLabel;
use crate::{CMatrix, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// A matrix supported on the union of the permutation patterns of a set of
/// X-masks. Block `u` stores `M[j ^ u, j]` for `j = 0..d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedOperator {
    dim: usize,
    blocks: Vec<(u64, Vec<C64>)>,
}

impl MaskedOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored matrix elements, `(#masks) * d`.
    pub fn nnz(&self) -> usize {
        self.blocks.len() * self.dim
    }

    pub fn masks(&self) -> impl Iterator<Item = u64> + '_ {
        self.blocks.iter().map(|(u, _)| *u)
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d, d);
        for (u, vals) in &self.blocks {
            for (j, &x) in vals.iter().enumerate() {
                out[(j ^ *u as usize, j)] += x;
            }
        }
        out
    }

    /// `y = M x`
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|z| *z = ZERO);
        for (u, vals) in &self.blocks {
            let u = *u as usize;
            for (j, (&a, &xj)) in vals.iter().zip(x).enumerate() {
                y[j ^ u] += a * xj;
            }
        }
    }
}

/// Labels grouped by X-mask, remembering each label's position in the
/// original list. Duplicate labels are kept as separate entries.
#[derive(Debug, Clone)]
pub struct MaskGroups {
    n: u32,
    len: usize,
    groups: Vec<(u64, Vec<(usize, u64)>)>,
}

impl MaskGroups {
    pub fn new(n: u32, labels: &[PauliLabel]) -> Self {
        let mut map: BTreeMap<u64, Vec<(usize, u64)>> = BTreeMap::new();
        for (idx, p) in labels.iter().enumerate() {
            debug_assert_eq!(p.qubits(), n);
            map.entry(p.x_mask()).or_default().push((idx, p.z_mask()));
        }
        Self {
            n,
            len: labels.len(),
            groups: map.into_iter().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mask_count(&self) -> usize {
        self.groups.len()
    }

    /// `sum_c coeffs[c] w(label_c)`
    pub fn synthesize(&self, coeffs: &[C64]) -> MaskedOperator {
        assert_eq!(coeffs.len(), self.len);
        let d = self.dim();
        let mut blocks = Vec::with_capacity(self.groups.len());
        let mut buf = vec![ZERO; d];
        for (u, members) in &self.groups {
            buf.iter_mut().for_each(|z| *z = ZERO);
            for &(idx, v) in members {
                buf[v as usize] += coeffs[idx] * i_pow((u & v).count_ones());
            }
            walsh_hadamard(&mut buf);
            blocks.push((*u, buf.clone()));
        }
        MaskedOperator { dim: d, blocks }
    }

    /// Real coefficients, the common case for Hermitian combinations.
    pub fn synthesize_real(&self, coeffs: &[f64]) -> MaskedOperator {
        let c: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.synthesize(&c)
    }

    /// `tr(M w(label_c))` for every label, where `diag_of(u, j)` returns
    /// `M[j, j ^ u]`.
    pub fn analyze_with(&self, mut diag_of: impl FnMut(u64, &mut [C64])) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![ZERO; self.len];
        let mut buf = vec![ZERO; d];
        for (u, members) in &self.groups {
            diag_of(*u, &mut buf);
            walsh_hadamard(&mut buf);
            for &(idx, v) in members {
                out[idx] = i_pow((u & v).count_ones()) * buf[v as usize];
            }
        }
        out
    }

    /// `tr(M w(label_c))` for a dense `M`.
    pub fn analyze_dense(&self, m: &CMatrix) -> Vec<C64> {
        self.analyze_with(|u, buf| {
            let u = u as usize;
            for (j, z) in buf.iter_mut().enumerate() {
                *z = m[(j, j ^ u)];
            }
        })
    }

    /// `tr(M w(label_c))` for `M = sum_k weights[k] v_k v_k^†`, where `v_k` is
    /// column `k` of `vectors`.
    pub fn analyze_factored(&self, vectors: &CMatrix, weights: &[f64]) -> Vec<C64> {
        let d = self.dim();
        self.analyze_with(|u, buf| {
            let u = u as usize;
            buf.iter_mut().for_each(|z| *z = ZERO);
            for (k, &w) in weights.iter().enumerate() {
                let v = vectors.column(k);
                for j in 0..d {
                    buf[j] += v[j] * v[j ^ u].conj() * w;
                }
            }
        })
    }
}
