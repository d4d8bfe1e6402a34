//! n-qubit Pauli observables in the symplectic bit-mask representation.
//!
//! A label `(u, v)` denotes `w(u,v) = ⊗_k i^{u_k v_k} X^{u_k} Z^{v_k}`, with
//! bit `k` of each mask acting on qubit `k`, and qubit 0 the least significant
//! bit of a computational-basis index. Acting on a basis vector,
//!
//! ```text
//! w(u,v) |j> = i^{|u & v|} (-1)^{|v & j|} |j ^ u>
//! ```
//!
//! so every observable is a permutation matrix (fixed by `u` alone) times a
//! diagonal of fourth roots of unity. Everything here uses that form and never
//! builds a dense matrix except in [`dense_matrix`].

use crate::error::{invalid, Result, TomoError};
use crate::{CMatrix, C64};

/// Largest qubit count accepted by [`PauliLabel`]. The flat index needs `2n`
/// bits.
pub const MAX_QUBITS: u32 = 31;

/// Largest qubit count for which [`dense_matrix`] will materialize a matrix.
pub const DENSE_QUBIT_LIMIT: u32 = 14;

const QUARTER_TURNS: [C64; 4] = [
    C64 { re: 1.0, im: 0.0 },
    C64 { re: 0.0, im: 1.0 },
    C64 { re: -1.0, im: 0.0 },
    C64 { re: 0.0, im: -1.0 },
];

/// An n-qubit Pauli observable `w(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliLabel {
    n: u32,
    u: u64,
    v: u64,
}

impl PauliLabel {
    pub fn new(n: u32, u: u64, v: u64) -> Result<Self> {
        check_qubits(n)?;
        let d = 1u64 << n;
        if u >= d || v >= d {
            return invalid(format!("masks ({u:#x}, {v:#x}) do not fit in {n} qubits"));
        }
        Ok(Self { n, u, v })
    }

    pub fn identity(n: u32) -> Result<Self> {
        Self::new(n, 0, 0)
    }

    /// Label with flat index `a = u * 2^n + v`.
    pub fn from_index(a: u64, n: u32) -> Result<Self> {
        check_qubits(n)?;
        let d = 1u64 << n;
        if a >= d * d {
            return invalid(format!("Pauli index {a} out of range for {n} qubits"));
        }
        Ok(Self { n, u: a >> n, v: a & (d - 1) })
    }

    /// Flat index `u * 2^n + v`; inverse of [`PauliLabel::from_index`].
    pub fn index(&self) -> u64 {
        (self.u << self.n) | self.v
    }

    pub fn qubits(&self) -> u32 {
        self.n
    }

    /// Hilbert-space dimension `2^n`.
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// X-part mask.
    pub fn x_mask(&self) -> u64 {
        self.u
    }

    /// Z-part mask.
    pub fn z_mask(&self) -> u64 {
        self.v
    }

    pub fn is_identity(&self) -> bool {
        self.u == 0 && self.v == 0
    }

    pub fn action(&self) -> SparsePauliAction {
        SparsePauliAction {
            n: self.n,
            u: self.u,
            v: self.v,
            base: (self.u & self.v).count_ones() % 4,
        }
    }
}

/// Number of distinct labels, `4^n`.
pub fn label_count(n: u32) -> u64 {
    1u64 << (2 * n)
}

fn check_qubits(n: u32) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return invalid(format!("qubit count must be in 1..={MAX_QUBITS}, got {n}"));
    }
    Ok(())
}

/// The `d` nonzero entries of `w(u, v)`: column `j` holds `phase(j)` at row
/// `j ^ u`.
#[derive(Debug, Clone, Copy)]
pub struct SparsePauliAction {
    n: u32,
    u: u64,
    v: u64,
    base: u32,
}

impl SparsePauliAction {
    pub fn row_of(&self, col: usize) -> usize {
        col ^ self.u as usize
    }

    /// `i^{|u & v|} (-1)^{|v & j|}`
    pub fn phase(&self, col: usize) -> C64 {
        let sign = 2 * ((self.v & col as u64).count_ones() & 1);
        QUARTER_TURNS[((self.base + sign) % 4) as usize]
    }

    /// `(row, col, value)` triples, one per column.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..1usize << self.n).map(move |j| (self.row_of(j), j, self.phase(j)))
    }
}

/// Dense `2^n x 2^n` matrix of `w(p)` built as a Kronecker product of the
/// single-qubit factors.
pub fn dense_matrix(p: &PauliLabel) -> Result<CMatrix> {
    if p.n > DENSE_QUBIT_LIMIT {
        return Err(TomoError::Capacity {
            what: "dense Pauli matrix",
            n: p.n,
            limit: DENSE_QUBIT_LIMIT,
        });
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut out = CMatrix::from_element(1, 1, one);
    for k in (0..p.n).rev() {
        let (xk, zk) = ((p.u >> k) & 1 == 1, (p.v >> k) & 1 == 1);
        let factor = match (xk, zk) {
            (false, false) => CMatrix::from_row_slice(2, 2, &[one, zero, zero, one]),
            (true, false) => CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]),
            (false, true) => CMatrix::from_row_slice(2, 2, &[one, zero, zero, -one]),
            // i * X * Z
            (true, true) => CMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]),
        };
        out = out.kronecker(&factor);
    }
    Ok(out)
}

/// `tr(rho * w(p))`, evaluated with `d` lookups through the sparse action.
/// The imaginary part vanishes for Hermitian `rho` and is dropped.
pub fn expectation(rho: &CMatrix, p: &PauliLabel) -> Result<f64> {
    check_square(rho, p.dim())?;
    Ok(trace_product(rho, p).re)
}

/// Complex `tr(m * w(p))` for an arbitrary square matrix.
pub fn trace_product(m: &CMatrix, p: &PauliLabel) -> C64 {
    let act = p.action();
    // w[j ^ u, j] = phase(j), so tr(M w) = sum_j M[j, j ^ u] phase(j)
    (0..p.dim())
        .map(|j| m[(j, act.row_of(j))] * act.phase(j))
        .sum()
}

/// `w(p) x`
pub fn apply_pauli(p: &PauliLabel, x: &[C64]) -> Result<Vec<C64>> {
    if x.len() != p.dim() {
        return Err(TomoError::DimensionMismatch {
            expected: p.dim(),
            got: x.len(),
        });
    }
    let act = p.action();
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for (j, &xj) in x.iter().enumerate() {
        out[act.row_of(j)] = act.phase(j) * xj;
    }
    Ok(out)
}

/// `m += coeff * w(p)`
pub fn add_scaled(m: &mut CMatrix, p: &PauliLabel, coeff: C64) {
    for (r, c, ph) in p.action().entries() {
        m[(r, c)] += coeff * ph;
    }
}

pub(crate) fn check_square(m: &CMatrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(TomoError::DimensionMismatch {
            expected: d,
            got: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let g = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let m = &g * g.adjoint();
        let tr = linalg::trace(&m);
        m / tr
    }

    #[test]
    fn index_round_trip_and_examples() {
        let id = PauliLabel::from_index(0, 1).unwrap();
        assert!(id.is_identity());
        let y = PauliLabel::from_index(3, 1).unwrap();
        assert_eq!((y.x_mask(), y.z_mask()), (1, 1));
        for a in 0..16 {
            assert_eq!(PauliLabel::from_index(a, 2).unwrap().index(), a);
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(PauliLabel::from_index(16, 2), Err(TomoError::InvalidInput(_))));
        assert!(PauliLabel::new(2, 4, 0).is_err());
        assert!(PauliLabel::new(0, 0, 0).is_err());
        assert!(PauliLabel::new(32, 0, 0).is_err());
    }

    #[test]
    fn single_qubit_matrices() {
        let x = dense_matrix(&PauliLabel::new(1, 1, 0).unwrap()).unwrap();
        assert_eq!(x, CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]));
        let y = dense_matrix(&PauliLabel::new(1, 1, 1).unwrap()).unwrap();
        assert_eq!(y, CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]));
        let z = dense_matrix(&PauliLabel::new(1, 0, 1).unwrap()).unwrap();
        assert_eq!(z, CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]));
    }

    #[test]
    fn dense_guard() {
        let p = PauliLabel::new(15, 0, 0).unwrap();
        assert!(matches!(dense_matrix(&p), Err(TomoError::Capacity { .. })));
    }

    #[test]
    fn sparse_action_matches_kronecker_product() {
        for n in 1..=3 {
            for a in 0..label_count(n) {
                let p = PauliLabel::from_index(a, n).unwrap();
                let dense = dense_matrix(&p).unwrap();
                let mut sparse = CMatrix::zeros(p.dim(), p.dim());
                add_scaled(&mut sparse, &p, c(1.0, 0.0));
                assert_eq!(dense, sparse, "label {a} at n={n}");
                assert_eq!(dense.iter().filter(|z| z.norm() > 0.0).count(), p.dim());
                assert!(p.action().entries().all(|(_, _, ph)| (ph.norm() - 1.0).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn dense_matrices_are_hermitian_unitary_traceless() {
        for a in 0..label_count(3) {
            let p = PauliLabel::from_index(a, 3).unwrap();
            let w = dense_matrix(&p).unwrap();
            assert_eq!(linalg::hermiticity_defect(&w), 0.0);
            let sq = &w * &w;
            assert_eq!(sq, CMatrix::identity(8, 8));
            let spec = linalg::eigvalsh(&w);
            assert!((spec[0].abs().max(spec[7].abs()) - 1.0).abs() < 1e-12);
            let tr = linalg::trace(&w);
            if p.is_identity() {
                assert_eq!(tr, c(8.0, 0.0));
            } else {
                assert_eq!(tr, c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let z = PauliLabel::new(1, 0, 1).unwrap();
        let zero = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        assert_eq!(expectation(&zero, &z).unwrap(), 1.0);
        let mixed = CMatrix::identity(4, 4) / c(4.0, 0.0);
        for a in 1..16 {
            let p = PauliLabel::from_index(a, 2).unwrap();
            assert_eq!(expectation(&mixed, &p).unwrap(), 0.0);
        }
        let bad = CMatrix::identity(4, 4);
        assert!(matches!(expectation(&bad, &z), Err(TomoError::DimensionMismatch { .. })));
    }

    #[test]
    fn expectation_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3u32 {
            let rho = random_state(1 << n, &mut rng);
            for a in 0..label_count(n) {
                let p = PauliLabel::from_index(a, n).unwrap();
                let oracle = linalg::trace(&(&rho * dense_matrix(&p).unwrap()));
                assert!(oracle.im.abs() < 1e-12);
                assert!((expectation(&rho, &p).unwrap() - oracle.re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_examples_and_involution() {
        let x = PauliLabel::new(1, 1, 0).unwrap();
        let out = apply_pauli(&x, &[c(1., 0.), c(0., 0.)]).unwrap();
        assert_eq!(out, vec![c(0., 0.), c(1., 0.)]);
        let id = PauliLabel::identity(2).unwrap();
        let v: Vec<C64> = (0..4).map(|k| c(k as f64, -1.0)).collect();
        assert_eq!(apply_pauli(&id, &v).unwrap(), v);
        assert!(apply_pauli(&id, &v[..3]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let p = PauliLabel::from_index(rng.random_range(0..64), 3).unwrap();
            let v: Vec<C64> = (0..8).map(|_| c(rng.random(), rng.random())).collect();
            let twice = apply_pauli(&p, &apply_pauli(&p, &v).unwrap()).unwrap();
            for (a, b) in twice.iter().zip(&v) {
                assert!((a - b).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn orthogonality_exhaustive() {
        for n in 1..=3u32 {
            let d = 1usize << n;
            let mats: Vec<CMatrix> = (0..label_count(n))
                .map(|a| dense_matrix(&PauliLabel::from_index(a, n).unwrap()).unwrap())
                .collect();
            for (a, wa) in mats.iter().enumerate() {
                for (b, wb) in mats.iter().enumerate() {
                    let tr = linalg::trace(&(wa * wb));
                    let want = if a == b { d as f64 } else { 0.0 };
                    assert!((tr - c(want, 0.0)).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn basis_completeness() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3u32 {
            let d = 1usize << n;
            let g = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let m = linalg::hermitian_part(&g);
            let mut rebuilt = CMatrix::zeros(d, d);
            for a in 0..label_count(n) {
                let p = PauliLabel::from_index(a, n).unwrap();
                add_scaled(&mut rebuilt, &p, trace_product(&m, &p) / d as f64);
            }
            assert!(linalg::frobenius(&(rebuilt - m)) < 1e-10);
        }
    }
}
