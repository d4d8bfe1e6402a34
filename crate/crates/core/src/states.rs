//! Synthetic density matrices and the metrics used to score reconstructions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result, TomoError};
use crate::linalg::{self, HermitianEigen};
use crate::pauli::check_square;
use crate::{CMatrix, C64};

/// Tolerance on `max |M - M^†|` and `|tr M - 1|` for a valid state.
pub const STATE_TOL: f64 = 1e-12;

/// Smallest eigenvalue accepted as "numerically non-negative".
pub const PSD_TOL: f64 = 1e-10;

/// A `d x d` Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates the state invariants. The input is symmetrized so that
    /// round-off in the strictly lower triangle does not leak into later
    /// computations.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || !m.nrows().is_power_of_two() {
            return invalid(format!(
                "density matrix must be square with power-of-two size, got {}x{}",
                m.nrows(),
                m.ncols()
            ));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return invalid("density matrix has non-finite entries");
        }
        let herm = linalg::hermiticity_defect(&m);
        if herm > STATE_TOL {
            return invalid(format!("matrix is not Hermitian (defect {herm:e})"));
        }
        let tr = linalg::trace(&m).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return invalid(format!("trace is {tr}, expected 1"));
        }
        let m = linalg::hermitian_part(&m);
        let min = *linalg::eigvalsh(&m).last().unwrap();
        if min < -PSD_TOL {
            return Err(TomoError::NotPsd { eigenvalue: min });
        }
        Ok(Self { m })
    }

    /// Normalizes a Hermitian PSD matrix to unit trace, then validates.
    pub fn from_unnormalized(m: CMatrix) -> Result<Self> {
        let tr = linalg::trace(&m).re;
        if !(tr > 0.0) {
            return invalid(format!("cannot normalize a matrix with trace {tr}"));
        }
        Self::new(linalg::hermitian_part(&m) / C64::new(tr, 0.0))
    }

    /// `1/d`
    pub fn maximally_mixed(d: usize) -> Result<Self> {
        if d == 0 || !d.is_power_of_two() {
            return invalid(format!("dimension {d} is not a power of two"));
        }
        Ok(Self {
            m: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        })
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let d = psi.len();
        let m = CMatrix::from_fn(d, d, |i, j| psi[i] * psi[j].conj());
        Self::from_unnormalized(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn eigen(&self) -> HermitianEigen {
        linalg::eigh(&self.m)
    }
}

/// Eigenvalue profile of a synthetic state, stored in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProfile {
    values: Vec<f64>,
}

impl SpectrumProfile {
    /// Accepts any ordering; entries must be non-negative and sum to one.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !values.len().is_power_of_two() {
            return invalid(format!("profile length {} is not a power of two", values.len()));
        }
        if values.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return invalid("profile entries must be finite and non-negative");
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return invalid(format!("profile sums to {sum}, expected 1"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    /// A profile for `d` levels whose first `head.len()` eigenvalues are
    /// `head` and whose remaining `1 - sum(head)` weight is spread evenly.
    pub fn with_flat_tail(d: usize, head: &[f64]) -> Result<Self> {
        if head.len() > d {
            return invalid("profile head longer than dimension");
        }
        let mass: f64 = head.iter().sum();
        let rest = d - head.len();
        let mut values = head.to_vec();
        if rest > 0 {
            values.extend(std::iter::repeat((1.0 - mass) / rest as f64).take(rest));
        } else if (mass - 1.0).abs() > 1e-12 {
            return invalid("profile head must sum to one when it fills the dimension");
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Weight outside the leading `k` eigenvalues.
    pub fn tail_weight(&self, k: usize) -> f64 {
        self.values.iter().skip(k).sum()
    }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || !d.is_power_of_two() {
        return invalid(format!("dimension {d} is not a power of two"));
    }
    Ok(())
}

/// Rank-`r` state from the induced measure: the reduced state of a Haar pure
/// state on a `d x r` system, realized as `G G^† / tr(G G^†)` for a `d x r`
/// complex Ginibre matrix `G`.
pub fn random_rank_r_state(d: usize, r: usize, seed: u64) -> Result<DensityMatrix> {
    check_dim(d)?;
    if r == 0 || r > d {
        return invalid(format!("rank must be in 1..={d}, got {r}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = CMatrix::from_fn(d, r, |_, _| complex_gaussian(&mut rng));
    DensityMatrix::from_unnormalized(&g * g.adjoint())
}

/// `(1 - gamma) rho + gamma 1/d`
pub fn depolarize(rho: &DensityMatrix, gamma: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&gamma) {
        return invalid(format!("depolarizing strength must be in [0, 1], got {gamma}"));
    }
    let d = rho.dim();
    let mut m = rho.matrix() * C64::new(1.0 - gamma, 0.0);
    for i in 0..d {
        m[(i, i)] += gamma / d as f64;
    }
    Ok(DensityMatrix { m })
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre matrix,
/// with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 { rkk / rkk.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// `U diag(profile) U^†` with `U` Haar-random.
pub fn state_from_profile(profile: &SpectrumProfile, seed: u64) -> Result<DensityMatrix> {
    let d = profile.dim();
    check_dim(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_unitary(d, &mut rng);
    let mut scaled = u.clone();
    for (k, &lam) in profile.values().iter().enumerate() {
        for i in 0..d {
            scaled[(i, k)] *= lam;
        }
    }
    DensityMatrix::from_unnormalized(scaled * u.adjoint())
}

/// `tr(rho^2)`
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

fn psd_eigen(m: &CMatrix, what: &str) -> Result<HermitianEigen> {
    let mut e = linalg::eigh(m);
    let min = *e.values.last().unwrap();
    if min < -PSD_TOL {
        log::debug!("{what}: eigenvalue {min:e} below PSD tolerance");
        return Err(TomoError::NotPsd { eigenvalue: min });
    }
    for x in e.values.iter_mut() {
        *x = x.max(0.0);
    }
    Ok(e)
}

/// Uhlmann fidelity `(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`, clamped to
/// `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_matrices(rho.matrix(), sigma.matrix())
}

/// Fidelity between two Hermitian PSD matrices of unit trace that have not
/// been wrapped in [`DensityMatrix`].
///
/// With factorizations `rho = A A^†`, `sigma = B B^†` the root fidelity is the
/// trace norm of `A^† B`, whose singular values are computed directly. This
/// avoids square roots of round-off eigenvalues, which would otherwise add
/// `O(sqrt(eps))` errors for rank-deficient inputs. Eigenvalues below
/// `16 d eps lambda_max` are treated as zero.
pub fn fidelity_matrices(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    check_square(sigma, rho.nrows())?;
    let a = psd_factor(rho, "fidelity(rho)")?;
    let b = psd_factor(sigma, "fidelity(sigma)")?;
    if a.ncols() == 0 || b.ncols() == 0 {
        return Ok(0.0);
    }
    let root: f64 = (a.adjoint() * b).svd(false, false).singular_values.iter().sum();
    Ok((root * root).clamp(0.0, 1.0))
}

fn psd_factor(m: &CMatrix, what: &str) -> Result<CMatrix> {
    let e = psd_eigen(m, what)?;
    let d = m.nrows();
    let floor = 16.0 * d as f64 * f64::EPSILON * e.values[0].max(0.0);
    let keep: Vec<usize> = (0..d).filter(|&k| e.values[k] > floor).collect();
    Ok(CMatrix::from_fn(d, keep.len(), |i, j| {
        e.vectors[(i, keep[j])] * e.values[keep[j]].sqrt()
    }))
}

/// `1/2 sum |lambda_i(rho - sigma)|`
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_square(sigma.matrix(), rho.dim())?;
    let diff = rho.matrix() - sigma.matrix();
    let half: f64 = 0.5 * linalg::eigvalsh(&diff).iter().map(|x| x.abs()).sum::<f64>();
    Ok(half.min(1.0))
}

/// Keeps the `r` largest eigenvalues and renormalizes the trace. Degenerate
/// eigenvalues at the cut are split in the order the eigensolver returns them.
pub fn best_rank_r(rho: &DensityMatrix, r: usize) -> Result<DensityMatrix> {
    let d = rho.dim();
    if r == 0 || r > d {
        return invalid(format!("rank must be in 1..={d}, got {r}"));
    }
    let e = rho.eigen();
    let kept: f64 = e.values[..r].iter().map(|x| x.max(0.0)).sum();
    if !(kept > 0.0) {
        return invalid("leading eigenvalues carry no weight");
    }
    let mut out = CMatrix::zeros(d, d);
    for k in 0..r {
        let w = e.values[k].max(0.0) / kept;
        if w == 0.0 {
            continue;
        }
        let v = e.vectors.column(k);
        for j in 0..d {
            let vj = v[j].conj() * w;
            for i in 0..d {
                out[(i, j)] += v[i] * vj;
            }
        }
    }
    DensityMatrix::new(linalg::hermitian_part(&out))
}
