//! Trace-norm reconstruction by singular value thresholding (SVT).
//!
//! The solver minimizes `tau ||sigma||_tr + ||sigma||_2^2 / 2` subject to
//! `|tr(sigma w_c) - b_c| <= delta` for every measured observable `w_c`, plus
//! the trace constraint `tr(sigma) = 1` expressed as one more constraint on
//! the identity observable. For large `tau` this is the trace-norm
//! minimization program with a noise band.
//!
//! It runs Uzawa dual ascent on the coefficients `y`:
//!
//! ```text
//! Y       = sum_c y_c w_c
//! sigma   = sum_k sign(l_k) max(|l_k| - tau, 0) v_k v_k^†     (Y = sum_k l_k v_k v_k^†)
//! r_c     = b_c - tr(sigma w_c)
//! y_c    += step * sign(r_c) max(|r_c| - delta, 0)
//! ```
//!
//! For Hermitian iterates the singular values are `|l_k|`, so thresholding in
//! the eigenbasis is the proximal map of the trace norm and keeps every
//! iterate Hermitian.
//!
//! Step size: write the constraints as a linear map `A: sigma -> (tr(sigma
//! w_c))_c`. Distinct Pauli observables satisfy `tr(w_a w_b) = d delta_ab`,
//! so `A A^* = d I` and `||A||^2 = d`. The prox is 1-Lipschitz, hence the dual
//! gradient is `d`-Lipschitz and dual ascent converges for any step in
//! `(0, 2/d)`. Repeated labels would break `A A^* = d I`, so they are merged
//! into a single constraint whose target is their mean.
//!
//! Two eigen paths are available. `Dense` forms `Y` as a `d x d` matrix and
//! diagonalizes it fully. `Sparse` keeps `Y` in X-mask blocks (the hybrid
//! scheme gives `|S| d` nonzeros) and resolves only the eigenpairs with
//! `|l| > tau` by Lanczos.

pub mod lanczos;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Result, TomoError};
use crate::linalg::{self, HermitianEigen};
use crate::masked::{MaskGroups, MaskedOperator};
use crate::pauli::{check_square, PauliLabel};
use crate::sampling::MeasurementRecord;
use crate::states::DensityMatrix;
use crate::{CMatrix, C64};

use lanczos::{partial_eigh, LanczosOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Dense,
    Sparse,
}

impl fmt::Display for SolverPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverPath::Dense => "dense",
            SolverPath::Sparse => "sparse",
        })
    }
}

impl FromStr for SolverPath {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dense" => Ok(SolverPath::Dense),
            "sparse" => Ok(SolverPath::Sparse),
            other => invalid(format!("unknown solver path {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Trace-norm weight.
    pub tau: f64,
    /// Per-constraint tolerance band.
    pub delta_band: f64,
    /// Dual step; `None` means `1.5 / d`.
    pub step: Option<f64>,
    pub max_iter: usize,
    /// Initial number of eigenpairs resolved by the sparse path.
    pub rank_guess: usize,
    /// Converged once `max |r_c| <= delta_band + stop_tol`.
    pub stop_tol: f64,
    pub path: SolverPath,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tau: 5.0,
            delta_band: 0.0,
            step: None,
            max_iter: 5000,
            rank_guess: 8,
            stop_tol: 1e-6,
            path: SolverPath::Dense,
        }
    }
}

impl SolverConfig {
    pub fn step_for(&self, d: usize) -> f64 {
        self.step.unwrap_or(1.5 / d as f64)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return invalid(format!("tau must be positive, got {}", self.tau));
        }
        if !(self.delta_band >= 0.0 && self.delta_band.is_finite()) {
            return invalid(format!("delta_band must be non-negative, got {}", self.delta_band));
        }
        if !(self.stop_tol >= 0.0 && self.stop_tol.is_finite()) {
            return invalid(format!("stop_tol must be non-negative, got {}", self.stop_tol));
        }
        let step = self.step_for(d);
        if !(step > 0.0 && step < 2.0 / d as f64) {
            return invalid(format!("step must lie in (0, 2/d) = (0, {}), got {step}", 2.0 / d as f64));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    /// Final iterate; Hermitian, possibly with small negative eigenvalues.
    pub sigma_raw: CMatrix,
    /// `sigma_raw` with negative eigenvalues clipped and trace renormalized.
    pub sigma_state: DensityMatrix,
    pub iterations: usize,
    /// Largest constraint residual of the final iterate.
    pub max_residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    /// Eigenvalues of `sigma_raw`, descending.
    pub spectrum: Vec<f64>,
    /// Trace norm of the clipped negative part of `sigma_raw`.
    pub negative_mass: f64,
    /// Number of nonzero eigenvalues of `sigma_raw`.
    pub rank: usize,
}

/// Unique constraints derived from a record: the identity constraint first,
/// then every distinct measured label with the mean of its recorded values.
#[derive(Debug, Clone)]
struct Constraints {
    labels: Vec<PauliLabel>,
    targets: Vec<f64>,
}

impl Constraints {
    fn from_record(record: &MeasurementRecord) -> Result<Self> {
        let n = record.scheme().qubits();
        let identity = PauliLabel::identity(n)?;
        let mut labels = vec![identity];
        let mut sums = vec![(1.0, 1usize)];
        let mut seen: HashMap<PauliLabel, usize> = HashMap::new();
        seen.insert(identity, 0);
        for (p, &v) in record.labels().iter().zip(record.values()) {
            if !v.is_finite() {
                return invalid(format!("non-finite value for label ({:x}, {:x})", p.x_mask(), p.z_mask()));
            }
            if p.is_identity() {
                continue;
            }
            match seen.get(p) {
                Some(&k) => {
                    sums[k].0 += v;
                    sums[k].1 += 1;
                }
                None => {
                    seen.insert(*p, labels.len());
                    labels.push(*p);
                    sums.push((v, 1));
                }
            }
        }
        let targets = sums.iter().map(|(s, c)| s / *c as f64).collect();
        Ok(Self { labels, targets })
    }
}

/// Eigenpairs of `Y` that survive the threshold, as `(eigenvalue, vector)`
/// columns.
struct Thresholded {
    values: Vec<f64>,
    vectors: CMatrix,
}

struct EigenStep {
    path: SolverPath,
    tau: f64,
    want: usize,
    start: Option<Vec<C64>>,
}

impl EigenStep {
    fn run(&mut self, y_op: &MaskedOperator) -> Thresholded {
        match self.path {
            SolverPath::Dense => {
                let e = linalg::eigh(&y_op.to_dense());
                select(&e, self.tau)
            }
            SolverPath::Sparse => {
                let d = y_op.dim();
                let pe = partial_eigh(
                    d,
                    |x, out| y_op.matvec_into(x, out),
                    self.tau,
                    self.want,
                    self.start.as_deref(),
                    LanczosOptions::default(),
                );
                log::trace!("lanczos: {} pairs above tau, krylov dimension {}", pe.values.len(), pe.krylov_dim);
                self.want = (pe.values.len() + 4).min(d);
                // warm start: the previous leading subspace
                if pe.values.is_empty() {
                    self.start = None;
                } else {
                    let mut s = vec![C64::new(0.0, 0.0); d];
                    for k in 0..pe.values.len() {
                        for (i, z) in s.iter_mut().enumerate() {
                            *z += pe.vectors[(i, k)];
                        }
                    }
                    self.start = Some(s);
                }
                Thresholded {
                    values: pe.values,
                    vectors: pe.vectors,
                }
            }
        }
    }
}

fn select(e: &HermitianEigen, tau: f64) -> Thresholded {
    let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k].abs() > tau).collect();
    let d = e.vectors.nrows();
    let vectors = CMatrix::from_fn(d, keep.len(), |i, j| e.vectors[(i, keep[j])]);
    Thresholded {
        values: keep.iter().map(|&k| e.values[k]).collect(),
        vectors,
    }
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

/// Spectral norm of the Hermitian operator `Y`.
fn spectral_norm(y_op: &MaskedOperator, path: SolverPath) -> f64 {
    match path {
        SolverPath::Dense => {
            let v = linalg::eigvalsh(&y_op.to_dense());
            v[0].abs().max(v[v.len() - 1].abs())
        }
        SolverPath::Sparse => {
            let pe = partial_eigh(
                y_op.dim(),
                |x, out| y_op.matvec_into(x, out),
                0.0,
                1,
                None,
                LanczosOptions {
                    tol: 1e-8,
                    ..LanczosOptions::default()
                },
            );
            pe.values.iter().fold(0.0f64, |a, x| a.max(x.abs()))
        }
    }
}

/// Reconstructs a state from a measurement record.
pub fn svt_solve(record: &MeasurementRecord, cfg: &SolverConfig) -> Result<SolverResult> {
    if record.is_empty() {
        return invalid("cannot reconstruct from an empty record");
    }
    let n = record.scheme().qubits();
    let d = record.dim();
    cfg.validate(d)?;
    let constraints = Constraints::from_record(record)?;
    let groups = MaskGroups::new(n, &constraints.labels);
    let b = &constraints.targets;
    let step = cfg.step_for(d);
    let delta = cfg.delta_band;

    // Start from y = k0 * step * b with the smallest k0 for which Y reaches the
    // threshold; the first k0 - 1 plain iterations would all return sigma = 0.
    let ab = groups.synthesize_real(b);
    let norm = spectral_norm(&ab, cfg.path);
    let k0 = if norm > 0.0 { (cfg.tau / (step * norm)).ceil().max(1.0) } else { 1.0 };
    let mut y: Vec<f64> = b.iter().map(|x| k0 * step * x).collect();

    let mut eig = EigenStep {
        path: cfg.path,
        tau: cfg.tau,
        want: cfg.rank_guess.max(1),
        start: None,
    };
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut current = Thresholded {
        values: Vec::new(),
        vectors: CMatrix::zeros(d, 0),
    };
    let mut max_residual = f64::INFINITY;

    for it in 1..=cfg.max_iter {
        iterations = it;
        let y_op = groups.synthesize_real(&y);
        current = eig.run(&y_op);
        let weights: Vec<f64> = current.values.iter().map(|&l| soft_threshold(l, cfg.tau)).collect();
        let fitted = groups.analyze_factored(&current.vectors, &weights);
        let residual: Vec<f64> = b.iter().zip(&fitted).map(|(bc, f)| bc - f.re).collect();
        max_residual = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        history.push(max_residual);
        if !max_residual.is_finite() {
            log::warn!("svt: residual became non-finite at iteration {it}");
            break;
        }
        if max_residual <= delta + cfg.stop_tol {
            converged = true;
            break;
        }
        for (yc, r) in y.iter_mut().zip(&residual) {
            *yc += step * soft_threshold(*r, delta);
        }
        if it % 250 == 0 {
            log::debug!("svt: iteration {it}, max residual {max_residual:.3e}, rank {}", current.values.len());
        }
    }

    let weights: Vec<f64> = current.values.iter().map(|&l| soft_threshold(l, cfg.tau)).collect();
    finish(d, &current.vectors, &weights, iterations, max_residual, converged, history)
}

fn finish(
    d: usize,
    vectors: &CMatrix,
    weights: &[f64],
    iterations: usize,
    max_residual: f64,
    converged: bool,
    residual_history: Vec<f64>,
) -> Result<SolverResult> {
    let build = |keep: &dyn Fn(f64) -> f64| {
        let mut m = CMatrix::zeros(d, d);
        for (k, &w) in weights.iter().enumerate() {
            let w = keep(w);
            if w == 0.0 {
                continue;
            }
            let v = vectors.column(k);
            for j in 0..d {
                let vj = v[j].conj() * w;
                for i in 0..d {
                    m[(i, j)] += v[i] * vj;
                }
            }
        }
        linalg::hermitian_part(&m)
    };
    let sigma_raw = build(&|w| w);
    let mut spectrum: Vec<f64> = weights.to_vec();
    spectrum.resize(d, 0.0);
    spectrum.sort_by(|a, b| b.total_cmp(a));
    let negative_mass: f64 = weights.iter().filter(|w| **w < 0.0).map(|w| -w).sum();
    let positive: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    let sigma_state = if positive > 0.0 {
        DensityMatrix::from_unnormalized(build(&|w| w.max(0.0)))?
    } else {
        log::warn!("svt: iterate has no positive spectrum; reporting the maximally mixed state");
        DensityMatrix::maximally_mixed(d)?
    };
    Ok(SolverResult {
        sigma_raw,
        sigma_state,
        iterations,
        max_residual,
        converged,
        residual_history,
        spectrum,
        negative_mass,
        rank: weights.iter().filter(|w| **w != 0.0).count(),
    })
}

/// Effect of the final PSD projection, measured against a reference state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdAudit {
    /// `1/2 ||sigma_raw - truth||_tr`
    pub td_raw: f64,
    /// `1/2 ||sigma_state - truth||_tr`
    pub td_state: f64,
    pub negative_mass: f64,
    /// `tr(sigma_raw) - 1`
    pub trace_defect: f64,
    /// `td_state <= td_raw + negative_mass + |trace_defect| / 2`
    pub holds: bool,
}

/// Checks that clipping the negative part and renormalizing moved the
/// estimate away from `truth` by no more than the clipped mass plus half the
/// trace defect of the raw iterate.
pub fn psd_audit(result: &SolverResult, truth: &DensityMatrix) -> Result<PsdAudit> {
    check_square(&result.sigma_raw, truth.dim())?;
    let half_tr = |m: CMatrix| 0.5 * linalg::eigvalsh(&m).iter().map(|x| x.abs()).sum::<f64>();
    let td_raw = half_tr(&result.sigma_raw - truth.matrix());
    let td_state = half_tr(result.sigma_state.matrix() - truth.matrix());
    let trace_defect = linalg::trace(&result.sigma_raw).re - 1.0;
    let bound = td_raw + result.negative_mass + 0.5 * trace_defect.abs();
    let holds = td_state <= bound + 1e-10;
    if !holds {
        log::warn!("psd projection moved the estimate by more than its clipped mass: {td_state:e} > {bound:e}");
    } else {
        log::debug!(
            "psd audit: td {td_raw:.3e} -> {td_state:.3e}, negative mass {:.3e}",
            result.negative_mass
        );
    }
    Ok(PsdAudit {
        td_raw,
        td_state,
        negative_mass: result.negative_mass,
        trace_defect,
        holds,
    })
}

/// `tr(sigma w_i) - b_i` for every record row, followed by the trace residual
/// `tr(sigma) - 1`.
pub fn residuals(sigma: &CMatrix, record: &MeasurementRecord) -> Result<Vec<f64>> {
    check_square(sigma, record.dim())?;
    let groups = MaskGroups::new(record.scheme().qubits(), record.labels());
    let mut out: Vec<f64> = groups
        .analyze_dense(sigma)
        .iter()
        .zip(record.values())
        .map(|(t, b)| t.re - b)
        .collect();
    out.push(linalg::trace(sigma).re - 1.0);
    Ok(out)
}

/// Trace norm `sum |lambda_i|` of a Hermitian matrix.
pub fn nuclear_norm(m: &CMatrix) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return invalid("nuclear_norm needs a square matrix");
    }
    let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let defect = linalg::hermiticity_defect(m);
    if defect > 1e-10 * scale {
        return invalid(format!("nuclear_norm needs a Hermitian matrix (defect {defect:e})"));
    }
    Ok(linalg::eigvalsh(m).iter().map(|x| x.abs()).sum())
}

/// The proximal map of `tau ||.||_tr` on Hermitian matrices:
/// `argmin_X tau ||X||_tr + ||X - M||_2^2 / 2`.
pub fn prox_trace_norm(m: &CMatrix, tau: f64) -> CMatrix {
    let e = linalg::eigh(m);
    linalg::hermitian_part(&e.reconstruct_with(|l| soft_threshold(l, tau)))
}
