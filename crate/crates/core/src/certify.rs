//! Near-purity certificates computed directly from sampled Pauli data.
//!
//! For labels drawn uniformly from all `d^2` Pauli observables,
//! `S = (d/m) sum_i v_i^2` is an unbiased estimator of the purity
//! `tr(omega^2)`. A Chernoff bound with `m = 4 mu d / t^2` samples keeps
//! `|S - tr(omega^2)| <= t` except with probability `2 e^{-mu}`, and the
//! measurement precision `delta2` moves the statement from the data matrix
//! `omega` to the true state. If the true state has largest eigenvalue at
//! least 1/2, its 2-norm distance to the projector onto the top eigenvector
//! is at most `sqrt(2) (1 - purity)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sampling::{MeasurementRecord, SchemeKind};

/// Outcome of [`certificate`]. All intermediate quantities are kept so that
/// callers can apply stricter policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityCertificate {
    /// Raw estimate `S = (d/m) sum v_i^2`.
    pub estimate: f64,
    /// `d * mean(stderr^2)`, subtracted from `estimate` before bounding.
    pub bias_correction: f64,
    pub m: usize,
    pub dim: usize,
    pub mu: f64,
    /// Deviation radius `sqrt(4 mu d / m)`.
    pub t: f64,
    /// `1 - 2 exp(-t^2 m / (4 d))`.
    pub confidence: f64,
    pub delta2: f64,
    /// `estimate - bias_correction - t - 2 delta2 - delta2^2`.
    pub purity_lower: f64,
    /// `None` when the purity bound is too weak to say anything.
    pub delta1_bound: Option<f64>,
    /// Largest eigenvalue of a reconstruction of the same data, if supplied.
    pub top_eigenvalue: Option<f64>,
    pub valid: bool,
    /// Why `valid` is false.
    pub reason: Option<String>,
}

/// `S = (d/m) sum_i v_i^2`. Rejects hybrid records, whose labels are not
/// uniformly distributed.
pub fn purity_estimate(record: &MeasurementRecord) -> Result<f64> {
    if record.scheme().kind() == SchemeKind::Hybrid {
        return invalid(
            "purity estimation needs labels drawn uniformly from all d^2 Pauli observables; \
             hybrid records are structured and give a biased estimate",
        );
    }
    if record.is_empty() {
        return invalid("purity estimation needs at least one value");
    }
    let d = record.dim() as f64;
    let sum: f64 = record.values().iter().map(|v| v * v).sum();
    Ok(d * sum / record.len() as f64)
}

/// `sqrt(2) (1 - purity_lower)`: the distance `||rho - |psi><psi| ||_2` to
/// the top eigenvector, valid when the largest eigenvalue of `rho` is at
/// least 1/2.
pub fn delta1_bound(purity_lower: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&purity_lower) {
        return invalid(format!("purity bound must lie in [0, 1], got {purity_lower}"));
    }
    Ok(std::f64::consts::SQRT_2 * (1.0 - purity_lower))
}

/// Certifies near-purity from `record`.
///
/// `top_eigenvalue` is the largest eigenvalue of a reconstruction from the
/// same data. The certificate is valid only if `t < 1`, the purity lower
/// bound is at least 1/2 and `top_eigenvalue >= 1/2 + delta1_bound`.
pub fn certificate(
    record: &MeasurementRecord,
    delta2: f64,
    mu: f64,
    top_eigenvalue: Option<f64>,
) -> Result<PurityCertificate> {
    if !(delta2 >= 0.0 && delta2.is_finite()) {
        return invalid(format!("delta2 must be non-negative, got {delta2}"));
    }
    if !(mu > 1.0 && mu.is_finite()) {
        return invalid(format!("mu must exceed 1, got {mu}"));
    }
    let estimate = purity_estimate(record)?;
    let dim = record.dim();
    let d = dim as f64;
    let m = record.len();
    let bias_correction = d * record.stderr().iter().map(|s| s * s).sum::<f64>() / m as f64;
    let t = (4.0 * mu * d / m as f64).sqrt();
    let confidence = (1.0 - 2.0 * (-t * t * m as f64 / (4.0 * d)).exp()).max(0.0);
    let purity_lower = estimate - bias_correction - t - 2.0 * delta2 - delta2 * delta2;

    let delta1 = if purity_lower < 1.0 / d {
        None
    } else {
        Some(delta1_bound(purity_lower.min(1.0))?)
    };

    let reason = if t >= 1.0 {
        Some(format!("m = {m} is too small for mu = {mu}: deviation radius t = {t:.4} >= 1"))
    } else if purity_lower < 0.5 {
        Some(format!("purity lower bound {purity_lower:.4} is below 1/2"))
    } else {
        let margin = 0.5 + delta1.unwrap_or(f64::INFINITY);
        match top_eigenvalue {
            None => Some("no reconstruction supplied to test the largest eigenvalue".to_string()),
            Some(l) if !(l >= margin) => Some(format!(
                "reconstructed top eigenvalue {l:.4} is below 1/2 + delta1 = {margin:.4}"
            )),
            Some(_) => None,
        }
    };
    if let Some(r) = &reason {
        log::debug!("certificate not valid: {r}");
    }

    Ok(PurityCertificate {
        estimate,
        bias_correction,
        m,
        dim,
        mu,
        t,
        confidence,
        delta2,
        purity_lower,
        delta1_bound: delta1,
        top_eigenvalue,
        valid: reason.is_none(),
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::sampling::{draw_hybrid, draw_uniform, measure, NoiseModel};
    use crate::states::{purity, random_rank_r_state, state_from_profile, DensityMatrix, SpectrumProfile};
    use crate::{CMatrix, C64};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn full_record(rho: &DensityMatrix, n: u32) -> MeasurementRecord {
        let d = 1usize << n;
        let scheme = draw_uniform(n, d * d, false, 1).unwrap();
        measure(rho, &scheme, NoiseModel::Exact, 2).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let mixed = DensityMatrix::maximally_mixed(8).unwrap();
        assert!((purity_estimate(&full_record(&mixed, 3)).unwrap() - 1.0 / 8.0).abs() < 1e-12);
        let rho = random_rank_r_state(4, 2, 3).unwrap();
        assert!((purity_estimate(&full_record(&rho, 2)).unwrap() - purity(&rho)).abs() < 1e-12);
    }

    #[test]
    fn hybrid_records_are_rejected() {
        let rho = random_rank_r_state(8, 1, 3).unwrap();
        let rec = measure(&rho, &draw_hybrid(3, 2, 4).unwrap(), NoiseModel::Exact, 5).unwrap();
        assert!(purity_estimate(&rec).is_err());
        assert!(certificate(&rec, 0.0, 2.0, None).is_err());
    }

    #[test]
    fn estimator_is_unbiased() {
        let rho = random_rank_r_state(8, 2, 21).unwrap();
        let p = purity(&rho);
        let trials = 5000;
        let mean: f64 = (0..trials)
            .map(|k| {
                let scheme = draw_uniform(3, 64, true, 1000 + k).unwrap();
                let rec = measure(&rho, &scheme, NoiseModel::Exact, k).unwrap();
                purity_estimate(&rec).unwrap()
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - p).abs() < 0.01 * p, "{mean} vs {p}");
    }

    #[test]
    fn delta1_examples() {
        assert_eq!(delta1_bound(1.0).unwrap(), 0.0);
        assert!((delta1_bound(0.9).unwrap() - 0.141_421_356_237_309_5).abs() < 1e-12);
        assert!(delta1_bound(1.1).is_err());
        assert!(delta1_bound(-0.1).is_err());
        assert!(delta1_bound(f64::NAN).is_err());
    }

    fn distance_to_top_projector(rho: &DensityMatrix) -> f64 {
        let e = rho.eigen();
        let v = e.vectors.column(0);
        let proj: CMatrix = &v * v.adjoint();
        linalg::frobenius(&(rho.matrix() - proj))
    }

    #[test]
    fn delta1_bounds_the_true_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..100 {
            let top = rng.random_range(0.5..1.0);
            let rest: Vec<f64> = (0..15).map(|_| rng.random::<f64>()).collect();
            let total: f64 = rest.iter().sum();
            let mut vals = vec![top];
            vals.extend(rest.iter().map(|x| x / total * (1.0 - top)));
            let rho = state_from_profile(&SpectrumProfile::new(vals).unwrap(), trial).unwrap();
            let bound = delta1_bound(purity(&rho)).unwrap();
            assert!(distance_to_top_projector(&rho) <= bound + 1e-12, "trial {trial}");
        }
    }

    #[test]
    fn certificate_of_a_pure_state() {
        let psi: Vec<C64> = (0..8).map(|k| C64::new(if k == 3 { 1.0 } else { 0.0 }, 0.0)).collect();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let rec = full_record(&rho, 3);
        let c = certificate(&rec, 0.0, 2.0, Some(1.0)).unwrap();
        let t = (8.0f64 / 8.0).sqrt();
        assert!((c.t - t).abs() < 1e-12);
        assert!((c.purity_lower - (1.0 - t)).abs() < 1e-12);
        // t = 1 here, so the certificate must refuse
        assert!(!c.valid);
        assert!(c.reason.as_deref().unwrap().contains("too small"));

        let n = 7;
        let d = 128usize;
        let psi: Vec<C64> = (0..d).map(|k| C64::new(if k == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let rec = full_record(&rho, n);
        let c = certificate(&rec, 0.0, 2.0, Some(1.0)).unwrap();
        let t = (8.0 / d as f64).sqrt();
        assert!((c.purity_lower - (1.0 - t)).abs() < 1e-12);
        assert!((c.delta1_bound.unwrap() - std::f64::consts::SQRT_2 * t).abs() < 1e-12);
        assert!((c.confidence - (1.0 - 2.0 * (-2.0f64).exp())).abs() < 1e-12);
        assert!(c.valid, "{:?}", c.reason);
        assert!(!certificate(&rec, 0.0, 2.0, Some(0.4)).unwrap().valid);
        assert!(!certificate(&rec, 0.0, 2.0, None).unwrap().valid);
    }

    #[test]
    fn maximally_mixed_is_not_certified() {
        let rec = full_record(&DensityMatrix::maximally_mixed(16).unwrap(), 4);
        let c = certificate(&rec, 0.0, 2.0, Some(1.0 / 16.0)).unwrap();
        assert!(c.purity_lower <= 1.0 / 16.0 - c.t + 1e-12);
        assert!(!c.valid);
        assert!(c.delta1_bound.is_none());
    }

    #[test]
    fn rejects_bad_parameters() {
        let rec = full_record(&DensityMatrix::maximally_mixed(4).unwrap(), 2);
        assert!(certificate(&rec, -0.1, 2.0, None).is_err());
        assert!(certificate(&rec, 0.0, 1.0, None).is_err());
    }

    #[test]
    fn noise_bias_is_corrected() {
        let n = 3;
        let rho = random_rank_r_state(8, 1, 8).unwrap();
        let sigma = 0.2;
        let trials = 400;
        let (mut raw, mut corrected) = (0.0, 0.0);
        for k in 0..trials {
            let scheme = draw_uniform(n, 64, true, 500 + k).unwrap();
            let rec = measure(&rho, &scheme, NoiseModel::Gaussian { sigma }, k).unwrap();
            let c = certificate(&rec, 0.0, 2.0, None).unwrap();
            raw += c.estimate;
            corrected += c.estimate - c.bias_correction;
        }
        raw /= trials as f64;
        corrected /= trials as f64;
        assert!((raw - 1.0).abs() > 0.1);
        assert!((corrected - 1.0).abs() < 0.05, "{corrected}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_identity(seed in any::<u64>(), n in 1u32..=3, r in 1usize..=8) {
            let d = 1usize << n;
            let rho = random_rank_r_state(d, r.min(d), seed).unwrap();
            let s = purity_estimate(&full_record(&rho, n)).unwrap();
            prop_assert!((s - purity(&rho)).abs() < 1e-12);
        }

        #[test]
        fn delta1_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(delta1_bound(hi).unwrap() <= delta1_bound(lo).unwrap());
        }

        #[test]
        fn never_valid_below_half(seed in any::<u64>(), top in 0.0f64..0.5) {
            let rho = random_rank_r_state(16, 1, seed).unwrap();
            let c = certificate(&full_record(&rho, 4), 0.0, 1.5, Some(top)).unwrap();
            prop_assert!(!c.valid);
        }
    }
}
