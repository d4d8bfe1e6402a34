//! Measurement schemes, simulated expectation-value estimates and the
//! sampling operator `R: M -> (d/m) sum_i w(A_i) tr(M w(A_i))`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{invalid, Result, TomoError};
use crate::masked::{MaskGroups, MaskedOperator};
use crate::pauli::{self, check_square, label_count, PauliLabel};
use crate::states::DensityMatrix;
use crate::{CMatrix, C64};

/// Gaussian noise draws are truncated (by resampling) at this many standard
/// deviations so every record satisfies the `|value| <= 1 + 5 sigma` band.
pub const GAUSSIAN_BAND: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    UniformWithReplacement,
    UniformWithoutReplacement,
    Hybrid,
}

impl SchemeKind {
    pub fn is_uniform(self) -> bool {
        !matches!(self, SchemeKind::Hybrid)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::UniformWithReplacement => "uniform-with",
            SchemeKind::UniformWithoutReplacement => "uniform-without",
            SchemeKind::Hybrid => "hybrid",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform-with" => Ok(SchemeKind::UniformWithReplacement),
            "uniform-without" => Ok(SchemeKind::UniformWithoutReplacement),
            "hybrid" => Ok(SchemeKind::Hybrid),
            other => invalid(format!("unknown scheme kind {other:?}")),
        }
    }
}

/// How expectation values are estimated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Exact,
    /// Additive i.i.d. `N(0, sigma^2)` on every non-identity value.
    Gaussian { sigma: f64 },
    /// Binomial estimate from `shots` projective measurements per observable.
    Born { shots: u64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                invalid(format!("gaussian sigma must be finite and non-negative, got {sigma}"))
            }
            NoiseModel::Born { shots: 0 } => invalid("born noise needs at least one shot"),
            _ => Ok(()),
        }
    }

    /// Largest `|value|` a record under this model may contain.
    pub fn value_bound(&self) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } => 1.0 + GAUSSIAN_BAND * sigma,
            _ => 1.0,
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::Exact => f.write_str("exact"),
            NoiseModel::Gaussian { sigma } => write!(f, "gaussian({sigma})"),
            NoiseModel::Born { shots } => write!(f, "born({shots})"),
        }
    }
}

impl FromStr for NoiseModel {
    type Err = TomoError;

    /// Parses `exact`, `gaussian(<sigma>)` or `born(<shots>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exact" {
            return Ok(NoiseModel::Exact);
        }
        let (name, arg) = s
            .strip_suffix(')')
            .and_then(|rest| rest.split_once('('))
            .ok_or_else(|| TomoError::InvalidInput(format!("unknown noise tag {s:?}")))?;
        let model = match name {
            "gaussian" => NoiseModel::Gaussian {
                sigma: arg
                    .trim()
                    .parse()
                    .map_err(|_| TomoError::InvalidInput(format!("bad gaussian sigma {arg:?}")))?,
            },
            "born" => NoiseModel::Born {
                shots: arg
                    .trim()
                    .parse()
                    .map_err(|_| TomoError::InvalidInput(format!("bad shot count {arg:?}")))?,
            },
            _ => return invalid(format!("unknown noise tag {s:?}")),
        };
        model.validate()?;
        Ok(model)
    }
}

/// An ordered list of measured Pauli labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingScheme {
    n: u32,
    kind: SchemeKind,
    labels: Vec<PauliLabel>,
    masks: Vec<u64>,
}

impl SamplingScheme {
    /// Validates the labels against the scheme kind. For hybrid schemes the
    /// mask set is recovered from the labels and the label set must be exactly
    /// `S x {0,1}^n`.
    pub fn from_labels(n: u32, kind: SchemeKind, labels: Vec<PauliLabel>) -> Result<Self> {
        if labels.is_empty() {
            return invalid("a scheme needs at least one label");
        }
        if let Some(p) = labels.iter().find(|p| p.qubits() != n) {
            return invalid(format!("label on {} qubits in an {n}-qubit scheme", p.qubits()));
        }
        if kind != SchemeKind::UniformWithReplacement {
            let mut seen = HashSet::with_capacity(labels.len());
            if let Some(dup) = labels.iter().find(|p| !seen.insert(**p)) {
                return invalid(format!(
                    "duplicate label ({:x}, {:x}) in a {kind} scheme",
                    dup.x_mask(),
                    dup.z_mask()
                ));
            }
        }
        let mut masks = Vec::new();
        if kind == SchemeKind::Hybrid {
            let mut set: Vec<u64> = labels.iter().map(|p| p.x_mask()).collect();
            set.sort_unstable();
            set.dedup();
            let d = 1usize << n;
            if set.len() * d != labels.len() {
                return invalid(format!(
                    "hybrid scheme with {} masks must contain {} labels, found {}",
                    set.len(),
                    set.len() * d,
                    labels.len()
                ));
            }
            masks = set;
        }
        Ok(Self { n, kind, labels, masks })
    }

    pub fn qubits(&self) -> u32 {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn labels(&self) -> &[PauliLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The hybrid mask set `S`, sorted; empty for uniform schemes.
    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    /// The first `m` labels as a scheme of the same kind. Prefixes of uniform
    /// draws are themselves uniform draws.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if self.kind == SchemeKind::Hybrid {
            return invalid("hybrid schemes cannot be truncated label-wise");
        }
        if m == 0 || m > self.labels.len() {
            return invalid(format!("prefix length {m} out of range 1..={}", self.labels.len()));
        }
        Self::from_labels(self.n, self.kind, self.labels[..m].to_vec())
    }
}

/// Uniformly random labels over all `4^n` observables, identity included.
pub fn draw_uniform(n: u32, m: usize, replacement: bool, seed: u64) -> Result<SamplingScheme> {
    PauliLabel::identity(n)?;
    let total = label_count(n);
    if m == 0 {
        return invalid("cannot draw an empty scheme");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kind, labels) = if replacement {
        let labels = (0..m)
            .map(|_| PauliLabel::from_index(rng.random_range(0..total), n))
            .collect::<Result<Vec<_>>>()?;
        (SchemeKind::UniformWithReplacement, labels)
    } else {
        if m as u64 > total {
            return invalid(format!(
                "cannot draw {m} distinct labels from {total} without replacement"
            ));
        }
        let labels = index::sample(&mut rng, total as usize, m)
            .into_iter()
            .map(|a| PauliLabel::from_index(a as u64, n))
            .collect::<Result<Vec<_>>>()?;
        (SchemeKind::UniformWithoutReplacement, labels)
    };
    SamplingScheme::from_labels(n, kind, labels)
}

/// All labels `(u, v)` with `u` in a random `s`-subset of X-masks that always
/// contains `u = 0`.
pub fn draw_hybrid(n: u32, s: usize, seed: u64) -> Result<SamplingScheme> {
    PauliLabel::identity(n)?;
    let d = 1usize << n;
    if s == 0 || s > d {
        return invalid(format!("mask count must be in 1..={d}, got {s}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks: Vec<u64> = vec![0];
    masks.extend(index::sample(&mut rng, d - 1, s - 1).into_iter().map(|k| k as u64 + 1));
    masks.sort_unstable();
    let mut labels = Vec::with_capacity(s * d);
    for &u in &masks {
        for v in 0..d as u64 {
            labels.push(PauliLabel::new(n, u, v)?);
        }
    }
    SamplingScheme::from_labels(n, SchemeKind::Hybrid, labels)
}

/// Estimated expectation values for every label of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    scheme: SamplingScheme,
    values: Vec<f64>,
    stderr: Vec<f64>,
    noise: NoiseModel,
}

impl MeasurementRecord {
    pub fn new(
        scheme: SamplingScheme,
        values: Vec<f64>,
        stderr: Vec<f64>,
        noise: NoiseModel,
    ) -> Result<Self> {
        noise.validate()?;
        let m = scheme.len();
        if values.len() != m || stderr.len() != m {
            return invalid(format!(
                "record has {m} labels but {} values and {} error bars",
                values.len(),
                stderr.len()
            ));
        }
        if let Some(x) = values.iter().chain(&stderr).find(|x| !x.is_finite()) {
            return invalid(format!("record contains non-finite number {x}"));
        }
        if let Some(s) = stderr.iter().find(|s| **s < 0.0) {
            return invalid(format!("negative error bar {s}"));
        }
        let bound = noise.value_bound() + 1e-12;
        if let Some((p, v)) = scheme.labels().iter().zip(&values).find(|(_, v)| v.abs() > bound) {
            return invalid(format!(
                "value {v} for label ({:x}, {:x}) outside the band |value| <= {bound}",
                p.x_mask(),
                p.z_mask()
            ));
        }
        Ok(Self { scheme, values, stderr, noise })
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn labels(&self) -> &[PauliLabel] {
        self.scheme.labels()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderr(&self) -> &[f64] {
        &self.stderr
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.scheme.dim()
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().copied().fold(0.0, f64::max)
    }

    /// The first `m` rows, for uniform schemes.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        let scheme = self.scheme.prefix(m)?;
        Self::new(scheme, self.values[..m].to_vec(), self.stderr[..m].to_vec(), self.noise)
    }
}

/// Simulates the estimation of every expectation value in `scheme` on `rho`.
/// The identity observable is always reported as exactly 1 with zero error.
pub fn measure(
    rho: &DensityMatrix,
    scheme: &SamplingScheme,
    noise: NoiseModel,
    seed: u64,
) -> Result<MeasurementRecord> {
    noise.validate()?;
    check_square(rho.matrix(), scheme.dim())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(scheme.len());
    let mut stderr = Vec::with_capacity(scheme.len());
    for p in scheme.labels() {
        if p.is_identity() {
            values.push(1.0);
            stderr.push(0.0);
            continue;
        }
        let exact = pauli::expectation(rho.matrix(), p)?;
        match noise {
            NoiseModel::Exact => {
                values.push(exact);
                stderr.push(0.0);
            }
            NoiseModel::Gaussian { sigma } => {
                let z = loop {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if z.abs() <= GAUSSIAN_BAND {
                        break z;
                    }
                };
                values.push(exact + sigma * z);
                stderr.push(sigma);
            }
            NoiseModel::Born { shots } => {
                let prob = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
                let k = Binomial::new(shots, prob)
                    .map_err(|e| TomoError::InvalidInput(format!("binomial({shots}, {prob}): {e}")))?
                    .sample(&mut rng);
                let v = 2.0 * k as f64 / shots as f64 - 1.0;
                values.push(v);
                stderr.push(((1.0 - v * v).max(0.0) / shots as f64).sqrt());
            }
        }
    }
    MeasurementRecord::new(scheme.clone(), values, stderr, noise)
}

/// Output of the sampling operator: sparse for hybrid schemes (at most
/// `|S| d` nonzeros), dense otherwise.
#[derive(Debug, Clone)]
pub enum SampledOperator {
    Dense(CMatrix),
    Sparse(MaskedOperator),
}

impl SampledOperator {
    pub fn to_dense(&self) -> CMatrix {
        match self {
            SampledOperator::Dense(m) => m.clone(),
            SampledOperator::Sparse(s) => s.to_dense(),
        }
    }

    /// Stored entries.
    pub fn nnz(&self) -> usize {
        match self {
            SampledOperator::Dense(m) => m.len(),
            SampledOperator::Sparse(s) => s.nnz(),
        }
    }
}

/// `R M = (d/m) sum_i w(A_i) tr(M w(A_i))`. Repeated labels contribute once
/// per occurrence.
pub fn sampling_op_apply(scheme: &SamplingScheme, m: &CMatrix) -> Result<SampledOperator> {
    check_square(m, scheme.dim())?;
    let groups = MaskGroups::new(scheme.qubits(), scheme.labels());
    let scale = scheme.dim() as f64 / scheme.len() as f64;
    let coeffs: Vec<C64> = groups.analyze_dense(m).into_iter().map(|c| c * scale).collect();
    let op = groups.synthesize(&coeffs);
    Ok(match scheme.kind() {
        SchemeKind::Hybrid => SampledOperator::Sparse(op),
        _ => SampledOperator::Dense(op.to_dense()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::states::random_rank_r_state;

    #[test]
    fn exhaustive_uniform_draw() {
        let s = draw_uniform(2, 16, false, 3).unwrap();
        let mut idx: Vec<u64> = s.labels().iter().map(|p| p.index()).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..16).collect::<Vec<_>>());
        assert!(draw_uniform(2, 17, false, 3).is_err());
        assert!(draw_uniform(2, 17, true, 3).is_ok());
        assert!(draw_uniform(2, 0, true, 3).is_err());
    }

    #[test]
    fn draws_are_deterministic() {
        assert_eq!(draw_uniform(4, 50, false, 9).unwrap(), draw_uniform(4, 50, false, 9).unwrap());
        assert_eq!(draw_uniform(4, 50, true, 9).unwrap(), draw_uniform(4, 50, true, 9).unwrap());
        assert_eq!(draw_hybrid(4, 5, 9).unwrap(), draw_hybrid(4, 5, 9).unwrap());
        assert_ne!(draw_uniform(4, 50, false, 9).unwrap(), draw_uniform(4, 50, false, 10).unwrap());
    }

    #[test]
    fn hybrid_draw_examples() {
        let all = draw_hybrid(2, 4, 1).unwrap();
        assert_eq!(all.len(), 16);
        let z_only = draw_hybrid(3, 1, 1).unwrap();
        assert_eq!(z_only.masks(), &[0]);
        assert!(z_only.labels().iter().all(|p| p.x_mask() == 0));
        assert_eq!(z_only.len(), 8);
        assert!(draw_hybrid(3, 0, 1).is_err());
        assert!(draw_hybrid(3, 9, 1).is_err());

        let s = draw_hybrid(5, 7, 4).unwrap();
        assert_eq!(s.masks().len(), 7);
        assert!(s.masks().contains(&0));
        assert_eq!(s.len(), 7 * 32);
    }

    #[test]
    fn scheme_validation() {
        let p = PauliLabel::new(2, 1, 1).unwrap();
        assert!(SamplingScheme::from_labels(2, SchemeKind::UniformWithoutReplacement, vec![p, p]).is_err());
        assert!(SamplingScheme::from_labels(2, SchemeKind::UniformWithReplacement, vec![p, p]).is_ok());
        assert!(SamplingScheme::from_labels(2, SchemeKind::Hybrid, vec![p]).is_err());
    }

    #[test]
    fn exact_measurement_of_mixed_state() {
        let rho = DensityMatrix::maximally_mixed(8).unwrap();
        let s = draw_uniform(3, 64, false, 1).unwrap();
        let rec = measure(&rho, &s, NoiseModel::Exact, 0).unwrap();
        for (p, v) in rec.labels().iter().zip(rec.values()) {
            assert_eq!(*v, if p.is_identity() { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn exact_values_match_expectation_bitwise() {
        let rho = random_rank_r_state(16, 2, 4).unwrap();
        let s = draw_uniform(4, 100, true, 2).unwrap();
        let rec = measure(&rho, &s, NoiseModel::Exact, 0).unwrap();
        for (p, v) in rec.labels().iter().zip(rec.values()) {
            let want = if p.is_identity() { 1.0 } else { pauli::expectation(rho.matrix(), p).unwrap() };
            assert_eq!(v.to_bits(), want.to_bits());
        }
    }

    #[test]
    fn noise_parameter_errors() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let s = draw_uniform(2, 4, false, 1).unwrap();
        assert!(measure(&rho, &s, NoiseModel::Gaussian { sigma: -1.0 }, 0).is_err());
        assert!(measure(&rho, &s, NoiseModel::Born { shots: 0 }, 0).is_err());
        let big = DensityMatrix::maximally_mixed(8).unwrap();
        assert!(matches!(measure(&big, &s, NoiseModel::Exact, 0), Err(TomoError::DimensionMismatch { .. })));
    }

    #[test]
    fn noise_tags_parse() {
        assert_eq!("exact".parse::<NoiseModel>().unwrap(), NoiseModel::Exact);
        assert_eq!("gaussian(0.25)".parse::<NoiseModel>().unwrap(), NoiseModel::Gaussian { sigma: 0.25 });
        assert_eq!("born(100)".parse::<NoiseModel>().unwrap(), NoiseModel::Born { shots: 100 });
        assert!("born(0)".parse::<NoiseModel>().is_err());
        assert!("poisson(1)".parse::<NoiseModel>().is_err());
        for m in [NoiseModel::Exact, NoiseModel::Gaussian { sigma: 0.001 }, NoiseModel::Born { shots: 7 }] {
            assert_eq!(m.to_string().parse::<NoiseModel>().unwrap(), m);
        }
        for k in [SchemeKind::Hybrid, SchemeKind::UniformWithReplacement, SchemeKind::UniformWithoutReplacement] {
            assert_eq!(k.to_string().parse::<SchemeKind>().unwrap(), k);
        }
    }

    #[test]
    fn born_noise_has_binomial_spread() {
        // d = 16, shots = d^2 / 9 gives a per-observable standard deviation
        // of at most 1/sqrt(shots) ~ 3/d.
        let d = 16usize;
        let shots = ((d * d) as f64 / 9.0).round() as u64;
        let rho = random_rank_r_state(d, 1, 8).unwrap();
        let s = draw_uniform(4, 200, false, 5).unwrap();
        let exact = measure(&rho, &s, NoiseModel::Exact, 0).unwrap();
        let mut sq = 0.0;
        let mut want = 0.0;
        let mut count = 0usize;
        let trials = 200;
        for t in 0..trials {
            let rec = measure(&rho, &s, NoiseModel::Born { shots }, t).unwrap();
            for ((v, e), p) in rec.values().iter().zip(exact.values()).zip(s.labels()) {
                if !p.is_identity() {
                    sq += (v - e).powi(2);
                    want += (1.0 - e * e) / shots as f64;
                    count += 1;
                }
            }
            assert!(rec.values().iter().all(|v| v.abs() <= 1.0));
        }
        assert!((sq / want - 1.0).abs() < 0.05, "ratio {}", sq / want);
        assert!((sq / count as f64).sqrt() <= 3.0 / d as f64);
    }

    #[test]
    fn full_scheme_reproduces_matrix() {
        let s = draw_uniform(3, 64, false, 1).unwrap();
        let rho = random_rank_r_state(8, 3, 2).unwrap();
        let r = sampling_op_apply(&s, rho.matrix()).unwrap().to_dense();
        assert!(linalg::frobenius(&(r - rho.matrix())) < 1e-12);
    }

    #[test]
    fn hybrid_sampling_is_sparse() {
        let s = draw_hybrid(6, 5, 3).unwrap();
        let rho = random_rank_r_state(64, 3, 2).unwrap();
        let out = sampling_op_apply(&s, rho.matrix()).unwrap();
        assert!(matches!(out, SampledOperator::Sparse(_)));
        assert!(out.nnz() <= 5 * 64);
        let dense = out.to_dense();
        let nonzero = dense.iter().filter(|z| z.norm() > 0.0).count();
        assert!(nonzero <= 5 * 64);
    }

    #[test]
    fn sampling_operator_is_self_adjoint() {
        let s = draw_uniform(3, 20, true, 7).unwrap();
        let a = random_rank_r_state(8, 3, 1).unwrap().into_matrix();
        let b = random_rank_r_state(8, 2, 2).unwrap().into_matrix();
        let ra = sampling_op_apply(&s, &a).unwrap().to_dense();
        let rb = sampling_op_apply(&s, &b).unwrap().to_dense();
        assert!((linalg::inner(&a, &rb) - linalg::inner(&ra, &b)).norm() < 1e-10);
        assert!(linalg::inner(&a, &ra).re >= -1e-12);
    }

    #[test]
    fn scaled_sampling_operator_is_idempotent() {
        for seed in 0..5 {
            let m = 20;
            let s = draw_uniform(3, m, false, seed).unwrap();
            let a = random_rank_r_state(8, 4, seed + 10).unwrap().into_matrix();
            let scale = C64::new(m as f64 / 64.0, 0.0);
            let once = sampling_op_apply(&s, &a).unwrap().to_dense() * scale;
            let twice = sampling_op_apply(&s, &once).unwrap().to_dense() * scale;
            assert!(linalg::frobenius(&(twice - &once)) < 1e-12);
        }
    }
}
