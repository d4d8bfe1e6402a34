//! Seeded experiments: parameter sweeps, the trapped-ion emulation and the
//! rank scan, plus the file formats they read and write.
//!
//! Every random quantity of a sweep row is drawn from a child seed derived
//! from `(master seed, m, trial, stage)` by [`child_seed`], so a row can be
//! recomputed from the configuration and its trial index alone, and rows can
//! be evaluated in any order or concurrently.

pub mod config;
pub mod formats;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certify::{certificate, PurityCertificate};
use crate::error::{invalid, Result, TomoError};
use crate::pauli::{label_count, DENSE_QUBIT_LIMIT};
use crate::sampling::{draw_hybrid, draw_uniform, measure, MeasurementRecord, NoiseModel, SchemeKind};
use crate::solver::{psd_audit, svt_solve, SolverConfig, SolverPath, SolverResult};
use crate::states::{
    best_rank_r, depolarize, fidelity, random_rank_r_state, state_from_profile, trace_distance, DensityMatrix,
    SpectrumProfile,
};

/// Stage tags mixed into [`child_seed`].
pub mod stage {
    pub const STATE: u64 = 1;
    pub const SCHEME: u64 = 2;
    pub const MEASURE: u64 = 3;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one stage of one sweep row: SplitMix64 folded over
/// `master, m, trial, stage` in that order.
pub fn child_seed(master: u64, m: u64, trial: u64, stage: u64) -> u64 {
    [m, trial, stage]
        .into_iter()
        .fold(splitmix64(master), |h, x| splitmix64(h ^ x))
}

/// How the solver's tolerance band is chosen for a record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandPolicy {
    /// Three times the largest reported error bar (zero for exact data).
    Auto,
    Fixed(f64),
}

/// Which eigen path the solver uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathPolicy {
    /// Sparse for hybrid records, dense otherwise.
    Auto,
    Fixed(SolverPath),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// `delta_band` and `path` of `base` are replaced by the policies below.
    pub base: SolverConfig,
    pub band: BandPolicy,
    pub path: PathPolicy,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            base: SolverConfig::default(),
            band: BandPolicy::Auto,
            path: PathPolicy::Auto,
        }
    }
}

impl SolverSettings {
    /// The concrete configuration for `record`.
    pub fn resolve(&self, record: &MeasurementRecord) -> SolverConfig {
        let delta_band = match self.band {
            BandPolicy::Auto => 3.0 * record.max_stderr(),
            BandPolicy::Fixed(x) => x,
        };
        let path = match self.path {
            PathPolicy::Auto if record.scheme().kind() == SchemeKind::Hybrid => SolverPath::Sparse,
            PathPolicy::Auto => SolverPath::Dense,
            PathPolicy::Fixed(p) => p,
        };
        SolverConfig {
            delta_band,
            path,
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyParams {
    pub delta2: f64,
    pub mu: f64,
}

/// A seeded sweep over measurement counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: u32,
    pub r: usize,
    pub gamma: f64,
    pub noise: NoiseModel,
    pub scheme: SchemeKind,
    /// Label counts, or mask counts `s` for hybrid schemes.
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub solver: SolverSettings,
    pub certify: Option<CertifyParams>,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// Number of measured labels for an entry of `m_values`.
    pub fn label_count_for(&self, m_value: usize) -> usize {
        match self.scheme {
            SchemeKind::Hybrid => m_value * self.dim(),
            _ => m_value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > DENSE_QUBIT_LIMIT {
            return invalid(format!("n must lie in 1..={DENSE_QUBIT_LIMIT}, got {}", self.n));
        }
        let d = self.dim();
        if self.r == 0 || self.r > d {
            return invalid(format!("r must lie in 1..={d}, got {}", self.r));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return invalid(format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        self.noise.validate()?;
        if self.m_values.is_empty() {
            return invalid("m_values is empty");
        }
        let cap = match self.scheme {
            SchemeKind::Hybrid => d as u64,
            SchemeKind::UniformWithoutReplacement => label_count(self.n),
            SchemeKind::UniformWithReplacement => u64::MAX,
        };
        if let Some(m) = self.m_values.iter().find(|&&m| m == 0 || m as u64 > cap) {
            return invalid(format!("m value {m} out of range 1..={cap} for a {} scheme", self.scheme));
        }
        if self.trials == 0 {
            return invalid("trials must be at least 1");
        }
        SolverConfig {
            delta_band: 0.0,
            ..self.solver.base.clone()
        }
        .validate(d)?;
        if let BandPolicy::Fixed(x) = self.solver.band {
            if !(x >= 0.0 && x.is_finite()) {
                return invalid(format!("delta_band must be non-negative, got {x}"));
            }
        }
        if let Some(c) = &self.certify {
            if !(c.delta2 >= 0.0 && c.delta2.is_finite()) || !(c.mu > 1.0 && c.mu.is_finite()) {
                return invalid("certify needs delta2 >= 0 and mu > 1");
            }
        }
        Ok(())
    }
}

/// Outcome status of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One line of a sweep CSV. Metric fields are empty for failed rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: u32,
    pub r: usize,
    pub gamma: f64,
    pub noise: String,
    pub scheme: String,
    pub seed: u64,
    pub trial: usize,
    pub m: usize,
    /// Hybrid mask count.
    pub s: Option<usize>,
    /// `m / (d r log2(d)^2)`
    pub m_scaled: f64,
    pub status: RowStatus,
    pub reason: String,
    pub fidelity: Option<f64>,
    pub trace_distance: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    /// Only filled when timing is requested, so CSVs stay reproducible.
    pub wall_time_seconds: Option<f64>,
    pub max_residual: Option<f64>,
    pub delta_band: Option<f64>,
    pub solver_path: Option<String>,
    pub rank: Option<usize>,
    pub negative_mass: Option<f64>,
    pub psd_audit: Option<bool>,
    pub cert_estimate: Option<f64>,
    pub cert_purity_lower: Option<f64>,
    pub cert_t: Option<f64>,
    pub cert_confidence: Option<f64>,
    pub cert_delta1_bound: Option<f64>,
    pub cert_valid: Option<bool>,
}

impl ResultRow {
    fn skeleton(n: u32, r: usize, gamma: f64, noise: NoiseModel, scheme: SchemeKind, seed: u64) -> Self {
        Self {
            n,
            r,
            gamma,
            noise: noise.to_string(),
            scheme: scheme.to_string(),
            seed,
            trial: 0,
            m: 0,
            s: None,
            m_scaled: 0.0,
            status: RowStatus::Ok,
            reason: String::new(),
            fidelity: None,
            trace_distance: None,
            converged: None,
            iterations: None,
            wall_time_seconds: None,
            max_residual: None,
            delta_band: None,
            solver_path: None,
            rank: None,
            negative_mass: None,
            psd_audit: None,
            cert_estimate: None,
            cert_purity_lower: None,
            cert_t: None,
            cert_confidence: None,
            cert_delta1_bound: None,
            cert_valid: None,
        }
    }

    fn fill_solve(&mut self, cfg: &SolverConfig, res: &SolverResult, seconds: f64) {
        self.converged = Some(res.converged);
        self.iterations = Some(res.iterations);
        self.wall_time_seconds = Some(seconds);
        self.max_residual = Some(res.max_residual);
        self.delta_band = Some(cfg.delta_band);
        self.solver_path = Some(cfg.path.to_string());
        self.rank = Some(res.rank);
        self.negative_mass = Some(res.negative_mass);
    }

    fn fill_certificate(&mut self, c: &PurityCertificate) {
        self.cert_estimate = Some(c.estimate);
        self.cert_purity_lower = Some(c.purity_lower);
        self.cert_t = Some(c.t);
        self.cert_confidence = Some(c.confidence);
        self.cert_delta1_bound = c.delta1_bound;
        self.cert_valid = Some(c.valid);
    }

    fn fail(&mut self, e: &TomoError) {
        let mut failed = Self::skeleton(self.n, self.r, self.gamma, NoiseModel::Exact, SchemeKind::Hybrid, self.seed);
        failed.noise = std::mem::take(&mut self.noise);
        failed.scheme = std::mem::take(&mut self.scheme);
        failed.trial = self.trial;
        failed.m = self.m;
        failed.s = self.s;
        failed.m_scaled = self.m_scaled;
        failed.status = RowStatus::Failed;
        failed.reason = e.to_string();
        *self = failed;
    }

    /// Rejects rows that would serialize a non-finite number or an
    /// out-of-range metric.
    pub fn validate(&self) -> Result<()> {
        let floats = [
            ("gamma", Some(self.gamma)),
            ("m_scaled", Some(self.m_scaled)),
            ("fidelity", self.fidelity),
            ("trace_distance", self.trace_distance),
            ("wall_time_seconds", self.wall_time_seconds),
            ("max_residual", self.max_residual),
            ("delta_band", self.delta_band),
            ("negative_mass", self.negative_mass),
            ("cert_estimate", self.cert_estimate),
            ("cert_purity_lower", self.cert_purity_lower),
            ("cert_t", self.cert_t),
            ("cert_confidence", self.cert_confidence),
            ("cert_delta1_bound", self.cert_delta1_bound),
        ];
        for (name, v) in floats {
            if let Some(x) = v {
                if !x.is_finite() {
                    return invalid(format!("row field {name} is not finite"));
                }
            }
        }
        for (name, v) in [("fidelity", self.fidelity), ("trace_distance", self.trace_distance)] {
            if let Some(x) = v {
                if !(0.0..=1.0).contains(&x) {
                    return invalid(format!("row field {name} = {x} outside [0, 1]"));
                }
            }
        }
        if self.status == RowStatus::Ok && (self.fidelity.is_none() || self.trace_distance.is_none()) {
            return invalid("ok row without metrics");
        }
        Ok(())
    }
}

fn scaled_m(m: usize, d: usize, r: usize) -> f64 {
    let log = (d as f64).log2();
    if log == 0.0 {
        return m as f64 / (d * r) as f64;
    }
    m as f64 / (d as f64 * r as f64 * log * log)
}

/// Execution options that do not change the results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub workers: usize,
    /// Record wall-clock solve times in the rows.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timing: false,
        }
    }
}

/// Everything a row computed, for callers that need more than the CSV.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub row: ResultRow,
    pub truth: Option<DensityMatrix>,
    pub result: Option<SolverResult>,
}

/// Evaluates one `(m, trial)` point of a sweep. Module errors are turned into
/// a failed row.
pub fn run_trial(cfg: &ExperimentConfig, m_value: usize, trial: usize, timing: bool) -> TrialOutcome {
    let d = cfg.dim();
    let m = cfg.label_count_for(m_value);
    let mut row = ResultRow::skeleton(cfg.n, cfg.r, cfg.gamma, cfg.noise, cfg.scheme, cfg.seed);
    row.trial = trial;
    row.m = m;
    row.s = (cfg.scheme == SchemeKind::Hybrid).then_some(m_value);
    row.m_scaled = scaled_m(m, d, cfg.r);

    let seed = |tag| child_seed(cfg.seed, m as u64, trial as u64, tag);
    let mut attempt = || -> Result<(DensityMatrix, SolverResult)> {
        let pure = random_rank_r_state(d, cfg.r, seed(stage::STATE))?;
        let truth = depolarize(&pure, cfg.gamma)?;
        let scheme = match cfg.scheme {
            SchemeKind::Hybrid => draw_hybrid(cfg.n, m_value, seed(stage::SCHEME))?,
            kind => draw_uniform(
                cfg.n,
                m_value,
                kind == SchemeKind::UniformWithReplacement,
                seed(stage::SCHEME),
            )?,
        };
        let record = measure(&truth, &scheme, cfg.noise, seed(stage::MEASURE))?;
        let solver_cfg = cfg.solver.resolve(&record);
        let start = Instant::now();
        let res = svt_solve(&record, &solver_cfg)?;
        let seconds = start.elapsed().as_secs_f64();
        row.fill_solve(&solver_cfg, &res, seconds);
        if !timing {
            row.wall_time_seconds = None;
        }
        row.fidelity = Some(fidelity(&res.sigma_state, &truth)?);
        row.trace_distance = Some(trace_distance(&res.sigma_state, &truth)?);
        row.psd_audit = Some(psd_audit(&res, &truth)?.holds);
        if let Some(c) = &cfg.certify {
            if cfg.scheme.is_uniform() {
                let top = res.sigma_state.eigen().values[0];
                row.fill_certificate(&certificate(&record, c.delta2, c.mu, Some(top))?);
            }
        }
        Ok((truth, res))
    };
    match attempt().and_then(|out| row.validate().map(|_| out)) {
        Ok((truth, res)) => TrialOutcome {
            row,
            truth: Some(truth),
            result: Some(res),
        },
        Err(e) => {
            log::warn!("row m={m} trial={trial} failed: {e}");
            row.fail(&e);
            TrialOutcome {
                row,
                truth: None,
                result: None,
            }
        }
    }
}

/// Runs every `(m, trial)` point, handing rows to `sink` in canonical order
/// (ascending `m`, then trial) regardless of the order in which workers
/// finish them.
pub fn run_sweep_with(
    cfg: &ExperimentConfig,
    opts: RunOptions,
    mut sink: impl FnMut(&ResultRow) -> Result<()>,
) -> Result<()> {
    cfg.validate()?;
    let mut m_values = cfg.m_values.clone();
    m_values.sort_unstable();
    m_values.dedup();
    let jobs: Vec<(usize, usize)> = m_values
        .iter()
        .flat_map(|&m| (0..cfg.trials).map(move |t| (m, t)))
        .collect();
    let workers = opts.workers.clamp(1, jobs.len());
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, ResultRow)>();

    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, jobs) = (&next, &stop, &jobs);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(m, trial)) = jobs.get(k) else { break };
                let row = run_trial(cfg, m, trial, opts.timing).row;
                if tx.send((k, row)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emitted = 0;
        for (k, row) in rx {
            pending.insert(k, row);
            while let Some(row) = pending.remove(&emitted) {
                if let Err(e) = sink(&row) {
                    stop.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                emitted += 1;
            }
        }
        Ok(())
    })
}

/// Collects the rows of [`run_sweep_with`] using default options.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    run_sweep_with(cfg, RunOptions::default(), |r| {
        rows.push(r.clone());
        Ok(())
    })?;
    Ok(rows)
}

/// Writes rows as RFC 4180 CSV with a header of the [`ResultRow`] field
/// names.
pub struct CsvSink<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(w: W) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(w),
        }
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<()> {
        row.validate()?;
        self.inner.serialize(row).map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| TomoError::Io(std::io::Error::other(e.to_string())))
    }
}

fn csv_err(e: csv::Error) -> TomoError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TomoError::Io(io),
        other => TomoError::Format(format!("csv: {other:?}")),
    }
}

/// Reads rows written by [`CsvSink`].
pub fn read_rows<R: std::io::Read>(r: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(csv_err))
        .collect()
}

/// A spectrum with 99% of the weight on 11 eigenvalues, top-3 weight 0.905
/// and a flat tail, standing in for the trapped-ion W state.
pub fn ion_profile(d: usize) -> Result<SpectrumProfile> {
    const HEAD: [f64; 11] = [0.80, 0.07, 0.035, 0.02, 0.016, 0.013, 0.011, 0.009, 0.007, 0.005, 0.004];
    SpectrumProfile::with_flat_tail(d, &HEAD)
}

/// Parameters of [`run_experimental_emulation`].
#[derive(Debug, Clone)]
pub struct EmulationSpec {
    pub profile: SpectrumProfile,
    /// Fraction of all `d^2` labels measured, in `(0, 1]`.
    pub fraction: f64,
    /// Per-observable standard error; zero means exact values.
    pub stderr_target: f64,
    pub r_approx: usize,
    pub seed: u64,
    pub solver: SolverSettings,
}

/// Emulates tomography of an approximately low-rank experimental state:
/// `floor(fraction d^2)` uniform labels without replacement, binomial noise
/// with `ceil(1 / stderr_target^2)` shots, and the fidelity of the best
/// rank-`r_approx` truncation of the reconstruction against the true state.
pub fn run_experimental_emulation(spec: &EmulationSpec, timing: bool) -> Result<TrialOutcome> {
    let d = spec.profile.dim();
    if !d.is_power_of_two() || d < 2 {
        return invalid(format!("profile dimension {d} is not a power of two"));
    }
    let n = d.trailing_zeros();
    if !(spec.fraction > 0.0 && spec.fraction <= 1.0) {
        return invalid(format!("fraction must lie in (0, 1], got {}", spec.fraction));
    }
    if !(spec.stderr_target >= 0.0 && spec.stderr_target.is_finite()) {
        return invalid(format!("stderr target must be non-negative, got {}", spec.stderr_target));
    }
    if spec.r_approx == 0 || spec.r_approx > d {
        return invalid(format!("r_approx must lie in 1..={d}"));
    }
    let noise = if spec.stderr_target == 0.0 {
        NoiseModel::Exact
    } else {
        NoiseModel::Born {
            shots: (1.0 / (spec.stderr_target * spec.stderr_target)).ceil() as u64,
        }
    };
    let m = ((spec.fraction * (d * d) as f64).floor() as usize).max(1);
    let seed = |tag| child_seed(spec.seed, m as u64, 0, tag);
    let mut row = ResultRow::skeleton(n, spec.r_approx, 0.0, noise, SchemeKind::UniformWithoutReplacement, spec.seed);
    row.m = m;
    row.m_scaled = scaled_m(m, d, spec.r_approx);

    let truth = state_from_profile(&spec.profile, seed(stage::STATE))?;
    let scheme = draw_uniform(n, m, false, seed(stage::SCHEME))?;
    let record = measure(&truth, &scheme, noise, seed(stage::MEASURE))?;
    let solver_cfg = spec.solver.resolve(&record);
    let start = Instant::now();
    let res = svt_solve(&record, &solver_cfg)?;
    let seconds = start.elapsed().as_secs_f64();
    row.fill_solve(&solver_cfg, &res, seconds);
    if !timing {
        row.wall_time_seconds = None;
    }
    let approx = best_rank_r(&res.sigma_state, spec.r_approx)?;
    row.fidelity = Some(fidelity(&approx, &truth)?);
    row.trace_distance = Some(trace_distance(&approx, &truth)?);
    row.psd_audit = Some(psd_audit(&res, &truth)?.holds);
    row.validate()?;
    Ok(TrialOutcome {
        row,
        truth: Some(truth),
        result: Some(res),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankScanStep {
    pub m: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct RankScan {
    pub steps: Vec<RankScanStep>,
    /// Smallest scheduled `m` whose solve converged.
    pub first_converged: Option<usize>,
    pub solution: Option<SolverResult>,
    /// False if a solve failed after a smaller `m` had converged.
    pub monotone: bool,
}

/// Solves the record prefixes of length `m` for every `m` in the increasing
/// `schedule`. Too few measurements for the rank of the state show up as
/// solves that do not converge.
pub fn rank_scan(record: &MeasurementRecord, schedule: &[usize], settings: &SolverSettings) -> Result<RankScan> {
    if schedule.is_empty() {
        return invalid("rank scan needs a non-empty schedule");
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("rank scan schedule must be strictly increasing");
    }
    if schedule[schedule.len() - 1] > record.len() {
        return invalid(format!(
            "schedule reaches m = {} but the record has {} rows",
            schedule[schedule.len() - 1],
            record.len()
        ));
    }
    let mut steps = Vec::with_capacity(schedule.len());
    let mut first: Option<(usize, SolverResult)> = None;
    let mut monotone = true;
    for &m in schedule {
        let sub = if m == record.len() { record.clone() } else { record.prefix(m)? };
        let res = svt_solve(&sub, &settings.resolve(&sub))?;
        if first.is_some() && !res.converged {
            monotone = false;
            log::warn!("rank scan: converged at a smaller m but not at m = {m}");
        }
        steps.push(RankScanStep {
            m,
            converged: res.converged,
            iterations: res.iterations,
            max_residual: res.max_residual,
            rank: res.rank,
        });
        if res.converged && first.is_none() {
            first = Some((m, res));
        }
    }
    let (first_converged, solution) = match first {
        Some((m, res)) => (Some(m), Some(res)),
        None => (None, None),
    };
    Ok(RankScan {
        steps,
        first_converged,
        solution,
        monotone,
    })
}

/// Summary written next to a reconstructed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub n: u32,
    pub dim: usize,
    pub m: usize,
    pub scheme: String,
    pub noise: String,
    pub tau: f64,
    pub delta_band: f64,
    pub step: f64,
    pub solver_path: String,
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    pub trace_defect: f64,
    pub rank: usize,
    pub negative_mass: f64,
    pub purity: f64,
    /// Leading eigenvalues of the raw iterate, at most 16.
    pub leading_eigenvalues: Vec<f64>,
}

impl ReconstructionReport {
    pub fn new(record: &MeasurementRecord, cfg: &SolverConfig, res: &SolverResult) -> Self {
        let d = record.dim();
        Self {
            n: record.scheme().qubits(),
            dim: d,
            m: record.len(),
            scheme: record.scheme().kind().to_string(),
            noise: record.noise().to_string(),
            tau: cfg.tau,
            delta_band: cfg.delta_band,
            step: cfg.step_for(d),
            solver_path: cfg.path.to_string(),
            converged: res.converged,
            iterations: res.iterations,
            max_residual: res.max_residual,
            trace_defect: crate::linalg::trace(&res.sigma_raw).re - 1.0,
            rank: res.rank,
            negative_mass: res.negative_mass,
            purity: crate::states::purity(&res.sigma_state),
            leading_eigenvalues: res.spectrum.iter().take(16).copied().collect(),
        }
    }
}

#[cfg(test)]
mod tests;
