//! Flat `key = value` experiment configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys:
//!
//! | key                  | value                                               |
//! |----------------------|-----------------------------------------------------|
//! | `n`                  | qubits                                              |
//! | `r`                  | rank of the generated state                         |
//! | `gamma`              | depolarizing strength in `[0, 1]`                   |
//! | `noise`              | `exact`, `gaussian(<sigma>)`, `born(<shots>)`; a sigma written `<x>/d` is divided by `2^n` |
//! | `scheme`             | `uniform-with`, `uniform-without` or `hybrid`       |
//! | `m_values`           | comma-separated counts (mask counts `s` for hybrid) |
//! | `trials`             | repetitions per point                               |
//! | `seed`               | master seed                                         |
//! | `solver.tau`         | trace-norm weight                                   |
//! | `solver.delta_band`  | `auto` (3 x largest error bar) or a number          |
//! | `solver.step`        | `auto` (1.5/d) or a number                          |
//! | `solver.max_iter`    | iteration cap                                       |
//! | `solver.rank_guess`  | initial Lanczos target                              |
//! | `solver.stop_tol`    | residual tolerance                                  |
//! | `solver.path`        | `auto`, `dense` or `sparse`                         |
//! | `certify.delta2`     | measurement precision for the certificate           |
//! | `certify.mu`         | confidence parameter (> 1)                          |
//!
//! `n`, `r`, `noise`, `scheme`, `m_values` and `seed` are required; both
//! `certify.*` keys must be given together or not at all.

use std::collections::BTreeMap;
use std::str::FromStr;

use super::{BandPolicy, CertifyParams, ExperimentConfig, PathPolicy, SolverSettings};
use crate::error::{Result, TomoError};
use crate::sampling::NoiseModel;
use crate::solver::SolverConfig;

const KEYS: &[&str] = &[
    "n",
    "r",
    "gamma",
    "noise",
    "scheme",
    "m_values",
    "trials",
    "seed",
    "solver.tau",
    "solver.delta_band",
    "solver.step",
    "solver.max_iter",
    "solver.rank_guess",
    "solver.stop_tol",
    "solver.path",
    "certify.delta2",
    "certify.mu",
];

fn err(msg: impl Into<String>) -> TomoError {
    TomoError::Format(msg.into())
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>().map_err(|e| err(format!("{key}: cannot parse {raw:?}: {e}")))
}

/// Parses a noise tag, resolving a `<x>/d` gaussian sigma against `d`.
pub fn parse_noise(raw: &str, d: usize) -> Result<NoiseModel> {
    let raw = raw.trim();
    if let Some(inner) = raw.strip_prefix("gaussian(").and_then(|s| s.strip_suffix(')')) {
        if let Some(num) = inner.trim().strip_suffix("/d") {
            let x: f64 = parse_value("noise", num.trim())?;
            let model = NoiseModel::Gaussian { sigma: x / d as f64 };
            model.validate().map_err(|e| err(format!("noise: {e}")))?;
            return Ok(model);
        }
    }
    raw.parse::<NoiseModel>().map_err(|e| err(format!("noise: {e}")))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {}: expected `key = value`", k + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(err(format!("line {}: unknown key {key:?}", k + 1)));
        }
        if map.insert(key, value).is_some() {
            return Err(err(format!("line {}: duplicate key {key:?}", k + 1)));
        }
    }
    let required = |key: &str| map.get(key).copied().ok_or_else(|| err(format!("missing key {key:?}")));

    let n: u32 = parse_value("n", required("n")?)?;
    if n == 0 || n > crate::pauli::DENSE_QUBIT_LIMIT {
        return Err(err(format!("n: must lie in 1..={}", crate::pauli::DENSE_QUBIT_LIMIT)));
    }
    let d = 1usize << n;
    let m_values = required("m_values")?
        .split(',')
        .map(|s| parse_value::<usize>("m_values", s.trim()))
        .collect::<Result<Vec<_>>>()?;

    let defaults = SolverConfig::default();
    let get = |key: &str| map.get(key).copied();
    let band = match get("solver.delta_band") {
        None | Some("auto") => BandPolicy::Auto,
        Some(raw) => BandPolicy::Fixed(parse_value("solver.delta_band", raw)?),
    };
    let path = match get("solver.path") {
        None | Some("auto") => PathPolicy::Auto,
        Some(raw) => PathPolicy::Fixed(parse_value("solver.path", raw)?),
    };
    let step = match get("solver.step") {
        None | Some("auto") => None,
        Some(raw) => Some(parse_value("solver.step", raw)?),
    };
    let base = SolverConfig {
        tau: get("solver.tau").map(|v| parse_value("solver.tau", v)).transpose()?.unwrap_or(defaults.tau),
        step,
        max_iter: get("solver.max_iter")
            .map(|v| parse_value("solver.max_iter", v))
            .transpose()?
            .unwrap_or(defaults.max_iter),
        rank_guess: get("solver.rank_guess")
            .map(|v| parse_value("solver.rank_guess", v))
            .transpose()?
            .unwrap_or(defaults.rank_guess),
        stop_tol: get("solver.stop_tol")
            .map(|v| parse_value("solver.stop_tol", v))
            .transpose()?
            .unwrap_or(defaults.stop_tol),
        ..defaults
    };
    let certify = match (get("certify.delta2"), get("certify.mu")) {
        (None, None) => None,
        (Some(a), Some(b)) => Some(CertifyParams {
            delta2: parse_value("certify.delta2", a)?,
            mu: parse_value("certify.mu", b)?,
        }),
        _ => return Err(err("certify.delta2 and certify.mu must be given together")),
    };

    let cfg = ExperimentConfig {
        n,
        r: parse_value("r", required("r")?)?,
        gamma: get("gamma").map(|v| parse_value("gamma", v)).transpose()?.unwrap_or(0.0),
        noise: parse_noise(required("noise")?, d)?,
        scheme: parse_value("scheme", required("scheme")?)?,
        m_values,
        trials: get("trials").map(|v| parse_value("trials", v)).transpose()?.unwrap_or(5),
        seed: parse_value("seed", required("seed")?)?,
        solver: SolverSettings { base, band, path },
        certify,
    };
    cfg.validate().map_err(|e| err(e.to_string()))?;
    Ok(cfg)
}

/// Inverse of [`parse_config`]; every key is written explicitly.
pub fn render_config(cfg: &ExperimentConfig) -> String {
    let s = &cfg.solver;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("n", cfg.n.to_string());
    put("r", cfg.r.to_string());
    put("gamma", cfg.gamma.to_string());
    put("noise", cfg.noise.to_string());
    put("scheme", cfg.scheme.to_string());
    put(
        "m_values",
        cfg.m_values.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(","),
    );
    put("trials", cfg.trials.to_string());
    put("seed", cfg.seed.to_string());
    put("solver.tau", s.base.tau.to_string());
    put(
        "solver.delta_band",
        match s.band {
            BandPolicy::Auto => "auto".into(),
            BandPolicy::Fixed(x) => x.to_string(),
        },
    );
    put("solver.step", s.base.step.map_or("auto".into(), |x| x.to_string()));
    put("solver.max_iter", s.base.max_iter.to_string());
    put("solver.rank_guess", s.base.rank_guess.to_string());
    put("solver.stop_tol", s.base.stop_tol.to_string());
    put(
        "solver.path",
        match s.path {
            PathPolicy::Auto => "auto".into(),
            PathPolicy::Fixed(p) => p.to_string(),
        },
    );
    if let Some(c) = &cfg.certify {
        put("certify.delta2", c.delta2.to_string());
        put("certify.mu", c.mu.to_string());
    }
    out
}
