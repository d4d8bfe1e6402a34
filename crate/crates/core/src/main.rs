use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cstomo::certify::certificate;
use cstomo::harness::config::{parse_config, parse_noise};
use cstomo::harness::formats::{read_mrec, write_dmat, write_mrec};
use cstomo::harness::{
    ion_profile, rank_scan, run_experimental_emulation, run_sweep_with, BandPolicy, CsvSink, EmulationSpec,
    PathPolicy, ReconstructionReport, RunOptions, SolverSettings,
};
use cstomo::sampling::{draw_hybrid, draw_uniform, measure, MeasurementRecord, SchemeKind};
use cstomo::solver::{svt_solve, SolverConfig};
use cstomo::states::{depolarize, random_rank_r_state};
use cstomo::{Result, TomoError};

const EXIT_USAGE: u8 = 1;
const EXIT_FORMAT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "cstomo", version, about = "Compressed-sensing tomography from random Pauli expectation values")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded sweep described by a config file and write CSV rows.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Fill the wall_time_seconds column (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Simulate a measurement record and write it as MREC.
    Simulate {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        r: usize,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// exact, gaussian(<sigma>), gaussian(<x>/d) or born(<shots>).
        #[arg(long, default_value = "exact")]
        noise: String,
        #[arg(long, default_value = "uniform-without")]
        scheme: String,
        /// Label count, or mask count for hybrid schemes.
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// Also write the true state as DMAT.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Reconstruct a state from an MREC file.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        /// Output DMAT file for the PSD-projected state.
        #[arg(long)]
        output: PathBuf,
        /// JSON report (stdout if omitted).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the raw, possibly indefinite iterate as DMAT.
        #[arg(long)]
        raw: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compute a near-purity certificate from an MREC file.
    Certify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta2: f64,
        #[arg(long)]
        mu: f64,
        /// JSON output (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Skip the reconstruction that supplies the top eigenvalue.
        #[arg(long)]
        no_reconstruct: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Emulate tomography of an approximately low-rank trapped-ion state.
    EmulateIon {
        #[arg(long, default_value_t = 8)]
        n: u32,
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        /// Per-observable standard error; `<x>/d` is divided by the dimension.
        #[arg(long, default_value = "3/d")]
        stderr: String,
        #[arg(long, default_value_t = 3)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds to run.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve growing prefixes of a record and report where solves converge.
    RankScan {
        /// MREC input; a synthetic exact record is generated if omitted.
        #[arg(long, conflicts_with_all = ["n", "r"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "r")]
        n: Option<u32>,
        #[arg(long, requires = "n")]
        r: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated, strictly increasing prefix lengths.
        #[arg(long, value_delimiter = ',', required = true)]
        schedule: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value_t = 5.0)]
    tau: f64,
    /// `auto` (3 x largest error bar) or a number.
    #[arg(long, default_value = "auto")]
    delta_band: String,
    /// Dual step; 1.5/d if omitted.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    stop_tol: f64,
    #[arg(long, default_value_t = 8)]
    rank_guess: usize,
    /// `auto`, `dense` or `sparse`.
    #[arg(long, default_value = "auto")]
    path: String,
}

impl SolverArgs {
    fn settings(&self) -> Result<SolverSettings> {
        let band = match self.delta_band.as_str() {
            "auto" => BandPolicy::Auto,
            raw => BandPolicy::Fixed(
                raw.parse()
                    .map_err(|_| TomoError::InvalidInput(format!("bad --delta-band {raw:?}")))?,
            ),
        };
        let path = match self.path.as_str() {
            "auto" => PathPolicy::Auto,
            raw => PathPolicy::Fixed(raw.parse()?),
        };
        Ok(SolverSettings {
            base: SolverConfig {
                tau: self.tau,
                step: self.step,
                max_iter: self.max_iter,
                stop_tol: self.stop_tol,
                rank_guess: self.rank_guess,
                ..SolverConfig::default()
            },
            band,
            path,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_record(path: &Path) -> Result<MeasurementRecord> {
    let file = File::open(path).map_err(|e| TomoError::Format(format!("{}: {e}", path.display())))?;
    read_mrec(file)
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut w = output(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| TomoError::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Sweep {
            config,
            out,
            workers,
            timing,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| TomoError::Format(format!("{}: {e}", config.display())))?;
            let cfg = parse_config(&text)?;
            let mut opts = RunOptions {
                timing,
                ..RunOptions::default()
            };
            if let Some(w) = workers {
                opts.workers = w;
            }
            let mut sink = CsvSink::new(output(out.as_deref())?);
            run_sweep_with(&cfg, opts, |row| {
                log::info!("m={} trial={} fidelity={:?}", row.m, row.trial, row.fidelity);
                sink.write(row)
            })?;
            sink.finish()?.flush()?;
        }
        Command::Simulate {
            n,
            r,
            gamma,
            noise,
            scheme,
            m,
            seed,
            output,
            state,
        } => {
            let d = 1usize << n.min(31);
            let noise = parse_noise(&noise, d).map_err(|e| TomoError::InvalidInput(e.to_string()))?;
            let kind: SchemeKind = scheme.parse()?;
            let truth = depolarize(&random_rank_r_state(d, r, seed)?, gamma)?;
            let scheme = match kind {
                SchemeKind::Hybrid => draw_hybrid(n, m, seed.wrapping_add(1))?,
                k => draw_uniform(n, m, k == SchemeKind::UniformWithReplacement, seed.wrapping_add(1))?,
            };
            let record = measure(&truth, &scheme, noise, seed.wrapping_add(2))?;
            write_mrec(create(&output)?, &record)?;
            if let Some(p) = state {
                write_dmat(create(&p)?, truth.matrix())?;
            }
        }
        Command::Reconstruct {
            input,
            output,
            report,
            raw,
            solver,
        } => {
            let record = load_record(&input)?;
            let cfg = solver.settings()?.resolve(&record);
            let res = svt_solve(&record, &cfg)?;
            write_dmat(create(&output)?, res.sigma_state.matrix())?;
            if let Some(p) = raw {
                write_dmat(create(&p)?, &res.sigma_raw)?;
            }
            write_json(report.as_deref(), &ReconstructionReport::new(&record, &cfg, &res))?;
            if !res.converged {
                log::warn!(
                    "solver stopped after {} iterations with residual {:.3e}",
                    res.iterations,
                    res.max_residual
                );
                return Ok(EXIT_NOT_CONVERGED);
            }
        }
        Command::Certify {
            input,
            delta2,
            mu,
            output,
            no_reconstruct,
            solver,
        } => {
            let record = load_record(&input)?;
            let top = if no_reconstruct {
                None
            } else {
                let res = svt_solve(&record, &solver.settings()?.resolve(&record))?;
                Some(res.sigma_state.eigen().values[0])
            };
            write_json(output.as_deref(), &certificate(&record, delta2, mu, top)?)?;
        }
        Command::EmulateIon {
            n,
            fraction,
            stderr,
            rank,
            seed,
            seeds,
            out,
            timing,
            solver,
        } => {
            if n == 0 || n > cstomo::pauli::DENSE_QUBIT_LIMIT {
                return Err(TomoError::InvalidInput(format!("--n must lie in 1..={}", cstomo::pauli::DENSE_QUBIT_LIMIT)));
            }
            let d = 1usize << n;
            let stderr_target = match stderr.strip_suffix("/d") {
                Some(x) => x.trim().parse::<f64>().map(|x| x / d as f64),
                None => stderr.trim().parse::<f64>(),
            }
            .map_err(|_| TomoError::InvalidInput(format!("bad --stderr {stderr:?}")))?;
            let settings = solver.settings()?;
            let mut sink = CsvSink::new(output(out.as_deref())?);
            for k in 0..seeds {
                let spec = EmulationSpec {
                    profile: ion_profile(d)?,
                    fraction,
                    stderr_target,
                    r_approx: rank,
                    seed: seed.wrapping_add(k),
                    solver: settings.clone(),
                };
                let mut row = run_experimental_emulation(&spec, timing)?.row;
                row.trial = k as usize;
                log::info!("seed {} fidelity {:?}", spec.seed, row.fidelity);
                sink.write(&row)?;
            }
            sink.finish()?.flush()?;
        }
        Command::RankScan {
            input,
            n,
            r,
            seed,
            schedule,
            out,
            solver,
        } => {
            let record = match (input, n, r) {
                (Some(p), _, _) => load_record(&p)?,
                (None, Some(n), Some(r)) => {
                    let d = 1usize << n.min(31);
                    let rho = random_rank_r_state(d, r, seed)?;
                    let m = *schedule.iter().max().unwrap_or(&1);
                    let scheme = draw_uniform(n, m, false, seed.wrapping_add(1))?;
                    measure(&rho, &scheme, cstomo::sampling::NoiseModel::Exact, seed.wrapping_add(2))?
                }
                _ => return Err(TomoError::InvalidInput("rank-scan needs --input or both --n and --r".into())),
            };
            let scan = rank_scan(&record, &schedule, &solver.settings()?)?;
            let mut w = csv::Writer::from_writer(output(out.as_deref())?);
            for step in &scan.steps {
                w.serialize(step).map_err(|e| TomoError::Io(io::Error::other(e.to_string())))?;
            }
            w.flush()?;
            match scan.first_converged {
                Some(m) => eprintln!("first converged at m = {m}"),
                None => eprintln!("no scheduled m converged"),
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                TomoError::Format(_) | TomoError::Io(_) => EXIT_FORMAT,
                _ => EXIT_USAGE,
            })
        }
    }
}
