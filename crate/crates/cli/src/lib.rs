//! `bmcap`: validate channel specs, compute capacities, verify the
//! deterministic-CSIT reduction, export equivalent channels and run coding
//! simulations.
//!
//! Exit codes: 0 success, 1 invalid input, 2 solver did not converge,
//! 3 enumeration or codebook cap exceeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bm_capacity::reduction::{capacity_gm, verify_reduction, ReductionConfig};
use bm_capacity::sim::{CodebookMode, SimulationConfig, Simulator, CSV_HEADER, DEFAULT_WORD_CAP};
use bm_capacity::specfile::{parse_spec, SpecFileError};
use bm_capacity::tuple::fmt_tuple;
use bm_capacity::{
    blahut_arimoto, build_equivalent_channel, validate_spec, BlockChannelSpec, Error, SolverConfig,
    DEFAULT_STRATEGY_CAP,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bmcap", version, about = "Capacity of block-memoryless channels with causal side information")]
struct Cli {
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Stopping tolerance on the capacity bound gap, bits per block
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Largest number of strategies to enumerate
    #[arg(long, global = true, default_value_t = DEFAULT_STRATEGY_CAP)]
    pub cap: u64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output format; each subcommand has its own default
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write results here instead of standard output
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a spec file against the channel invariants
    Validate { spec: PathBuf },
    /// Capacity over causal strategies, bits per channel use
    Capacity { spec: PathBuf },
    /// Per-CSIT capacity formula (n0 = 1, CSIT determined by CSIR)
    GmCapacity { spec: PathBuf },
    /// Compare the strategy capacity with the per-CSIT formula
    VerifyReduction {
        spec: PathBuf,
        /// Random strategy laws for the fixed-law comparison
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Export the equivalent channel matrix
    EquivChannel { spec: PathBuf },
    /// Estimate the block error rate of a random strategy code
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        blocks: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Error-rate table over rates and block counts
    Sweep {
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        rates: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        blocks: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[command(flatten)]
        code: CodeArgs,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct CodeArgs {
    /// Draw a fresh codebook every this many trials
    #[arg(long)]
    resample_every: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WORD_CAP)]
    word_cap: u64,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::CapExceeded { .. } | Error::CodebookTooLarge { .. } => EXIT_CAP,
            _ => EXIT_INVALID,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SpecFileError> for Failure {
    fn from(e: SpecFileError) -> Self {
        Self::invalid(e.to_string())
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let mut buffer = Vec::new();
    let result = dispatch(&cli, &mut buffer, err);
    let status = match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    };
    if !buffer.is_empty() {
        let written = match &cli.run.out {
            Some(path) => std::fs::write(path, &buffer).map_err(|e| format!("cannot write {}: {e}", path.display())),
            None => out.write_all(&buffer).map_err(|e| e.to_string()),
        };
        if let Err(e) = written {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INVALID;
        }
    }
    status
}

fn solver_config(run: &RunConfig) -> Result<SolverConfig, Failure> {
    if !(run.tolerance > 0.0) {
        return Err(Failure::invalid("--tolerance must be positive"));
    }
    if run.cap == 0 {
        return Err(Failure::invalid("--cap must be at least 1"));
    }
    Ok(SolverConfig::default()
        .with_tol(run.tolerance)
        .with_max_iter(run.max_iter)
        .with_strategy_cap(run.cap))
}

fn load(path: &Path) -> Result<BlockChannelSpec, Failure> {
    Ok(parse_spec(path)?)
}

fn json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct CapacityOutput<'a> {
    spec: String,
    n0: usize,
    strategy_count: usize,
    #[serde(flatten)]
    result: &'a bm_capacity::CapacityResult,
}

fn dispatch(cli: &Cli, out: &mut Vec<u8>, err: &mut dyn Write) -> Result<i32, Failure> {
    let run = &cli.run;
    let format = |default: Format| run.format.unwrap_or(default);
    match &cli.command {
        Command::Validate { spec } => {
            // parse_spec already validates; report the invariants either way
            match parse_spec(spec) {
                Ok(s) => {
                    let report = validate_spec(&s);
                    match format(Format::Text) {
                        Format::Json => out.extend(json(&report).bytes()),
                        _ => out.extend(format!("{}: valid\n", spec.display()).bytes()),
                    }
                    Ok(EXIT_OK)
                }
                Err(SpecFileError::Invalid { origin, report }) => {
                    match format(Format::Text) {
                        Format::Json => out.extend(json(&report).bytes()),
                        _ => out.extend(format!("{origin}: invalid\n{report}\n").bytes()),
                    }
                    Ok(EXIT_INVALID)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Capacity { spec: path } => {
            let config = solver_config(run)?;
            let spec = load(path)?;
            let channel = build_equivalent_channel(&spec, config.strategy_cap)?;
            let result = blahut_arimoto(&channel, &config)?;
            match format(Format::Text) {
                Format::Json => out.extend(
                    json(&CapacityOutput {
                        spec: path.display().to_string(),
                        n0: spec.n0(),
                        strategy_count: channel.t_count(),
                        result: &result,
                    })
                    .bytes(),
                ),
                _ => out.extend(
                    format!(
                        "capacity {:.6} bits/use\nstrategies {}\niterations {}\ngap {:e}\nconverged {}\n",
                        result.capacity_bits_per_use,
                        channel.t_count(),
                        result.iterations,
                        result.gap,
                        result.converged
                    )
                    .bytes(),
                ),
            }
            Ok(converged_code(result.converged, err))
        }
        Command::GmCapacity { spec: path } => {
            let config = solver_config(run)?;
            let spec = load(path)?;
            let gm = capacity_gm(&spec, &config)?;
            match format(Format::Text) {
                Format::Json => out.extend(json(&gm).bytes()),
                _ => out.extend(format!("capacity {:.6} bits/use\n", gm.capacity_bits_per_use).bytes()),
            }
            Ok(converged_code(gm.per_csit.iter().all(|p| p.converged), err))
        }
        Command::VerifyReduction { spec: path, samples } => {
            let config = ReductionConfig {
                solver: solver_config(run)?,
                samples: *samples,
                seed: run.seed,
            };
            let spec = load(path)?;
            let report = verify_reduction(&spec, &config)?;
            out.extend(json(&report).bytes());
            Ok(converged_code(report.capacity_bm_converged, err))
        }
        Command::EquivChannel { spec: path } => {
            let spec = load(path)?;
            let channel = build_equivalent_channel(&spec, run.cap)?
                .with_source(path.display().to_string());
            let sp = *channel.spaces();
            let labels: Vec<String> = (0..sp.obs_count())
                .map(|c| {
                    let (y, v) = sp.split_obs(c);
                    format!("y={} v={}", fmt_tuple(&sp.y.decode(y)), fmt_tuple(&sp.v.decode(v)))
                })
                .collect();
            match format(Format::Csv) {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Export<'a> {
                        source: Option<&'a str>,
                        n0: usize,
                        strategy_count: usize,
                        columns: &'a [String],
                        kernel: Vec<&'a [f64]>,
                    }
                    out.extend(
                        json(&Export {
                            source: channel.source(),
                            n0: channel.n0(),
                            strategy_count: channel.t_count(),
                            columns: &labels,
                            kernel: channel.kernel().iter_rows().collect(),
                        })
                        .bytes(),
                    );
                }
                _ => {
                    out.extend(format!("strategy,{}\n", labels.join(",")).bytes());
                    for (t, row) in channel.kernel().iter_rows().enumerate() {
                        let cells: Vec<String> = row.iter().map(|p| p.to_string()).collect();
                        out.extend(format!("{t},{}\n", cells.join(",")).bytes());
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Simulate {
            spec: path,
            rate,
            blocks,
            trials,
            code,
        } => {
            let (sim, converged) = simulator(run, path)?;
            let report = sim.estimate(*rate, *blocks, &sim_config(run, *trials, code)?)?;
            match format(Format::Json) {
                Format::Csv => out.extend(format!("{CSV_HEADER}\n{}\n", report.csv_row()).bytes()),
                Format::Text => out.extend(
                    format!(
                        "rate {} J {} trials {} errors {} p_e {} ci95 [{}, {}]\n",
                        report.rate_bits,
                        report.blocks,
                        report.trials,
                        report.errors,
                        report.p_e_hat,
                        report.ci_95[0],
                        report.ci_95[1]
                    )
                    .bytes(),
                ),
                Format::Json => out.extend(json(&report).bytes()),
            }
            Ok(converged_code(converged, err))
        }
        Command::Sweep {
            spec: path,
            rates,
            blocks,
            trials,
            code,
        } => {
            let (sim, converged) = simulator(run, path)?;
            let config = sim_config(run, *trials, code)?;
            let mut reports = Vec::with_capacity(rates.len() * blocks.len());
            for &rate in rates {
                for &j in blocks {
                    reports.push(sim.estimate(rate, j, &config)?);
                }
            }
            match format(Format::Csv) {
                Format::Json => out.extend(json(&reports).bytes()),
                _ => {
                    out.extend(format!("{CSV_HEADER}\n").bytes());
                    for r in &reports {
                        out.extend(format!("{}\n", r.csv_row()).bytes());
                    }
                }
            }
            Ok(converged_code(converged, err))
        }
    }
}

fn converged_code(converged: bool, err: &mut dyn Write) -> i32 {
    if converged {
        EXIT_OK
    } else {
        let _ = writeln!(err, "warning: capacity solver stopped before reaching the tolerance");
        EXIT_NOT_CONVERGED
    }
}

fn simulator(run: &RunConfig, path: &Path) -> Result<(Simulator, bool), Failure> {
    let config = solver_config(run)?;
    let spec = load(path)?;
    let channel = build_equivalent_channel(&spec, config.strategy_cap)?;
    let result = blahut_arimoto(&channel, &config)?;
    let sim = Simulator::new(&spec, result.optimal_p_t, config.strategy_cap)?;
    Ok((sim, result.converged))
}

fn sim_config(run: &RunConfig, trials: usize, code: &CodeArgs) -> Result<SimulationConfig, Failure> {
    if trials == 0 {
        return Err(Failure::invalid("--trials must be at least 1"));
    }
    let mut config = SimulationConfig::new(trials, run.seed);
    config.word_cap = code.word_cap;
    if let Some(batch) = code.resample_every {
        if batch == 0 {
            return Err(Failure::invalid("--resample-every must be at least 1"));
        }
        config.codebook = CodebookMode::Resampled { batch };
    }
    Ok(config)
}
