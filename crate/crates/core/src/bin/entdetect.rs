//! `entdetect`: volume ratios, parameter sweeps, POVM inspection and
//! single-state checks.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use entdetect::criteria::CriterionId;
use entdetect::estimate::{
    check_state, estimate_ratios, estimate_ratios_with_dump, povm_info, ratios_to_csv,
    sweep_scaled_x, PovmParams, RatioOptions, StateFile, DEFAULT_BATCHES,
};
use entdetect::sampler::{SampleWriter, SamplerConfig};
use entdetect::Error;

#[derive(Parser, Debug)]
#[command(name = "entdetect", version, about = "Entanglement detection by local measurements")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed of the sampler.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Number of sampled states.
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: usize,
    /// Hit-and-run steps discarded per chain [default: 20 (dA dB)^2].
    #[arg(long, global = true)]
    burn_in: Option<usize>,
    /// Steps between emitted states [default: (dA dB)^2].
    #[arg(long, global = true)]
    thinning: Option<usize>,
    /// Independent chains, run in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    chains: usize,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate volume ratios of detected states.
    Ratios {
        #[arg(long, value_parser = parse_dims, default_value = "2,2")]
        dims: (usize, usize),
        /// Comma-separated criterion ids (SIC1/SIC2 accepted as aliases).
        #[arg(long, value_delimiter = ',', default_value = "NPT,LOO,JOINT_PURITY,JOINT_PURITY_FREE")]
        criteria: Vec<CriterionId>,
        /// POVM of subsystem A as N,M,x [default: SIC].
        #[arg(long, value_parser = parse_povm)]
        povm_a: Option<PovmParams>,
        /// POVM of subsystem B as N,M,x [default: SIC].
        #[arg(long, value_parser = parse_povm)]
        povm_b: Option<PovmParams>,
        #[arg(long, default_value_t = DEFAULT_BATCHES)]
        batches: usize,
        /// Write every sampled state to this raw dump file.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Sweep the rescaled purity-free criterion over x̃_A and x̃_B.
    Sweep {
        #[arg(long, value_parser = parse_dims, default_value = "2,3")]
        dims: (usize, usize),
        #[arg(long, value_delimiter = ',', required = true)]
        xa: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        xb: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_BATCHES)]
        batches: usize,
    },
    /// Describe an (N,M)-POVM family (always JSON).
    PovmInfo {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        x: f64,
    },
    /// Evaluate criteria on a state read from a JSON file (always JSON).
    CheckState {
        state: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "NPT,LOO,POVM_CORR,JOINT_PURITY,JOINT_PURITY_FREE,RESCALED")]
        criteria: Vec<CriterionId>,
        #[arg(long, value_parser = parse_povm)]
        povm_a: Option<PovmParams>,
        #[arg(long, value_parser = parse_povm)]
        povm_b: Option<PovmParams>,
    },
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|e| format!("bad d_A: {e}"))?,
            b.parse().map_err(|e| format!("bad d_B: {e}"))?,
        )),
        _ => Err("expected dA,dB".into()),
    }
}

fn parse_povm(s: &str) -> Result<PovmParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [n, m, x] => Ok(PovmParams {
            n: n.parse().map_err(|e| format!("bad N: {e}"))?,
            m: m.parse().map_err(|e| format!("bad M: {e}"))?,
            x: x.parse().map_err(|e| format!("bad x: {e}"))?,
        }),
        _ => Err("expected N,M,x".into()),
    }
}

fn sampler_config(g: &Global, dims: (usize, usize)) -> SamplerConfig {
    let mut config = SamplerConfig::new(dims, g.seed, g.samples);
    if let Some(b) = g.burn_in {
        config.burn_in = b;
    }
    if let Some(t) = g.thinning {
        config.thinning = t;
    }
    config
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(text.as_bytes())?;
            f.flush()?;
        }
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    let g = &cli.global;
    let text = match cli.command {
        Command::Ratios {
            dims,
            criteria,
            povm_a,
            povm_b,
            batches,
            dump_samples,
        } => {
            let config = sampler_config(g, dims);
            let options = RatioOptions {
                criteria,
                povm_a,
                povm_b,
                chains: g.chains,
                batches,
            };
            let estimates = match dump_samples {
                Some(path) => {
                    let mut writer = SampleWriter::new(BufWriter::new(File::create(path)?), dims)?;
                    let est = estimate_ratios_with_dump(&config, &options, &mut writer)?;
                    writer.into_inner()?;
                    est
                }
                None => estimate_ratios(&config, &options)?,
            };
            match g.format {
                Format::Csv => ratios_to_csv(&estimates),
                Format::Json => to_json(&estimates)?,
            }
        }
        Command::Sweep { dims, xa, xb, batches } => {
            let config = sampler_config(g, dims);
            let result = sweep_scaled_x(&config, &xa, &xb, g.chains, batches)?;
            match g.format {
                Format::Csv => result.to_csv(),
                Format::Json => to_json(&result)?,
            }
        }
        Command::PovmInfo { d, n, m, x } => to_json(&povm_info(d, n, m, x))?,
        Command::CheckState {
            state,
            criteria,
            povm_a,
            povm_b,
        } => {
            let rho = StateFile::parse(&std::fs::read_to_string(state)?)?;
            to_json(&check_state(&rho, &criteria, povm_a, povm_b)?)?
        }
    };
    emit(&g.out, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
