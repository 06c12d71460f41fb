use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use qfinder_core::frontend::{emit, parse, read_records, run, OutputFormat, RunConfig};
use qfinder_core::poly::gaussian_binomial;
use qfinder_core::verifier::verify;
use qfinder_core::Mode;

#[derive(Parser)]
#[command(name = "qfinder", version, about = "Derive q-binomial identities from q-hypergeometric ones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Basic,
    Plus,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Latex,
    Text,
    Records,
}

#[derive(clap::Args)]
struct Sampling {
    /// Assignments checked per identity
    #[arg(long, default_value_t = 20)]
    samples: usize,
    /// Parameters are sampled from [-bound, bound]
    #[arg(long, default_value_t = 6)]
    bound: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on an input document
    Derive {
        /// Input document; stdin when omitted
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "basic")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1024)]
        max_regimes: usize,
        /// Node budget per search
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[command(flatten)]
        sampling: Sampling,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        /// Include proof traces in the output
        #[arg(long)]
        trace: bool,
    },
    /// Re-verify every identity in a records file
    Verify {
        /// Records file; stdin when omitted
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Print the expansion of binom(top, bottom) in base q^step
    Expand {
        #[arg(allow_negative_numbers = true)]
        top: i64,
        #[arg(allow_negative_numbers = true)]
        bottom: i64,
        #[arg(long, default_value_t = 1)]
        step: u32,
    },
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

fn derive(input: &Option<PathBuf>, config: RunConfig) -> Result<u8> {
    let text = read_input(input)?;
    let doc = parse(&text).context("parsing input")?;
    let result = run(&doc, &config)?;
    print!("{}", emit(&result, &config));
    let failures = result.failures();
    eprintln!(
        "{} regimes, {} identities, {} failed verification",
        result.regimes.len(),
        result.identities.len(),
        failures
    );
    if result.regimes_truncated {
        eprintln!("warning: more regimes than --max-regimes; the rest were skipped");
    }
    if result.regime_search_exhausted {
        eprintln!("warning: regime search ran out of budget");
    }
    for (i, r) in result.regimes.iter().enumerate() {
        if r.exhausted {
            eprintln!("warning: assembly budget exhausted in regime {} ({})", i + 1, r.constraints.join(", "));
        }
    }
    Ok(result.exit_code() as u8)
}

fn verify_records(input: &Option<PathBuf>, s: &Sampling) -> Result<u8> {
    let text = read_input(input)?;
    let records = read_records(&text).context("reading records")?;
    if records.is_empty() {
        bail!("no records in input");
    }
    let mut failed = 0;
    for r in &records {
        let report = verify(&r.identity, s.samples, s.bound, s.seed);
        let verdict = if report.passed() { "PASS" } else { "FAIL" };
        println!("{verdict} [{}] {}", r.index, r.text);
        for m in &report.mismatches {
            println!("    mismatch at {:?}: lhs {} != rhs {}", m.assignment, m.lhs, m.rhs);
        }
        for (_, e) in &report.errors {
            println!("    error: {e}");
        }
        if !report.passed() {
            failed += 1;
        }
    }
    eprintln!("{} records, {} failed", records.len(), failed);
    Ok(if failed > 0 { 2 } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Derive { input, mode, max_regimes, budget, sampling, format, trace } => {
            let config = RunConfig {
                mode: match mode {
                    ModeArg::Basic => Mode::Basic,
                    ModeArg::Plus => Mode::Plus,
                },
                max_regimes,
                budget,
                samples: sampling.samples,
                bound: sampling.bound,
                seed: sampling.seed,
                format: match format {
                    FormatArg::Latex => OutputFormat::Latex,
                    FormatArg::Text => OutputFormat::Text,
                    FormatArg::Records => OutputFormat::Records,
                },
                trace,
            };
            derive(&input, config)
        }
        Command::Verify { input, sampling } => verify_records(&input, &sampling),
        Command::Expand { top, bottom, step } => {
            if step == 0 {
                Err(anyhow::anyhow!("--step must be positive"))
            } else {
                println!("{}", gaussian_binomial(top, bottom, step));
                Ok(0)
            }
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
