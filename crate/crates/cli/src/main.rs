use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multisect_core::report::{emit_report, Command, Format, PartialConfig};
use multisect_core::{run, RunConfig};

#[derive(Parser)]
#[command(
    name = "multisect",
    version,
    about = "Spectral bounds and exhaustive checks for r-wise intersecting families"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Dispatch to the applicable spectral bound
    Bound(Flags),
    /// Exhaustive maximum over monotone families, cross-intersecting tuples, or a census
    Oracle(Flags),
    /// p-biased Fourier expansion of a named family
    Fourier(Flags),
    /// Stability check of one family, or a census with the tau-inequality
    Stability(Flags),
    /// Run the full verification suite
    Verify(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON config file; command-line flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    /// A uniform bias or a comma-separated list, e.g. 0.6,0.3,0.2 or 3/5
    #[arg(long)]
    p: Option<String>,
    /// Exact rational arithmetic
    #[arg(long)]
    rational: bool,
    /// eps of the finite r-wise construction (r >= 4)
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    ks_slack: Option<f64>,
    #[arg(long)]
    eps_p: Option<f64>,
    /// Census of families with p - mu(F) in [0, E]
    #[arg(long)]
    eps_max: Option<String>,
    /// Cross-intersecting tuples instead of single families
    #[arg(long)]
    cross: bool,
    /// star:I, co-star:I, majority:K:M, brace-daykin, ak:I, near-star-3, near-star-2, hex:DIGITS
    #[arg(long)]
    family: Option<String>,
    /// Replace every base tensor by these weight classes (comma-separated)
    #[arg(long)]
    base: Option<String>,
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn partial(command: Command, f: Flags) -> Result<PartialConfig, String> {
    let file = match &f.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            PartialConfig::from_json(&text).map_err(|e| e.to_string())?
        }
        None => PartialConfig::default(),
    };
    let cli = PartialConfig {
        command: Some(command),
        n: f.n,
        r: f.r,
        p: f.p,
        rational: f.rational.then_some(true),
        eps: f.eps,
        ks_slack: f.ks_slack,
        eps_p: f.eps_p,
        eps_max: f.eps_max,
        cross: f.cross.then_some(true),
        family: f.family,
        format: f.format.map(|s| {
            if s == "csv" {
                Format::Csv
            } else {
                Format::Json
            }
        }),
        out: f.out,
        base_override: f
            .base
            .map(|b| b.split(',').map(|c| c.trim().to_string()).collect()),
    };
    Ok(cli.or(file))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Sub::Bound(f) => (Command::Bound, f),
        Sub::Oracle(f) => (Command::Oracle, f),
        Sub::Fourier(f) => (Command::Fourier, f),
        Sub::Stability(f) => (Command::Stability, f),
        Sub::Verify(f) => (Command::Verify, f),
    };
    let usage = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    };
    let config = match partial(command, flags)
        .and_then(|c| RunConfig::resolve(c).map_err(|e| e.to_string()))
    {
        Ok(c) => c,
        Err(e) => return usage(e),
    };
    let output = match run(&config) {
        Ok(o) => o,
        Err(e) => return usage(e.to_string()),
    };
    match emit_report(&output, &config) {
        Ok(Some(text)) => print!("{text}"),
        Ok(None) => {}
        Err(e) => return usage(e.to_string()),
    }
    for w in &output.failures {
        println!("{}", serde_json::to_string(w).expect("witness serializes"));
    }
    ExitCode::from(output.exit_code() as u8)
}
