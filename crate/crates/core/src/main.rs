use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;

use stokes_spectra::cli::{parse_config, run_command, Command, EXIT_VALIDATION};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Graph,
    Curves,
    SpectralSet,
    Quantize,
    Oracle,
    Validate,
    Plot,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Graph => Command::Graph,
            Cmd::Curves => Command::Curves,
            Cmd::SpectralSet => Command::SpectralSet,
            Cmd::Quantize => Command::Quantize,
            Cmd::Oracle => Command::Oracle,
            Cmd::Validate => Command::Validate,
            Cmd::Plot => Command::Plot,
        }
    }
}

/// Stokes graphs, limit spectral graphs and eigenvalue asymptotics.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    command: Cmd,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter value for `graph`, as RE,IM.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    lambda: Option<Complex64>,
    /// Replaces the list of k values.
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed grid for curve tracing.
    #[arg(long)]
    grid: Option<usize>,
    /// Oracle cells per side.
    #[arg(long)]
    cells: Option<usize>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s.split_once(',').ok_or("expected RE,IM")?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

const DEFAULT_CONFIG: &str = r#"{
  "potential": [[[0, 0], [0, -1]], [[0, 1], [0, 0]]],
  "a": [-1, 0],
  "b": [1, 0],
  "domain": {"lower_left": [-1.2, -3.2], "upper_right": [1.2, 0.6]}
}"#;

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd: Command = args.command.into();
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_VALIDATION as u8);
            }
        },
        // `validate` runs on the built-in model problems.
        None if matches!(cmd, Command::Validate) => DEFAULT_CONFIG.to_string(),
        None => {
            eprintln!("error: --config is required");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    if let Some(l) = args.lambda {
        cfg.lambda = Some(l);
    }
    if let Some(k) = args.k {
        cfg.k = vec![k];
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(g) = args.grid {
        cfg.tolerances.grid_n = Some(g);
    }
    if let Some(c) = args.cells {
        cfg.tolerances.cell_n = Some(c);
    }
    ExitCode::from(run_command(cmd, &cfg) as u8)
}
