//! Command dispatch for the command-line tool.

pub mod config;
pub mod export;

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::acceptance::{run_all, Context};
use crate::curves::{CurveProblem, LimitSpectralGraph};
use crate::error::Error;
use crate::oracle::find_eigenvalues_with;
use crate::poly::turning_points;
use crate::quantize::quantize_along_curve;
use crate::stokes::trace_graph_with;

pub use config::{emit_config, parse_config, ConfigError, RunConfig};
use export::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Graph,
    Curves,
    SpectralSet,
    Quantize,
    Oracle,
    Validate,
    Plot,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerics(#[from] Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} acceptance criteria failed")]
    Criteria(usize),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Criteria(_) => EXIT_VALIDATION,
            RunError::Numerics(e) if e.is_validation() => EXIT_VALIDATION,
            RunError::Numerics(_) | RunError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: Command,
    status: &'a str,
    exit_code: i32,
    artifacts: &'a [PathBuf],
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

/// Artifacts written so far, recorded in the manifest whatever the outcome.
struct Writer {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_csv(&path, rows)?;
        self.written.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }

    fn manifest(&self, command: Command, result: &Result<(), RunError>) -> std::io::Result<()> {
        let exit_code = result.as_ref().map_or_else(RunError::exit_code, |_| EXIT_OK);
        let m = Manifest {
            command,
            status: if result.is_ok() { "ok" } else { "error" },
            exit_code,
            artifacts: &self.written,
            error: result.as_ref().err().map(|e| e.to_string()),
        };
        fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&m).expect("manifest is serializable"),
        )
    }
}

/// Runs `cmd`, writing artifacts and a manifest into the output directory.
/// Returns the process exit status.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> i32 {
    let mut w = match Writer::new(&cfg.out) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", cfg.out.display());
            return EXIT_NUMERICAL;
        }
    };
    let result = dispatch(cmd, cfg, &mut w);
    if let Err(e) = w.manifest(cmd, &result) {
        eprintln!("error: cannot write manifest: {e}");
    }
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, cfg: &RunConfig, w: &mut Writer) -> Result<(), RunError> {
    cfg.validate()?;
    match cmd {
        Command::Graph => graph(cfg, w),
        Command::Curves => {
            let (_, g) = limit_graph(cfg)?;
            w.csv("curves.csv", &curve_rows(&g.candidates))?;
            w.text("curves.svg", &domain_svg(cfg, &g.candidates, &[], &[])?)
        }
        Command::SpectralSet => {
            let (_, g) = limit_graph(cfg)?;
            w.csv("spectral_set.csv", &curve_rows(&g.curves))?;
            w.text("spectral_set.svg", &domain_svg(cfg, &g.curves, &[], &[])?)
        }
        Command::Quantize => {
            let (cp, g) = limit_graph(cfg)?;
            let rows = quantize_rows(cfg, &cp, &g)?;
            w.csv("quantize.csv", &rows)
        }
        Command::Oracle => {
            let eig = oracle(cfg)?;
            w.csv("oracle.csv", &oracle_rows(&eig))
        }
        Command::Validate => {
            let results = run_all(&Context::default());
            let mut report = String::new();
            for r in &results {
                println!("{}", r.line());
                report.push_str(&r.line());
                report.push('\n');
            }
            w.text("validate.txt", &report)?;
            match results.iter().filter(|r| !r.passed).count() {
                0 => Ok(()),
                n => Err(RunError::Criteria(n)),
            }
        }
        Command::Plot => {
            let (cp, g) = limit_graph(cfg)?;
            let eig: Vec<Complex64> = if cfg.k.is_empty() {
                Vec::new()
            } else {
                oracle(cfg)?.iter().map(|e| e.lambda).collect()
            };
            let est: Vec<Complex64> = quantize_rows(cfg, &cp, &g)?
                .iter()
                .map(|r| Complex64::new(r.re_lambda, r.im_lambda))
                .collect();
            w.text("plot.svg", &domain_svg(cfg, &g.candidates, &eig, &est)?)
        }
    }
}

fn graph(cfg: &RunConfig, w: &mut Writer) -> Result<(), RunError> {
    let lambda = cfg
        .lambda
        .ok_or_else(|| ConfigError::Validation("the graph command needs --lambda".into()))?;
    let p = cfg.potential();
    let eps_tp = cfg.tolerances.eps_tp.unwrap_or(crate::poly::DEFAULT_EPS_TP);
    let g = trace_graph_with(&p, turning_points(&p, lambda, eps_tp)?, &cfg.curve_options().trace)?;
    w.csv("graph.csv", &graph_rows(&g))?;
    w.text("graph.svg", &graph_svg(&g))
}

fn limit_graph(cfg: &RunConfig) -> Result<(CurveProblem, LimitSpectralGraph), RunError> {
    let cp = CurveProblem::new(cfg.potential(), cfg.a, cfg.b, cfg.parameter_domain()?, cfg.curve_options())?;
    let g = cp.assemble()?;
    Ok((cp, g))
}

fn quantize_rows(cfg: &RunConfig, cp: &CurveProblem, g: &LimitSpectralGraph) -> Result<Vec<EstimateRow>, RunError> {
    let opts = cfg.quantize_options();
    let mut rows = Vec::new();
    for &k in &cfg.k {
        for (id, curve) in g.curves.iter().enumerate() {
            let out = quantize_along_curve(cp, curve, k, &opts)?;
            for (m, e) in &out.failures {
                eprintln!("warning: curve {id}, m = {m}: {e}");
            }
            rows.extend(estimate_rows(id, curve.kind.name(), &out.estimates));
        }
    }
    Ok(rows)
}

fn oracle(cfg: &RunConfig) -> Result<Vec<crate::oracle::OracleEigenvalue>, RunError> {
    if cfg.k.is_empty() {
        return Err(ConfigError::Validation("the oracle needs at least one k".into()).into());
    }
    let region = cfg.oracle_domain()?;
    let mut all = Vec::new();
    for &k in &cfg.k {
        let report = find_eigenvalues_with(&cfg.problem(k)?, &region, cfg.cells(), &cfg.oracle_options())?;
        for z in &report.unresolved {
            eprintln!("warning: {}", Error::WindingUnresolved(*z));
        }
        all.extend(report.eigenvalues);
    }
    Ok(all)
}

fn domain_svg(cfg: &RunConfig, curves: &[crate::curves::SpectralCurve], eig: &[Complex64], est: &[Complex64]) -> Result<String, RunError> {
    let d = cfg.parameter_domain()?;
    Ok(curves_svg(d.lower_left, d.upper_right, curves, eig, est))
}
