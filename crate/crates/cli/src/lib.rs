//! Config-driven runner for decolab scenarios.
//!
//! A scenario file names one of six kinds (`modes`, `friedrichs`, `omnes`,
//! `basis`, `khalfin`, `bipart`), its parameters and a time grid. Running it
//! writes one CSV curve and a flat `summary.json` into the output directory.
//! The file format is described in `docs/config-schema.md`.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{validate_config, Diagnostic, ScenarioConfig, ScenarioKind, TimeGridSpec};
pub use output::{Artifacts, Summary, Table};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DECOLAB_OUT";
/// Output directory when neither `--out`, the config, nor `DECOLAB_OUT` sets one.
pub const DEFAULT_OUT: &str = "decolab-out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config:\n{}", format_diagnostics(.0))]
    Config(Vec<Diagnostic>),
    #[error("numerical failure in {module}: {message}")]
    Numerical { module: &'static str, message: String },
    #[error("I/O failure on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

/// Output directory precedence: `--out`, then the config's `output_dir`,
/// then `DECOLAB_OUT`, then [`DEFAULT_OUT`].
pub fn resolve_out_dir(cli: Option<&Path>, cfg: &ScenarioConfig, env: Option<&Path>) -> PathBuf {
    cli.or(cfg.output_dir.as_deref())
        .or(env)
        .map_or_else(|| PathBuf::from(DEFAULT_OUT), Path::to_path_buf)
}

/// Runs `cfg` and writes its artifacts into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Summary, CliError> {
    let artifacts = scenarios::execute(cfg)?;
    artifacts.commit(out_dir)?;
    Ok(artifacts.summary)
}
