//! Batch front-end for the anthracnose solvers: scenario files in, CSV and a
//! JSON report out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod run;
pub mod scenarios;

use std::path::{Path, PathBuf};

pub use config::{Mode, Prepared, ScenarioConfig};
pub use error::CliError;
pub use run::{execute, CostTriple, RunReport};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ANTHRACNOSE_OUT";

/// `--out` wins, then the config's `output`, then `$ANTHRACNOSE_OUT/<name>`,
/// then `./anthracnose-out/<name>`.
pub fn output_dir(cli_out: Option<&Path>, cfg: &ScenarioConfig, env_root: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output {
        return p.clone();
    }
    env_root
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("anthracnose-out"))
        .join(&cfg.name)
}

/// Validates, then executes.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<RunReport, CliError> {
    let prepared = cfg.prepare()?;
    execute(&prepared, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_priority() {
        let mut cfg = scenarios::bundled("fig1").unwrap();
        let env = Path::new("/env");
        assert_eq!(output_dir(None, &cfg, Some(env)), Path::new("/env/fig1"));
        assert_eq!(output_dir(None, &cfg, None), Path::new("anthracnose-out/fig1"));
        cfg.output = Some("/cfg".into());
        assert_eq!(output_dir(None, &cfg, Some(env)), Path::new("/cfg"));
        assert_eq!(output_dir(Some(Path::new("/cli")), &cfg, Some(env)), Path::new("/cli"));
    }
}
