//! Scenarios compiled into the binary.

use std::path::Path;

use crate::config::{parse, ScenarioConfig};
use crate::error::CliError;

pub const BUNDLED: &[(&str, &str)] = &[
    ("fig1", include_str!("../scenarios/fig1.toml")),
    ("fig2", include_str!("../scenarios/fig2.toml")),
    ("fig3", include_str!("../scenarios/fig3.toml")),
    ("fig4", include_str!("../scenarios/fig4.toml")),
    ("pde-1d-demo", include_str!("../scenarios/pde-1d-demo.toml")),
    ("riccati-scalar", include_str!("../scenarios/riccati-scalar.toml")),
    ("sweep-1d", include_str!("../scenarios/sweep-1d.toml")),
    ("forecast-demo", include_str!("../scenarios/forecast-demo.toml")),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn bundled(name: &str) -> Result<ScenarioConfig, CliError> {
    let text = source(name).ok_or_else(|| CliError::Config(format!("no bundled scenario named `{name}`")))?;
    parse(text, Path::new("."))
}

/// A file path when it exists, otherwise a bundled scenario name.
pub fn resolve(arg: &str) -> Result<ScenarioConfig, CliError> {
    let p = Path::new(arg);
    if p.exists() {
        crate::config::load(p)
    } else if source(arg).is_some() {
        bundled(arg)
    } else {
        Err(CliError::Io(format!("{arg}: no such file or bundled scenario")))
    }
}
