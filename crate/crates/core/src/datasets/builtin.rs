//! Hand-built example domains shipped with the library.

use crate::config::{ExperimentConfig, ResolvedConfig};
use crate::error::{Error, Result};
use crate::schema::StateIndex;

pub const BUILTIN_DOMAINS: [&str; 2] = ["synthetic_health", "loan_figure1"];

#[derive(Debug, Clone)]
pub struct BuiltinDomain {
    pub config: ResolvedConfig,
    pub initial: StateIndex,
}

/// `synthetic_health` or `loan_figure1`, with its starting state.
pub fn builtin_domain(name: &str) -> Result<BuiltinDomain> {
    if !BUILTIN_DOMAINS.contains(&name) {
        return Err(Error::UnknownDomain(name.to_string()));
    }
    let config = ExperimentConfig::builtin(name)?.resolve(None)?;
    let initial = config
        .eval
        .initial_state
        .ok_or_else(|| Error::config(format!("builtin:{name}"), "missing initial_state"))?;
    Ok(BuiltinDomain { config, initial })
}
