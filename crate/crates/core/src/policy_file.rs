//! Policy files.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `RCPOLICY` |
//! | 4 | format version (`u32`) |
//! | 4 | header length `L` (`u32`) |
//! | L | header, UTF-8 JSON ([`PolicyHeader`]) |
//! | 2·H·N | actions, step-major, `u16` per state |
//! | 8·(H+1)·N | values `V_1 .. V_{H+1}`, `f64` per state |
//!
//! The header embeds the resolved config including the decision model, so a
//! policy file alone is enough to rebuild the MDP it was solved on.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::ResolvedConfig;
use crate::error::{Error, Result};
use crate::mdp::{ActionId, RecourseMdp};
use crate::solver::{g_rsevi, g_rsvi, EpisodicConfig, EpisodicRun, PolicyTable, SolverConfig};

pub const POLICY_MAGIC: &[u8; 8] = b"RCPOLICY";
pub const POLICY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverVariant {
    /// Full backward sweep with the standard deviation penalty.
    Grsvi,
    /// Episodic exploration from one initial state.
    Grsevi,
    /// Full backward sweep with the lower partial deviation penalty.
    Lpsd,
}

impl SolverVariant {
    pub const ALL: [SolverVariant; 3] = [
        SolverVariant::Grsvi,
        SolverVariant::Grsevi,
        SolverVariant::Lpsd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverVariant::Grsvi => "grsvi",
            SolverVariant::Grsevi => "grsevi",
            SolverVariant::Lpsd => "lpsd",
        }
    }
}

impl fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown variant `{s}` (expected grsvi, grsevi or lpsd)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHeader {
    pub variant: SolverVariant,
    pub beta: f64,
    pub horizon: usize,
    pub num_states: usize,
    pub partial: bool,
    #[serde(default)]
    pub episodic: Option<EpisodicConfig>,
    pub config_hash: String,
    pub schema_hash: String,
    pub config: ResolvedConfig,
}

/// A solved policy together with everything needed to evaluate it.
#[derive(Debug, Clone)]
pub struct PolicyBundle {
    pub header: PolicyHeader,
    pub table: PolicyTable,
}

/// Output of [`PolicyBundle::solve`]; the episode trace is kept for the
/// episodic variant.
#[derive(Debug)]
pub struct Solved {
    pub bundle: PolicyBundle,
    pub episodic: Option<EpisodicRun>,
}

impl PolicyBundle {
    /// Builds the MDP at `horizon` and solves it with `variant`.
    pub fn solve(
        config: &ResolvedConfig,
        variant: SolverVariant,
        beta: f64,
        horizon: usize,
        episodic: Option<EpisodicConfig>,
    ) -> Result<Solved> {
        let mdp = config.build_mdp_with_horizon(horizon)?;
        Self::solve_on(&mdp, config, variant, beta, episodic)
    }

    /// Solves an MDP already built from `config`.
    pub fn solve_on(
        mdp: &RecourseMdp,
        config: &ResolvedConfig,
        variant: SolverVariant,
        beta: f64,
        episodic: Option<EpisodicConfig>,
    ) -> Result<Solved> {
        let horizon = mdp.horizon();
        let solver = SolverConfig::new(beta, horizon);
        let (table, run, ep) = match variant {
            SolverVariant::Grsvi => (g_rsvi(mdp, &solver)?, None, None),
            SolverVariant::Lpsd => (g_rsvi(mdp, &solver.lower_partial())?, None, None),
            SolverVariant::Grsevi => {
                let ep =
                    match episodic.or_else(|| config.eval.initial_state.map(EpisodicConfig::new)) {
                        Some(ep) => ep,
                        None => {
                            return Err(Error::InvalidArgument(
                                "the episodic solver needs an initial state".into(),
                            ))
                        }
                    };
                let run = g_rsevi(mdp, &solver, &ep)?;
                (run.policy.clone(), Some(run), Some(ep))
            }
        };
        let header = PolicyHeader {
            variant,
            beta,
            horizon,
            num_states: mdp.num_states(),
            partial: table.is_partial(),
            episodic: ep,
            config_hash: config.hash(),
            schema_hash: config.schema.hash(),
            config: config.clone(),
        };
        Ok(Solved {
            bundle: PolicyBundle { header, table },
            episodic: run,
        })
    }

    /// Rebuilds the MDP at the policy's horizon.
    pub fn build_mdp(&self) -> Result<RecourseMdp> {
        self.header
            .config
            .build_mdp_with_horizon(self.header.horizon)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let h = self.table.horizon();
        let n = self.table.num_states();
        let mut out = Vec::with_capacity(16 + header.len() + h * n * 2 + (h + 1) * n * 8);
        out.extend_from_slice(POLICY_MAGIC);
        out.extend_from_slice(&POLICY_VERSION.to_le_bytes());
        let len = u32::try_from(header.len())
            .map_err(|_| Error::InvalidArgument("policy header too large".into()))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&header);
        for step in 1..=h {
            for a in self.table.step_actions(step) {
                out.extend_from_slice(&a.0.to_le_bytes());
            }
        }
        for step in 1..=h + 1 {
            for v in self.table.step_values(step) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: &str| Error::malformed("policy file", reason);
        if bytes.len() < 16 || &bytes[..8] != POLICY_MAGIC {
            return Err(bad("missing RCPOLICY magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != POLICY_VERSION {
            return Err(Error::Version {
                kind: "policy file",
                found: version,
                expected: POLICY_VERSION,
            });
        }
        let len = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let body = &bytes[16..];
        if body.len() < len {
            return Err(bad("truncated header"));
        }
        let header: PolicyHeader =
            serde_json::from_slice(&body[..len]).map_err(|e| Error::malformed("policy file", e))?;
        if header.schema_hash != header.config.schema.hash() {
            return Err(bad("schema hash does not match the embedded schema"));
        }
        let (h, n) = (header.horizon, header.num_states);
        if h == 0 || n as u64 != header.config.schema.cardinality() {
            return Err(bad("header dimensions disagree with the schema"));
        }
        let data = &body[len..];
        let expected = h * n * 2 + (h + 1) * n * 8;
        if data.len() != expected {
            return Err(bad(&format!(
                "expected {expected} bytes of table data, found {}",
                data.len()
            )));
        }
        let (actions, values) = data.split_at(h * n * 2);
        let pi: Vec<Vec<ActionId>> = actions
            .chunks_exact(n * 2)
            .map(|row| {
                row.chunks_exact(2)
                    .map(|b| ActionId(u16::from_le_bytes([b[0], b[1]])))
                    .collect()
            })
            .collect();
        let values: Vec<Vec<f64>> = values
            .chunks_exact(n * 8)
            .map(|row| {
                row.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect()
            })
            .collect();
        let n_actions = header.config.actions.len();
        if pi
            .iter()
            .flatten()
            .any(|a| a.is_declared() && a.0 as usize >= n_actions)
        {
            return Err(bad("action id outside the action table"));
        }
        let table = PolicyTable::from_parts(pi, values, header.partial)?;
        Ok(Self { header, table })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
