//! Command implementations behind the `ratioshift` binary.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{construct, experiment_ratio_set, experiment_rn, experiment_torus, verify, Outcome};
pub use config::{resolve_seed, RunConfig, SeedSource, TailName, SEED_ENV};
pub use report::{config_hash, Report, SpecFile, REPORT_SCHEMA, SPEC_FORMAT};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] ratioshift_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    /// 2 for malformed input, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Core(e) if is_input(e) => 2,
            _ => 1,
        }
    }
}

fn is_input(e: &ratioshift_core::Error) -> bool {
    use ratioshift_core::Error as E;
    matches!(e, E::Input(_) | E::StateOutOfRange { .. } | E::ShiftRange { .. })
}
