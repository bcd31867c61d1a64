//! Command implementations behind the `rabi-qes` binary.
//!
//! Every command turns a [`SweepSpec`] into a [`CsvTable`]; the binary only
//! parses flags, writes the table and maps errors to exit codes.

pub mod checks;
pub mod commands;
pub mod spec;
pub mod table;

use rabi_qes::alpha::continued_branches;
use rabi_qes::{AlphaBranch, LambdaRatio};

pub use checks::{run_checks, CheckResult, DEFAULT_CHECKS, EXTRA_CHECKS};
pub use commands::{cmd_alpha_scan, cmd_oracle, cmd_solve, cmd_sweep, cmd_verify, run};
pub use spec::{BranchChoice, Grid, Mode, SweepSpec};
pub use table::{Cell, CsvTable};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] rabi_qes::Error),
    #[error("{0} check(s) failed")]
    Verification(usize),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(rabi_qes::Error::InvalidParameter(_) | rabi_qes::Error::InvalidTruncation(_)) => 2,
            _ => 1,
        }
    }
}

/// Resolves the branch used at coupling ratio `lambda`.
///
/// Labels come from continuation out of the reference point, so a given
/// index follows one smooth curve across rows. `Auto` takes α₂ when it is
/// admissible and otherwise the admissible root of smallest modulus.
pub fn select_branch(choice: BranchChoice, lambda: LambdaRatio) -> Option<AlphaBranch> {
    let branches = continued_branches(lambda);
    match choice {
        BranchChoice::Index(k) => Some(branches[k - 1]),
        BranchChoice::Auto if branches[1].admissible => Some(branches[1]),
        BranchChoice::Auto => branches
            .into_iter()
            .filter(|b| b.admissible)
            .min_by(|a, b| a.value.norm().total_cmp(&b.value.norm())),
    }
}
