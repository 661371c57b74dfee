//! Error classification for exit codes.
//!
//! Every failure is either a configuration/IO problem (the run never got a
//! fair chance: bad flags, malformed config, unreadable files, infeasible
//! grids) or a numerical one (the computation ran and did not succeed:
//! non-convergence, singular operators). The distinction is the process
//! exit code contract: 0 success, 1 numerical failure, 2 configuration/IO
//! error.

use std::fmt;

use wep_core::cache::CacheError;
use wep_core::coarse::CoarseError;
use wep_core::krylov::KrylovError;
use wep_core::problem::ProblemError;
use wep_core::resinv::ResinvError;
use wep_core::schur::SchurError;
use wep_core::smw::SmwError;

#[derive(Debug)]
pub enum CliError {
    /// Configuration or IO problem; exit code 2.
    Config(String),
    /// Numerical failure in a well-posed run; exit code 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Numerical(msg) => f.write_str(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<ProblemError> for CliError {
    fn from(err: ProblemError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<CoarseError> for CliError {
    fn from(err: CoarseError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<SchurError> for CliError {
    // A colliding Sylvester spectrum or singular boundary mode is a property
    // of the continuous problem at this shift, not of the input file.
    fn from(err: SchurError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<SmwError> for CliError {
    fn from(err: SmwError) -> Self {
        match err {
            SmwError::SingularCoupling(_) => CliError::Numerical(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

impl From<ResinvError> for CliError {
    fn from(err: ResinvError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<KrylovError> for CliError {
    fn from(err: KrylovError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<CacheError> for CliError {
    fn from(err: CacheError) -> Self {
        CliError::Config(err.to_string())
    }
}
