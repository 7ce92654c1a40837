use std::fmt;

use resdeploy::evalsim::EvalError;
use resdeploy::forecast::ForecastError;
use resdeploy::grid::GridError;
use resdeploy::lp::LpError;
use resdeploy::robust::RobustError;
use resdeploy::scheduling::ScheduleError;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

/// Failures raised by the CLI itself, tagged with their exit status.
#[derive(Debug)]
pub enum Fail {
    Config(String),
    Validation(String),
    Solver(String),
}

impl fmt::Display for Fail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fail::Config(m) | Fail::Validation(m) | Fail::Solver(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Fail {}

/// Exit status for an error: the first recognised cause in the chain wins.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Fail>() {
            return match f {
                Fail::Config(_) => EXIT_CONFIG,
                Fail::Validation(_) => EXIT_VALIDATION,
                Fail::Solver(_) => EXIT_SOLVER,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::Schedule(_) | EvalError::Robust(_) => EXIT_SOLVER,
                EvalError::Io { .. } => 1,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.is::<GridError>() || cause.is::<ForecastError>() {
            return EXIT_VALIDATION;
        }
        if cause.is::<ScheduleError>() || cause.is::<RobustError>() || cause.is::<LpError>() {
            return EXIT_SOLVER;
        }
    }
    1
}
