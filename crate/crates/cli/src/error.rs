use std::fmt;

use igprm_core::bench::BenchError;
use igprm_core::costnet::CostNetError;
use igprm_core::dataset::DatasetError;
use igprm_core::envgen::EnvError;
use igprm_core::instructions::InstructionError;
use igprm_core::metrics::MetricsError;
use igprm_core::pgm::PgmError;
use igprm_core::planner::PlanError;

/// Every failure maps to one of two exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, bad config, malformed inputs: exit 2.
    Validation(String),
    /// Filesystem or network trouble: exit 3.
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

fn io(e: impl fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn invalid(e: impl fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            io(e)
        } else {
            invalid(e)
        }
    }
}

impl From<PgmError> for CliError {
    fn from(e: PgmError) -> Self {
        match e {
            PgmError::Io(_) => io(e),
            _ => invalid(e),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::UnreadableMap(p) => p.into(),
            _ => invalid(e),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        invalid(e)
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        invalid(e)
    }
}

impl From<CostNetError> for CliError {
    fn from(e: CostNetError) -> Self {
        match e {
            CostNetError::Io(_) => io(e),
            _ => invalid(e),
        }
    }
}

impl From<InstructionError> for CliError {
    fn from(e: InstructionError) -> Self {
        match e {
            InstructionError::Io(_) | InstructionError::Network(_) => io(e),
            InstructionError::Json(j) => j.into(),
            _ => invalid(e),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(_) => io(e),
            DatasetError::Env(e) => e.into(),
            DatasetError::Instruction(e) => e.into(),
            DatasetError::Json(e) => e.into(),
            _ => invalid(e),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Io(_) => io(e),
            BenchError::Csv(ref c) if c.is_io_error() => io(e),
            BenchError::CostNet(e) => e.into(),
            BenchError::Instruction(e) => e.into(),
            _ => invalid(e),
        }
    }
}
