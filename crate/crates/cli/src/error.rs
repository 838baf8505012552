use std::fmt;

use irtune::passes::PassError;
use irtune::pipeline::PipelineError;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    External(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::External(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::External(m) => write!(f, "external tool failure: {m}"),
        }
    }
}

impl From<PassError> for CliError {
    fn from(e: PassError) -> Self {
        match e {
            PassError::ToolFailed { .. } | PassError::Timeout(_) | PassError::Unparseable(_) => {
                CliError::External(e.to_string())
            }
            PassError::BadTemplate => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Pass(p) => p.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        })*
    };
}

data_error!(
    std::io::Error,
    irtune::config::ConfigError,
    irtune::dataset::DataError,
    irtune::graph::GraphError,
    irtune::ir::IrError,
    irtune::ml::MlError,
    irtune::nn::NnError
);

pub type Result<T> = std::result::Result<T, CliError>;
