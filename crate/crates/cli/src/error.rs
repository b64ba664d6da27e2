use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    /// The library failed while simulating or pricing.
    #[error(transparent)]
    Runtime(#[from] rough_heston::Error),

    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    /// Parameter errors raised while resolving a section are config errors.
    pub fn from_core(section: &str, e: rough_heston::Error) -> Self {
        match e {
            rough_heston::Error::InvalidParameter { name, reason } => {
                CliError::config(&format!("{section}.{name}"), reason)
            }
            other => CliError::Runtime(other),
        }
    }

    /// 2 for usage and config errors, 1 for everything that went wrong at run time.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Runtime(rough_heston::Error::InvalidParameter { .. }) => 2,
            CliError::Runtime(_) | CliError::Output(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
