use std::fmt::Display;

use thiserror::Error;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed input, unwritable output.
    #[error("{0:#}")]
    Usage(anyhow::Error),
    /// Valid input on which an estimation step failed.
    #[error("{0:#}")]
    Compute(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    pub fn usage(msg: impl Display) -> Self {
        CliError::Usage(anyhow::anyhow!("{msg}"))
    }

    pub fn compute(msg: impl Display) -> Self {
        CliError::Compute(anyhow::anyhow!("{msg}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub trait ResultExt<T> {
    fn usage_ctx<D: Display>(self, ctx: impl FnOnce() -> D) -> CliResult<T>;
    fn compute_ctx<D: Display>(self, ctx: impl FnOnce() -> D) -> CliResult<T>;
}

impl<T, E> ResultExt<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn usage_ctx<D: Display>(self, ctx: impl FnOnce() -> D) -> CliResult<T> {
        self.map_err(|e| CliError::Usage(anyhow::Error::new(e).context(ctx().to_string())))
    }

    fn compute_ctx<D: Display>(self, ctx: impl FnOnce() -> D) -> CliResult<T> {
        self.map_err(|e| CliError::Compute(anyhow::Error::new(e).context(ctx().to_string())))
    }
}
