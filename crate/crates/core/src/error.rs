use thiserror::Error;

/// Errors raised by the forecasters, environments and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("{what} out of domain: {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("cannot construct {what}: {msg}")]
    Construction { what: &'static str, msg: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("version space is empty: history is not realizable by the class")]
    Unrealizable,

    #[error("protocol violation: {0}")]
    Protocol(&'static str),

    #[error("invalid config field `{field}`: {msg}")]
    Config { field: &'static str, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}

pub(crate) fn check_cost(c: f64) -> Result<()> {
    if (0.0..=0.5).contains(&c) {
        Ok(())
    } else {
        Err(domain("abstention cost", c))
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(domain("learning rate", eta))
    }
}
