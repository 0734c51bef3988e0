use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A parameter lies outside the domain of the operation.
    #[error("{name} = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: String,
        domain: &'static str,
    },

    /// A solver target cannot be met by any admissible value.
    #[error("infeasible target: {0}")]
    Infeasible(String),

    /// A numeric token could not be parsed.
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: &'static str },
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: impl ToString, domain: &'static str) -> Self {
        Error::Domain {
            name,
            value: value.to_string(),
            domain,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
