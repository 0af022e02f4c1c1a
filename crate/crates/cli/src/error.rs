use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Divergence(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}

impl From<aderdg_core::Error> for CliError {
    fn from(e: aderdg_core::Error) -> Self {
        use aderdg_core::Error as E;
        match e {
            E::Divergence { .. }
            | E::NonFiniteNode { .. }
            | E::Evaluation { .. }
            | E::Linalg(_) => CliError::Divergence(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
