use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Io(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

impl From<blockgs::Error> for CliError {
    fn from(e: blockgs::Error) -> Self {
        use blockgs::Error as E;
        match e {
            E::Io(_) | E::Parse { .. } => Self::Io(e.to_string()),
            E::InvalidArgument(_) | E::Dimension(_) => Self::Usage(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
