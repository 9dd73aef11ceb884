use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] infoest::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass = 0,
    Runtime = 1,
    Statistical = 2,
    Algebraic = 3,
    Config = 4,
}

impl Status {
    /// Severity used when several configs run together.
    fn rank(self) -> u8 {
        match self {
            Self::Pass => 0,
            Self::Statistical => 1,
            Self::Algebraic => 2,
            Self::Runtime => 3,
            Self::Config => 4,
        }
    }

    pub fn worst(self, other: Self) -> Self {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }

    pub fn code(self) -> i32 {
        self as i32
    }
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            Self::Config(_) => Status::Config,
            _ => Status::Runtime,
        }
    }
}
