use insightful_core::game::GameError;
use insightful_core::mdp::MdpError;
use insightful_core::simulator::SimError;
use insightful_core::{ModelError, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Singular { .. } | SolverError::Residual { .. } | SolverError::Transient { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Solver(s) => s.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MdpError> for CliError {
    fn from(e: MdpError) -> Self {
        match e {
            MdpError::NoConvergence { .. } | MdpError::Bracket { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(MdpError::Bracket { rho: 1.0, gain: 0.1 }).exit_code(), 3);
        assert_eq!(CliError::from(MdpError::InvalidTruncation(2)).exit_code(), 2);
        let singular = SolverError::Singular {
            cap: 80,
            row: 3,
            value: 0.0,
        };
        assert_eq!(CliError::from(SimError::Solver(singular)).exit_code(), 3);
        assert_eq!(CliError::from(SolverError::InvalidTolerance(1.0)).exit_code(), 2);
        assert_eq!(CliError::from(GameError::TooManyPools(20)).exit_code(), 2);
        let io = CliError::io("x", std::io::Error::other("denied"));
        assert_eq!(io.exit_code(), 1);
    }
}
