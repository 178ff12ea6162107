use std::fmt;

use acfdi::acpf::PowerFlowError;
use acfdi::attackgen::AttackError;
use acfdi::impact::ImpactError;
use acfdi::netmodel::CaseError;
use acfdi::stateest::EstimationError;
use acfdi::zone::ZoneError;

/// Process exit statuses, one per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Io = 1,
    Config = 2,
    Attack = 3,
    Estimation = 4,
    PowerFlow = 5,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn new(status: Status, message: impl Into<String>) -> Self {
        CliError {
            status,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Status::Config, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(Status::Io, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.status as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let class = match self.status {
            Status::Io => "i/o error",
            Status::Config => "config error",
            Status::Attack => "attack failure",
            Status::Estimation => "estimator failure",
            Status::PowerFlow => "power-flow failure",
        };
        write!(f, "{class}: {}", self.message)
    }
}

impl std::error::Error for CliError {}

impl From<CaseError> for CliError {
    fn from(e: CaseError) -> Self {
        CliError::config(format!("case: {e}"))
    }
}

impl From<ZoneError> for CliError {
    fn from(e: ZoneError) -> Self {
        CliError::config(format!("zone: {e}"))
    }
}

impl From<PowerFlowError> for CliError {
    fn from(e: PowerFlowError) -> Self {
        CliError::new(Status::PowerFlow, e.to_string())
    }
}

impl From<AttackError> for CliError {
    fn from(e: AttackError) -> Self {
        match e {
            AttackError::InvalidSpec(_) | AttackError::MissingMeasurement(_) | AttackError::UnknownMeasurement(_) => {
                CliError::config(e.to_string())
            }
            _ => CliError::new(Status::Attack, e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::BadRecord { .. } | EstimationError::InvalidSigma { .. } | EstimationError::InvalidPolicy(_) => {
                CliError::config(e.to_string())
            }
            _ => CliError::new(Status::Estimation, e.to_string()),
        }
    }
}

impl From<ImpactError> for CliError {
    fn from(e: ImpactError) -> Self {
        match e {
            ImpactError::UnknownFormat(_) | ImpactError::MeasurementMismatch | ImpactError::Empty => {
                CliError::config(e.to_string())
            }
            ImpactError::NotConverged | ImpactError::Estimation(_) => CliError::new(Status::Estimation, e.to_string()),
        }
    }
}
