use lrt_calibrate::amp::AmpError;
use lrt_calibrate::prox::ProxError;
use lrt_calibrate::scaling::ScalingError;
use lrt_calibrate::simulate::SimError;

pub const USAGE: u8 = 1;
pub const DOMAIN: u8 = 2;
pub const IO: u8 = 3;
pub const NUMERIC: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: USAGE, message: message.into() }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self { code: DOMAIN, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: IO, message: message.into() }
    }
}

/// Message for κ outside (0, 1/2).
pub fn kappa_message(kappa: f64) -> String {
    format!(
        "kappa = {kappa} is outside (0, 1/2). Above the phase transition at kappa = 1/2 the data are \
         separable with high probability and the MLE does not exist, so no rescaling applies"
    )
}

impl From<ScalingError> for CliError {
    fn from(e: ScalingError) -> Self {
        match e {
            ScalingError::KappaOutOfRange(k) => CliError::domain(kappa_message(k)),
            ScalingError::InvalidTau(_) => CliError::domain(e.to_string()),
            ScalingError::Prox(ProxError::Domain { .. }) => CliError::domain(e.to_string()),
            ScalingError::BracketFailure { .. } | ScalingError::NoConvergence(_) | ScalingError::Prox(_) => {
                CliError { code: NUMERIC, message: e.to_string() }
            }
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(_) => CliError::usage(e.to_string()),
            _ => CliError::domain(e.to_string()),
        }
    }
}

impl From<AmpError> for CliError {
    fn from(e: AmpError) -> Self {
        match e {
            AmpError::Prox(ProxError::NonConvergence { .. }) => CliError { code: NUMERIC, message: e.to_string() },
            _ => CliError::domain(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e.to_string())
    }
}
