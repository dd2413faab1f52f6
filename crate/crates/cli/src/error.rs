use std::fmt;

use fmin_core::geometry::GeometryError;
use fmin_core::profile_ode::OdeError;
use fmin_core::shooting::ShootError;
use fmin_core::IntegrateError;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    /// Inadmissible weight, no bracket, profile that does not close.
    Math,
    /// Bad flags, config or weight text.
    Usage,
    /// Numeric breakdown or I/O failure.
    Internal,
}

impl ExitKind {
    pub fn code(self) -> u8 {
        match self {
            ExitKind::Math => 1,
            ExitKind::Usage => 2,
            ExitKind::Internal => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn new(kind: ExitKind, error: impl Into<anyhow::Error>) -> Self {
        Self {
            kind,
            error: error.into(),
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Usage, anyhow::anyhow!("{msg}"))
    }

    pub fn math(msg: impl fmt::Display) -> Self {
        Self::new(ExitKind::Math, anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ExitKind::Internal, e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(ExitKind::Internal, e)
    }
}

impl From<ShootError> for CliError {
    fn from(e: ShootError) -> Self {
        let kind = match &e {
            ShootError::InvalidRadius { .. } | ShootError::InvalidEpsilon { .. } => ExitKind::Usage,
            ShootError::Integrate(IntegrateError::InvalidOptions(_)) => ExitKind::Usage,
            ShootError::Integrate(_) | ShootError::Ode(_) => ExitKind::Internal,
            ShootError::NoBracket { .. }
            | ShootError::BracketCollapsedOnAxisHit { .. }
            | ShootError::Undecided { .. }
            | ShootError::NotConverged { .. }
            | ShootError::NoHorizontalPoint { .. } => ExitKind::Math,
        };
        Self::new(kind, e)
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        let kind = match e {
            GeometryError::NotClosed { .. } => ExitKind::Math,
            _ => ExitKind::Internal,
        };
        Self::new(kind, e)
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        let kind = match e {
            IntegrateError::InvalidOptions(_) | IntegrateError::InvalidInitialState { .. } => {
                ExitKind::Usage
            }
            IntegrateError::OutOfRange { .. } => ExitKind::Internal,
        };
        Self::new(kind, e)
    }
}

impl From<OdeError> for CliError {
    fn from(e: OdeError) -> Self {
        Self::new(ExitKind::Internal, e)
    }
}
