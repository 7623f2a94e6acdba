use nla_core::NlaError;
use serde::Serialize;
use thiserror::Error;

use crate::config::SCHEMA_VERSION;

#[derive(Debug, Error)]
pub enum CliError {
    /// The request was rejected before any computation.
    #[error("{message}")]
    Usage { kind: &'static str, message: String },
    #[error(transparent)]
    Compute(#[from] NlaError),
    #[error("{0}")]
    Io(String),
    #[error("{failed} of {total} checks exceeded their tolerance")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self::Usage { kind: "InvalidInput", message: message.into() }
    }

    /// A library error raised while validating the request.
    pub fn usage(e: NlaError) -> Self {
        Self::Usage { kind: error_kind(&e), message: e.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Usage { kind, .. } => kind,
            Self::Compute(e) => error_kind(e),
            Self::Io(_) => "Io",
            Self::ChecksFailed { .. } => "ChecksFailed",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage { .. } => 2,
            _ => 1,
        }
    }

    /// One-line JSON error document written to stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Detail<'a> {
            kind: &'a str,
            message: String,
            exit_code: u8,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            error: Detail<'a>,
        }
        let doc = Doc {
            schema_version: SCHEMA_VERSION,
            error: Detail { kind: self.kind(), message: self.to_string(), exit_code: self.exit_code() },
        };
        serde_json::to_string(&doc).expect("serializable")
    }
}

pub fn error_kind(e: &NlaError) -> &'static str {
    match e {
        NlaError::NonHermitianInput { .. } => "NonHermitianInput",
        NlaError::NonHermitianDerivative { .. } => "NonHermitianDerivative",
        NlaError::NonPhysicalState(_) => "NonPhysicalState",
        NlaError::TruncationOverflow { .. } => "TruncationOverflow",
        NlaError::UnsupportedKind(_) => "UnsupportedKind",
        NlaError::GainDomain { .. } => "GainDomain",
        NlaError::BranchImpossible { .. } => "BranchImpossible",
        NlaError::MeterNotNormalized { .. } => "MeterNotNormalized",
        NlaError::ComplexProbeUnsupported => "ComplexProbeUnsupported",
        NlaError::DegenerateLikelihood => "DegenerateLikelihood",
        NlaError::StepTooSmall { .. } => "StepTooSmall",
        NlaError::InvalidInput(_) => "InvalidInput",
        NlaError::Io(_) => "Io",
    }
}
