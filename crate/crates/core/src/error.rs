use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NlaError {
    #[error("matrix is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NonHermitianInput { deviation: f64 },
    #[error("derivative matrix is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NonHermitianDerivative { deviation: f64 },
    #[error("state is not physical: {0}")]
    NonPhysicalState(String),
    #[error("truncation needs {needed} Fock levels, above the cap of {cap}")]
    TruncationOverflow { needed: usize, cap: usize },
    #[error("operation not supported for probe kind `{0}`")]
    UnsupportedKind(String),
    #[error("gain {gain} outside the amplification domain g >= 1 + 1e-9")]
    GainDomain { gain: f64 },
    #[error("{branch} branch has vanishing probability ({prob:e})")]
    BranchImpossible { branch: &'static str, prob: f64 },
    #[error("meter state not normalized (|alpha|^2 + |beta|^2 = {norm})")]
    MeterNotNormalized { norm: f64 },
    #[error("probe has complex amplitudes; homodyne saturation is not guaranteed")]
    ComplexProbeUnsupported,
    #[error("log-likelihood is flat over the search grid; the records carry no information on g")]
    DegenerateLikelihood,
    #[error("finite-difference step {step:e} cannot resolve the state change")]
    StepTooSmall { step: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = NlaError> = std::result::Result<T, E>;
