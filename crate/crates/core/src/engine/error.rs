use thiserror::Error;

use crate::ledger::LedgerError;
use crate::registry::RegistryError;

/// Broad class of an engine failure; the HTTP layer maps these to status
/// codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    BadRequest,
    NotFound,
    Unauthorized,
    Conflict,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("unknown uuid")]
    UnknownUuid,
    #[error("this identity is already registered")]
    AlreadyRegistered,
    #[error("unknown OTP session")]
    UnknownSession,
    #[error("wrong OTP")]
    WrongOtp,
    #[error("session or page expired")]
    Expired,
    #[error("OTP attempts exhausted")]
    AttemptsExhausted,
    #[error("invalid registration token")]
    InvalidToken,
    #[error("pin {0} is not mapped to an agency")]
    UnmappedPin(String),
    #[error("agency {0} is not registered")]
    AgencyNotRegistered(String),
    #[error("agency {0} already exists")]
    AgencyExists(String),
    #[error("no region maps to agency {0}")]
    EmptyRegion(String),
    #[error("center {0} is not registered")]
    CenterNotRegistered(String),
    #[error("no citizen for that secret code and pin")]
    CitizenNotFound,
    #[error("secret code and pin match more than one citizen")]
    Ambiguous,
    #[error("no verification page {0}")]
    PageNotFound(String),
    #[error("verification page already used")]
    PageUsed,
    #[error("verification page expired")]
    PageExpired,
    #[error("Verification failed")]
    VerificationFailed,
    #[error("Citizen completely vaccinated")]
    CompletelyVaccinated,
    #[error("center {0} has no doses left")]
    InsufficientStock(String),
    #[error("citizen is below the minimum age of {0}")]
    Ineligible(u32),
    #[error("draft no longer matches the citizen's dose history")]
    StaleDraft,
    #[error("unknown vaccination draft")]
    UnknownDraft,
    #[error("center static key does not match")]
    CenterKeyMismatch,
    #[error("vaccination {0} not found")]
    VaccinationNotFound(String),
    #[error("secret code space exhausted for pin {0}")]
    SecretCodeSpaceExhausted(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("registry: {0}")]
    Registry(RegistryError),
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
}

impl From<RegistryError> for EngineError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::CitizenNotFound => EngineError::CitizenNotFound,
            RegistryError::Ambiguous => EngineError::Ambiguous,
            RegistryError::InsufficientStock(c) => EngineError::InsufficientStock(c),
            RegistryError::UnmappedPin(p) => EngineError::UnmappedPin(p),
            other => EngineError::Registry(other),
        }
    }
}

impl EngineError {
    /// Stable machine-readable code, used verbatim in API error bodies.
    pub fn code(&self) -> &'static str {
        use EngineError::*;
        match self {
            UnknownUuid => "unknown-uuid",
            AlreadyRegistered => "already-registered",
            UnknownSession => "unknown-session",
            WrongOtp => "wrong-otp",
            Expired => "expired",
            AttemptsExhausted => "attempts-exhausted",
            InvalidToken => "invalid-token",
            UnmappedPin(_) => "unmapped-pin",
            AgencyNotRegistered(_) => "agency-not-registered",
            AgencyExists(_) => "agency-exists",
            EmptyRegion(_) => "empty-region",
            CenterNotRegistered(_) => "center-not-registered",
            CitizenNotFound => "not-found",
            Ambiguous => "ambiguous",
            PageNotFound(_) => "page-not-found",
            PageUsed => "page-used",
            PageExpired => "page-expired",
            VerificationFailed => "verification-failed",
            CompletelyVaccinated => "citizen-completely-vaccinated",
            InsufficientStock(_) => "insufficient-stock",
            Ineligible(_) => "ineligible-age",
            StaleDraft => "stale-draft",
            UnknownDraft => "unknown-draft",
            CenterKeyMismatch => "center-key-mismatch",
            VaccinationNotFound(_) => "not-found",
            SecretCodeSpaceExhausted(_) => "secret-code-space-exhausted",
            InvalidInput(_) => "invalid-input",
            Registry(RegistryError::NotFound { .. }) => "not-found",
            Registry(RegistryError::DuplicateKey { .. }) => "duplicate-key",
            Registry(_) => "registry-error",
            Ledger(_) => "ledger-error",
        }
    }

    pub fn class(&self) -> ErrorClass {
        use EngineError::*;
        match self {
            InvalidInput(_) => ErrorClass::BadRequest,
            UnknownUuid | UnknownSession | UnmappedPin(_) | AgencyNotRegistered(_) | EmptyRegion(_)
            | CenterNotRegistered(_) | CitizenNotFound | PageNotFound(_) | UnknownDraft
            | VaccinationNotFound(_) => ErrorClass::NotFound,
            Registry(RegistryError::NotFound { .. }) => ErrorClass::NotFound,
            WrongOtp | InvalidToken | VerificationFailed | CenterKeyMismatch => ErrorClass::Unauthorized,
            AlreadyRegistered | Expired | AttemptsExhausted | AgencyExists(_) | Ambiguous | PageUsed
            | PageExpired | CompletelyVaccinated | InsufficientStock(_) | Ineligible(_) | StaleDraft
            | SecretCodeSpaceExhausted(_) => ErrorClass::Conflict,
            Registry(RegistryError::DuplicateKey { .. }) => ErrorClass::Conflict,
            Registry(_) | Ledger(_) => ErrorClass::Internal,
        }
    }
}
