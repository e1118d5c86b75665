//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SwitchError {
    #[error("invalid dimension {0}: operators require at least 2 levels")]
    InvalidDimension(usize),

    #[error("invalid embed: local operator has dimension {local} but factor {slot} has dimension {expected}")]
    InvalidEmbed {
        local: usize,
        slot: usize,
        expected: usize,
    },

    #[error("factor index {slot} out of range for signature with {nfactors} factors")]
    SlotOutOfRange { slot: usize, nfactors: usize },

    #[error("signature mismatch: {0} vs {1}")]
    SignatureMismatch(String, String),

    #[error("basis label {label} out of range for factor {slot} (dimension {dim})")]
    LabelOutOfRange {
        slot: usize,
        label: usize,
        dim: usize,
    },

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid excitation count {0}: ladder indexing starts at 1")]
    InvalidExcitationNumber(usize),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("unknown schedule preset `{0}`")]
    UnknownPreset(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("hierarchy inconsistency: label {0} references missing lower label {1}")]
    MissingLowerLabel(String, String),

    #[error("integration diverged at step {step} (t = {time} us): max entry norm {norm:.3e} exceeds ceiling")]
    Divergence { step: usize, time: f64, norm: f64 },

    #[error("cavity cutoff {0} too small: the double-excitation projector needs at least 2 photons")]
    CutoffTooSmall(usize),

    #[error("horizon mismatch between runs: {0} us vs {1} us")]
    HorizonMismatch(f64, f64),

    #[error("sweep budget exceeded: estimated {estimated:.1} s > budget {budget:.1} s")]
    BudgetExceeded { estimated: f64, budget: f64 },

    #[error("empty sweep axis `{0}`")]
    EmptyAxis(String),

    #[error("sweep axis `{axis}` value {value} outside physical bounds: {reason}")]
    AxisOutOfBounds {
        axis: String,
        value: f64,
        reason: String,
    },

    #[error("no converged grid point in sweep; cannot select an argmax")]
    NoConvergedPoint,
}

pub type Result<T> = std::result::Result<T, SwitchError>;
