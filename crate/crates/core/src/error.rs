use thiserror::Error;

/// Errors raised by the bound calculations, the Fock-space oracle and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A self-check that should hold by construction failed (e.g. a complex
    /// moment with a non-negligible imaginary part, a non-Hermitian SLD).
    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    /// The Fock cutoff cannot represent the state or the operator powers applied to it.
    #[error("Fock cutoff {dim} is too small; retry with dim >= {suggested}")]
    CutoffTooSmall { dim: usize, suggested: usize },

    /// Two terms of a difference agree to more significant digits than the
    /// working precision can resolve.
    #[error("precision loss in {quantity}: terms agree to {digits:.1} significant digits")]
    PrecisionLoss { quantity: &'static str, digits: f64 },

    /// The objective produced a non-finite value.
    #[error("non-finite {quantity} at {location}")]
    NumericalRange {
        quantity: &'static str,
        location: String,
    },

    /// f_ll + f_zz = 0, so the scalar bound is undefined.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// The boundary indicator used to locate N_th changes sign more than once.
    #[error("threshold is ambiguous: indicator changes at N = {crossings:?}")]
    ThresholdAmbiguous { crossings: Vec<f64> },
}

impl Error {
    /// Short machine-readable tag, used by the CLI on stderr.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Consistency(_) => "consistency",
            Error::CutoffTooSmall { .. } => "cutoff_too_small",
            Error::PrecisionLoss { .. } => "precision_loss",
            Error::NumericalRange { .. } => "numerical_range",
            Error::DegenerateModel(_) => "degenerate_model",
            Error::ThresholdAmbiguous { .. } => "threshold_ambiguous",
        }
    }

    /// Whether the error is caused by caller-supplied arguments rather than numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
