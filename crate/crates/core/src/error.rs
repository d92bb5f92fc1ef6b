use thiserror::Error;

/// Errors raised by the physics and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed arguments: bad half-integer pairings, unknown levels,
    /// non-unit vectors and the like.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "singular detuning for ground level F'={level}: the pump is resonant, \
         but adiabatic elimination requires the far-off-resonance condition |Δ(F')| ≫ Γ"
    )]
    SingularDetuning { level: String },

    #[error(
        "far-off-resonance condition violated: |Δ(F')|/Γ = {ratio:.3} for F'={level} \
         (threshold {threshold})"
    )]
    NearResonance {
        level: String,
        ratio: f64,
        threshold: f64,
    },

    #[error("empty state: {0}")]
    EmptyState(String),

    #[error(
        "state is supported on {rows} photon x {cols} atom labels; a 2x2 state is required \
         (apply a spectral filter first)"
    )]
    NotTwoByTwo { rows: usize, cols: usize },

    #[error("conditional overlap undefined: polarization branch {0} has zero amplitude")]
    UndefinedOverlap(u8),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("scan contains no evaluable direction")]
    EmptyScan,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// `true` for errors caused by the physical configuration rather than
    /// malformed arguments.
    pub fn is_physics(&self) -> bool {
        !matches!(self, Error::InvalidInput(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
