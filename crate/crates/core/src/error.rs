use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (shapes, ranges, ordering).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A non-finite value was handed to an operation.
    #[error("non-finite input: {0}")]
    NumericInput(String),

    /// A value became non-finite while computing.
    #[error("numeric overflow in {what} at layer {layer}, timestep {step}")]
    NumericOverflow {
        what: &'static str,
        layer: usize,
        step: usize,
    },

    /// Training produced a non-finite loss.
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss { step: usize },

    /// Every calibration activation of a layer was zero, so no scale exists.
    #[error("degenerate normalization scale in layer {layer}: calibration percentile is not positive")]
    DegenerateScale { layer: usize },

    /// Malformed configuration; `path` is the dotted path of the offending field.
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    /// Short machine-readable category, used in the CLI's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Contract(_) => "contract",
            Error::NumericInput(_) => "numeric_input",
            Error::NumericOverflow { .. } => "numeric_overflow",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::DegenerateScale { .. } => "degenerate_scale",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NumericInput(format!("{what}[{i}] = {}", values[i]))),
        None => Ok(()),
    }
}
