use thiserror::Error;

/// Integration axis identifier carried by numerical errors.
///
/// `x` is the spatial (price) axis, `y` the local-time axis and `t` the
/// calendar-time axis of the exposure integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    T,
    Outer,
    Inner,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::T => "t",
            Axis::Outer => "outer",
            Axis::Inner => "inner",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand is not finite at abscissa {abscissa} ({axis} axis)")]
    NonFiniteIntegrand { axis: Axis, abscissa: f64 },

    #[error(
        "{axis}-integration did not converge: value {value:e}, error estimate {error_estimate:e} after {evaluations} evaluations"
    )]
    NotConverged {
        axis: Axis,
        value: f64,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        domain(format!("{name} must be finite, got {value}"))
    }
}
