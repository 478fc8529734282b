use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("axis ({x}, {y}, {z}) is not a unit vector (|v| = {norm})")]
    NonUnitAxis { x: f64, y: f64, z: f64, norm: f64 },

    #[error("zero-length vector cannot define an axis")]
    ZeroAxis,

    #[error("invalid state weights {weights:?}: {reason}")]
    InvalidWeights { weights: [f64; 4], reason: &'static str },

    #[error("{name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("photon energy {e_gamma} MeV is below threshold {threshold} MeV")]
    BelowThreshold { e_gamma: f64, threshold: f64 },

    #[error(
        "photon energy {e_gamma} MeV outside the {fit} validity range [{lo}, {hi}] MeV \
         (enable extrapolation to override)"
    )]
    OutsideValidity {
        fit: &'static str,
        e_gamma: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no coincidences recorded; correlation cannot be estimated")]
    NoCoincidences,

    #[error("scenario '{label}' has zero coincidence rate")]
    ZeroRate { label: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            name,
            value,
            min,
            max,
        }
    }
}

pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<()> {
    if value.is_finite() && value >= min && value <= max {
        Ok(())
    } else {
        Err(Error::out_of_range(name, value, min, max))
    }
}
