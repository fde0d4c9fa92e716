use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {}", format_violations(.0))]
    InvalidSpec(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{function}: argument outside domain ({detail})")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error bound {error:e}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("rates are not a fixed point for neuron {neuron}: relative residual {residual:e}")]
    NotAtFixedPoint { neuron: usize, residual: f64 },

    #[error("neuron {neuron} has a point-mass intensity distribution (drive equals reset)")]
    PointMass { neuron: usize },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("malformed network document: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("malformed scenario config: {0}")]
    Config(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
