use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh tangling: cell {cell} has signed area {area:e} after motion")]
    MeshTangling { cell: usize, area: f64 },

    #[error("invalid kinetic state: {0}")]
    State(String),

    #[error("evolution failure at face {face}, gauss point {point}: {detail}")]
    Evolution {
        face: usize,
        point: usize,
        detail: String,
    },

    #[error("positivity failure at step {step}, cell {cell}: h = {h:e}")]
    Positivity { step: usize, cell: usize, h: f64 },

    #[error("invalid time step {0:e}")]
    TimeStep(f64),

    #[error("bracket failure in root solve: {0}")]
    Bracket(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
