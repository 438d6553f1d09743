use thiserror::Error;

/// Errors surfaced by mesh construction, element building and solves.
#[derive(Debug, Error)]
pub enum VemError {
    #[error("tensor index out of range: slot {slot} holds {value}, dim is {dim}")]
    IndexOutOfRange { slot: usize, value: usize, dim: usize },

    #[error("tensor order/dim mismatch: ({0}, {1}) vs ({2}, {3})")]
    TensorMismatch(usize, usize, usize, usize),

    #[error("frame is not orthonormal within tolerance (defect {0:.3e})")]
    FrameNotOrthonormal(f64),

    #[error("frame rank ({normals} normals, {tangents} tangents) inconsistent with request")]
    FrameRankMismatch { normals: usize, tangents: usize },

    #[error("normal subspaces do not match (defect {0:.3e})")]
    SubspaceMismatch(f64),

    #[error("moment table only covers degree {have}, degree {need} required")]
    InsufficientMoments { have: i32, need: i32 },

    #[error("degenerate entity geometry: {0}")]
    DegenerateGeometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("mesh file schema violation: {0}")]
    MeshSchema(String),

    #[error("unsupported element configuration n={n}, m={m}, k={k}")]
    UnsupportedConfig { n: usize, m: usize, k: i32 },

    #[error("singular local system on element: {0}")]
    SingularLocalSystem(String),

    #[error("linear system is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("solver did not converge: {0}")]
    SolverFailure(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VemError>;
