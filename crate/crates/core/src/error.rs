use thiserror::Error;

use crate::mesh::Point;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown mesh pattern `{0}`")]
    UnknownPattern(String),
    #[error("number of subdivisions must be at least 1")]
    ZeroSubdivisions,
    #[error("degenerate rectangle")]
    DegenerateRect,
    #[error("disk radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("refinement level must be nonnegative, got {0}")]
    NegativeLevel(i32),
    #[error("unknown element id {0}")]
    UnknownElement(usize),
    #[error("element {0} is degenerate")]
    DegenerateElement(usize),
    #[error("mesh is not conforming: {0}")]
    NonConforming(String),
    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),
    #[error("point ({}, {}) lies outside the mesh", .0[0], .0[1])]
    OutsideDomain(Point),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("mesh mismatch between spaces")]
    MeshMismatch,
    #[error("coefficient `{name}` is negative ({value}) at ({}, {})", .at[0], .at[1])]
    NegativeCoefficient { name: &'static str, value: f64, at: Point },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Sdp(#[from] fecvx_sdp::SdpError),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("solver stopped with status {0:?}")]
    SolverFailed(fecvx_sdp::SolverStatus),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
