pub mod adaptivity;
pub mod error;
pub mod femspace;
pub mod hessian;
pub mod io;
pub mod mesh;
pub mod pipeline;
pub mod problems;
pub mod quadrature;
pub mod sdpmodel;

pub use error::{Error, Result};
