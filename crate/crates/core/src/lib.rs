//! Space-time coupled arbitrary Lagrangian-Eulerian compact gas-kinetic
//! solver for the shallow water equations on moving triangular meshes.

pub mod bc;
pub mod cases;
pub mod config;
pub mod error;
pub mod geometry;
pub mod kinetic;
pub mod mesh;
pub mod motion;
pub mod output;
pub mod quadrature;
pub mod recon;
pub mod run;
pub mod simulation;
pub mod solver;

pub use error::{Error, Result};
