pub mod assembly;
pub mod benchmarks;
pub mod config;
pub mod contact;
pub mod dof;
pub mod enrichment;
pub mod error;
pub mod fracture;
pub mod levelset;
pub mod material;
pub mod mesh;
pub mod output;
pub mod model;
pub mod quadrature;
pub mod runner;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
