pub mod acceptance;
pub mod asymptotics;
pub mod diagrams;
pub mod error;
pub mod extension;
pub mod group_walk;
pub mod lattice;
pub mod ode;
pub mod runner;
pub mod series;

pub use error::{PermlabError, Result};
