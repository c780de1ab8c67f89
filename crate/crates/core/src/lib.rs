//! Hybrid quantum-acoustic device analysis: materials, bulk acoustic modes,
//! electromagnetic modes, piezoelectric coupling, hybrid eigenmodes, Kerr
//! Hamiltonians, mode identification and loss budgets.

pub mod acoustics;
pub mod config;
pub mod constants;
pub mod emmodes;
pub mod hybrid;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod loss;
pub mod materials;
pub mod modeid;
pub mod piezo;
pub mod pipeline;
pub mod quad;

pub use error::{Error, Result};
