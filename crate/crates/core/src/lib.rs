//! Pseudo-spectral laboratory for the scaled Euler–Poisson system, its
//! linear acoustic semigroup and the incompressible limit with damping.

pub mod error;
pub mod spectral;

pub use error::{Error, Result};
pub mod littlewood_paley;
pub mod plasma;
pub mod acoustic;
pub mod oracle;
pub mod fit;
pub mod solver;
pub mod limit;
pub mod checks;
