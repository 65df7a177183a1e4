pub mod bessel;
pub mod error;

pub use error::{Error, Result};
pub mod mie;
pub mod quad;
pub mod units;
pub mod poles;
pub mod pseudomode;
pub mod ode;
pub mod dynamics;
pub mod field;
pub mod oracle;
pub mod config;
pub mod scenario;
pub mod acceptance;
