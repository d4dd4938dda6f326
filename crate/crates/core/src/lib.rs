//! Semiclassical spectral asymptotics for `-y'' + k² P(z, λ) y = 0` with
//! complex polynomial potentials.

pub mod acceptance;
pub mod cli;
pub mod curves;
pub mod error;
pub mod ode;
pub mod oracle;
pub mod poly;
pub mod phase;
pub mod presets;
pub mod quantize;
pub mod quadrature;
pub mod roots;
pub mod stokes;

pub use error::{Error, Result};
