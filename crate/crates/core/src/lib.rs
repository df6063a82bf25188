//! Fleet size and mix planning for electric and combustion vehicles under
//! stochastic demand and ambient temperature.
//!
//! The crate is layered bottom-up: [`energy`] turns vehicle physics into kW,
//! [`eval`] checks and prices routes, [`alns`] solves one operational period,
//! [`saa`] averages periods into a total cost of ownership per fleet mix, and
//! [`scen`] draws the periods. [`oracle`] solves tiny periods exactly.

pub mod alns;
pub mod energy;
pub mod error;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod saa;
pub mod scen;

pub use error::{Error, Result};
