//! Numerical laboratory for transition fronts of one-dimensional
//! reaction-diffusion equations `u_t = u_xx + f(x,u)` and `u_t = u_xx + f(t,u)`
//! with mixed bistable-ignition reactions.

pub mod diagnostics;
pub mod error;
pub mod numerics;
pub mod pdesim;
pub mod reaction;
pub mod verdict;
pub mod wavesolve;

pub use error::{Error, Result};
pub use verdict::{VerdictReport, Witness};
