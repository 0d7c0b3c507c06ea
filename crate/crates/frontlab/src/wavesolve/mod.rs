//! ODE-level objects: homogeneous front speeds and profiles, periodic
//! stationary solutions, the compactly supported hump, derived constants and
//! the hypothesis verdicts built from them.

mod constants;
mod front;
mod hump;
mod stationary;

pub use constants::{
    alpha_f, best_eta, check_space_front_hypothesis, check_space_front_hypothesis_with,
    check_time_front_hypothesis, check_time_front_hypothesis_with, check_ignition_hypothesis,
    check_ignition_hypothesis_with, derive_constants, derive_constants_ignition, envelope_speed,
    theta1_prime, ConstantsMode, DerivedConstants, HypothesisOptions, IgnitionCheckOptions,
};
pub use front::{front_speed, front_speed_with, FrontProfile, ShootOptions};
pub use hump::{build_hump_v, discrete_hump, HumpProfile};
pub use stationary::{antiderivative, periodic_stationary, theta0_prime, StationaryProfile};
