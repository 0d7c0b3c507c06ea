//! Interface functionals and calibrations.

mod calibrate;
mod ergodic;
mod pulsating;
mod shift;
mod trace;

pub use calibrate::{
    calibrate_spatial_counterexample, calibrate_temporal_counterexample, SpatialCalibration,
    SpatialCalibrationOptions, TemporalCalibration, TemporalCalibrationOptions,
};
pub use ergodic::{ergodic_speed, ErgodicAxis, ErgodicOptions, ErgodicReport, SeedRun};
pub use pulsating::{pulsating_check, PulsatingForm};
pub use shift::{composite_distance, eval_at, shift_distance, CompositeFit, ShiftMode, ShiftResult};
pub use trace::{
    default_eps_list, trace_interfaces, trace_interfaces_with, width_bound, width_growth_fit, y_envelope,
    y_minus_x_bounded, z_minus, z_plus, rightmost_at_least, InterfaceTrace, LineFit, TraceOptions, WidthBound,
    XLevel, MIN_FIT_SAMPLES,
};
