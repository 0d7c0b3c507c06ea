//! Scenario files: TOML with sections `[reaction]`, `[grid]`, `[initial]`,
//! `[run]`, `[diagnostics]` and `[acceptance]`. Unknown keys are rejected so a
//! typo never silently falls back to a default.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use frontlab::diagnostics::{
    calibrate_spatial_counterexample, calibrate_temporal_counterexample, SpatialCalibration,
    SpatialCalibrationOptions, TemporalCalibration, TemporalCalibrationOptions,
};
use frontlab::pdesim::{InitialCondition, SimConfig, WindowPolicy};
use frontlab::reaction::*;

/// Physical and statistical defaults. Every threshold a scenario may set in
/// `[acceptance]` is listed here; scenarios override by key.
pub const DEFAULTS: &[(&str, f64, &str)] = &[
    ("speed_abs_tol", 1e-6, "front_speed vs closed-form speed, absolute"),
    ("speed_rel_tol", 0.02, "fitted PDE front speed vs reference speed, relative"),
    ("hypothesis_margin", 1e-8, "required gap in the strict front hypothesis"),
    ("shift_sup_tol", 1e-2, "sup-norm after the optimal time shift"),
    ("composite_sup_tol", 1e-2, "spark run vs two-front composite, sup-norm"),
    ("growth_factor", 0.5, "width slope must reach this fraction of the calibrated minorant rate"),
    ("control_slope_factor", 0.01, "compliant control width slope, as a fraction of c0"),
    ("block_gain_factor", 0.5, "width gain per period block, as a fraction of M"),
    ("eta_min", 1e-12, "smallest accepted ignition margin eta"),
    ("pulsating_tol", 1e-2, "pulsating identity defect, sup-norm"),
    ("spread_tol", 0.05, "relative spread of per-seed ergodic speeds"),
    ("ut_tol", 1e-8, "allowed negative part of the discrete time derivative"),
    ("bound_tol", 1e-12, "allowed excursion outside [0, 1]"),
    ("comparison_tol", 1e-12, "allowed order violation between ordered runs"),
    ("y_minus_x_tol", 1e-6, "slack in the Y - X boundedness verdict"),
];

pub fn default_threshold(key: &str) -> Option<f64> {
    DEFAULTS.iter().find(|(k, _, _)| *k == key).map(|(_, v, _)| *v)
}

/// A configuration problem; the CLI maps these to exit status 2.
#[derive(Debug)]
pub struct SchemaError(pub String);

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "schema error: {}", self.0)
    }
}

impl std::error::Error for SchemaError {}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constructor", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReactionDesc {
    CubicBistable {
        a: f64,
    },
    G0 {},
    G1 {
        k: f64,
    },
    Ignition {
        theta_tilde: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        power: f64,
    },
    PeriodicIgnition {
        theta_lo: f64,
        theta_hi: f64,
        period: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    IgnitionViolator {
        theta_lo: f64,
        theta_gap: f64,
        theta0: f64,
        period: f64,
        plateau: f64,
        bump: f64,
    },
    PeriodicCubic {
        a_lo: f64,
        a_hi: f64,
        period: f64,
    },
    /// `seed` is mandatory: random scenarios must be replayable.
    RandomErgodic {
        p: f64,
        seed: u64,
        #[serde(default = "one")]
        lo: f64,
        #[serde(default = "two")]
        hi: f64,
        #[serde(default = "quarter")]
        theta_tilde: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Terrace reaction built on the cubic `u(1-u)(u - base_a)`. Calibrated
    /// unless both `a` and `k` are given.
    SpatialCounterexample {
        #[serde(default = "quarter")]
        base_a: f64,
        #[serde(default = "quarter")]
        theta0: f64,
        delta: Option<f64>,
        a: Option<f64>,
        k: Option<f64>,
    },
    /// Period-4 time-dependent terrace reaction. Calibrated unless both
    /// `delta` and `k` are given.
    TemporalCounterexample {
        delta: Option<f64>,
        k: Option<f64>,
        #[serde(default = "half")]
        reaction_cfl: f64,
    },
}

fn two() -> f64 {
    2.0
}

fn quarter() -> f64 {
    0.25
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Calibration {
    Spatial(SpatialCalibration),
    Temporal(TemporalCalibration),
}

impl Calibration {
    pub fn verdicts(&self) -> &[frontlab::VerdictReport] {
        match self {
            Calibration::Spatial(c) => &c.verdicts,
            Calibration::Temporal(c) => &c.verdicts,
        }
    }
}

pub struct Built {
    pub spec: ReactionSpec,
    pub calibration: Option<Calibration>,
}

impl ReactionDesc {
    /// Builds the reaction; `dx` is the grid the calibrations simulate on.
    pub fn build(&self, dx: f64) -> frontlab::Result<Built> {
        let plain = |spec| Ok(Built { spec, calibration: None });
        match *self {
            ReactionDesc::CubicBistable { a } => plain(make_cubic_bistable(a)?),
            ReactionDesc::G0 {} => plain(make_g0()?),
            ReactionDesc::G1 { k } => plain(make_g1(k)?),
            ReactionDesc::Ignition { theta_tilde, amplitude, power } => {
                plain(make_ignition(theta_tilde, IgnitionShape { amplitude, power })?)
            }
            ReactionDesc::PeriodicIgnition { theta_lo, theta_hi, period, amplitude } => {
                plain(make_periodic_ignition(theta_lo, theta_hi, period, amplitude)?)
            }
            ReactionDesc::IgnitionViolator { theta_lo, theta_gap, theta0, period, plateau, bump } => {
                plain(make_ignition_violator(theta_lo, theta_gap, theta0, period, plateau, bump)?)
            }
            ReactionDesc::PeriodicCubic { a_lo, a_hi, period } => plain(make_periodic_cubic(a_lo, a_hi, period)?),
            ReactionDesc::RandomErgodic { p, seed, lo, hi, theta_tilde, amplitude } => {
                plain(make_random_ergodic(p, seed, RandomLaw { lo, hi, theta_tilde, amplitude })?)
            }
            ReactionDesc::SpatialCounterexample { base_a, theta0, delta, a, k } => {
                let f0 = make_cubic_bistable(base_a)?.envelope.f0.clone();
                match (a, k) {
                    (Some(a), Some(k)) => {
                        let layout = SpatialLayout::new(f0, theta0, delta)?;
                        plain(make_spatial_counterexample(&layout, a, k)?)
                    }
                    _ => {
                        let opts = SpatialCalibrationOptions { delta, dx, ..Default::default() };
                        let (cal, spec) = calibrate_spatial_counterexample(f0, theta0, &opts)?;
                        Ok(Built { spec, calibration: Some(Calibration::Spatial(cal)) })
                    }
                }
            }
            ReactionDesc::TemporalCounterexample { delta, k, reaction_cfl } => match (delta, k) {
                (Some(delta), Some(k)) => plain(make_temporal_counterexample(delta, k)?),
                _ => {
                    let opts = TemporalCalibrationOptions { dx, reaction_cfl, ..Default::default() };
                    let cal = calibrate_temporal_counterexample(&opts)?;
                    let spec = make_temporal_counterexample(cal.delta, cal.k)?;
                    Ok(Built { spec, calibration: Some(Calibration::Temporal(cal)) })
                }
            },
        }
    }

    /// Closed-form front speed, where one is known.
    pub fn closed_form_speed(&self) -> Option<f64> {
        match *self {
            ReactionDesc::CubicBistable { a } => Some(2f64.sqrt() * (0.5 - a)),
            _ => None,
        }
    }

    /// Constructor name, as written in config files.
    pub fn constructor(&self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.get("constructor").and_then(|c| c.as_str()).map(String::from))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Fixed,
    Follow,
    Growable,
}

fn dx_default() -> f64 {
    0.05
}

fn level_default() -> f64 {
    0.5
}

fn margin_default() -> f64 {
    20.0
}

fn cap_default() -> usize {
    1 << 22
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDesc {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default = "dx_default")]
    pub dx: f64,
    /// Explicit step; otherwise `min(dx^2/2, reaction_cfl/K)` aligned to the stride.
    pub dt: Option<f64>,
    pub reaction_cfl: Option<f64>,
    #[serde(default)]
    pub window: WindowKind,
    /// Level followed by the `follow` window.
    #[serde(default = "level_default")]
    pub level: f64,
    /// Edge tolerance of the `fixed` and `growable` windows.
    pub tol: Option<f64>,
    #[serde(default = "margin_default")]
    pub margin: f64,
    #[serde(default = "cap_default")]
    pub cap: usize,
    /// Far-field values `[left, right]`; default from the initial data.
    pub bc: Option<[f64; 2]>,
}

fn true_default() -> bool {
    true
}

fn stride_default() -> f64 {
    1.0
}

fn every_default() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDesc {
    #[serde(default = "true_default")]
    pub simulate: bool,
    #[serde(default)]
    pub t_final: f64,
    #[serde(default = "stride_default")]
    pub snapshot_stride: f64,
    /// Write every n-th snapshot to snapshots.csv (diagnostics see all of them).
    #[serde(default = "every_default")]
    pub csv_every: usize,
    #[serde(default)]
    pub track_ut: bool,
    /// Ensemble seeds for randomised diagnostics.
    #[serde(default)]
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagKind {
    SpeedOracle,
    HypothesisSpace,
    HypothesisTime,
    PdeSpeed,
    ShiftConvergence,
    WidthBound,
    YMinusX,
    SparkComposite,
    CalibrationItems,
    WidthGrowth,
    ControlGrowth,
    BlockGain,
    Ignition,
    IgnitionViolation,
    Pulsating,
    Ergodic,
    Bounds,
    UtMonotone,
    Comparison,
}

impl DiagKind {
    pub fn needs_simulation(self) -> bool {
        !matches!(
            self,
            DiagKind::SpeedOracle
                | DiagKind::HypothesisSpace
                | DiagKind::HypothesisTime
                | DiagKind::CalibrationItems
                | DiagKind::Ignition
                | DiagKind::IgnitionViolation
                | DiagKind::Ergodic
                | DiagKind::Comparison
        )
    }
}

fn extra_default() -> f64 {
    40.0
}

fn shift_every_default() -> f64 {
    10.0
}

/// Second front-like run for the time-shift convergence curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftDesc {
    pub initial: InitialCondition,
    /// The second run lasts this much longer; also the largest time shift.
    #[serde(default = "extra_default")]
    pub t_extra: f64,
    /// Spacing of the convergence curve.
    #[serde(default = "shift_every_default")]
    pub every: f64,
    /// Snapshot stride of the second run; defaults to the main stride.
    pub stride: Option<f64>,
}

fn composite_stride_default() -> f64 {
    0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositeDesc {
    #[serde(default = "extra_default")]
    pub max_shift: f64,
    #[serde(default = "composite_stride_default")]
    pub stride: f64,
}

impl Default for CompositeDesc {
    fn default() -> Self {
        Self { max_shift: extra_default(), stride: composite_stride_default() }
    }
}

fn n_default() -> usize {
    20
}

fn eta_default() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsDesc {
    #[serde(default)]
    pub list: Vec<DiagKind>,
    /// Levels for `Z-`, `Z+` and widths; default `{0.1, 0.01, eps0}`.
    pub eps: Option<Vec<f64>>,
    /// Overrides the derived or calibrated `eps0`.
    pub epsilon0: Option<f64>,
    /// Start of fit windows; default half the run.
    pub fit_from: Option<f64>,
    /// Start of the pulsating-identity window; default two thirds of the run.
    pub t_from: Option<f64>,
    /// Margin at which `ignition_violation` expects the check to fail.
    #[serde(default = "eta_default")]
    pub eta: f64,
    /// Ergodic sequence length.
    #[serde(default = "n_default")]
    pub n: usize,
    pub shift: Option<ShiftDesc>,
    #[serde(default)]
    pub composite: CompositeDesc,
}

impl Default for DiagnosticsDesc {
    fn default() -> Self {
        Self {
            list: Vec::new(),
            eps: None,
            epsilon0: None,
            fit_from: None,
            t_from: None,
            eta: eta_default(),
            n: n_default(),
            shift: None,
            composite: CompositeDesc::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// What the scenario demonstrates; shown by `list`.
    #[serde(default)]
    pub claim: String,
    pub reaction: ReactionDesc,
    pub grid: GridDesc,
    pub initial: Option<InitialCondition>,
    pub run: RunDesc,
    #[serde(default)]
    pub diagnostics: DiagnosticsDesc,
    /// Overrides of [`DEFAULTS`] thresholds.
    #[serde(default)]
    pub acceptance: BTreeMap<String, f64>,
}

impl Scenario {
    /// Parses and validates; `origin` names the source in messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, SchemaError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| SchemaError(format!("{origin}: {e}")))?;
        sc.validate().map_err(|e| SchemaError(format!("{origin}: {e}")))?;
        Ok(sc)
    }

    fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err("field `name` must be a nonempty file-name-safe string".into());
        }
        for (key, v) in &self.acceptance {
            if default_threshold(key).is_none() {
                return Err(format!("[acceptance] unknown threshold `{key}`"));
            }
            if !(*v > 0.0 && v.is_finite()) {
                return Err(format!("[acceptance] threshold `{key}` must be positive, got {v}"));
            }
        }
        let needs_sim = self.diagnostics.list.iter().any(|d| d.needs_simulation());
        if needs_sim && !self.run.simulate {
            return Err("[run] simulate = false but [diagnostics] needs a simulation".into());
        }
        if self.run.simulate {
            if self.initial.is_none() {
                return Err("missing section [initial] (required when [run] simulate = true)".into());
            }
            if !(self.run.t_final > 0.0) {
                return Err("[run] t_final must be positive when simulating".into());
            }
        }
        if self.run.csv_every == 0 {
            return Err("[run] csv_every must be at least 1".into());
        }
        let randomised = self.diagnostics.list.iter().any(|d| matches!(d, DiagKind::Ergodic | DiagKind::Comparison));
        if randomised && self.run.seeds.is_empty() {
            return Err("[run] seeds are mandatory for ergodic and comparison diagnostics".into());
        }
        if self.diagnostics.list.contains(&DiagKind::ShiftConvergence) && self.diagnostics.shift.is_none() {
            return Err("[diagnostics.shift] is required by shift_convergence".into());
        }
        if self.diagnostics.list.contains(&DiagKind::UtMonotone) && !self.run.track_ut {
            return Err("ut_monotone needs [run] track_ut = true".into());
        }
        Ok(())
    }

    pub fn threshold(&self, key: &str) -> f64 {
        self.acceptance
            .get(key)
            .copied()
            .or_else(|| default_threshold(key))
            .unwrap_or_else(|| panic!("threshold `{key}` missing from DEFAULTS"))
    }

    /// Simulation config for `initial` on this grid; `k` is the reaction's Lipschitz bound.
    pub fn sim_config(&self, initial: InitialCondition, t_final: f64, stride: f64, k: f64) -> SimConfig {
        let g = &self.grid;
        let mut cfg = SimConfig::new(g.x_min, g.x_max, t_final, initial);
        cfg.dx = g.dx;
        cfg.snapshot_stride = stride;
        cfg.track_ut = self.run.track_ut;
        cfg.bc = g.bc.map(|[l, r]| (l, r));
        cfg.dt = g.dt.or_else(|| {
            g.reaction_cfl.map(|cfl| {
                let dt0 = (0.5 * g.dx * g.dx).min(cfl / k);
                if stride > 0.0 {
                    stride / (stride / dt0).ceil()
                } else {
                    dt0
                }
            })
        });
        cfg.window = match g.window {
            WindowKind::Fixed => WindowPolicy::Fixed { tol: g.tol.unwrap_or(1e-4) },
            WindowKind::Follow => WindowPolicy::FollowLevelSet { level: g.level },
            WindowKind::Growable => {
                WindowPolicy::Growable { margin: g.margin, tol: g.tol.unwrap_or(1e-10), cap: g.cap }
            }
        };
        cfg
    }
}

/// Reaction descriptor from `name` plus `key=value` pairs (values parsed as TOML).
pub fn reaction_from_args(name: &str, params: &[String]) -> Result<ReactionDesc, SchemaError> {
    let mut table = toml::Table::new();
    table.insert("constructor".into(), toml::Value::String(name.into()));
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| SchemaError(format!("parameter `{p}` is not of the form key=value")))?;
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {v}"))
            .map_err(|e| SchemaError(format!("parameter `{k}`: {e}")))?
            .remove("v")
            .expect("just inserted");
        table.insert(k.trim().into(), value);
    }
    ReactionDesc::deserialize(toml::Value::Table(table)).map_err(|e| SchemaError(format!("reaction {name}: {e}")))
}

/// Whether `f(x, u) = f(-x, u)` on a sample grid (needed to mirror runs).
pub fn is_even_in_x(spec: &ReactionSpec) -> bool {
    if spec.is_homogeneous() {
        return true;
    }
    let span = spec.period.unwrap_or(spec.window.1 - spec.window.0);
    (0..64).all(|i| {
        let x = span * i as f64 / 64.0;
        (1..20).all(|j| {
            let u = j as f64 / 20.0;
            (spec.eval(x, u) - spec.eval(-x, u)).abs() <= 1e-12
        })
    })
}
