//! Order-preserving time integration of `u_t = u_xx + f(x,u)` or
//! `u_t = u_xx + f(t,u)` on a truncated window with Dirichlet far-field values.
//!
//! One step is an explicit reaction substep followed by a backward-Euler
//! diffusion solve. With `dt K <= 1` the reaction map `u -> u + dt f(z,u)` is
//! nondecreasing, and the diffusion solve is an M-matrix inverse, so the whole
//! step preserves order and the bounds `0 <= u <= 1`.

mod supersolution;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::ImplicitDiffusion;
use crate::reaction::{Kind, ReactionSpec};
use crate::wavesolve::discrete_hump;

pub use supersolution::{check_supersolution, ResidualMode};

/// Initial data on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialCondition {
    /// `min(beta, e^{-mu (x - a - y)})`.
    FrontLike { a: f64, y: f64, mu: f64, beta: f64 },
    /// `min(beta, e^{-mu (x - a - l - y)}, e^{mu (x - a + l + y)})`.
    SparkLike { a: f64, l: f64, y: f64, mu: f64, beta: f64 },
    /// Discrete hump of the lower envelope, vanishing from `x = -shift` on.
    HumpV { shift: f64, epsilon0: f64 },
    /// `value` on `(lo, hi)`, 0 elsewhere.
    Indicator { lo: f64, hi: f64, value: f64 },
    Constant { value: f64 },
    /// Linear interpolation of `(x, u)` samples, clamped at the ends.
    Custom { x: Vec<f64>, u: Vec<f64> },
}

impl InitialCondition {
    /// Far-field values `(left, right)` matching the data's limits.
    pub fn default_bc(&self) -> (f64, f64) {
        match self {
            InitialCondition::FrontLike { .. } | InitialCondition::HumpV { .. } => (1.0, 0.0),
            InitialCondition::SparkLike { .. } | InitialCondition::Indicator { .. } => (0.0, 0.0),
            InitialCondition::Constant { value } => (*value, *value),
            InitialCondition::Custom { u, .. } => (u[0], u[u.len() - 1]),
        }
    }

    /// Samples the data at `x_j = x0 + j dx`, `j < n`.
    pub fn sample(&self, spec: &ReactionSpec, x0: f64, dx: f64, n: usize) -> Result<Vec<f64>> {
        let xs = (0..n).map(|j| x0 + j as f64 * dx);
        let u: Vec<f64> = match self {
            InitialCondition::FrontLike { a, y, mu, beta } => {
                xs.map(|x| beta.min((-mu * (x - a - y)).exp())).collect()
            }
            InitialCondition::SparkLike { a, l, y, mu, beta } => xs
                .map(|x| beta.min((-mu * (x - a - l - y)).exp()).min((mu * (x - a + l + y)).exp()))
                .collect(),
            InitialCondition::HumpV { shift, epsilon0 } => {
                let f0 = spec.envelope.f0_curve();
                let vals = discrete_hump(&*f0, *epsilon0, dx)?;
                let top = vals[0];
                let zero_node = ((-shift - x0) / dx).round() as i64;
                let first = zero_node - (vals.len() as i64 - 1);
                (0..n as i64)
                    .map(|j| {
                        if j < first {
                            top
                        } else if j > zero_node {
                            0.0
                        } else {
                            vals[(j - first) as usize]
                        }
                    })
                    .collect()
            }
            InitialCondition::Indicator { lo, hi, value } => {
                xs.map(|x| if x > *lo && x < *hi { *value } else { 0.0 }).collect()
            }
            InitialCondition::Constant { value } => vec![*value; n],
            InitialCondition::Custom { x, u } => {
                if x.len() != u.len() || x.len() < 2 {
                    return Err(invalid("initial", "custom table needs matching x, u with >= 2 rows"));
                }
                xs.map(|p| crate::numerics::lerp_table(x, u, p)).collect()
            }
        };
        if let Some((j, v)) = u.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(invalid("initial", format!("value {v} at node {j} outside [0, 1]")));
        }
        Ok(u)
    }
}

/// What to do when the solution reaches the window edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Abort when an edge value leaves its far-field value by more than `tol`.
    Fixed { tol: f64 },
    /// Translate by whole nodes so that the `level` crossing stays at the
    /// window centre.
    FollowLevelSet { level: f64 },
    /// Keep the anchor; append far-field nodes whenever the solution deviates
    /// by more than `tol` within `margin` of an edge. At most `cap` nodes.
    Growable { margin: f64, tol: f64, cap: usize },
}

/// Run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dx: f64,
    /// Defaults to `min(dx^2/2, 1/(2K))`, shortened to divide the snapshot
    /// stride so snapshots fall on exact multiples of it.
    pub dt: Option<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub t_final: f64,
    pub window: WindowPolicy,
    /// Time between snapshots; 0 disables snapshots.
    pub snapshot_stride: f64,
    pub initial: InitialCondition,
    /// Far-field values; defaults to the data's limits.
    pub bc: Option<(f64, f64)>,
    /// Track the minimum discrete `u_t` over the run.
    pub track_ut: bool,
}

impl SimConfig {
    pub fn new(x_min: f64, x_max: f64, t_final: f64, initial: InitialCondition) -> Self {
        Self {
            dx: 0.05,
            dt: None,
            x_min,
            x_max,
            t_final,
            window: WindowPolicy::Fixed { tol: 1e-4 },
            snapshot_stride: 1.0,
            initial,
            bc: None,
            track_ut: false,
        }
    }

    pub fn resolved_dt(&self, k: f64) -> f64 {
        self.dt.unwrap_or_else(|| {
            let dt0 = (0.5 * self.dx * self.dx).min(0.5 / k);
            if self.snapshot_stride > 0.0 {
                self.snapshot_stride / (self.snapshot_stride / dt0).ceil()
            } else {
                dt0
            }
        })
    }

    pub fn validate(&self, k: f64) -> Result<()> {
        if !(self.dx > 0.0 && self.x_max > self.x_min + 2.0 * self.dx) {
            return Err(invalid("grid", "need dx > 0 and a window of at least three nodes"));
        }
        let dt = self.resolved_dt(k);
        if !(dt > 0.0) || dt * k > 1.0 + 1e-12 {
            return Err(invalid("dt", format!("dt = {dt} violates dt K <= 1 with K = {k}")));
        }
        if !(self.t_final >= 0.0) || self.snapshot_stride < 0.0 {
            return Err(invalid("run", "t_final and snapshot_stride must be nonnegative"));
        }
        match &self.window {
            WindowPolicy::Fixed { tol } if !(*tol > 0.0) => Err(invalid("window", "tol must be positive")),
            WindowPolicy::FollowLevelSet { level } if !(*level > 0.0 && *level < 1.0) => {
                Err(invalid("window", "level must lie in (0, 1)"))
            }
            WindowPolicy::Growable { margin, tol, .. } if !(*margin > 0.0 && *tol > 0.0) => {
                Err(invalid("window", "margin and tol must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Solution samples on `x_j = x_min + (offset + j) dx`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub dt: f64,
    pub dx: f64,
    pub x_min: f64,
    /// Window offset in nodes relative to `x_min`.
    pub offset: i64,
    pub u: Vec<f64>,
    pub bc_left: f64,
    pub bc_right: f64,
    pub steps: u64,
}

impl SimState {
    pub fn new(cfg: &SimConfig, spec: &ReactionSpec) -> Result<Self> {
        cfg.validate(spec.lipschitz_k)?;
        let n = ((cfg.x_max - cfg.x_min) / cfg.dx).round() as usize + 1;
        let u = cfg.initial.sample(spec, cfg.x_min, cfg.dx, n)?;
        let (bl, br) = cfg.bc.unwrap_or_else(|| cfg.initial.default_bc());
        Ok(Self {
            t: 0.0,
            dt: cfg.resolved_dt(spec.lipschitz_k),
            dx: cfg.dx,
            x_min: cfg.x_min,
            offset: 0,
            u,
            bc_left: bl,
            bc_right: br,
            steps: 0,
        })
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + (self.offset + j as i64) as f64 * self.dx
    }

    pub fn x_left(&self) -> f64 {
        self.x(0)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot { t: self.t, x0: self.x_left(), dx: self.dx, u: self.u.clone() }
    }
}

/// Immutable copy of the solution at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub x0: f64,
    pub dx: f64,
    pub u: Vec<f64>,
}

impl Snapshot {
    pub fn x(&self, j: usize) -> f64 {
        self.x0 + j as f64 * self.dx
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.u.len() - 1)
    }

    /// Linear interpolation, extended by the edge values.
    pub fn eval(&self, x: f64) -> f64 {
        let s = (x - self.x0) / self.dx;
        let n = self.u.len();
        if s <= 0.0 {
            return self.u[0];
        }
        if s >= (n - 1) as f64 {
            return self.u[n - 1];
        }
        // Node coordinates return node values exactly.
        let r = s.round();
        if (s - r).abs() < 1e-9 {
            return self.u[r as usize];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.u[i] + w * self.u[i + 1]
    }
}

/// Advances a state by single steps, caching the diffusion factorisation.
pub struct Stepper<'a> {
    spec: &'a ReactionSpec,
    solver: ImplicitDiffusion,
    time_dependent: bool,
    range: (f64, f64),
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a ReactionSpec, state: &SimState) -> Result<Self> {
        if state.dt * spec.lipschitz_k > 1.0 + 1e-12 {
            return Err(invalid("dt", "dt K > 1 breaks the monotone reaction substep"));
        }
        let r = state.dt / (state.dx * state.dx);
        Ok(Self {
            spec,
            solver: ImplicitDiffusion::new(state.u.len(), r),
            time_dependent: spec.kind == Kind::TimeDependent,
            range: (f64::INFINITY, f64::NEG_INFINITY),
        })
    }

    fn refactor(&mut self, state: &SimState) {
        let r = state.dt / (state.dx * state.dx);
        self.solver = ImplicitDiffusion::new(state.u.len(), r);
    }

    pub fn step(&mut self, state: &mut SimState) -> Result<()> {
        if self.solver.len() != state.u.len() {
            self.refactor(state);
        }
        let dt = state.dt;
        let spec = self.spec;
        let (bl, br) = (state.bc_left, state.bc_right);
        let react = |z: f64, v: f64| (v + dt * spec.eval(z, v)).clamp(0.0, 1.0);
        let (lo, hi, finite) = if self.time_dependent {
            let t = state.t;
            self.solver.solve_fused(&mut state.u, bl, br, |_, v| react(t, v))
        } else if spec.is_homogeneous() {
            self.solver.solve_fused(&mut state.u, bl, br, |_, v| react(0.0, v))
        } else {
            let base = state.x_min + state.offset as f64 * state.dx;
            let dx = state.dx;
            self.solver.solve_fused(&mut state.u, bl, br, |j, v| react(base + j as f64 * dx, v))
        };
        state.steps += 1;
        state.t = state.steps as f64 * dt;
        if !finite {
            let node = state.u.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::NonFinite { node, t: state.t });
        }
        self.range = (lo, hi);
        Ok(())
    }

    /// `(min, max)` of the last step's solution before the roundoff clamp.
    pub fn last_range(&self) -> (f64, f64) {
        self.range
    }
}

/// One step of the scheme (builds the factorisation; prefer [`Stepper`] in loops).
pub fn step(state: &SimState, f: &ReactionSpec) -> Result<SimState> {
    let mut next = state.clone();
    Stepper::new(f, state)?.step(&mut next)?;
    Ok(next)
}

/// Run statistics gathered on the fly.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: u64,
    pub min_u: f64,
    pub max_u: f64,
    /// Minimum over steps and nodes of `(u^{n+1} - u^n)/dt`, when tracked.
    pub min_ut: Option<f64>,
    pub nodes_final: usize,
    pub shifts: i64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub stats: RunStats,
    pub final_state: SimState,
}

/// Index of the rightmost crossing of `level` from above.
fn rightmost_crossing(u: &[f64], level: f64) -> Option<usize> {
    (0..u.len().saturating_sub(1)).rev().find(|&j| u[j] >= level && u[j + 1] < level)
}

fn apply_window(state: &mut SimState, policy: &WindowPolicy) -> Result<i64> {
    let n = state.u.len();
    match policy {
        WindowPolicy::Fixed { tol } => {
            let dl = (state.u[0] - state.bc_left).abs();
            let dr = (state.u[n - 1] - state.bc_right).abs();
            if dl > *tol || dr > *tol {
                return Err(Error::WindowBreach { t: state.t, deviation: dl.max(dr) });
            }
            Ok(0)
        }
        WindowPolicy::FollowLevelSet { level } => {
            let Some(j) = rightmost_crossing(&state.u, *level) else { return Ok(0) };
            let shift = j as i64 - (n / 2) as i64;
            if shift > 0 {
                let k = shift as usize;
                state.u.drain(..k);
                state.u.extend(std::iter::repeat(state.bc_right).take(k));
                state.offset += shift;
            } else if shift < 0 {
                let k = (-shift) as usize;
                state.u.truncate(n - k);
                let mut v = vec![state.bc_left; k];
                v.append(&mut state.u);
                state.u = v;
                state.offset += shift;
            }
            Ok(shift)
        }
        WindowPolicy::Growable { margin, tol, cap } => {
            let mn = ((margin / state.dx).ceil() as usize).max(1);
            // Grow by one margin at a time: every extra node costs a full
            // tridiagonal sweep per step for the rest of the run.
            let chunk = mn;
            if n <= mn {
                return Ok(0);
            }
            let right_dev = state.u[n - 1 - mn..].iter().any(|&v| (v - state.bc_right).abs() > *tol);
            let left_dev = state.u[..mn].iter().any(|&v| (v - state.bc_left).abs() > *tol);
            let add = (right_dev as usize + left_dev as usize) * chunk;
            if add > 0 && n + add > *cap {
                return Err(Error::WindowCap { cap: *cap });
            }
            if right_dev {
                state.u.extend(std::iter::repeat(state.bc_right).take(chunk));
            }
            if left_dev {
                let mut v = vec![state.bc_left; chunk];
                v.append(&mut state.u);
                state.u = v;
                state.offset -= chunk as i64;
            }
            Ok(0)
        }
    }
}

/// Runs to `t_final`, taking snapshots every `snapshot_stride` (and at t = 0).
pub fn simulate(cfg: &SimConfig, f: &ReactionSpec) -> Result<Trajectory> {
    let state = SimState::new(cfg, f)?;
    simulate_from(cfg, f, state)
}

/// As [`simulate`] from an explicit state.
pub fn simulate_from(cfg: &SimConfig, f: &ReactionSpec, mut state: SimState) -> Result<Trajectory> {
    let clock = std::time::Instant::now();
    let mut stepper = Stepper::new(f, &state)?;
    let total = (cfg.t_final / state.dt).round() as u64;
    let stride = if cfg.snapshot_stride > 0.0 {
        ((cfg.snapshot_stride / state.dt).round() as u64).max(1)
    } else {
        u64::MAX
    };
    let mut snaps = Vec::new();
    if cfg.snapshot_stride > 0.0 {
        snaps.push(state.snapshot());
    }
    let mut stats = RunStats { min_u: f64::INFINITY, max_u: f64::NEG_INFINITY, ..Default::default() };
    let mut prev: Vec<f64> = Vec::new();
    let mut min_ut = f64::INFINITY;
    let start = state.steps;
    for k in 1..=total {
        if cfg.track_ut {
            prev.clear();
            prev.extend_from_slice(&state.u);
        }
        stepper.step(&mut state)?;
        if cfg.track_ut && prev.len() == state.u.len() {
            for (a, b) in prev.iter().zip(&state.u) {
                min_ut = min_ut.min((b - a) / state.dt);
            }
        }
        let (lo, hi) = stepper.last_range();
        stats.min_u = stats.min_u.min(lo);
        stats.max_u = stats.max_u.max(hi);
        stats.shifts += apply_window(&mut state, &cfg.window)?;
        if k % stride == 0 {
            snaps.push(state.snapshot());
        }
    }
    stats.steps = state.steps - start;
    stats.min_ut = cfg.track_ut.then_some(min_ut);
    stats.nodes_final = state.u.len();
    stats.wall_seconds = clock.elapsed().as_secs_f64();
    Ok(Trajectory { snapshots: snaps, stats, final_state: state })
}
