//! Numerical calibration of the two front-free counterexamples.
//!
//! Both constructions are existence statements ("large enough K", "some M and
//! a"). Each constant is searched on the same grid and scheme that later runs
//! the counterexample, and every implication the construction relies on is
//! re-verified by simulation at the calibrated values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ImplicitDiffusion;
use crate::pdesim::{
    check_supersolution, simulate, InitialCondition, ResidualMode, SimConfig, SimState, Stepper,
    WindowPolicy,
};
use crate::reaction::{make_g0, make_g1, make_spatial_counterexample, Curve, ReactionSpec, SpatialLayout};
use crate::verdict::VerdictReport;

fn grid_state(x_min: f64, x_max: f64, dx: f64, dt: f64, u0: impl Fn(f64) -> f64, bc: (f64, f64)) -> SimState {
    let n = ((x_max - x_min) / dx).round() as usize + 1;
    SimState {
        t: 0.0,
        dt,
        dx,
        x_min,
        offset: 0,
        u: (0..n).map(|j| u0(x_min + j as f64 * dx)).collect(),
        bc_left: bc.0,
        bc_right: bc.1,
        steps: 0,
    }
}

/// Time step dividing `unit` with `dt <= min(dx^2/2, cfl/K)`.
fn aligned_dt(dx: f64, k: f64, unit: f64, cfl: f64) -> f64 {
    let dt0 = (0.5 * dx * dx).min(cfl / k);
    unit / (unit / dt0).ceil()
}

/// Steps `st` to time `t_end`. With `far_field`, the Dirichlet values follow
/// the reaction ODE, which is exact for spatially constant far fields of a
/// homogeneous reaction.
fn run_until(spec: &ReactionSpec, st: &mut SimState, stepper: &mut Stepper<'_>, t_end: f64, far_field: bool) -> Result<()> {
    let target = (t_end / st.dt).round() as u64;
    while st.steps < target {
        if far_field {
            let dt = st.dt;
            st.bc_left = (st.bc_left + dt * spec.eval(0.0, st.bc_left)).clamp(0.0, 1.0);
            st.bc_right = (st.bc_right + dt * spec.eval(0.0, st.bc_right)).clamp(0.0, 1.0);
        }
        stepper.step(st)?;
    }
    Ok(())
}

/// `(min, argmin)` of `u` over nodes with `keep(x)`.
fn min_where(st: &SimState, keep: impl Fn(f64) -> bool) -> (f64, f64) {
    (0..st.u.len())
        .filter(|&j| keep(st.x(j)))
        .map(|j| (st.u[j], st.x(j)))
        .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a })
}

fn max_where(st: &SimState, keep: impl Fn(f64) -> bool) -> (f64, f64) {
    (0..st.u.len())
        .filter(|&j| keep(st.x(j)))
        .map(|j| (st.u[j], st.x(j)))
        .fold((f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a })
}

fn lower_verdict(name: &str, min: (f64, f64), level: f64) -> VerdictReport {
    let mut rep = VerdictReport::new(name);
    rep.margin = min.0 - level;
    rep.pass = rep.margin >= 0.0;
    rep.witness(min.1, min.0, format!("minimum against required {level:.6}"));
    rep.finish()
}

fn upper_verdict(name: &str, max: (f64, f64), level: f64) -> VerdictReport {
    let mut rep = VerdictReport::new(name);
    rep.margin = level - max.0;
    rep.pass = rep.margin >= 0.0;
    rep.witness(max.1, max.0, format!("maximum against allowed {level:.6}"));
    rep.finish()
}

// ---------------------------------------------------------------------------
// Spatial counterexample

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpatialCalibrationOptions {
    /// Defaults to `M / (8 sqrt(kappa))`.
    pub delta: Option<f64>,
    /// Initial boost; raised to the pure-bistability floor if smaller.
    pub k0: f64,
    pub k_cap: f64,
    pub dx: f64,
    /// Spreading steps verified after calibration.
    pub iterations: usize,
    /// Factor applied to the heat-flow floor when choosing `a`.
    pub a_safety: f64,
}

impl Default for SpatialCalibrationOptions {
    fn default() -> Self {
        Self { delta: None, k0: 1.0, k_cap: (1u64 << 20) as f64, dx: 0.05, iterations: 3, a_safety: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpatialCalibration {
    pub period: f64,
    pub m: f64,
    pub m_top: f64,
    pub top: f64,
    pub theta0: f64,
    pub theta0_prime: f64,
    pub p0: f64,
    pub p_min: f64,
    pub kappa: f64,
    pub delta: f64,
    pub a: f64,
    pub k: f64,
    /// `min{theta0, (1 - p0)/2}`: the terrace levels are `[eps0, 1 - eps0]`.
    pub epsilon0: f64,
    /// Minimal terrace growth rate `(M - 4 delta sqrt(kappa)) / (2 delta)`.
    pub minorant_rate: f64,
    /// `(K, one-cell spreading margin)` for every tried `K`.
    pub k_history: Vec<(f64, f64)>,
    pub verdicts: Vec<VerdictReport>,
}

impl SpatialCalibration {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// `e^{-kappa delta}`-discounted discrete heat flow of `theta0 chi_(-m,m)` after
/// time `delta`, minimised over `(-m - M, m + M)`.
fn heat_floor(l: &SpatialLayout, dx: f64) -> f64 {
    let dt = aligned_dt(dx, l.kappa, l.delta, 0.5);
    let steps = (l.delta / dt).round() as i32;
    let reach = l.m + l.period;
    let half = reach + l.period;
    let st = grid_state(-half, half, dx, dt, |x| if x.abs() < l.m { l.theta0 } else { 0.0 }, (0.0, 0.0));
    let mut u = st.u.clone();
    let solver = ImplicitDiffusion::new(u.len(), dt / (dx * dx));
    for _ in 0..steps {
        solver.solve(&mut u, 0.0, 0.0);
    }
    let min = (0..u.len()).filter(|&j| st.x(j).abs() < reach).map(|j| u[j]).fold(f64::INFINITY, f64::min);
    (1.0 - dt * l.kappa).powi(steps) * min
}

/// Spreading from `theta0 chi_(-m,m)`: margins of `min u - theta0` on the
/// cores `|x - kM| < m`, `|k| <= i`, at `t = 2 i delta` for `i = 1..=j`.
fn spreading_margins(spec: &ReactionSpec, l: &SpatialLayout, dx: f64, j: usize) -> Result<Vec<(f64, f64)>> {
    let dt = aligned_dt(dx, spec.lipschitz_k, l.delta, 0.5);
    let half = (j as f64 + 2.0) * l.period + l.m;
    let mut st = grid_state(-half, half, dx, dt, |x| if x.abs() < l.m { l.theta0 } else { 0.0 }, (0.0, 0.0));
    let mut stepper = Stepper::new(spec, &st)?;
    let mut out = Vec::with_capacity(j);
    for i in 1..=j {
        run_until(spec, &mut st, &mut stepper, 2.0 * i as f64 * l.delta, false)?;
        let (mm, m) = (l.period, l.m);
        let keep = |x: f64| {
            let k = (x / mm).round();
            k.abs() <= i as f64 && (x - k * mm).abs() < m - 1e-9
        };
        let (min, at) = min_where(&st, keep);
        out.push((min - l.theta0, at));
    }
    Ok(out)
}

/// Calibrates `a` and `K` for the spatial counterexample over the base `f0`
/// (pure bistable, threshold `theta0`) and verifies the spreading steps, the
/// travelling upper bound and the supersolution it rests on.
pub fn calibrate_spatial_counterexample(
    f0: Curve,
    theta0: f64,
    opts: &SpatialCalibrationOptions,
) -> Result<(SpatialCalibration, ReactionSpec)> {
    let l = SpatialLayout::new(f0, theta0, opts.delta)?;
    let a = (opts.a_safety * heat_floor(&l, opts.dx)).min(0.5 * theta0);
    if !(a > 0.0) {
        return Err(Error::CalibrationCap(format!("heat-flow floor underflows for M = {}", l.period)));
    }
    let mut k = opts.k0.max(1.05 * l.min_boost());
    let mut history = Vec::new();
    let spec = loop {
        let spec = make_spatial_counterexample(&l, a, k)?;
        let margin = spreading_margins(&spec, &l, opts.dx, 1)?[0].0;
        history.push((k, margin));
        if margin >= 0.0 {
            break spec;
        }
        k *= 2.0;
        if k > opts.k_cap {
            return Err(Error::CalibrationCap(format!(
                "K exceeded {} without one-cell spreading (last margin {margin:.3e})",
                opts.k_cap
            )));
        }
    };
    let mut verdicts = Vec::new();
    let margins = spreading_margins(&spec, &l, opts.dx, opts.iterations.max(1))?;
    let (m1, at1) = margins[0];
    verdicts.push(VerdictReport::from_margin(
        "one_cell_spreading",
        m1,
        crate::verdict::Witness::new(at1, m1 + theta0, "min u on the three cores at t = 2 delta"),
    ));
    let mut rep = VerdictReport::new("iterated_spreading");
    rep.margin = margins.iter().map(|m| m.0).fold(f64::INFINITY, f64::min);
    for (i, &(mg, at)) in margins.iter().enumerate() {
        if mg < 0.0 {
            rep.fail_at(at, mg, format!("cores |k| <= {} at t = {} delta", i + 1, 2 * (i + 1)));
        }
    }
    rep.witness(margins.len() as f64, rep.margin, "steps verified");
    verdicts.push(rep.finish());

    let (tail, sup) = tail_checks(&spec, &l, opts)?;
    verdicts.push(tail);
    verdicts.push(sup);

    let sk = l.kappa.sqrt();
    let cal = SpatialCalibration {
        period: l.period,
        m: l.m,
        m_top: l.m_top,
        top: l.top,
        theta0,
        theta0_prime: l.theta0_prime,
        p0: l.p0,
        p_min: l.p_min,
        kappa: l.kappa,
        delta: l.delta,
        a,
        k,
        epsilon0: theta0.min(0.5 * (1.0 - l.p0)),
        minorant_rate: (l.period - 4.0 * l.delta * sk) / (2.0 * l.delta),
        k_history: history,
        verdicts,
    };
    Ok((cal, spec))
}

/// Front-like run from `min(1, e^{-2 sqrt(kappa) x})`, which lies below
/// `w(0, .) = p + e^{-sqrt(kappa) x}`: the point bound
/// `u(t, 2 sqrt(kappa) t + ln(2/(1 - p0))/kappa) <= (1 + p0)/2` and the
/// sampled supersolution residual of `w`.
fn tail_checks(spec: &ReactionSpec, l: &SpatialLayout, opts: &SpatialCalibrationOptions) -> Result<(VerdictReport, VerdictReport)> {
    let sk = l.kappa.sqrt();
    let t_end = 2.0 * opts.iterations.max(1) as f64 * l.delta;
    let x_hi = 2.0 * sk * t_end + 4.0 * l.period;
    let mut cfg = SimConfig::new(-2.0 * l.period, x_hi, t_end, InitialCondition::FrontLike {
        a: 0.0,
        y: 0.0,
        mu: 2.0 * sk,
        beta: 1.0,
    });
    cfg.dx = opts.dx;
    cfg.snapshot_stride = 0.25 * l.delta;
    cfg.window = WindowPolicy::Growable { margin: l.period, tol: 1e-12, cap: 1 << 22 };
    let traj = simulate(&cfg, spec)?;
    let shift = (2.0 / (1.0 - l.p0)).ln() / l.kappa;
    let cap = 0.5 * (1.0 + l.p0);
    let mut tail = VerdictReport::new("tail_bound");
    let mut worst = (f64::NEG_INFINITY, 0.0);
    for s in &traj.snapshots {
        let x = 2.0 * sk * s.t + shift;
        let v = s.eval(x);
        if v > worst.0 {
            worst = (v, s.t);
        }
        if v > cap {
            tail.fail_at(s.t, v, format!("u at x = {x:.4} exceeds {cap:.6}"));
        }
    }
    tail.margin = cap - worst.0;
    tail.witness(worst.1, worst.0, "largest u on the tail ray");

    let p = l.p.clone();
    let w = move |t: f64, x: f64| p.eval(x) + (-sk * (x - 2.0 * sk * t)).exp();
    let samples: Vec<(f64, f64)> = (1..=16)
        .flat_map(|i| {
            let t = t_end * i as f64 / 16.0;
            let x0 = 2.0 * sk * t - 4.0 / sk;
            (0..200).map(move |j| (t, x0 + 0.173 * j as f64))
        })
        .filter(|&(t, x)| w(t, x) <= 1.0)
        .collect();
    let sup = check_supersolution(&w, spec, &samples, ResidualMode::Super, 1e-5, 1e-3);
    let mut sup = VerdictReport { name: "supersolution_w".into(), ..sup };
    sup.witness(samples.len() as f64, sup.margin, "samples with w <= 1");
    Ok((tail.finish(), sup.finish()))
}

// ---------------------------------------------------------------------------
// Temporal counterexample

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalCalibrationOptions {
    pub k0: f64,
    pub k_cap: f64,
    pub m0: f64,
    pub m_growth: f64,
    pub m_cap: f64,
    /// Candidates for `a` are `2^-k` from `a_max` down to `a_floor`.
    pub a_max: f64,
    pub a_floor: f64,
    pub dx: f64,
    /// Extra domain beyond the checked intervals.
    pub pad: f64,
    /// `dt K` of the item simulations; the scheme is monotone up to 1.
    pub reaction_cfl: f64,
}

impl Default for TemporalCalibrationOptions {
    fn default() -> Self {
        Self {
            k0: 64.0,
            k_cap: (1u64 << 20) as f64,
            m0: 2.0,
            m_growth: 1.25,
            m_cap: 200.0,
            a_max: 1.0 / 32.0,
            a_floor: 1.0 / 4096.0,
            dx: 0.05,
            pad: 15.0,
            reaction_cfl: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalCalibration {
    pub m: f64,
    pub a: f64,
    pub k: f64,
    /// `a / 8`.
    pub delta: f64,
    /// `(M, a)` candidates tried before the first full pass of the three
    /// K-independent items.
    pub ma_history: Vec<(f64, f64)>,
    /// `(K, margin)` of the boosted spreading item.
    pub k_history: Vec<(f64, f64)>,
    pub verdicts: Vec<VerdictReport>,
}

impl TemporalCalibration {
    pub fn pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

const FIVE_EIGHTHS: f64 = 5.0 / 8.0;

/// Lower piece for one time unit from `chi_(-inf,0] + (5/8) chi_(0,inf)`:
/// `u(1) <= 5/8 - 2a` beyond `M`.
fn item_upper_lower_phase(g0: &ReactionSpec, m: f64, a: f64, o: &TemporalCalibrationOptions) -> Result<VerdictReport> {
    let dt = aligned_dt(o.dx, g0.lipschitz_k, 1.0, o.reaction_cfl);
    let mut st = grid_state(-o.pad, m + o.pad, o.dx, dt, |x| if x <= 0.0 { 1.0 } else { FIVE_EIGHTHS }, (1.0, FIVE_EIGHTHS));
    let mut stepper = Stepper::new(g0, &st)?;
    run_until(g0, &mut st, &mut stepper, 1.0, true)?;
    Ok(upper_verdict("upper_barrier_lower_phase", max_where(&st, |x| x > m), FIVE_EIGHTHS - 2.0 * a))
}

/// Upper piece for three time units from the previous bound: `u <= 5/8 - a`
/// beyond `2M`.
fn item_upper_upper_phase(g1: &ReactionSpec, m: f64, a: f64, o: &TemporalCalibrationOptions) -> Result<VerdictReport> {
    let dt = aligned_dt(o.dx, g1.lipschitz_k.max(1.0), 1.0, o.reaction_cfl);
    let lo = FIVE_EIGHTHS - 2.0 * a;
    let mut st = grid_state(-o.pad, 2.0 * m + o.pad, o.dx, dt, |x| if x <= m { 1.0 } else { lo }, (1.0, lo));
    let mut stepper = Stepper::new(g1, &st)?;
    run_until(g1, &mut st, &mut stepper, 3.0, true)?;
    Ok(upper_verdict("upper_barrier_upper_phase", max_where(&st, |x| x > 2.0 * m), FIVE_EIGHTHS - a))
}

/// Lower piece for three time units from `(4/11) chi_(-M,M)`: `u >= 3/11` on
/// `(-1, 1)` after one and after three units.
fn item_lower_lower_phase(g0: &ReactionSpec, m: f64, o: &TemporalCalibrationOptions) -> Result<VerdictReport> {
    let dt = aligned_dt(o.dx, g0.lipschitz_k, 1.0, o.reaction_cfl);
    let half = m + o.pad;
    let mut st = grid_state(-half, half, o.dx, dt, |x| if x.abs() < m { 4.0 / 11.0 } else { 0.0 }, (0.0, 0.0));
    let mut stepper = Stepper::new(g0, &st)?;
    run_until(g0, &mut st, &mut stepper, 1.0, false)?;
    let first = min_where(&st, |x| x.abs() < 1.0);
    run_until(g0, &mut st, &mut stepper, 3.0, false)?;
    let second = min_where(&st, |x| x.abs() < 1.0);
    let worst = if first.0 < second.0 { first } else { second };
    Ok(lower_verdict("lower_barrier_lower_phase", worst, 3.0 / 11.0))
}

/// Boosted upper piece for one time unit from `(2/11) chi_(-1,1)`:
/// `u >= 5/11` on `(-4M, 4M)`.
fn item_lower_upper_phase(g1: &ReactionSpec, m: f64, o: &TemporalCalibrationOptions) -> Result<VerdictReport> {
    let dt = aligned_dt(o.dx, g1.lipschitz_k.max(1.0), 1.0, o.reaction_cfl);
    let half = 4.0 * m + o.pad;
    let mut st = grid_state(-half, half, o.dx, dt, |x| if x.abs() < 1.0 { 2.0 / 11.0 } else { 0.0 }, (0.0, 0.0));
    let mut stepper = Stepper::new(g1, &st)?;
    run_until(g1, &mut st, &mut stepper, 1.0, false)?;
    Ok(lower_verdict("lower_barrier_upper_phase", min_where(&st, |x| x.abs() < 4.0 * m), 5.0 / 11.0))
}

/// Drop of the far field `5/8` under the lower piece over one time unit.
fn far_field_drop(g0: &ReactionSpec, dx: f64) -> f64 {
    let dt = aligned_dt(dx, g0.lipschitz_k, 1.0, 0.5);
    let mut v = FIVE_EIGHTHS;
    for _ in 0..(1.0 / dt).round() as u64 {
        v += dt * g0.eval(0.0, v);
    }
    FIVE_EIGHTHS - v
}

/// Searches `a` downward and `M` upward until the three K-independent items
/// hold, then doubles `K` until the boosted spreading item holds. Returns the
/// constants with `delta = a/8` and all four verdicts at the final values.
pub fn calibrate_temporal_counterexample(o: &TemporalCalibrationOptions) -> Result<TemporalCalibration> {
    let g0 = make_g0()?;
    let g1_zero = make_g1(0.0)?;
    let drop = far_field_drop(&g0, o.dx);
    let mut ma_history = Vec::new();
    let mut found = None;
    let mut a = o.a_max;
    while a >= o.a_floor && found.is_none() {
        // The far field alone must clear 2a with a 5% cushion.
        if 2.0 * a <= 0.95 * drop {
            let mut m = o.m0;
            while m <= o.m_cap {
                ma_history.push((m, a));
                let ok = item_upper_lower_phase(&g0, m, a, o)?.pass
                    && item_upper_upper_phase(&g1_zero, m, a, o)?.pass
                    && item_lower_lower_phase(&g0, m, o)?.pass;
                if ok {
                    found = Some((m, a));
                    break;
                }
                m *= o.m_growth;
            }
        }
        a *= 0.5;
    }
    let (m, a) = found.ok_or_else(|| {
        Error::CalibrationCap(format!("no (M <= {}, a >= {}) passes; far-field drop {drop:.3e}", o.m_cap, o.a_floor))
    })?;
    let mut k = o.k0;
    let mut k_history = Vec::new();
    loop {
        let rep = item_lower_upper_phase(&make_g1(k)?, m, o)?;
        k_history.push((k, rep.margin));
        if rep.pass {
            break;
        }
        k *= 2.0;
        if k > o.k_cap {
            return Err(Error::CalibrationCap(format!("K exceeded {} (last margin {:.3e})", o.k_cap, rep.margin)));
        }
    }
    let g1 = make_g1(k)?;
    let verdicts = vec![
        item_upper_lower_phase(&g0, m, a, o)?,
        item_upper_upper_phase(&g1, m, a, o)?,
        item_lower_lower_phase(&g0, m, o)?,
        item_lower_upper_phase(&g1, m, o)?,
    ];
    Ok(TemporalCalibration { m, a, k, delta: a / 8.0, ma_history, k_history, verdicts })
}
