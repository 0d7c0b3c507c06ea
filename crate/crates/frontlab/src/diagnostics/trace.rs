use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fit_line;
use crate::pdesim::Snapshot;
use crate::reaction::ReactionSpec;
use crate::verdict::VerdictReport;
use crate::wavesolve::{alpha_f, ConstantsMode, DerivedConstants};

/// Default `eps` list: two decades plus `eps0`.
pub fn default_eps_list(epsilon0: f64) -> Vec<f64> {
    let mut v = vec![0.1, 0.01];
    if !v.iter().any(|e| (e - epsilon0).abs() < 1e-15) {
        v.push(epsilon0);
    }
    v
}

/// Which level defines `X(t)`.
#[derive(Clone, Copy)]
pub enum XLevel<'a> {
    /// Largest `x` with `u >= level`.
    Fixed(f64),
    /// Largest `x` with `u(t, x) >= alpha_f(t)` for a time-dependent ignition reaction.
    Alpha { spec: &'a ReactionSpec, zeta: f64 },
}

#[derive(Clone)]
pub struct TraceOptions<'a> {
    pub eps: Vec<f64>,
    pub x_level: XLevel<'a>,
    pub zeta: f64,
    /// Running-maximum forms of `X` (level mode only) and `Y`, for
    /// time-dependent reactions.
    pub running: bool,
}

impl<'a> TraceOptions<'a> {
    /// `X` at `theta1''` when the front hypothesis holds, otherwise at
    /// `(theta0 + 1)/2` as a descriptive statistic.
    pub fn from_constants(c: &DerivedConstants, eps: Vec<f64>) -> Self {
        let level = match c.mode {
            ConstantsMode::Hypothesis => c.theta1_dblprime,
            ConstantsMode::Ignition => 0.5 * (c.theta0 + 1.0),
        };
        Self { eps, x_level: XLevel::Fixed(level), zeta: c.zeta, running: false }
    }

    /// Options for runs where no hypothesis holds (counterexamples):
    /// `X` at `(theta0 + 1)/2` and `zeta = c0^2/8`.
    pub fn descriptive(theta0: f64, c0: f64, eps: Vec<f64>) -> Self {
        Self { eps, x_level: XLevel::Fixed(0.5 * (theta0 + 1.0)), zeta: 0.125 * c0 * c0, running: false }
    }
}

/// Interface positions per snapshot; `None` marks a level that is not attained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterfaceTrace {
    pub times: Vec<f64>,
    /// Rightmost crossing of 1/2.
    pub x_half: Vec<Option<f64>>,
    #[serde(rename = "X")]
    pub x_big: Vec<Option<f64>>,
    #[serde(rename = "Y")]
    pub y: Vec<Option<f64>>,
    pub eps: Vec<f64>,
    /// `[eps index][time index]`.
    pub z_minus: Vec<Vec<Option<f64>>>,
    pub z_plus: Vec<Vec<Option<f64>>>,
    pub width: Vec<Vec<Option<f64>>>,
    pub zeta: f64,
    pub running: bool,
}

/// Largest `x` with `u(x) >= level`, interpolated to the next node.
pub fn rightmost_at_least(s: &Snapshot, level: f64) -> Option<f64> {
    let n = s.u.len();
    let j = (0..n).rev().find(|&j| s.u[j] >= level)?;
    if j == n - 1 {
        return Some(s.x(j));
    }
    let (a, b) = (s.u[j], s.u[j + 1]);
    Some(s.x(j) + s.dx * (a - level) / (a - b))
}

/// `max{y : u > 1 - eps on (-inf, y)}` within the window.
pub fn z_minus(s: &Snapshot, eps: f64) -> Option<f64> {
    let level = 1.0 - eps;
    match s.u.iter().position(|&v| v <= level) {
        None => Some(s.x_end()),
        Some(0) => None,
        Some(j) => {
            let (a, b) = (s.u[j - 1], s.u[j]);
            Some(s.x(j - 1) + s.dx * (a - level) / (a - b))
        }
    }
}

/// `min{y : u < eps on (y, inf)}` within the window.
pub fn z_plus(s: &Snapshot, eps: f64) -> Option<f64> {
    rightmost_at_least(s, eps)
}

/// `sup_x [x + ln u(x) / sqrt(zeta)]` over nodes with `u > 0`.
pub fn y_envelope(s: &Snapshot, zeta: f64) -> Option<f64> {
    let r = 1.0 / zeta.sqrt();
    s.u.iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(j, &v)| s.x(j) + r * v.ln())
        .fold(None, |m: Option<f64>, y| Some(m.map_or(y, |m| m.max(y))))
}

fn running_max(v: &mut [Option<f64>]) {
    let mut best: Option<f64> = None;
    for e in v.iter_mut() {
        best = match (best, *e) {
            (Some(b), Some(x)) => Some(b.max(x)),
            (b, x) => b.or(x),
        };
        *e = best;
    }
}

/// Interface trace with `X` at `theta1''` (see [`TraceOptions::from_constants`]).
pub fn trace_interfaces(snapshots: &[Snapshot], constants: &DerivedConstants, eps: &[f64]) -> InterfaceTrace {
    trace_interfaces_with(snapshots, &TraceOptions::from_constants(constants, eps.to_vec()))
}

pub fn trace_interfaces_with(snapshots: &[Snapshot], opts: &TraceOptions<'_>) -> InterfaceTrace {
    let times: Vec<f64> = snapshots.iter().map(|s| s.t).collect();
    let x_half = snapshots.iter().map(|s| rightmost_at_least(s, 0.5)).collect();
    let mut x_big: Vec<Option<f64>> = snapshots
        .iter()
        .map(|s| match opts.x_level {
            XLevel::Fixed(level) => rightmost_at_least(s, level),
            XLevel::Alpha { spec, zeta } => rightmost_at_least(s, alpha_f(spec, s.t, zeta)),
        })
        .collect();
    let mut y: Vec<Option<f64>> = snapshots.iter().map(|s| y_envelope(s, opts.zeta)).collect();
    if opts.running {
        if matches!(opts.x_level, XLevel::Fixed(_)) {
            running_max(&mut x_big);
        }
        running_max(&mut y);
    }
    let z_minus: Vec<Vec<Option<f64>>> =
        opts.eps.iter().map(|&e| snapshots.iter().map(|s| z_minus(s, e)).collect()).collect();
    let z_plus: Vec<Vec<Option<f64>>> =
        opts.eps.iter().map(|&e| snapshots.iter().map(|s| z_plus(s, e)).collect()).collect();
    let width = z_minus
        .iter()
        .zip(&z_plus)
        .map(|(lo, hi)| lo.iter().zip(hi).map(|(a, b)| Some((*b)? - (*a)?)).collect())
        .collect();
    InterfaceTrace {
        times,
        x_half,
        x_big,
        y,
        eps: opts.eps.clone(),
        z_minus,
        z_plus,
        width,
        zeta: opts.zeta,
        running: opts.running,
    }
}

impl InterfaceTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the configured `eps` closest to `eps`.
    pub fn eps_index(&self, eps: f64) -> Option<usize> {
        (0..self.eps.len()).min_by(|&i, &j| {
            (self.eps[i] - eps).abs().partial_cmp(&(self.eps[j] - eps).abs()).unwrap()
        })
    }

    /// Defined `(t, value)` pairs of a series.
    pub fn defined(&self, series: &[Option<f64>]) -> Vec<(f64, f64)> {
        self.times.iter().zip(series).filter_map(|(&t, v)| v.map(|v| (t, v))).collect()
    }

    /// Least-squares slope of `x_half` over `t in [t0, t1]`.
    pub fn speed(&self, t0: f64, t1: f64) -> Result<LineFit> {
        let pts: Vec<(f64, f64)> =
            self.defined(&self.x_half).into_iter().filter(|&(t, _)| t >= t0 && t <= t1).collect();
        LineFit::of(&pts, 2)
    }

    /// `sup_t (Y - X)` over times where both are defined.
    pub fn y_minus_x_sup(&self, from: usize) -> Option<f64> {
        self.y[from..]
            .iter()
            .zip(&self.x_big[from..])
            .filter_map(|(y, x)| Some((*y)? - (*x)?))
            .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual.
    pub residual: f64,
    pub samples: usize,
}

impl LineFit {
    pub fn of(pts: &[(f64, f64)], need: usize) -> Result<Self> {
        if pts.len() < need.max(2) {
            return Err(Error::InsufficientSamples { need: need.max(2), have: pts.len() });
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        let (slope, intercept, residual) = fit_line(&xs, &ys);
        Ok(Self { slope, intercept, residual, samples: pts.len() })
    }
}

/// Minimum defined samples in the fitted tail half.
pub const MIN_FIT_SAMPLES: usize = 20;

/// Linear fit of `width_eps(t)` over the tail half of its defined samples.
pub fn width_growth_fit(trace: &InterfaceTrace, eps: f64) -> Result<LineFit> {
    let i = trace.eps_index(eps).ok_or_else(|| Error::InsufficientSamples { need: 1, have: 0 })?;
    let pts = trace.defined(&trace.width[i]);
    let tail = &pts[pts.len() / 2..];
    LineFit::of(tail, MIN_FIT_SAMPLES)
}

/// Empirical ingredients of the interface width bound
/// `width_eps <= c_xi T_eps + |ln eps| / sqrt(zeta) + C` for `t >= T_eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WidthBound {
    pub eps: f64,
    /// `sup_t (Y - X)`.
    pub c_recorded: f64,
    /// Smallest snapshot lag with `Z-_eps(t + T) >= X(t)` for every `t`.
    pub t_eps: f64,
    pub bound: f64,
    pub sup_width: f64,
}

/// Checks the width bound on a trace with uniformly spaced snapshots.
pub fn width_bound(trace: &InterfaceTrace, c_xi: f64, eps: f64) -> Result<(WidthBound, VerdictReport)> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::InsufficientSamples { need: 3, have: n });
    }
    let i = trace.eps_index(eps).ok_or_else(|| crate::error::invalid("eps", format!("{eps} was not traced")))?;
    let eps = trace.eps[i];
    let c = trace.y_minus_x_sup(0).ok_or_else(|| Error::Inconclusive("X or Y never defined".into()))?;
    let zm = &trace.z_minus[i];
    let lag = (0..n - 1)
        .find(|&k| {
            (0..n - k).all(|t| match (zm[t + k], trace.x_big[t]) {
                (Some(z), Some(x)) => z >= x,
                (_, None) => true,
                (None, Some(_)) => false,
            })
        })
        .ok_or_else(|| Error::InsufficientHorizon("Z- never catches up with X".into()))?;
    let t_eps = trace.times[lag] - trace.times[0];
    let bound = c_xi * t_eps + eps.ln().abs() / trace.zeta.sqrt() + c;
    let mut rep = VerdictReport::new(format!("width_bound_eps_{eps:.3e}"));
    let mut sup_width = f64::NEG_INFINITY;
    for k in lag..n {
        match trace.width[i][k] {
            Some(w) => {
                sup_width = sup_width.max(w);
                if w > bound {
                    rep.fail_at(trace.times[k], w, format!("width exceeds bound {bound:.6}"));
                }
            }
            None => rep.fail_at(trace.times[k], f64::NAN, "width undefined".into()),
        }
    }
    rep.margin = bound - sup_width;
    rep.witness(t_eps, c, "T_eps and recorded C");
    Ok((WidthBound { eps, c_recorded: c, t_eps, bound, sup_width }, rep.finish()))
}

/// `Y - X` stays bounded: its sup over the second half of the run does not
/// exceed the first-half sup by more than `tol`.
pub fn y_minus_x_bounded(trace: &InterfaceTrace, tol: f64) -> VerdictReport {
    let n = trace.len();
    let half = n / 2;
    let first = (0..half)
        .filter_map(|k| Some(trace.y[k]? - trace.x_big[k]?))
        .fold(f64::NEG_INFINITY, f64::max);
    let second = trace.y_minus_x_sup(half).unwrap_or(f64::INFINITY);
    let mut rep = VerdictReport::new("y_minus_x_bounded");
    rep.margin = first + tol - second;
    rep.pass = rep.margin >= 0.0 && second.is_finite();
    rep.witness(first, second, "first-half and second-half sup of Y - X");
    rep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snap(t: f64, x0: f64, dx: f64, f: impl Fn(f64) -> f64, n: usize) -> Snapshot {
        Snapshot { t, x0, dx, u: (0..n).map(|j| f(x0 + j as f64 * dx)).collect() }
    }

    #[test]
    fn exact_exponential_has_y_zero() {
        let zeta: f64 = 0.09;
        let s = snap(0.0, 0.0, 0.1, |x| (-zeta.sqrt() * x).exp(), 200);
        assert!(y_envelope(&s, zeta).unwrap().abs() < 1e-12);
    }

    #[test]
    fn translating_wave_levels_move_rigidly() {
        let c = 0.7;
        let w = |x: f64| 1.0 / (1.0 + (x / 2f64.sqrt()).exp());
        let snaps: Vec<Snapshot> = (0..30).map(|k| {
            let t = k as f64;
            snap(t, -40.0 + c * t, 0.05, |x| w(x - c * t), 1600)
        }).collect();
        let tr = trace_interfaces_with(&snaps, &TraceOptions {
            eps: vec![0.1, 0.01],
            x_level: XLevel::Fixed(0.3),
            zeta: 0.04,
            running: false,
        });
        for k in 0..30 {
            let t = k as f64;
            assert!((tr.x_half[k].unwrap() - c * t).abs() < 1e-12);
            let w0 = tr.width[1][0].unwrap();
            assert!((tr.width[1][k].unwrap() - w0).abs() < 1e-9);
        }
        let fit = tr.speed(0.0, 29.0).unwrap();
        assert!((fit.slope - c).abs() < 1e-12);
    }

    #[test]
    fn flat_width_has_zero_slope() {
        let snaps: Vec<Snapshot> = (0..60)
            .map(|k| snap(k as f64, -20.0, 0.05, |x| 1.0 / (1.0 + x.exp()), 800))
            .collect();
        let tr = trace_interfaces_with(&snaps, &TraceOptions {
            eps: vec![0.1],
            x_level: XLevel::Fixed(0.5),
            zeta: 0.04,
            running: false,
        });
        let fit = width_growth_fit(&tr, 0.1).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.samples, 30);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let snaps: Vec<Snapshot> = (0..10).map(|k| snap(k as f64, -5.0, 0.1, |x| 1.0 / (1.0 + x.exp()), 100)).collect();
        let tr = trace_interfaces_with(&snaps, &TraceOptions {
            eps: vec![0.1],
            x_level: XLevel::Fixed(0.5),
            zeta: 0.04,
            running: false,
        });
        assert!(matches!(width_growth_fit(&tr, 0.1), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn absent_levels_are_none() {
        let s = snap(0.0, 0.0, 0.1, |_| 0.2, 10);
        assert_eq!(rightmost_at_least(&s, 0.5), None);
        assert_eq!(z_minus(&s, 0.1), None);
        assert_eq!(z_plus(&s, 0.1), Some(s.x_end()));
    }

    #[test]
    fn running_forms_are_monotone() {
        let snaps: Vec<Snapshot> = (0..20)
            .map(|k| {
                let shift = (k as f64 * 0.7).sin() * 3.0;
                snap(k as f64, -30.0, 0.05, move |x| 1.0 / (1.0 + (x - shift).exp()), 1200)
            })
            .collect();
        let tr = trace_interfaces_with(&snaps, &TraceOptions {
            eps: vec![0.1],
            x_level: XLevel::Fixed(0.6),
            zeta: 0.04,
            running: true,
        });
        for k in 1..20 {
            assert!(tr.x_big[k].unwrap() >= tr.x_big[k - 1].unwrap());
            assert!(tr.y[k].unwrap() >= tr.y[k - 1].unwrap());
        }
    }
}
