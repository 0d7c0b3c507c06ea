use serde::{Deserialize, Serialize};

use crate::numerics::golden_min;
use crate::pdesim::Snapshot;

/// Linear interpolation in time between the snapshots bracketing `t`.
/// `None` outside the recorded range.
pub fn eval_at(traj: &[Snapshot], t: f64, x: f64) -> Option<f64> {
    let k = bracket(traj, t)?;
    let (a, b) = (&traj[k], &traj[(k + 1).min(traj.len() - 1)]);
    if b.t <= a.t {
        return Some(a.eval(x));
    }
    let w = (t - a.t) / (b.t - a.t);
    Some((1.0 - w) * a.eval(x) + w * b.eval(x))
}

fn bracket(traj: &[Snapshot], t: f64) -> Option<usize> {
    let first = traj.first()?;
    let last = traj.last()?;
    let tol = 1e-9 * (1.0 + last.t.abs());
    if t < first.t - tol || t > last.t + tol {
        return None;
    }
    let k = traj.partition_point(|s| s.t <= t);
    Some(k.saturating_sub(1).min(traj.len() - 1))
}

#[derive(Debug, Clone, Copy)]
pub enum ShiftMode<'a> {
    /// `sup_x |u2(x) - u1(x - s)|` over spatial shifts `|s| <= max_shift`.
    Space { max_shift: f64 },
    /// `sup_x |u1(x) - traj(t2 + tau, x)|` over time shifts `|tau| <= max_shift`
    /// where `t2` is the time of `u2`, a member of `trajectory`.
    Time { trajectory: &'a [Snapshot], max_shift: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftResult {
    pub shift: f64,
    pub sup_norm: f64,
}

/// Coarse scan over `n_coarse` shifts, then golden refinement around the best
/// one. Ties keep the coarse point, so identical inputs give `(0, 0)` exactly.
fn minimise(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n_coarse: usize, tol: f64) -> ShiftResult {
    let n = n_coarse.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (0.0f64, g(0.0));
    if lo > 0.0 || hi < 0.0 {
        best = (lo, g(lo));
    }
    for i in 0..n {
        let s = lo + i as f64 * h;
        let v = g(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    if best.1 > 0.0 {
        let (s, v) = golden_min(&g, (best.0 - h).max(lo), (best.0 + h).min(hi), tol);
        if v < best.1 {
            best = (s, v);
        }
    }
    ShiftResult { shift: best.0, sup_norm: best.1 }
}

/// Best shift and the sup-norm distance it achieves, sampled on `u1`'s nodes.
pub fn shift_distance(u1: &Snapshot, u2: &Snapshot, mode: ShiftMode<'_>) -> ShiftResult {
    match mode {
        ShiftMode::Space { max_shift } => {
            let g = |s: f64| {
                (0..u2.u.len()).map(|j| (u2.u[j] - u1.eval(u2.x(j) - s)).abs()).fold(0.0, f64::max)
            };
            let n = ((2.0 * max_shift / u1.dx).ceil() as usize + 1).clamp(3, 4001);
            minimise(g, -max_shift, max_shift, n, 1e-6 * u1.dx)
        }
        ShiftMode::Time { trajectory, max_shift } => {
            let g = |tau: f64| {
                (0..u1.u.len())
                    .map(|j| eval_at(trajectory, u2.t + tau, u1.x(j)).map_or(f64::INFINITY, |v| (u1.u[j] - v).abs()))
                    .fold(0.0, f64::max)
            };
            let (lo, hi, n) = time_range(trajectory, u2.t, max_shift);
            minimise(g, lo, hi, n, 1e-9)
        }
    }
}

/// Distance between a two-sided run `u` at time `t` and the composite
/// `w(t + tau, x) + w~(t + tau~, x) - 1` built from a right-moving run `right`
/// and a left-moving run `left`. Each shift is fitted on its own half-line
/// (split at `x_split`); the sup-norm is over all nodes of `u`.
pub fn composite_distance(
    u: &Snapshot,
    right: &[Snapshot],
    left: &[Snapshot],
    x_split: f64,
    max_shift: f64,
) -> CompositeFit {
    let fit = |traj: &[Snapshot], keep: &dyn Fn(f64) -> bool| {
        let g = |tau: f64| {
            (0..u.u.len())
                .filter(|&j| keep(u.x(j)))
                .map(|j| eval_at(traj, u.t + tau, u.x(j)).map_or(f64::INFINITY, |v| (u.u[j] - v).abs()))
                .fold(0.0, f64::max)
        };
        let (lo, hi, n) = time_range(traj, u.t, max_shift);
        minimise(g, lo, hi, n, 1e-9).shift
    };
    let tau_right = fit(right, &|x| x >= x_split);
    let tau_left = fit(left, &|x| x < x_split);
    let sup_norm = (0..u.u.len())
        .map(|j| {
            let x = u.x(j);
            match (eval_at(right, u.t + tau_right, x), eval_at(left, u.t + tau_left, x)) {
                (Some(a), Some(b)) => (u.u[j] - (a + b - 1.0)).abs(),
                _ => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max);
    CompositeFit { tau_right, tau_left, sup_norm }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeFit {
    pub tau_right: f64,
    pub tau_left: f64,
    pub sup_norm: f64,
}

/// Admissible time shifts around `t` within the recorded range, and a coarse
/// scan count matching the snapshot spacing.
fn time_range(traj: &[Snapshot], t: f64, max_shift: f64) -> (f64, f64, usize) {
    let t_lo = traj.first().map_or(t, |s| s.t);
    let t_hi = traj.last().map_or(t, |s| s.t);
    let lo = (-max_shift).max(t_lo - t);
    let hi = max_shift.min(t_hi - t);
    let step = traj.windows(2).map(|w| w[1].t - w[0].t).fold(f64::INFINITY, f64::min);
    let n = if step.is_finite() && step > 0.0 && hi > lo {
        (((hi - lo) / step).ceil() as usize + 1).clamp(3, 4001)
    } else {
        3
    };
    (lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_snap(t: f64, shift: f64) -> Snapshot {
        let dx = 0.05;
        Snapshot { t, x0: -20.0, dx, u: (0..801).map(|j| 1.0 / (1.0 + (-20.0 + j as f64 * dx - shift).exp())).collect() }
    }

    #[test]
    fn identical_snapshots_give_exact_zero() {
        let s = tanh_snap(0.0, 0.3);
        let r = shift_distance(&s, &s, ShiftMode::Space { max_shift: 2.0 });
        assert_eq!(r, ShiftResult { shift: 0.0, sup_norm: 0.0 });
    }

    #[test]
    fn recovers_fractional_node_shift() {
        let dx = 0.05;
        let a = tanh_snap(0.0, 0.0);
        let b = tanh_snap(0.0, 3.2 * dx);
        let r = shift_distance(&a, &b, ShiftMode::Space { max_shift: 1.0 });
        assert!((r.shift - 3.2 * dx).abs() < 1e-3, "{r:?}");
        assert!(r.sup_norm < 2e-4, "{r:?}");
    }

    #[test]
    fn recovers_time_shift_of_a_travelling_wave() {
        let c = 0.5;
        let traj: Vec<Snapshot> = (0..=40).map(|k| tanh_snap(k as f64 * 0.5, c * k as f64 * 0.5)).collect();
        let u1 = tanh_snap(7.0, c * 8.3);
        let r = shift_distance(&u1, &traj[14], ShiftMode::Time { trajectory: &traj, max_shift: 5.0 });
        assert!((r.shift - 1.3).abs() < 1e-2, "{r:?}");
        assert!(r.sup_norm < 5e-3, "{r:?}");
    }

    #[test]
    fn eval_at_interpolates_and_refuses_outside() {
        let traj = vec![tanh_snap(0.0, 0.0), tanh_snap(1.0, 0.0)];
        assert!(eval_at(&traj, 0.5, 0.0).is_some());
        assert!(eval_at(&traj, 1.5, 0.0).is_none());
    }
}
