use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{hermite3, hermite3_deriv, simpson, Dopri5, OdeTol};
use crate::reaction::ReactionSpec;

/// Shooting parameters for [`front_speed_with`].
#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    /// Bisection stops once the speed bracket is narrower than this.
    pub tol: f64,
    /// Distance from the saddle `u = 1` at which shots start.
    pub offset: f64,
    /// Largest step used when tabulating the final profile.
    pub profile_max_step: f64,
    pub ode: OdeTol,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { tol: 1e-10, offset: 1e-8, profile_max_step: 0.05, ode: OdeTol::default() }
    }
}

/// Traveling front `W(s)` with `W'' + c W' + f(W) = 0`, `W(-inf) = 1`,
/// `W(+inf) = 0`, centred so that `W(0) = 1/2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontProfile {
    pub speed: f64,
    /// Final bisection bracket containing the speed.
    pub bracket: (f64, f64),
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    /// `W ~ 1 - A e^{lambda_left s}` left of the table.
    pub lambda_left: f64,
    /// `W ~ B e^{-lambda_right s}` right of the table.
    pub lambda_right: f64,
    /// Max of `|W'' + c W' + f(W)|` at table midpoints.
    pub residual_max: f64,
}

impl FrontProfile {
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            return 1.0 - (1.0 - self.w[0]) * (self.lambda_left * (s - self.s[0])).exp();
        }
        if s >= self.s[n - 1] {
            return self.w[n - 1] * (-self.lambda_right * (s - self.s[n - 1])).exp();
        }
        let i = self.s.partition_point(|&v| v <= s) - 1;
        hermite3(self.s[i], self.s[i + 1], self.w[i], self.w[i + 1], self.dw[i], self.dw[i + 1], s)
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            let a = 1.0 - self.w[0];
            return -a * self.lambda_left * (self.lambda_left * (s - self.s[0])).exp();
        }
        if s >= self.s[n - 1] {
            let b = self.w[n - 1];
            return -b * self.lambda_right * (-self.lambda_right * (s - self.s[n - 1])).exp();
        }
        let i = self.s.partition_point(|&v| v <= s) - 1;
        hermite3_deriv(
            self.s[i],
            self.s[i + 1],
            self.w[i],
            self.w[i + 1],
            self.dw[i],
            self.dw[i + 1],
            s,
        )
    }

    /// The profile travelling at its speed: `W(x - x0 - c t)`.
    pub fn at(&self, t: f64, x: f64, x0: f64) -> f64 {
        self.eval(x - x0 - self.speed * t)
    }
}

fn hermite3_second(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let a = (12.0 * t - 6.0) / (h * h);
    let b = (6.0 * t - 4.0) / h;
    let c = (6.0 - 12.0 * t) / (h * h);
    let d = (6.0 * t - 2.0) / h;
    a * y0 + b * d0 + c * y1 + d * d1
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    /// Crossed below 0: the speed is too small.
    Over,
    /// Turned back above 0: the speed is too large.
    Under,
}

struct Shooter<'a> {
    f: &'a dyn Fn(f64) -> f64,
    fprime1: f64,
    /// `f == 0` on `(0, dead]` (sampled); 0 when there is no dead zone.
    dead: f64,
    opts: ShootOptions,
}

impl Shooter<'_> {
    fn lambda_plus(&self, c: f64) -> f64 {
        0.5 * (-c + (c * c - 4.0 * self.fprime1).sqrt())
    }

    fn start(&self, c: f64) -> [f64; 2] {
        let eta = self.opts.offset;
        [1.0 - eta, -self.lambda_plus(c) * eta]
    }

    fn classify(&self, c: f64, w: f64, v: f64) -> Option<Shot> {
        if w < -1e-10 {
            return Some(Shot::Over);
        }
        if v > -1e-12 && w > 1e-6 {
            return Some(Shot::Under);
        }
        if self.dead > 0.0 && w <= self.dead {
            // Exact dynamics in the dead zone: W -> W + V/c.
            if c <= 0.0 {
                return Some(Shot::Over);
            }
            return Some(if w + v / c < 0.0 { Shot::Over } else { Shot::Under });
        }
        None
    }

    fn shoot(&self, c: f64) -> Result<Shot> {
        let f = self.f;
        let mut ode = Dopri5::new(move |y: [f64; 2]| [y[1], -c * y[1] - f(y[0])], 0.0, self.start(c), self.opts.ode);
        for _ in 0..2_000_000 {
            ode.step()?;
            if let Some(s) = self.classify(c, ode.y[0], ode.y[1]) {
                return Ok(s);
            }
        }
        Err(Error::Inconclusive(format!("shot at c = {c} did not resolve")))
    }

    /// Tabulates the trajectory at speed `c` until it leaves the unit strip
    /// or settles near 0.
    fn trace(&self, c: f64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let f = self.f;
        let mut tol = self.opts.ode;
        tol.h_max = self.opts.profile_max_step;
        let mut ode = Dopri5::new(move |y: [f64; 2]| [y[1], -c * y[1] - f(y[0])], 0.0, self.start(c), tol);
        let (mut s, mut w, mut dw) = (vec![0.0], vec![ode.y[0]], vec![ode.y[1]]);
        let floor = if self.dead > 0.0 { self.dead.min(1e-3) } else { 1e-8 };
        for _ in 0..2_000_000 {
            ode.step()?;
            let (y0, y1) = (ode.y[0], ode.y[1]);
            if y0 <= 0.0 || y1 >= 0.0 {
                break;
            }
            s.push(ode.s);
            w.push(y0);
            dw.push(y1);
            if y0 < floor {
                break;
            }
        }
        Ok((s, w, dw))
    }
}

fn dead_zone(f: &dyn Fn(f64) -> f64) -> f64 {
    const N: usize = 4096;
    let mut k = 0;
    while k + 1 < N && f((k + 1) as f64 / N as f64) == 0.0 {
        k += 1;
    }
    if k == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (k as f64 / N as f64, (k + 1) as f64 / N as f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if f(mid) == 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Front speed and profile of a homogeneous reaction.
pub fn front_speed(spec: &ReactionSpec, tol: f64) -> Result<(f64, FrontProfile)> {
    if !spec.is_homogeneous() {
        return Err(invalid("spec", "front_speed needs a homogeneous reaction"));
    }
    let f = spec.slice(0.0);
    let opts = ShootOptions { tol, ..ShootOptions::default() };
    let prof = front_speed_with(&*f, spec.lipschitz_k, opts)?;
    Ok((prof.speed, prof))
}

/// Front speed of `f` on `[0, 1]` by phase-plane shooting from the saddle at
/// `u = 1`, bisecting between overshooting and undershooting speeds.
pub fn front_speed_with(f: &dyn Fn(f64) -> f64, k: f64, opts: ShootOptions) -> Result<FrontProfile> {
    let g = |u: f64| if u <= 0.0 || u >= 1.0 { 0.0 } else { f(u) };
    let h = 1e-7;
    let fprime1 = (g(1.0 - h) - g(1.0 - 2.0 * h)) / h;
    let fprime1 = if fprime1 < 0.0 { fprime1 } else { -1e-12 };
    let shooter = Shooter { f: &g, fprime1, dead: dead_zone(&g), opts };
    let mass = simpson(g, 0.0, 1.0, 1e-13);
    let (lo, hi) = if mass.abs() <= 1e-12 {
        (0.0, 0.0)
    } else {
        if mass < 0.0 {
            return Err(invalid("f", "integral of f over [0,1] is negative; the front moves left"));
        }
        let (_, ratio) =
            crate::numerics::sampled_max(|u| g(u) / u, 1e-9, 1.0, 4096);
        let mut lo = 0.0;
        let mut hi = 2.0 * (k.max(1.0) * ratio.max(0.0)).sqrt() + 1.0;
        if shooter.shoot(lo)? != Shot::Over || shooter.shoot(hi)? != Shot::Under {
            return Err(Error::NoBracket { lo, hi });
        }
        let tol = opts.tol.max(1e-13);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            match shooter.shoot(mid) {
                Ok(Shot::Over) => lo = mid,
                Ok(Shot::Under) => hi = mid,
                Err(Error::Inconclusive(_)) => {
                    lo = mid;
                    hi = mid;
                }
                Err(e) => return Err(e),
            }
        }
        (lo, hi)
    };
    let c = 0.5 * (lo + hi);
    let (mut s, w, dw) = shooter.trace(c)?;
    // Centre at W = 1/2.
    let i = w.iter().position(|&v| v < 0.5).unwrap_or(w.len() - 1).max(1);
    let s_half = {
        let (a, b) = (i - 1, i);
        crate::numerics::bisect(
            |x| hermite3(s[a], s[b], w[a], w[b], dw[a], dw[b], x) - 0.5,
            s[a],
            s[b],
            1e-14,
        )
        .unwrap_or(s[a])
    };
    for v in s.iter_mut() {
        *v -= s_half;
    }
    let lambda_left = shooter.lambda_plus(c);
    let n = w.len();
    let lambda_right = if dw[n - 1] < 0.0 && w[n - 1] > 0.0 { -dw[n - 1] / w[n - 1] } else { c.max(1e-6) };
    let mut residual_max: f64 = 0.0;
    for j in 0..n - 1 {
        let m = 0.5 * (s[j] + s[j + 1]);
        let wm = hermite3(s[j], s[j + 1], w[j], w[j + 1], dw[j], dw[j + 1], m);
        let dm = hermite3_deriv(s[j], s[j + 1], w[j], w[j + 1], dw[j], dw[j + 1], m);
        let d2 = hermite3_second(s[j], s[j + 1], w[j], w[j + 1], dw[j], dw[j + 1], m);
        residual_max = residual_max.max((d2 + c * dm + g(wm)).abs());
    }
    Ok(FrontProfile { speed: c, bracket: (lo, hi), s, w, dw, lambda_left, lambda_right, residual_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::{make_cubic_bistable, make_g0, make_ignition, IgnitionShape};

    fn exact(a: f64) -> f64 {
        2f64.sqrt() * (0.5 - a)
    }

    #[test]
    fn cubic_speed_matches_closed_form() {
        for a in [0.1, 0.25, 0.4] {
            let spec = make_cubic_bistable(a).unwrap();
            let (c, prof) = front_speed(&spec, 1e-10).unwrap();
            assert!((c - exact(a)).abs() < 1e-6, "a={a} c={c}");
            assert!(prof.bracket.0 <= prof.bracket.1);
        }
    }

    #[test]
    fn cubic_profile_matches_exact_solution() {
        let spec = make_cubic_bistable(0.25).unwrap();
        let (_, prof) = front_speed(&spec, 1e-10).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=200 {
            let s = -15.0 + 0.15 * i as f64;
            let w = 1.0 / (1.0 + (s / 2f64.sqrt()).exp());
            worst = worst.max((prof.eval(s) - w).abs());
        }
        assert!(worst < 1e-5, "{worst:e}");
        assert!((prof.eval(0.0) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn symmetric_cubic_is_stationary() {
        let spec = make_cubic_bistable(0.5).unwrap();
        let (c, _) = front_speed(&spec, 1e-10).unwrap();
        assert_eq!(c, 0.0);
    }

    #[test]
    fn g0_and_ignition_speeds_positive() {
        let (c, prof) = front_speed(&make_g0().unwrap(), 1e-10).unwrap();
        assert!(c > 0.0);
        for k in 1..prof.w.len() {
            assert!(prof.w[k] < prof.w[k - 1]);
        }
        let (c2, _) = front_speed(&make_ignition(0.3, IgnitionShape::default()).unwrap(), 1e-10).unwrap();
        assert!(c2 > 0.0);
    }

    #[test]
    fn residual_shrinks_with_step() {
        let spec = make_cubic_bistable(0.3).unwrap();
        let f = spec.slice(0.0);
        let coarse = front_speed_with(&*f, 1.0, ShootOptions { profile_max_step: 0.2, ..Default::default() }).unwrap();
        let fine = front_speed_with(&*f, 1.0, ShootOptions { profile_max_step: 0.05, ..Default::default() }).unwrap();
        assert!(fine.residual_max < coarse.residual_max, "{} vs {}", fine.residual_max, coarse.residual_max);
    }

    #[test]
    fn speed_is_antitone_in_threshold() {
        let c1 = front_speed(&make_cubic_bistable(0.3).unwrap(), 1e-10).unwrap().0;
        let c2 = front_speed(&make_cubic_bistable(0.25).unwrap(), 1e-10).unwrap().0;
        assert!(c1 <= c2);
    }
}
