use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{bisect, hermite5, simpson};

/// RK4 step for `p'' = -f(p)`.
fn rk4(f: &dyn Fn(f64) -> f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let d = |y: [f64; 2]| [y[1], -f(y[0])];
    let k1 = d(y);
    let k2 = d([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = d([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = d([y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// `F(x) = int_0^x f`.
pub fn antiderivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    simpson(f, 0.0, x, 1e-13)
}

/// `theta0' in (theta0, 1)` with `int_0^{theta0'} f0 = 0`.
pub fn theta0_prime(f0: &dyn Fn(f64) -> f64, theta0: f64) -> Result<f64> {
    bisect(|x| antiderivative(f0, x), theta0, 1.0, 1e-13)
}

/// One half-period of the even periodic solution of `p'' + f0(p) = 0` with
/// `p'(0) = 0`, tabulated from its maximum `p(0)` down to its minimum `P`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub p0: f64,
    /// `min p`; equals `p0` in the degenerate constant case.
    pub p_min: f64,
    /// Minimal period; infinite for the constant solution.
    pub period: f64,
    xs: Vec<f64>,
    p: Vec<f64>,
    dp: Vec<f64>,
    ddp: Vec<f64>,
}

impl StationaryProfile {
    pub fn is_constant(&self) -> bool {
        !self.period.is_finite()
    }

    /// `p(x)` for any real `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.is_constant() {
            return self.p0;
        }
        let m = self.period;
        let y = (x - m * (x / m).round()).abs();
        let n = self.xs.len();
        let y = y.min(self.xs[n - 1]);
        let i = (self.xs.partition_point(|&v| v <= y).max(1) - 1).min(n - 2);
        hermite5(
            self.xs[i],
            self.xs[i + 1],
            self.p[i],
            self.p[i + 1],
            self.dp[i],
            self.dp[i + 1],
            self.ddp[i],
            self.ddp[i + 1],
            y,
        )
    }

    /// Smallest `y in [0, M/2]` with `p(y) = level`, for `level in [P, p0]`.
    pub fn level_crossing(&self, level: f64) -> Result<f64> {
        if self.is_constant() || level > self.p0 || level < self.p_min {
            return Err(invalid("level", format!("{level} outside [{}, {}]", self.p_min, self.p0)));
        }
        bisect(|y| self.eval(y) - level, 0.0, 0.5 * self.period, 1e-13)
    }

    /// Max over table nodes of `|p'^2/2 + F0(p) - F0(p0)|`, sampling every
    /// `stride`-th node.
    pub fn energy_drift(&self, f0: &dyn Fn(f64) -> f64, stride: usize) -> f64 {
        let e0 = antiderivative(f0, self.p0);
        let mut worst: f64 = 0.0;
        for i in (0..self.xs.len()).step_by(stride.max(1)) {
            let e = 0.5 * self.dp[i] * self.dp[i] + antiderivative(f0, self.p[i]);
            worst = worst.max((e - e0).abs());
        }
        worst
    }
}

/// Periodic stationary solution with `p(0) = p_at_0`, `p'(0) = 0`, which must
/// lie in `[theta0, theta0')`.
pub fn periodic_stationary(
    f0: &dyn Fn(f64) -> f64,
    theta0: f64,
    p_at_0: f64,
) -> Result<StationaryProfile> {
    let t0p = theta0_prime(f0, theta0)?;
    if !(p_at_0 >= theta0 && p_at_0 < t0p) {
        return Err(invalid("p_at_0", format!("{p_at_0} outside [{theta0}, {t0p})")));
    }
    if f0(p_at_0) == 0.0 {
        return Ok(StationaryProfile {
            p0: p_at_0,
            p_min: p_at_0,
            period: f64::INFINITY,
            xs: vec![0.0],
            p: vec![p_at_0],
            dp: vec![0.0],
            ddp: vec![0.0],
        });
    }
    const H: f64 = 1e-3;
    let mut xs = vec![0.0];
    let mut y = [p_at_0, 0.0];
    let mut p = vec![y[0]];
    let mut dp = vec![0.0];
    let mut x = 0.0;
    loop {
        let next = rk4(f0, y, H);
        if next[1] >= 0.0 && x > 0.0 {
            // Secant on the step length for p' = 0.
            let (mut a, mut b) = (0.0, H);
            let (mut qa, mut qb) = (y[1], next[1]);
            for _ in 0..30 {
                if (qb - qa).abs() < 1e-300 {
                    break;
                }
                let c = b - qb * (b - a) / (qb - qa);
                let qc = rk4(f0, y, c)[1];
                a = b;
                qa = qb;
                b = c;
                qb = qc;
                if qc.abs() < 1e-15 {
                    break;
                }
            }
            let end = rk4(f0, y, b);
            xs.push(x + b);
            p.push(end[0]);
            dp.push(0.0);
            break;
        }
        y = next;
        x += H;
        xs.push(x);
        p.push(y[0]);
        dp.push(y[1]);
        if x > 1e6 {
            return Err(invalid("p_at_0", "orbit did not close"));
        }
    }
    let ddp = p.iter().map(|&v| -f0(v)).collect();
    let half = *xs.last().unwrap();
    let p_min = *p.last().unwrap();
    Ok(StationaryProfile { p0: p_at_0, p_min, period: 2.0 * half, xs, p, dp, ddp })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(u: f64) -> f64 {
        u * (1.0 - u) * (u - 0.25)
    }

    #[test]
    fn degenerate_at_threshold() {
        let prof = periodic_stationary(&cubic, 0.25, 0.25).unwrap();
        assert!(prof.is_constant());
        assert_eq!(prof.eval(3.7), 0.25);
    }

    #[test]
    fn range_obeys_energy_identity() {
        let t0p = theta0_prime(&cubic, 0.25).unwrap();
        let p0 = 0.25 * (0.25 + 3.0 * t0p);
        let prof = periodic_stationary(&cubic, 0.25, p0).unwrap();
        assert!(prof.period.is_finite() && prof.period > 0.0);
        let gap = simpson(cubic, prof.p_min, p0, 1e-13);
        assert!(gap.abs() < 1e-9, "{gap:e}");
        assert!(prof.energy_drift(&cubic, 50) < 1e-10);
        // Even and periodic.
        for x in [0.3, 1.7, 4.2] {
            assert!((prof.eval(x) - prof.eval(-x)).abs() < 1e-12);
            assert!((prof.eval(x) - prof.eval(x + prof.period)).abs() < 1e-9);
        }
        assert!((prof.eval(0.5 * prof.period) - prof.p_min).abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_bracket() {
        assert!(periodic_stationary(&cubic, 0.25, 0.2).is_err());
        assert!(periodic_stationary(&cubic, 0.25, 0.99).is_err());
    }
}
