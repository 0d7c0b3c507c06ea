use serde::{Deserialize, Serialize};

use super::stationary::antiderivative;
use crate::error::{invalid, Error, Result};
use crate::numerics::{hermite3, sampled_max};

/// Compactly supported subsolution `v`: equal to `top = 1 - eps0` on
/// `(-inf, -r]`, solving `v'' + f0(v) = 0` on `(-r, 0)`, and `0` on `[0, inf)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumpProfile {
    pub top: f64,
    pub r: f64,
    xs: Vec<f64>,
    v: Vec<f64>,
    dv: Vec<f64>,
}

impl HumpProfile {
    pub fn eval(&self, x: f64) -> f64 {
        if x <= -self.r {
            return self.top;
        }
        if x >= 0.0 {
            return 0.0;
        }
        let n = self.xs.len();
        let i = (self.xs.partition_point(|&s| s <= x).max(1) - 1).min(n - 2);
        hermite3(self.xs[i], self.xs[i + 1], self.v[i], self.v[i + 1], self.dv[i], self.dv[i + 1], x)
            .clamp(0.0, self.top)
    }

    /// Max over the tabulated transition of `|v'^2/2 - (F0(top) - F0(v))|`.
    pub fn first_integral_defect(&self, f0: &dyn Fn(f64) -> f64, stride: usize) -> f64 {
        let ftop = antiderivative(f0, self.top);
        let mut worst: f64 = 0.0;
        for i in (0..self.xs.len()).step_by(stride.max(1)) {
            let lhs = 0.5 * self.dv[i] * self.dv[i];
            let rhs = ftop - antiderivative(f0, self.v[i]);
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }
}

fn check_top(f0: &dyn Fn(f64) -> f64, top: f64) -> Result<()> {
    let ftop = antiderivative(f0, top);
    let (_, fmax) = sampled_max(|u| antiderivative(f0, u), 0.0, top * (1.0 - 1e-9), 512);
    if !(ftop > 0.0) || fmax >= ftop {
        return Err(Error::BadEpsilon0 { top: ftop, max: fmax });
    }
    Ok(())
}

/// The hump `v` for `f0` and `eps0`.
pub fn build_hump_v(f0: &dyn Fn(f64) -> f64, epsilon0: f64) -> Result<HumpProfile> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(invalid("epsilon0", "must lie in (0, 1)"));
    }
    let top = 1.0 - epsilon0;
    check_top(f0, top)?;
    const H: f64 = 1e-3;
    let d = |y: [f64; 2]| [y[1], -f0(y[0])];
    let step = |y: [f64; 2], h: f64| {
        let k1 = d(y);
        let k2 = d([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = d([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = d([y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let mut y = [top, 0.0];
    let (mut xs, mut v, mut dv) = (vec![0.0], vec![top], vec![0.0]);
    let mut x = 0.0;
    loop {
        let next = step(y, H);
        if next[0] <= 0.0 {
            // Secant on the step length for v = 0.
            let (mut a, mut b) = (0.0, H);
            let (mut va, mut vb) = (y[0], next[0]);
            for _ in 0..30 {
                if (vb - va).abs() < 1e-300 {
                    break;
                }
                let c = b - vb * (b - a) / (vb - va);
                let vc = step(y, c)[0];
                a = b;
                va = vb;
                b = c;
                vb = vc;
                if vc.abs() < 1e-15 {
                    break;
                }
            }
            let end = step(y, b);
            xs.push(x + b);
            v.push(0.0);
            dv.push(end[1]);
            break;
        }
        y = next;
        x += H;
        xs.push(x);
        v.push(y[0]);
        dv.push(y[1]);
        if x > 1e5 {
            return Err(invalid("epsilon0", "hump did not reach 0"));
        }
    }
    let r = *xs.last().unwrap();
    for s in xs.iter_mut() {
        *s -= r;
    }
    Ok(HumpProfile { top, r, xs, v, dv })
}

/// Grid version of the hump: `v_{i+1} = 2 v_i - v_{i-1} - dx^2 f0(v_i)` from a
/// plateau at `top`, clamped to 0 after the first nonpositive value. Then
/// `D2 v + f0(v) >= 0` holds exactly at every node (up to roundoff), so the
/// discrete scheme started from it is nondecreasing in time.
///
/// Returns the values from the last plateau node onward; index 0 is `top`.
pub fn discrete_hump(f0: &dyn Fn(f64) -> f64, epsilon0: f64, dx: f64) -> Result<Vec<f64>> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(invalid("epsilon0", "must lie in (0, 1)"));
    }
    let top = 1.0 - epsilon0;
    check_top(f0, top)?;
    let h2 = dx * dx;
    let mut vals = vec![top];
    let (mut prev, mut cur) = (top, top);
    loop {
        let next = 2.0 * cur - prev - h2 * f0(cur);
        if next <= 0.0 {
            vals.push(0.0);
            break;
        }
        if next >= cur && vals.len() > 1 {
            return Err(invalid("epsilon0", "discrete hump stopped decreasing"));
        }
        vals.push(next);
        prev = cur;
        cur = next;
        if vals.len() > 100_000_000 {
            return Err(invalid("dx", "discrete hump too long"));
        }
    }
    Ok(vals)
}
