//! Small numerical kernels shared by the solvers: quadrature, root finding,
//! 1D minimisation, tridiagonal solves, Hermite interpolation, a Dormand-Prince
//! stepper and least-squares line fits.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to bracket width `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Inconclusive(format!(
            "no sign change on [{lo}, {hi}] (f = {flo:e}, {fhi:e})"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimisation of a unimodal `f` on `[lo, hi]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum of `g` on `[lo, hi]`: dense scan, then golden refinement around the
/// best sample. Returns `(argmax, max)`.
pub fn sampled_max<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let n = n.max(2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut best = (lo, g(lo));
    for i in 1..n {
        let x = if i == n - 1 { hi } else { lo + h * i as f64 };
        let v = g(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    let a = (best.0 - h).max(lo);
    let b = (best.0 + h).min(hi);
    let (x, neg) = golden_min(|x| -g(x), a, b, 1e-12 * (1.0 + b.abs()));
    if -neg > best.1 {
        (x, -neg)
    } else {
        best
    }
}

/// Factorised `(1 + 2r) u_i - r u_{i-1} - r u_{i+1} = rhs_i` with Dirichlet
/// ghost values. The matrix is a nonsingular M-matrix, so its inverse is
/// entrywise nonnegative: the solve preserves order.
#[derive(Debug, Clone)]
pub struct ImplicitDiffusion {
    r: f64,
    cprime: Vec<f64>,
    inv_denom: Vec<f64>,
}

impl ImplicitDiffusion {
    pub fn new(n: usize, r: f64) -> Self {
        let mut cprime = vec![0.0; n];
        let mut inv_denom = vec![0.0; n];
        let b = 1.0 + 2.0 * r;
        let c = -r;
        let mut prev = 0.0;
        for i in 0..n {
            let d = b - (-r) * prev;
            inv_denom[i] = 1.0 / d;
            cprime[i] = c / d;
            prev = cprime[i];
        }
        Self { r, cprime, inv_denom }
    }

    pub fn len(&self) -> usize {
        self.cprime.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cprime.is_empty()
    }

    /// Solves with right-hand side `rhs(i, u_i)` built on the fly during the
    /// forward sweep, then clamps the result to `[0, 1]`. Returns the
    /// pre-clamp `(min, max)` and whether every value was finite.
    ///
    /// The forward recurrence is latency-bound; computing `rhs` inside it
    /// hides the reaction cost behind the dependency chain.
    pub fn solve_fused(&self, u: &mut [f64], left: f64, right: f64, rhs: impl Fn(usize, f64) -> f64) -> (f64, f64, bool) {
        let n = u.len();
        debug_assert_eq!(n, self.cprime.len());
        if n == 0 {
            return (f64::INFINITY, f64::NEG_INFINITY, true);
        }
        // The left ghost value enters exactly like a previous unknown.
        let mut prev = left;
        for i in 0..n {
            let mut b = rhs(i, u[i]);
            if i == n - 1 {
                b += self.r * right;
            }
            let v = (b + self.r * prev) * self.inv_denom[i];
            u[i] = v;
            prev = v;
        }
        // Back substitution runs on unclamped values; only the output is clamped.
        let mut raw = u[n - 1];
        let (mut lo, mut hi, mut finite) = (raw, raw, raw.is_finite());
        u[n - 1] = raw.clamp(0.0, 1.0);
        for i in (0..n - 1).rev() {
            raw = u[i] - self.cprime[i] * raw;
            finite &= raw.is_finite();
            lo = lo.min(raw);
            hi = hi.max(raw);
            u[i] = raw.clamp(0.0, 1.0);
        }
        (lo, hi, finite)
    }

    /// Solves in place; `u` holds the right-hand side on entry.
    pub fn solve(&self, u: &mut [f64], left: f64, right: f64) {
        let n = u.len();
        debug_assert_eq!(n, self.cprime.len());
        if n == 0 {
            return;
        }
        u[0] += self.r * left;
        u[n - 1] += self.r * right;
        let mut prev = 0.0;
        for i in 0..n {
            let v = (u[i] + self.r * prev) * self.inv_denom[i];
            u[i] = v;
            prev = v;
        }
        for i in (0..n - 1).rev() {
            u[i] -= self.cprime[i] * u[i + 1];
        }
    }
}

/// Ordinary least squares `y = slope * x + intercept`; the third value is the
/// root-mean-square residual.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - slope * x - intercept;
            e * e
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Cubic Hermite interpolation on `[x0, x1]` from values and first derivatives.
pub fn hermite3(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Derivative of [`hermite3`] with respect to `x`.
pub fn hermite3_deriv(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let dh00 = 6.0 * t2 - 6.0 * t;
    let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
    let dh01 = -6.0 * t2 + 6.0 * t;
    let dh11 = 3.0 * t2 - 2.0 * t;
    (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
}

/// Quintic Hermite interpolation on `[x0, x1]` from value, first and second
/// derivative at both ends.
#[allow(clippy::too_many_arguments)]
pub fn hermite5(
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    d0: f64,
    d1: f64,
    s0: f64,
    s1: f64,
    x: f64,
) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    h0 * y0 + h1 * h * d0 + h2 * h * h * s0 + h3 * h * h * s1 + h4 * h * d1 + h5 * y1
}

/// Linear interpolation of tabulated `(xs, ys)` with `xs` increasing; clamps
/// outside the table.
pub fn lerp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Sliding-window maximum over `vals` treated as periodic, window half-width
/// `half` samples.
pub fn periodic_window_max(vals: &[f64], half: usize) -> Vec<f64> {
    let n = vals.len();
    if half == 0 {
        return vals.to_vec();
    }
    if 2 * half + 1 >= n {
        let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return vec![m; n];
    }
    let mut out = vec![0.0; n];
    let mut deque: std::collections::VecDeque<(isize, f64)> = std::collections::VecDeque::new();
    let get = |k: isize| vals[k.rem_euclid(n as isize) as usize];
    let h = half as isize;
    for k in -h..=h {
        let v = get(k);
        while deque.back().is_some_and(|b| b.1 <= v) {
            deque.pop_back();
        }
        deque.push_back((k, v));
    }
    for i in 0..n as isize {
        while deque.front().is_some_and(|f| f.0 < i - h) {
            deque.pop_front();
        }
        out[i as usize] = deque.front().map(|f| f.1).unwrap_or(f64::NEG_INFINITY);
        let k = i + h + 1;
        let v = get(k);
        while deque.back().is_some_and(|b| b.1 <= v) {
            deque.pop_back();
        }
        deque.push_back((k, v));
    }
    out
}

/// Tolerances for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct OdeTol {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for OdeTol {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, h_init: 1e-3, h_min: 1e-12, h_max: 0.05 }
    }
}

/// Adaptive Dormand-Prince 5(4) stepper for a two-dimensional autonomous
/// system. Each call to [`Dopri5::step`] performs one accepted step.
pub struct Dopri5<F: Fn([f64; 2]) -> [f64; 2]> {
    rhs: F,
    pub s: f64,
    pub y: [f64; 2],
    h: f64,
    tol: OdeTol,
}

impl<F: Fn([f64; 2]) -> [f64; 2]> Dopri5<F> {
    pub fn new(rhs: F, s0: f64, y0: [f64; 2], tol: OdeTol) -> Self {
        Self { rhs, s: s0, y: y0, h: tol.h_init, tol }
    }

    pub fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
        (self.rhs)(y)
    }

    pub fn step(&mut self) -> Result<()> {
        const A21: f64 = 1.0 / 5.0;
        const A31: f64 = 3.0 / 40.0;
        const A32: f64 = 9.0 / 40.0;
        const A41: f64 = 44.0 / 45.0;
        const A42: f64 = -56.0 / 15.0;
        const A43: f64 = 32.0 / 9.0;
        const A51: f64 = 19372.0 / 6561.0;
        const A52: f64 = -25360.0 / 2187.0;
        const A53: f64 = 64448.0 / 6561.0;
        const A54: f64 = -212.0 / 729.0;
        const A61: f64 = 9017.0 / 3168.0;
        const A62: f64 = -355.0 / 33.0;
        const A63: f64 = 46732.0 / 5247.0;
        const A64: f64 = 49.0 / 176.0;
        const A65: f64 = -5103.0 / 18656.0;
        const B1: f64 = 35.0 / 384.0;
        const B3: f64 = 500.0 / 1113.0;
        const B4: f64 = 125.0 / 192.0;
        const B5: f64 = -2187.0 / 6784.0;
        const B6: f64 = 11.0 / 84.0;
        const E1: f64 = 71.0 / 57600.0;
        const E3: f64 = -71.0 / 16695.0;
        const E4: f64 = 71.0 / 1920.0;
        const E5: f64 = -17253.0 / 339200.0;
        const E6: f64 = 22.0 / 525.0;
        const E7: f64 = -1.0 / 40.0;
        let y = self.y;
        loop {
            let h = self.h;
            let comb = |k: &[[f64; 2]], a: &[f64]| -> [f64; 2] {
                let mut out = y;
                for (ki, ai) in k.iter().zip(a) {
                    out[0] += h * ai * ki[0];
                    out[1] += h * ai * ki[1];
                }
                out
            };
            let k1 = (self.rhs)(y);
            let k2 = (self.rhs)(comb(&[k1], &[A21]));
            let k3 = (self.rhs)(comb(&[k1, k2], &[A31, A32]));
            let k4 = (self.rhs)(comb(&[k1, k2, k3], &[A41, A42, A43]));
            let k5 = (self.rhs)(comb(&[k1, k2, k3, k4], &[A51, A52, A53, A54]));
            let k6 = (self.rhs)(comb(&[k1, k2, k3, k4, k5], &[A61, A62, A63, A64, A65]));
            let ynew = comb(&[k1, k3, k4, k5, k6], &[B1, B3, B4, B5, B6]);
            let k7 = (self.rhs)(ynew);
            let mut err = 0.0f64;
            for d in 0..2 {
                let e = h
                    * (E1 * k1[d] + E3 * k3[d] + E4 * k4[d] + E5 * k5[d] + E6 * k6[d]
                        + E7 * k7[d]);
                let sc = self.tol.atol + self.tol.rtol * y[d].abs().max(ynew[d].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                err = 1e10;
            }
            if err <= 1.0 {
                self.s += h;
                self.y = ynew;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                self.h = (h * fac).min(self.tol.h_max);
                return Ok(());
            }
            let fac = (0.9 * err.powf(-0.25)).clamp(0.1, 0.5);
            self.h = h * fac;
            if self.h < self.tol.h_min {
                return Err(Error::StiffFailure { min_step: self.tol.h_min, at: self.s });
            }
        }
    }
}
