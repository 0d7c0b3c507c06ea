use std::sync::Arc;

use serde::Serialize;
use serde_json::json;

use super::build::{g0, g1};
use super::{sampled_lipschitz, sampled_theta, Curve, EnvelopePair, Field, Kind, ReactionSpec, Taxonomy};
use crate::error::{invalid, Result};
use crate::numerics::{bisect, sampled_max};
use crate::wavesolve::{periodic_stationary, theta0_prime, StationaryProfile};

/// Geometry of the spatial counterexample, fixed by the homogeneous pure
/// bistable base `f0`: the periodic stationary solution `p` with
/// `p(0) = (theta0 + 3 theta0')/4`, its period `M`, the plateau half-width `m`
/// where `p >= (theta0 + theta0')/2`, and `kappa`, a Lipschitz constant of `f0`.
#[derive(Clone, Serialize)]
pub struct SpatialLayout {
    #[serde(skip)]
    pub f0: Curve,
    #[serde(skip)]
    pub p: Arc<StationaryProfile>,
    pub theta0: f64,
    pub theta0_prime: f64,
    pub p0: f64,
    pub p_min: f64,
    pub period: f64,
    pub m: f64,
    /// Upper set point `(3 theta0 + theta0')/4`.
    pub top: f64,
    /// `p >= top` on `|x - nM| <= m_top`.
    pub m_top: f64,
    pub kappa: f64,
    pub delta: f64,
}

impl std::fmt::Debug for SpatialLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialLayout")
            .field("period", &self.period)
            .field("m", &self.m)
            .field("m_top", &self.m_top)
            .field("kappa", &self.kappa)
            .field("delta", &self.delta)
            .finish_non_exhaustive()
    }
}

impl SpatialLayout {
    /// `delta` defaults to `M / (8 sqrt(kappa))`; any choice must satisfy
    /// `4 delta sqrt(kappa) < M`.
    pub fn new(f0: Curve, theta0: f64, delta: Option<f64>) -> Result<Self> {
        let g = {
            let f0 = f0.clone();
            move |u: f64| if u <= 0.0 || u >= 1.0 { 0.0 } else { f0(u) }
        };
        let t0p = theta0_prime(&g, theta0)?;
        let p0 = 0.25 * (theta0 + 3.0 * t0p);
        let p = periodic_stationary(&g, theta0, p0)?;
        if p.is_constant() {
            return Err(invalid("f0", "periodic stationary solution is constant"));
        }
        let core = 0.5 * (theta0 + t0p);
        let top = 0.25 * (3.0 * theta0 + t0p);
        let m = p.level_crossing(core)?;
        let m_top = p.level_crossing(top)?;
        let grid: Vec<f64> = vec![0.0];
        let kappa = sampled_lipschitz(|_, u| g(u), &grid, 1 << 16) * (1.0 + 1e-6);
        let period = p.period;
        let delta = delta.unwrap_or(period / (8.0 * kappa.sqrt()));
        if !(delta > 0.0 && 4.0 * delta * kappa.sqrt() < period) {
            return Err(invalid("delta", format!("need 0 < 4 delta sqrt(kappa) < M = {period}")));
        }
        Ok(Self {
            f0,
            theta0,
            theta0_prime: t0p,
            p0,
            p_min: p.p_min,
            period,
            m,
            top,
            m_top,
            kappa,
            delta,
            p: Arc::new(p),
        })
    }

    /// Distance from `x` to the nearest multiple of `M`.
    pub fn fold(&self, x: f64) -> f64 {
        let mm = self.period;
        (x - mm * (x / mm).round()).abs()
    }

    /// Lower end `q` of the boost band and its weight `w` at `x`: `q = a/2`,
    /// `w = 1` on the core; `q` rises to `theta0`, then `w` falls to 0 by `m_top`.
    fn band(&self, x: f64, a: f64) -> (f64, f64) {
        let y = self.fold(x);
        let m1 = 0.5 * (self.m + self.m_top);
        if y <= self.m {
            (0.5 * a, 1.0)
        } else if y <= m1 {
            let s = (y - self.m) / (m1 - self.m);
            (0.5 * a + s * (self.theta0 - 0.5 * a), 1.0)
        } else if y < self.m_top {
            (self.theta0, (self.m_top - y) / (self.m_top - m1))
        } else {
            (self.theta0, 0.0)
        }
    }

    /// `-min f0 / (top - theta0)`: below this `K` the boosted slices can lose
    /// pure bistability.
    pub fn min_boost(&self) -> f64 {
        let f0 = self.f0.clone();
        let (_, neg) = sampled_max(|u| -f0(u), 0.0, self.theta0, 4096);
        (neg / (self.top - self.theta0)).max(self.kappa)
    }
}

fn tent(u: f64, lo: f64, hi: f64) -> f64 {
    if u <= lo || u >= hi {
        0.0
    } else {
        (u - lo).min(hi - u)
    }
}

/// Even, `M`-periodic pure bistable reaction equal to `f0` outside the band
/// `(a/2, p(x))` and to `f0 + K dist(u, {a/2, top})` on the cores `|x - nM| <= m`.
pub fn make_spatial_counterexample(layout: &SpatialLayout, a: f64, k: f64) -> Result<ReactionSpec> {
    if !(a > 0.0 && a < layout.theta0) {
        return Err(invalid("a", "need 0 < a < theta0"));
    }
    let kmin = layout.min_boost();
    if !(k > kmin) {
        return Err(invalid("K", format!("{k} does not exceed {kmin:.6} needed for pure bistability")));
    }
    let lay = layout.clone();
    let f0 = layout.f0.clone();
    let top = layout.top;
    let field: Field = Arc::new(move |x, u| {
        let (q, w) = lay.band(x, a);
        f0(u) + k * w * tent(u, q, top)
    });
    let f0c = layout.f0.clone();
    let f1: Curve = Arc::new(move |u| f0c(u) + k * tent(u, 0.5 * a, top));
    let mid = 0.5 * (0.5 * a + top);
    let theta1 = bisect(|u| f1(u), 0.5 * a, mid, 1e-16 + 1e-12 * a)?;
    let env = EnvelopePair::new(layout.f0.clone(), f1, layout.theta0, theta1);
    let f0t = layout.f0.clone();
    let theta_f0 = sampled_theta(move |_, u| f0t(u), &[0.0], 4096, 0.25);
    let mut spec = ReactionSpec::new(
        "spatial_counterexample",
        json!({ "a": a, "K": k, "M": layout.period, "m": layout.m, "delta": layout.delta,
                "kappa": layout.kappa, "p0": layout.p0 }),
        Kind::SpaceDependent,
        Some(layout.period),
        field,
        layout.kappa + k,
        theta_f0.min(0.5 * a),
        env,
        Taxonomy::PureBistable,
    );
    spec.window = (-0.5 * layout.period, 0.5 * layout.period);
    Ok(spec)
}

/// The homogeneous pieces of the temporal counterexample.
#[derive(Clone)]
pub struct TemporalParts {
    /// `g0 - delta u (1 - u)`, active on `[0, 1] mod 4`.
    pub f0: Curve,
    /// `g1 + delta u (1 - u)(u - 1/11)`, active on `[2, 3] mod 4`.
    pub f1: Curve,
    pub theta0: f64,
    pub theta1: f64,
    pub delta: f64,
    pub k: f64,
}

pub fn temporal_parts(delta: f64, k: f64) -> Result<TemporalParts> {
    if !(delta > 0.0 && delta < 1.0 / 96.0) {
        return Err(invalid("delta", "need 0 < delta < 1/96 so that the lower piece has positive mass"));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(invalid("K", "must be finite and nonnegative"));
    }
    let lo = 1.0 / 11.0;
    let f0 = move |u: f64| g0(u) - delta * u * (1.0 - u);
    let f1 = move |u: f64| g1(k, u) + delta * u * (1.0 - u) * (u - lo);
    let theta0 = bisect(f0, 2.0 / 3.0, 1.0 - 1e-12, 1e-15)?;
    Ok(TemporalParts { f0: Arc::new(f0), f1: Arc::new(f1), theta0, theta1: lo, delta, k })
}

/// Time-periodic (period 4) reaction: the lower piece on `[0, 1]`, the upper
/// piece on `[2, 3]`, linear interpolation in `t` on `[1, 2]` and `[3, 4]`.
pub fn make_temporal_counterexample(delta: f64, k: f64) -> Result<ReactionSpec> {
    let parts = temporal_parts(delta, k)?;
    let (a, b) = (parts.f0.clone(), parts.f1.clone());
    let field: Field = Arc::new(move |t, u| {
        // floor, not rem_euclid: fmod dominates the per-node cost.
        let s = t - 4.0 * (0.25 * t).floor();
        if s <= 1.0 {
            a(u)
        } else if s < 2.0 {
            let w = s - 1.0;
            (1.0 - w) * a(u) + w * b(u)
        } else if s <= 3.0 {
            b(u)
        } else {
            let w = s - 3.0;
            (1.0 - w) * b(u) + w * a(u)
        }
    });
    let coords: Vec<f64> = (0..64).map(|i| 4.0 * i as f64 / 64.0).collect();
    let fc = field.clone();
    let lip = (sampled_lipschitz(|t, u| fc(t, u), &coords, 8192) * (1.0 + 1e-3)).max(1.0);
    let fc = field.clone();
    let theta = sampled_theta(|t, u| fc(t, u), &coords, 8192, 0.25);
    let env = EnvelopePair::new(parts.f0.clone(), parts.f1.clone(), parts.theta0, parts.theta1);
    Ok(ReactionSpec::new(
        "temporal_counterexample",
        json!({ "delta": delta, "K": k }),
        Kind::TimeDependent,
        Some(4.0),
        field,
        lip,
        theta,
        env,
        Taxonomy::Bistable,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::make_cubic_bistable;

    fn layout() -> SpatialLayout {
        let base = make_cubic_bistable(0.25).unwrap();
        SpatialLayout::new(base.envelope.f0.clone(), 0.25, None).unwrap()
    }

    #[test]
    fn layout_geometry() {
        let l = layout();
        assert!(l.m > 0.0 && l.m < l.m_top && l.m_top < 0.5 * l.period);
        assert!(4.0 * l.delta * l.kappa.sqrt() < l.period);
        assert!((l.kappa - 0.75).abs() < 1e-3);
    }

    #[test]
    fn spatial_is_even_periodic_and_matches_f0_above_p() {
        let l = layout();
        let spec = make_spatial_counterexample(&l, 1e-6, 50.0).unwrap();
        let mm = l.period;
        for i in 0..400 {
            let x = -30.0 + 0.173 * i as f64;
            for j in 1..50 {
                let u = j as f64 / 50.0;
                assert_eq!(spec.eval(x, u), spec.eval(-x, u));
                assert!((spec.eval(x, u) - spec.eval(x + mm, u)).abs() < 1e-12);
                if u >= l.p.eval(x) {
                    assert_eq!(spec.eval(x, u), (l.f0)(u));
                }
            }
        }
        // The set point `top` carries no boost on the core.
        assert_eq!(spec.eval(0.0, l.top), (l.f0)(l.top));
        let rep = spec.validate(256, 2048, 1e-9);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn temporal_pieces_and_periodicity() {
        let spec = make_temporal_counterexample(1e-3, 100.0).unwrap();
        let parts = temporal_parts(1e-3, 100.0).unwrap();
        for j in 1..200 {
            let u = j as f64 / 200.0;
            assert_eq!(spec.eval(0.5, u), (parts.f0)(u));
            assert_eq!(spec.eval(2.5, u), (parts.f1)(u));
            assert!((spec.eval(2.5, u) - g1(100.0, u)).abs() <= 1e-3 * u);
            assert!((parts.f0)(u) <= g0(u));
            for k in 0..32 {
                let t = k as f64 / 8.0;
                assert_eq!(spec.eval(t + 4.0, u), spec.eval(t, u));
            }
        }
        let rep = spec.validate(64, 2048, 1e-9);
        assert!(rep.pass, "{rep:?}");
    }
}
