//! Reaction nonlinearities `f(z, u)` with their envelope data.
//!
//! `z` is the heterogeneity coordinate: ignored for homogeneous reactions,
//! `x` for space-dependent ones and `t` for time-dependent ones. Every
//! evaluator is extended by zero outside `(0, 1)`.

mod build;
mod classify;
mod counter;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numerics::simpson;
use crate::verdict::VerdictReport;

pub use build::{
    make_cubic_bistable, make_g0, make_g1, make_ignition, make_ignition_violator,
    make_periodic_cubic, make_periodic_ignition, make_random_ergodic, make_wave_blocking_core,
    IgnitionShape, RandomLaw, WaveBlockingCore,
};
pub use classify::{classify, ClassifyReport};
pub use counter::{
    make_spatial_counterexample, make_temporal_counterexample, temporal_parts, SpatialLayout,
    TemporalParts,
};

pub type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Field = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Homogeneous,
    SpaceDependent,
    TimeDependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taxonomy {
    #[serde(rename = "BI")]
    Bi,
    Bistable,
    PureBistable,
    Ignition,
    PureIgnition,
    #[serde(rename = "mixed_BIM")]
    MixedBim,
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Taxonomy::Bi => "BI",
            Taxonomy::Bistable => "bistable",
            Taxonomy::PureBistable => "pure_bistable",
            Taxonomy::Ignition => "ignition",
            Taxonomy::PureIgnition => "pure_ignition",
            Taxonomy::MixedBim => "mixed_BIM",
        };
        f.write_str(s)
    }
}

/// Lower and upper homogeneous envelopes `f0 <= f <= f1`.
#[derive(Clone)]
pub struct EnvelopePair {
    pub f0: Curve,
    pub f1: Curve,
    pub theta0: f64,
    pub theta1: f64,
}

impl EnvelopePair {
    pub fn new(f0: Curve, f1: Curve, theta0: f64, theta1: f64) -> Self {
        Self { f0, f1, theta0, theta1 }
    }

    /// Both envelopes equal to `f`, with a single threshold.
    pub fn tight(f: Curve, theta: f64) -> Self {
        Self { f0: f.clone(), f1: f, theta0: theta, theta1: theta }
    }

    pub fn f0(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            (self.f0)(u)
        }
    }

    pub fn f1(&self, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            (self.f1)(u)
        }
    }

    pub fn f0_curve(&self) -> Curve {
        let f0 = self.f0.clone();
        Arc::new(move |u| if u <= 0.0 || u >= 1.0 { 0.0 } else { f0(u) })
    }

    pub fn integral_f0(&self) -> f64 {
        simpson(|u| self.f0(u), 0.0, 1.0, 1e-12)
    }

    /// Sampled envelope invariants: roots, ordering, sign pattern, positive mass.
    pub fn check(&self, n: usize, tol: f64) -> VerdictReport {
        let mut rep = VerdictReport::new("envelope");
        for (name, v) in [
            ("f0(0)", (self.f0)(0.0)),
            ("f0(1)", (self.f0)(1.0)),
            ("f1(0)", (self.f1)(0.0)),
            ("f1(1)", (self.f1)(1.0)),
        ] {
            if v.abs() > 1e-9 {
                rep.fail_at(0.0, v, format!("{name} = {v:e}"));
            }
        }
        if !(0.0 < self.theta1 && self.theta1 <= self.theta0 && self.theta0 < 1.0) {
            rep.fail_at(self.theta1, self.theta0, "need 0 < theta1 <= theta0 < 1".into());
        }
        let mut margin = f64::INFINITY;
        for i in 1..n {
            let u = i as f64 / n as f64;
            let (a, b) = (self.f0(u), self.f1(u));
            margin = margin.min(b - a);
            if a > b + tol {
                rep.fail_at(u, a - b, "f0 > f1".into());
            }
            if u < self.theta0 && a > tol {
                rep.fail_at(u, a, "f0 > 0 below theta0".into());
            }
            if u > self.theta0 && a <= 0.0 {
                rep.fail_at(u, a, "f0 <= 0 above theta0".into());
            }
            if u < self.theta1 && b > tol {
                rep.fail_at(u, b, "f1 > 0 below theta1".into());
            }
            if u > self.theta1 && b <= 0.0 {
                rep.fail_at(u, b, "f1 <= 0 above theta1".into());
            }
        }
        let mass = self.integral_f0();
        if mass <= 0.0 {
            rep.fail_at(1.0, mass, "integral of f0 not positive".into());
        }
        rep.margin = margin.min(mass);
        rep
    }
}

impl fmt::Debug for EnvelopePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnvelopePair")
            .field("theta0", &self.theta0)
            .field("theta1", &self.theta1)
            .finish_non_exhaustive()
    }
}

/// A reaction `f(z, u)` together with its (H) data.
#[derive(Clone)]
pub struct ReactionSpec {
    pub name: String,
    pub params: serde_json::Value,
    pub kind: Kind,
    /// Period in the heterogeneity coordinate, if any.
    pub period: Option<f64>,
    evaluator: Field,
    pub lipschitz_k: f64,
    /// Monotonicity width: `f` is nonincreasing in `u` on `[0, theta]` and `[1 - theta, 1]`.
    pub theta: f64,
    pub theta1: f64,
    pub theta0: f64,
    pub envelope: EnvelopePair,
    pub taxonomy: Taxonomy,
    /// Coordinate window sampled by checks when `period` is `None`.
    pub window: (f64, f64),
}

impl fmt::Debug for ReactionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionSpec")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("period", &self.period)
            .field("lipschitz_k", &self.lipschitz_k)
            .field("theta", &self.theta)
            .field("theta1", &self.theta1)
            .field("theta0", &self.theta0)
            .field("taxonomy", &self.taxonomy)
            .finish_non_exhaustive()
    }
}

impl ReactionSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        params: serde_json::Value,
        kind: Kind,
        period: Option<f64>,
        evaluator: Field,
        lipschitz_k: f64,
        theta: f64,
        envelope: EnvelopePair,
        taxonomy: Taxonomy,
    ) -> Self {
        let window = match period {
            Some(p) => (0.0, p),
            None if kind == Kind::Homogeneous => (0.0, 0.0),
            None => (-50.0, 50.0),
        };
        Self {
            name: name.into(),
            params,
            kind,
            period,
            evaluator,
            lipschitz_k,
            theta,
            theta1: envelope.theta1,
            theta0: envelope.theta0,
            envelope,
            taxonomy,
            window,
        }
    }

    /// Evaluates `f(z, u)`, extended by zero outside `(0, 1)`.
    #[inline]
    pub fn eval(&self, z: f64, u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            (self.evaluator)(z, u)
        }
    }

    pub fn evaluator(&self) -> Field {
        self.evaluator.clone()
    }

    /// The `u`-profile at coordinate `z`.
    pub fn slice(&self, z: f64) -> Curve {
        let f = self.evaluator.clone();
        Arc::new(move |u| if u <= 0.0 || u >= 1.0 { 0.0 } else { f(z, u) })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.kind == Kind::Homogeneous
    }

    /// Heterogeneity coordinates used by sampled checks.
    pub fn sample_coords(&self, n: usize) -> Vec<f64> {
        if self.kind == Kind::Homogeneous {
            return vec![0.0];
        }
        let (lo, hi) = self.window;
        let n = n.max(1);
        (0..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
    }

    /// Sampled verification of hypothesis (H) on an `n_z x n_u` grid.
    pub fn validate(&self, n_z: usize, n_u: usize, tol: f64) -> VerdictReport {
        let mut rep = self.envelope.check(n_u, tol);
        rep.name = format!("hypothesis_H:{}", self.name);
        if self.lipschitz_k < 1.0 {
            rep.fail_at(0.0, self.lipschitz_k, "Lipschitz constant below 1".into());
        }
        let du = 1.0 / n_u as f64;
        for z in self.sample_coords(n_z) {
            let e0 = (self.evaluator)(z, 0.0);
            let e1 = (self.evaluator)(z, 1.0);
            if e0.abs() > 1e-9 || e1.abs() > 1e-9 {
                rep.fail_at(z, e0.abs().max(e1.abs()), "f(z,0) or f(z,1) nonzero".into());
            }
            let mut prev = self.eval(z, 0.0);
            for i in 1..=n_u {
                let u = i as f64 * du;
                let v = if i == n_u { e1 } else { self.eval(z, u) };
                let lo = self.envelope.f0(u);
                let hi = self.envelope.f1(u);
                if v < lo - tol || v > hi + tol {
                    rep.fail_at(z, u, format!("envelope violated: f0={lo:e} f={v:e} f1={hi:e}"));
                }
                let q = (v - prev).abs() / du;
                if q > self.lipschitz_k * (1.0 + 1e-6) + tol / du {
                    rep.fail_at(z, u, format!("difference quotient {q:e} exceeds K"));
                }
                let in_low = u <= self.theta;
                let in_high = u - du >= 1.0 - self.theta;
                if (in_low || in_high) && v > prev + tol {
                    rep.fail_at(z, u, "not nonincreasing near 0 or 1".into());
                }
                prev = v;
            }
        }
        rep.finish()
    }
}

/// Sampled Lipschitz constant in `u` of `f(z, .)` over the given coordinates.
pub(crate) fn sampled_lipschitz<F: Fn(f64, f64) -> f64>(f: F, coords: &[f64], n_u: usize) -> f64 {
    let du = 1.0 / n_u as f64;
    let mut k: f64 = 0.0;
    for &z in coords {
        let mut prev = f(z, 0.0);
        for i in 1..=n_u {
            let v = f(z, i as f64 * du);
            k = k.max((v - prev).abs() / du);
            prev = v;
        }
    }
    k
}

/// Largest `theta` such that every sampled slice is nonincreasing on `[0, theta]`
/// and `[1 - theta, 1]`, capped at `cap`.
pub(crate) fn sampled_theta<F: Fn(f64, f64) -> f64>(f: F, coords: &[f64], n_u: usize, cap: f64) -> f64 {
    let du = 1.0 / n_u as f64;
    let mut lo_ok = cap;
    let mut hi_ok = cap;
    for &z in coords {
        let mut prev = f(z, 0.0);
        for i in 1..=n_u {
            let u = i as f64 * du;
            let v = f(z, u);
            if v > prev + 1e-15 {
                lo_ok = lo_ok.min((u - du).max(0.0));
                break;
            }
            prev = v;
        }
        let mut prev = f(z, 1.0);
        for i in (0..n_u).rev() {
            let u = i as f64 * du;
            let v = f(z, u);
            if v < prev - 1e-15 {
                hi_ok = hi_ok.min((1.0 - u - du).max(0.0));
                break;
            }
            prev = v;
        }
    }
    lo_ok.min(hi_ok)
}
