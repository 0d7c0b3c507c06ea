use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    sampled_lipschitz, sampled_theta, Curve, EnvelopePair, Field, Kind, ReactionSpec, Taxonomy,
};
use crate::error::{invalid, Result};

const LIP_GRID: usize = 4096;

fn lipschitz_of(field: &Field, coords: &[f64]) -> f64 {
    let f = field.clone();
    (sampled_lipschitz(move |z, u| f(z, u), coords, LIP_GRID) * (1.0 + 1e-3)).max(1.0)
}

fn theta_of(field: &Field, coords: &[f64], cap: f64) -> f64 {
    let f = field.clone();
    sampled_theta(move |z, u| f(z, u), coords, LIP_GRID, cap)
}

fn cubic(a: f64) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |u| u * (1.0 - u) * (u - a)
}

/// Lipschitz constant of `u(1-u)(u-a)` on `[0, 1]`.
fn cubic_lipschitz(a: f64) -> f64 {
    let interior = (1.0 + a) * (1.0 + a) / 3.0 - a;
    a.max(1.0 - a).max(interior.abs())
}

/// Half the distance from the endpoints to the critical points of the cubic.
fn cubic_theta(a: f64) -> f64 {
    let disc = ((1.0 + a) * (1.0 + a) - 3.0 * a).sqrt();
    let r1 = ((1.0 + a) - disc) / 3.0;
    let r2 = ((1.0 + a) + disc) / 3.0;
    0.5 * r1.min(1.0 - r2)
}

/// `f(u) = u(1-u)(u-a)`, the homogeneous pure bistable nonlinearity.
pub fn make_cubic_bistable(a: f64) -> Result<ReactionSpec> {
    if !(a > 0.0 && a < 1.0) {
        return Err(invalid("a", format!("{a} not in (0, 1)")));
    }
    let g = cubic(a);
    let f: Curve = Arc::new(g);
    let field: Field = Arc::new(move |_, u| g(u));
    Ok(ReactionSpec::new(
        "cubic_bistable",
        json!({ "a": a }),
        Kind::Homogeneous,
        None,
        field,
        cubic_lipschitz(a).max(1.0),
        cubic_theta(a),
        EnvelopePair::tight(f, a),
        Taxonomy::PureBistable,
    ))
}

/// The cubic `(u - 1/2)(1 - u)(u - 2/3)` shared by `g0` and `g1` above 1/2.
fn upper_cubic(u: f64) -> f64 {
    (u - 0.5) * (1.0 - u) * (u - 2.0 / 3.0)
}

pub(crate) fn g0(u: f64) -> f64 {
    if u <= 0.5 {
        0.0
    } else {
        upper_cubic(u)
    }
}

pub(crate) fn g1(k: f64, u: f64) -> f64 {
    let lo = 1.0 / 11.0;
    if u <= lo || (0.5..=2.0 / 3.0).contains(&u) {
        0.0
    } else if u < 0.5 {
        k * (u - lo).min(0.5 - u)
    } else {
        upper_cubic(u)
    }
}

/// `g0`: zero on `[0, 1/2]`, the upper cubic above.
pub fn make_g0() -> Result<ReactionSpec> {
    let f: Curve = Arc::new(g0);
    let field: Field = Arc::new(|_, u| g0(u));
    let coords = [0.0];
    Ok(ReactionSpec::new(
        "g0",
        json!({}),
        Kind::Homogeneous,
        None,
        field.clone(),
        lipschitz_of(&field, &coords),
        theta_of(&field, &coords, 0.25),
        EnvelopePair::tight(f, 2.0 / 3.0),
        Taxonomy::Bi,
    ))
}

/// `g1`: zero on `[0, 1/11]` and `[1/2, 2/3]`, a tent of slope `k` between,
/// the upper cubic above `2/3`.
///
/// The attached envelope is `f0 = g1|_{k=0}` (threshold 2/3) and, for `k > 0`,
/// `f1 = g1 + 1e-3 (u - 1/11)_+ (1 - u)` (threshold 1/11), which is positive
/// on the plateau `[1/2, 2/3]` as (H) requires.
pub fn make_g1(k: f64) -> Result<ReactionSpec> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(invalid("K", format!("{k} must be a finite nonnegative number")));
    }
    let f0: Curve = Arc::new(|u| g1(0.0, u));
    let field: Field = Arc::new(move |_, u| g1(k, u));
    let coords = [0.0];
    let (env, tax) = if k == 0.0 {
        (EnvelopePair::tight(f0, 2.0 / 3.0), Taxonomy::PureIgnition)
    } else {
        let lo = 1.0 / 11.0;
        let f1: Curve = Arc::new(move |u| g1(k, u) + 1e-3 * (u - lo).max(0.0) * (1.0 - u));
        (EnvelopePair::new(f0, f1, 2.0 / 3.0, lo), Taxonomy::Ignition)
    };
    Ok(ReactionSpec::new(
        "g1",
        json!({ "K": k }),
        Kind::Homogeneous,
        None,
        field.clone(),
        lipschitz_of(&field, &coords),
        theta_of(&field, &coords, 0.25),
        env,
        tax,
    ))
}

/// Shape of a pure ignition profile `A (u - theta)^q (1 - u)` above `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgnitionShape {
    pub amplitude: f64,
    pub power: f64,
}

impl Default for IgnitionShape {
    fn default() -> Self {
        Self { amplitude: 1.0, power: 1.0 }
    }
}

fn ignition_profile(theta: f64, shape: IgnitionShape) -> impl Fn(f64) -> f64 + Send + Sync + Copy {
    move |u| {
        if u <= theta {
            0.0
        } else {
            shape.amplitude * (u - theta).powf(shape.power) * (1.0 - u)
        }
    }
}

/// Pure ignition reaction: zero on `[0, theta_tilde]`, a positive hump above.
pub fn make_ignition(theta_tilde: f64, shape: IgnitionShape) -> Result<ReactionSpec> {
    if !(theta_tilde > 0.0 && theta_tilde < 1.0) {
        return Err(invalid("theta_tilde", format!("{theta_tilde} not in (0, 1)")));
    }
    if !(shape.amplitude > 0.0 && shape.amplitude.is_finite()) {
        return Err(invalid("amplitude", "degenerate shape: profile vanishes above theta_tilde"));
    }
    if !(shape.power >= 1.0) {
        return Err(invalid("power", "power below 1 is not Lipschitz at theta_tilde"));
    }
    let g = ignition_profile(theta_tilde, shape);
    let f: Curve = Arc::new(g);
    let field: Field = Arc::new(move |_, u| g(u));
    let coords = [0.0];
    Ok(ReactionSpec::new(
        "ignition",
        json!({ "theta_tilde": theta_tilde, "amplitude": shape.amplitude, "power": shape.power }),
        Kind::Homogeneous,
        None,
        field.clone(),
        lipschitz_of(&field, &coords),
        theta_of(&field, &coords, theta_tilde.min(0.25)),
        EnvelopePair::tight(f, theta_tilde),
        Taxonomy::PureIgnition,
    ))
}

/// Smooth periodic weight in `[0, 1]`: 0 at `x = 0 mod period`, 1 at half period.
fn cosine_weight(x: f64, period: f64) -> f64 {
    0.5 * (1.0 - (2.0 * PI * x / period).cos())
}

/// x-periodic pure ignition reaction `A (u - theta(x))_+ (1 - u)` whose
/// threshold oscillates between `theta_lo` and `theta_hi`.
pub fn make_periodic_ignition(
    theta_lo: f64,
    theta_hi: f64,
    period: f64,
    amplitude: f64,
) -> Result<ReactionSpec> {
    if !(0.0 < theta_lo && theta_lo <= theta_hi && theta_hi < 1.0) {
        return Err(invalid("theta", "need 0 < theta_lo <= theta_hi < 1"));
    }
    if !(period > 0.0) {
        return Err(invalid("period", "must be positive"));
    }
    if !(amplitude > 0.0) {
        return Err(invalid("amplitude", "must be positive"));
    }
    let shape = IgnitionShape { amplitude, power: 1.0 };
    let field: Field = Arc::new(move |x, u| {
        let th = theta_lo + (theta_hi - theta_lo) * cosine_weight(x, period);
        ignition_profile(th, shape)(u)
    });
    let f0: Curve = Arc::new(ignition_profile(theta_hi, shape));
    let f1: Curve = Arc::new(ignition_profile(theta_lo, shape));
    let coords: Vec<f64> = (0..64).map(|i| period * i as f64 / 64.0).collect();
    Ok(ReactionSpec::new(
        "periodic_ignition",
        json!({ "theta_lo": theta_lo, "theta_hi": theta_hi, "period": period, "amplitude": amplitude }),
        Kind::SpaceDependent,
        Some(period),
        field.clone(),
        lipschitz_of(&field, &coords),
        theta_of(&field, &coords, theta_lo.min(0.25)),
        EnvelopePair::new(f0, f1, theta_hi, theta_lo),
        Taxonomy::PureIgnition,
    ))
}

/// An ignition reaction that breaks the ignition non-vanishing condition: on a
/// plateau of length `plateau` in each period it has a positive bump on
/// `(theta_lo, theta_gap)` and vanishes on `[theta_gap, theta0]`. Elsewhere it is
/// the pure ignition profile with threshold `theta_lo`.
pub fn make_ignition_violator(
    theta_lo: f64,
    theta_gap: f64,
    theta0: f64,
    period: f64,
    plateau: f64,
    bump: f64,
) -> Result<ReactionSpec> {
    if !(0.0 < theta_lo && theta_lo < theta_gap && theta_gap < theta0 && theta0 < 1.0) {
        return Err(invalid("theta", "need 0 < theta_lo < theta_gap < theta0 < 1"));
    }
    if !(period > plateau + 2.0 && plateau > 0.0) {
        return Err(invalid("plateau", "need 0 < plateau < period - 2"));
    }
    let base = ignition_profile(theta_lo, IgnitionShape::default());
    let top = ignition_profile(theta0, IgnitionShape::default());
    let bumpf = move |u: f64| bump * (u - theta_lo).max(0.0) * (theta_gap - u).max(0.0);
    // Weight 1 on the plateau centred at half period, linear ramps of width 1.
    let weight = move |x: f64| {
        let y = (x - period * (x / period).floor() - 0.5 * period).abs();
        let h = 0.5 * plateau;
        if y <= h {
            1.0
        } else {
            (1.0 - (y - h)).max(0.0)
        }
    };
    let field: Field = Arc::new(move |x, u| {
        let w = weight(x);
        w * (bumpf(u) + top(u)) + (1.0 - w) * base(u)
    });
    let f0: Curve = Arc::new(top);
    let f1: Curve = Arc::new(move |u| base(u) + bumpf(u));
    let coords: Vec<f64> = (0..256).map(|i| period * i as f64 / 256.0).collect();
    Ok(ReactionSpec::new(
        "ignition_violator",
        json!({ "theta_lo": theta_lo, "theta_gap": theta_gap, "theta0": theta0,
                "period": period, "plateau": plateau, "bump": bump }),
        Kind::SpaceDependent,
        Some(period),
        field.clone(),
        lipschitz_of(&field, &coords),
        theta_of(&field, &coords, theta_lo.min(0.25)),
        EnvelopePair::new(f0, f1, theta0, theta_lo),
        Taxonomy::Ignition,
    ))
}

/// x-periodic cubic `u(1-u)(u - a(x))` with `a(x)` oscillating in
/// `[a_lo, a_hi]`. Envelopes are the cubics at `a_hi` (lower) and `a_lo`
/// (upper), so `theta1 = a_lo < theta0 = a_hi` whenever `a_lo < a_hi`.
pub fn make_periodic_cubic(a_lo: f64, a_hi: f64, period: f64) -> Result<ReactionSpec> {
    if !(0.0 < a_lo && a_lo <= a_hi && a_hi < 0.5) {
        return Err(invalid("a", "need 0 < a_lo <= a_hi < 1/2"));
    }
    if !(period > 0.0) {
        return Err(invalid("period", "must be positive"));
    }
    let field: Field = Arc::new(move |x, u| {
        let a = a_lo + (a_hi - a_lo) * cosine_weight(x, period);
        cubic(a)(u)
    });
    let lip = cubic_lipschitz(a_lo).max(cubic_lipschitz(a_hi)).max(1.0);
    let theta = cubic_theta(a_lo).min(cubic_theta(a_hi));
    Ok(ReactionSpec::new(
        "periodic_cubic",
        json!({ "a_lo": a_lo, "a_hi": a_hi, "period": period }),
        Kind::SpaceDependent,
        Some(period),
        field,
        lip,
        theta,
        EnvelopePair::new(Arc::new(cubic(a_hi)), Arc::new(cubic(a_lo)), a_hi, a_lo),
        Taxonomy::PureBistable,
    ))
}

/// The homogeneous core of the wave-blocking example: the stationary profile
/// `v`, its exact second derivative, and the reaction `g` with `v'' + g(v) = 0`.
#[derive(Clone)]
pub struct WaveBlockingCore {
    pub v: Curve,
    pub v_second: Curve,
    pub g: Curve,
}

pub fn make_wave_blocking_core() -> WaveBlockingCore {
    let v_second = |x: f64| {
        let s = 1.0 + x * x;
        2.0 * x / (PI * s * s)
    };
    let v: Curve = Arc::new(|x: f64| 0.5 - x.atan() / PI);
    let g: Curve = Arc::new(move |u: f64| {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            -v_second((0.5 * PI - PI * u).tan())
        }
    });
    WaveBlockingCore { v, v_second: Arc::new(v_second), g }
}

/// Law of the per-cell factor of the random stationary family `A(x) g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomLaw {
    /// Factors are uniform on `[lo, hi]`.
    pub lo: f64,
    pub hi: f64,
    pub theta_tilde: f64,
    pub amplitude: f64,
}

impl Default for RandomLaw {
    fn default() -> Self {
        Self { lo: 1.0, hi: 2.0, theta_tilde: 0.25, amplitude: 1.0 }
    }
}

/// Cells `[-CELL_CACHE, CELL_CACHE)` are drawn up front; others on demand.
const CELL_CACHE: i64 = 1 << 14;

fn cell_factor(seed: u64, k: i64, law: &RandomLaw) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Zigzag so that negative cells get their own streams.
    rng.set_stream(((k << 1) ^ (k >> 63)) as u64);
    rng.gen_range(law.lo..=law.hi)
}

/// Random stationary ignition reaction `A(x) g(u)`. The factors `A_k` are
/// i.i.d. per cell `[kp, (k+1)p)` and `A` interpolates linearly between cell
/// centres, so shifting by `p` maps the law to itself. Deterministic in `seed`.
pub fn make_random_ergodic(p: f64, seed: u64, law: RandomLaw) -> Result<ReactionSpec> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(invalid("p", "cell period must be positive"));
    }
    if !(law.lo > 0.0 && law.lo <= law.hi && law.hi.is_finite()) {
        return Err(invalid("law", "factors must lie in [lo, hi] with 0 < lo <= hi"));
    }
    let shape = IgnitionShape { amplitude: law.amplitude, power: 1.0 };
    if !(law.theta_tilde > 0.0 && law.theta_tilde < 1.0 && law.amplitude > 0.0) {
        return Err(invalid("law", "base ignition profile must be nondegenerate"));
    }
    let g = ignition_profile(law.theta_tilde, shape);
    let table: Arc<Vec<f64>> =
        Arc::new((-CELL_CACHE..CELL_CACHE).map(|k| cell_factor(seed, k, &law)).collect());
    let law_c = law;
    let factor = move |k: i64| -> f64 {
        if (-CELL_CACHE..CELL_CACHE).contains(&k) {
            table[(k + CELL_CACHE) as usize]
        } else {
            cell_factor(seed, k, &law_c)
        }
    };
    let field: Field = Arc::new(move |x, u| {
        let s = x / p - 0.5;
        let k = s.floor();
        let w = s - k;
        let k = k as i64;
        let a = (1.0 - w) * factor(k) + w * factor(k + 1);
        a * g(u)
    });
    let (lo, hi) = (law.lo, law.hi);
    let f0: Curve = Arc::new(move |u| lo * g(u));
    let f1: Curve = Arc::new(move |u| hi * g(u));
    let mut spec = ReactionSpec::new(
        "random_ergodic",
        json!({ "p": p, "seed": seed, "lo": law.lo, "hi": law.hi,
                "theta_tilde": law.theta_tilde, "amplitude": law.amplitude }),
        Kind::SpaceDependent,
        None,
        field,
        0.0,
        0.0,
        EnvelopePair::new(f0, f1, law.theta_tilde, law.theta_tilde),
        Taxonomy::PureIgnition,
    );
    spec.window = (-32.0 * p, 32.0 * p);
    let f1c = spec.envelope.f1.clone();
    let upper: Field = Arc::new(move |_, u| f1c(u));
    spec.lipschitz_k = lipschitz_of(&upper, &[0.0]);
    spec.theta = theta_of(&upper, &[0.0], law.theta_tilde.min(0.25));
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::simpson;

    #[test]
    fn cubic_roots_and_value() {
        let f = make_cubic_bistable(0.25).unwrap();
        assert_eq!(f.eval(0.0, 0.0), 0.0);
        assert_eq!(f.eval(0.0, 0.25), 0.0);
        // 0.5 * 0.5 * 0.25 by hand.
        assert!((f.eval(0.0, 0.5) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn cubic_rejects_out_of_range() {
        assert!(make_cubic_bistable(0.0).is_err());
        assert!(make_cubic_bistable(1.0).is_err());
        assert!(make_cubic_bistable(f64::NAN).is_err());
    }

    #[test]
    fn cubic_passes_sampled_h() {
        let f = make_cubic_bistable(0.3).unwrap();
        let rep = f.validate(1, 2048, 1e-9);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn g0_matches_printed_formula() {
        let f = make_g0().unwrap();
        assert_eq!(f.eval(0.0, 0.25), 0.0);
        assert_eq!(f.eval(0.0, 0.5), 0.0);
        // (1/4)(1/4)(1/12) at u = 3/4.
        assert!((f.eval(0.0, 0.75) - 1.0 / 192.0).abs() < 1e-15);
        let mass = simpson(|u| f.eval(0.0, u), 0.0, 1.0, 1e-14);
        assert!((mass - 1.0 / 576.0).abs() < 1e-12, "{mass}");
    }

    #[test]
    fn g1_matches_printed_formula() {
        let k = 3.0;
        let f = make_g1(k).unwrap();
        assert_eq!(f.eval(0.0, 1.0 / 22.0), 0.0);
        assert_eq!(f.eval(0.0, 0.6), 0.0);
        let u = 0.2;
        assert!((f.eval(0.0, u) - k * (u - 1.0 / 11.0)).abs() < 1e-15);
        let u = 0.45;
        assert!((f.eval(0.0, u) - k * (0.5 - u)).abs() < 1e-15);
        assert!((f.eval(0.0, 0.75) - 1.0 / 192.0).abs() < 1e-15);
        assert!(make_g1(-1.0).is_err());
    }

    #[test]
    fn g_envelopes_pass_h() {
        for spec in [make_g0().unwrap(), make_g1(0.0).unwrap(), make_g1(5.0).unwrap()] {
            let rep = spec.validate(1, 2048, 1e-9);
            assert!(rep.pass, "{}: {rep:?}", spec.name);
        }
    }

    #[test]
    fn ignition_dead_zone_and_sign() {
        let f = make_ignition(0.3, IgnitionShape::default()).unwrap();
        assert_eq!(f.eval(0.0, 0.15), 0.0);
        assert_eq!(f.eval(0.0, 1.0), 0.0);
        for i in 1..2048 {
            let u = 0.3 + 0.7 * i as f64 / 2048.0;
            assert!(f.eval(0.0, u) > 0.0, "u = {u}");
        }
        assert!(make_ignition(0.3, IgnitionShape { amplitude: 0.0, power: 1.0 }).is_err());
    }

    #[test]
    fn periodic_families_pass_h() {
        let specs = [
            make_periodic_ignition(0.2, 0.3, 2.0, 1.0).unwrap(),
            make_periodic_cubic(0.18, 0.2, 1.0).unwrap(),
            make_ignition_violator(0.1, 0.2, 0.3, 80.0, 60.0, 10.0).unwrap(),
        ];
        for s in specs {
            let rep = s.validate(128, 1024, 1e-9);
            assert!(rep.pass, "{}: {rep:?}", s.name);
        }
    }

    #[test]
    fn wave_blocking_core_is_stationary() {
        let core = make_wave_blocking_core();
        assert_eq!((core.v)(0.0), 0.5);
        assert!((core.g)(0.5).abs() < 1e-15);
        let mut worst: f64 = 0.0;
        for i in 0..=4000 {
            let x = -20.0 + 40.0 * i as f64 / 4000.0;
            let r = (core.v_second)(x) + (core.g)((core.v)(x));
            worst = worst.max(r.abs());
        }
        assert!(worst < 1e-10, "{worst:e}");
        let mass = simpson(|u| (core.g)(u), 0.0, 1.0, 1e-13);
        assert!(mass.abs() < 1e-10, "{mass:e}");
    }

    #[test]
    fn random_family_is_deterministic_and_enveloped() {
        let law = RandomLaw::default();
        let a = make_random_ergodic(1.0, 7, law).unwrap();
        let b = make_random_ergodic(1.0, 7, law).unwrap();
        for i in 0..500 {
            let x = -20.0 + 0.083 * i as f64;
            for u in [0.3, 0.5, 0.9] {
                assert_eq!(a.eval(x, u).to_bits(), b.eval(x, u).to_bits());
            }
        }
        // Cell centres carry the raw factors.
        assert_ne!(a.eval(0.5, 0.5), a.eval(1.5, 0.5));
        let rep = a.validate(256, 512, 1e-12);
        assert!(rep.pass, "{rep:?}");
        assert!(make_random_ergodic(1.0, 7, RandomLaw { lo: 0.0, ..law }).is_err());
    }
}
