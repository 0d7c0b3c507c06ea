use serde::{Deserialize, Serialize};

use super::front::{front_speed_with, ShootOptions};
use super::stationary::antiderivative;
use crate::error::{invalid, Error, Result};
use crate::numerics::{bisect, sampled_max};
use crate::reaction::{EnvelopePair, Kind, ReactionSpec};
use crate::verdict::{VerdictReport, Witness};

const U_GRID: usize = 4096;
const F0_TABLE: usize = 2048;

/// How `zeta` and `theta1''` were chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsMode {
    /// `f1 < (c0^2/4) u` on `(0, theta1']` holds; `theta1''` is meaningful.
    Hypothesis,
    /// Ignition route: `zeta` is supplied, `theta1''` is set to `theta1'`.
    Ignition,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub mode: ConstantsMode,
    pub theta0: f64,
    pub theta1: f64,
    pub epsilon0: f64,
    pub theta1_prime: f64,
    pub theta1_dblprime: f64,
    pub zeta: f64,
    pub xi: f64,
    pub c0: f64,
    pub c_zeta: f64,
    pub c_xi: f64,
    /// `sup f1(u)/u` over `(0, theta1']` (not floored).
    pub sup_ratio: f64,
    /// Samples `(u, F0(u))` on a uniform grid of `[0, 1]`.
    pub f0_table: Vec<(f64, f64)>,
}

impl DerivedConstants {
    /// Re-verifies the stated invariants against the envelope.
    pub fn verify(&self, env: &EnvelopePair) -> VerdictReport {
        let mut rep = VerdictReport::new("derived_constants");
        let f0 = |u: f64| env.f0(u);
        let top = 1.0 - self.epsilon0;
        if antiderivative(&f0, top) <= 0.0 {
            rep.fail_at(top, antiderivative(&f0, top), "F0(1 - eps0) <= 0".into());
        }
        let (argmax, _) = sampled_max(|u| env.f0(u) / u, 1e-9, 1.0, U_GRID);
        if top <= argmax {
            rep.fail_at(top, argmax, "1 - eps0 below argmax f0/u".into());
        }
        let gap = antiderivative(&f0, self.theta1_prime) - antiderivative(&f0, self.theta1);
        if gap.abs() > 1e-9 {
            rep.fail_at(self.theta1_prime, gap, "int f0 over [theta1, theta1'] nonzero".into());
        }
        if (self.c_zeta - 2.0 * self.zeta.sqrt()).abs() > 1e-12
            || (self.c_xi - (self.xi + self.zeta) / self.zeta.sqrt()).abs() > 1e-12
        {
            rep.fail_at(self.zeta, self.xi, "speed formulas".into());
        }
        if !(self.zeta < 0.25 * self.c0 * self.c0) {
            rep.fail_at(self.zeta, self.c0, "zeta >= c0^2/4".into());
        }
        if !(self.c_zeta < self.c0 && self.c0 <= self.c_xi) {
            rep.fail_at(self.c_zeta, self.c_xi, "c_zeta < c0 <= c_xi violated".into());
        }
        let (_, xi) = sampled_max(|u| env.f1(u) / u, 1e-9, 1.0, U_GRID);
        if (xi - self.xi).abs() > 1e-9 * xi.abs().max(1.0) {
            rep.fail_at(self.xi, xi, "xi is not the sampled max of f1/u".into());
        }
        rep.margin = 0.25 * self.c0 * self.c0 - self.zeta;
        rep.finish()
    }

    /// `F0(u)` by linear interpolation of the table.
    pub fn f0_antiderivative(&self, u: f64) -> f64 {
        let n = self.f0_table.len() - 1;
        let s = (u.clamp(0.0, 1.0) * n as f64).min(n as f64 - 1e-12);
        let i = s.floor() as usize;
        let w = s - i as f64;
        (1.0 - w) * self.f0_table[i].1 + w * self.f0_table[i + 1].1
    }
}

/// Front speed of the lower envelope.
pub fn envelope_speed(env: &EnvelopePair, k: f64) -> Result<f64> {
    let f0 = |u: f64| env.f0(u);
    Ok(front_speed_with(&f0, k, ShootOptions::default())?.speed)
}

fn f0_table(env: &EnvelopePair) -> Vec<(f64, f64)> {
    let h = 1.0 / F0_TABLE as f64;
    let mut acc = 0.0;
    let mut out = vec![(0.0, 0.0)];
    for i in 0..F0_TABLE {
        let a = i as f64 * h;
        acc += crate::numerics::simpson(|u| env.f0(u), a, a + h, 1e-15);
        out.push((a + h, acc));
    }
    out
}

/// `theta1' in [theta0, 1)` with `int_{theta1}^{theta1'} f0 = 0`.
pub fn theta1_prime(env: &EnvelopePair) -> Result<f64> {
    if env.theta1 >= env.theta0 {
        return Ok(env.theta0);
    }
    let f0 = |u: f64| env.f0(u);
    let target = antiderivative(&f0, env.theta1);
    let g = |x: f64| antiderivative(&f0, x) - target;
    if g(env.theta0) >= 0.0 {
        return Ok(env.theta0);
    }
    bisect(g, env.theta0, 1.0, 1e-13)
}

/// Largest sampled `eps` in `(0, theta0)` with `F0(1 - eps) > 0` and `1 - eps`
/// beyond every maximiser of `f0(u)/u`, halved.
fn choose_epsilon0(env: &EnvelopePair) -> Result<f64> {
    let f0 = |u: f64| env.f0(u);
    let (argmax, _) = sampled_max(|u| env.f0(u) / u, 1e-9, 1.0, U_GRID);
    let n = F0_TABLE;
    for k in (1..n).rev() {
        let eps = k as f64 / n as f64;
        if eps >= env.theta0 {
            continue;
        }
        if 1.0 - eps > argmax && antiderivative(&f0, 1.0 - eps) > 0.0 {
            return Ok(0.5 * eps);
        }
    }
    Err(Error::BadEpsilon0 { top: antiderivative(&f0, 1.0 - 1.0 / n as f64), max: 0.0 })
}

fn ratio_sup(env: &EnvelopePair, hi: f64) -> (f64, f64) {
    sampled_max(|u| env.f1(u) / u, 1e-9 * hi, hi, U_GRID)
}

fn assemble(
    env: &EnvelopePair,
    c0: f64,
    mode: ConstantsMode,
    zeta: f64,
    t1p: f64,
    t1pp: f64,
    sup_ratio: f64,
) -> Result<DerivedConstants> {
    let (_, xi) = sampled_max(|u| env.f1(u) / u, 1e-9, 1.0, U_GRID);
    if !(xi > 0.0) {
        return Err(invalid("f1", "max f1(u)/u must be positive"));
    }
    Ok(DerivedConstants {
        mode,
        theta0: env.theta0,
        theta1: env.theta1,
        epsilon0: choose_epsilon0(env)?,
        theta1_prime: t1p,
        theta1_dblprime: t1pp,
        zeta,
        xi,
        c0,
        c_zeta: 2.0 * zeta.sqrt(),
        c_xi: (xi + zeta) / zeta.sqrt(),
        sup_ratio,
        f0_table: f0_table(env),
    })
}

/// Constants under the hypothesis `f1 < (c0^2/4) u` on `(0, theta1']`. `zeta` sits midway
/// between `max(sup_{(0,theta1']} f1/u, 0)` and `c0^2/4`.
pub fn derive_constants(env: &EnvelopePair, c0: f64) -> Result<DerivedConstants> {
    if !(c0 > 0.0) {
        return Err(invalid("c0", "front speed of f0 must be positive"));
    }
    let t1p = theta1_prime(env)?;
    let (ustar, sup) = ratio_sup(env, t1p);
    let cap = 0.25 * c0 * c0;
    if sup >= cap {
        return Err(Error::HypothesisFails {
            u: ustar,
            detail: format!("f1(u)/u = {sup:.6e} >= c0^2/4 = {cap:.6e}"),
        });
    }
    let zeta = 0.5 * (sup.max(0.0) + cap);
    // First grid point above theta1' where f1 >= zeta u.
    let h = 1.0 / U_GRID as f64;
    let mut last_ok = t1p;
    let mut u = (t1p / h).floor() * h + h;
    let mut bad = None;
    while u < 1.0 {
        if env.f1(u) >= zeta * u {
            bad = Some(u);
            break;
        }
        last_ok = u;
        u += h;
    }
    let t1pp = match bad {
        None => last_ok,
        Some(b) if last_ok > t1p => last_ok.min(b - 0.5 * h),
        Some(b) => {
            let c = bisect(|x| env.f1(x) - zeta * x, t1p, b, 1e-13).unwrap_or(b);
            0.5 * (t1p + c)
        }
    };
    assemble(env, c0, ConstantsMode::Hypothesis, zeta, t1p, t1pp, sup)
}

/// Constants for the ignition route with a prescribed `zeta < c0^2/4`
/// (default `c0^2/8`).
pub fn derive_constants_ignition(env: &EnvelopePair, c0: f64, zeta: Option<f64>) -> Result<DerivedConstants> {
    if !(c0 > 0.0) {
        return Err(invalid("c0", "front speed of f0 must be positive"));
    }
    let zeta = zeta.unwrap_or(0.125 * c0 * c0);
    if !(zeta > 0.0 && zeta < 0.25 * c0 * c0) {
        return Err(invalid("zeta", "need 0 < zeta < c0^2/4"));
    }
    let t1p = theta1_prime(env)?;
    let (_, sup) = ratio_sup(env, t1p);
    assemble(env, c0, ConstantsMode::Ignition, zeta, t1p, t1p, sup)
}

/// Options for the hypothesis verdicts.
#[derive(Debug, Clone, Copy)]
pub struct HypothesisOptions {
    /// Required gap in the strict inequality.
    pub strict: f64,
}

impl Default for HypothesisOptions {
    fn default() -> Self {
        Self { strict: 1e-8 }
    }
}

fn sup_verdict(name: &str, spec: &ReactionSpec, hi: f64, opts: HypothesisOptions) -> Result<VerdictReport> {
    let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k)?;
    let (ustar, sup) = ratio_sup(&spec.envelope, hi);
    let cap = 0.25 * c0 * c0;
    let margin = cap - sup;
    let mut rep = VerdictReport::new(name);
    rep.margin = margin;
    rep.pass = margin > opts.strict;
    rep.witness(ustar, sup, format!("argmax of f1(u)/u on (0, {hi:.6}]; c0^2/4 = {cap:.6e}"));
    Ok(rep.finish())
}

/// `f1(u) < (c0^2/4) u` on `(0, theta1']`.
pub fn check_space_front_hypothesis(spec: &ReactionSpec) -> Result<VerdictReport> {
    check_space_front_hypothesis_with(spec, HypothesisOptions::default())
}

pub fn check_space_front_hypothesis_with(spec: &ReactionSpec, opts: HypothesisOptions) -> Result<VerdictReport> {
    let t1p = theta1_prime(&spec.envelope)?;
    sup_verdict("hypothesis_space_front", spec, t1p, opts)
}

/// `f1(u) < (c0^2/4) u` on `(0, theta0]`.
pub fn check_time_front_hypothesis(spec: &ReactionSpec) -> Result<VerdictReport> {
    check_time_front_hypothesis_with(spec, HypothesisOptions::default())
}

pub fn check_time_front_hypothesis_with(spec: &ReactionSpec, opts: HypothesisOptions) -> Result<VerdictReport> {
    sup_verdict("hypothesis_time_front", spec, spec.envelope.theta0, opts)
}

/// Sampling for the ignition check.
#[derive(Debug, Clone, Copy)]
pub struct IgnitionCheckOptions {
    /// Coordinate samples per period (or per window).
    pub n_z: usize,
    /// `u` samples between `min alpha_f` and `theta0`.
    pub n_u: usize,
}

impl Default for IgnitionCheckOptions {
    fn default() -> Self {
        Self { n_z: 2048, n_u: 256 }
    }
}

/// `alpha_f(z) = inf{u in (0,1) : f(z,u) >= zeta u}`, or 1 when the set is empty.
pub fn alpha_f(spec: &ReactionSpec, z: f64, zeta: f64) -> f64 {
    const N: usize = 2048;
    let g = |u: f64| spec.eval(z, u) - zeta * u;
    let mut prev = 0.0;
    for i in 1..N {
        let u = i as f64 / N as f64;
        if g(u) >= 0.0 {
            let (mut lo, mut hi) = (prev, u);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if g(mid) >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return hi;
        }
        prev = u;
    }
    1.0
}

fn window_max(vals: &[f64], half: usize, periodic: bool) -> Vec<f64> {
    if periodic {
        return crate::numerics::periodic_window_max(vals, half);
    }
    let n = vals.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            vals[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Achieved value of the inf-sup (space) or inf (time) quantity at `eta`,
/// with the location `(z, u)` of the infimum.
fn ignition_quantity(
    spec: &ReactionSpec,
    zeta: f64,
    eta: f64,
    opts: IgnitionCheckOptions,
) -> (f64, f64, f64) {
    let theta0 = spec.envelope.theta0;
    let coords = match spec.period {
        Some(p) => {
            let n = opts.n_z.max((p / 0.05).ceil() as usize);
            (0..n).map(|i| p * i as f64 / n as f64).collect::<Vec<_>>()
        }
        None => spec.sample_coords(opts.n_z),
    };
    let alphas: Vec<f64> = coords.iter().map(|&z| alpha_f(spec, z, zeta)).collect();
    let amin = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    if amin >= theta0 {
        return (f64::INFINITY, coords[0], theta0);
    }
    let us: Vec<f64> = (0..=opts.n_u).map(|j| amin + (theta0 - amin) * j as f64 / opts.n_u as f64).collect();
    let dz = if coords.len() > 1 { coords[1] - coords[0] } else { 1.0 };
    let use_sup = spec.kind == Kind::SpaceDependent;
    let half = if use_sup { ((1.0 / eta) / dz).floor() as usize } else { 0 };
    let mut best = (f64::INFINITY, coords[0], theta0);
    for &u in &us {
        let row: Vec<f64> = coords.iter().map(|&z| spec.eval(z, u)).collect();
        let row = if half > 0 { window_max(&row, half, spec.period.is_some()) } else { row };
        for (i, &z) in coords.iter().enumerate() {
            if u >= alphas[i] && row[i] < best.0 {
                best = (row[i], z, u);
            }
        }
    }
    // The endpoint u = alpha_f(z) itself.
    for (i, &z) in coords.iter().enumerate() {
        if alphas[i] <= theta0 && !use_sup {
            let v = spec.eval(z, alphas[i]);
            if v < best.0 {
                best = (v, z, alphas[i]);
            }
        }
    }
    best
}

fn require_ignition(spec: &ReactionSpec) -> Result<()> {
    let th = spec.envelope.theta0;
    for i in 1..U_GRID {
        let u = th * i as f64 / U_GRID as f64;
        let v = spec.envelope.f0(u);
        if v.abs() > 1e-12 {
            return Err(Error::NotIgnition { u, value: v });
        }
    }
    Ok(())
}

/// Ignition non-vanishing condition with given `zeta` and `eta`. The space
/// version takes the sup over `|y - x| <= 1/eta`; the time version does not.
pub fn check_ignition_hypothesis(spec: &ReactionSpec, zeta: f64, eta: f64) -> Result<VerdictReport> {
    check_ignition_hypothesis_with(spec, zeta, eta, IgnitionCheckOptions::default())
}

pub fn check_ignition_hypothesis_with(
    spec: &ReactionSpec,
    zeta: f64,
    eta: f64,
    opts: IgnitionCheckOptions,
) -> Result<VerdictReport> {
    require_ignition(spec)?;
    if !(eta > 0.0) {
        return Err(invalid("eta", "must be positive"));
    }
    if !(zeta > 0.0) {
        return Err(invalid("zeta", "must be positive"));
    }
    let (val, z, u) = ignition_quantity(spec, zeta, eta, opts);
    let margin = val - eta;
    let w = Witness::new(z, u, format!("infimum {val:.6e} attained at (z, u) = ({z:.6}, {u:.6})"));
    let mut rep = VerdictReport::from_margin("ignition_nonvanishing", margin, w);
    if !margin.is_finite() {
        // alpha_f >= theta0 everywhere: the condition is vacuous.
        rep.pass = true;
        rep.margin = f64::MAX;
    }
    Ok(rep.finish())
}

/// Largest `eta` (to relative precision 1e-6) for which the ignition check
/// passes; 0 if none does.
pub fn best_eta(spec: &ReactionSpec, zeta: f64, opts: IgnitionCheckOptions) -> Result<f64> {
    require_ignition(spec)?;
    let ok = |eta: f64| ignition_quantity(spec, zeta, eta, opts).0 >= eta;
    let mut hi = 1.0_f64.max(spec.lipschitz_k);
    if ok(hi) {
        return Ok(hi);
    }
    let mut probe = hi;
    while probe > 1e-12 && !ok(probe) {
        hi = probe;
        probe *= 0.25;
    }
    if probe <= 1e-12 {
        return Ok(0.0);
    }
    let mut lo = probe;
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::{
        make_cubic_bistable, make_g0, make_ignition, make_ignition_violator, make_periodic_cubic,
        make_periodic_ignition, IgnitionShape,
    };

    #[test]
    fn cubic_constants_satisfy_invariants() {
        let spec = make_cubic_bistable(0.25).unwrap();
        let c0 = envelope_speed(&spec.envelope, 1.0).unwrap();
        let dc = derive_constants(&spec.envelope, c0).unwrap();
        assert!(dc.sup_ratio <= 0.0);
        assert!((dc.zeta - c0 * c0 / 8.0).abs() < 1e-12);
        assert_eq!(dc.theta1_prime, 0.25);
        assert!(dc.theta1_dblprime > dc.theta1_prime);
        let rep = dc.verify(&spec.envelope);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn two_threshold_constants() {
        let spec = make_periodic_cubic(0.18, 0.2, 1.0).unwrap();
        let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).unwrap();
        let dc = derive_constants(&spec.envelope, c0).unwrap();
        assert!(dc.theta1_prime > 0.2);
        assert!(dc.verify(&spec.envelope).pass);
        let rep = check_space_front_hypothesis(&spec).unwrap();
        assert!(rep.pass && rep.margin > 0.0, "{rep:?}");
    }

    #[test]
    fn touching_bump_fails_with_witness() {
        // theta1' is near 0.25, where f0/u stays below the cap; only the bump
        // near u = 0.1 reaches c0^2/4 * u.
        let base = make_cubic_bistable(0.2).unwrap();
        let c0 = envelope_speed(&base.envelope, 1.0).unwrap();
        let cap = 0.25 * c0 * c0;
        let f0 = base.envelope.f0.clone();
        let f1: crate::reaction::Curve = std::sync::Arc::new(move |u: f64| {
            let bump = (1.0 - ((u - 0.1) / 0.03).powi(2)).max(0.0);
            f0(u).max(cap * u * bump * 1.01)
        });
        let env = EnvelopePair::new(base.envelope.f0.clone(), f1, 0.2, 0.15);
        let err = derive_constants(&env, c0).unwrap_err();
        match err {
            Error::HypothesisFails { u, .. } => assert!((u - 0.1).abs() < 0.03, "{u}"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn equal_thresholds_always_pass() {
        for spec in [make_cubic_bistable(0.3).unwrap(), make_g0().unwrap()] {
            assert!(check_space_front_hypothesis(&spec).unwrap().pass);
            assert!(check_time_front_hypothesis(&spec).unwrap().pass);
        }
    }

    #[test]
    fn pure_ignition_passes_without_sup() {
        let spec = make_ignition(0.3, IgnitionShape::default()).unwrap();
        let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).unwrap();
        let zeta = c0 * c0 / 8.0;
        let eta = best_eta(&spec, zeta, IgnitionCheckOptions::default()).unwrap();
        assert!(eta > 0.0);
        assert!(check_ignition_hypothesis(&spec, zeta, 0.5 * eta).unwrap().pass);
    }

    #[test]
    fn periodic_ignition_passes_and_violator_fails() {
        let ok = make_periodic_ignition(0.2, 0.3, 2.0, 1.0).unwrap();
        let c0 = envelope_speed(&ok.envelope, ok.lipschitz_k).unwrap();
        let zeta = c0 * c0 / 8.0;
        let eta = best_eta(&ok, zeta, IgnitionCheckOptions::default()).unwrap();
        assert!(eta > 0.0);
        let bad = make_ignition_violator(0.1, 0.2, 0.3, 80.0, 60.0, 10.0).unwrap();
        let c0b = envelope_speed(&bad.envelope, bad.lipschitz_k).unwrap();
        let rep = check_ignition_hypothesis(&bad, c0b * c0b / 8.0, 0.05).unwrap();
        assert!(!rep.pass);
        assert!(!rep.witnesses.is_empty());
    }

    #[test]
    fn bistable_is_not_ignition() {
        let spec = make_cubic_bistable(0.25).unwrap();
        assert!(matches!(check_ignition_hypothesis(&spec, 0.01, 0.1), Err(Error::NotIgnition { .. })));
    }

    #[test]
    fn alpha_dominates_first_root_of_f1() {
        let spec = make_periodic_ignition(0.2, 0.3, 2.0, 1.0).unwrap();
        let zeta = 0.01;
        let beta = bisect(|u| spec.envelope.f1(u) - zeta * u, 0.2 + 1e-9, 0.6, 1e-13).unwrap();
        for i in 0..50 {
            let z = 2.0 * i as f64 / 50.0;
            assert!(alpha_f(&spec, z, zeta) >= beta - 1e-9);
        }
    }
}
