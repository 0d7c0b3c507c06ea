use serde::{Deserialize, Serialize};

use super::{ReactionSpec, Taxonomy};
use crate::error::{Error, Result};

/// Distances at which the fitted minorant `gamma` is reported.
const GAMMA_AT: [f64; 4] = [0.01, 0.02, 0.05, 0.1];
/// Values of `|f|` at or below this count as zero.
const ZERO: f64 = 1e-14;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub taxonomy: Taxonomy,
    /// `f1 < 0` on `(0, theta1)` (sampled).
    pub bistable: bool,
    /// `f0 = 0` on `(0, theta0)` (sampled).
    pub ignition: bool,
    /// Sampled sign-change point per coordinate, when a pure class holds.
    pub theta_tilde_range: Option<(f64, f64)>,
    /// `(d, gamma(d))` with `gamma(d) = min |f|` over samples at distance `>= d`
    /// from `{0, theta_tilde, 1}`; ignition slices contribute only `u > theta_tilde`.
    pub gamma: Vec<(f64, f64)>,
    /// `gamma` at the reference distance 0.05 (or the largest reported one).
    pub margin: f64,
}

enum Slice {
    PureBistable(f64),
    PureIgnition(f64),
    Neither,
}

fn slice_kind(vals: &[f64], du: f64, theta1: f64, theta0: f64) -> Slice {
    let n = vals.len() - 1;
    let tol_u = 2.0 * du;
    // Pure ignition: exact zeros up to theta_tilde, then strictly positive.
    let mut last_zero = 0;
    while last_zero < n - 1 && vals[last_zero + 1].abs() <= ZERO {
        last_zero += 1;
    }
    if last_zero > 0 {
        let th = last_zero as f64 * du;
        let positive = vals[last_zero + 1..n].iter().all(|&v| v > ZERO);
        if positive && th >= theta1 - tol_u && th <= theta0 + tol_u {
            return Slice::PureIgnition(th);
        }
        return Slice::Neither;
    }
    // Pure bistable: strictly negative, then strictly positive.
    let mut k = 1;
    while k < n && vals[k] < -ZERO {
        k += 1;
    }
    if k == 1 {
        return Slice::Neither;
    }
    // vals[k] is the first non-negative sample; allow one exact zero there.
    let start = if vals[k].abs() <= ZERO { k + 1 } else { k };
    if start >= n || !vals[start..n].iter().all(|&v| v > ZERO) {
        return Slice::Neither;
    }
    let th = if vals[k].abs() <= ZERO {
        k as f64 * du
    } else {
        // Linear interpolation of the crossing.
        let (a, b) = (vals[k - 1], vals[k]);
        ((k - 1) as f64 + a / (a - b)) * du
    };
    if th >= theta1 - tol_u && th <= theta0 + tol_u {
        Slice::PureBistable(th)
    } else {
        Slice::Neither
    }
}

/// Strongest taxonomy class supported by sampling on an `n_z x n_u` grid.
///
/// Fails with `Inconclusive` when the sign pattern of a pure class holds but
/// the fitted minorant vanishes at the smallest reported distance.
pub fn classify(spec: &ReactionSpec, n_z: usize, n_u: usize) -> Result<ClassifyReport> {
    let env = &spec.envelope;
    let du = 1.0 / n_u as f64;
    let mut bistable = env.theta1 > 0.0;
    let mut ignition = true;
    for i in 1..n_u {
        let u = i as f64 * du;
        if u < env.theta1 && !(env.f1(u) < 0.0) {
            bistable = false;
        }
        if u < env.theta0 && env.f0(u).abs() > ZERO {
            ignition = false;
        }
    }
    let coords = spec.sample_coords(n_z);
    let mut kinds = Vec::with_capacity(coords.len());
    let mut gamma: Vec<f64> = vec![f64::INFINITY; GAMMA_AT.len()];
    let mut all_pb = true;
    let mut all_pi = true;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for &z in &coords {
        let vals: Vec<f64> = (0..=n_u).map(|i| spec.eval(z, i as f64 * du)).collect();
        let kind = slice_kind(&vals, du, env.theta1, env.theta0);
        let (th, skip_below) = match kind {
            Slice::PureBistable(t) => {
                all_pi = false;
                (t, 0.0)
            }
            Slice::PureIgnition(t) => {
                all_pb = false;
                (t, t)
            }
            Slice::Neither => {
                all_pb = false;
                all_pi = false;
                continue;
            }
        };
        range = (range.0.min(th), range.1.max(th));
        for (i, &v) in vals.iter().enumerate() {
            let u = i as f64 * du;
            // An ignition slice vanishes on (0, theta_tilde) by definition.
            if u <= skip_below {
                continue;
            }
            let d = u.min((u - th).abs()).min(1.0 - u);
            for (g, &at) in gamma.iter_mut().zip(GAMMA_AT.iter()) {
                if d >= at {
                    *g = g.min(v.abs());
                }
            }
        }
        kinds.push(kind);
    }
    let pure = !kinds.is_empty() && (all_pb || all_pi);
    let gamma: Vec<(f64, f64)> = GAMMA_AT
        .iter()
        .zip(&gamma)
        .filter(|(_, g)| g.is_finite())
        .map(|(&d, &g)| (d, g))
        .collect();
    let margin = gamma
        .iter()
        .find(|(d, _)| *d == 0.05)
        .or_else(|| gamma.last())
        .map(|&(_, g)| g)
        .unwrap_or(0.0);
    if pure && gamma.first().map_or(true, |&(_, g)| g <= ZERO) {
        return Err(Error::Inconclusive(format!(
            "sign pattern of a pure class holds but the fitted minorant is {:?}",
            gamma.first()
        )));
    }
    let taxonomy = if env.theta1 <= 0.0 {
        Taxonomy::MixedBim
    } else if pure && all_pb && bistable {
        Taxonomy::PureBistable
    } else if pure && all_pi && ignition {
        Taxonomy::PureIgnition
    } else if bistable {
        Taxonomy::Bistable
    } else if ignition {
        Taxonomy::Ignition
    } else {
        Taxonomy::Bi
    };
    Ok(ClassifyReport {
        taxonomy,
        bistable,
        ignition,
        theta_tilde_range: if pure { Some(range) } else { None },
        gamma,
        margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::{
        make_cubic_bistable, make_g0, make_g1, make_ignition, make_periodic_cubic,
        make_temporal_counterexample, IgnitionShape,
    };

    #[test]
    fn cubic_is_pure_bistable() {
        let r = classify(&make_cubic_bistable(0.25).unwrap(), 1, 2048).unwrap();
        assert_eq!(r.taxonomy, Taxonomy::PureBistable);
        let (lo, hi) = r.theta_tilde_range.unwrap();
        assert!((lo - 0.25).abs() < 1e-3 && (hi - 0.25).abs() < 1e-3);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn ignition_is_pure_ignition() {
        let r = classify(&make_ignition(0.3, IgnitionShape::default()).unwrap(), 1, 2048).unwrap();
        assert_eq!(r.taxonomy, Taxonomy::PureIgnition);
    }

    #[test]
    fn g_family_classes() {
        // Zero on [0, 1/2], cubic above: negative on (1/2, 2/3) breaks both pure classes.
        assert_eq!(classify(&make_g0().unwrap(), 1, 2048).unwrap().taxonomy, Taxonomy::Bi);
        // Zero on [0, 2/3], positive above: pure ignition by the taxonomy definition.
        assert_eq!(classify(&make_g1(0.0).unwrap(), 1, 2048).unwrap().taxonomy, Taxonomy::PureIgnition);
        // Positive tent, then the zero plateau [1/2, 2/3]: not pure.
        assert_eq!(classify(&make_g1(2.0).unwrap(), 1, 2048).unwrap().taxonomy, Taxonomy::Ignition);
    }

    #[test]
    fn periodic_cubic_is_pure_bistable() {
        let r = classify(&make_periodic_cubic(0.18, 0.2, 1.0).unwrap(), 64, 2048).unwrap();
        assert_eq!(r.taxonomy, Taxonomy::PureBistable);
    }

    #[test]
    fn temporal_blend_is_only_bistable() {
        let r = classify(&make_temporal_counterexample(1e-3, 100.0).unwrap(), 64, 2048).unwrap();
        assert_eq!(r.taxonomy, Taxonomy::Bistable);
    }
}
