use serde::{Deserialize, Serialize};

use crate::reaction::{Kind, ReactionSpec};
use crate::verdict::VerdictReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// Pass iff `w_t - w_xx - f(., w) >= -tol` at every sample.
    Super,
    /// Pass iff the residual is `<= tol` at every sample.
    Sub,
}

/// Sampled residual check of `w_t - w_xx - f(z, w)` by centred differences of
/// step `h`, with `z = x` or `z = t` according to the reaction kind.
pub fn check_supersolution(
    candidate: &dyn Fn(f64, f64) -> f64,
    f: &ReactionSpec,
    samples: &[(f64, f64)],
    mode: ResidualMode,
    tol: f64,
    h: f64,
) -> VerdictReport {
    let name = match mode {
        ResidualMode::Super => "supersolution",
        ResidualMode::Sub => "subsolution",
    };
    let mut rep = VerdictReport::new(name);
    let mut worst = f64::INFINITY;
    for &(t, x) in samples {
        let w = candidate(t, x);
        let wt = (candidate(t + h, x) - candidate(t - h, x)) / (2.0 * h);
        let wxx = (candidate(t, x + h) - 2.0 * w + candidate(t, x - h)) / (h * h);
        let z = if f.kind == Kind::TimeDependent { t } else { x };
        let r = wt - wxx - f.eval(z, w);
        let signed = match mode {
            ResidualMode::Super => r,
            ResidualMode::Sub => -r,
        };
        if signed < worst {
            worst = signed;
        }
        if signed < -tol {
            rep.fail_at(x, r, format!("residual {r:.3e} at t = {t}"));
        }
    }
    rep.margin = worst + tol;
    rep.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::make_cubic_bistable;
    use crate::verdict::VerdictReport;
    use std::sync::Arc;

    fn grid() -> Vec<(f64, f64)> {
        (0..20).flat_map(|i| (0..40).map(move |j| (0.5 * i as f64 + 0.1, -5.0 + 0.25 * j as f64))).collect()
    }

    #[test]
    fn one_is_an_exact_solution() {
        let spec = make_cubic_bistable(0.25).unwrap();
        let rep: VerdictReport = check_supersolution(&|_, _| 1.0, &spec, &grid(), ResidualMode::Super, 0.0, 1e-3);
        assert!(rep.pass);
        assert!((rep.margin).abs() < 1e-12);
    }

    #[test]
    fn exponential_solves_linear_growth() {
        let zeta: f64 = 0.04;
        let lin = crate::reaction::ReactionSpec::new(
            "linear",
            serde_json::json!({}),
            Kind::Homogeneous,
            None,
            Arc::new(move |_, u| zeta * u),
            1.0,
            0.1,
            crate::reaction::EnvelopePair::tight(Arc::new(move |u| zeta * u), 0.5),
            crate::reaction::Taxonomy::Bi,
        );
        let c = 2.0 * zeta.sqrt();
        // Stay in u < 1 where the evaluator is not truncated.
        let w = move |t: f64, x: f64| (-zeta.sqrt() * (x - 40.0 - c * t)).exp();
        let s: Vec<(f64, f64)> = grid().into_iter().map(|(t, x)| (t, x + 60.0)).collect();
        for mode in [ResidualMode::Super, ResidualMode::Sub] {
            let rep = check_supersolution(&w, &lin, &s, mode, 1e-7, 1e-3);
            assert!(rep.pass, "{rep:?}");
        }
    }
}
