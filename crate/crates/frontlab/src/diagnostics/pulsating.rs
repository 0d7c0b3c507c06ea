use serde::{Deserialize, Serialize};

use super::shift::eval_at;
use crate::error::{Error, Result};
use crate::pdesim::Snapshot;
use crate::verdict::VerdictReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulsatingForm {
    /// Space period `p`: `u(t + p/c, x) = u(t, x - p)`.
    Space,
    /// Time period `p`: `u(t + p, x) = u(t, x - p c)`.
    Time,
}

/// Sup over snapshot times `t >= t_from` (with `t + lag` recorded) and nodes of
/// the `t` snapshot of the pulsating-identity defect. Passes iff below `tol`.
pub fn pulsating_check(
    trajectory: &[Snapshot],
    p: f64,
    c: f64,
    form: PulsatingForm,
    t_from: f64,
    tol: f64,
) -> Result<VerdictReport> {
    if !(p > 0.0 && c > 0.0) {
        return Err(crate::error::invalid("p, c", "period and speed must be positive"));
    }
    let (lag, dist) = match form {
        PulsatingForm::Space => (p / c, p),
        PulsatingForm::Time => (p, p * c),
    };
    let t_end = trajectory.last().map_or(f64::NEG_INFINITY, |s| s.t);
    let used: Vec<&Snapshot> = trajectory.iter().filter(|s| s.t >= t_from && s.t + lag <= t_end).collect();
    if used.is_empty() {
        return Err(Error::InsufficientHorizon(format!(
            "need snapshots on [{t_from}, {}] but the run ends at {t_end}",
            t_from + lag
        )));
    }
    let mut rep = VerdictReport::new(match form {
        PulsatingForm::Space => "pulsating_space",
        PulsatingForm::Time => "pulsating_time",
    });
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for s in used {
        for j in 0..s.u.len() {
            let x = s.x(j);
            let Some(later) = eval_at(trajectory, s.t + lag, x) else { continue };
            let d = (later - s.eval(x - dist)).abs();
            if d > worst.0 {
                worst = (d, s.t, x);
            }
        }
    }
    rep.margin = tol - worst.0;
    rep.pass = rep.margin >= 0.0;
    rep.witness(worst.2, worst.0, format!("largest defect at t = {:.4}", worst.1));
    Ok(rep.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn travelling_wave_satisfies_identity_for_any_period() {
        let c = 0.35;
        let w = |z: f64| 1.0 / (1.0 + (z / 2f64.sqrt()).exp());
        let dx = 0.05;
        let traj: Vec<Snapshot> = (0..=200)
            .map(|k| {
                let t = 0.25 * k as f64;
                Snapshot { t, x0: -30.0, dx, u: (0..1201).map(|j| w(-30.0 + j as f64 * dx - c * t)).collect() }
            })
            .collect();
        for p in [0.7, 0.8] {
            // p / c falls between snapshots for p = 0.8: time interpolation error only.
            let rep = pulsating_check(&traj, p, c, PulsatingForm::Space, 5.0, 1e-3).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        let rep = pulsating_check(&traj, 2.0, c, PulsatingForm::Time, 5.0, 1e-9).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn short_run_is_insufficient() {
        let traj = vec![Snapshot { t: 0.0, x0: 0.0, dx: 0.1, u: vec![1.0, 0.0] }];
        assert!(matches!(
            pulsating_check(&traj, 1.0, 1.0, PulsatingForm::Space, 0.0, 1e-2),
            Err(Error::InsufficientHorizon(_))
        ));
    }
}
