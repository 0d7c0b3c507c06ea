use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pdesim::{SimState, Stepper};
use crate::reaction::ReactionSpec;
use crate::verdict::VerdictReport;
use crate::wavesolve::discrete_hump;

/// Which translation the random medium is stationary under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgodicAxis {
    /// Record first passage times `tau_{m,n}`; speed `p / (tau_{0,n}/n)`.
    Space,
    /// Record displacements `xi_{m,n}` at `t = np`; speed `(xi_{0,n}/n) / p`.
    Time,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicOptions {
    pub axis: ErgodicAxis,
    /// Cell period; must be a whole number of grid spacings on the space axis.
    pub p: f64,
    pub n_max: usize,
    pub dx: f64,
    /// Plateau gap of the hump initial data.
    pub epsilon0: f64,
    /// Give up (non-propagation) after this much simulated time.
    pub horizon: f64,
    /// Sampled `(m, n)` pairs for the subadditivity check.
    pub pairs: Vec<(usize, usize)>,
    /// Allowed relative spread `(max - min)/mean` of the seed speeds.
    pub spread_tol: f64,
}

impl ErgodicOptions {
    pub fn new(axis: ErgodicAxis, p: f64, n_max: usize, epsilon0: f64) -> Self {
        Self {
            axis,
            p,
            n_max,
            dx: 0.05,
            epsilon0,
            horizon: 2000.0,
            pairs: vec![(n_max / 4, n_max / 2), (n_max / 2, n_max)],
            spread_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    /// `tau_{0,n}` (space) or `xi_{0,n}` (time) for `n = 1..=n_max`.
    pub sequence: Vec<f64>,
    pub speed: f64,
    pub subadditivity: VerdictReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErgodicReport {
    pub axis: ErgodicAxis,
    pub p: f64,
    pub n_max: usize,
    pub runs: Vec<SeedRun>,
    pub mean_speed: f64,
    /// `(max - min) / mean` over seeds.
    pub spread: f64,
    pub verdict: VerdictReport,
}

/// Grid with the hump placed by zero node; all runs of one medium share it.
struct Lab<'a> {
    spec: &'a ReactionSpec,
    hump: Vec<f64>,
    x_min: f64,
    dx: f64,
    dt: f64,
    nodes: usize,
    /// Nodes per cell (space axis).
    cell: usize,
    /// Steps per period (time axis).
    steps_per_period: u64,
}

impl<'a> Lab<'a> {
    fn new(spec: &'a ReactionSpec, o: &ErgodicOptions) -> Result<Self> {
        let f0 = spec.envelope.f0_curve();
        let hump = discrete_hump(&*f0, o.epsilon0, o.dx)?;
        let len = (hump.len() - 1) as f64 * o.dx;
        let dt0 = (0.5 * o.dx * o.dx).min(0.5 / spec.lipschitz_k);
        let (cell, reach, steps_per_period, dt) = match o.axis {
            ErgodicAxis::Space => {
                let cell = (o.p / o.dx).round();
                if (cell * o.dx - o.p).abs() > 1e-9 * o.p || cell < 1.0 {
                    return Err(invalid("p", "cell period must be a whole number of grid spacings"));
                }
                (cell as usize, o.n_max as f64 * o.p, 0, dt0)
            }
            ErgodicAxis::Time => {
                let k = (o.p / dt0).ceil();
                // The window must hold n_max periods of travel; sized from the
                // lower-envelope speed with a wide safety factor.
                let c = crate::wavesolve::envelope_speed(&spec.envelope, spec.lipschitz_k)?;
                (0, 3.0 * (c + 1.0) * o.n_max as f64 * o.p, k as u64, o.p / k)
            }
        };
        let x_min = -((len + 10.0) / o.dx).ceil() * o.dx;
        let nodes = ((reach + 30.0 - x_min) / o.dx).ceil() as usize + 1;
        Ok(Self { spec, hump, x_min, dx: o.dx, dt, nodes, cell, steps_per_period })
    }

    fn zero_node_at(&self, x: f64) -> i64 {
        ((x - self.x_min) / self.dx).round() as i64
    }

    /// Hump with its zero at node `z`, evaluated at node `i`.
    #[inline]
    fn v(&self, z: i64, i: i64) -> f64 {
        let first = z - (self.hump.len() as i64 - 1);
        if i > z {
            0.0
        } else if i < first {
            self.hump[0]
        } else {
            self.hump[(i - first) as usize]
        }
    }

    fn dominates(&self, u: &[f64], z: i64) -> bool {
        let top = self.hump[0];
        let first = (z - (self.hump.len() as i64 - 1)).max(0) as usize;
        if u[..first.min(u.len())].iter().any(|&w| w < top) {
            return false;
        }
        (first as i64..=z.min(u.len() as i64 - 1)).all(|i| u[i as usize] >= self.v(z, i))
    }

    fn state(&self, z: i64, steps: u64) -> SimState {
        SimState {
            t: steps as f64 * self.dt,
            dt: self.dt,
            dx: self.dx,
            x_min: self.x_min,
            offset: 0,
            u: (0..self.nodes as i64).map(|i| self.v(z, i)).collect(),
            bc_left: 1.0,
            bc_right: 0.0,
            steps,
        }
    }

    /// `tau_{m,n}` for `n = m+1..=n_max`.
    fn passage_times(&self, m: usize, n_max: usize, p: f64, horizon: f64) -> Result<Vec<f64>> {
        let z0 = self.zero_node_at(m as f64 * p);
        let mut st = self.state(z0, 0);
        let mut stepper = Stepper::new(self.spec, &st)?;
        let mut out = Vec::with_capacity(n_max - m);
        let mut n = m + 1;
        let limit = (horizon / self.dt).ceil() as u64;
        while n <= n_max {
            let z = z0 + ((n - m) * self.cell) as i64;
            if self.dominates(&st.u, z) {
                out.push(st.steps as f64 * self.dt);
                n += 1;
                continue;
            }
            if st.steps >= limit {
                return Err(Error::NoPropagation(format!(
                    "tau_({m},{n}) undefined within horizon {horizon} (cell period {p})"
                )));
            }
            stepper.step(&mut st)?;
        }
        Ok(out)
    }

    /// Largest zero node `z` with `u >= v(. - x_z)`; binary search is valid
    /// because the hump is nonincreasing in `x`.
    fn displacement_node(&self, u: &[f64]) -> Option<i64> {
        let (mut lo, mut hi) = (0i64, self.nodes as i64 - 1);
        if !self.dominates(u, lo) {
            return None;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.dominates(u, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// `xi_{m,n}` for `n = m+1..=n_max`.
    fn displacements(&self, m: usize, n_max: usize) -> Result<Vec<f64>> {
        let z0 = self.zero_node_at(0.0);
        let mut st = self.state(z0, m as u64 * self.steps_per_period);
        let mut stepper = Stepper::new(self.spec, &st)?;
        let mut out = Vec::with_capacity(n_max - m);
        for n in m + 1..=n_max {
            while st.steps < n as u64 * self.steps_per_period {
                stepper.step(&mut st)?;
            }
            let z = self.displacement_node(&st.u).ok_or_else(|| {
                Error::NoPropagation(format!("xi_({m},{n}) undefined: hump no longer below u"))
            })?;
            if z >= self.nodes as i64 - 1 {
                return Err(Error::WindowCap { cap: self.nodes });
            }
            out.push((z - z0) as f64 * self.dx);
        }
        Ok(out)
    }
}

fn seed_run(spec: &ReactionSpec, seed: u64, o: &ErgodicOptions) -> Result<SeedRun> {
    let lab = Lab::new(spec, o)?;
    let seq = match o.axis {
        ErgodicAxis::Space => lab.passage_times(0, o.n_max, o.p, o.horizon)?,
        ErgodicAxis::Time => lab.displacements(0, o.n_max)?,
    };
    let last = *seq.last().ok_or_else(|| invalid("n_max", "must be at least 1"))?;
    let n = o.n_max as f64;
    let speed = match o.axis {
        ErgodicAxis::Space => o.p * n / last,
        ErgodicAxis::Time => last / (n * o.p),
    };
    let mut rep = VerdictReport::new("subadditivity");
    let mut margin = f64::INFINITY;
    let mut starts: Vec<usize> = o.pairs.iter().map(|&(m, _)| m).filter(|&m| m > 0).collect();
    starts.sort_unstable();
    starts.dedup();
    for m in starts {
        let from_m = match o.axis {
            ErgodicAxis::Space => lab.passage_times(m, o.n_max, o.p, o.horizon)?,
            ErgodicAxis::Time => lab.displacements(m, o.n_max)?,
        };
        for &(mm, nn) in o.pairs.iter().filter(|&&(mm, nn)| mm == m && nn > m && nn <= o.n_max) {
            let (a, b, c) = (seq[nn - 1], seq[mm - 1], from_m[nn - mm - 1]);
            // tau_{0,n} <= tau_{0,m} + tau_{m,n};  xi_{0,n} >= xi_{0,m} + xi_{m,n} - 2 dx.
            let gap = match o.axis {
                ErgodicAxis::Space => b + c - a + 1e-9,
                ErgodicAxis::Time => a - b - c + 2.0 * o.dx,
            };
            margin = margin.min(gap);
            if gap < 0.0 {
                rep.fail_at(nn as f64, gap, format!("pair ({mm}, {nn}): {a:.6} vs {b:.6} + {c:.6}"));
            } else {
                rep.witness(nn as f64, gap, format!("pair ({mm}, {nn})"));
            }
        }
    }
    rep.margin = if margin.is_finite() { margin } else { 0.0 };
    Ok(SeedRun { seed, sequence: seq, speed, subadditivity: rep.finish() })
}

/// First-passage (space) or displacement (time) speed estimates of the random
/// media `family(seed)`, one run per seed, seeds in parallel.
pub fn ergodic_speed<F>(family: F, seeds: &[u64], o: &ErgodicOptions) -> Result<ErgodicReport>
where
    F: Fn(u64) -> Result<ReactionSpec> + Sync,
{
    if o.n_max == 0 || seeds.is_empty() {
        return Err(invalid("n_max, seeds", "need n_max >= 1 and at least one seed"));
    }
    let runs: Vec<SeedRun> = seeds
        .par_iter()
        .map(|&seed| seed_run(&family(seed)?, seed, o))
        .collect::<Result<Vec<_>>>()?;
    let speeds: Vec<f64> = runs.iter().map(|r| r.speed).collect();
    let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
    let (lo, hi) = speeds.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    let spread = (hi - lo) / mean;
    let mut verdict = VerdictReport::new("ergodic_speed_spread");
    verdict.margin = o.spread_tol - spread;
    verdict.pass = verdict.margin >= 0.0 && runs.iter().all(|r| r.subadditivity.pass);
    for r in &runs {
        verdict.witness(r.seed as f64, r.speed, "seed speed");
    }
    Ok(ErgodicReport { axis: o.axis, p: o.p, n_max: o.n_max, runs, mean_speed: mean, spread, verdict: verdict.finish() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reaction::{make_cubic_bistable, make_random_ergodic, RandomLaw};
    use crate::wavesolve::{derive_constants, envelope_speed};

    fn eps0(spec: &ReactionSpec) -> f64 {
        let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).unwrap();
        derive_constants(&spec.envelope, c0).unwrap().epsilon0
    }

    #[test]
    fn homogeneous_passage_time_matches_inverse_speed() {
        let spec = make_cubic_bistable(0.25).unwrap();
        let mut o = ErgodicOptions::new(ErgodicAxis::Space, 1.0, 20, eps0(&spec));
        o.pairs = vec![(5, 10), (10, 20)];
        let rep = ergodic_speed(|_| make_cubic_bistable(0.25), &[0], &o).unwrap();
        let tau = rep.runs[0].sequence[19] / 20.0;
        let exact = 1.0 / (2f64.sqrt() * 0.25);
        assert!((tau - exact).abs() / exact < 0.05, "tau = {tau}");
        assert!(rep.runs[0].subadditivity.pass, "{:?}", rep.runs[0].subadditivity);
    }

    #[test]
    fn time_axis_recovers_homogeneous_speed() {
        let spec = make_cubic_bistable(0.25).unwrap();
        let mut o = ErgodicOptions::new(ErgodicAxis::Time, 4.0, 12, eps0(&spec));
        o.pairs = vec![(4, 12)];
        let rep = ergodic_speed(|_| make_cubic_bistable(0.25), &[0], &o).unwrap();
        // The hump needs time to become a wave; increments drop that fixed lag.
        let seq = &rep.runs[0].sequence;
        let c = (seq[11] - seq[3]) / (8.0 * 4.0);
        assert!((c - 0.25 * 2f64.sqrt()).abs() < 0.01, "c = {c}");
        assert!(rep.runs[0].speed < c, "finite-n speed carries the start-up lag");
        assert!(rep.runs[0].subadditivity.pass, "{:?}", rep.runs[0].subadditivity);
    }

    #[test]
    fn random_media_are_deterministic_per_seed() {
        let law = RandomLaw::default();
        let spec = make_random_ergodic(1.0, 3, law).unwrap();
        let mut o = ErgodicOptions::new(ErgodicAxis::Space, 1.0, 4, 0.05);
        o.pairs = vec![(2, 4)];
        o.epsilon0 = {
            let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).unwrap();
            crate::wavesolve::derive_constants_ignition(&spec.envelope, c0, None).unwrap().epsilon0
        };
        let a = ergodic_speed(|s| make_random_ergodic(1.0, s, law), &[3], &o).unwrap();
        let b = ergodic_speed(|s| make_random_ergodic(1.0, s, law), &[3], &o).unwrap();
        assert_eq!(a.runs[0].sequence, b.runs[0].sequence);
    }
}
