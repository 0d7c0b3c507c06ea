//! Scenario pipeline: reaction construction, derived constants, hypothesis
//! checks, simulation, diagnostics, artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use frontlab::diagnostics::*;
use frontlab::pdesim::*;
use frontlab::reaction::{make_cubic_bistable, Kind, ReactionSpec};
use frontlab::wavesolve::*;
use frontlab::VerdictReport;

use crate::config::{is_even_in_x, Built, Calibration, DiagKind, ReactionDesc, Scenario};
use crate::fmt::{g, opt, write_json, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Everything, including diagnostics and verdicts.json.
    Full,
    /// Simulation artifacts only: snapshots.csv, trace.csv, meta.json.
    SimulateOnly,
}

/// The verdicts file; the exit status is a function of it alone.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct VerdictsFile {
    pub scenario: String,
    pub pass: bool,
    pub verdicts: Vec<VerdictReport>,
}

impl VerdictsFile {
    pub fn new(scenario: &str, verdicts: Vec<VerdictReport>) -> Self {
        let pass = verdicts.iter().all(|v| v.pass);
        Self { scenario: scenario.into(), pass, verdicts }
    }

    /// 0 when every verdict passes, 1 otherwise.
    pub fn exit_status(&self) -> i32 {
        if self.verdicts.iter().all(|v| v.pass) {
            0
        } else {
            1
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `DerivedConstants` without the F0 table, for meta.json.
fn constants_json(k: &DerivedConstants) -> serde_json::Value {
    json!({
        "mode": k.mode, "theta0": k.theta0, "theta1": k.theta1, "epsilon0": k.epsilon0,
        "theta1_prime": k.theta1_prime, "theta1_dblprime": k.theta1_dblprime,
        "zeta": k.zeta, "xi": k.xi, "c0": k.c0, "c_zeta": k.c_zeta, "c_xi": k.c_xi,
        "sup_ratio": k.sup_ratio,
    })
}

/// Constants in hypothesis mode when it holds, otherwise the ignition route.
pub fn constants_for(spec: &ReactionSpec, c0: f64) -> frontlab::Result<DerivedConstants> {
    derive_constants(&spec.envelope, c0).or_else(|_| derive_constants_ignition(&spec.envelope, c0, None))
}

pub fn hypothesis_for(spec: &ReactionSpec) -> frontlab::Result<VerdictReport> {
    match spec.kind {
        Kind::TimeDependent => check_time_front_hypothesis(spec),
        _ => check_space_front_hypothesis(spec),
    }
}

struct Ctx<'a> {
    sc: &'a Scenario,
    spec: &'a ReactionSpec,
    calibration: Option<&'a Calibration>,
    c0: Option<f64>,
    constants: Option<&'a DerivedConstants>,
    traj: Option<&'a Trajectory>,
    trace: Option<&'a InterfaceTrace>,
    eps0: Option<f64>,
    out: &'a Path,
}

impl Ctx<'_> {
    fn traj(&self) -> Result<&Trajectory> {
        self.traj.ok_or_else(|| anyhow!("diagnostic needs a simulation"))
    }

    fn trace(&self) -> Result<&InterfaceTrace> {
        self.trace.ok_or_else(|| anyhow!("diagnostic needs a simulation"))
    }

    fn c0(&self) -> Result<f64> {
        self.c0.ok_or_else(|| anyhow!("front speed of the lower envelope is unavailable"))
    }

    fn constants(&self) -> Result<&DerivedConstants> {
        self.constants.ok_or_else(|| anyhow!("derived constants are unavailable for this reaction"))
    }

    fn t_final(&self) -> f64 {
        self.sc.run.t_final
    }

    fn fit_from(&self) -> f64 {
        self.sc.diagnostics.fit_from.unwrap_or(0.5 * self.t_final())
    }

    fn initial(&self) -> &InitialCondition {
        self.sc.initial.as_ref().expect("validated: simulating scenarios have [initial]")
    }
}

fn verdict(name: &str, margin: f64, coordinate: f64, value: f64, note: impl Into<String>) -> VerdictReport {
    VerdictReport::from_margin(name, margin, frontlab::Witness::new(coordinate, value, note)).finish()
}

/// Runs one diagnostic; may write side CSVs into the artifact directory.
fn diagnose(kind: DiagKind, cx: &Ctx<'_>) -> Result<Vec<VerdictReport>> {
    let sc = cx.sc;
    Ok(match kind {
        DiagKind::SpeedOracle => {
            let exact = sc.reaction.closed_form_speed().ok_or_else(|| anyhow!("speed_oracle needs a closed form"))?;
            let (c, prof) = front_speed(cx.spec, 1e-9)?;
            let tol = sc.threshold("speed_abs_tol");
            vec![verdict("speed_oracle", tol - (c - exact).abs(), exact, c, format!(
                "shooting speed vs closed form; residual_max {:.3e}",
                prof.residual_max
            ))]
        }
        DiagKind::HypothesisSpace | DiagKind::HypothesisTime => {
            let opts = HypothesisOptions { strict: sc.threshold("hypothesis_margin") };
            let rep = if kind == DiagKind::HypothesisSpace {
                check_space_front_hypothesis_with(cx.spec, opts)?
            } else {
                check_time_front_hypothesis_with(cx.spec, opts)?
            };
            vec![rep]
        }
        DiagKind::PdeSpeed => {
            let fit = cx.trace()?.speed(cx.fit_from(), cx.t_final())?;
            let reference = sc.reaction.closed_form_speed().map_or_else(|| cx.c0(), Ok)?;
            let rel = (fit.slope - reference).abs() / reference;
            vec![verdict("pde_speed", sc.threshold("speed_rel_tol") - rel, reference, fit.slope, format!(
                "fitted x_t slope vs reference speed, relative error {rel:.3e}"
            ))]
        }
        DiagKind::ShiftConvergence => shift_convergence(cx)?,
        DiagKind::WidthBound => {
            let k = cx.constants()?;
            let tr = cx.trace()?;
            let mut out = Vec::new();
            let mut csv = Csv::create(&cx.out.join("width_bound.csv"), &["eps", "c_recorded", "t_eps", "bound", "sup_width"])?;
            for &e in &tr.eps {
                let (wb, rep) = width_bound(tr, k.c_xi, e)?;
                csv.row(&[g(wb.eps), g(wb.c_recorded), g(wb.t_eps), g(wb.bound), g(wb.sup_width)])?;
                out.push(rep);
            }
            csv.finish()?;
            out
        }
        DiagKind::YMinusX => vec![y_minus_x_bounded(cx.trace()?, sc.threshold("y_minus_x_tol"))],
        DiagKind::SparkComposite => spark_composite(cx)?,
        DiagKind::CalibrationItems => {
            cx.calibration.ok_or_else(|| anyhow!("calibration_items needs a calibrated reaction"))?.verdicts().to_vec()
        }
        DiagKind::WidthGrowth => {
            let Some(Calibration::Spatial(cal)) = cx.calibration else {
                bail!("width_growth needs a calibrated spatial_counterexample reaction");
            };
            let eps0 = cx.eps0.ok_or_else(|| anyhow!("no eps0"))?;
            let fit = width_growth_fit(cx.trace()?, eps0)?;
            let need = sc.threshold("growth_factor") * cal.minorant_rate;
            vec![verdict("width_growth", fit.slope - need, need, fit.slope, format!(
                "width_eps0 slope over the second half vs {} x minorant rate",
                sc.threshold("growth_factor")
            ))]
        }
        DiagKind::ControlGrowth => {
            let ReactionDesc::SpatialCounterexample { base_a, .. } = sc.reaction else {
                bail!("control_growth needs a spatial_counterexample reaction");
            };
            let base = make_cubic_bistable(base_a)?;
            let c0 = envelope_speed(&base.envelope, base.lipschitz_k)?;
            let eps0 = cx.eps0.ok_or_else(|| anyhow!("no eps0"))?;
            let cfg = sc.sim_config(cx.initial().clone(), cx.t_final(), sc.run.snapshot_stride, base.lipschitz_k);
            let traj = simulate(&cfg, &base).context("pdesim: control run")?;
            let theta0 = base.envelope.theta0;
            let tr = trace_interfaces_with(&traj.snapshots, &TraceOptions::descriptive(theta0, c0, vec![eps0]));
            let fit = width_growth_fit(&tr, eps0)?;
            let limit = sc.threshold("control_slope_factor") * c0;
            vec![verdict("control_growth", limit - fit.slope.abs(), limit, fit.slope, "compliant control width slope")]
        }
        DiagKind::BlockGain => block_gain(cx)?,
        DiagKind::Ignition => {
            let c0 = cx.c0()?;
            let zeta = 0.125 * c0 * c0;
            let eta = best_eta(cx.spec, zeta, IgnitionCheckOptions::default())?;
            let mut rep = check_ignition_hypothesis(cx.spec, zeta, eta)?;
            let floor = sc.threshold("eta_min");
            if eta < floor {
                rep.fail_at(0.0, eta, format!("best eta below {floor:e}"));
            }
            rep.name = "ignition_hypothesis".into();
            rep.margin = eta - floor;
            vec![rep.finish()]
        }
        DiagKind::IgnitionViolation => {
            let c0 = cx.c0()?;
            let zeta = 0.125 * c0 * c0;
            let eta = sc.diagnostics.eta;
            let rep = check_ignition_hypothesis(cx.spec, zeta, eta)?;
            let detected = !rep.pass && !rep.witnesses.is_empty();
            vec![VerdictReport {
                name: "ignition_violation_detected".into(),
                pass: detected,
                margin: -rep.margin,
                witnesses: rep.witnesses,
            }
            .finish()]
        }
        DiagKind::Pulsating => {
            let p = cx.spec.period.ok_or_else(|| anyhow!("pulsating needs a periodic reaction"))?;
            let c = cx.trace()?.speed(cx.fit_from(), cx.t_final())?.slope;
            let form = if cx.spec.kind == Kind::TimeDependent { PulsatingForm::Time } else { PulsatingForm::Space };
            let t_from = sc.diagnostics.t_from.unwrap_or(2.0 * cx.t_final() / 3.0);
            vec![pulsating_check(&cx.traj()?.snapshots, p, c, form, t_from, sc.threshold("pulsating_tol"))?]
        }
        DiagKind::Ergodic => ergodic(cx)?,
        DiagKind::Bounds => {
            let s = &cx.traj()?.stats;
            let tol = sc.threshold("bound_tol");
            let margin = (s.min_u + tol).min(1.0 + tol - s.max_u);
            vec![verdict("bounds", margin, s.steps as f64, s.min_u, format!("range [{}, {}]", g(s.min_u), g(s.max_u)))]
        }
        DiagKind::UtMonotone => {
            let min_ut = cx.traj()?.stats.min_ut.ok_or_else(|| anyhow!("u_t was not tracked"))?;
            vec![verdict("ut_monotone", min_ut + sc.threshold("ut_tol"), 0.0, min_ut, "min discrete u_t")]
        }
        DiagKind::Comparison => comparison(cx)?,
    })
}

fn shift_convergence(cx: &Ctx<'_>) -> Result<Vec<VerdictReport>> {
    let sc = cx.sc;
    let sd = sc.diagnostics.shift.as_ref().expect("validated");
    let stride = sd.stride.unwrap_or(sc.run.snapshot_stride);
    let cfg = sc.sim_config(sd.initial.clone(), cx.t_final() + sd.t_extra, stride, cx.spec.lipschitz_k);
    let second = simulate(&cfg, cx.spec).context("pdesim: second front run")?;
    let first = &cx.traj()?.snapshots;
    let mut csv = Csv::create(&cx.out.join("shift.csv"), &["t", "tau", "sup_norm"])?;
    let mut last = None;
    let mut next = sd.every;
    for s in first {
        if s.t + 1e-9 < next {
            continue;
        }
        next += sd.every;
        let Some(partner) = second.snapshots.iter().find(|q| (q.t - s.t).abs() < 1e-9) else { continue };
        let mode = ShiftMode::Time { trajectory: &second.snapshots, max_shift: sd.t_extra };
        let fit = shift_distance(s, partner, mode);
        csv.row(&[g(s.t), g(fit.shift), g(fit.sup_norm)])?;
        last = Some((s.t, fit));
    }
    csv.finish()?;
    let (t, fit) = last.ok_or_else(|| anyhow!("no common snapshot times for the shift curve"))?;
    Ok(vec![verdict("shift_convergence", sc.threshold("shift_sup_tol") - fit.sup_norm, t, fit.sup_norm, format!(
        "sup-norm after optimal time shift tau = {}",
        g(fit.shift)
    ))])
}

fn spark_composite(cx: &Ctx<'_>) -> Result<Vec<VerdictReport>> {
    let sc = cx.sc;
    let InitialCondition::SparkLike { mu, beta, .. } = *cx.initial() else {
        bail!("spark_composite needs spark_like initial data");
    };
    if !is_even_in_x(cx.spec) {
        bail!("spark_composite mirrors the right-moving run and needs a reaction even in x");
    }
    let cd = &sc.diagnostics.composite;
    let (lo, hi) = (sc.grid.x_min, sc.grid.x_max);
    let t_end = cx.t_final() + cd.max_shift;
    let k = cx.spec.lipschitz_k;
    let mut right = sc.sim_config(InitialCondition::FrontLike { a: 0.0, y: 0.0, mu, beta }, t_end, cd.stride, k);
    right.x_min = 2.0 * lo;
    right.x_max = hi;
    right.bc = None;
    let right = simulate(&right, cx.spec).context("pdesim: right front run")?;
    // Left-moving front as the mirror image data of the right-moving one.
    let n = ((hi - lo) / sc.grid.dx).round() as usize;
    let x: Vec<f64> = (0..=n).map(|j| lo + sc.grid.dx * j as f64).collect();
    let u: Vec<f64> = x.iter().map(|&x| beta.min((mu * x).exp())).collect();
    let mut left = sc.sim_config(InitialCondition::Custom { x, u }, t_end, cd.stride, k);
    left.x_min = lo;
    left.x_max = 2.0 * hi;
    left.bc = Some((0.0, 1.0));
    let left = simulate(&left, cx.spec).context("pdesim: left front run")?;
    let u = cx.traj()?.snapshots.last().expect("at least the initial snapshot");
    let fit = composite_distance(u, &right.snapshots, &left.snapshots, 0.5 * (lo + hi), cd.max_shift);
    Ok(vec![verdict("spark_composite", sc.threshold("composite_sup_tol") - fit.sup_norm, u.t, fit.sup_norm, format!(
        "tau = {}, tau~ = {}",
        g(fit.tau_right),
        g(fit.tau_left)
    ))])
}

fn block_gain(cx: &Ctx<'_>) -> Result<Vec<VerdictReport>> {
    let Some(Calibration::Temporal(cal)) = cx.calibration else {
        bail!("block_gain needs a calibrated temporal_counterexample reaction");
    };
    let tr = cx.trace()?;
    let eps0 = cx.eps0.ok_or_else(|| anyhow!("no eps0"))?;
    let i = tr.eps_index(eps0).ok_or_else(|| anyhow!("eps0 missing from the trace"))?;
    let period = cx.spec.period.unwrap_or(4.0);
    let blocks: Vec<(f64, Option<f64>)> = tr
        .times
        .iter()
        .zip(&tr.width[i])
        .filter(|(t, _)| ((*t / period) - (*t / period).round()).abs() < 1e-9)
        .map(|(t, w)| (*t, *w))
        .collect();
    let mut csv = Csv::create(&cx.out.join("block_gain.csv"), &["t", "width", "gain"])?;
    let mut min_gain = f64::INFINITY;
    let mut at = 0.0;
    for (j, (t, w)) in blocks.iter().enumerate() {
        let gain = j.checked_sub(1).and_then(|p| Some(w.as_ref()? - blocks[p].1?));
        let gain_val = gain.unwrap_or(f64::NEG_INFINITY);
        if j > 0 && gain_val < min_gain {
            min_gain = gain_val;
            at = *t;
        }
        csv.row(&[g(*t), opt(*w), opt(gain)])?;
    }
    csv.finish()?;
    let need = cx.sc.threshold("block_gain_factor") * cal.m;
    if blocks.len() < 2 {
        bail!("block_gain needs at least two period checkpoints");
    }
    Ok(vec![verdict("block_gain", min_gain - need, at, min_gain, format!(
        "smallest width gain per period block over {} blocks vs {}",
        blocks.len() - 1,
        g(need)
    ))])
}

fn ergodic(cx: &Ctx<'_>) -> Result<Vec<VerdictReport>> {
    let sc = cx.sc;
    let ReactionDesc::RandomErgodic { p, lo, hi, theta_tilde, amplitude, .. } = sc.reaction else {
        bail!("ergodic needs a random_ergodic reaction");
    };
    let law = frontlab::reaction::RandomLaw { lo, hi, theta_tilde, amplitude };
    let c0 = cx.c0()?;
    let eps0 = match cx.eps0 {
        Some(e) => e,
        None => derive_constants_ignition(&cx.spec.envelope, c0, None)?.epsilon0,
    };
    let mut o = ErgodicOptions::new(ErgodicAxis::Space, p, sc.diagnostics.n, eps0);
    o.dx = sc.grid.dx;
    o.spread_tol = sc.threshold("spread_tol");
    let rep = ergodic_speed(|s| frontlab::reaction::make_random_ergodic(p, s, law), &sc.run.seeds, &o)?;
    let mut csv = Csv::create(&cx.out.join("ergodic.csv"), &["seed", "speed", "tau_n", "subadditive"])?;
    for r in &rep.runs {
        let last = r.sequence.last().copied();
        csv.row(&[r.seed.to_string(), g(r.speed), opt(last), r.subadditivity.pass.to_string()])?;
    }
    csv.finish()?;
    let mut out = vec![rep.verdict.clone()];
    out.extend(rep.runs.iter().map(|r| {
        let mut v = r.subadditivity.clone();
        v.name = format!("subadditivity_seed_{}", r.seed);
        v
    }));
    Ok(out)
}

/// Ordered random pairs stepped side by side must stay ordered.
fn comparison(cx: &Ctx<'_>) -> Result<Vec<VerdictReport>> {
    let tol = cx.sc.threshold("comparison_tol");
    let mut rng = ChaCha8Rng::seed_from_u64(cx.sc.run.seeds[0]);
    let dx = cx.sc.grid.dx;
    let dt = 0.5 / cx.spec.lipschitz_k;
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0usize;
    for _ in 0..100 {
        let n = 201;
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|&v| (v + rng.gen_range(0.0..0.3)).min(1.0)).collect();
        let mk = |u| SimState { t: 0.0, dt, dx, x_min: -5.0, offset: 0, u, bc_left: 0.0, bc_right: 0.0, steps: 0 };
        let (mut a, mut b) = (mk(lo), mk(hi));
        let mut sa = Stepper::new(cx.spec, &a)?;
        let mut sb = Stepper::new(cx.spec, &b)?;
        for _ in 0..50 {
            sa.step(&mut a)?;
            sb.step(&mut b)?;
            for (x, y) in a.u.iter().zip(&b.u) {
                worst = worst.max(x - y);
                violations += (x - y > tol) as usize;
            }
        }
    }
    Ok(vec![verdict("comparison", tol - worst, violations as f64, worst, "largest u_lo - u_hi over 100 pairs x 50 steps")])
}

/// Outcome of a pipeline run.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub verdicts: Option<VerdictsFile>,
}

pub fn write_snapshots(path: &Path, snaps: &[Snapshot], every: usize) -> Result<()> {
    let mut csv = Csv::create(path, &["t", "x", "u"])?;
    for s in snaps.iter().step_by(every.max(1)) {
        let t = g(s.t);
        for (j, u) in s.u.iter().enumerate() {
            csv.row(&[t.clone(), g(s.x(j)), g(*u)])?;
        }
    }
    csv.finish()
}

pub fn write_trace(path: &Path, tr: &InterfaceTrace) -> Result<()> {
    let mut csv = Csv::create(path, &["t", "eps", "x_t", "X", "Y", "Zminus", "Zplus", "width"])?;
    for (i, t) in tr.times.iter().enumerate() {
        for (e, eps) in tr.eps.iter().enumerate() {
            csv.row(&[
                g(*t),
                g(*eps),
                opt(tr.x_half[i]),
                opt(tr.x_big[i]),
                opt(tr.y[i]),
                opt(tr.z_minus[e][i]),
                opt(tr.z_plus[e][i]),
                opt(tr.width[e][i]),
            ])?;
        }
    }
    csv.finish()
}

pub fn trace_options<'a>(
    spec: &ReactionSpec,
    constants: Option<&DerivedConstants>,
    c0: Option<f64>,
    eps: Vec<f64>,
    calibrated: bool,
) -> TraceOptions<'a> {
    match constants {
        Some(k) if !calibrated => TraceOptions::from_constants(k, eps),
        _ => TraceOptions::descriptive(spec.envelope.theta0, c0.unwrap_or(1.0).max(1e-3), eps),
    }
}

/// Runs the scenario and writes its artifacts into `out`.
pub fn run_scenario(sc: &Scenario, out: &Path, mode: Mode) -> Result<RunOutcome> {
    let wall = Instant::now();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut timings = serde_json::Map::new();
    let mut stage = |name: &str, since: Instant| {
        timings.insert(name.into(), json!(since.elapsed().as_secs_f64()));
    };

    let clock = Instant::now();
    let Built { spec, calibration } = sc.reaction.build(sc.grid.dx).context("reaction")?;
    stage("reaction", clock);
    if let Some(cal) = &calibration {
        write_json(&out.join("calibration.json"), cal)?;
    }

    let clock = Instant::now();
    let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).ok();
    let constants = c0.and_then(|c| constants_for(&spec, c).ok());
    let hypothesis = hypothesis_for(&spec).ok();
    stage("constants", clock);

    let eps0 = sc.diagnostics.epsilon0.or(match &calibration {
        Some(Calibration::Spatial(c)) => Some(c.epsilon0),
        // The period-4 terrace is tracked at eps0 = 1/4.
        Some(Calibration::Temporal(_)) => Some(0.25),
        None => constants.as_ref().map(|k| k.epsilon0),
    });
    let eps = sc.diagnostics.eps.clone().unwrap_or_else(|| match (&calibration, eps0) {
        (Some(_), Some(e)) => vec![e],
        (None, Some(e)) => default_eps_list(e),
        (_, None) => vec![0.1, 0.01],
    });

    let clock = Instant::now();
    let (traj, trace) = if sc.run.simulate {
        let initial = sc.initial.clone().expect("validated");
        let cfg = sc.sim_config(initial, sc.run.t_final, sc.run.snapshot_stride, spec.lipschitz_k);
        let traj = simulate(&cfg, &spec).context("pdesim")?;
        let opts = trace_options(&spec, constants.as_ref(), c0, eps, calibration.is_some());
        let trace = trace_interfaces_with(&traj.snapshots, &opts);
        write_snapshots(&out.join("snapshots.csv"), &traj.snapshots, sc.run.csv_every)?;
        write_trace(&out.join("trace.csv"), &trace)?;
        (Some(traj), Some(trace))
    } else {
        (None, None)
    };
    stage("simulation", clock);

    let verdicts = if mode == Mode::Full {
        let clock = Instant::now();
        let cx = Ctx {
            sc,
            spec: &spec,
            calibration: calibration.as_ref(),
            c0,
            constants: constants.as_ref(),
            traj: traj.as_ref(),
            trace: trace.as_ref(),
            eps0,
            out,
        };
        let mut all = Vec::new();
        for &kind in &sc.diagnostics.list {
            let reps = diagnose(kind, &cx).with_context(|| format!("diagnostics: {}", kind_name(kind)))?;
            all.extend(reps);
        }
        stage("diagnostics", clock);
        let file = VerdictsFile::new(&sc.name, all);
        write_json(&out.join("verdicts.json"), &file)?;
        Some(file)
    } else {
        None
    };

    let meta = json!({
        "scenario": sc.name,
        "claim": sc.claim,
        "frontlab_version": env!("CARGO_PKG_VERSION"),
        "reaction": {
            "constructor": sc.reaction.constructor(),
            "name": spec.name,
            "params": spec.params,
            "kind": spec.kind,
            "taxonomy": spec.taxonomy.to_string(),
            "lipschitz_k": spec.lipschitz_k,
            "period": spec.period,
        },
        "seeds": seeds_of(sc),
        "c0": c0,
        "constants": constants.as_ref().map(constants_json),
        "hypothesis": hypothesis,
        "calibrated": calibration.is_some(),
        "run_stats": traj.as_ref().map(|t| &t.stats),
        "dt": traj.as_ref().map(|t| t.final_state.dt),
        "verdicts": verdicts.as_ref().map(|v| v.verdicts.iter().map(|r| r.line()).collect::<Vec<_>>()),
        "timings_seconds": timings,
        "wall_seconds": wall.elapsed().as_secs_f64(),
    });
    write_json(&out.join("meta.json"), &meta)?;
    Ok(RunOutcome { dir: out.to_path_buf(), verdicts })
}

fn seeds_of(sc: &Scenario) -> Vec<u64> {
    let mut seeds = sc.run.seeds.clone();
    if let ReactionDesc::RandomErgodic { seed, .. } = sc.reaction {
        seeds.insert(0, seed);
    }
    seeds
}

pub fn kind_name(kind: DiagKind) -> String {
    serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}
