//! Acceptance criteria 1-10. One sequential test so that the runtime budgets
//! are measured without contention; each criterion prints one PASS/FAIL line
//! straight to stdout (bypassing the test harness capture).
//!
//! `FRONTLAB_CRITERIA=2,5` restricts the run to the listed criteria.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use frontlab::diagnostics::*;
use frontlab::pdesim::*;
use frontlab::reaction::*;
use frontlab::wavesolve::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn selected(n: usize) -> bool {
    match std::env::var("FRONTLAB_CRITERIA") {
        Ok(list) => list.split(',').any(|s| s.trim().parse() == Ok(n)),
        Err(_) => true,
    }
}

fn c0_of(spec: &ReactionSpec) -> f64 {
    envelope_speed(&spec.envelope, spec.lipschitz_k).unwrap()
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    let mut notes = Vec::new();
    for a in [0.1, 0.25, 0.4] {
        let spec = make_cubic_bistable(a).unwrap();
        let clock = Instant::now();
        let (c, _) = front_speed(&spec, 1e-9).unwrap();
        slowest = slowest.max(clock.elapsed());
        // Oracle route: W(s) = 1/(1 + e^{s/sqrt 2}) with c = sqrt2 (1/2 - a)
        // must make W'' + c W' + f(W) vanish; check that before trusting it.
        let exact = 2f64.sqrt() * (0.5 - a);
        let w = |s: f64| 1.0 / (1.0 + (s / 2f64.sqrt()).exp());
        let h = 1e-4;
        let residual = (-200..=200)
            .map(|i| {
                let s = 0.05 * i as f64;
                let d2 = (w(s + h) - 2.0 * w(s) + w(s - h)) / (h * h);
                let d1 = (w(s + h) - w(s - h)) / (2.0 * h);
                let u = w(s);
                (d2 + exact * d1 + u * (1.0 - u) * (u - a)).abs()
            })
            .fold(0.0, f64::max);
        assert!(residual < 1e-6, "closed-form oracle residual {residual}");
        worst = worst.max((c - exact).abs());
        notes.push(format!("a={a}: c={c:.9}"));
    }
    outcome(
        worst <= 1e-6 && slowest < Duration::from_secs(1),
        format!("max |dc| = {worst:.2e}, slowest {:.3}s; {}", slowest.as_secs_f64(), notes.join(", ")),
    )
}

fn pde_speed(dx: f64) -> f64 {
    let spec = make_cubic_bistable(0.25).unwrap();
    let mut cfg = SimConfig::new(-40.0, 40.0, 80.0, InitialCondition::FrontLike { a: 0.0, y: 0.0, mu: 1.0, beta: 1.0 });
    cfg.dx = dx;
    cfg.snapshot_stride = 0.5;
    cfg.window = WindowPolicy::FollowLevelSet { level: 0.5 };
    let traj = simulate(&cfg, &spec).unwrap();
    let opts = TraceOptions::descriptive(0.25, 0.35, vec![0.1]);
    let tr = trace_interfaces_with(&traj.snapshots, &opts);
    tr.speed(30.0, 80.0).unwrap().slope
}

fn criterion_2() -> Outcome {
    let clock = Instant::now();
    let c0 = 2f64.sqrt() * 0.25;
    let e1 = (pde_speed(0.05) - c0).abs() / c0;
    let e2 = (pde_speed(0.025) - c0).abs() / c0;
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        e1 < 0.02 && e2 < 0.005 && secs < 60.0,
        format!("rel err dx=0.05: {:.3}%, dx=0.025: {:.3}%, {secs:.1}s", 100.0 * e1, 100.0 * e2),
    )
}

fn compliant_periodic() -> ReactionSpec {
    make_periodic_cubic(0.18, 0.2, 1.0).unwrap()
}

fn front_run(spec: &ReactionSpec, mu: f64, a: f64, t_final: f64, stride: f64) -> Trajectory {
    let mut cfg = SimConfig::new(-60.0, 60.0, t_final, InitialCondition::FrontLike { a, y: 0.0, mu, beta: 0.9 });
    cfg.snapshot_stride = stride;
    cfg.window = WindowPolicy::FollowLevelSet { level: 0.5 };
    simulate(&cfg, spec).unwrap()
}

fn criterion_3() -> Outcome {
    let clock = Instant::now();
    let spec = compliant_periodic();
    let hyp = check_space_front_hypothesis(&spec).unwrap();
    let c0 = c0_of(&spec);
    let k = derive_constants(&spec.envelope, c0).unwrap();
    let u1 = front_run(&spec, 1.0, 5.0, 200.0, 0.5);
    let u2 = front_run(&spec, 2.0, 0.0, 240.0, 0.25);
    let last = u1.snapshots.last().unwrap();
    let at = u2.snapshots.iter().position(|s| (s.t - 200.0).abs() < 1e-9).unwrap();
    let fit = shift_distance(last, &u2.snapshots[at], ShiftMode::Time { trajectory: &u2.snapshots, max_shift: 40.0 });
    let eps = default_eps_list(k.epsilon0);
    let tr = trace_interfaces(&u1.snapshots, &k, &eps);
    let mut bounds = Vec::new();
    let mut bounds_ok = true;
    for &e in &eps {
        let (wb, rep) = width_bound(&tr, k.c_xi, e).unwrap();
        bounds_ok &= rep.pass;
        bounds.push(format!("eps={e:.3}: {:.2} <= {:.2}", wb.sup_width, wb.bound));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        hyp.pass && hyp.margin > 0.0 && fit.sup_norm < 1e-2 && bounds_ok && secs < 300.0,
        format!(
            "hypothesis margin {:.3e}, shift tau = {:.4}, sup-norm {:.2e}; widths {}; {secs:.1}s",
            hyp.margin,
            fit.shift,
            fit.sup_norm,
            bounds.join(", ")
        ),
    )
}

fn criterion_4() -> Outcome {
    let clock = Instant::now();
    let spec = compliant_periodic();
    let grow = WindowPolicy::Growable { margin: 15.0, tol: 1e-10, cap: 1 << 20 };
    let mut cfg = SimConfig::new(-20.0, 20.0, 200.0, InitialCondition::SparkLike { a: 0.0, l: 5.0, y: 0.0, mu: 1.0, beta: 0.9 });
    cfg.snapshot_stride = 200.0;
    cfg.window = grow.clone();
    let spark = simulate(&cfg, &spec).unwrap();
    let mut cfg = SimConfig::new(-40.0, 20.0, 240.0, InitialCondition::FrontLike { a: 0.0, y: 0.0, mu: 1.0, beta: 0.9 });
    cfg.snapshot_stride = 0.25;
    cfg.window = grow.clone();
    let right = simulate(&cfg, &spec).unwrap();
    // Mirror image: the reaction is even in x, so the left-moving run is the
    // reflection of a right-moving one started from the reflected data.
    let x: Vec<f64> = (0..=1200).map(|j| -20.0 + 0.05 * j as f64).collect();
    let u: Vec<f64> = x.iter().map(|&x| 0.9f64.min((x).exp())).collect();
    let mut cfg = SimConfig::new(-20.0, 40.0, 240.0, InitialCondition::Custom { x, u });
    cfg.snapshot_stride = 0.25;
    cfg.window = grow;
    cfg.bc = Some((0.0, 1.0));
    let left = simulate(&cfg, &spec).unwrap();
    let u = spark.snapshots.last().unwrap();
    let fit = composite_distance(u, &right.snapshots, &left.snapshots, 0.0, 40.0);
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        fit.sup_norm < 1e-2,
        format!(
            "tau = {:.4}, tau~ = {:.4}, sup-norm {:.2e}; {secs:.1}s",
            fit.tau_right, fit.tau_left, fit.sup_norm
        ),
    )
}

fn criterion_5() -> Outcome {
    let clock = Instant::now();
    let base = make_cubic_bistable(0.25).unwrap();
    let (cal, spec) =
        calibrate_spatial_counterexample(base.envelope.f0.clone(), 0.25, &SpatialCalibrationOptions::default()).unwrap();
    let c0 = c0_of(&base);
    let run = |spec: &ReactionSpec| {
        let mut cfg = SimConfig::new(-20.0, 40.0, 60.0, InitialCondition::FrontLike {
            a: 0.0,
            y: 0.0,
            mu: 2.0 * cal.kappa.sqrt(),
            beta: 1.0,
        });
        cfg.snapshot_stride = 0.5;
        cfg.window = WindowPolicy::Growable { margin: 20.0, tol: 1e-10, cap: 1 << 22 };
        let traj = simulate(&cfg, spec).unwrap();
        let opts = TraceOptions::descriptive(cal.theta0, c0, vec![cal.epsilon0]);
        width_growth_fit(&trace_interfaces_with(&traj.snapshots, &opts), cal.epsilon0).unwrap()
    };
    let terrace = run(&spec);
    let control = run(&base);
    let sup = cal.verdicts.iter().find(|v| v.name == "supersolution_w").unwrap();
    let need = 0.5 * cal.minorant_rate;
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        terrace.slope >= need && sup.pass && control.slope.abs() < 0.01 * c0 && cal.pass() && secs < 600.0,
        format!(
            "M = {:.3}, delta = {:.3}, K = {}, slope {:.3} >= {need:.3}; supersolution margin {:.2e}; control slope {:.2e} (limit {:.2e}); {secs:.1}s",
            cal.period,
            cal.delta,
            cal.k,
            terrace.slope,
            sup.margin,
            control.slope,
            0.01 * c0
        ),
    )
}

const TERRACE_BLOCKS: usize = 50;

fn criterion_6() -> Outcome {
    let clock = Instant::now();
    let o = TemporalCalibrationOptions { reaction_cfl: 1.0, ..Default::default() };
    let cal = calibrate_temporal_counterexample(&o).unwrap();
    let spec = make_temporal_counterexample(cal.delta, cal.k).unwrap();
    let mut cfg = SimConfig::new(-20.0, 40.0, 4.0 * TERRACE_BLOCKS as f64, InitialCondition::FrontLike {
        a: 0.0,
        y: 0.0,
        mu: 1.0,
        beta: 1.0,
    });
    cfg.dx = o.dx;
    cfg.snapshot_stride = 4.0;
    // Same dt K as the calibration runs; dt divides the period.
    cfg.dt = Some(4.0 / (4.0 * spec.lipschitz_k / o.reaction_cfl).ceil());
    cfg.window = WindowPolicy::Growable { margin: 20.0, tol: 1e-10, cap: 1 << 22 };
    let traj = simulate(&cfg, &spec).unwrap();
    let eps0 = 0.25;
    let opts = TraceOptions::descriptive(0.5, c0_of(&spec).max(1e-3), vec![eps0]);
    let tr = trace_interfaces_with(&traj.snapshots, &opts);
    let widths: Vec<f64> = tr.width[0].iter().map(|w| w.unwrap_or(f64::NAN)).collect();
    let gains: Vec<f64> = widths.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gain = gains.iter().copied().fold(f64::INFINITY, f64::min);
    let items_ok = cal.verdicts.iter().all(|v| v.pass);
    let secs = clock.elapsed().as_secs_f64();
    let items: Vec<String> = cal.verdicts.iter().map(|v| format!("{} {:.2e}", v.name, v.margin)).collect();
    outcome(
        gains.len() == TERRACE_BLOCKS && min_gain >= 0.5 * cal.m && items_ok && secs < 600.0,
        format!(
            "M = {:.3}, a = {:.3e}, K = {}, blocks {}, min gain {:.2} >= {:.2}; items [{}]; {secs:.1}s",
            cal.m,
            cal.a,
            cal.k,
            gains.len(),
            min_gain,
            0.5 * cal.m,
            items.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let good = make_ignition(0.3, IgnitionShape::default()).unwrap();
    let c0 = c0_of(&good);
    let zeta = 0.125 * c0 * c0;
    let eta = best_eta(&good, zeta, IgnitionCheckOptions::default()).unwrap();
    let ok = check_ignition_hypothesis(&good, zeta, eta).unwrap();
    let bad = make_ignition_violator(0.1, 0.2, 0.3, 80.0, 60.0, 10.0).unwrap();
    let c0b = c0_of(&bad);
    let zb = 0.125 * c0b * c0b;
    // A periodic violator only fails for eta above ~2/plateau: smaller eta
    // widens the sup window past the plateau.
    let rep = check_ignition_hypothesis(&bad, zb, 0.05).unwrap();
    let bad_eta = best_eta(&bad, zb, IgnitionCheckOptions::default()).unwrap();
    let w = rep.witnesses.first().map(|w| format!("({:.3}, {:.3})", w.coordinate, w.value)).unwrap_or_default();
    outcome(
        eta > 0.0 && ok.pass && !rep.pass && !rep.witnesses.is_empty() && bad_eta < 0.05,
        format!(
            "pure ignition passes with eta = {eta:.3e}; violator fails at eta = 0.05 with witness (z, u) = {w}, best eta {bad_eta:.3e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let clock = Instant::now();
    let p = 2.0;
    let spec = make_periodic_ignition(0.2, 0.3, p, 1.0).unwrap();
    let mut cfg = SimConfig::new(-50.0, 50.0, 300.0, InitialCondition::FrontLike { a: 0.0, y: 0.0, mu: 1.0, beta: 1.0 });
    cfg.snapshot_stride = 0.1;
    cfg.window = WindowPolicy::FollowLevelSet { level: 0.5 };
    let traj = simulate(&cfg, &spec).unwrap();
    let opts = TraceOptions::descriptive(0.3, 0.3, vec![0.1]);
    let tr = trace_interfaces_with(&traj.snapshots, &opts);
    let c = tr.speed(100.0, 300.0).unwrap().slope;
    let rep = pulsating_check(&traj.snapshots, p, c, PulsatingForm::Space, 200.0, 1e-2).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    outcome(rep.pass, format!("c = {c:.5}, sup defect {:.2e}; {secs:.1}s", 1e-2 - rep.margin))
}

fn criterion_9() -> Outcome {
    let clock = Instant::now();
    let law = RandomLaw::default();
    let probe = make_random_ergodic(1.0, 0, law).unwrap();
    let c0 = c0_of(&probe);
    let k = derive_constants_ignition(&probe.envelope, c0, None).unwrap();
    let o = ErgodicOptions::new(ErgodicAxis::Space, 1.0, 20, k.epsilon0);
    let rep = ergodic_speed(|s| make_random_ergodic(1.0, s, law), &[1, 2, 3, 4, 5], &o).unwrap();
    let sub = rep.runs.iter().all(|r| r.subadditivity.pass);
    let speeds: Vec<String> = rep.runs.iter().map(|r| format!("{:.4}", r.speed)).collect();
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        rep.spread < 0.05 && sub && secs < 600.0,
        format!(
            "speeds [{}], spread {:.2}%, subadditivity {}; {secs:.1}s",
            speeds.join(", "),
            100.0 * rep.spread,
            if sub { "ok" } else { "violated" }
        ),
    )
}

fn criterion_10() -> Outcome {
    let clock = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    // Discrete comparison principle on random ordered pairs.
    let spec = make_periodic_cubic(0.1, 0.4, 3.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut violations = 0usize;
    for _ in 0..100 {
        let n = 201;
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|&v| (v + rng.gen_range(0.0..0.3)).min(1.0)).collect();
        let mk = |u: Vec<f64>| SimState { t: 0.0, dt: 1e-3, dx: 0.05, x_min: -5.0, offset: 0, u, bc_left: 0.0, bc_right: 0.0, steps: 0 };
        let (mut a, mut b) = (mk(lo), mk(hi));
        let mut sa = Stepper::new(&spec, &a).unwrap();
        let mut sb = Stepper::new(&spec, &b).unwrap();
        for _ in 0..50 {
            sa.step(&mut a).unwrap();
            sb.step(&mut b).unwrap();
            violations += a.u.iter().zip(&b.u).filter(|(x, y)| **x > **y + 1e-12).count();
        }
    }
    ok &= violations == 0;
    notes.push(format!("comparison violations {violations}"));

    // [0, 1] preserved over 1e6 steps.
    let cubic = make_cubic_bistable(0.25).unwrap();
    let mut cfg = SimConfig::new(-5.0, 5.0, 1e6 * 1e-3, InitialCondition::SparkLike { a: 0.0, l: 1.0, y: 0.0, mu: 2.0, beta: 1.0 });
    cfg.dx = 0.05;
    cfg.dt = Some(1e-3);
    cfg.snapshot_stride = 0.0;
    // Only the range matters here; the solution may press on the edges.
    cfg.window = WindowPolicy::Fixed { tol: 1.0 };
    let tr = simulate(&cfg, &cubic).unwrap();
    let bounded = tr.stats.steps == 1_000_000 && tr.stats.min_u >= -1e-12 && tr.stats.max_u <= 1.0 + 1e-12;
    ok &= bounded;
    notes.push(format!("1e6 steps range [{:.2e}, {:.12}]", tr.stats.min_u, tr.stats.max_u));

    // Hump data are monotone in time.
    let eps0 = derive_constants(&cubic.envelope, c0_of(&cubic)).unwrap().epsilon0;
    let mut cfg = SimConfig::new(-40.0, 20.0, 20.0, InitialCondition::HumpV { shift: 0.0, epsilon0: eps0 });
    cfg.snapshot_stride = 0.0;
    cfg.track_ut = true;
    // Fixed window: growing it would prepend far-field nodes at 1 next to the
    // 1 - eps0 plateau, and their relaxation is not a property of the data.
    cfg.window = WindowPolicy::Fixed { tol: 1.0 };
    let min_ut = simulate(&cfg, &cubic).unwrap().stats.min_ut.unwrap();
    ok &= min_ut >= -1e-8;
    notes.push(format!("hump min u_t {min_ut:.2e}"));

    // Y - X bounded on the compliant front runs.
    for (name, spec) in [("cubic", cubic.clone()), ("periodic_cubic", compliant_periodic())] {
        let k = derive_constants(&spec.envelope, c0_of(&spec)).unwrap();
        let mut cfg = SimConfig::new(-40.0, 40.0, 100.0, InitialCondition::FrontLike { a: 0.0, y: 0.0, mu: 1.0, beta: 1.0 });
        cfg.snapshot_stride = 0.5;
        cfg.window = WindowPolicy::FollowLevelSet { level: 0.5 };
        let traj = simulate(&cfg, &spec).unwrap();
        let rep = y_minus_x_bounded(&trace_interfaces(&traj.snapshots, &k, &[0.1]), 1e-6);
        ok &= rep.pass;
        notes.push(format!("{name} Y-X margin {:.2e}", rep.margin));
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(ok, format!("{}; {secs:.1}s", notes.join(", ")))
}

#[test]
fn acceptance_criteria() {
    let table: [(usize, &str, fn() -> Outcome); 10] = [
        (1, "front speed oracle", criterion_1),
        (2, "PDE speed consistency", criterion_2),
        (3, "compliant fronts converge up to time shift", criterion_3),
        (4, "spark splits into two fronts", criterion_4),
        (5, "spatial terrace", criterion_5),
        (6, "temporal terrace", criterion_6),
        (7, "ignition hypothesis", criterion_7),
        (8, "pulsating identity", criterion_8),
        (9, "ergodic speed", criterion_9),
        (10, "property suites", criterion_10),
    ];
    let mut failed = Vec::new();
    for (n, name, run) in table {
        if !selected(n) {
            continue;
        }
        let r = run();
        emit(&format!("criterion {n:>2} {} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail));
        if !r.pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
