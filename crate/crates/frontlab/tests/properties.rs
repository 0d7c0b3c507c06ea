//! Randomised invariants of reactions, the scheme and the diagnostics.

use proptest::prelude::*;

use frontlab::diagnostics::*;
use frontlab::pdesim::*;
use frontlab::reaction::*;
use frontlab::wavesolve::*;

fn cubic_a() -> impl Strategy<Value = f64> {
    0.05f64..0.45
}

/// An admissible reaction from several families, indexed for shrinking.
fn any_reaction() -> impl Strategy<Value = ReactionSpec> {
    prop_oneof![
        cubic_a().prop_map(|a| make_cubic_bistable(a).unwrap()),
        (0.05f64..0.3, 0.0f64..0.15, 0.5f64..4.0)
            .prop_map(|(lo, gap, p)| make_periodic_cubic(lo, lo + gap, p).unwrap()),
        (0.1f64..0.5, 0.5f64..2.0).prop_map(|(t, amp)| make_ignition(t, IgnitionShape { amplitude: amp, power: 1.0 }).unwrap()),
        (0.1f64..0.3, 0.0f64..0.2, 1.0f64..4.0)
            .prop_map(|(lo, gap, p)| make_periodic_ignition(lo, lo + gap, p, 1.0).unwrap()),
        (0.5f64..3.0, any::<u64>()).prop_map(|(p, s)| make_random_ergodic(p, s, RandomLaw::default()).unwrap()),
    ]
}

fn state(u: Vec<f64>, dt: f64, bc: (f64, f64)) -> SimState {
    SimState { t: 0.0, dt, dx: 0.1, x_min: -5.0, offset: 0, u, bc_left: bc.0, bc_right: bc.1, steps: 0 }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn reactions_vanish_exactly_at_zero_and_one(spec in any_reaction(), z in -50.0f64..50.0) {
        prop_assert_eq!(spec.eval(z, 0.0), 0.0);
        prop_assert_eq!(spec.eval(z, 1.0), 0.0);
    }

    #[test]
    fn reactions_lie_between_their_envelopes(spec in any_reaction(), z in -50.0f64..50.0, u in 0.0f64..1.0) {
        let f = spec.eval(z, u);
        prop_assert!(spec.envelope.f0(u) <= f + 1e-12, "f0 = {} > f = {f}", spec.envelope.f0(u));
        prop_assert!(f <= spec.envelope.f1(u) + 1e-12, "f = {f} > f1 = {}", spec.envelope.f1(u));
    }

    #[test]
    fn periodic_reactions_repeat_over_their_period(spec in any_reaction(), z in -20.0f64..20.0, u in 0.0f64..1.0, n in -3i32..4) {
        if let Some(p) = spec.period {
            // Arbitrary real periods: z + n p rounds, so allow a small drift in the phase.
            let a = spec.eval(z, u);
            let b = spec.eval(z + n as f64 * p, u);
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn temporal_counterexample_is_four_periodic(j in -(1i64 << 23)..(1 << 23), u in 0.0f64..1.0, k in 64.0f64..4096.0) {
        // Dyadic times so that t + 4 and t - 8 are exact.
        let t = j as f64 / (1u64 << 20) as f64;
        let spec = make_temporal_counterexample(1.0 / 512.0, k).unwrap();
        prop_assert_eq!(spec.eval(t, u), spec.eval(t + 4.0, u));
        prop_assert_eq!(spec.eval(t, u), spec.eval(t - 8.0, u));
    }

    #[test]
    fn front_speed_is_antitone_in_the_cubic_threshold(a in 0.05f64..0.44, d in 0.005f64..0.05) {
        // a larger threshold means a pointwise smaller reaction.
        let (lo, _) = front_speed(&make_cubic_bistable(a + d).unwrap(), 1e-8).unwrap();
        let (hi, _) = front_speed(&make_cubic_bistable(a).unwrap(), 1e-8).unwrap();
        prop_assert!(lo <= hi + 1e-8, "c({}) = {lo} > c({a}) = {hi}", a + d);
    }

    #[test]
    fn derived_constants_verify_for_any_cubic(a in 0.05f64..0.45) {
        let spec = make_cubic_bistable(a).unwrap();
        let c0 = envelope_speed(&spec.envelope, spec.lipschitz_k).unwrap();
        let k = derive_constants(&spec.envelope, c0).unwrap();
        prop_assert!(k.verify(&spec.envelope).pass);
        prop_assert!(0.0 < k.epsilon0 && k.epsilon0 < 1.0 - k.theta0);
        prop_assert!(k.c_zeta < c0 && c0 < k.c_xi + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn scheme_preserves_order(
        spec in any_reaction(),
        lo in prop::collection::vec(0.0f64..1.0, 60),
        gaps in prop::collection::vec(0.0f64..0.4, 60),
        bc in (0.0f64..1.0, 0.0f64..1.0),
        bump in (0.0f64..0.2, 0.0f64..0.2),
    ) {
        let hi: Vec<f64> = lo.iter().zip(&gaps).map(|(a, g)| (a + g).min(1.0)).collect();
        let dt = 0.9 / spec.lipschitz_k;
        let mut a = state(lo, dt, bc);
        let mut b = state(hi, dt, ((bc.0 + bump.0).min(1.0), (bc.1 + bump.1).min(1.0)));
        let mut sa = Stepper::new(&spec, &a).unwrap();
        let mut sb = Stepper::new(&spec, &b).unwrap();
        for _ in 0..40 {
            sa.step(&mut a).unwrap();
            sb.step(&mut b).unwrap();
            for (j, (x, y)) in a.u.iter().zip(&b.u).enumerate() {
                prop_assert!(x <= &(y + 1e-12), "node {j}: {x} > {y} at t = {}", a.t);
            }
        }
    }

    #[test]
    fn scheme_keeps_values_in_the_unit_interval(
        spec in any_reaction(),
        u in prop::collection::vec(0.0f64..=1.0, 80),
        bc in (0.0f64..=1.0, 0.0f64..=1.0),
    ) {
        let mut s = state(u, 1.0 / spec.lipschitz_k, bc);
        let mut st = Stepper::new(&spec, &s).unwrap();
        for _ in 0..400 {
            st.step(&mut s).unwrap();
            let (lo, hi) = st.last_range();
            prop_assert!(lo >= -1e-12 && hi <= 1.0 + 1e-12, "range [{lo}, {hi}]");
        }
    }

    #[test]
    fn homogeneous_runs_are_translation_equivariant(a in cubic_a(), k in 1i64..40, mu in 0.5f64..2.0) {
        let spec = make_cubic_bistable(a).unwrap();
        let dx = 0.1;
        let run = |shift: f64| {
            let mut cfg = SimConfig::new(-30.0, 30.0, 5.0, InitialCondition::FrontLike { a: shift, y: 0.0, mu, beta: 1.0 });
            cfg.dx = dx;
            cfg.snapshot_stride = 5.0;
            cfg.window = WindowPolicy::Fixed { tol: 1.0 };
            simulate(&cfg, &spec).unwrap().final_state.u
        };
        let base = run(0.0);
        let moved = run(k as f64 * dx);
        let k = k as usize;
        // Away from the Dirichlet edges the shifted run is the same array offset by k.
        let n = base.len();
        for j in 100..n - 100 - k {
            prop_assert!((moved[j + k] - base[j]).abs() <= 1e-9, "node {j}: {} vs {}", moved[j + k], base[j]);
        }
    }
}

/// Snapshot of `w(x - x0)` on a grid.
fn wave_snapshot(t: f64, x_left: f64, dx: f64, n: usize, w: impl Fn(f64) -> f64) -> Snapshot {
    Snapshot { t, x0: x_left, dx, u: (0..n).map(|j| w(x_left + j as f64 * dx)).collect() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn shift_distance_of_a_snapshot_with_itself_is_zero(
        u in prop::collection::vec(0.0f64..1.0, 10..80),
        t in 0.0f64..10.0,
        x0 in -5.0f64..5.0,
    ) {
        let s = Snapshot { t, x0, dx: 0.1, u };
        let r = shift_distance(&s, &s, ShiftMode::Space { max_shift: 1.0 });
        prop_assert_eq!((r.shift, r.sup_norm), (0.0, 0.0));
        let traj = [s.clone()];
        let r = shift_distance(&s, &s, ShiftMode::Time { trajectory: &traj, max_shift: 1.0 });
        prop_assert_eq!((r.shift, r.sup_norm), (0.0, 0.0));
    }

    #[test]
    fn level_positions_are_ordered_on_monotone_data(c in 0.1f64..2.0, x0 in -5.0f64..5.0, eps in 0.001f64..0.2) {
        let s = wave_snapshot(0.0, -20.0, 0.05, 801, |x| 1.0 / (1.0 + (c * (x - x0)).exp()));
        let zm = z_minus(&s, eps).unwrap();
        let zp = z_plus(&s, eps).unwrap();
        let half = rightmost_at_least(&s, 0.5).unwrap();
        prop_assert!(zm <= half && half <= zp, "{zm} <= {half} <= {zp}");
    }

    #[test]
    fn traced_travelling_wave_moves_at_its_speed(c in 0.1f64..1.5, steep in 0.5f64..2.0) {
        let snaps: Vec<Snapshot> = (0..=40)
            .map(|i| {
                let t = 0.5 * i as f64;
                wave_snapshot(t, -20.0, 0.02, 3001, |x| 1.0 / (1.0 + (steep * (x - c * t)).exp()))
            })
            .collect();
        let tr = trace_interfaces_with(&snaps, &TraceOptions::descriptive(0.25, 0.5, vec![0.1, 0.01]));
        let fit = tr.speed(0.0, 20.0).unwrap();
        prop_assert!((fit.slope - c).abs() < 1e-3, "x_t slope {} vs {c}", fit.slope);
        for e in 0..2 {
            for series in [&tr.z_minus[e], &tr.z_plus[e]] {
                let pts = tr.defined(series);
                let s = LineFit::of(&pts, MIN_FIT_SAMPLES).unwrap().slope;
                prop_assert!((s - c).abs() < 1e-3, "level slope {s} vs {c}");
            }
        }
    }

    #[test]
    fn width_growth_is_translation_invariant(rate in 0.0f64..1.0, shift in -10.0f64..10.0) {
        // Plateau whose right edge moves at `rate` and left edge stays.
        let build = |offset: f64| -> Vec<Snapshot> {
            (0..=40)
                .map(|i| {
                    let t = i as f64;
                    let edge = 5.0 + rate * t;
                    let u = move |x: f64| {
                        let y = x - offset;
                        let right = 0.6 / (1.0 + (2.0 * (y - edge)).exp());
                        1.0 / (1.0 + (2.0 * y).exp()) + right * (1.0 / (1.0 + (-2.0 * y).exp()))
                    };
                    wave_snapshot(t, -30.0 + offset, 0.05, 2001, u)
                })
                .collect()
        };
        let opts = TraceOptions::descriptive(0.25, 0.5, vec![0.25]);
        let a = width_growth_fit(&trace_interfaces_with(&build(0.0), &opts), 0.25).unwrap();
        let b = width_growth_fit(&trace_interfaces_with(&build(shift), &opts), 0.25).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-9, "{} vs {}", a.slope, b.slope);
        prop_assert!((a.slope - rate).abs() < 0.05, "slope {} vs rate {rate}", a.slope);
    }
}
