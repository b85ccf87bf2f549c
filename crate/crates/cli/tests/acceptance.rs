//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with its measured values. Every tolerance is pinned here.
//!
//! Run with `cargo test -p fronttrack-cli --test acceptance -- --nocapture`.

use std::sync::Arc;
use std::time::Instant;

use fronttrack_cli::runner::{convergence_study, run_scenario};
use fronttrack_cli::scenario::{build_scenario, load_scenario, random_jumps};
use fronttrack_core::boundary::{Boundary, ComponentMap, Polyline};
use fronttrack_core::engine::{Engine, EventKind, RunOptions, SolverParams};
use fronttrack_core::estimates::{fit_and_validate, lemma42_lax_samples};
use fronttrack_core::functionals::FunctionalWeights;
use fronttrack_core::pcfn::PcFn;
use fronttrack_core::splitting::{project_pi_n, verify_local_flow, NonlocalWindow, SplittingParams};
use fronttrack_core::state::State;
use fronttrack_core::system::builtin::{Advection, PSystem};
use fronttrack_core::system::System;
use fronttrack_core::traces::{restriction_experiment, trace_distance, CurveSpec};

fn ok(criterion: &str, detail: String) {
    println!("[acceptance] {criterion}: PASS ({detail})");
}

fn psys() -> PSystem {
    PSystem { a: 1.0, rho_min: 0.5, rho_max: 2.0, q_max: 0.4 }
}

fn psys_boundary(sys: &PSystem, g: PcFn, t_end: f64, margin: f64) -> Boundary {
    Boundary::new(
        sys,
        Polyline::vertical(0.0, t_end),
        g,
        Arc::new(ComponentMap { ell: 1, base: sys.base_state() }),
        1,
        margin,
    )
    .unwrap()
}

/// Criterion 1 — exact-transport oracle: scalar advection, final L1
/// error at most 2 eps for eps in {0.1, 0.01}, each run under a second.
#[test]
fn c01_exact_transport() {
    let sys = Advection { speed: 1.0, box_half: 10.0 };
    let bdry = Boundary::new(
        &sys,
        Polyline::vertical(0.0, 6.0),
        PcFn::constant(State(vec![0.0])),
        Arc::new(fronttrack_core::boundary::IdentityMap { n: 1, base: sys.base_state() }),
        0,
        0.4,
    )
    .unwrap();
    let u0 = PcFn::step(0.0, 1.0, State(vec![1.0]), State(vec![0.0]));
    let exact = PcFn::step(5.0, 6.0, State(vec![1.0]), State(vec![0.0]));
    let mut details = Vec::new();
    for eps in [0.1, 0.01] {
        let start = Instant::now();
        let eng = Engine::new(&sys, &bdry, SolverParams::new(eps, 1e-8), FunctionalWeights::default());
        let run = eng.run(&u0, &RunOptions::to_time(5.0)).unwrap();
        let elapsed = start.elapsed();
        let err = run.final_config.to_pcfn(&sys, &bdry).l1_distance(&exact);
        assert!(err <= 2.0 * eps, "eps = {eps}: L1 error {err} above 2 eps");
        assert!(elapsed.as_secs_f64() < 1.0, "run took {elapsed:?}");
        details.push(format!("err({eps}) = {err:.2e} in {elapsed:?}"));
    }
    ok("criterion 1 (exact transport)", details.join(", "));
}

/// Criterion 2 — Glimm monotonicity on the random p-system scenario:
/// the functional never increases event-wise (slack 1e-9), the quadratic
/// potential drops by half the strength product at physical interior
/// collisions, and the non-physical load stays under 2 eps.
#[test]
fn c02_glimm_monotonicity() {
    let sc = load_scenario("builtin:psystem-boundary").unwrap();
    let built = build_scenario(&sc).unwrap();
    let arts = run_scenario(&built, None).unwrap();
    let eps = built.params.epsilon;
    let n = built.sys.n();
    let mut worst_dups = f64::NEG_INFINITY;
    let mut collisions = 0;
    for ev in &arts.run.events {
        worst_dups = worst_dups.max(ev.deltas.dupsilon);
        assert!(
            ev.deltas.dupsilon <= 1e-9,
            "functional increased by {} at t = {}",
            ev.deltas.dupsilon,
            ev.time
        );
        if let EventKind::FrontCollision(_, _) = ev.kind {
            if ev.incoming.iter().all(|&(f, _)| f <= n) {
                collisions += 1;
                let product: f64 = ev.incoming.iter().map(|&(_, s)| s.abs()).product();
                assert!(
                    ev.deltas.dq <= -0.5 * product + 1e-9,
                    "quadratic decrease violated: dq = {} for product {product}",
                    ev.deltas.dq
                );
            }
        }
    }
    assert!(collisions > 10, "only {collisions} physical collisions exercised");
    let np_max = arts
        .run
        .trajectory
        .iter()
        .map(|c| c.np_total(n))
        .fold(0.0_f64, f64::max);
    assert!(np_max <= 2.0 * eps, "non-physical strength {np_max} above 2 eps");
    ok(
        "criterion 2 (Glimm monotonicity)",
        format!(
            "{} events, worst increment {worst_dups:.2e}, {collisions} collisions, np max {np_max:.2e}",
            arts.run.events.len()
        ),
    );
}

/// Criterion 3 — Cauchy convergence in the accuracy parameter: the
/// successive L1 distances at T = 2 decrease strictly with ratio <= 0.75.
#[test]
fn c03_cauchy_convergence() {
    let sc = load_scenario("builtin:psystem-study").unwrap();
    let rows = convergence_study(&sc, &[0.04, 0.02, 0.01, 0.005], None).unwrap();
    let dists: Vec<f64> = rows.iter().filter_map(|r| r.distance_to_previous).collect();
    assert_eq!(dists.len(), 3);
    let mut details = Vec::new();
    for w in dists.windows(2) {
        let ratio = w[1] / w[0];
        assert!(w[1] < w[0], "distances not strictly decreasing: {dists:?}");
        assert!(ratio <= 0.75, "decay ratio {ratio} above 0.75: {dists:?}");
        details.push(format!("ratio {ratio:.3}"));
    }
    ok(
        "criterion 3 (Cauchy convergence)",
        format!("distances {dists:?}, {}", details.join(", ")),
    );
}

/// Criterion 4 — Lipschitz dependence on the boundary datum: perturbing
/// g in L1 moves the final state by at most a fitted constant times the
/// datum's L1 change, stable under accuracy halving within 25%.
#[test]
fn c04_boundary_data_lipschitz() {
    let sys = psys();
    let u0 = random_jumps(&sys, 10, 0.2, 0.4, 2024);
    let t_end = 1.5;
    let run_with = |eps: f64, delta: f64| -> f64 {
        let g0 = PcFn::constant(State(vec![0.0]));
        let g1 = PcFn::new(vec![0.5], vec![State(vec![delta]), State(vec![0.0])]).unwrap();
        let b0 = psys_boundary(&sys, g0, t_end, 0.1);
        let b1 = psys_boundary(&sys, g1, t_end, 0.1);
        let e0 = Engine::new(&sys, &b0, SolverParams::new(eps, eps * eps), FunctionalWeights::default());
        let e1 = Engine::new(&sys, &b1, SolverParams::new(eps, eps * eps), FunctionalWeights::default());
        let r0 = e0.run(&u0, &RunOptions::to_time(t_end)).unwrap();
        let r1 = e1.run(&u0, &RunOptions::to_time(t_end)).unwrap();
        r0.final_config
            .to_pcfn(&sys, &b0)
            .l1_distance(&r1.final_config.to_pcfn(&sys, &b1))
    };
    let mut l_fits = Vec::new();
    for eps in [0.02, 0.01] {
        let mut l = 0.0_f64;
        for delta in [0.05, 0.025] {
            let dist = run_with(eps, delta);
            let g_l1 = delta * 0.5; // the perturbation lives on [0, 0.5]
            assert!(dist.is_finite() && dist > 0.0);
            l = l.max(dist / g_l1);
        }
        l_fits.push(l);
    }
    let drift = (l_fits[1] / l_fits[0] - 1.0).abs();
    assert!(
        drift <= 0.25,
        "Lipschitz fit unstable under accuracy halving: {l_fits:?}"
    );
    ok(
        "criterion 4 (boundary-data Lipschitz)",
        format!("L = {:.3} and {:.3}, drift {:.1}%", l_fits[0], l_fits[1], 100.0 * drift),
    );
}

/// Criterion 5 — boundary interaction estimate: 1000 sampled boundary
/// configurations fit a constant on one half that validates on the other
/// within a 20% margin, and the constant grows as the margin shrinks.
#[test]
fn c05_boundary_interaction_sampling() {
    let sys = psys();
    let bdry = psys_boundary(&sys, PcFn::constant(State(vec![0.0])), 2.0, 0.15);
    let samples = lemma42_lax_samples(&sys, &bdry, 1000, 0.05, 0.05, 20240).unwrap();
    assert!(samples.len() >= 900);
    let rep = fit_and_validate(&samples, 0.2);
    assert_eq!(
        rep.violations, 0,
        "hold-out violations beyond the 20% margin (c = {}, worst {})",
        rep.c_fit, rep.max_ratio_holdout
    );

    let mut fits = Vec::new();
    for c in [0.2, 0.1, 0.05] {
        let sys_c = PSystem { a: 1.0, rho_min: 0.5, rho_max: 2.0, q_max: 0.5 * (1.0 - c) };
        let bd = Boundary::new(
            &sys_c,
            Polyline::vertical(0.0, 2.0),
            PcFn::constant(State(vec![0.0])),
            Arc::new(ComponentMap { ell: 1, base: sys_c.base_state() }),
            1,
            0.9 * c,
        )
        .unwrap();
        let s = lemma42_lax_samples(&sys_c, &bd, 1000, 0.03, 0.03, 5150).unwrap();
        fits.push(fit_and_validate(&s, 0.2).c_fit);
    }
    assert!(
        fits[0] < fits[1] && fits[1] < fits[2],
        "constant does not grow as the margin shrinks: {fits:?}"
    );
    ok(
        "criterion 5 (boundary interaction estimate)",
        format!("c_fit = {:.3}, margin growth {fits:?}", rep.c_fit),
    );
}

/// Criterion 6 — trace regularity: the trace distance between two
/// vertical curves scales linearly in their gap within 30%, and the
/// fitted constant closes the claimed bound.
#[test]
fn c06_trace_regularity() {
    let sys = psys();
    let g = PcFn::new(vec![0.7], vec![State(vec![0.0]), State(vec![0.03])]).unwrap();
    let bdry = psys_boundary(&sys, g, 2.0, 0.1);
    let u0 = random_jumps(&sys, 12, 0.15, 0.3, 7);
    let tv_u0 = u0.tv();
    let tv_g = bdry.gdata.tv();
    let eng = Engine::new(&sys, &bdry, SolverParams::new(0.02, 4e-4), FunctionalWeights::default());
    let mut opts = RunOptions::to_time(2.0);
    opts.keep_event_snapshots = true;
    let run = eng.run(&u0, &opts).unwrap();
    let c = 0.1;
    let hs = [0.2, 0.1, 0.05];
    let mut rates = Vec::new();
    for &h in &hs {
        let c0 = CurveSpec::vertical(1.0, 1, c);
        let c1 = CurveSpec::vertical(1.0 + h, 1, c);
        let d = trace_distance(&sys, &bdry, &run.trajectory, &c0, &c1, 2.0).unwrap();
        rates.push(d / h);
    }
    for w in rates.windows(2) {
        let ratio = w[1] / w[0];
        assert!(
            (0.7..=1.3).contains(&ratio),
            "trace distance not linear within 30%: rates {rates:?}"
        );
    }
    let k_fit = rates.iter().fold(0.0_f64, |m, r| m.max(r * c / (tv_u0 + tv_g)));
    for (&h, &r) in hs.iter().zip(rates.iter()) {
        assert!(r * h <= (k_fit / c) * (tv_u0 + tv_g) * h + 1e-12);
    }
    ok(
        "criterion 6 (trace regularity)",
        format!("rates {rates:?}, fitted K = {k_fit:.3}"),
    );
}

/// Criterion 7 — restriction uniqueness: re-solving from the harvested
/// trace along an inner curve reproduces the solution within 5 eps,
/// improving as eps shrinks.
#[test]
fn c07_restriction_uniqueness() {
    let sys = psys();
    let g = PcFn::new(vec![0.6], vec![State(vec![0.0]), State(vec![0.02])]).unwrap();
    let bdry = psys_boundary(&sys, g, 2.0, 0.1);
    let u0 = random_jumps(&sys, 10, 0.2, 0.3, 1234);
    let curve = CurveSpec::vertical(0.5, 1, 0.1);
    // the harvested datum re-creates each crossing wave through the
    // boundary solver's consistency fixed point, so the measured
    // discrepancy sits at rounding level for every accuracy; the decrease
    // check therefore carries an explicit 1e-10 rounding floor
    let mut last = f64::INFINITY;
    let mut details = Vec::new();
    for eps in [0.02, 0.01] {
        let eng = Engine::new(&sys, &bdry, SolverParams::new(eps, eps * eps), FunctionalWeights::default());
        let d = restriction_experiment(&eng, &u0, &curve, 1.5, &[0.5, 1.0]).unwrap();
        assert!(d <= 5.0 * eps, "discrepancy {d} above 5 eps = {}", 5.0 * eps);
        assert!(d <= last.max(1e-10), "discrepancy did not decrease with eps");
        last = d;
        details.push(format!("d({eps}) = {d:.2e}"));
    }
    ok("criterion 7 (restriction uniqueness)", details.join(", "));
}

/// Criterion 8 — the non-uniqueness counterexample: the restricted
/// problem stays identically zero, the full problem carries mass on
/// [3, 4] within 10% of the characteristics/quadrature oracle, and the
/// harvested trace vanishes on [0, 1].
#[test]
fn c08_nonuniqueness_counterexample() {
    // independent oracle: the deposit born at time s overlaps [3, 4] on
    // length s at t = 1 and feeds at rate 1 - s
    let oracle: f64 = {
        let n = 40_000;
        let h = 1.0 / n as f64;
        (0..n).map(|k| ((k as f64 + 0.5) * h) * (1.0 - (k as f64 + 0.5) * h) * h).sum()
    };
    let sc = load_scenario("builtin:eq8-nonuniqueness").unwrap();
    let built = build_scenario(&sc).unwrap();
    let arts = run_scenario(&built, None).unwrap();
    let exp = arts.summary.experiment.expect("experiment report");
    let mass = exp["mass_on_34"].as_f64().unwrap();
    let restricted = exp["restricted_norm"].as_f64().unwrap();
    let trace_sup = exp["trace_sup"].as_f64().unwrap();
    assert_eq!(restricted, 0.0, "restricted problem not exactly trivial");
    assert_eq!(trace_sup, 0.0, "trace along x = 2 not identically zero");
    assert!(
        (mass - oracle).abs() <= 0.1 * oracle,
        "mass {mass} outside 10% of the oracle {oracle}"
    );
    ok(
        "criterion 8 (non-uniqueness counterexample)",
        format!("mass = {mass:.5} vs oracle {oracle:.5}, restricted = 0, trace = 0"),
    );
}

/// Criterion 9 — projection unit suite: linearity, unit operator norm,
/// doubled-variation cap and monotone L1 convergence on a BV function.
#[test]
fn c09_projection_suite() {
    let s = |x: f64| State(vec![x]);
    let u = PcFn::step(0.11, 0.83, s(1.5), s(0.0));
    let v = PcFn::step(-0.4, 2.3, s(-0.7), s(0.0));
    let lhs = project_pi_n(&u.add_scaled(3.0, &v), 10);
    let rhs = project_pi_n(&u, 10).add_scaled(3.0, &project_pi_n(&v, 10));
    assert!(lhs.l1_distance(&rhs) < 1e-12, "linearity fails");

    let zero = s(0.0);
    for f in [&u, &v] {
        assert!(project_pi_n(f, 10).l1_norm(&zero) <= f.l1_norm(&zero) + 1e-12);
    }
    let aligned = PcFn::step(0.0, 1.0, s(1.0), s(0.0));
    assert!(
        (project_pi_n(&aligned, 10).l1_norm(&zero) - aligned.l1_norm(&zero)).abs() < 1e-12,
        "norm not attained on an aligned indicator"
    );
    for f in [&u, &v, &aligned] {
        assert!(project_pi_n(f, 10).tv() <= 2.0 * f.tv() + 1e-12);
    }
    let bv = PcFn::new(
        vec![0.015, 0.33, 0.71, 1.234],
        vec![s(0.0), s(0.8), s(-0.3), s(0.55), s(0.0)],
    )
    .unwrap();
    let errs: Vec<f64> = [10usize, 40, 160]
        .iter()
        .map(|&n| project_pi_n(&bv, n).l1_distance(&bv))
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors not monotone: {errs:?}");
    ok(
        "criterion 9 (projection suite)",
        format!("L1 errors at N = 10/40/160: {errs:?}"),
    );
}

/// Criterion 10 — local-flow consistency: the composition discrepancy
/// scales quadratically in the step, ratio per halving within [3, 5]
/// (up to 1e-9 relative arithmetic slack at the lower edge).
#[test]
fn c10_local_flow_consistency() {
    let sys = Advection { speed: 1.0, box_half: 10.0 };
    let bdry = Boundary::new(
        &sys,
        Polyline::vertical(0.0, 2.0),
        PcFn::constant(State(vec![0.0])),
        Arc::new(fronttrack_core::boundary::IdentityMap { n: 1, base: sys.base_state() }),
        0,
        0.4,
    )
    .unwrap();
    let eng = Engine::new(&sys, &bdry, SolverParams::new(0.05, 1e-8), FunctionalWeights::default());
    let src = NonlocalWindow {
        window: (0.0, 1.0),
        support: (3.0, 4.0),
        coefficient: 1.0,
        reference: sys.base_state(),
    };
    let sp = SplittingParams { eps_split: 0.1, proj_n: 10, budget: None };
    let u0 = PcFn::step(0.0, 1.0, State(vec![1.0]), State(vec![0.0]));
    let mut ds = Vec::new();
    for tau in [0.2, 0.1, 0.05] {
        ds.push(verify_local_flow(&eng, &src, &sp, &u0, 0.0, 2, tau).unwrap());
    }
    let mut ratios = Vec::new();
    for w in ds.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (3.0 * (1.0 - 1e-9)..=5.0).contains(&ratio),
            "halving ratio {ratio} outside [3, 5]: {ds:?}"
        );
        ratios.push(ratio);
    }
    ok(
        "criterion 10 (local-flow consistency)",
        format!("discrepancies {ds:?}, ratios {ratios:?}"),
    );
}

/// Criterion 11 — splitting stability: along the counterexample runs a
/// single fitted constant bounds both the functional growth and the mass
/// growth, fitted on one step size and validated on a finer one.
#[test]
fn c11_splitting_stability() {
    let sys = Advection { speed: 1.0, box_half: 10.0 };
    let bdry = Boundary::new(
        &sys,
        Polyline::vertical(0.0, 2.0),
        PcFn::constant(State(vec![0.0])),
        Arc::new(fronttrack_core::boundary::IdentityMap { n: 1, base: sys.base_state() }),
        0,
        0.4,
    )
    .unwrap();
    let eng = Engine::new(&sys, &bdry, SolverParams::new(0.02, 1e-8), FunctionalWeights::default());
    let src = NonlocalWindow {
        window: (0.0, 1.0),
        support: (3.0, 4.0),
        coefficient: 1.0,
        reference: sys.base_state(),
    };
    let u0 = PcFn::step(0.0, 1.0, State(vec![1.0]), State(vec![0.0]));
    let m0 = u0.l1_norm(&State(vec![0.0]));

    let run_series = |eps_split: f64| {
        let sp = SplittingParams { eps_split, proj_n: 10, budget: None };
        let mut opts = RunOptions::to_time(1.0);
        opts.keep_event_snapshots = true;
        opts.log_functionals = true;
        fronttrack_core::splitting::euler_polygonal(&eng, &src, &sp, &u0, 1.0, &opts).unwrap()
    };
    let needed_c = |run: &fronttrack_core::engine::RunResult| -> f64 {
        let ups0 = run.functionals.first().unwrap().upsilon;
        let mut worst = 0.0_f64;
        for (cfg, smp) in run.trajectory.iter().zip(run.functionals.iter()) {
            if cfg.time <= 1e-12 {
                continue;
            }
            worst = worst.max((smp.upsilon - ups0).max(0.0) / cfg.time);
            let l1 = cfg.to_pcfn(&sys, &bdry).l1_norm(&State(vec![0.0]));
            if l1 > m0 {
                let mut lo = 0.0_f64;
                let mut hi = 10.0_f64;
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if m0 * (mid * cfg.time).exp() + mid * cfg.time >= l1 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                worst = worst.max(hi);
            }
        }
        worst
    };

    let fit_run = run_series(0.1);
    let c_fit = needed_c(&fit_run).max(0.05);
    let check_run = run_series(0.05);
    let c_allowed = 1.2 * c_fit;
    let ups0 = check_run.functionals.first().unwrap().upsilon;
    for (cfg, smp) in check_run.trajectory.iter().zip(check_run.functionals.iter()) {
        assert!(
            smp.upsilon <= ups0 + c_allowed * cfg.time + 1e-9,
            "functional above the fitted linear bound at t = {}",
            cfg.time
        );
        let l1 = cfg.to_pcfn(&sys, &bdry).l1_norm(&State(vec![0.0]));
        assert!(
            l1 <= m0 * (c_allowed * cfg.time).exp() + c_allowed * cfg.time + 1e-9,
            "mass above the fitted bound at t = {}",
            cfg.time
        );
    }
    ok(
        "criterion 11 (splitting stability)",
        format!("fitted C = {c_fit:.3}, validated with 20% headroom on the finer run"),
    );
}
