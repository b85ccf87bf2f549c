//! Traces of front-tracking solutions along time-like curves, and the
//! restriction / non-uniqueness experiments built on them.

use std::sync::Arc;

use crate::boundary::{Boundary, IdentityMap, Polyline};
use crate::engine::{Configuration, Engine, RunOptions, SolverParams};
use crate::error::{Result, SolverError};
use crate::functionals::FunctionalWeights;
use crate::pcfn::PcFn;
use crate::splitting::{self, NonlocalWindow, SplittingParams};
use crate::state::State;
use crate::system::{builtin::Advection, System};

/// A piecewise-linear curve in the `(t, x)` plane along which traces are
/// taken, with the family index it must stay clear of.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub gamma: Polyline,
    /// The curve is non-characteristic between families `ell_tilde` and
    /// `ell_tilde + 1`.
    pub ell_tilde: usize,
    pub margin_c: f64,
}

impl CurveSpec {
    pub fn vertical(x: f64, ell_tilde: usize, margin_c: f64) -> Self {
        CurveSpec { gamma: Polyline::vertical(x, 1.0), ell_tilde, margin_c }
    }

    /// Every slope must clear the adjacent characteristic-speed bands by
    /// the margin.
    pub fn validate(&self, sys: &dyn System) -> Result<()> {
        let n = sys.n();
        if self.ell_tilde > n {
            return Err(SolverError::InvalidInput(format!(
                "ell_tilde = {} exceeds n = {n}",
                self.ell_tilde
            )));
        }
        let bounds = sys.speed_bounds();
        for (i, slope) in self.gamma.slopes().iter().enumerate() {
            if self.ell_tilde > 0 {
                let hi = bounds[self.ell_tilde - 1].1;
                if *slope < hi + self.margin_c {
                    return Err(SolverError::NotNonCharacteristic(format!(
                        "curve piece {i} slope {slope} inside/below the family-{} band (max {hi})",
                        self.ell_tilde
                    )));
                }
            }
            if self.ell_tilde < n {
                let lo = bounds[self.ell_tilde].0;
                if *slope > lo - self.margin_c {
                    return Err(SolverError::NotNonCharacteristic(format!(
                        "curve piece {i} slope {slope} inside/above the family-{} band (min {lo})",
                        self.ell_tilde + 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Piecewise-constant trace `t -> u(t, curve(t)+)` with its jump history.
#[derive(Debug, Clone)]
pub struct TimedTrace {
    /// Trace as a piecewise-constant function of time.
    pub pc: PcFn,
    pub t_start: f64,
    pub t_end: f64,
}

impl TimedTrace {
    /// Accumulated variation of the trace over `[t_start, t]`.
    pub fn tv_until(&self, t: f64) -> f64 {
        self.pc
            .cuts()
            .iter()
            .enumerate()
            .filter(|(_, &tau)| tau > self.t_start && tau <= t)
            .map(|(i, _)| (&self.pc.values()[i + 1] - &self.pc.values()[i]).norm1())
            .sum()
    }

    pub fn tv(&self) -> f64 {
        self.tv_until(self.t_end)
    }
}

/// Exact event-based trace of a trajectory along a non-characteristic
/// curve: crossing times are solved from the front lines against the
/// curve pieces; the result is right continuous in time.
pub fn sample_trace(
    sys: &dyn System,
    bdry: &Boundary,
    trajectory: &[Configuration],
    curve: &CurveSpec,
) -> Result<TimedTrace> {
    curve.validate(sys)?;
    if trajectory.is_empty() {
        return Err(SolverError::InvalidInput("empty trajectory".into()));
    }
    let t_start = trajectory[0].time;
    let t_end = trajectory.last().unwrap().time;
    let mut times: Vec<f64> = vec![];
    let mut values: Vec<State> = vec![];

    let mut push_sample = |t: f64, v: State| {
        if values.last() != Some(&v) {
            times.push(t);
            values.push(v);
        }
    };

    for w in trajectory.windows(2) {
        let (cfg, t1) = (&w[0], w[1].time);
        let t0 = cfg.time;
        if t1 <= t0 {
            continue;
        }
        sample_window(sys, bdry, cfg, curve, t0, t1, &mut push_sample)?;
    }
    // final instant
    let last = trajectory.last().unwrap();
    let x = curve.gamma.eval(last.time);
    push_sample(last.time, state_at(bdry, last, x, last.time));

    if values.is_empty() {
        return Err(SolverError::InvalidInput("trace produced no samples".into()));
    }
    // turn the (time, value) samples into a right-continuous step signal
    let first = values[0].clone();
    let mut cuts = Vec::with_capacity(values.len());
    let mut vals = Vec::with_capacity(values.len() + 1);
    vals.push(first.clone());
    for (i, t) in times.iter().enumerate().skip(1) {
        cuts.push(*t);
        vals.push(values[i].clone());
    }
    Ok(TimedTrace { pc: PcFn::new(cuts, vals)?, t_start, t_end })
}

/// Trace samples inside one inter-event window, where fronts move along
/// straight lines.
fn sample_window(
    _sys: &dyn System,
    bdry: &Boundary,
    cfg: &Configuration,
    curve: &CurveSpec,
    t0: f64,
    t1: f64,
    push: &mut dyn FnMut(f64, State),
) -> Result<()> {
    // crossing times of each front line with each curve piece
    let mut crossings: Vec<f64> = vec![];
    let gamma = &curve.gamma;
    let mut segs: Vec<(f64, f64, f64, f64)> = gamma.segments().collect();
    // extend the polyline with finite segments covering the window
    let last_t = *gamma.times.last().unwrap();
    if last_t < t1 {
        let m = *gamma.slopes().last().unwrap();
        let x_at = gamma.eval(last_t);
        let tb = t1 + 1.0;
        segs.push((last_t, tb, x_at, x_at + m * (tb - last_t)));
    }
    let first_t = gamma.times[0];
    if first_t > t0 {
        let ta = t0 - 1.0;
        let x_at = gamma.eval(first_t);
        segs.insert(0, (ta, first_t, x_at, x_at)); // held constant before the first vertex
    }
    for f in &cfg.fronts {
        for &(ta, tb, xa, xb) in &segs {
            let m = (xb - xa) / (tb - ta);
            let denom = f.speed - m;
            if denom == 0.0 {
                continue;
            }
            // f.position + speed (tau - t0) = xa + m (tau - ta)
            let tau = (xa - m * ta - f.position + f.speed * t0) / denom;
            let lo = ta.max(t0);
            let hi = tb.min(t1);
            if tau > lo && tau <= hi {
                crossings.push(tau);
            }
        }
    }
    crossings.sort_by(|a, b| a.total_cmp(b));
    crossings.dedup();
    crossings.retain(|&t| t > t0 && t <= t1);

    let mut lo = t0;
    for &c in crossings.iter().chain(std::iter::once(&t1)) {
        let mid = 0.5 * (lo + c);
        let x = curve.gamma.eval(mid);
        push(lo, state_at(bdry, cfg, x, mid));
        lo = c;
    }
    Ok(())
}

/// Value of the snapshot at `(t, x+)` using the linear motion of the
/// fronts since `cfg.time`.
fn state_at(bdry: &Boundary, cfg: &Configuration, x: f64, t: f64) -> State {
    if x < bdry.gamma.eval(t) {
        // outside the domain the solution vanishes onto nothing useful;
        // callers validate support, but be defensive
        return cfg.trace.clone();
    }
    let dt = t - cfg.time;
    let mut state = cfg.trace.clone();
    for f in &cfg.fronts {
        if f.position + f.speed * dt <= x {
            state = f.right_state.clone();
        } else {
            break;
        }
    }
    state
}

/// `int_0^T |u(t, c0(t)) - u(t, c1(t))| dt`, computed exactly from the
/// two event-based traces.
pub fn trace_distance(
    sys: &dyn System,
    bdry: &Boundary,
    trajectory: &[Configuration],
    c0: &CurveSpec,
    c1: &CurveSpec,
    t_end: f64,
) -> Result<f64> {
    let tr0 = sample_trace(sys, bdry, trajectory, c0)?;
    let tr1 = sample_trace(sys, bdry, trajectory, c1)?;
    Ok(tr0.pc.l1_distance_on(&tr1.pc, tr0.t_start, t_end))
}

/// Harvest the boundary datum a solution induces along an inner curve,
/// as a piecewise-constant signal on the trace's own breakpoints.
pub fn harvest_boundary_datum(
    sys: &dyn System,
    bdry: &Boundary,
    trajectory: &[Configuration],
    curve: &CurveSpec,
) -> Result<PcFn> {
    let tr = sample_trace(sys, bdry, trajectory, curve)?;
    Ok(tr.pc.map(|u| bdry.bmap.eval(u)))
}

/// Solve the problem, harvest its trace along `gamma_tilde` as boundary
/// data for the restricted problem, re-solve, and report the largest L1
/// distance between the two solutions right of `gamma_tilde` over the
/// snapshot times.
pub fn restriction_experiment(
    eng: &Engine,
    u0: &PcFn,
    gamma_tilde: &CurveSpec,
    t_end: f64,
    snapshots: &[f64],
) -> Result<f64> {
    let sys = eng.sys;
    let mut opts = RunOptions::to_time(t_end);
    opts.keep_event_snapshots = true;
    opts.snapshot_times = snapshots.to_vec();
    let big = eng.run(u0, &opts)?;

    let g_tilde = harvest_boundary_datum(sys, eng.bdry, &big.trajectory, gamma_tilde)?;
    let restricted_bdry = Boundary::new(
        sys,
        gamma_tilde.gamma.clone(),
        g_tilde,
        eng.bdry.bmap.clone(),
        eng.bdry.ell,
        gamma_tilde.margin_c,
    )?;
    let base = sys.base_state();
    let u0_restricted = u0.restrict_from(gamma_tilde.gamma.eval(0.0), base.clone());
    let eng2 = Engine::new(sys, &restricted_bdry, eng.params.clone(), eng.weights.clone());
    let small = eng2.run(&u0_restricted, &opts)?;

    let mut sup = 0.0_f64;
    for &t in snapshots.iter().chain(std::iter::once(&t_end)) {
        let cfg_big = config_at(&big.trajectory, t);
        let cfg_small = config_at(&small.trajectory, t);
        let pb = profile_at(sys, eng.bdry, cfg_big, t);
        let ps = profile_at(sys, &restricted_bdry, cfg_small, t);
        let from = gamma_tilde.gamma.eval(t);
        let to = from + span_of(&pb).max(span_of(&ps)) + 1.0;
        sup = sup.max(pb.l1_distance_on(&ps, from, to));
    }
    Ok(sup)
}

fn config_at(trajectory: &[Configuration], t: f64) -> &Configuration {
    let mut best = &trajectory[0];
    for c in trajectory {
        if c.time <= t + 1e-12 {
            best = c;
        } else {
            break;
        }
    }
    best
}

fn profile_at(sys: &dyn System, bdry: &Boundary, cfg: &Configuration, t: f64) -> PcFn {
    cfg.advected(t).to_pcfn(sys, bdry)
}

fn span_of(p: &PcFn) -> f64 {
    match (p.cuts().first(), p.cuts().last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    }
}

/// Result of the built-in non-uniqueness scenario.
#[derive(Debug, Clone)]
pub struct NonUniquenessReport {
    /// Mass the full balance law accumulates on `[3, 4]` by `t = 1`.
    pub mass_on_34: f64,
    /// L1 norm of the restricted solution at `t = 1` (exactly zero).
    pub restricted_norm: f64,
    /// Sup of the harvested trace along `x = 2` on `[0, 1]`.
    pub trace_sup: f64,
}

/// The fixed counterexample: transport at unit speed from the indicator
/// of `[0, 1]` with zero inflow, a non-local source feeding `[3, 4]` from
/// the mass on `[0, 1]`, and the restriction curve `x = 2`.
pub fn nonuniqueness_experiment(
    epsilon: f64,
    rho: f64,
    eps_split: f64,
    proj_n: usize,
) -> Result<NonUniquenessReport> {
    let sys = Advection { speed: 1.0, box_half: 10.0 };
    let base = sys.base_state();
    let bmap = Arc::new(IdentityMap { n: 1, base: base.clone() });
    let zero_g = PcFn::constant(State(vec![0.0]));
    let bdry = Boundary::new(
        &sys,
        Polyline::vertical(0.0, 2.0),
        zero_g,
        bmap.clone(),
        0,
        0.4,
    )?;
    let params = SolverParams::new(epsilon, rho);
    let eng = Engine::new(&sys, &bdry, params.clone(), FunctionalWeights::default());
    let src = NonlocalWindow {
        window: (0.0, 1.0),
        support: (3.0, 4.0),
        coefficient: 1.0,
        reference: base.clone(),
    };
    let sp = SplittingParams { eps_split, proj_n, budget: None };
    let u0 = PcFn::step(0.0, 1.0, State(vec![1.0]), base.clone());

    let mut opts = RunOptions::to_time(1.0);
    opts.keep_event_snapshots = true;
    let full = splitting::euler_polygonal(&eng, &src, &sp, &u0, 1.0, &opts)?;
    let final_profile = full.final_config.to_pcfn(&sys, &bdry);
    let mass_on_34 = final_profile.integral_on(3.0, 4.0, &base).norm1();

    let curve = CurveSpec::vertical(2.0, 0, 0.4);
    let trace = sample_trace(&sys, &bdry, &full.trajectory, &curve)?;
    let trace_sup = trace.pc.values().iter().fold(0.0_f64, |m, v| m.max(v.norm_inf()));
    let g_tilde = harvest_boundary_datum(&sys, &bdry, &full.trajectory, &curve)?;

    // restricted problem on x >= 2 with the harvested data; the source
    // window sits left of the restricted domain so the balance law
    // degenerates to pure transport of nothing
    let bdry2 = Boundary::new(&sys, curve.gamma.clone(), g_tilde, bmap, 0, 0.4)?;
    let eng2 = Engine::new(&sys, &bdry2, params, FunctionalWeights::default());
    let u0_restricted = u0.restrict_from(2.0, base.clone());
    let restricted = splitting::euler_polygonal(&eng2, &src, &sp, &u0_restricted, 1.0, &opts)?;
    let restricted_norm = restricted.final_config.to_pcfn(&sys, &bdry2).l1_norm(&base);

    Ok(NonUniquenessReport { mass_on_34, restricted_norm, trace_sup })
}

/// Averaged one-sided continuity probe: the mean L1 distance between the
/// trace and its left-shifted copies, shifts up to `eps_prime`.
pub fn trace_continuity_probe(
    sys: &dyn System,
    bdry: &Boundary,
    trajectory: &[Configuration],
    curve: &CurveSpec,
    t_end: f64,
    eps_prime: f64,
) -> Result<f64> {
    let nodes = 16;
    let mut acc = 0.0;
    for j in 0..nodes {
        let x = (j as f64 + 0.5) * eps_prime / nodes as f64;
        let mut shifted = curve.clone();
        for v in shifted.gamma.values.iter_mut() {
            *v -= x;
        }
        acc += trace_distance(sys, bdry, trajectory, &shifted, curve, t_end)?;
    }
    Ok(acc / nodes as f64)
}
