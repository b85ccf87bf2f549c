//! Operator splitting for the balance law: the local flow (homogeneous
//! evolution plus one explicit source increment), Euler polygonals
//! composed from it, and the cell-averaging projection that keeps split
//! states piecewise constant.

use crate::engine::{Configuration, Engine, EventKind, EventRecord, RunLog, RunOptions, RunResult};
use crate::error::{Result, SolverError};
use crate::functionals::{self, UpsilonVariant};
use crate::pcfn::PcFn;
use crate::state::State;

/// A (possibly non-local) source operator acting on spatial profiles.
pub trait SourceOp: Send + Sync {
    fn apply(&self, u: &PcFn) -> PcFn;
    /// L1 Lipschitz bound of the operator.
    fn lipschitz_l1(&self) -> f64;
    /// Uniform bound on the total variation of its outputs.
    fn tv_bound(&self) -> f64;
    fn name(&self) -> &str;
}

/// `G(u)(x) = coefficient * (int_a^b (u - reference)) * chi_[c, d](x)`,
/// the windowed-mass source.
#[derive(Debug, Clone)]
pub struct NonlocalWindow {
    pub window: (f64, f64),
    pub support: (f64, f64),
    pub coefficient: f64,
    pub reference: State,
}

impl SourceOp for NonlocalWindow {
    fn apply(&self, u: &PcFn) -> PcFn {
        let m = u.integral_on(self.window.0, self.window.1, &self.reference);
        let zero = State::zeros(u.dim());
        PcFn::step(self.support.0, self.support.1, &m * self.coefficient, zero)
    }

    fn lipschitz_l1(&self) -> f64 {
        self.coefficient.abs() * (self.support.1 - self.support.0)
    }

    fn tv_bound(&self) -> f64 {
        // two jumps of the windowed mass; the window mass is bounded by
        // the admissible L1 budget of the data
        f64::INFINITY
    }

    fn name(&self) -> &str {
        "nonlocal-window"
    }
}

/// Admissible-domain budget for splitting runs.
#[derive(Debug, Clone, Copy)]
pub struct DomainBudget {
    /// Functional ceiling: `Upsilon_t <= delta - growth_c * (t_end - t)`.
    pub delta: f64,
    pub growth_c: f64,
    /// L1 ceiling: `|u|_L1 <= m * exp(growth_c t) + growth_c t`.
    pub m: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone)]
pub struct SplittingParams {
    /// Splitting step.
    pub eps_split: f64,
    /// Projection resolution (cells of width `1 / proj_n`).
    pub proj_n: usize,
    pub budget: Option<DomainBudget>,
}

/// Cell averaging on the uniform grid of mesh `1/n` over the window
/// `(-n - 1/n, n]`; zero outside, linear, L1 norm one, variation at most
/// doubled.
pub fn project_pi_n(u: &PcFn, n: usize) -> PcFn {
    let nf = n as f64;
    let n2 = (n * n) as i64;
    let zero = State::zeros(u.dim());
    let mut cuts = Vec::new();
    let mut vals = vec![zero.clone()];
    let mut prev = zero.clone();
    for k in -1 - n2..=n2 - 1 {
        let a = k as f64 / nf;
        let b = (k + 1) as f64 / nf;
        // exact value on cells the function is constant on, so cell
        // averaging introduces no rounding jitter there
        let constant_cell = !u.cuts().iter().any(|&c| c > a && c < b) && u.eval(a) == u.eval(b);
        let avg = if constant_cell {
            u.eval(a).clone()
        } else {
            &u.integral_on(a, b, &State::zeros(u.dim())) * nf
        };
        if avg != prev {
            cuts.push(a);
            vals.push(avg.clone());
            prev = avg;
        }
    }
    if prev != zero {
        cuts.push(n2 as f64 / nf);
        vals.push(zero);
    }
    PcFn::new(cuts, vals).expect("projection cells are ordered")
}

/// One splitting step: run the homogeneous solver for `dt`, then deposit
/// `dt * Pi_N G(u)` on `x >= gamma(t + dt)` and re-resolve the profile
/// into admissible fans (source-created waves get generation 1).
pub fn splitting_step(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    cfg: &mut Configuration,
    dt: f64,
    log: &mut RunLog,
) -> Result<()> {
    let t1 = cfg.time + dt;
    eng.advance_to(cfg, t1, log)?;
    let u = cfg.to_pcfn(eng.sys, eng.bdry);
    let g_of_u = src.apply(&u);
    let projected = project_pi_n(&g_of_u, sp.proj_n);
    let gamma_t1 = eng.bdry.gamma.eval(t1);
    let clipped = projected.restrict_from(gamma_t1, State::zeros(u.dim()));
    let u_next = u.add_scaled(dt, &clipped);
    let next_id = cfg.next_id;
    *cfg = eng.init_at(&u_next, t1)?;
    cfg.next_id = cfg.next_id.max(next_id);
    check_budget(eng, sp, cfg)?;
    log.note_external_event(
        eng,
        cfg,
        EventRecord {
            time: t1,
            kind: EventKind::SplitStep,
            location: gamma_t1,
            incoming: vec![],
            outgoing: vec![],
            deltas: Default::default(),
        },
    )?;
    Ok(())
}

fn check_budget(eng: &Engine, sp: &SplittingParams, cfg: &Configuration) -> Result<()> {
    if let Some(b) = sp.budget {
        let ups = functionals::compute_upsilon(
            eng.sys,
            eng.bdry,
            cfg,
            &eng.weights,
            UpsilonVariant::Exact,
        )?
        .upsilon;
        let ceiling = b.delta - b.growth_c * (b.t_end - cfg.time).max(0.0);
        if ups > ceiling {
            return Err(SolverError::DomainExceeded(format!(
                "functional {ups} above ceiling {ceiling} at t = {}",
                cfg.time
            )));
        }
        let l1 = cfg.to_pcfn(eng.sys, eng.bdry).l1_norm(&eng.sys.base_state());
        let cap = b.m * (b.growth_c * cfg.time).exp() + b.growth_c * cfg.time;
        if l1 > cap {
            return Err(SolverError::DomainExceeded(format!(
                "L1 norm {l1} above cap {cap} at t = {}",
                cfg.time
            )));
        }
    }
    Ok(())
}

/// The Euler polygonal: splitting steps of length `eps_split` composed up
/// to `t_end`, final partial step included.
pub fn euler_polygonal(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    u0: &PcFn,
    t_end: f64,
    opts: &RunOptions,
) -> Result<RunResult> {
    let mut cfg = eng.init(u0)?;
    if let Some(b) = sp.budget {
        let ups0 = functionals::compute_upsilon(
            eng.sys,
            eng.bdry,
            &cfg,
            &eng.weights,
            UpsilonVariant::Exact,
        )?
        .upsilon;
        if ups0 > b.delta - b.growth_c * b.t_end {
            return Err(SolverError::DomainExceeded(format!(
                "initial functional {ups0} rules out the horizon {}",
                b.t_end
            )));
        }
    }
    let mut log = RunLog::new(opts.clone());
    log.note_snapshot(eng, &cfg, true)?;
    let steps = (t_end / sp.eps_split).floor() as usize;
    for _ in 0..steps {
        splitting_step(eng, src, sp, &mut cfg, sp.eps_split, &mut log)?;
    }
    let rest = t_end - steps as f64 * sp.eps_split;
    if rest > 1e-14 {
        splitting_step(eng, src, sp, &mut cfg, rest, &mut log)?;
    }
    log.note_snapshot(eng, &cfg, false)?;
    Ok(RunResult {
        final_config: cfg,
        trajectory: log.trajectory,
        events: log.events,
        functionals: log.functionals,
    })
}

/// The local flow: homogeneous evolution for `t` from data posed at
/// `t0`, plus `t * Pi_N G(evolved)` on `x >= gamma(t0 + t)`.
pub fn local_flow(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    u: &PcFn,
    t0: f64,
    t: f64,
) -> Result<PcFn> {
    let mut cfg = eng.init_at(u, t0)?;
    let mut log = RunLog::new(RunOptions::default());
    eng.advance_to(&mut cfg, t0 + t, &mut log)?;
    let evolved = cfg.to_pcfn(eng.sys, eng.bdry);
    Ok(deposit(eng, src, sp, &evolved, &evolved, t0 + t, t))
}

/// The tangent variant: the source is evaluated at the initial state
/// instead of the evolved one.
pub fn local_flow_tangent(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    u: &PcFn,
    t0: f64,
    t: f64,
) -> Result<PcFn> {
    let mut cfg = eng.init_at(u, t0)?;
    let mut log = RunLog::new(RunOptions::default());
    eng.advance_to(&mut cfg, t0 + t, &mut log)?;
    let evolved = cfg.to_pcfn(eng.sys, eng.bdry);
    Ok(deposit(eng, src, sp, &evolved, u, t0 + t, t))
}

fn deposit(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    carrier: &PcFn,
    source_arg: &PcFn,
    t_at: f64,
    dt: f64,
) -> PcFn {
    let g = project_pi_n(&src.apply(source_arg), sp.proj_n);
    let clipped = g.restrict_from(eng.bdry.gamma.eval(t_at), State::zeros(carrier.dim()));
    carrier.add_scaled(dt, &clipped)
}

/// L1 discrepancy between `F(k tau, t0 + tau) . F(tau, t0) u` and
/// `F((k+1) tau, t0) u`, the quantity behind the local-flow consistency
/// estimate.
pub fn verify_local_flow(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    u: &PcFn,
    t0: f64,
    k: usize,
    tau: f64,
) -> Result<f64> {
    let first = local_flow(eng, src, sp, u, t0, tau)?;
    let composed = local_flow(eng, src, sp, &first, t0 + tau, k as f64 * tau)?;
    let direct = local_flow(eng, src, sp, u, t0, (k + 1) as f64 * tau)?;
    Ok(composed.l1_distance(&direct))
}

/// First-order gap between the two local-flow variants; shrinks like
/// `tau^2` on Lipschitz sources.
pub fn tangency_gap(
    eng: &Engine,
    src: &dyn SourceOp,
    sp: &SplittingParams,
    u: &PcFn,
    t0: f64,
    tau: f64,
) -> Result<f64> {
    let a = local_flow(eng, src, sp, u, t0, tau)?;
    let b = local_flow_tangent(eng, src, sp, u, t0, tau)?;
    Ok(a.l1_distance(&b))
}
