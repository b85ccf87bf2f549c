//! Event-driven front tracking.
//!
//! A configuration is a position-sorted list of moving discontinuities on
//! `x >= gamma(t)`. Between events every front travels along a straight
//! line; events are binary front collisions, fronts hitting the boundary,
//! and jumps of the boundary datum. Collisions are re-solved with the
//! accurate Riemann solver when the product of the incoming strengths
//! reaches the threshold `rho`, and with the simplified solver (which
//! lumps the outgoing residual into a fast non-physical front) otherwise.
//! Boundary interactions always use the accurate solver.

use crate::boundary::Boundary;
use crate::curves::{lax_curve, rarefaction_curve};
use crate::error::{Result, SolverError};
use crate::functionals::{self, FunctionalWeights};
use crate::pcfn::PcFn;
use crate::riemann::{
    build_fan, solve_boundary_riemann, solve_riemann, BoundaryCurveKind, Wave, WaveKind, WAVE_EPS,
};
use crate::state::State;
use crate::system::{eigen_decompose, CurveMode, System};

pub mod data;

/// Tunable knobs of a front-tracking run. `epsilon` and `rho` carry no
/// defaults on purpose: silent accuracy changes are worse than a missing
/// field.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Data-approximation accuracy and rarefaction wavelet size.
    pub epsilon: f64,
    /// Interaction threshold selecting accurate vs simplified solver.
    pub rho: f64,
    /// Maximal admissible Glimm functional of the initial data;
    /// `INFINITY` disables the check.
    pub delta0: f64,
    pub curve_mode: CurveMode,
    /// Hard cap on processed events.
    pub event_budget: u64,
    /// Boundary hits and data jumps closer than this are treated as one
    /// boundary Riemann problem.
    pub coalesce_tol: f64,
}

impl SolverParams {
    pub fn new(epsilon: f64, rho: f64) -> Self {
        SolverParams {
            epsilon,
            rho,
            delta0: f64::INFINITY,
            curve_mode: CurveMode::PreferAnalytic,
            event_budget: 10_000_000,
            coalesce_tol: 1e-9,
        }
    }
}

/// One moving discontinuity.
#[derive(Debug, Clone)]
pub struct WaveFront {
    pub id: u64,
    pub position: f64,
    pub speed: f64,
    /// `1..=n` physical, `n + 1` non-physical.
    pub family: usize,
    /// Signed strength; for non-physical fronts the Euclidean size of the
    /// jump.
    pub strength: f64,
    pub generation: u32,
    pub left_state: State,
    pub right_state: State,
}

impl WaveFront {
    pub fn is_physical(&self, n: usize) -> bool {
        self.family <= n
    }

    /// Deterministic velocity offset used only to order events, realizing
    /// the usual tie-breaking perturbation. Bounded by `1e-9 * lambda_hat`.
    pub fn speed_perturbation(&self, lambda_hat: f64) -> f64 {
        1e-12 * lambda_hat * ((self.id % 1000) as f64)
    }

    pub fn perturbed_speed(&self, lambda_hat: f64) -> f64 {
        self.speed + self.speed_perturbation(lambda_hat)
    }
}

/// Snapshot of the approximate solution at one instant.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub time: f64,
    /// Sorted by position; states chain exactly from the trace.
    pub fronts: Vec<WaveFront>,
    /// `u(gamma(t)+)`, the state between the boundary and the first front.
    pub trace: State,
    pub next_id: u64,
}

impl Configuration {
    /// Spatial profile of the snapshot; equals the base state left of the
    /// boundary.
    pub fn to_pcfn(&self, sys: &dyn System, bdry: &Boundary) -> PcFn {
        let base = sys.base_state();
        let gamma = bdry.gamma.eval(self.time);
        let mut cuts = vec![gamma];
        let mut vals = vec![base, self.trace.clone()];
        for f in &self.fronts {
            if f.position > *cuts.last().unwrap() {
                cuts.push(f.position);
                vals.push(f.right_state.clone());
            } else {
                // zero-width interval: the earlier value never shows
                *vals.last_mut().unwrap() = f.right_state.clone();
            }
        }
        PcFn::new(cuts, vals).expect("configuration produces a valid profile")
    }

    /// The snapshot carried to time `t` by the linear motion of its
    /// fronts (valid between events).
    pub fn advected(&self, t: f64) -> Configuration {
        let mut moved = self.clone();
        let dt = t - self.time;
        for f in &mut moved.fronts {
            f.position += f.speed * dt;
        }
        moved.time = t;
        moved
    }

    /// Total strength of non-physical fronts.
    pub fn np_total(&self, n: usize) -> f64 {
        self.fronts
            .iter()
            .filter(|f| !f.is_physical(n))
            .map(|f| f.strength.abs())
            .sum()
    }

    /// Largest rarefaction-front strength.
    pub fn max_rarefaction(&self, sys: &dyn System) -> f64 {
        self.fronts
            .iter()
            .filter(|f| {
                f.is_physical(sys.n())
                    && f.strength > 0.0
                    && sys.field_kind(f.family) == crate::system::FieldKind::GenuinelyNonlinear
            })
            .fold(0.0, |m, f| m.max(f.strength))
    }

    /// Structural invariants: ordering, exact state chaining, boundary
    /// condition. `deep` additionally verifies each physical front's wave
    /// relation.
    pub fn validate(
        &self,
        sys: &dyn System,
        bdry: &Boundary,
        mode: CurveMode,
        deep: bool,
    ) -> Result<()> {
        let gamma = bdry.gamma.eval(self.time);
        let mut prev = &self.trace;
        let mut prev_x = gamma;
        for f in &self.fronts {
            if f.position < prev_x - 1e-9 {
                return Err(SolverError::InvariantViolation(format!(
                    "front {} out of order at x = {}",
                    f.id, f.position
                )));
            }
            if f.left_state != *prev {
                return Err(SolverError::InvariantViolation(format!(
                    "state chain broken at front {}",
                    f.id
                )));
            }
            if deep && f.is_physical(sys.n()) {
                let image = lax_curve(sys, &f.left_state, f.family, f.strength, mode)?;
                if (&image - &f.right_state).norm2() > 1e-8 {
                    return Err(SolverError::InvariantViolation(format!(
                        "front {} does not satisfy its wave relation",
                        f.id
                    )));
                }
            }
            prev = &f.right_state;
            prev_x = f.position;
        }
        let g = bdry.g_at(self.time);
        if (&bdry.bmap.eval(&self.trace) - &g).norm_inf() > 1e-8 {
            return Err(SolverError::InvariantViolation(
                "boundary condition violated by the trace state".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    FrontCollision(u64, u64),
    BoundaryHit(u64),
    BoundaryDataJump,
    /// Stamped by the operator-splitting driver, never scheduled here.
    SplitStep,
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub location: f64,
}

/// Signed changes of the potentials across one event.
#[derive(Debug, Clone, Copy, Default)]
pub struct FunctionalDeltas {
    pub dv: f64,
    pub dvg: f64,
    pub dq: f64,
    pub dupsilon: f64,
}

/// Structured event-log record.
#[derive(Debug, Clone)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub location: f64,
    pub incoming: Vec<(usize, f64)>,
    pub outgoing: Vec<(usize, f64)>,
    pub deltas: FunctionalDeltas,
}

#[derive(Debug, Clone, Copy)]
pub struct FunctionalSample {
    pub time: f64,
    pub v: f64,
    pub vg: f64,
    pub q: f64,
    pub upsilon: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub t_end: f64,
    /// Extra times at which to store snapshots.
    pub snapshot_times: Vec<f64>,
    /// Store a snapshot after every event (needed for traces).
    pub keep_event_snapshots: bool,
    /// Track the potentials along the run.
    pub log_functionals: bool,
}

impl RunOptions {
    pub fn to_time(t_end: f64) -> Self {
        RunOptions { t_end, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub final_config: Configuration,
    /// Snapshots: initial, per-event (if requested), requested times,
    /// final; sorted by time.
    pub trajectory: Vec<Configuration>,
    pub events: Vec<EventRecord>,
    pub functionals: Vec<FunctionalSample>,
}

/// The solver: immutable problem data plus parameters. All evolution
/// state lives in [`Configuration`], so a single engine can drive many
/// runs.
pub struct Engine<'a> {
    pub sys: &'a dyn System,
    pub bdry: &'a Boundary,
    pub params: SolverParams,
    pub weights: FunctionalWeights,
}

impl<'a> Engine<'a> {
    pub fn new(
        sys: &'a dyn System,
        bdry: &'a Boundary,
        params: SolverParams,
        weights: FunctionalWeights,
    ) -> Self {
        Engine { sys, bdry, params, weights }
    }

    /// Resolve piecewise-constant data into an initial configuration at
    /// time zero.
    pub fn init(&self, u0: &PcFn) -> Result<Configuration> {
        self.init_at(u0, 0.0)
    }

    /// Resolve piecewise-constant data into a configuration at time `t`:
    /// a boundary Riemann problem at `gamma(t)` and an accurate solve at
    /// every interior jump, rarefactions split into wavelets of size at
    /// most `epsilon`. All fronts receive generation 1.
    pub fn init_at(&self, u0: &PcFn, t: f64) -> Result<Configuration> {
        let base = self.sys.base_state();
        if u0.values().last().unwrap() != &base {
            return Err(SolverError::InvalidInput(
                "initial datum must equal the base state near +infinity".into(),
            ));
        }
        let gamma = self.bdry.gamma.eval(t);
        let u0 = u0.restrict_from(gamma, base.clone());
        let mut cfg = Configuration {
            time: t,
            fronts: Vec::new(),
            trace: State::zeros(self.sys.n()),
            next_id: 1,
        };

        // boundary Riemann problem at (t, gamma(t))
        let u_near = u0.eval(gamma).clone();
        let g_now = self.bdry.g_at(t);
        let bsol = solve_boundary_riemann(
            self.sys,
            self.bdry,
            &u_near,
            &g_now,
            BoundaryCurveKind::Lax,
            self.params.curve_mode,
        )?;
        cfg.trace = bsol.trace_state.clone();
        let mut fronts = self.fronts_from_fan(&mut cfg.next_id, &bsol.fan, gamma, true, &|_| 1)?;
        snap_last_right(&mut fronts, &u_near);

        // interior jumps, chained from the running state so sub-threshold
        // jitter is absorbed instead of leaking into the far field
        let mut current = u_near.clone();
        for (k, &x) in u0.cuts().iter().enumerate() {
            if x <= gamma {
                continue;
            }
            let target = &u0.values()[k + 1];
            let scale = 1.0 + current.norm_inf().max(target.norm_inf());
            if (target - &current).norm_inf() <= crate::riemann::WAVE_EPS * scale {
                continue;
            }
            let sol = solve_riemann(self.sys, &current, target, self.params.curve_mode)?;
            let mut batch = self.fronts_from_fan(&mut cfg.next_id, &sol.fan, x, true, &|_| 1)?;
            snap_last_right(&mut batch, target);
            if !batch.is_empty() {
                current = target.clone();
            }
            fronts.extend(batch);
        }
        // any residual jitter is folded into the last wave
        let tail = u0.values().last().unwrap();
        if current != *tail {
            if (&current - tail).norm_inf() > 1e-9 {
                return Err(SolverError::InvariantViolation(
                    "initial data resolution lost a jump".into(),
                ));
            }
            if let Some(last) = fronts.last_mut() {
                last.right_state = tail.clone();
            } else {
                cfg.trace = tail.clone();
            }
        }
        cfg.fronts = fronts;
        repair_chain(&mut cfg);

        if self.params.delta0.is_finite() {
            let report = functionals::compute_upsilon(
                self.sys,
                self.bdry,
                &cfg,
                &self.weights,
                functionals::UpsilonVariant::Approximate,
            )?;
            if report.upsilon > self.params.delta0 {
                return Err(SolverError::TVTooLarge(format!(
                    "initial functional {} exceeds delta0 = {}",
                    report.upsilon, self.params.delta0
                )));
            }
        }
        Ok(cfg)
    }

    /// Materialize a fan at position `x`, optionally splitting rarefaction
    /// waves into wavelets; `gen_of` assigns generation orders by family.
    fn fronts_from_fan(
        &self,
        next_id: &mut u64,
        fan: &[Wave],
        x: f64,
        split_rarefactions: bool,
        gen_of: &dyn Fn(usize) -> u32,
    ) -> Result<Vec<WaveFront>> {
        let mode = self.params.curve_mode;
        let eps = self.params.epsilon;
        let mut out = Vec::new();
        for wave in fan {
            let gen = gen_of(wave.family);
            match wave.kind {
                WaveKind::Shock | WaveKind::Contact => {
                    out.push(WaveFront {
                        id: bump(next_id),
                        position: x,
                        speed: wave.speed_lo,
                        family: wave.family,
                        strength: wave.strength,
                        generation: gen,
                        left_state: wave.left.clone(),
                        right_state: wave.right.clone(),
                    });
                }
                WaveKind::Rarefaction => {
                    let pieces = if split_rarefactions {
                        (wave.strength / eps).ceil().max(1.0) as usize
                    } else {
                        1
                    };
                    let ds = wave.strength / pieces as f64;
                    let mut left = wave.left.clone();
                    for k in 0..pieces {
                        let right = if k + 1 == pieces {
                            wave.right.clone()
                        } else {
                            rarefaction_curve(self.sys, &left, wave.family, ds, mode)?
                        };
                        // wavelets travel at the characteristic speed of
                        // their right state
                        let speed = eigen_decompose(self.sys, &right)?.0[wave.family - 1];
                        out.push(WaveFront {
                            id: bump(next_id),
                            position: x,
                            speed,
                            family: wave.family,
                            strength: ds,
                            generation: gen,
                            left_state: left.clone(),
                            right_state: right.clone(),
                        });
                        left = right;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Earliest upcoming event, if any. Ordered by perturbed time with a
    /// (time, position, id) lexicographic tie-break.
    pub fn next_event(&self, cfg: &Configuration) -> Option<Event> {
        let lam_hat = self.sys.lambda_hat();
        let mut best: Option<(f64, f64, u64, Event)> = None;
        let mut consider = |time: f64, pos: f64, id: u64, ev: Event| {
            let better = match &best {
                Some((t, p, i, _)) => {
                    (time, pos, id) < (*t, *p, *i) // all finite, plain order is total here
                }
                None => true,
            };
            if better {
                best = Some((time, pos, id, ev));
            }
        };

        for pair in cfg.fronts.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let dv = a.perturbed_speed(lam_hat) - b.perturbed_speed(lam_hat);
            if dv <= 0.0 {
                continue;
            }
            let gap = (b.position - a.position).max(0.0);
            let t = cfg.time + gap / dv;
            if t.is_finite() {
                let x = a.position + a.speed * (t - cfg.time);
                consider(
                    t,
                    x,
                    a.id.min(b.id),
                    Event { time: t, kind: EventKind::FrontCollision(a.id, b.id), location: x },
                );
            }
        }

        if let Some(first) = cfg.fronts.first() {
            if let Some(t) = self.boundary_hit_time(cfg.time, first) {
                let x = self.bdry.gamma.eval(t);
                consider(
                    t,
                    x,
                    first.id,
                    Event { time: t, kind: EventKind::BoundaryHit(first.id), location: x },
                );
            }
        }

        if let Some(tj) = self.bdry.next_data_jump(cfg.time) {
            let x = self.bdry.gamma.eval(tj);
            consider(tj, x, 0, Event { time: tj, kind: EventKind::BoundaryDataJump, location: x });
        }

        best.map(|(_, _, _, ev)| ev)
    }

    /// Time at which the boundary curve catches the front, if ever.
    fn boundary_hit_time(&self, now: f64, front: &WaveFront) -> Option<f64> {
        let lam_hat = self.sys.lambda_hat();
        let sp = front.perturbed_speed(lam_hat);
        let gamma = &self.bdry.gamma;
        let check_segment = |t0: f64, t1: f64, x0: f64, m: f64| -> Option<f64> {
            if m <= sp {
                return None; // boundary does not gain on the front
            }
            let tau = (front.position - sp * now - x0 + m * t0) / (m - sp);
            let lo = t0.max(now);
            if tau >= lo - 1e-12 && (tau <= t1 || !t1.is_finite()) {
                Some(tau.max(now))
            } else {
                None
            }
        };
        let mut earliest: Option<f64> = None;
        for (t0, t1, x0, x1) in gamma.segments() {
            if t1 < now {
                continue;
            }
            let m = (x1 - x0) / (t1 - t0);
            if let Some(t) = check_segment(t0, t1, x0, m) {
                earliest = Some(earliest.map_or(t, |e: f64| e.min(t)));
            }
        }
        // extension beyond the last vertex with the final slope
        let tl = *gamma.times.last().unwrap();
        let m = *gamma.slopes().last().unwrap();
        let t0 = tl.max(now);
        if let Some(t) = check_segment(t0, f64::INFINITY, gamma.eval(t0), m) {
            earliest = Some(earliest.map_or(t, |e: f64| e.min(t)));
        }
        earliest
    }

    /// Apply the earliest event. Returns `None` when the configuration
    /// evolves freely forever.
    pub fn step(&self, cfg: &Configuration) -> Result<Option<(Configuration, Event, EventRecord)>> {
        match self.next_event(cfg) {
            None => Ok(None),
            Some(ev) => {
                let mut next = cfg.clone();
                let record = self.apply_event(&mut next, &ev)?;
                Ok(Some((next, ev, record)))
            }
        }
    }

    fn apply_event(&self, cfg: &mut Configuration, ev: &Event) -> Result<EventRecord> {
        move_fronts(cfg, ev.time);
        match &ev.kind {
            EventKind::FrontCollision(a, b) => self.apply_collision(cfg, ev, *a, *b),
            EventKind::BoundaryHit(id) => self.apply_boundary_hit(cfg, ev, *id),
            EventKind::BoundaryDataJump => self.apply_data_jump(cfg, ev),
            EventKind::SplitStep => {
                Err(SolverError::InvalidInput("split steps are driven externally".into()))
            }
        }
    }

    fn apply_collision(
        &self,
        cfg: &mut Configuration,
        ev: &Event,
        id_a: u64,
        id_b: u64,
    ) -> Result<EventRecord> {
        let n = self.sys.n();
        let ia = cfg
            .fronts
            .iter()
            .position(|f| f.id == id_a)
            .ok_or_else(|| SolverError::InvariantViolation("stale collision event".into()))?;
        if ia + 1 >= cfg.fronts.len() || cfg.fronts[ia + 1].id != id_b {
            return Err(SolverError::InvariantViolation(
                "collision partners are no longer adjacent".into(),
            ));
        }
        let a = cfg.fronts[ia].clone();
        let b = cfg.fronts[ia + 1].clone();
        let x = 0.5 * (a.position + b.position);
        let u_l = a.left_state.clone();
        let u_r = b.right_state.clone();
        let incoming = vec![(a.family, a.strength), (b.family, b.strength)];

        let a_phys = a.is_physical(n);
        let b_phys = b.is_physical(n);
        let accurate = a_phys && b_phys && (a.strength * b.strength).abs() >= self.params.rho;

        let mut out: Vec<WaveFront>;
        if accurate {
            let sol = solve_riemann(self.sys, &u_l, &u_r, self.params.curve_mode)?;
            let gen_of = |fam: usize| -> u32 {
                if fam == a.family && fam == b.family {
                    a.generation.min(b.generation)
                } else if fam == a.family {
                    a.generation
                } else if fam == b.family {
                    b.generation
                } else {
                    a.generation.max(b.generation) + 1
                }
            };
            // rarefactions are not split further at interactions
            out = self.fronts_from_fan(&mut cfg.next_id, &sol.fan, x, false, &gen_of)?;
            snap_last_right(&mut out, &u_r);
            if out.is_empty() && u_l != u_r {
                return Err(SolverError::InvariantViolation(
                    "accurate solver lost a nonzero jump".into(),
                ));
            }
        } else {
            out = self.simplified_outgoing(cfg, &a, &b, x)?;
        }
        for f in &mut out {
            f.position = x;
        }

        let deltas = self.local_deltas(cfg, ia, 2, &out);
        cfg.fronts.splice(ia..ia + 2, out.clone());
        repair_chain(cfg);
        Ok(EventRecord {
            time: ev.time,
            kind: ev.kind.clone(),
            location: x,
            incoming,
            outgoing: out.iter().map(|f| (f.family, f.strength)).collect(),
            deltas,
        })
    }

    /// The simplified solver: keep the incoming physical waves (merged
    /// when they share a family), re-anchored at the left state, and lump
    /// the residual into a non-physical front at speed `lambda_hat`.
    fn simplified_outgoing(
        &self,
        cfg: &mut Configuration,
        a: &WaveFront,
        b: &WaveFront,
        x: f64,
    ) -> Result<Vec<WaveFront>> {
        let n = self.sys.n();
        let mode = self.params.curve_mode;
        let lam_hat = self.sys.lambda_hat();
        let u_l = a.left_state.clone();
        let u_r = b.right_state.clone();

        // (family, strength, generation) of the physical part, slow first
        let mut phys: Vec<(usize, f64, u32)> = Vec::new();
        let mut np_gen = a.generation.max(b.generation) + 1;
        match (a.is_physical(n), b.is_physical(n)) {
            (true, true) => {
                if a.family == b.family {
                    phys.push((
                        a.family,
                        a.strength + b.strength,
                        a.generation.min(b.generation),
                    ));
                } else {
                    let (slow, fast) = if a.family < b.family { (a, b) } else { (b, a) };
                    phys.push((slow.family, slow.strength, slow.generation));
                    phys.push((fast.family, fast.strength, fast.generation));
                }
            }
            (false, true) => {
                phys.push((b.family, b.strength, b.generation));
                np_gen = a.generation; // the non-physical front passes through
            }
            (true, false) => {
                // a physical front cannot catch a non-physical one
                return Err(SolverError::InvariantViolation(
                    "physical front overtook a non-physical front".into(),
                ));
            }
            (false, false) => {
                np_gen = a.generation.min(b.generation);
            }
        }

        let mut out = Vec::new();
        let mut w = u_l.clone();
        for (fam, s, gen) in phys {
            if s.abs() <= WAVE_EPS {
                continue;
            }
            let fan = build_fan(self.sys, &w, fam, &[s], mode)?;
            let mut fr = self.fronts_from_fan(&mut cfg.next_id, &fan, x, false, &|_| gen)?;
            if let Some(last) = fr.last() {
                w = last.right_state.clone();
            }
            out.append(&mut fr);
        }
        let residual = &u_r - &w;
        if residual.norm2() > 0.0 {
            out.push(WaveFront {
                id: bump(&mut cfg.next_id),
                position: x,
                speed: lam_hat,
                family: n + 1,
                strength: residual.norm2(),
                generation: np_gen,
                left_state: w,
                right_state: u_r,
            });
        } else if let Some(last) = out.last_mut() {
            last.right_state = u_r;
        }
        Ok(out)
    }

    fn apply_boundary_hit(
        &self,
        cfg: &mut Configuration,
        ev: &Event,
        id: u64,
    ) -> Result<EventRecord> {
        let n = self.sys.n();
        if cfg.fronts.first().map(|f| f.id) != Some(id) {
            return Err(SolverError::InvariantViolation(
                "boundary hit by a non-leftmost front".into(),
            ));
        }
        let hit = cfg.fronts[0].clone();
        if !hit.is_physical(n) {
            // excluded by the slope hypothesis: lambda_hat strictly exceeds
            // every admissible boundary slope
            return Err(SolverError::InvariantViolation(
                "non-physical front reached the boundary".into(),
            ));
        }
        if hit.family > self.bdry.ell {
            return Err(SolverError::InvariantViolation(format!(
                "outgoing-family front {} reached the boundary",
                hit.id
            )));
        }
        // coalesce with a data jump landing within the tolerance window
        let mut t_eff = ev.time;
        let mut dvg = 0.0;
        if let Some(tj) = self.bdry.next_data_jump(ev.time) {
            if tj <= ev.time + self.params.coalesce_tol {
                let before = self.bdry.gdata.eval_left(tj).clone();
                let after = self.bdry.gdata.eval(tj).clone();
                dvg = -(&after - &before).norm1();
                t_eff = tj;
            }
        }
        let g_now = self.bdry.g_at(t_eff);
        let u_r = hit.right_state.clone();
        let x = self.bdry.gamma.eval(t_eff);
        let bsol = solve_boundary_riemann(
            self.sys,
            self.bdry,
            &u_r,
            &g_now,
            BoundaryCurveKind::Lax,
            self.params.curve_mode,
        )?;
        // reflected waves keep the order of the incident wave
        let mut out =
            self.fronts_from_fan(&mut cfg.next_id, &bsol.fan, x, false, &|_| hit.generation)?;
        snap_last_right(&mut out, &u_r);

        let mut deltas = self.local_deltas(cfg, 0, 1, &out);
        deltas.dvg = dvg;
        deltas.dupsilon += self.weights.h1 * dvg;

        cfg.time = t_eff;
        cfg.trace = bsol.trace_state;
        cfg.fronts.splice(0..1, out.clone());
        for f in &mut cfg.fronts {
            f.position = f.position.max(x);
        }
        repair_chain(cfg);
        Ok(EventRecord {
            time: t_eff,
            kind: ev.kind.clone(),
            location: x,
            incoming: vec![(hit.family, hit.strength)],
            outgoing: out.iter().map(|f| (f.family, f.strength)).collect(),
            deltas,
        })
    }

    fn apply_data_jump(&self, cfg: &mut Configuration, ev: &Event) -> Result<EventRecord> {
        let g_before = self.bdry.gdata.eval_left(ev.time).clone();
        let g_now = self.bdry.g_at(ev.time);
        let x = self.bdry.gamma.eval(ev.time);

        // absorb a front that reaches the boundary within the window
        let mut incoming: Vec<(usize, f64)> = Vec::new();
        let mut removed = 0usize;
        let mut u_o = cfg.trace.clone();
        if let Some(first) = cfg.fronts.first() {
            if let Some(th) = self.boundary_hit_time(cfg.time, first) {
                if th <= ev.time + self.params.coalesce_tol {
                    incoming.push((first.family, first.strength));
                    u_o = first.right_state.clone();
                    removed = 1;
                }
            }
        }

        let bsol = solve_boundary_riemann(
            self.sys,
            self.bdry,
            &u_o,
            &g_now,
            BoundaryCurveKind::Lax,
            self.params.curve_mode,
        )?;
        // data-born waves: order 1, rarefactions split into wavelets
        let mut out = self.fronts_from_fan(&mut cfg.next_id, &bsol.fan, x, true, &|_| 1)?;
        snap_last_right(&mut out, &u_o);

        let mut deltas = self.local_deltas(cfg, 0, removed, &out);
        deltas.dvg = -(&g_now - &g_before).norm1();
        deltas.dupsilon += self.weights.h1 * deltas.dvg;

        cfg.trace = bsol.trace_state;
        cfg.fronts.splice(0..removed, out.clone());
        for f in &mut cfg.fronts {
            f.position = f.position.max(x);
        }
        repair_chain(cfg);
        Ok(EventRecord {
            time: ev.time,
            kind: ev.kind.clone(),
            location: x,
            incoming,
            outgoing: out.iter().map(|f| (f.family, f.strength)).collect(),
            deltas,
        })
    }

    /// Exact change of V and Q when `count` fronts starting at list index
    /// `at` are replaced by `out`.
    fn local_deltas(
        &self,
        cfg: &Configuration,
        at: usize,
        count: usize,
        out: &[WaveFront],
    ) -> FunctionalDeltas {
        let ell = self.bdry.ell;
        let w = &self.weights;
        let vweight = |fam: usize| if fam <= ell { w.k } else { 1.0 };

        let v_of =
            |fs: &[WaveFront]| -> f64 { fs.iter().map(|f| vweight(f.family) * f.strength.abs()).sum() };
        let old = &cfg.fronts[at..at + count];
        let dv = v_of(out) - v_of(old);

        // quadratic potential: pairs inside the replaced block plus pairs
        // crossing into the unchanged fronts
        let mut dq = 0.0;
        let approaching = |lf: &WaveFront, rf: &WaveFront| -> bool {
            functionals::approaching(self.sys, lf.family, lf.strength, rf.family, rf.strength)
        };
        let pair_sum = |fs: &[WaveFront]| -> f64 {
            let mut s = 0.0;
            for i in 0..fs.len() {
                for j in i + 1..fs.len() {
                    if approaching(&fs[i], &fs[j]) {
                        s += (fs[i].strength * fs[j].strength).abs();
                    }
                }
            }
            s
        };
        dq += pair_sum(out) - pair_sum(old);
        for (idx, rest) in cfg.fronts.iter().enumerate() {
            if idx >= at && idx < at + count {
                continue;
            }
            let on_left = idx < at;
            for f in old {
                let q = if on_left { approaching(rest, f) } else { approaching(f, rest) };
                if q {
                    dq -= (rest.strength * f.strength).abs();
                }
            }
            for f in out {
                let q = if on_left { approaching(rest, f) } else { approaching(f, rest) };
                if q {
                    dq += (rest.strength * f.strength).abs();
                }
            }
        }
        FunctionalDeltas { dv, dvg: 0.0, dq, dupsilon: dv + w.h2 * dq }
    }

    /// Process events up to `t_target`, then move fronts to `t_target`.
    pub fn advance_to(
        &self,
        cfg: &mut Configuration,
        t_target: f64,
        log: &mut RunLog,
    ) -> Result<()> {
        loop {
            if log.events.len() as u64 >= self.params.event_budget {
                return Err(SolverError::EventBudgetExceeded(self.params.event_budget));
            }
            match self.next_event(cfg) {
                Some(ev) if ev.time <= t_target => {
                    let record = self.apply_event(cfg, &ev)?;
                    log.push_event(self, cfg, record)?;
                }
                _ => break,
            }
        }
        move_fronts(cfg, t_target);
        Ok(())
    }

    /// Full run from piecewise-constant data.
    pub fn run(&self, u0: &PcFn, opts: &RunOptions) -> Result<RunResult> {
        let cfg = self.init(u0)?;
        self.run_from(cfg, opts)
    }

    pub fn run_from(&self, mut cfg: Configuration, opts: &RunOptions) -> Result<RunResult> {
        let mut log = RunLog::new(opts.clone());
        log.push_snapshot(self, &cfg, true)?;
        let mut stops: Vec<f64> = opts
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > cfg.time && t < opts.t_end)
            .collect();
        stops.push(opts.t_end);
        stops.sort_by(|a, b| a.total_cmp(b));
        stops.dedup();
        for stop in stops {
            self.advance_to(&mut cfg, stop, &mut log)?;
            log.push_snapshot(self, &cfg, false)?;
        }
        Ok(RunResult {
            final_config: cfg,
            trajectory: log.trajectory,
            events: log.events,
            functionals: log.functionals,
        })
    }
}

/// Collects the event log, snapshots and functional series during a run.
pub struct RunLog {
    opts: RunOptions,
    pub trajectory: Vec<Configuration>,
    pub events: Vec<EventRecord>,
    pub functionals: Vec<FunctionalSample>,
    running: Option<(f64, f64, f64)>, // (v, vg, q)
}

impl RunLog {
    pub fn new(opts: RunOptions) -> Self {
        RunLog {
            opts,
            trajectory: Vec::new(),
            events: Vec::new(),
            functionals: Vec::new(),
            running: None,
        }
    }

    fn push_event(&mut self, eng: &Engine, cfg: &Configuration, record: EventRecord) -> Result<()> {
        if self.opts.keep_event_snapshots {
            self.trajectory.push(cfg.clone());
        }
        if self.opts.log_functionals {
            let (v, vg, q) = match self.running {
                Some((v, vg, q)) => {
                    (v + record.deltas.dv, vg + record.deltas.dvg, q + record.deltas.dq)
                }
                None => {
                    let r = functionals::compute_upsilon(
                        eng.sys,
                        eng.bdry,
                        cfg,
                        &eng.weights,
                        functionals::UpsilonVariant::Approximate,
                    )?;
                    (r.v, r.vg, r.q)
                }
            };
            self.running = Some((v, vg, q));
            self.functionals.push(FunctionalSample {
                time: record.time,
                v,
                vg,
                q,
                upsilon: v + eng.weights.h1 * vg + eng.weights.h2 * q,
            });
        }
        self.events.push(record);
        Ok(())
    }

    /// Record an externally driven event (an operator-splitting step):
    /// the running potentials are recomputed because the state changed
    /// outside the event loop.
    pub fn note_external_event(
        &mut self,
        eng: &Engine,
        cfg: &Configuration,
        record: EventRecord,
    ) -> Result<()> {
        if self.opts.keep_event_snapshots {
            self.trajectory.push(cfg.clone());
        }
        if self.opts.log_functionals {
            let r = functionals::compute_upsilon(
                eng.sys,
                eng.bdry,
                cfg,
                &eng.weights,
                functionals::UpsilonVariant::Approximate,
            )?;
            self.running = Some((r.v, r.vg, r.q));
            self.functionals.push(FunctionalSample {
                time: record.time,
                v: r.v,
                vg: r.vg,
                q: r.q,
                upsilon: r.upsilon,
            });
        }
        self.events.push(record);
        Ok(())
    }

    pub fn note_snapshot(&mut self, eng: &Engine, cfg: &Configuration, initial: bool) -> Result<()> {
        self.push_snapshot(eng, cfg, initial)
    }

    fn push_snapshot(&mut self, eng: &Engine, cfg: &Configuration, initial: bool) -> Result<()> {
        self.trajectory.push(cfg.clone());
        if self.opts.log_functionals && initial {
            let r = functionals::compute_upsilon(
                eng.sys,
                eng.bdry,
                cfg,
                &eng.weights,
                functionals::UpsilonVariant::Approximate,
            )?;
            self.running = Some((r.v, r.vg, r.q));
            self.functionals.push(FunctionalSample {
                time: cfg.time,
                v: r.v,
                vg: r.vg,
                q: r.q,
                upsilon: r.upsilon,
            });
        }
        Ok(())
    }
}

fn bump(next_id: &mut u64) -> u64 {
    let id = *next_id;
    *next_id += 1;
    id
}

fn move_fronts(cfg: &mut Configuration, t: f64) {
    let dt = t - cfg.time;
    if dt != 0.0 {
        for f in &mut cfg.fronts {
            f.position += f.speed * dt;
        }
        cfg.time = t;
    }
}

/// Force exact state chaining left to right, keeping each front's own
/// jump. List order is the logical order; positions may carry harmless
/// sub-tolerance noise, so no re-sort happens here.
fn repair_chain(cfg: &mut Configuration) {
    let mut prev = cfg.trace.clone();
    for f in &mut cfg.fronts {
        if f.left_state != prev {
            let jump = &f.right_state - &f.left_state;
            f.left_state = prev.clone();
            f.right_state = &f.left_state + &jump;
        }
        prev = f.right_state.clone();
    }
}

fn snap_last_right(fronts: &mut [WaveFront], target: &State) {
    if let Some(last) = fronts.last_mut() {
        last.right_state = target.clone();
    }
}
