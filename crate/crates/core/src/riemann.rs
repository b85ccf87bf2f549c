//! Interior and boundary Riemann solvers.
//!
//! The interior solver inverts the gluing of Lax curves: it finds the
//! strength vector mapping the left state onto the right state. The
//! boundary solver finds the outgoing strengths (families `ell+1..=n`)
//! and the trace state whose boundary-map value matches the datum.

use crate::boundary::{jacobian_of_map, Boundary};
use crate::curves::{glue_lax, inverse_lax_curve, rarefaction_curve, shock_curve, CURVE_TOL};
use crate::error::{Result, SolverError};
use crate::linalg::{solve, Mat};
use crate::state::State;
use crate::system::{eigen_decompose, CurveMode, FieldKind, System};

/// Strengths below this threshold produce no wave in a fan.
pub const WAVE_EPS: f64 = 1e-13;

/// Newton iterates are rejected once any strength magnitude exceeds the
/// trust radius; the underlying implicit-function argument is local and
/// gives no radius, so we fail loudly instead of extrapolating. The
/// default scales with the system's speed spread, the natural unit of
/// the strength normalization.
pub fn default_trust_radius(sys: &dyn System) -> f64 {
    2.0 * sys.lambda_hat()
}

const MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Shock,
    Contact,
    Rarefaction,
}

/// One elementary wave of a self-similar fan.
#[derive(Debug, Clone)]
pub struct Wave {
    pub family: usize,
    pub kind: WaveKind,
    pub strength: f64,
    /// Propagation speed; for rarefactions the closed speed interval.
    pub speed_lo: f64,
    pub speed_hi: f64,
    pub left: State,
    pub right: State,
}

impl Wave {
    pub fn speed(&self) -> f64 {
        0.5 * (self.speed_lo + self.speed_hi)
    }
}

/// Solution of an interior Riemann problem.
#[derive(Debug, Clone)]
pub struct RiemannSolution {
    pub left: State,
    pub right: State,
    /// Signed strengths per family, `strengths[i]` for family `i + 1`.
    pub strengths: Vec<f64>,
    pub fan: Vec<Wave>,
}

/// Solution of the boundary Riemann problem.
#[derive(Debug, Clone)]
pub struct BoundaryRiemannSolution {
    /// The state taken on at the boundary (`u^sigma` or `u^q`).
    pub trace_state: State,
    /// Outgoing strengths, entry `k` for family `ell + 1 + k`.
    pub strengths: Vec<f64>,
    pub fan: Vec<Wave>,
}

/// Which one-parameter curves the boundary solver composes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCurveKind {
    Lax,
    Shock,
}

/// Invert the Lax-curve gluing: find strengths with
/// `glue_lax(u_minus, strengths) = u_plus`.
pub fn solve_riemann(
    sys: &dyn System,
    u_minus: &State,
    u_plus: &State,
    mode: CurveMode,
) -> Result<RiemannSolution> {
    let n = sys.n();
    let scale = 1.0 + u_minus.norm_inf().max(u_plus.norm_inf());
    let jump = u_plus - u_minus;
    if jump.norm_inf() < WAVE_EPS * scale {
        return Ok(RiemannSolution {
            left: u_minus.clone(),
            right: u_plus.clone(),
            strengths: vec![0.0; n],
            fan: vec![],
        });
    }

    // first-order guess: coordinates of the jump in the eigenbasis at the
    // midpoint state
    let mid = &(u_minus + u_plus) * 0.5;
    let guess = eigen_coordinates(sys, &mid, &jump)?;
    let glue = |sig: &[f64]| glue_lax(sys, u_minus, sig, mode);
    let sig = newton_invert(&glue, guess, u_plus, scale, default_trust_radius(sys))?;
    assemble_interior(sys, u_minus, u_plus, sig, mode)
}

/// Coordinates of `vec` in the right-eigenvector basis at `at`.
pub fn eigen_coordinates(sys: &dyn System, at: &State, vec: &State) -> Result<Vec<f64>> {
    let n = sys.n();
    let (_, rvecs) = eigen_decompose(sys, at)?;
    let mut basis = Mat::zeros(n);
    for (j, r) in rvecs.iter().enumerate() {
        for i in 0..n {
            basis.set(i, j, r[i]);
        }
    }
    solve(&basis, &vec.0)
}

/// Shock-coordinate vector: the `q` with `glue_shock(u, q) = w`.
pub fn solve_q_coordinates(
    sys: &dyn System,
    u: &State,
    w: &State,
    mode: CurveMode,
) -> Result<Vec<f64>> {
    let n = sys.n();
    let scale = 1.0 + u.norm_inf().max(w.norm_inf());
    let jump = w - u;
    if jump.norm_inf() < WAVE_EPS * scale {
        return Ok(vec![0.0; n]);
    }
    let mid = &(u + w) * 0.5;
    let guess = eigen_coordinates(sys, &mid, &jump)?;
    let glue = |q: &[f64]| crate::curves::glue_shock(sys, u, q, mode);
    newton_invert(&glue, guess, w, scale, default_trust_radius(sys))
}

/// Newton inversion of a strength-gluing map. Iterates past the nominal
/// tolerance toward machine precision so downstream identities (trace
/// states, chained flanks) hold essentially exactly.
fn newton_invert(
    glue: &dyn Fn(&[f64]) -> Result<State>,
    mut sig: Vec<f64>,
    target: &State,
    scale: f64,
    trust_radius: f64,
) -> Result<Vec<f64>> {
    let n = sig.len();
    let tol = CURVE_TOL * scale;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..MAX_ITER {
        let image = glue(&sig)?;
        let res = &image - target;
        let rn = res.norm_inf();
        if best.as_ref().is_none_or(|(_, b)| rn < *b) {
            best = Some((sig.clone(), rn));
        }
        if rn < 0.01 * tol {
            return Ok(sig);
        }
        if sig.iter().any(|s| s.abs() > trust_radius) {
            break;
        }
        // finite-difference Jacobian in the strengths
        let mut m = Mat::zeros(n);
        let h = 1e-7;
        for j in 0..n {
            let mut sp = sig.clone();
            sp[j] += h;
            let mut sm = sig.clone();
            sm[j] -= h;
            let ip = glue(&sp)?;
            let im = glue(&sm)?;
            for i in 0..n {
                m.set(i, j, (ip[i] - im[i]) / (2.0 * h));
            }
        }
        let neg: Vec<f64> = res.0.iter().map(|x| -x).collect();
        let delta = solve(&m, &neg)?;
        for j in 0..n {
            sig[j] += delta[j];
        }
    }
    match best {
        Some((sig, rn)) if rn < tol => Ok(sig),
        _ => Err(SolverError::NoConvergence(
            "gluing inversion exhausted its iterations".into(),
        )),
    }
}

fn assemble_interior(
    sys: &dyn System,
    u_minus: &State,
    u_plus: &State,
    strengths: Vec<f64>,
    mode: CurveMode,
) -> Result<RiemannSolution> {
    let fan = build_fan(sys, u_minus, 1, &strengths, mode)?;
    Ok(RiemannSolution {
        left: u_minus.clone(),
        right: u_plus.clone(),
        strengths,
        fan,
    })
}

/// Chain elementary waves for consecutive families starting at
/// `first_family`, skipping negligible strengths.
pub fn build_fan(
    sys: &dyn System,
    left: &State,
    first_family: usize,
    strengths: &[f64],
    mode: CurveMode,
) -> Result<Vec<Wave>> {
    let mut fan = Vec::new();
    let mut w = left.clone();
    for (k, &s) in strengths.iter().enumerate() {
        let family = first_family + k;
        if s.abs() <= WAVE_EPS {
            continue;
        }
        let kind = match sys.field_kind(family) {
            FieldKind::LinearlyDegenerate => WaveKind::Contact,
            FieldKind::GenuinelyNonlinear => {
                if s > 0.0 {
                    WaveKind::Rarefaction
                } else {
                    WaveKind::Shock
                }
            }
        };
        let (right, lo, hi) = match kind {
            WaveKind::Rarefaction => {
                let r = rarefaction_curve(sys, &w, family, s, mode)?;
                let lam_l = eigen_decompose(sys, &w)?.0[family - 1];
                let lam_r = eigen_decompose(sys, &r)?.0[family - 1];
                (r, lam_l, lam_r)
            }
            WaveKind::Shock | WaveKind::Contact => {
                let (r, speed) = shock_curve(sys, &w, family, s, mode)?;
                (r, speed, speed)
            }
        };
        fan.push(Wave {
            family,
            kind,
            strength: s,
            speed_lo: lo,
            speed_hi: hi,
            left: w.clone(),
            right: right.clone(),
        });
        w = right;
    }
    Ok(fan)
}

/// Self-similar evaluation of a fan at slope `xi = x / t`.
pub fn evaluate_fan(
    sys: &dyn System,
    sol: &RiemannSolution,
    xi: f64,
    mode: CurveMode,
) -> Result<State> {
    evaluate_waves(sys, &sol.fan, &sol.left, xi, mode)
}

pub fn evaluate_waves(
    sys: &dyn System,
    fan: &[Wave],
    left: &State,
    xi: f64,
    mode: CurveMode,
) -> Result<State> {
    let mut state = left.clone();
    for wave in fan {
        match wave.kind {
            WaveKind::Shock | WaveKind::Contact => {
                if xi < wave.speed_lo {
                    return Ok(state);
                }
                state = wave.right.clone();
            }
            WaveKind::Rarefaction => {
                if xi < wave.speed_lo {
                    return Ok(state);
                }
                if xi <= wave.speed_hi {
                    // the normalization makes the interior state the one
                    // whose characteristic speed equals xi
                    return rarefaction_curve(sys, &wave.left, wave.family, xi - wave.speed_lo, mode);
                }
                state = wave.right.clone();
            }
        }
    }
    Ok(state)
}

/// Solve the boundary Riemann problem: find the outgoing strengths and
/// the trace state `u` with `b(u) = g_o` such that the outgoing waves
/// connect it to the interior state `u_o`.
pub fn solve_boundary_riemann(
    sys: &dyn System,
    bdry: &Boundary,
    u_o: &State,
    g_o: &State,
    curve_kind: BoundaryCurveKind,
    mode: CurveMode,
) -> Result<BoundaryRiemannSolution> {
    solve_boundary_riemann_with(sys, bdry, u_o, g_o, curve_kind, mode, default_trust_radius(sys))
}

/// As [`solve_boundary_riemann`] with an explicit Newton trust radius.
pub fn solve_boundary_riemann_with(
    sys: &dyn System,
    bdry: &Boundary,
    u_o: &State,
    g_o: &State,
    curve_kind: BoundaryCurveKind,
    mode: CurveMode,
    trust_radius: f64,
) -> Result<BoundaryRiemannSolution> {
    let n = sys.n();
    let ell = bdry.ell;
    let m = n - ell;
    if m == 0 {
        return Ok(BoundaryRiemannSolution {
            trace_state: u_o.clone(),
            strengths: vec![],
            fan: vec![],
        });
    }
    if g_o.dim() != m {
        return Err(SolverError::InvalidInput(format!(
            "boundary datum has dimension {}, expected {m}",
            g_o.dim()
        )));
    }

    // trace state as a function of the outgoing strengths: peel the
    // outgoing waves off the interior state, top family first
    let backtrack = |sig: &[f64]| -> Result<State> {
        let mut w = u_o.clone();
        for k in (0..m).rev() {
            let family = ell + 1 + k;
            w = match curve_kind {
                BoundaryCurveKind::Lax => inverse_lax_curve(sys, &w, family, -sig[k], mode)?,
                BoundaryCurveKind::Shock => shock_curve(sys, &w, family, -sig[k], mode)?.0,
            };
        }
        Ok(w)
    };
    let residual = |sig: &[f64]| -> Result<State> {
        let trace = backtrack(sig)?;
        Ok(&bdry.bmap.eval(&trace) - g_o)
    };

    // linearized guess from the determinant matrix at the interior state
    let (_, rvecs) = eigen_decompose(sys, u_o)?;
    let db = jacobian_of_map(bdry.bmap.as_ref(), u_o);
    let mut lin = Mat::zeros(m);
    for k in 0..m {
        for (i, row) in db.iter().enumerate() {
            lin.set(i, k, row.dot(&rvecs[ell + k]));
        }
    }
    let rhs: Vec<f64> = (&bdry.bmap.eval(u_o) - g_o).0;
    let mut sig = solve(&lin, &rhs)?;

    let tol = CURVE_TOL * (1.0 + g_o.norm_inf() + u_o.norm_inf());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..MAX_ITER {
        let res = residual(&sig)?;
        let rn = res.norm_inf();
        if best.as_ref().is_none_or(|(_, b)| rn < *b) {
            best = Some((sig.clone(), rn));
        }
        if rn < 0.01 * tol {
            break;
        }
        if sig.iter().any(|s| s.abs() > trust_radius) {
            if best.as_ref().is_none_or(|(_, b)| *b >= tol) {
                return Err(SolverError::NoConvergence(format!(
                    "boundary Riemann strengths left the trust radius {trust_radius}"
                )));
            }
            break;
        }
        let h = 1e-7;
        let mut jac = Mat::zeros(m);
        for j in 0..m {
            let mut sp = sig.clone();
            sp[j] += h;
            let mut sm = sig.clone();
            sm[j] -= h;
            let rp = residual(&sp)?;
            let rm = residual(&sm)?;
            for i in 0..m {
                jac.set(i, j, (rp[i] - rm[i]) / (2.0 * h));
            }
        }
        let neg: Vec<f64> = res.0.iter().map(|x| -x).collect();
        let delta = solve(&jac, &neg)?;
        for j in 0..m {
            sig[j] += delta[j];
        }
    }
    match best {
        Some((sig, rn)) if rn < tol => {
            let trace = backtrack(&sig)?;
            let fan = match curve_kind {
                BoundaryCurveKind::Lax => build_fan(sys, &trace, ell + 1, &sig, mode)?,
                BoundaryCurveKind::Shock => build_shock_fan(sys, &trace, ell + 1, &sig, mode)?,
            };
            Ok(BoundaryRiemannSolution { trace_state: trace, strengths: sig, fan })
        }
        _ => Err(SolverError::NoConvergence(
            "boundary Riemann Newton exhausted its iterations".into(),
        )),
    }
}

/// Fan of plain Rankine-Hugoniot jumps (used by the shock-coordinate
/// boundary map; admissibility is not enforced here).
fn build_shock_fan(
    sys: &dyn System,
    left: &State,
    first_family: usize,
    strengths: &[f64],
    mode: CurveMode,
) -> Result<Vec<Wave>> {
    let mut fan = Vec::new();
    let mut w = left.clone();
    for (k, &s) in strengths.iter().enumerate() {
        let family = first_family + k;
        if s.abs() <= WAVE_EPS {
            continue;
        }
        let (right, speed) = shock_curve(sys, &w, family, s, mode)?;
        fan.push(Wave {
            family,
            kind: if sys.field_kind(family) == FieldKind::LinearlyDegenerate {
                WaveKind::Contact
            } else {
                WaveKind::Shock
            },
            strength: s,
            speed_lo: speed,
            speed_hi: speed,
            left: w.clone(),
            right: right.clone(),
        });
        w = right;
    }
    Ok(fan)
}
