//! Replacement of general data by admissible piecewise-constant
//! approximations.

use std::sync::Arc;

use crate::engine::Engine;
use crate::error::{Result, SolverError};
use crate::functionals;
use crate::pcfn::PcFn;
use crate::state::State;

/// A datum that may need approximation.
pub enum Profile {
    /// Already piecewise constant; passed through unchanged (zero error).
    Piecewise(PcFn),
    /// Sampled profile on `[lo, hi]`, equal to `outside` elsewhere.
    Sampled {
        eval: Arc<dyn Fn(f64) -> State + Send + Sync>,
        lo: f64,
        hi: f64,
        outside: State,
    },
}

/// Approximate initial and boundary data by piecewise-constant functions:
/// L1 error below `epsilon` for the initial datum, sup error below
/// `epsilon` for the boundary datum. Boundary values are sampled from the
/// signal itself so the staircase's tail variation never exceeds the
/// original's. Rejects data whose total variation exceeds `delta0`.
pub fn approximate_data(eng: &Engine, u0: &Profile, g: &Profile, delta0: f64) -> Result<(PcFn, PcFn)> {
    let eps = eng.params.epsilon;
    let u0_pc = match u0 {
        Profile::Piecewise(pc) => pc.clone(),
        Profile::Sampled { eval, lo, hi, outside } => {
            sample_midpoints(eng, eval.as_ref(), *lo, *hi, outside.clone(), eps)?
        }
    };
    let g_pc = match g {
        Profile::Piecewise(pc) => pc.clone(),
        Profile::Sampled { eval, lo, hi, outside } => {
            sample_values(eval.as_ref(), *lo, *hi, outside.clone(), eps)?
        }
    };
    if u0_pc.tv() > delta0 {
        return Err(SolverError::TVTooLarge(format!("TV(u0) = {} exceeds {delta0}", u0_pc.tv())));
    }
    if g_pc.tv() > delta0 {
        return Err(SolverError::TVTooLarge(format!("TV(g) = {} exceeds {delta0}", g_pc.tv())));
    }
    Ok((u0_pc, g_pc))
}

/// Midpoint staircase with enough cells that both the L1 error and the
/// functional gap (each measured against a 16x finer staircase) drop
/// below `eps / 2`.
fn sample_midpoints(
    eng: &Engine,
    f: &dyn Fn(f64) -> State,
    lo: f64,
    hi: f64,
    outside: State,
    eps: f64,
) -> Result<PcFn> {
    let ups = |pc: &PcFn| -> Result<f64> {
        Ok(functionals::upsilon_of_function(
            eng.sys,
            eng.bdry,
            pc,
            0.0,
            &eng.weights,
            eng.params.curve_mode,
        )?
        .upsilon)
    };
    let mut m = 8usize;
    for _ in 0..16 {
        let coarse = staircase(f, lo, hi, outside.clone(), m)?;
        let fine = staircase(f, lo, hi, outside.clone(), m * 16)?;
        if coarse.l1_distance(&fine) < 0.5 * eps
            && (ups(&coarse)? - ups(&fine)?).abs() < 0.5 * eps
        {
            return Ok(coarse);
        }
        m *= 2;
    }
    Err(SolverError::NoConvergence(
        "initial-datum approximation did not reach the L1 target".into(),
    ))
}

fn staircase(
    f: &dyn Fn(f64) -> State,
    lo: f64,
    hi: f64,
    outside: State,
    m: usize,
) -> Result<PcFn> {
    let w = (hi - lo) / m as f64;
    let mut cuts = Vec::with_capacity(m + 1);
    let mut vals = Vec::with_capacity(m + 2);
    vals.push(outside.clone());
    for k in 0..m {
        cuts.push(lo + k as f64 * w);
        vals.push(f(lo + (k as f64 + 0.5) * w));
    }
    cuts.push(hi);
    vals.push(outside);
    PcFn::new(cuts, vals)
}

/// Pointwise sampling for the boundary datum.
fn sample_values(
    f: &dyn Fn(f64) -> State,
    lo: f64,
    hi: f64,
    outside: State,
    eps: f64,
) -> Result<PcFn> {
    let mut m = 8usize;
    for _ in 0..20 {
        let w = (hi - lo) / m as f64;
        let mut cuts = Vec::with_capacity(m + 1);
        let mut vals = Vec::with_capacity(m + 2);
        vals.push(outside.clone());
        for k in 0..m {
            cuts.push(lo + k as f64 * w);
            vals.push(f(lo + k as f64 * w));
        }
        cuts.push(hi);
        vals.push(outside.clone());
        let pc = PcFn::new(cuts, vals)?;
        // sup-norm estimate on a finer probe grid
        let mut sup: f64 = 0.0;
        for k in 0..m * 8 {
            let t = lo + (k as f64 + 0.3) * (hi - lo) / (m * 8) as f64;
            sup = sup.max((&f(t) - pc.eval(t)).norm_inf());
        }
        if sup < eps {
            return Ok(pc);
        }
        m *= 2;
    }
    Err(SolverError::NoConvergence(
        "boundary-datum approximation did not reach the sup target".into(),
    ))
}
