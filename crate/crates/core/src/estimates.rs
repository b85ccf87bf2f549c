//! Sampling-based fits of the interaction-estimate constants.
//!
//! The well-posedness machinery is quantified by constants that the
//! analysis only proves to exist. Here they are measured: interior
//! interaction constants from random wave pairs, boundary interaction
//! constants from random boundary configurations, with a fit-on-half /
//! validate-on-half protocol.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boundary::Boundary;
use crate::curves::{glue_lax, glue_shock, lax_curve};
use crate::error::Result;
use crate::functionals::FunctionalWeights;
use crate::riemann::{
    solve_boundary_riemann, solve_q_coordinates, solve_riemann, BoundaryCurveKind,
};
use crate::state::State;
use crate::system::{CurveMode, System};

/// One measured inequality instance `lhs <= C * rhs`.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of the fit/validate protocol.
#[derive(Debug, Clone, Copy)]
pub struct FitReport {
    /// Largest ratio on the fitting half.
    pub c_fit: f64,
    /// Hold-out samples violating `lhs <= (1 + slack) c_fit rhs`.
    pub violations: usize,
    pub holdout: usize,
    /// Largest hold-out ratio.
    pub max_ratio_holdout: f64,
}

/// Fit the constant on even-indexed samples, validate on odd-indexed
/// ones with the given relative slack.
pub fn fit_and_validate(samples: &[Sample], slack: f64) -> FitReport {
    let mut c_fit = 0.0_f64;
    for s in samples.iter().step_by(2) {
        if s.rhs > 1e-14 {
            c_fit = c_fit.max(s.lhs / s.rhs);
        }
    }
    let mut violations = 0;
    let mut holdout = 0;
    let mut max_ratio = 0.0_f64;
    for s in samples.iter().skip(1).step_by(2) {
        if s.rhs <= 1e-14 {
            continue;
        }
        holdout += 1;
        let ratio = s.lhs / s.rhs;
        max_ratio = max_ratio.max(ratio);
        if ratio > (1.0 + slack) * c_fit {
            violations += 1;
        }
    }
    FitReport { c_fit, violations, holdout, max_ratio_holdout: max_ratio }
}

fn random_state(rng: &mut ChaCha8Rng, sys: &dyn System, shrink: f64) -> State {
    let bx = sys.omega_box();
    let c = bx.center();
    State(
        (0..sys.n())
            .map(|i| {
                let half = 0.5 * (bx.hi[i] - bx.lo[i]) * shrink;
                c[i] + rng.random_range(-1.0..1.0) * half
            })
            .collect(),
    )
}

/// Interior interaction constant: for a pair of adjacent approaching
/// waves, how far the strengths of the re-solved Riemann problem deviate
/// from plain superposition, per unit of the strength product.
pub fn sample_interior_constant(
    sys: &dyn System,
    count: usize,
    strength_cap: f64,
    seed: u64,
) -> Result<f64> {
    let mode = CurveMode::PreferAnalytic;
    let n = sys.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_max = 0.0_f64;
    let mut done = 0usize;
    while done < count {
        let u_l = random_state(&mut rng, sys, 0.5);
        let fam_left = rng.random_range(1..=n);
        let fam_right = rng.random_range(1..=fam_left); // left family >= right family
        let mut s_left = rng.random_range(-strength_cap..strength_cap);
        let s_right = rng.random_range(-strength_cap..strength_cap);
        if fam_left == fam_right {
            // same family approaches only through a shock
            s_left = -s_left.abs();
        }
        let mid = match lax_curve(sys, &u_l, fam_left, s_left, mode) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let u_r = match lax_curve(sys, &mid, fam_right, s_right, mode) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let sol = match solve_riemann(sys, &u_l, &u_r, mode) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let mut expected = vec![0.0; n];
        expected[fam_left - 1] += s_left;
        expected[fam_right - 1] += s_right;
        let lhs: f64 = sol
            .strengths
            .iter()
            .zip(&expected)
            .map(|(a, b)| (a - b).abs())
            .sum();
        let rhs = (s_left * s_right).abs();
        if rhs > 1e-12 {
            c_max = c_max.max(lhs / rhs);
        }
        done += 1;
    }
    Ok(c_max)
}

/// Samples of the boundary interaction estimate in Lax coordinates: a
/// full fan hits the boundary while the datum jumps; the change of the
/// outgoing strengths is controlled by the incoming strengths plus the
/// datum jump.
pub fn lemma42_lax_samples(
    sys: &dyn System,
    bdry: &Boundary,
    count: usize,
    strength_cap: f64,
    g_cap: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    let mode = CurveMode::PreferAnalytic;
    let n = sys.n();
    let ell = bdry.ell;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < count * 50 {
        guard += 1;
        let u_minus = random_state(&mut rng, sys, 0.9);
        let sig: Vec<f64> =
            (0..n).map(|_| rng.random_range(-strength_cap..strength_cap)).collect();
        let dg: Vec<f64> = (0..n - ell).map(|_| rng.random_range(-g_cap..g_cap)).collect();
        let u_r = match glue_lax(sys, &u_minus, &sig, mode) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let g_minus = bdry.bmap.eval(&u_minus);
        let g_plus = &g_minus + &State(dg.clone());
        let tilde = match solve_boundary_riemann(
            sys,
            bdry,
            &u_r,
            &g_plus,
            BoundaryCurveKind::Lax,
            mode,
        ) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let lhs: f64 = tilde
            .strengths
            .iter()
            .enumerate()
            .map(|(k, s)| (s - sig[ell + k]).abs())
            .sum();
        let rhs: f64 =
            sig[..ell].iter().map(|s| s.abs()).sum::<f64>() + State(dg).norm1();
        out.push(Sample { lhs, rhs });
    }
    Ok(out)
}

/// Samples of the boundary estimate in shock coordinates, including the
/// error-vector term: `v + omega = S(q)(u)` with `g = b(u)`,
/// `g_bar = b(v)`; the outgoing `q` components are controlled by the
/// incoming ones plus the datum distance plus `omega`.
pub fn lemma42_shock_samples(
    sys: &dyn System,
    bdry: &Boundary,
    count: usize,
    strength_cap: f64,
    omega_cap: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    let mode = CurveMode::PreferAnalytic;
    let n = sys.n();
    let ell = bdry.ell;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0usize;
    while out.len() < count && guard < count * 50 {
        guard += 1;
        let u = random_state(&mut rng, sys, 0.8);
        // the comparison trace sits near u: perturb within the cap
        let mut v = u.clone();
        for i in 0..n {
            v[i] += rng.random_range(-strength_cap..strength_cap);
        }
        if !sys.omega_box().contains(&v) {
            continue;
        }
        let omega = State(
            (0..n).map(|_| rng.random_range(-omega_cap..omega_cap)).collect::<Vec<_>>(),
        );
        let target = &v + &omega;
        let q = match solve_q_coordinates(sys, &u, &target, mode) {
            Ok(q) => q,
            Err(_) => continue,
        };
        if glue_shock(sys, &u, &q, mode).is_err() {
            continue;
        }
        let g = bdry.bmap.eval(&u);
        let g_bar = bdry.bmap.eval(&v);
        let lhs: f64 = q[ell..].iter().map(|x| x.abs()).sum();
        let rhs: f64 = q[..ell].iter().map(|x| x.abs()).sum::<f64>()
            + (&g_bar - &g).norm1()
            + omega.norm1();
        out.push(Sample { lhs, rhs });
    }
    Ok(out)
}

/// Derive the functional weights from measured interaction constants:
/// fit the constant, then pick the coefficients in the order the decrease
/// estimates require, and cap the admissible smallness.
pub fn fit_weights(
    sys: &dyn System,
    bdry: &Boundary,
    samples: usize,
    seed: u64,
    user_delta0: f64,
) -> Result<(FunctionalWeights, f64)> {
    let c_int = sample_interior_constant(sys, samples, 0.1, seed)?;
    let c_bd = if bdry.ell > 0 {
        let s = lemma42_lax_samples(sys, bdry, samples, 0.05, 0.05, seed ^ 0x9e37)?;
        fit_and_validate(&s, 0.2).c_fit
    } else {
        0.0
    };
    let c = c_int.max(c_bd).max(1e-6);
    let k = 4.0 * c + 1.0;
    let h1 = 3.0 * c + 1.0;
    let h2 = 4.0 * c * k + 1.0;
    let delta0 = (1.0 / (2.0 * h2)).min(user_delta0);
    let kbar = (1.5 * c / bdry.margin_c).max(2.0);
    Ok((
        FunctionalWeights {
            k,
            h1,
            h2,
            kbar,
            ..FunctionalWeights::default()
        },
        delta0,
    ))
}
