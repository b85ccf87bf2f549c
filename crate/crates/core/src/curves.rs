//! Elementary wave curves under the speed-increment strength
//! normalization.
//!
//! For a genuinely nonlinear family the parameter `sigma` is chosen so
//! that the characteristic speed grows at unit rate along both the
//! rarefaction and the shock branch; for a linearly degenerate family it
//! is arc length. With this choice the inverse Lax curve composed with
//! the Lax curve is the identity, which the boundary solver relies on.

use crate::error::{Result, SolverError};
use crate::linalg::Mat;
use crate::state::State;
use crate::system::{eigen_decompose, CurveMode, FieldKind, System};

/// Absolute residual tolerance for curve solves.
pub const CURVE_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Rarefaction curve `R_family(sigma)(u)` for `sigma >= 0` (the formula
/// extends smoothly to negative parameters; callers needing the Lax curve
/// should use [`lax_curve`]).
pub fn rarefaction_curve(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
    mode: CurveMode,
) -> Result<State> {
    if sigma == 0.0 {
        return Ok(u.clone());
    }
    if mode == CurveMode::PreferAnalytic {
        if let Some(v) = sys.analytic_rarefaction(u, family, sigma) {
            return check_box(sys, v, "rarefaction curve");
        }
    }
    let v = integrate_eigen_field(sys, u, family, sigma)?;
    check_box(sys, v, "rarefaction curve")
}

fn check_box(sys: &dyn System, v: State, what: &str) -> Result<State> {
    if !sys.omega_box().contains(&v) {
        return Err(SolverError::LeftOmega(format!("{what} exited the box at {v}")));
    }
    Ok(v)
}

/// Integrate `du/dsigma = r_family(u)` with an adaptive Dormand-Prince
/// 5(4) pair to local tolerance 1e-12.
fn integrate_eigen_field(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
) -> Result<State> {
    let rhs = |x: &State| -> Result<State> {
        let (_, vecs) = eigen_decompose(sys, x)?;
        Ok(vecs[family - 1].clone())
    };
    dopri5(&rhs, u.clone(), sigma, 1e-12)
}

/// Dormand-Prince 5(4) with step control. `span` may be negative.
fn dopri5<F: Fn(&State) -> Result<State>>(
    rhs: &F,
    mut y: State,
    span: f64,
    tol: f64,
) -> Result<State> {
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let dir = span.signum();
    let total = span.abs();
    if total == 0.0 {
        return Ok(y);
    }
    let mut done = 0.0;
    let mut h = total.min(0.05);
    let mut steps = 0usize;
    while done < total {
        steps += 1;
        if steps > 100_000 {
            return Err(SolverError::NoConvergence("curve ODE step limit".into()));
        }
        h = h.min(total - done);
        let mut k: Vec<State> = Vec::with_capacity(7);
        k.push(rhs(&y)?);
        for (i, row) in A.iter().enumerate() {
            let mut yi = y.clone();
            for (j, &c) in row.iter().take(i + 1).enumerate() {
                if c != 0.0 {
                    yi.axpy(dir * h * c, &k[j]);
                }
            }
            k.push(rhs(&yi)?);
        }
        let mut y5 = y.clone();
        let mut y4 = y.clone();
        for j in 0..7 {
            if B5[j] != 0.0 {
                y5.axpy(dir * h * B5[j], &k[j]);
            }
            if B4[j] != 0.0 {
                y4.axpy(dir * h * B4[j], &k[j]);
            }
        }
        let err = (&y5 - &y4).norm_inf();
        let scale = tol * (1.0 + y.norm_inf());
        if err <= scale || h < 1e-13 {
            y = y5;
            done += h;
        }
        let factor = if err > 0.0 { 0.9 * (scale / err).powf(0.2) } else { 4.0 };
        h *= factor.clamp(0.2, 4.0);
    }
    Ok(y)
}

/// Shock curve `S_family(sigma)(u)` together with the Rankine-Hugoniot
/// speed.
///
/// For a genuinely nonlinear family the admissible (Lax) branch is
/// `sigma <= 0`; positive parameters evaluate the same Hugoniot locus and
/// are used by the shock gluing map. For a linearly degenerate family the
/// curve coincides with the rarefaction curve and the speed is the
/// characteristic speed.
pub fn shock_curve(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
    mode: CurveMode,
) -> Result<(State, f64)> {
    if sigma == 0.0 {
        let (vals, _) = eigen_decompose(sys, u)?;
        return Ok((u.clone(), vals[family - 1]));
    }
    if sys.field_kind(family) == FieldKind::LinearlyDegenerate {
        let v = rarefaction_curve(sys, u, family, sigma, mode)?;
        let (vals, _) = eigen_decompose(sys, u)?;
        return Ok((v, vals[family - 1]));
    }
    if mode == CurveMode::PreferAnalytic {
        if let Some((v, s)) = sys.analytic_shock(u, family, sigma) {
            let v = check_box(sys, v, "shock curve")?;
            return Ok((v, s));
        }
    }
    numeric_shock(sys, u, family, sigma, mode)
}

/// Continuation in sigma along the Hugoniot locus of `u`: the parameter
/// marches toward the target while every Newton solve stays anchored at
/// the original foot state, the previous point serving as predictor.
fn numeric_shock(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
    mode: CurveMode,
) -> Result<(State, f64)> {
    let mut predictor: Option<State> = None;
    let mut sig_done = 0.0;
    let mut step = sigma.signum() * sigma.abs().min(0.1);
    let mut speed = eigen_decompose(sys, u)?.0[family - 1];
    let mut guard = 0usize;
    while (sigma - sig_done).abs() > 1e-15 {
        guard += 1;
        if guard > 10_000 {
            return Err(SolverError::NoConvergence("shock continuation stalled".into()));
        }
        let remaining = sigma - sig_done;
        if step.abs() > remaining.abs() {
            step = remaining;
        }
        let target = sig_done + step;
        match newton_shock_step(sys, u, family, target, predictor.as_ref(), mode) {
            Ok((v, s)) => {
                predictor = Some(v);
                sig_done = target;
                speed = s;
            }
            Err(_) if step.abs() > 1e-8 => {
                step *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        }
    }
    let v = check_box(sys, predictor.unwrap_or_else(|| u.clone()), "shock curve")?;
    Ok((v, speed))
}

/// One damped-Newton solve of the Rankine-Hugoniot system plus the
/// normalization constraint. Without an explicit predictor the
/// rarefaction continuation provides a second-order accurate one.
fn newton_shock_step(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
    predictor: Option<&State>,
    mode: CurveMode,
) -> Result<(State, f64)> {
    let n = sys.n();
    let lam_u = eigen_decompose(sys, u)?.0[family - 1];
    let mut v = match predictor {
        Some(p) => p.clone(),
        None => match rarefaction_curve(sys, u, family, sigma, mode) {
            Ok(p) => p,
            Err(_) => u.clone(),
        },
    };
    let mut s = 0.5 * (lam_u + eigen_decompose_speed(sys, &v, family).unwrap_or(lam_u));
    let fu = sys.flux(u);

    let residual = |v: &State, s: f64| -> Result<Vec<f64>> {
        let mut r = Vec::with_capacity(n + 1);
        let fv = sys.flux(v);
        for i in 0..n {
            r.push(fv[i] - fu[i] - s * (v[i] - u[i]));
        }
        let lam_v = eigen_decompose_speed(sys, v, family)?;
        r.push(lam_v - lam_u - sigma);
        Ok(r)
    };

    let mut r = residual(&v, s)?;
    for _ in 0..NEWTON_MAX_ITER {
        let rn = r.iter().map(|x| x.abs()).fold(0.0, f64::max);
        if rn < CURVE_TOL {
            return Ok((v, s));
        }
        // assemble the (n+1) x (n+1) Jacobian
        let jac_f = sys.jacobian(&v);
        let mut m = Mat::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, jac_f.get(i, j) - if i == j { s } else { 0.0 });
            }
            m.set(i, n, -(v[i] - u[i]));
        }
        let h = 1e-6 * (1.0 + v.norm_inf());
        for j in 0..n {
            let mut vp = v.clone();
            vp[j] += h;
            let mut vm = v.clone();
            vm[j] -= h;
            let lp = eigen_decompose_speed(sys, &vp, family)?;
            let lm = eigen_decompose_speed(sys, &vm, family)?;
            m.set(n, j, (lp - lm) / (2.0 * h));
        }
        m.set(n, n, 0.0);
        let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = crate::linalg::solve(&m, &neg_r)?;
        // backtracking line search
        let mut alpha = 1.0;
        loop {
            let mut v_try = v.clone();
            for i in 0..n {
                v_try[i] += alpha * delta[i];
            }
            let s_try = s + alpha * delta[n];
            if let Ok(r_try) = residual(&v_try, s_try) {
                let rn_try = r_try.iter().map(|x| x.abs()).fold(0.0, f64::max);
                if rn_try < rn || rn_try < CURVE_TOL {
                    v = v_try;
                    s = s_try;
                    r = r_try;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-6 {
                return Err(SolverError::NoConvergence(
                    "shock Newton line search stalled".into(),
                ));
            }
        }
    }
    Err(SolverError::NoConvergence(format!(
        "shock Newton did not reach tolerance for family {family}, sigma {sigma}"
    )))
}

fn eigen_decompose_speed(sys: &dyn System, u: &State, family: usize) -> Result<f64> {
    // eigenvalue only; avoids the eigenvector work when the box check and
    // vectors are not needed
    if let Some((vals, _)) = sys.eigen_basis(u) {
        return Ok(vals[family - 1]);
    }
    let vals = crate::linalg::eigenvalues(&sys.jacobian(u))?;
    Ok(vals[family - 1])
}

/// Lax curve: rarefaction branch for non-negative parameters, shock
/// branch otherwise.
pub fn lax_curve(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
    mode: CurveMode,
) -> Result<State> {
    if sigma >= 0.0 {
        rarefaction_curve(sys, u, family, sigma, mode)
    } else {
        Ok(shock_curve(sys, u, family, sigma, mode)?.0)
    }
}

/// Inverse Lax curve: shock branch for non-negative parameters,
/// rarefaction otherwise. Satisfies
/// `inverse_lax(-sigma, lax(sigma, u)) = u`.
pub fn inverse_lax_curve(
    sys: &dyn System,
    u: &State,
    family: usize,
    sigma: f64,
    mode: CurveMode,
) -> Result<State> {
    if sigma >= 0.0 {
        Ok(shock_curve(sys, u, family, sigma, mode)?.0)
    } else {
        rarefaction_curve(sys, u, family, sigma, mode)
    }
}

/// Composition of Lax curves in ascending family order.
pub fn glue_lax(sys: &dyn System, u: &State, sigmas: &[f64], mode: CurveMode) -> Result<State> {
    let mut v = u.clone();
    for (i, &s) in sigmas.iter().enumerate() {
        v = lax_curve(sys, &v, i + 1, s, mode)?;
    }
    Ok(v)
}

/// Composition of shock (Rankine-Hugoniot) curves in ascending family
/// order, signs unrestricted.
pub fn glue_shock(sys: &dyn System, u: &State, qs: &[f64], mode: CurveMode) -> Result<State> {
    let mut v = u.clone();
    for (i, &q) in qs.iter().enumerate() {
        v = shock_curve(sys, &v, i + 1, q, mode)?.0;
    }
    Ok(v)
}
