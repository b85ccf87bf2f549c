//! System description: flux, eigenstructure, field classification and the
//! admissible state box.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Result, SolverError};
use crate::linalg::{self, Mat};
use crate::state::State;

pub mod builtin;

/// Classification of a characteristic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    GenuinelyNonlinear,
    LinearlyDegenerate,
}

/// Which wave-curve provider the solvers should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurveMode {
    /// Closed forms when the system supplies them, numeric otherwise.
    #[default]
    PreferAnalytic,
    /// Always integrate / root-find, even when closed forms exist.
    ForceNumeric,
}

/// Axis-aligned admissible state box around the base state.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaBox {
    pub lo: State,
    pub hi: State,
}

impl OmegaBox {
    pub fn new(lo: State, hi: State) -> Self {
        assert_eq!(lo.dim(), hi.dim());
        OmegaBox { lo, hi }
    }

    /// Containment with a tiny slop so states sitting exactly on a face
    /// do not flap in floating point.
    pub fn contains(&self, u: &State) -> bool {
        let slop = 1e-12;
        u.0.iter()
            .zip(self.lo.0.iter().zip(self.hi.0.iter()))
            .all(|(x, (lo, hi))| {
                let scale = 1.0 + lo.abs().max(hi.abs());
                *x >= lo - slop * scale && *x <= hi + slop * scale
            })
    }

    pub fn center(&self) -> State {
        State(
            self.lo
                .0
                .iter()
                .zip(&self.hi.0)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }
}

/// An n-by-n strictly hyperbolic system of conservation laws.
///
/// Custom systems plug in by implementing this trait: `flux`, `jacobian`,
/// the per-family field tags and the admissible box are required, the
/// eigenstructure and the wave curves fall back to numeric evaluation
/// when the closed-form hooks return `None`.
pub trait System: Send + Sync {
    fn n(&self) -> usize;
    fn name(&self) -> &str;

    /// The distinguished state the theory measures smallness against.
    /// Solutions equal this state outside the domain.
    fn base_state(&self) -> State;

    fn flux(&self, u: &State) -> State;
    fn jacobian(&self, u: &State) -> Mat;

    /// Field tag for `family` in `1..=n`.
    fn field_kind(&self, family: usize) -> FieldKind;

    fn omega_box(&self) -> OmegaBox;

    /// Per-family characteristic speed range over the box, ordered and
    /// pairwise disjoint.
    fn speed_bounds(&self) -> Vec<(f64, f64)>;

    /// Strict upper bound on every characteristic speed magnitude over
    /// the box; non-physical fronts travel at exactly this speed.
    fn lambda_hat(&self) -> f64;

    /// Closed-form eigenstructure (normalized as in [`eigen_decompose`]);
    /// `None` defers to the numeric path.
    fn eigen_basis(&self, _u: &State) -> Option<(Vec<f64>, Vec<State>)> {
        None
    }

    /// Closed-form rarefaction curve, if available for this family.
    fn analytic_rarefaction(&self, _u: &State, _family: usize, _sigma: f64) -> Option<State> {
        None
    }

    /// Closed-form shock curve (state and shock speed), if available.
    fn analytic_shock(&self, _u: &State, _family: usize, _sigma: f64) -> Option<(State, f64)> {
        None
    }
}

/// Eigenvalues and right eigenvectors at `u`, eigenvalues strictly
/// increasing.
///
/// Eigenvectors are normalized so that genuinely nonlinear fields satisfy
/// `grad(lambda_i) . r_i = 1` (which also fixes their sign) while linearly
/// degenerate fields carry unit length.
pub fn eigen_decompose(sys: &dyn System, u: &State) -> Result<(Vec<f64>, Vec<State>)> {
    if !sys.omega_box().contains(u) {
        return Err(SolverError::LeftOmega(format!(
            "eigen decomposition requested outside the box at {u}"
        )));
    }
    if let Some((vals, vecs)) = sys.eigen_basis(u) {
        return Ok((vals, vecs));
    }
    numeric_eigen(sys, u)
}

fn numeric_eigen(sys: &dyn System, u: &State) -> Result<(Vec<f64>, Vec<State>)> {
    let n = sys.n();
    let j = sys.jacobian(u);
    let vals = linalg::eigenvalues(&j)?;
    let scale = vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    for w in vals.windows(2) {
        if w[1] - w[0] < 1e-9 * scale {
            return Err(SolverError::NonHyperbolic(format!(
                "eigenvalue gap {:.3e} below tolerance at {u}",
                w[1] - w[0]
            )));
        }
    }
    let mut vecs = Vec::with_capacity(n);
    for (k, &lam) in vals.iter().enumerate() {
        let raw = linalg::eigenvector(&j, lam)?;
        let mut r = State(raw);
        // deterministic orientation before normalization
        let lead = r
            .0
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        if r.0[lead] < 0.0 {
            r = &r * -1.0;
        }
        match sys.field_kind(k + 1) {
            FieldKind::LinearlyDegenerate => {
                let nrm = r.norm2();
                vecs.push(&r * (1.0 / nrm));
            }
            FieldKind::GenuinelyNonlinear => {
                let d = directional_eigenvalue_derivative(sys, u, k, &r)?;
                if d.abs() < 1e-10 {
                    return Err(SolverError::NonHyperbolic(format!(
                        "field {} declared genuinely nonlinear but grad(lambda).r = {d:.3e} at {u}",
                        k + 1
                    )));
                }
                vecs.push(&r * (1.0 / d));
            }
        }
    }
    Ok((vals, vecs))
}

/// Directional derivative of the k-th eigenvalue in direction `dir`,
/// via first-order perturbation of the Jacobian (the Jacobian itself is
/// analytic, so only one finite difference enters).
fn directional_eigenvalue_derivative(
    sys: &dyn System,
    u: &State,
    k: usize,
    dir: &State,
) -> Result<f64> {
    let h = 1e-6 * (1.0 + u.norm_inf());
    let up = u + &(dir * h);
    let um = u - &(dir * h);
    let jp = sys.jacobian(&up);
    let jm = sys.jacobian(&um);
    let lp = linalg::eigenvalues(&jp)?[k];
    let lm = linalg::eigenvalues(&jm)?[k];
    Ok((lp - lm) / (2.0 * h))
}

/// Check the standing hypotheses on a system by sampling the box:
/// real separated spectrum everywhere sampled, ordered disjoint speed
/// bounds, and a strict speed cap.
pub fn validate_system(sys: &dyn System, samples_per_axis: usize) -> Result<()> {
    let n = sys.n();
    let bx = sys.omega_box();
    let bounds = sys.speed_bounds();
    if bounds.len() != n {
        return Err(SolverError::InvalidInput(format!(
            "{} speed bounds for an n = {n} system",
            bounds.len()
        )));
    }
    for w in bounds.windows(2) {
        if w[0].1 >= w[1].0 {
            return Err(SolverError::InvalidInput(format!(
                "speed bounds overlap: {:?} vs {:?}",
                w[0], w[1]
            )));
        }
    }
    let cap = sys.lambda_hat();
    for grid in sample_box(&bx, samples_per_axis) {
        let (vals, _) = eigen_decompose(sys, &grid)?;
        for (i, &lam) in vals.iter().enumerate() {
            let (lo, hi) = bounds[i];
            if lam < lo - 1e-9 || lam > hi + 1e-9 {
                return Err(SolverError::InvalidInput(format!(
                    "lambda_{} = {lam} outside claimed bounds [{lo}, {hi}] at {grid}",
                    i + 1
                )));
            }
            if lam.abs() >= cap {
                return Err(SolverError::InvalidInput(format!(
                    "lambda_hat = {cap} is not a strict speed bound (|lambda| = {})",
                    lam.abs()
                )));
            }
        }
    }
    Ok(())
}

fn sample_box(bx: &OmegaBox, per_axis: usize) -> Vec<State> {
    let n = bx.lo.dim();
    let m = per_axis.max(2);
    let mut out = Vec::new();
    let total = m.pow(n as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut u = State::zeros(n);
        for d in 0..n {
            let k = rem % m;
            rem /= m;
            let t = k as f64 / (m - 1) as f64;
            u[d] = bx.lo[d] + t * (bx.hi[d] - bx.lo[d]);
        }
        out.push(u);
    }
    out
}

/// Build one of the built-in systems by registry name.
///
/// Recognized names: `advection`, `burgers`, `p-system`. Parameters are
/// plain numbers; unknown keys are rejected so typos fail loudly.
pub fn build_system(name: &str, params: &BTreeMap<String, f64>) -> Result<Arc<dyn System>> {
    builtin::build(name, params)
}

/// Names the registry recognizes.
pub fn registry_names() -> &'static [&'static str] {
    &["advection", "burgers", "p-system"]
}
