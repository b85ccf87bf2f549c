//! The moving boundary: a piecewise-linear curve, a boundary map picking
//! out the inflow components, and piecewise-constant boundary data.

use std::sync::Arc;

use crate::error::{Result, SolverError};
use crate::linalg::{det, Mat};
use crate::pcfn::PcFn;
use crate::state::State;
use crate::system::{eigen_decompose, System};

/// `b : Omega -> R^{n - ell}`, the map whose value the boundary data
/// prescribes along the boundary.
pub trait BoundaryMap: Send + Sync {
    fn dim_out(&self) -> usize;
    fn eval(&self, u: &State) -> State;
    fn name(&self) -> &str;
}

/// Identity map (all components prescribed; only valid with `ell = 0`).
#[derive(Debug, Clone)]
pub struct IdentityMap {
    pub n: usize,
    pub base: State,
}

impl BoundaryMap for IdentityMap {
    fn dim_out(&self) -> usize {
        self.n
    }
    fn eval(&self, u: &State) -> State {
        u - &self.base
    }
    fn name(&self) -> &str {
        "identity"
    }
}

/// Prescribes the trailing `n - ell` components of `u - base`.
#[derive(Debug, Clone)]
pub struct ComponentMap {
    pub ell: usize,
    pub base: State,
}

impl BoundaryMap for ComponentMap {
    fn dim_out(&self) -> usize {
        self.base.dim() - self.ell
    }
    fn eval(&self, u: &State) -> State {
        State(
            (self.ell..self.base.dim())
                .map(|i| u[i] - self.base[i])
                .collect(),
        )
    }
    fn name(&self) -> &str {
        "components"
    }
}

/// Piecewise-linear curve `t -> gamma(t)` given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    /// Strictly increasing times.
    pub times: Vec<f64>,
    /// Positions at those times; extended with the last slope beyond the
    /// final vertex and held constant before the first.
    pub values: Vec<f64>,
}

impl Polyline {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(SolverError::InvalidInput(
                "polyline needs at least two (time, value) vertices".into(),
            ));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SolverError::InvalidInput("polyline times not increasing".into()));
        }
        Ok(Polyline { times, values })
    }

    pub fn vertical(x: f64, t_end: f64) -> Self {
        Polyline { times: vec![0.0, t_end.max(1.0)], values: vec![x, x] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.segment_index(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let (x0, x1) = (self.values[k], self.values[k + 1]);
        x0 + (x1 - x0) / (t1 - t0) * (t - t0)
    }

    pub fn slope_at(&self, t: f64) -> f64 {
        let k = self.segment_index(t);
        (self.values[k + 1] - self.values[k]) / (self.times[k + 1] - self.times[k])
    }

    fn segment_index(&self, t: f64) -> usize {
        if t <= self.times[0] {
            return 0;
        }
        let k = self.times.partition_point(|&tau| tau <= t);
        k.clamp(1, self.times.len() - 1) - 1
    }

    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, x)| (t[0], t[1], x[0], x[1]))
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.segments()
            .map(|(t0, t1, x0, x1)| (x1 - x0) / (t1 - t0))
            .collect()
    }
}

/// The boundary of the initial-boundary value problem.
pub struct Boundary {

    pub gamma: Polyline,
    /// Piecewise-constant boundary datum, a function of time with values
    /// in `R^{n - ell}`.
    pub gdata: PcFn,
    pub bmap: Arc<dyn BoundaryMap>,
    /// Number of outgoing characteristic families.
    pub ell: usize,
    /// Uniform separation between the boundary slope and the adjacent
    /// characteristic speed ranges.
    pub margin_c: f64,
}

impl std::fmt::Debug for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Boundary")
            .field("gamma", &self.gamma)
            .field("ell", &self.ell)
            .field("margin_c", &self.margin_c)
            .field("bmap", &self.bmap.name())
            .finish()
    }
}

impl Boundary {
    /// Validate the boundary against a system: slope separation from the
    /// characteristic bands (for every linear piece) and the determinant
    /// condition of the boundary map at the base state.
    pub fn new(
        sys: &dyn System,
        gamma: Polyline,
        gdata: PcFn,
        bmap: Arc<dyn BoundaryMap>,
        ell: usize,
        margin_c: f64,
    ) -> Result<Self> {
        let n = sys.n();
        if ell > n {
            return Err(SolverError::InvalidInput(format!("ell = {ell} exceeds n = {n}")));
        }
        if margin_c <= 0.0 {
            return Err(SolverError::InvalidInput("margin_c must be positive".into()));
        }
        if bmap.dim_out() != n - ell {
            return Err(SolverError::InvalidInput(format!(
                "boundary map emits {} components, expected n - ell = {}",
                bmap.dim_out(),
                n - ell
            )));
        }
        if gdata.dim() != n - ell {
            return Err(SolverError::InvalidInput(format!(
                "boundary data has dimension {}, expected {}",
                gdata.dim(),
                n - ell
            )));
        }
        let bounds = sys.speed_bounds();
        for (i, slope) in gamma.slopes().iter().enumerate() {
            if ell > 0 {
                let hi = bounds[ell - 1].1;
                if *slope < hi + margin_c {
                    return Err(SolverError::NotNonCharacteristic(format!(
                        "gamma piece {i} has slope {slope}, needs >= lambda_{ell}^max + c = {}",
                        hi + margin_c
                    )));
                }
            }
            if ell < n {
                let lo = bounds[ell].0;
                if *slope > lo - margin_c {
                    return Err(SolverError::NotNonCharacteristic(format!(
                        "gamma piece {i} has slope {slope}, needs <= lambda_{}^min - c = {}",
                        ell + 1,
                        lo - margin_c
                    )));
                }
            }
        }
        let bd = Boundary { gamma, gdata, bmap, ell, margin_c };
        bd.check_determinant(sys)?;
        Ok(bd)
    }

    /// Hypothesis on the boundary map: the determinant of
    /// `[Db r_{ell+1} ... Db r_n]` at the base state must stay away from
    /// zero, otherwise the boundary Riemann problem is ill posed.
    fn check_determinant(&self, sys: &dyn System) -> Result<()> {
        let n = sys.n();
        let m = n - self.ell;
        if m == 0 {
            return Ok(());
        }
        let base = sys.base_state();
        let (_, vecs) = eigen_decompose(sys, &base)?;
        let db = jacobian_of_map(self.bmap.as_ref(), &base);
        let mut cols = Mat::zeros(m);
        for (j, r) in vecs.iter().enumerate().skip(self.ell) {
            for (i, row) in db.iter().enumerate() {
                cols.set(i, j - self.ell, row.dot(r));
            }
        }
        let d = det(&cols);
        if d.abs() < 1e-8 {
            return Err(SolverError::DegenerateBoundary(d.abs()));
        }
        Ok(())
    }

    /// Datum in force at time `t` (right continuous).
    pub fn g_at(&self, t: f64) -> State {
        self.gdata.eval(t).clone()
    }

    /// First boundary-data jump strictly after `t`.
    pub fn next_data_jump(&self, t: f64) -> Option<f64> {
        self.gdata.cuts().iter().copied().find(|&c| c > t)
    }
}

/// Rows of the differential of `b` at `u`, by central differences.
pub fn jacobian_of_map(bmap: &dyn BoundaryMap, u: &State) -> Vec<State> {
    let m = bmap.dim_out();
    let n = u.dim();
    let h = 1e-6 * (1.0 + u.norm_inf());
    let mut rows = vec![State::zeros(n); m];
    for j in 0..n {
        let mut up = u.clone();
        up[j] += h;
        let mut um = u.clone();
        um[j] -= h;
        let bp = bmap.eval(&up);
        let bm = bmap.eval(&um);
        for i in 0..m {
            rows[i][j] = (bp[i] - bm[i]) / (2.0 * h);
        }
    }
    rows
}
