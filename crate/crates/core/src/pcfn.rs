//! Piecewise-constant functions of one real variable with vector values.
//!
//! Used both for spatial profiles `x -> u(x)` and for boundary-data
//! signals `t -> g(t)`. Values are right continuous: on `[cuts[i-1],
//! cuts[i])` the function equals `vals[i]`, `vals[0]` to the left of the
//! first cut and `vals.last()` to the right of the last.

use crate::error::{Result, SolverError};
use crate::state::State;

#[derive(Debug, Clone, PartialEq)]
pub struct PcFn {
    cuts: Vec<f64>,
    vals: Vec<State>,
}

impl PcFn {
    /// Constant function.
    pub fn constant(v: State) -> Self {
        PcFn { cuts: vec![], vals: vec![v] }
    }

    /// Build from jump locations and the values between them.
    /// `vals.len()` must equal `cuts.len() + 1` and cuts must be strictly
    /// increasing.
    pub fn new(cuts: Vec<f64>, vals: Vec<State>) -> Result<Self> {
        if vals.len() != cuts.len() + 1 {
            return Err(SolverError::InvalidInput(format!(
                "piecewise function needs {} values for {} cuts, got {}",
                cuts.len() + 1,
                cuts.len(),
                vals.len()
            )));
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SolverError::InvalidInput("cuts not strictly increasing".into()));
        }
        if cuts.iter().any(|c| !c.is_finite()) || vals.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::InvalidInput("non-finite piecewise data".into()));
        }
        let dim = vals[0].dim();
        if vals.iter().any(|v| v.dim() != dim) {
            return Err(SolverError::InvalidInput("inconsistent value dimensions".into()));
        }
        Ok(PcFn { cuts, vals }.canonical())
    }

    /// Indicator-style step: `inside` on `[a, b)`, `outside` elsewhere.
    pub fn step(a: f64, b: f64, inside: State, outside: State) -> Self {
        PcFn::new(vec![a, b], vec![outside.clone(), inside, outside]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.vals[0].dim()
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn values(&self) -> &[State] {
        &self.vals
    }

    pub fn jump_count(&self) -> usize {
        self.cuts.len()
    }

    /// Value at `x` (right-continuous convention).
    pub fn eval(&self, x: f64) -> &State {
        let k = self.cuts.partition_point(|&c| c <= x);
        &self.vals[k]
    }

    /// Left limit at `x`.
    pub fn eval_left(&self, x: f64) -> &State {
        let k = self.cuts.partition_point(|&c| c < x);
        &self.vals[k]
    }

    /// Drop zero-size jumps.
    fn canonical(mut self) -> Self {
        let mut i = 0;
        while i < self.cuts.len() {
            if self.vals[i] == self.vals[i + 1] {
                self.cuts.remove(i);
                self.vals.remove(i + 1);
            } else {
                i += 1;
            }
        }
        self
    }

    /// Total variation, jumps measured in the pointwise 1-norm.
    pub fn tv(&self) -> f64 {
        self.vals
            .windows(2)
            .map(|w| (&w[1] - &w[0]).norm1())
            .sum()
    }

    /// Total variation restricted to jumps in the open interval `(from, +inf)`.
    pub fn tv_after(&self, from: f64) -> f64 {
        self.cuts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > from)
            .map(|(i, _)| (&self.vals[i + 1] - &self.vals[i]).norm1())
            .sum()
    }

    /// L1 distance on the whole line; infinite when the tails differ.
    pub fn l1_distance(&self, other: &PcFn) -> f64 {
        if self.vals[0] != other.vals[0]
            || self.vals.last().unwrap() != other.vals.last().unwrap()
        {
            let head = (&self.vals[0] - &other.vals[0]).norm1();
            let tail = (self.vals.last().unwrap() - other.vals.last().unwrap()).norm1();
            if head > 0.0 || tail > 0.0 {
                return f64::INFINITY;
            }
        }
        let mut total = 0.0;
        merge_walk(self, other, |a, b, va, vb| {
            total += (b - a) * (va - vb).norm1();
        });
        total
    }

    /// L1 distance restricted to `[from, to]`.
    pub fn l1_distance_on(&self, other: &PcFn, from: f64, to: f64) -> f64 {
        if to <= from {
            return 0.0;
        }
        let mut grid: Vec<f64> = vec![from];
        grid.extend(
            self.cuts
                .iter()
                .chain(other.cuts.iter())
                .copied()
                .filter(|&c| c > from && c < to),
        );
        grid.push(to);
        grid.sort_by(|a, b| a.total_cmp(b));
        grid.dedup();
        let mut total = 0.0;
        for pair in grid.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            total += (b - a) * (self.eval(a) - other.eval(a)).norm1();
        }
        total
    }

    /// Componentwise integral of `(self - reference)` over `[a, b]`.
    pub fn integral_on(&self, a: f64, b: f64, reference: &State) -> State {
        let mut acc = State::zeros(self.dim());
        let mut lo = a;
        let mut k = self.cuts.partition_point(|&c| c <= a);
        while lo < b {
            let hi = if k < self.cuts.len() { self.cuts[k].min(b) } else { b };
            if hi > lo {
                acc.axpy(hi - lo, &(&self.vals[k] - reference));
            }
            lo = hi;
            k += 1;
        }
        acc
    }

    /// `self + scale * other` (dimensions must agree).
    pub fn add_scaled(&self, scale: f64, other: &PcFn) -> PcFn {
        let mut cuts = Vec::new();
        let mut vals = Vec::new();
        let mut first = true;
        merge_walk_full(self, other, |cut, va, vb| {
            let mut v = va.clone();
            v.axpy(scale, vb);
            if first {
                vals.push(v);
                first = false;
            } else {
                cuts.push(cut);
                vals.push(v);
            }
        });
        PcFn { cuts, vals }.canonical()
    }

    /// Replace everything left of `from` with `fill`.
    pub fn restrict_from(&self, from: f64, fill: State) -> PcFn {
        let k = self.cuts.partition_point(|&c| c <= from);
        let mut cuts = vec![from];
        cuts.extend_from_slice(&self.cuts[k..]);
        let mut vals = vec![fill];
        vals.extend(self.vals[k..].iter().cloned());
        PcFn { cuts, vals }.canonical()
    }

    /// Apply a state transform to every value.
    pub fn map<F: Fn(&State) -> State>(&self, f: F) -> PcFn {
        PcFn {
            cuts: self.cuts.clone(),
            vals: self.vals.iter().map(f).collect(),
        }
        .canonical()
    }

    /// L1 norm of `(self - reference)` over the whole line (finite only
    /// when both tails equal `reference`).
    pub fn l1_norm(&self, reference: &State) -> f64 {
        self.l1_distance(&PcFn::constant(reference.clone()))
    }
}

/// Walk the merged partition of two functions over the union of their
/// cuts, invoking `f(a, b, va, vb)` on every bounded interval.
fn merge_walk<F: FnMut(f64, f64, &State, &State)>(u: &PcFn, w: &PcFn, mut f: F) {
    let mut cuts: Vec<f64> = u.cuts.iter().chain(w.cuts.iter()).copied().collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        f(a, b, u.eval(a), w.eval(a));
    }
}

/// Like `merge_walk` but visits every region including the tails; `f`
/// receives the left cut of the region (unused for the first).
fn merge_walk_full<F: FnMut(f64, &State, &State)>(u: &PcFn, w: &PcFn, mut f: F) {
    let mut cuts: Vec<f64> = u.cuts.iter().chain(w.cuts.iter()).copied().collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup();
    let probe = cuts.first().copied().unwrap_or(0.0) - 1.0;
    f(probe, u.eval(probe), w.eval(probe));
    for &c in &cuts {
        f(c, u.eval(c), w.eval(c));
    }
}
