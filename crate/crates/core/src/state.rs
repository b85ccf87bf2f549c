//! State vectors and the small amount of vector arithmetic the solvers
//! need.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// A point in state space (n conserved quantities, model units).
///
/// Pointwise norms follow two conventions used consistently across the
/// crate: `norm1` for L1-in-space integrands and boundary-data distances,
/// `norm2` (Euclidean) for the strength of non-physical fronts.
#[derive(Debug, Clone, PartialEq)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn zeros(n: usize) -> Self {
        State(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn dot(&self, other: &State) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn axpy(&mut self, a: f64, x: &State) {
        for (s, xi) in self.0.iter_mut().zip(&x.0) {
            *s += a * xi;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for State {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add<&State> for &State {
    type Output = State;
    fn add(self, rhs: &State) -> State {
        State(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&State> for &State {
    type Output = State;
    fn sub(self, rhs: &State) -> State {
        State(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &State {
    type Output = State;
    fn mul(self, s: f64) -> State {
        State(self.0.iter().map(|a| a * s).collect())
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}
