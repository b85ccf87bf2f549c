//! Wave-front tracking for one-dimensional strictly hyperbolic systems of
//! conservation and balance laws posed on a domain `x >= gamma(t)` with a
//! moving, non-characteristic boundary.
//!
//! The crate is organized around a small number of building blocks:
//!
//! * [`system`] — the system description: flux, eigenstructure, field
//!   classification and the admissible state box, plus the built-in
//!   systems (linear advection, Burgers, isothermal p-system).
//! * [`curves`] — elementary wave curves (rarefaction, shock, Lax and
//!   inverse Lax curves) under the speed-increment strength normalization,
//!   with closed-form and numeric providers.
//! * [`riemann`] — interior and boundary Riemann solvers and self-similar
//!   fan evaluation.
//! * [`engine`] — the event-driven front-tracking engine: accurate and
//!   simplified interaction solvers, non-physical fronts, generation
//!   orders, boundary interactions.
//! * [`functionals`] — linear/quadratic interaction potentials, the Glimm
//!   functional, the weighted distance functional between two solutions
//!   and the curve functional used for trace bounds.
//! * [`splitting`] — operator splitting for a non-local source term: the
//!   local flow, Euler polygonals and the cell-averaging projection.
//! * [`traces`] — trace extraction along time-like curves, restriction and
//!   non-uniqueness experiments.
//! * [`estimates`] — sampling-based fits of the interaction-estimate
//!   constants used by the verification harness.

pub mod boundary;
pub mod curves;
pub mod engine;
pub mod error;
pub mod estimates;
pub mod functionals;
pub mod linalg;
pub mod pcfn;
pub mod riemann;
pub mod splitting;
pub mod state;
pub mod system;
pub mod traces;

pub use boundary::{Boundary, BoundaryMap, ComponentMap, IdentityMap};
pub use engine::{Configuration, Engine, Event, EventKind, RunResult, SolverParams, WaveFront};
pub use error::SolverError;
pub use pcfn::PcFn;
pub use riemann::{BoundaryRiemannSolution, RiemannSolution, Wave, WaveKind};
pub use state::State;
pub use system::{CurveMode, FieldKind, OmegaBox, System};
