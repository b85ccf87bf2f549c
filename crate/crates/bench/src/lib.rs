//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use fronttrack_core::boundary::{Boundary, ComponentMap, Polyline};
use fronttrack_core::pcfn::PcFn;
use fronttrack_core::state::State;
use fronttrack_core::system::builtin::PSystem;
use fronttrack_core::system::System;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn psystem() -> PSystem {
    PSystem { a: 1.0, rho_min: 0.5, rho_max: 2.0, q_max: 0.4 }
}

pub fn vertical_boundary(sys: &PSystem, t_end: f64) -> Boundary {
    Boundary::new(
        sys,
        Polyline::vertical(0.0, t_end),
        PcFn::constant(State(vec![0.0])),
        Arc::new(ComponentMap { ell: 1, base: sys.base_state() }),
        1,
        0.1,
    )
    .expect("vertical boundary is admissible")
}

/// Random small-variation staircase returning to the base state.
pub fn random_profile(sys: &PSystem, seed: u64, jumps: usize, tv: f64) -> PcFn {
    let base = sys.base_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = tv / (jumps + 2) as f64;
    let mut cuts = Vec::new();
    let mut vals = vec![base.clone()];
    let mut x = 0.3;
    let mut cur = base.clone();
    for _ in 0..jumps {
        x += rng.random_range(0.05..0.25);
        let mut next = cur.clone();
        let dr = rng.random_range(-0.5 * per..0.5 * per);
        let dq = rng.random_range(-(per - dr.abs())..(per - dr.abs()));
        next[0] = (next[0] + dr).clamp(0.6, 1.9);
        next[1] = (next[1] + dq).clamp(-0.35, 0.35);
        cuts.push(x);
        vals.push(next.clone());
        cur = next;
    }
    cuts.push(x + 0.2);
    vals.push(base);
    PcFn::new(cuts, vals).expect("cuts increase")
}
