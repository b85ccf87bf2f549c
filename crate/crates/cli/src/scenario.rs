//! Scenario configuration: a TOML schema, load-time validation and the
//! built-in example library.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use fronttrack_core::boundary::{Boundary, BoundaryMap, ComponentMap, IdentityMap, Polyline};
use fronttrack_core::engine::SolverParams;
use fronttrack_core::estimates;
use fronttrack_core::functionals::FunctionalWeights;
use fronttrack_core::pcfn::PcFn;
use fronttrack_core::splitting::NonlocalWindow;
use fronttrack_core::state::State;
use fronttrack_core::system::{build_system, validate_system, System};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

/// Raw scenario file contents. All physical quantities are in model
/// units; `epsilon` and `rho` are mandatory so accuracy is always
/// explicit.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub system: SystemSec,
    pub boundary: BoundarySec,
    pub initial: InitialSec,
    #[serde(default)]
    pub source: Option<SourceSec>,
    pub solver: SolverSec,
    #[serde(default)]
    pub experiment: Option<ExperimentSec>,
    #[serde(default)]
    pub output: OutputSec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySec {
    pub ell: usize,
    /// `components` (trailing `n - ell` components) or `identity`.
    #[serde(default = "default_map")]
    pub map: String,
    pub margin_c: f64,
    pub gamma: PolylineSec,
    pub g: PiecewiseSec,
}

fn default_map() -> String {
    "components".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolylineSec {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSec {
    #[serde(default)]
    pub cuts: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSec {
    #[serde(default)]
    pub pieces: Option<PiecewiseSec>,
    #[serde(default)]
    pub profile: Option<ProfileSec>,
}

/// Named initial profiles.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileSec {
    /// `inside` on `[from, to)`, base state elsewhere.
    Indicator { from: f64, to: f64, inside: Vec<f64> },
    /// Random staircase around the base state.
    RandomJumps { jumps: usize, tv: f64, from: f64, seed: u64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSec {
    NonlocalWindow { window: [f64; 2], support: [f64; 2], coefficient: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSec {
    pub epsilon: f64,
    pub rho: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default)]
    pub eps_split: Option<f64>,
    #[serde(default)]
    pub proj_n: Option<usize>,
    #[serde(default)]
    pub event_budget: Option<u64>,
    /// Derive the functional coefficients from sampled interaction
    /// constants instead of the library defaults.
    #[serde(default)]
    pub fit_weights: bool,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSec {
    Nonuniqueness,
    Restriction { gamma_tilde: f64, ell_tilde: usize, margin_c: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSec {
    #[serde(default = "yes")]
    pub snapshots_csv: bool,
    #[serde(default = "yes")]
    pub events: bool,
    #[serde(default = "yes")]
    pub functionals: bool,
}

impl Default for OutputSec {
    fn default() -> Self {
        OutputSec { snapshots_csv: true, events: true, functionals: true }
    }
}

fn yes() -> bool {
    true
}

/// Everything a run needs, fully validated.
pub struct BuiltScenario {
    pub name: String,
    pub sys: Arc<dyn System>,
    pub bdry: Boundary,
    pub params: SolverParams,
    pub weights: FunctionalWeights,
    pub u0: PcFn,
    pub source: Option<NonlocalWindow>,
    pub eps_split: Option<f64>,
    pub proj_n: Option<usize>,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub experiment: Option<ExperimentSec>,
    pub output: OutputSec,
}

fn invalid(path: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { path: path.into(), message: message.into() }
}

/// Load a scenario from a file path or from the built-in library via
/// `builtin:<name>`.
pub fn load_scenario(path: &str) -> Result<Scenario, CliError> {
    let text = if let Some(name) = path.strip_prefix("builtin:") {
        builtin_text(name)
            .ok_or_else(|| invalid("scenario", format!("unknown builtin `{name}`")))?
            .to_string()
    } else {
        std::fs::read_to_string(Path::new(path))
            .map_err(|e| CliError::Io(format!("reading {path}: {e}")))?
    };
    let scenario: Scenario =
        toml::from_str(&text).map_err(|e| CliError::Parse(format!("{path}: {e}")))?;
    Ok(scenario)
}

/// Validate the scenario and materialize the solver inputs.
pub fn build_scenario(sc: &Scenario) -> Result<BuiltScenario, CliError> {
    let sys = build_system(&sc.system.name, &sc.system.params)
        .map_err(|e| invalid("system.name", e.to_string()))?;
    validate_system(sys.as_ref(), 4).map_err(|e| invalid("system", e.to_string()))?;
    let n = sys.n();

    if sc.solver.epsilon <= 0.0 {
        return Err(invalid("solver.epsilon", "must be positive"));
    }
    if sc.solver.rho <= 0.0 {
        return Err(invalid("solver.rho", "must be positive"));
    }
    if sc.solver.t_end <= 0.0 {
        return Err(invalid("solver.t_end", "must be positive"));
    }

    let ell = sc.boundary.ell;
    if ell > n {
        return Err(invalid("boundary.ell", format!("ell = {ell} exceeds n = {n}")));
    }
    let base = sys.base_state();
    let bmap: Arc<dyn BoundaryMap> = match sc.boundary.map.as_str() {
        "components" => Arc::new(ComponentMap { ell, base: base.clone() }),
        "identity" => {
            if ell != 0 {
                return Err(invalid("boundary.map", "identity map requires ell = 0"));
            }
            Arc::new(IdentityMap { n, base: base.clone() })
        }
        other => return Err(invalid("boundary.map", format!("unknown map `{other}`"))),
    };
    let gamma = Polyline::new(sc.boundary.gamma.times.clone(), sc.boundary.gamma.positions.clone())
        .map_err(|e| invalid("boundary.gamma", e.to_string()))?;
    let g = piecewise(&sc.boundary.g, n - ell).map_err(|e| invalid("boundary.g", e))?;
    let bdry = Boundary::new(sys.as_ref(), gamma, g, bmap, ell, sc.boundary.margin_c)
        .map_err(|e| invalid("boundary", e.to_string()))?;

    let u0 = initial_datum(sys.as_ref(), &sc.initial)?;

    let source = match &sc.source {
        None => None,
        Some(SourceSec::NonlocalWindow { window, support, coefficient }) => {
            if window[0] >= window[1] {
                return Err(invalid("source.window", "window must be ordered"));
            }
            if support[0] >= support[1] {
                return Err(invalid("source.support", "support must be ordered"));
            }
            Some(NonlocalWindow {
                window: (window[0], window[1]),
                support: (support[0], support[1]),
                coefficient: *coefficient,
                reference: base.clone(),
            })
        }
    };
    if source.is_some() {
        if sc.solver.eps_split.is_none() {
            return Err(invalid("solver.eps_split", "required when a source is present"));
        }
        if sc.solver.proj_n.is_none() {
            return Err(invalid("solver.proj_n", "required when a source is present"));
        }
    }

    let mut params = SolverParams::new(sc.solver.epsilon, sc.solver.rho);
    if let Some(b) = sc.solver.event_budget {
        params.event_budget = b;
    }
    let weights = if sc.solver.fit_weights {
        estimates::fit_weights(sys.as_ref(), &bdry, 300, sc.solver.seed, f64::INFINITY)
            .map_err(|e| invalid("solver.fit_weights", e.to_string()))?
            .0
    } else {
        FunctionalWeights::default()
    };

    Ok(BuiltScenario {
        name: sc.name.clone(),
        sys,
        bdry,
        params,
        weights,
        u0,
        source,
        eps_split: sc.solver.eps_split,
        proj_n: sc.solver.proj_n,
        t_end: sc.solver.t_end,
        snapshots: sc.solver.snapshots.clone(),
        experiment: sc.experiment.clone(),
        output: sc.output.clone(),
    })
}

fn piecewise(sec: &PiecewiseSec, dim: usize) -> Result<PcFn, String> {
    if sec.values.len() != sec.cuts.len() + 1 {
        return Err(format!(
            "{} values for {} cuts (need one more value than cuts)",
            sec.values.len(),
            sec.cuts.len()
        ));
    }
    for v in &sec.values {
        if v.len() != dim {
            return Err(format!("value of dimension {}, expected {dim}", v.len()));
        }
    }
    PcFn::new(
        sec.cuts.clone(),
        sec.values.iter().map(|v| State(v.clone())).collect(),
    )
    .map_err(|e| e.to_string())
}

fn initial_datum(sys: &dyn System, sec: &InitialSec) -> Result<PcFn, CliError> {
    let n = sys.n();
    let base = sys.base_state();
    match (&sec.pieces, &sec.profile) {
        (Some(_), Some(_)) => Err(invalid("initial", "give either pieces or profile, not both")),
        (None, None) => Err(invalid("initial", "missing: give pieces or profile")),
        (Some(p), None) => piecewise(p, n).map_err(|e| invalid("initial.pieces", e)),
        (None, Some(ProfileSec::Indicator { from, to, inside })) => {
            if from >= to {
                return Err(invalid("initial.profile", "range must be ordered"));
            }
            if inside.len() != n {
                return Err(invalid(
                    "initial.profile.inside",
                    format!("dimension {} vs n = {n}", inside.len()),
                ));
            }
            Ok(PcFn::step(*from, *to, State(inside.clone()), base))
        }
        (None, Some(ProfileSec::RandomJumps { jumps, tv, from, seed })) => {
            Ok(random_jumps(sys, *jumps, *tv, *from, *seed))
        }
    }
}

/// Random small-variation staircase: the per-jump 1-norm budget keeps the
/// total variation under `tv`; the profile returns to the base state.
pub fn random_jumps(sys: &dyn System, jumps: usize, tv: f64, from: f64, seed: u64) -> PcFn {
    let n = sys.n();
    let base = sys.base_state();
    let bx = sys.omega_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per = tv / (jumps + 2) as f64;
    let mut cuts = Vec::new();
    let mut vals = vec![base.clone()];
    let mut x = from;
    let mut cur = base.clone();
    for _ in 0..jumps {
        x += rng.random_range(0.05..0.3);
        let mut next = cur.clone();
        let mut budget = per;
        for i in 0..n {
            let d = if i + 1 == n {
                rng.random_range(-budget..budget)
            } else {
                rng.random_range(-0.5 * budget..0.5 * budget)
            };
            budget -= d.abs();
            let lo = bx.lo[i] + 0.05 * (bx.hi[i] - bx.lo[i]);
            let hi = bx.hi[i] - 0.05 * (bx.hi[i] - bx.lo[i]);
            next[i] = (next[i] + d).clamp(lo, hi);
        }
        cuts.push(x);
        vals.push(next.clone());
        cur = next;
    }
    cuts.push(x + 0.3);
    vals.push(base);
    PcFn::new(cuts, vals).expect("generated cuts are increasing")
}

/// Random boundary-data steps of bounded size.
pub fn random_gdata(dim: usize, jumps: usize, size: f64, dt: f64, seed: u64) -> PcFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuts = Vec::new();
    let mut vals = vec![State::zeros(dim)];
    for k in 0..jumps {
        cuts.push(0.3 + dt * k as f64);
        vals.push(State((0..dim).map(|_| rng.random_range(-size..size)).collect()));
    }
    PcFn::new(cuts, vals).expect("generated cuts are increasing")
}

pub fn builtin_names() -> &'static [&'static str] {
    &[
        "advection-exact",
        "burgers-fan",
        "psystem-boundary",
        "psystem-study",
        "eq8-nonuniqueness",
    ]
}

fn builtin_text(name: &str) -> Option<&'static str> {
    match name {
        "advection-exact" => Some(
            r#"
name = "advection-exact"

[system]
name = "advection"

[boundary]
ell = 0
map = "identity"
margin_c = 0.4
gamma = { times = [0.0, 6.0], positions = [0.0, 0.0] }
g = { values = [[0.0]] }

[initial]
profile = { kind = "indicator", from = 0.0, to = 1.0, inside = [1.0] }

[solver]
epsilon = 0.01
rho = 1e-8
t_end = 5.0
"#,
        ),
        "burgers-fan" => Some(
            r#"
name = "burgers-fan"

[system]
name = "burgers"

[boundary]
ell = 0
map = "identity"
margin_c = 0.4
gamma = { times = [0.0, 10.0], positions = [-1.0, -26.0] }
g = { values = [[0.0]] }

[initial]
profile = { kind = "indicator", from = 0.0, to = 1.0, inside = [1.0] }

[solver]
epsilon = 0.05
rho = 1e-6
t_end = 3.5
snapshots = [1.0, 2.5]
"#,
        ),
        "psystem-boundary" => Some(
            r#"
name = "psystem-boundary"

[system]
name = "p-system"

[boundary]
ell = 1
map = "components"
margin_c = 0.1
gamma = { times = [0.0, 3.0], positions = [0.0, 0.0] }
g = { cuts = [0.3, 0.7, 1.1, 1.5, 1.9], values = [[0.0], [0.012], [-0.008], [0.01], [-0.012], [0.0]] }

[initial]
profile = { kind = "random-jumps", jumps = 20, tv = 0.3, from = 0.4, seed = 42 }

[solver]
epsilon = 0.02
rho = 4e-4
t_end = 2.0
snapshots = [1.0]
"#,
        ),
        "psystem-study" => Some(
            r#"
name = "psystem-study"

[system]
name = "p-system"

[boundary]
ell = 1
map = "components"
margin_c = 0.1
gamma = { times = [0.0, 3.0], positions = [0.0, 0.0] }
g = { values = [[0.0]] }

[initial]
profile = { kind = "random-jumps", jumps = 3, tv = 0.45, from = 0.4, seed = 23 }

[solver]
epsilon = 0.02
rho = 1e-4
t_end = 2.0
"#,
        ),
        "eq8-nonuniqueness" => Some(
            r#"
name = "eq8-nonuniqueness"

[system]
name = "advection"

[boundary]
ell = 0
map = "identity"
margin_c = 0.4
gamma = { times = [0.0, 2.0], positions = [0.0, 0.0] }
g = { values = [[0.0]] }

[initial]
profile = { kind = "indicator", from = 0.0, to = 1.0, inside = [1.0] }

[source]
kind = "nonlocal-window"
window = [0.0, 1.0]
support = [3.0, 4.0]
coefficient = 1.0

[solver]
epsilon = 0.05
rho = 1e-8
t_end = 1.0
eps_split = 0.03125
proj_n = 10

[experiment]
kind = "nonuniqueness"
"#,
        ),
        _ => None,
    }
}
