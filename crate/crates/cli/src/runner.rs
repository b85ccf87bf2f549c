//! Scenario execution: runs, invariant reporting, convergence studies
//! and parallel sweeps.

use std::path::{Path, PathBuf};

use serde_json::json;

use fronttrack_core::engine::{Engine, EventKind, RunOptions, RunResult, SolverParams};
use fronttrack_core::splitting::{euler_polygonal, SplittingParams};
use fronttrack_core::traces::{nonuniqueness_experiment, restriction_experiment, CurveSpec};

use crate::scenario::{build_scenario, BuiltScenario, ExperimentSec, Scenario};
use crate::{io, CliError};

/// Outcome of one invariant check.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub name: String,
    pub ok: bool,
    pub events: usize,
    pub properties: Vec<PropertyCheck>,
    pub experiment: Option<serde_json::Value>,
}

pub struct ScenarioArtifacts {
    pub run: RunResult,
    pub summary: RunSummary,
}

/// Execute a built scenario, write its artifact bundle into `out_dir`
/// (when given) and evaluate the invariant suite.
pub fn run_scenario(
    built: &BuiltScenario,
    out_dir: Option<&Path>,
) -> Result<ScenarioArtifacts, CliError> {
    let eng = Engine::new(
        built.sys.as_ref(),
        &built.bdry,
        built.params.clone(),
        built.weights.clone(),
    );
    let mut opts = RunOptions::to_time(built.t_end);
    opts.snapshot_times = built.snapshots.clone();
    opts.keep_event_snapshots = true;
    opts.log_functionals = true;

    let run = match &built.source {
        None => eng.run(&built.u0, &opts)?,
        Some(src) => {
            let sp = SplittingParams {
                eps_split: built.eps_split.expect("validated"),
                proj_n: built.proj_n.expect("validated"),
                budget: None,
            };
            euler_polygonal(&eng, src, &sp, &built.u0, built.t_end, &opts)?
        }
    };

    let mut properties = Vec::new();
    let eps = built.params.epsilon;
    let n = built.sys.n();

    if built.source.is_none() {
        let worst = run
            .events
            .iter()
            .map(|e| e.deltas.dupsilon)
            .fold(f64::NEG_INFINITY, f64::max);
        let worst = if worst.is_finite() { worst } else { 0.0 };
        properties.push(PropertyCheck {
            name: "upsilon-monotone".into(),
            pass: worst <= 1e-9,
            value: worst,
            detail: "largest event-wise functional increment".into(),
        });
    }

    let np_max = run
        .trajectory
        .iter()
        .map(|c| c.np_total(n))
        .fold(0.0_f64, f64::max);
    properties.push(PropertyCheck {
        name: "nonphysical-strength".into(),
        pass: np_max <= 2.0 * eps + 1e-12,
        value: np_max,
        detail: format!("cap 2 eps = {}", 2.0 * eps),
    });

    let raref_max = run
        .trajectory
        .iter()
        .map(|c| c.max_rarefaction(built.sys.as_ref()))
        .fold(0.0_f64, f64::max);
    properties.push(PropertyCheck {
        name: "rarefaction-size".into(),
        pass: raref_max <= 3.0 * eps,
        value: raref_max,
        detail: format!("cap 3 eps = {}", 3.0 * eps),
    });

    let chain_ok = run
        .trajectory
        .iter()
        .all(|c| c.validate(built.sys.as_ref(), &built.bdry, built.params.curve_mode, false).is_ok());
    properties.push(PropertyCheck {
        name: "configuration-invariants".into(),
        pass: chain_ok,
        value: if chain_ok { 0.0 } else { 1.0 },
        detail: "ordering, chaining, boundary condition".into(),
    });

    let budget_ok = (run.events.len() as u64) < built.params.event_budget;
    properties.push(PropertyCheck {
        name: "finite-termination".into(),
        pass: budget_ok,
        value: run.events.len() as f64,
        detail: format!("budget {}", built.params.event_budget),
    });

    let experiment = match &built.experiment {
        None => None,
        Some(ExperimentSec::Nonuniqueness) => {
            let rep = nonuniqueness_experiment(
                built.params.epsilon,
                built.params.rho,
                built.eps_split.unwrap_or(0.03125),
                built.proj_n.unwrap_or(10),
            )?;
            properties.push(PropertyCheck {
                name: "restricted-run-trivial".into(),
                pass: rep.restricted_norm == 0.0,
                value: rep.restricted_norm,
                detail: "L1 norm of the restricted solution".into(),
            });
            properties.push(PropertyCheck {
                name: "inner-trace-vanishes".into(),
                pass: rep.trace_sup == 0.0,
                value: rep.trace_sup,
                detail: "sup of the harvested trace".into(),
            });
            Some(json!({
                "kind": "nonuniqueness",
                "mass_on_34": rep.mass_on_34,
                "restricted_norm": rep.restricted_norm,
                "trace_sup": rep.trace_sup,
            }))
        }
        Some(ExperimentSec::Restriction { gamma_tilde, ell_tilde, margin_c }) => {
            let curve = CurveSpec::vertical(*gamma_tilde, *ell_tilde, *margin_c);
            let d = restriction_experiment(&eng, &built.u0, &curve, built.t_end, &built.snapshots)?;
            properties.push(PropertyCheck {
                name: "restriction-discrepancy".into(),
                pass: d <= 5.0 * eps,
                value: d,
                detail: format!("cap 5 eps = {}", 5.0 * eps),
            });
            Some(json!({
                "kind": "restriction",
                "gamma_tilde": gamma_tilde,
                "discrepancy": d,
            }))
        }
    };

    let ok = properties.iter().all(|p| p.pass);
    let summary = RunSummary {
        name: built.name.clone(),
        ok,
        events: run.events.len(),
        properties,
        experiment,
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        if built.output.snapshots_csv {
            let mut keep: Vec<&fronttrack_core::engine::Configuration> = Vec::new();
            keep.push(run.trajectory.first().expect("trajectory never empty"));
            for &t in &built.snapshots {
                if let Some(c) = run.trajectory.iter().find(|c| (c.time - t).abs() < 1e-12) {
                    keep.push(c);
                }
            }
            keep.push(&run.final_config);
            io::write_snapshots_csv(&dir.join("snapshots.csv"), built.sys.as_ref(), &built.bdry, &keep)?;
        }
        if built.output.events {
            io::write_events_jsonl(&dir.join("events.jsonl"), &run.events)?;
        }
        if built.output.functionals {
            io::write_functionals_csv(&dir.join("functionals.csv"), &run.functionals)?;
        }
        io::write_json(&dir.join("summary.json"), &summary_json(&summary))?;
    }

    Ok(ScenarioArtifacts { run, summary })
}

pub fn summary_json(s: &RunSummary) -> serde_json::Value {
    json!({
        "name": s.name,
        "ok": s.ok,
        "events": s.events,
        "properties": s.properties.iter().map(|p| json!({
            "name": p.name,
            "pass": p.pass,
            "value": p.value,
            "detail": p.detail,
        })).collect::<Vec<_>>(),
        "experiment": s.experiment,
    })
}

/// Convergence study: run the scenario on a grid of accuracies, compare
/// successive solutions at the final time and fit the decay ratio.
pub struct StudyRow {
    pub epsilon: f64,
    pub distance_to_previous: Option<f64>,
    pub ratio: Option<f64>,
}

pub fn convergence_study(
    sc: &Scenario,
    eps_grid: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<StudyRow>, CliError> {
    if eps_grid.len() < 3 {
        return Err(CliError::Validation {
            path: "study.eps".into(),
            message: "need at least three grid values".into(),
        });
    }
    let built0 = build_scenario(sc)?;
    let rho_scale = built0.params.rho / (built0.params.epsilon * built0.params.epsilon);
    let mut rows: Vec<StudyRow> = Vec::new();
    let mut previous: Option<fronttrack_core::pcfn::PcFn> = None;
    for &eps in eps_grid {
        let mut built = build_scenario(sc)?;
        built.params = SolverParams::new(eps, rho_scale * eps * eps);
        let arts = run_scenario(&built, None)?;
        let profile = arts
            .run
            .final_config
            .to_pcfn(built.sys.as_ref(), &built.bdry);
        let distance = previous.as_ref().map(|p| p.l1_distance(&profile));
        let ratio = match (&distance, rows.last().and_then(|r| r.distance_to_previous)) {
            (Some(d), Some(prev)) if prev > 0.0 => Some(d / prev),
            _ => None,
        };
        rows.push(StudyRow { epsilon: eps, distance_to_previous: distance, ratio });
        previous = Some(profile);
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("study.csv"))
            .map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(["epsilon", "distance_to_previous", "ratio"])
            .map_err(|e| CliError::Io(e.to_string()))?;
        for r in &rows {
            w.write_record(&[
                format!("{}", r.epsilon),
                r.distance_to_previous.map_or(String::new(), |d| format!("{d}")),
                r.ratio.map_or(String::new(), |d| format!("{d}")),
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(rows)
}

/// Run several scenarios in a worker pool; each worker owns its run.
pub fn sweep(paths: &[String], out_root: &Path, jobs: usize) -> Result<Vec<RunSummary>, CliError> {
    let jobs = jobs.max(1);
    let mut results: Vec<Option<Result<RunSummary, CliError>>> = Vec::new();
    results.resize_with(paths.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results = std::sync::Mutex::new(results);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(paths.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if k >= paths.len() {
                    break;
                }
                let outcome = (|| {
                    let sc = crate::scenario::load_scenario(&paths[k])?;
                    let built = build_scenario(&sc)?;
                    let dir = out_root.join(dir_name(&paths[k], &built.name, k));
                    Ok(run_scenario(&built, Some(&dir))?.summary)
                })();
                results.lock().unwrap()[k] = Some(outcome);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("worker finished"))
        .collect()
}

fn dir_name(path: &str, name: &str, k: usize) -> PathBuf {
    if !name.is_empty() {
        return PathBuf::from(name);
    }
    let stem = Path::new(path.strip_prefix("builtin:").unwrap_or(path))
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| format!("run-{k}"));
    PathBuf::from(stem)
}

/// Quick textual report used by the binary.
pub fn format_summary(s: &RunSummary) -> String {
    let mut out = format!(
        "scenario {}: {} ({} events)\n",
        if s.name.is_empty() { "<unnamed>" } else { &s.name },
        if s.ok { "ok" } else { "FAILED" },
        s.events
    );
    for p in &s.properties {
        out.push_str(&format!(
            "  [{}] {} = {:.6e} ({})\n",
            if p.pass { "pass" } else { "FAIL" },
            p.name,
            p.value,
            p.detail
        ));
    }
    out
}

/// Count events of each kind (handy in logs and tests).
pub fn event_histogram(run: &RunResult) -> (usize, usize, usize, usize) {
    let mut c = (0, 0, 0, 0);
    for e in &run.events {
        match e.kind {
            EventKind::FrontCollision(_, _) => c.0 += 1,
            EventKind::BoundaryHit(_) => c.1 += 1,
            EventKind::BoundaryDataJump => c.2 += 1,
            EventKind::SplitStep => c.3 += 1,
        }
    }
    c
}
