//! Artifact writers: snapshot CSV, structured event log, functional
//! series and the machine-readable summary.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use fronttrack_core::boundary::Boundary;
use fronttrack_core::engine::{
    Configuration, EventKind, EventRecord, FunctionalSample,
};
use fronttrack_core::system::System;
use serde_json::json;

use crate::CliError;

/// One row per interval of constancy; the unbounded tail is written with
/// `x_right = inf`.
pub fn write_snapshots_csv(
    path: &Path,
    sys: &dyn System,
    bdry: &Boundary,
    snapshots: &[&Configuration],
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    let n = sys.n();
    let mut header = vec!["time".to_string(), "x_left".into(), "x_right".into()];
    for i in 1..=n {
        header.push(format!("u_{i}"));
    }
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for cfg in snapshots {
        let profile = cfg.to_pcfn(sys, bdry);
        let cuts = profile.cuts();
        let vals = profile.values();
        for (k, v) in vals.iter().enumerate() {
            let x_left =
                if k == 0 { "-inf".to_string() } else { format!("{}", cuts[k - 1]) };
            let x_right =
                if k == cuts.len() { "inf".to_string() } else { format!("{}", cuts[k]) };
            let mut row = vec![format!("{}", cfg.time), x_left, x_right];
            for i in 0..n {
                row.push(format!("{}", v[i]));
            }
            w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn kind_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::FrontCollision(_, _) => "front_collision",
        EventKind::BoundaryHit(_) => "boundary_hit",
        EventKind::BoundaryDataJump => "boundary_data_jump",
        EventKind::SplitStep => "split_step",
    }
}

/// Line-delimited structured event records.
pub fn write_events_jsonl(path: &Path, events: &[EventRecord]) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    for ev in events {
        let rec = json!({
            "time": ev.time,
            "kind": kind_name(&ev.kind),
            "location": ev.location,
            "incoming": ev.incoming.iter().map(|&(f, s)| json!({"family": f, "strength": s})).collect::<Vec<_>>(),
            "outgoing": ev.outgoing.iter().map(|&(f, s)| json!({"family": f, "strength": s})).collect::<Vec<_>>(),
            "dv": ev.deltas.dv,
            "dvg": ev.deltas.dvg,
            "dq": ev.deltas.dq,
            "dupsilon": ev.deltas.dupsilon,
        });
        writeln!(w, "{rec}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_functionals_csv(path: &Path, samples: &[FunctionalSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(e.to_string()))?;
    w.write_record(["time", "v", "v_g", "q", "upsilon"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    for s in samples {
        w.write_record(&[
            format!("{}", s.time),
            format!("{}", s.v),
            format!("{}", s.vg),
            format!("{}", s.q),
            format!("{}", s.upsilon),
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?)?;
    w.flush()?;
    Ok(())
}
