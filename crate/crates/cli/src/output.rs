//! Report serialization. Reports are JSON objects with a fixed key order so
//! that repeated runs produce byte-identical output; time series are CSV
//! with a header row.

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use symflow_core::coords::{ChartReport, ReducedStructureReport};
use symflow_core::expr::{Point, VarSet};
use symflow_core::report::Report;

pub fn point_json(vs: &VarSet, pt: &Point) -> Value {
    let mut m = Map::new();
    for (name, v) in vs.names().iter().zip(&pt.u) {
        m.insert(name.clone(), json!(v));
    }
    m.insert(vs.time().to_string(), json!(pt.t));
    Value::Object(m)
}

fn verdict_str(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// The common report body: check name, parameters, sampling stats,
/// residuals, worst point, verdict.
pub fn report_json(vs: &VarSet, params: Value, rep: &Report) -> Value {
    json!({
        "check": rep.kind.to_string(),
        "params": params,
        "seed": rep.seed,
        "points_sampled": rep.points_sampled,
        "excluded_points": rep.points_excluded,
        "max_residual": rep.max_residual,
        "mean_residual": rep.mean_residual,
        "worst_point": rep.worst_point.as_ref().map(|p| point_json(vs, p)),
        "verdict": verdict_str(rep.passed()),
    })
}

pub fn chart_report_json(vs: &VarSet, params: Value, rep: &ChartReport) -> Value {
    json!({
        "check": "adapted-chart",
        "params": params,
        "seed": rep.seed,
        "points_sampled": rep.points_sampled,
        "excluded_points": rep.points_excluded,
        "max_residual": rep.max_w_residual.max(rep.max_zeta_residual),
        "max_w_residual": rep.max_w_residual,
        "mean_w_residual": rep.mean_w_residual,
        "max_zeta_residual": rep.max_zeta_residual,
        "mean_zeta_residual": rep.mean_zeta_residual,
        "worst_point": rep.worst_point.as_ref().map(|p| point_json(vs, p)),
        "verdict": verdict_str(rep.passed()),
    })
}

pub fn reduced_report_json(vs: &VarSet, params: Value, rep: &ReducedStructureReport) -> Value {
    let _ = vs;
    json!({
        "check": "reduced-structure",
        "params": params,
        "seed": rep.seed,
        "points_sampled": rep.points_sampled,
        "excluded_points": rep.points_excluded,
        "classification": rep.classification.to_string(),
        "w_residuals": rep.w_residuals,
        "zeta_residual": rep.zeta_residual,
        "flagged_invariants": rep.flagged,
        "chart_verified": rep.chart.passed(),
        "verdict": verdict_str(rep.passed()),
    })
}

/// Pretty JSON with a trailing newline, written to `--out` when given and
/// always echoed to stdout.
pub fn emit_json(value: &Value, out: Option<&std::path::Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(path) = out {
        std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    print!("{text}");
    Ok(())
}

/// CSV with a header row; numbers use the shortest round-trip formatting.
pub fn emit_csv(
    header: &[String],
    rows: impl Iterator<Item = Vec<f64>>,
    out: Option<&std::path::Path>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    let bytes = wtr.into_inner()?;
    if let Some(path) = out {
        std::fs::write(path, &bytes).with_context(|| format!("cannot write {}", path.display()))?;
    } else {
        use std::io::Write;
        std::io::stdout().write_all(&bytes)?;
    }
    Ok(())
}
