//! `symflow` — load a system-definition file, run symmetry/conservation
//! checks, and emit machine-readable reports.
//!
//! Exit codes: 0 every requested verdict passed, 1 a verdict failed or a
//! check could not be completed, 2 usage or schema error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use symflow_cli::schema::{self, Loaded, LoadedSymmetry, SymmetryKind};
use symflow_cli::output;
use symflow_core::dynsys::LambdaSpec;
use symflow_core::numint::IntegratorConfig;
use symflow_core::sample::Sampler;
use symflow_core::{conserved, coords, hamiltonian, symmetry, DEFAULT_TOL};

#[derive(Parser)]
#[command(name = "symflow", version, about = "Symmetry and conservation checks for dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification check from a system file.
    Check(CheckArgs),
    /// Estimate the scalar lambda explaining the symmetry residual per point.
    EstimateLambda(EstimateArgs),
    /// Construct symmetries from the file's constants of motion at a point.
    Ovsjannikov(OvsjannikovArgs),
    /// Track the generating function G and its deviation along a trajectory.
    HamDeviate(HamDeviateArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    Symmetry,
    Constant,
    Liouville,
    Chart,
    Reduced,
}

#[derive(Args)]
struct CheckArgs {
    /// System-definition JSON file.
    file: PathBuf,
    #[arg(long, value_enum)]
    what: What,
    /// Which symmetry/constant to check (defaults to the only one).
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    points: usize,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial condition for the drift part of a constant check,
    /// e.g. "x=0.3,y=0.7,z=0.5" (overrides the file's drift block).
    #[arg(long)]
    u0: Option<String>,
    /// Time span for the drift part, e.g. "0:5".
    #[arg(long)]
    t_span: Option<String>,
    /// Integrator tolerance for trajectory checks.
    #[arg(long, default_value_t = 1e-10)]
    integ_tol: f64,
    /// Drift tolerance (defaults to the file's, then 1e-6).
    #[arg(long)]
    drift_tol: Option<f64>,
}

#[derive(Args)]
struct EstimateArgs {
    file: PathBuf,
    #[arg(long)]
    name: Option<String>,
    #[arg(long, default_value_t = 200)]
    points: usize,
    /// Defect threshold below which a scalar lambda is declared to fit.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OvsjannikovArgs {
    file: PathBuf,
    /// Evaluation point, e.g. "x=0.6,y=1.1,z=0.9,t=0".
    #[arg(long)]
    at: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HamDeviateArgs {
    file: PathBuf,
    /// Initial condition, e.g. "q1=0,q2=0,p1=1,p2=0".
    #[arg(long)]
    u0: String,
    /// Integration span, e.g. "0:10".
    #[arg(long)]
    t_span: String,
    /// Output grid size.
    #[arg(long, default_value_t = 400)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    integ_tol: f64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::EstimateLambda(args) => cmd_estimate_lambda(args),
        Command::Ovsjannikov(args) => cmd_ovsjannikov(args),
        Command::HamDeviate(args) => cmd_ham_deviate(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Schema(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Schema failures exit 2; failures while running a well-formed request
/// exit 1.
enum Failure {
    Schema(anyhow::Error),
    Run(anyhow::Error),
}

type CmdResult = std::result::Result<bool, Failure>;

fn load(path: &std::path::Path) -> std::result::Result<Loaded, Failure> {
    schema::load(path).map_err(Failure::Schema)
}

fn sampler_for(loaded: &Loaded, points: usize, guards: Vec<symflow_core::Expr>) -> Sampler {
    Sampler::new(
        loaded.sampling_box.clone(),
        loaded.t_range,
        points,
        loaded.seed,
    )
    .with_guards(guards)
}

fn base_params(loaded: &Loaded, args: &CheckArgs) -> Value {
    let vs = loaded.ds.vars();
    let mut box_json = Map::new();
    for (name, range) in vs.names().iter().zip(&loaded.sampling_box) {
        box_json.insert(name.clone(), json!([range.0, range.1]));
    }
    json!({
        "file": args.file.display().to_string(),
        "system": loaded.name,
        "name": args.name,
        "points": args.points,
        "tol": args.tol,
        "box": Value::Object(box_json),
        "t_range": [loaded.t_range.0, loaded.t_range.1],
    })
}

fn cmd_check(args: CheckArgs) -> CmdResult {
    let loaded = load(&args.file)?;
    let vs = loaded.ds.vars().clone();
    let params = base_params(&loaded, &args);
    match args.what {
        What::Symmetry => {
            let sym = loaded.symmetry(args.name.as_deref()).map_err(Failure::Schema)?;
            let sampler = sampler_for(&loaded, args.points, Vec::new());
            let report = run_symmetry_check(&loaded, sym, &sampler, args.tol)
                .map_err(Failure::Run)?;
            let value = output::report_json(&vs, params, &report);
            output::emit_json(&value, args.out.as_deref()).map_err(Failure::Run)?;
            Ok(report.passed())
        }
        What::Constant => {
            let constant = loaded.constant(args.name.as_deref()).map_err(Failure::Schema)?;
            let sampler = sampler_for(&loaded, args.points, constant.guards.clone());
            let pointwise =
                conserved::check_constant_pointwise(&loaded.ds, &constant.expr, &sampler, args.tol)
                    .map_err(|e| Failure::Run(e.into()))?;
            let drift_spec = match (&args.u0, &args.t_span) {
                (Some(u0), Some(span)) => {
                    let u0 = schema::parse_point(&vs, u0, 0.0).map_err(Failure::Schema)?;
                    let span = schema::parse_span(span).map_err(Failure::Schema)?;
                    let tol = args.drift_tol.unwrap_or(1e-6);
                    Some((u0, span, tol))
                }
                (None, None) => loaded
                    .drift
                    .as_ref()
                    .map(|d| (d.u0.clone(), d.t_span, args.drift_tol.unwrap_or(d.tol))),
                _ => {
                    return Err(Failure::Schema(anyhow!(
                        "--u0 and --t-span must be given together"
                    )))
                }
            };
            let drift = match drift_spec {
                None => None,
                Some((u0, span, tol)) => {
                    let cfg = IntegratorConfig::default().with_tol(args.integ_tol);
                    Some(
                        conserved::check_drift(&loaded.ds, &constant.expr, &u0, span, &cfg, tol)
                            .map_err(|e| Failure::Run(e.into()))?,
                    )
                }
            };
            let passed =
                pointwise.passed() && drift.as_ref().is_none_or(|d| d.passed());
            let drift_json = drift.map(|d| {
                json!({
                    "initial_value": d.initial_value,
                    "max_drift": d.max_drift,
                    "grid_points": d.grid_points,
                    "accepted_steps": d.accepted_steps,
                    "rejected_steps": d.rejected_steps,
                    "tolerance": d.tolerance,
                    "integrator_tol": args.integ_tol,
                    "verdict": if d.passed() { "pass" } else { "fail" },
                })
            });
            let value = json!({
                "check": "constant",
                "params": params,
                "pointwise": output::report_json(&vs, json!(null), &pointwise),
                "drift": drift_json,
                "verdict": if passed { "pass" } else { "fail" },
            });
            output::emit_json(&value, args.out.as_deref()).map_err(Failure::Run)?;
            Ok(passed)
        }
        What::Liouville => {
            let sym = loaded.symmetry(args.name.as_deref()).map_err(Failure::Schema)?;
            let sampler = sampler_for(&loaded, args.points, Vec::new());
            let out = conserved::check_liouville_field(&loaded.ds, &sym.field, &sampler, args.tol)
                .map_err(|e| Failure::Run(e.into()))?;
            let mut value = output::report_json(&vs, params, &out.report);
            value
                .as_object_mut()
                .unwrap()
                .insert("max_abs_div_psi".into(), json!(out.max_abs_div_psi));
            output::emit_json(&value, args.out.as_deref()).map_err(Failure::Run)?;
            Ok(out.report.passed())
        }
        What::Chart => {
            let chart = loaded
                .chart
                .as_ref()
                .ok_or_else(|| Failure::Schema(anyhow!("the file declares no chart")))?;
            let sym = loaded
                .symmetry(Some(&chart.symmetry))
                .map_err(Failure::Schema)?;
            let sampler = sampler_for(&loaded, args.points, chart.guards.clone());
            let report = coords::verify_chart(&loaded.ds, &sym.field, &chart.chart, &sampler, args.tol)
                .map_err(|e| Failure::Run(e.into()))?;
            let value = output::chart_report_json(&vs, params, &report);
            output::emit_json(&value, args.out.as_deref()).map_err(Failure::Run)?;
            Ok(report.passed())
        }
        What::Reduced => {
            let chart = loaded
                .chart
                .as_ref()
                .ok_or_else(|| Failure::Schema(anyhow!("the file declares no chart")))?;
            let sym = loaded
                .symmetry(Some(&chart.symmetry))
                .map_err(Failure::Schema)?;
            let sampler = sampler_for(&loaded, args.points, chart.guards.clone());
            let report = coords::check_reduced_structure(
                &loaded.ds,
                &sym.field,
                &chart.chart,
                &sampler,
                args.tol,
            )
            .map_err(|e| Failure::Run(e.into()))?;
            // Declared reduced right-hand sides are checked along the
            // file's drift trajectory when both are present.
            let declared = match (&chart.reduced, &loaded.drift) {
                (Some(reduced), Some(drift)) => {
                    let cfg = IntegratorConfig::default().with_tol(args.integ_tol);
                    let series = coords::map_trajectory_to_chart(
                        &loaded.ds,
                        &chart.chart,
                        &drift.u0,
                        drift.t_span,
                        &cfg,
                        Some(reduced),
                    )
                    .map_err(|e| Failure::Run(e.into()))?;
                    let w_res = series.w_rhs_residuals.unwrap_or_default();
                    let z_res = series.z_rhs_residual.unwrap_or(0.0);
                    let ok = w_res.iter().all(|r| *r <= args.tol) && z_res <= args.tol;
                    Some((w_res, z_res, ok))
                }
                _ => None,
            };
            let mut value = output::reduced_report_json(&vs, params, &report);
            let mut passed = report.passed();
            if let Some((w_res, z_res, ok)) = declared {
                let obj = value.as_object_mut().unwrap();
                obj.insert(
                    "declared_rhs".into(),
                    json!({
                        "w_residuals": w_res,
                        "z_residual": z_res,
                        "verdict": if ok { "pass" } else { "fail" },
                    }),
                );
                passed = passed && ok;
                obj.insert(
                    "verdict".into(),
                    json!(if passed { "pass" } else { "fail" }),
                );
            }
            output::emit_json(&value, args.out.as_deref()).map_err(Failure::Run)?;
            Ok(passed)
        }
    }
}

/// Dispatch on the declared kind of the symmetry.
fn run_symmetry_check(
    loaded: &Loaded,
    sym: &LoadedSymmetry,
    sampler: &Sampler,
    tol: f64,
) -> Result<symflow_core::Report> {
    let report = match (sym.kind, &sym.lambda) {
        (SymmetryKind::Standard, _) => {
            symmetry::check_standard(&loaded.ds, &sym.field, sampler, tol)?
        }
        (SymmetryKind::Lambda, Some(LambdaSpec::Scalar(lambda))) => {
            symmetry::check_lambda(&loaded.ds, &sym.field, lambda, sampler, tol)?
        }
        (SymmetryKind::CapitalLambda, Some(LambdaSpec::Matrix(matrix))) => {
            symmetry::check_capital_lambda(&loaded.ds, &sym.field, matrix, sampler, tol)?
        }
        _ => bail!("symmetry `{}` has inconsistent lambda data", sym.name),
    };
    Ok(report)
}

fn cmd_estimate_lambda(args: EstimateArgs) -> CmdResult {
    let loaded = load(&args.file)?;
    let vs = loaded.ds.vars().clone();
    let sym = loaded.symmetry(args.name.as_deref()).map_err(Failure::Schema)?;
    let sampler = sampler_for(&loaded, args.points, Vec::new());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut max_defect = 0.0f64;
    let mut degenerate = 0usize;
    sampler
        .for_each(&vs, |pt| {
            match symmetry::estimate_lambda(&loaded.ds, &sym.field, pt) {
                Ok(est) => {
                    let mut row = pt.u.clone();
                    row.push(pt.t);
                    row.push(est.lambda_hat);
                    row.push(est.parallel_defect);
                    max_defect = max_defect.max(est.parallel_defect);
                    rows.push(row);
                    Ok(())
                }
                Err(symmetry::SymmetryError::DegenerateField { .. }) => {
                    degenerate += 1;
                    Err(symflow_core::EvalError::Domain("degenerate field"))
                }
                Err(symmetry::SymmetryError::Eval(e)) => Err(e),
                Err(e) => Err(symflow_core::EvalError::Unbound(e.to_string())),
            }
        })
        .map_err(|e| Failure::Run(e.into()))?;

    let mut header: Vec<String> = vs.names().to_vec();
    header.push(vs.time().to_string());
    header.push("lambda_hat".to_string());
    header.push("defect".to_string());
    output::emit_csv(&header, rows.iter().cloned(), args.out.as_deref())
        .map_err(Failure::Run)?;

    let fits = max_defect <= args.tol;
    let summary = json!({
        "symmetry": sym.name,
        "points": rows.len(),
        "degenerate_points": degenerate,
        "max_defect": max_defect,
        "scalar_lambda_fits": fits,
        "note": if fits {
            "a scalar lambda explains the residual at every sampled point"
        } else {
            "no scalar lambda fits the residual"
        },
    });
    eprintln!("{}", serde_json::to_string(&summary).map_err(|e| Failure::Run(e.into()))?);
    Ok(true)
}

fn cmd_ovsjannikov(args: OvsjannikovArgs) -> CmdResult {
    let loaded = load(&args.file)?;
    let vs = loaded.ds.vars().clone();
    let n = loaded.ds.n();
    if loaded.constants.len() != n {
        return Err(Failure::Schema(anyhow!(
            "the construction needs exactly {n} constants, the file declares {}",
            loaded.constants.len()
        )));
    }
    let pt = schema::parse_point(&vs, &args.at, 0.0).map_err(Failure::Schema)?;
    let kappas: Vec<_> = loaded.constants.iter().map(|c| c.expr.clone()).collect();
    let out = conserved::ovsjannikov_construct(&loaded.ds, &kappas, &pt)
        .map_err(|e| Failure::Run(anyhow!("{e}")))?;
    let value = json!({
        "check": "ovsjannikov",
        "params": {
            "file": args.file.display().to_string(),
            "system": loaded.name,
            "at": output::point_json(&vs, &pt),
        },
        "constants": loaded.constants.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        "p": out.p,
        "fields": out.p,
        "residuals": out.residuals,
        "identity_error": out.identity_error,
        "condition_number": out.condition_number,
    });
    output::emit_json(&value, args.out.as_deref()).map_err(Failure::Run)?;
    Ok(true)
}

fn cmd_ham_deviate(args: HamDeviateArgs) -> CmdResult {
    let loaded = load(&args.file)?;
    let ham = loaded
        .hamiltonian
        .as_ref()
        .ok_or_else(|| Failure::Schema(anyhow!("the file declares no hamiltonian block")))?;
    let vs = ham.hs.vars().clone();
    let u0 = schema::parse_point(&vs, &args.u0, 0.0).map_err(Failure::Schema)?;
    let span = schema::parse_span(&args.t_span).map_err(Failure::Schema)?;
    let cfg = IntegratorConfig::default()
        .with_tol(args.integ_tol)
        .with_grid(args.grid.max(2));
    let series = hamiltonian::track_generating_function(&ham.hs, &u0, span, &cfg)
        .map_err(|e| Failure::Run(anyhow!("{e}")))?;

    let mut header = vec!["t".to_string(), "G".to_string(), "G_dot".to_string()];
    header.extend(ham.extras.iter().map(|(name, _)| name.clone()));

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(series.t.len());
    for i in 0..series.t.len() {
        let mut row = vec![series.t[i], series.g[i], series.g_dot[i]];
        let pt = symflow_core::Point::new(series.states[i].clone(), series.t[i]);
        for (_, expr) in &ham.extras {
            let v = expr.eval(&vs, &pt).map_err(|e| Failure::Run(anyhow!("{e}")))?;
            row.push(v);
        }
        rows.push(row);
    }
    output::emit_csv(&header, rows.into_iter(), args.out.as_deref()).map_err(Failure::Run)?;
    Ok(true)
}
