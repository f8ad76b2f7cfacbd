//! Symmetry-adapted coordinates: n−1 invariants `w_j(u)` with `X w_j = 0`
//! plus a rectifying coordinate ζ with `X ζ = 1`. In such a chart the
//! system takes the form `ẇ_j = W_j, ζ̇ = Z` where the `W_j` do not depend
//! on ζ when the symmetry is standard, and only `Z` may depend on ζ for a
//! λ-symmetry.
//!
//! The reduction is verified, never used as the integration vehicle: the
//! checks below need only the forward chart map, not its inverse. The key
//! device is that the flow of X fixes every `w_j` and moves only ζ, so
//! "`W_j` does not depend on ζ" becomes the pointwise statement
//! `X(D_t w_j) = 0`.

use crate::dynsys::{self, DynamicalSystem, VectorField};
use crate::expr::{self, EvalError, Expr, Point, VarSet};
use crate::numint::{self, IntegratorConfig, NumIntError};
use crate::report::Verdict;
use crate::sample::{SampleError, Sampler};

#[derive(Debug, thiserror::Error)]
pub enum CoordsError {
    #[error("chart needs {expected} invariants, got {got}")]
    Count { expected: usize, got: usize },
    #[error("invariant w{0} depends on time")]
    TimeDependentInvariant(usize),
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Integration(#[from] NumIntError),
    #[error("declared reduced right-hand side needs {expected} components, got {got}")]
    ReducedCount { expected: usize, got: usize },
}

/// Chart data: invariants are functions of the state only.
#[derive(Debug, Clone)]
pub struct AdaptedChart {
    pub w: Vec<Expr>,
    pub zeta: Expr,
}

impl AdaptedChart {
    pub fn new(vs: &VarSet, w: Vec<Expr>, zeta: Expr) -> Result<AdaptedChart, CoordsError> {
        if w.len() + 1 != vs.n() {
            return Err(CoordsError::Count {
                expected: vs.n() - 1,
                got: w.len(),
            });
        }
        for (j, wj) in w.iter().enumerate() {
            if wj.references(vs.time()) {
                return Err(CoordsError::TimeDependentInvariant(j + 1));
            }
        }
        Ok(AdaptedChart { w, zeta })
    }

    /// Variable names of the chart image: `w1 .. w{n-1}, zeta`. Declared
    /// reduced right-hand sides are written in these names plus time.
    pub fn image_names(n: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..n).map(|j| format!("w{j}")).collect();
        names.push("zeta".to_string());
        names
    }
}

/// Chart verification outcome: invariance `|X w_j|` and rectification
/// `|X ζ − 1|` aggregated separately.
#[derive(Debug, Clone)]
pub struct ChartReport {
    pub points_sampled: usize,
    pub points_excluded: usize,
    pub max_w_residual: f64,
    pub mean_w_residual: f64,
    pub max_zeta_residual: f64,
    pub mean_zeta_residual: f64,
    pub worst_point: Option<Point>,
    pub tolerance: f64,
    pub seed: u64,
    pub verdict: Verdict,
}

impl ChartReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

fn directional(
    vs: &VarSet,
    phi_vals: &[f64],
    target: &Expr,
    pt: &Point,
) -> Result<f64, EvalError> {
    let g = target.gradient(vs, pt)?;
    Ok(phi_vals.iter().zip(&g.du).map(|(a, b)| a * b).sum())
}

/// Check `X w_j = 0` and `X ζ = 1` over sampled points.
pub fn verify_chart(
    ds: &DynamicalSystem,
    x: &VectorField,
    chart: &AdaptedChart,
    sampler: &Sampler,
    tol: f64,
) -> Result<ChartReport, CoordsError> {
    let ev = dynsys::evolutionary_form(ds, x);
    let vs = ds.vars();
    let mut max_w = 0.0f64;
    let mut sum_w = 0.0f64;
    let mut max_z = 0.0f64;
    let mut sum_z = 0.0f64;
    let mut worst: Option<(f64, Point)> = None;
    let stats = sampler.for_each(vs, |pt| {
        let phi = ev.eval_phi(vs, pt)?;
        let mut local = 0.0f64;
        for wj in &chart.w {
            let r = directional(vs, &phi, wj, pt)?.abs();
            max_w = max_w.max(r);
            sum_w += r;
            local = local.max(r);
        }
        let rz = (directional(vs, &phi, &chart.zeta, pt)? - 1.0).abs();
        max_z = max_z.max(rz);
        sum_z += rz;
        local = local.max(rz);
        if worst.as_ref().is_none_or(|(m, _)| local > *m) {
            worst = Some((local, pt.clone()));
        }
        Ok(())
    })?;
    let nw = (stats.accepted * chart.w.len()).max(1);
    let nz = stats.accepted.max(1);
    Ok(ChartReport {
        points_sampled: stats.accepted,
        points_excluded: stats.excluded,
        max_w_residual: max_w,
        mean_w_residual: sum_w / nw as f64,
        max_zeta_residual: max_z,
        mean_zeta_residual: sum_z / nz as f64,
        worst_point: worst.map(|(_, p)| p),
        tolerance: tol,
        seed: sampler.seed,
        verdict: Verdict::from_bool(max_w <= tol && max_z <= tol),
    })
}

/// Transport a point along the symmetry flow by group parameter `s`,
/// holding time fixed (evolutionary setting).
pub fn flow_along_symmetry(
    ds: &DynamicalSystem,
    x: &VectorField,
    u0: &Point,
    s: f64,
    cfg: &IntegratorConfig,
) -> Result<Point, CoordsError> {
    let ev = dynsys::evolutionary_form(ds, x);
    Ok(numint::flow_map(ds.vars(), &ev, u0, s, cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedClass {
    /// Every `W_j` and `Z` independent of ζ.
    FullyReduced,
    /// All `W_j` independent of ζ but `Z` depends on it (λ-symmetry form).
    LambdaReduced,
    /// Some `W_j` depends on ζ: the chart does not reduce the system.
    NotReduced,
}

impl std::fmt::Display for ReducedClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReducedClass::FullyReduced => "fully-reduced",
            ReducedClass::LambdaReduced => "lambda-reduced",
            ReducedClass::NotReduced => "not-reduced",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReducedStructureReport {
    /// `max |X(D_t w_j)|` per invariant.
    pub w_residuals: Vec<f64>,
    /// `max |X(D_t ζ)|`.
    pub zeta_residual: f64,
    pub classification: ReducedClass,
    /// 1-based indices of invariants whose evolution depends on ζ.
    pub flagged: Vec<usize>,
    /// Result of the chart precondition; a failing chart is reported and
    /// the classification still computed (warn, not error).
    pub chart: ChartReport,
    pub points_sampled: usize,
    pub points_excluded: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl ReducedStructureReport {
    /// The reduction ansatz holds (ζ may appear only in `Z`).
    pub fn passed(&self) -> bool {
        self.classification != ReducedClass::NotReduced
    }
}

/// Classify the reduced structure of the system in the given chart by
/// measuring `a_j = X(D_t w_j)` and `b = X(D_t ζ)` over sampled points.
pub fn check_reduced_structure(
    ds: &DynamicalSystem,
    x: &VectorField,
    chart: &AdaptedChart,
    sampler: &Sampler,
    tol: f64,
) -> Result<ReducedStructureReport, CoordsError> {
    let chart_report = verify_chart(ds, x, chart, sampler, tol)?;
    let ev = dynsys::evolutionary_form(ds, x);
    let vs = ds.vars();

    // D_t w_j and D_t ζ as trees; their u-gradients dotted with φ give the
    // ζ-dependence indicators.
    let dt_of = |target: &Expr| -> Expr {
        let mut acc = target.diff(vs.time());
        for (f_a, name) in ds.rhs().iter().zip(vs.names()) {
            acc = expr::add(acc, expr::mul(f_a.clone(), target.diff(name)));
        }
        acc
    };
    let dtw: Vec<Expr> = chart.w.iter().map(&dt_of).collect();
    let dtzeta = dt_of(&chart.zeta);

    let mut w_res = vec![0.0f64; chart.w.len()];
    let mut z_res = 0.0f64;
    let stats = sampler.for_each(vs, |pt| {
        let phi = ev.eval_phi(vs, pt)?;
        for (j, dtwj) in dtw.iter().enumerate() {
            let a = directional(vs, &phi, dtwj, pt)?.abs();
            w_res[j] = w_res[j].max(a);
        }
        let b = directional(vs, &phi, &dtzeta, pt)?.abs();
        z_res = z_res.max(b);
        Ok(())
    })?;

    let flagged: Vec<usize> = w_res
        .iter()
        .enumerate()
        .filter(|(_, r)| **r > tol)
        .map(|(j, _)| j + 1)
        .collect();
    let classification = if !flagged.is_empty() {
        ReducedClass::NotReduced
    } else if z_res > tol {
        ReducedClass::LambdaReduced
    } else {
        ReducedClass::FullyReduced
    };
    Ok(ReducedStructureReport {
        w_residuals: w_res,
        zeta_residual: z_res,
        classification,
        flagged,
        chart: chart_report,
        points_sampled: stats.accepted,
        points_excluded: stats.excluded,
        tolerance: tol,
        seed: sampler.seed,
    })
}

/// Declared reduced right-hand sides, written in the chart image names
/// (`w1..`, and `zeta` for `Z`) plus time.
#[derive(Debug, Clone)]
pub struct ReducedRhs {
    pub w_rhs: Vec<Expr>,
    pub z_rhs: Expr,
}

/// Trajectory mapped through the chart, with residuals against declared
/// reduced right-hand sides when given.
#[derive(Debug, Clone)]
pub struct ChartSeries {
    pub t: Vec<f64>,
    /// `w(t)` per grid point.
    pub w: Vec<Vec<f64>>,
    pub zeta: Vec<f64>,
    /// `max_t |∇w_j·f − W_j(w(t), t)|` per invariant, when declared.
    pub w_rhs_residuals: Option<Vec<f64>>,
    /// `max_t |D_t ζ − Z(w(t), ζ(t), t)|`, when declared.
    pub z_rhs_residual: Option<f64>,
}

/// Integrate in the original coordinates and map the grid through the
/// chart. Declared reduced right-hand sides are compared exactly:
/// `∇w_j·f` against `W_j ∘ chart` pointwise on the grid.
pub fn map_trajectory_to_chart(
    ds: &DynamicalSystem,
    chart: &AdaptedChart,
    u0: &Point,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    declared: Option<&ReducedRhs>,
) -> Result<ChartSeries, CoordsError> {
    let vs = ds.vars();
    let n = ds.n();
    if let Some(d) = declared {
        if d.w_rhs.len() != n - 1 {
            return Err(CoordsError::ReducedCount {
                expected: n - 1,
                got: d.w_rhs.len(),
            });
        }
    }
    let traj = numint::integrate(ds, u0, t_span, cfg)?;
    let image_vs = VarSet::new(AdaptedChart::image_names(n), vs.time()).expect("fixed names");

    let mut w_series = Vec::with_capacity(traj.len());
    let mut zeta_series = Vec::with_capacity(traj.len());
    let mut w_resid = vec![0.0f64; n - 1];
    let mut z_resid = 0.0f64;

    for (t, state) in traj.t.iter().zip(&traj.states) {
        let pt = Point::new(state.clone(), *t);
        let mut w_vals = Vec::with_capacity(n - 1);
        for wj in &chart.w {
            w_vals.push(wj.eval(vs, &pt)?);
        }
        let zeta_val = chart.zeta.eval(vs, &pt)?;
        if let Some(d) = declared {
            let f_vals = ds.eval_rhs(&pt)?;
            let mut image = w_vals.clone();
            image.push(zeta_val);
            let image_pt = Point::new(image, *t);
            for (j, wj) in chart.w.iter().enumerate() {
                // w_j is time-independent, so D_t w_j = ∇w_j · f.
                let g = wj.gradient(vs, &pt)?;
                let exact: f64 = f_vals.iter().zip(&g.du).map(|(a, b)| a * b).sum();
                let declared_val = d.w_rhs[j].eval(&image_vs, &image_pt)?;
                w_resid[j] = w_resid[j].max((exact - declared_val).abs());
            }
            let gz = chart.zeta.gradient(vs, &pt)?;
            let exact_z: f64 =
                gz.dt + f_vals.iter().zip(&gz.du).map(|(a, b)| a * b).sum::<f64>();
            let declared_z = d.z_rhs.eval(&image_vs, &image_pt)?;
            z_resid = z_resid.max((exact_z - declared_z).abs());
        }
        w_series.push(w_vals);
        zeta_series.push(zeta_val);
    }

    Ok(ChartSeries {
        t: traj.t,
        w: w_series,
        zeta: zeta_series,
        w_rhs_residuals: declared.map(|_| w_resid),
        z_rhs_residual: declared.map(|_| z_resid),
    })
}
