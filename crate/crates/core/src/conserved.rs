//! Constants of motion and the structures built from them.
//!
//! A function κ(u, t) is a constant of motion when `D_t κ = ∂_t κ + f·∇κ`
//! vanishes. This module verifies that pointwise and along integrated
//! trajectories, constructs the n symmetries determined by n independent
//! first integrals (a linear solve for the matrix p with `p Kᵀ = I`),
//! builds the Levi-Civita contraction of n−1 constant gradients into a
//! Liouville field, and checks the Liouville and integrating-factor
//! conditions.

use crate::dynsys::{self, DynamicalSystem, VectorField};
use crate::expr::{self, EvalError, Expr, Point, VarSet};
use crate::linalg;
use crate::numint::{self, IntegratorConfig, NumIntError};
use crate::report::{CheckKind, Report, Verdict};
use crate::sample::{SampleError, Sampler};

/// Condition-number ceiling: past ~1e10 a double-precision solve has lost
/// ten digits and the construction is reported singular instead.
pub const COND_LIMIT: f64 = 1e10;

#[derive(Debug, thiserror::Error)]
pub enum ConservedError {
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Integration(#[from] NumIntError),
    #[error(
        "jacobian of the constants is singular (cond ~ {cond:.3e}); locally dependent: {dependent:?}"
    )]
    SingularJacobian { cond: f64, dependent: Vec<usize> },
    #[error("need {expected} constants, got {got}")]
    Count { expected: usize, got: usize },
}

/// Pointwise check of `|D_t κ|` over sampled points.
pub fn check_constant_pointwise(
    ds: &DynamicalSystem,
    kappa: &Expr,
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, ConservedError> {
    let agg = sampler.sweep(ds.vars(), |pt| {
        Ok(dynsys::total_derivative(ds, kappa, pt)?.abs())
    })?;
    Ok(Report::from_aggregate(
        CheckKind::ConstantPointwise,
        &agg,
        tol,
        sampler.seed,
    ))
}

/// Drift of κ along one integrated trajectory.
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub initial_value: f64,
    pub max_drift: f64,
    pub grid_points: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl DriftReport {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// Integrate from `u0` over `t_span` and measure
/// `max_t |κ(u(t), t) − κ(u(0), t0)|` on a uniform output grid.
pub fn check_drift(
    ds: &DynamicalSystem,
    kappa: &Expr,
    u0: &Point,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    tol: f64,
) -> Result<DriftReport, ConservedError> {
    let cfg = if cfg.grid_size < 100 {
        let mut c = cfg.clone();
        c.grid_size = 100;
        c
    } else {
        cfg.clone()
    };
    let traj = numint::integrate(ds, u0, t_span, &cfg)?;
    let vs = ds.vars();
    let initial = kappa.eval(vs, &Point::new(traj.states[0].clone(), traj.t[0]))?;
    let mut max_drift = 0.0f64;
    for (t, state) in traj.t.iter().zip(&traj.states) {
        let v = kappa.eval(vs, &Point::new(state.clone(), *t))?;
        max_drift = max_drift.max((v - initial).abs());
    }
    Ok(DriftReport {
        initial_value: initial,
        max_drift,
        grid_points: traj.len(),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        tolerance: tol,
        verdict: Verdict::from_bool(max_drift <= tol),
    })
}

/// Combined pointwise + drift outcome for one constant.
#[derive(Debug, Clone)]
pub struct ConservationReport {
    pub pointwise: Option<Report>,
    pub drift: Option<DriftReport>,
}

impl ConservationReport {
    pub fn passed(&self) -> bool {
        self.pointwise.as_ref().is_none_or(Report::passed)
            && self.drift.as_ref().is_none_or(DriftReport::passed)
    }
}

/// Result of the construction of n symmetries from n independent
/// constants of motion.
#[derive(Debug, Clone)]
pub struct Ovsjannikov {
    /// `p = (Kᵀ)⁻¹` where `K_ac = ∂κ^(a)/∂u_c`; row `a` holds the
    /// components of the field `X^(a)`.
    pub p: Vec<Vec<f64>>,
    /// Per-field ∞-norm of the symmetry-condition residual, assembled from
    /// exact second derivatives of the constants.
    pub residuals: Vec<f64>,
    /// `max |p Kᵀ − I|`, the linear-solve post-condition.
    pub identity_error: f64,
    pub condition_number: f64,
}

/// Solve `Σ_a p_ab ∂κ^(a)/∂u_c = δ_bc` at a point and verify that each row
/// of `p` satisfies the symmetry condition there.
pub fn ovsjannikov_construct(
    ds: &DynamicalSystem,
    kappas: &[Expr],
    pt: &Point,
) -> Result<Ovsjannikov, ConservedError> {
    let vs = ds.vars();
    let n = ds.n();
    if kappas.len() != n {
        return Err(ConservedError::Count {
            expected: n,
            got: kappas.len(),
        });
    }

    // K[a][c] = dκ^(a)/du_c
    let mut k_mat = Vec::with_capacity(n);
    for kappa in kappas {
        k_mat.push(kappa.gradient(vs, pt)?.du);
    }
    let k_t = linalg::transpose(&k_mat);
    let singular = |cond: f64| ConservedError::SingularJacobian {
        cond,
        dependent: linalg::dependent_rows(&k_mat, 1e-10),
    };
    let p = linalg::invert(&k_t).ok_or_else(|| singular(f64::INFINITY))?;
    let cond = linalg::norm1(&k_t) * linalg::norm1(&p);
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(singular(cond));
    }

    let prod = linalg::matmul(&p, &k_t);
    let mut identity_error = 0.0f64;
    for (i, row) in prod.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            identity_error = identity_error.max((v - want).abs());
        }
    }

    // Derivatives of p along u_d and t via d(inv) = -inv · dM · inv applied
    // to M = Kᵀ, with dKᵀ entries taken from the exact second derivatives
    // of the constants.
    let mut seconds = Vec::with_capacity(n);
    for kappa in kappas {
        seconds.push(kappa.second_derivatives(vs, pt)?);
    }
    let dp_along = |direction: usize| -> Vec<Vec<f64>> {
        // direction d in 0..n is u_d; direction n is t.
        let mut dkt = vec![vec![0.0; n]; n];
        for (c, row) in dkt.iter_mut().enumerate() {
            for (a, sd) in seconds.iter().enumerate() {
                row[a] = if direction < n {
                    sd.uu[c][direction]
                } else {
                    sd.ut[c]
                };
            }
        }
        let tmp = linalg::matmul(&linalg::matmul(&p, &dkt), &p);
        tmp.iter()
            .map(|row| row.iter().map(|v| -v).collect())
            .collect()
    };
    let dp_u: Vec<Vec<Vec<f64>>> = (0..n).map(dp_along).collect();
    let dp_t = dp_along(n);

    let f_vals = ds.eval_rhs(pt)?;
    let mut jac_f = Vec::with_capacity(n);
    for f_c in ds.rhs() {
        jac_f.push(f_c.gradient(vs, pt)?.du);
    }

    let mut residuals = Vec::with_capacity(n);
    for b in 0..n {
        let mut worst = 0.0f64;
        for c in 0..n {
            let mut r = dp_t[b][c];
            for d in 0..n {
                r += f_vals[d] * dp_u[d][b][c];
                r -= p[b][d] * jac_f[c][d];
            }
            worst = worst.max(r.abs());
        }
        residuals.push(worst);
    }

    Ok(Ovsjannikov {
        p,
        residuals,
        identity_error,
        condition_number: cond,
    })
}

/// Levi-Civita contraction of the gradients of n−1 functions at a point:
/// the generalized cross product, orthogonal to every input gradient.
/// Convention: ε_{12..n} = +1. Degenerate inputs give the zero vector.
pub fn liouville_from_constants(
    vs: &VarSet,
    kappas_hat: &[Expr],
    pt: &Point,
) -> Result<Vec<f64>, ConservedError> {
    let n = vs.n();
    if kappas_hat.len() + 1 != n {
        return Err(ConservedError::Count {
            expected: n - 1,
            got: kappas_hat.len(),
        });
    }
    let mut grads = Vec::with_capacity(n - 1);
    for k in kappas_hat {
        grads.push(k.gradient(vs, pt)?.du);
    }
    let mut psi = Vec::with_capacity(n);
    for a in 0..n {
        let minor: Vec<Vec<f64>> = grads
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != a)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let d = linalg::det(&minor);
        psi.push(if a % 2 == 0 { d } else { -d });
    }
    Ok(psi)
}

/// Same contraction as [`liouville_from_constants`] but built structurally,
/// returning the field as expression trees.
pub fn liouville_field_expr(
    vs: &VarSet,
    kappas_hat: &[Expr],
) -> Result<VectorField, ConservedError> {
    let n = vs.n();
    if kappas_hat.len() + 1 != n {
        return Err(ConservedError::Count {
            expected: n - 1,
            got: kappas_hat.len(),
        });
    }
    let grads: Vec<Vec<Expr>> = kappas_hat
        .iter()
        .map(|k| vs.names().iter().map(|v| k.diff(v)).collect())
        .collect();
    let mut psi = Vec::with_capacity(n);
    for a in 0..n {
        let minor: Vec<Vec<Expr>> = grads
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != a)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let d = det_expr(&minor);
        psi.push(if a % 2 == 0 { d } else { expr::neg(d) });
    }
    Ok(VectorField::evolutionary(psi))
}

/// Laplace expansion of a small Expr determinant.
fn det_expr(m: &[Vec<Expr>]) -> Expr {
    let k = m.len();
    if k == 0 {
        return Expr::Num(1.0);
    }
    if k == 1 {
        return m[0][0].clone();
    }
    let mut acc = Expr::Num(0.0);
    for j in 0..k {
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = expr::mul(m[0][j].clone(), det_expr(&minor));
        acc = if j % 2 == 0 {
            expr::add(acc, term)
        } else {
            expr::sub(acc, term)
        };
    }
    acc
}

/// Liouville check outcome: the condition residual plus the separately
/// reported divergence of ψ.
#[derive(Debug, Clone)]
pub struct LiouvilleReport {
    pub report: Report,
    pub max_abs_div_psi: f64,
}

/// Check `∂_t ψ_a + [f, ψ]_a + (Div f) ψ_a = 0` over sampled points;
/// `Div ψ` is measured alongside but does not gate the verdict.
pub fn check_liouville_field(
    ds: &DynamicalSystem,
    psi: &VectorField,
    sampler: &Sampler,
    tol: f64,
) -> Result<LiouvilleReport, ConservedError> {
    let vs = ds.vars();
    let mut max_div = 0.0f64;
    let agg = sampler.sweep(vs, |pt| {
        let mut r = dynsys::lie_bracket(vs, ds.rhs(), &psi.phi, pt)?;
        let div_f = dynsys::divergence(vs, ds.rhs(), pt)?;
        for (ri, comp) in r.iter_mut().zip(&psi.phi) {
            let g = comp.gradient(vs, pt)?;
            *ri += g.dt + div_f * g.value;
        }
        max_div = max_div.max(dynsys::divergence(vs, &psi.phi, pt)?.abs());
        Ok(r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
    })?;
    Ok(LiouvilleReport {
        report: Report::from_aggregate(CheckKind::Liouville, &agg, tol, sampler.seed),
        max_abs_div_psi: max_div,
    })
}

/// Check the scalar integrating-factor condition
/// `∂_t q + f·∇q + (Div f) q = 0`.
pub fn check_integrating_factor(
    ds: &DynamicalSystem,
    q: &Expr,
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, ConservedError> {
    let vs = ds.vars();
    let agg = sampler.sweep(vs, |pt| {
        let dq = dynsys::total_derivative(ds, q, pt)?;
        let div_f = dynsys::divergence(vs, ds.rhs(), pt)?;
        Ok((dq + div_f * q.eval(vs, pt)?).abs())
    })?;
    Ok(Report::from_aggregate(
        CheckKind::IntegratingFactor,
        &agg,
        tol,
        sampler.seed,
    ))
}
