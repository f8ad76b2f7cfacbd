//! Pointwise verification of symmetry conditions.
//!
//! For an evolutionary field `X = φ·∇` on `u̇ = f(u, t)` the residual is
//!
//! ```text
//! R_a = [f, φ]_a + ∂φ_a/∂t
//! ```
//!
//! which vanishes for a standard symmetry, equals `−λ φ_a` for a
//! λ-symmetry and `−(Λ φ)_a` for the matrix generalization. Fields carrying
//! a `τ ∂_t` part are converted to evolutionary form first. Residual norms
//! are the ∞-norm over components.

use crate::dynsys::{self, DynamicalSystem, VectorField};
use crate::expr::{EvalError, Expr, Func, Point, VarSet};
use crate::report::{CheckKind, Report};
use crate::sample::{SampleError, Sampler};

/// Minimum field norm for λ estimation.
pub const EPS_PHI: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error("Lambda matrix must be {n} x {n}")]
    LambdaShape { n: usize },
    #[error("field norm {norm:.3e} below {eps:.1e}; lambda estimate undefined")]
    DegenerateField { norm: f64, eps: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `[f, φ]_a + ∂φ_a/∂t` at a point, for an evolutionary φ.
fn standard_residual_vec(
    ds: &DynamicalSystem,
    phi: &[Expr],
    pt: &Point,
) -> Result<Vec<f64>, EvalError> {
    let vs = ds.vars();
    let mut r = dynsys::lie_bracket(vs, ds.rhs(), phi, pt)?;
    for (ri, comp) in r.iter_mut().zip(phi) {
        *ri += comp.gradient(vs, pt)?.dt;
    }
    Ok(r)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Check the standard point-symmetry condition over sampled points.
pub fn check_standard(
    ds: &DynamicalSystem,
    x: &VectorField,
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, SymmetryError> {
    let ev = dynsys::evolutionary_form(ds, x);
    let agg = sampler.sweep(ds.vars(), |pt| {
        Ok(inf_norm(&standard_residual_vec(ds, &ev.phi, pt)?))
    })?;
    Ok(Report::from_aggregate(
        CheckKind::Standard,
        &agg,
        tol,
        sampler.seed,
    ))
}

/// Check the λ-symmetry condition `R_a + λ φ_a = 0`. The λ expression must
/// already be on the dynamical shell (see
/// [`DynamicalSystem::substitute_velocities`]).
pub fn check_lambda(
    ds: &DynamicalSystem,
    x: &VectorField,
    lambda: &Expr,
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, SymmetryError> {
    let ev = dynsys::evolutionary_form(ds, x);
    let vs = ds.vars();
    let agg = sampler.sweep(vs, |pt| {
        let mut r = standard_residual_vec(ds, &ev.phi, pt)?;
        let lam = lambda.eval(vs, pt)?;
        for (ri, comp) in r.iter_mut().zip(&ev.phi) {
            *ri += lam * comp.eval(vs, pt)?;
        }
        Ok(inf_norm(&r))
    })?;
    Ok(Report::from_aggregate(
        CheckKind::Lambda,
        &agg,
        tol,
        sampler.seed,
    ))
}

/// Check the matrix condition `R_a + (Λ φ)_a = 0`.
pub fn check_capital_lambda(
    ds: &DynamicalSystem,
    x: &VectorField,
    capital: &[Vec<Expr>],
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, SymmetryError> {
    let n = ds.n();
    if capital.len() != n || capital.iter().any(|row| row.len() != n) {
        return Err(SymmetryError::LambdaShape { n });
    }
    let ev = dynsys::evolutionary_form(ds, x);
    let vs = ds.vars();
    let agg = sampler.sweep(vs, |pt| {
        let mut r = standard_residual_vec(ds, &ev.phi, pt)?;
        let phi = ev.eval_phi(vs, pt)?;
        for (a, row) in capital.iter().enumerate() {
            let mut acc = 0.0;
            for (entry, phib) in row.iter().zip(&phi) {
                acc += entry.eval(vs, pt)? * phib;
            }
            r[a] += acc;
        }
        Ok(inf_norm(&r))
    })?;
    Ok(Report::from_aggregate(
        CheckKind::CapitalLambda,
        &agg,
        tol,
        sampler.seed,
    ))
}

#[derive(Debug, Clone, Copy)]
pub struct LambdaEstimate {
    /// Least-squares scalar: `λ̂ = −(R·φ)/(φ·φ)`.
    pub lambda_hat: f64,
    /// `‖R + λ̂ φ‖₂`; zero exactly when R is parallel to φ, i.e. when a
    /// scalar λ-symmetry exists at this point.
    pub parallel_defect: f64,
}

/// Estimate the scalar λ that best explains the residual at one point.
pub fn estimate_lambda(
    ds: &DynamicalSystem,
    x: &VectorField,
    pt: &Point,
) -> Result<LambdaEstimate, SymmetryError> {
    let ev = dynsys::evolutionary_form(ds, x);
    let vs = ds.vars();
    let phi = ev.eval_phi(vs, pt)?;
    let phi_norm2: f64 = phi.iter().map(|v| v * v).sum();
    if phi_norm2.sqrt() <= EPS_PHI {
        return Err(SymmetryError::DegenerateField {
            norm: phi_norm2.sqrt(),
            eps: EPS_PHI,
        });
    }
    let r = standard_residual_vec(ds, &ev.phi, pt)?;
    let dot: f64 = r.iter().zip(&phi).map(|(a, b)| a * b).sum();
    let lambda_hat = -dot / phi_norm2;
    let defect = r
        .iter()
        .zip(&phi)
        .map(|(ra, pa)| {
            let d = ra + lambda_hat * pa;
            d * d
        })
        .sum::<f64>()
        .sqrt();
    Ok(LambdaEstimate {
        lambda_hat,
        parallel_defect: defect,
    })
}

/// Multiply a field by `e^(λ0 t)`: for constant λ0 this turns a λ-symmetry
/// into a standard one.
pub fn exponential_lift(vs: &VarSet, x: &VectorField, lambda0: f64) -> VectorField {
    if lambda0 == 0.0 {
        return x.clone();
    }
    let lift = Expr::Fun(
        Func::Exp,
        Box::new(Expr::Mul(
            Box::new(Expr::Num(lambda0)),
            Box::new(Expr::Var(vs.time().to_string())),
        )),
    );
    VectorField {
        phi: x
            .phi
            .iter()
            .map(|c| Expr::Mul(Box::new(lift.clone()), Box::new(c.clone())))
            .collect(),
        tau: x.tau.clone(),
    }
}
