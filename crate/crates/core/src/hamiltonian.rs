//! Canonical structure: Hamiltonian fields `u̇ = J∇H`, generating functions
//! `Φ = J∇G`, Poisson brackets, and the deviation laws that control how a
//! generating function fails to be conserved under weakened symmetries.
//!
//! Variable ordering is `(q_1..q_m, p_1..p_m)` with the symplectic matrix
//! `J = [[0, I], [-I, 0]]` acting blockwise. Generating functions are
//! restricted to time-independent `G(q, p)`; a time-dependent expression is
//! rejected at construction.

use crate::dynsys::{self, DynamicalSystem, VectorField};
use crate::expr::{self, EvalError, Expr, ParseError, Point, VarSet};
use crate::numint::{self, IntegratorConfig, NumIntError};
use crate::report::{CheckKind, Report, Verdict};
use crate::sample::{SampleError, Sampler};

#[derive(Debug, thiserror::Error)]
pub enum HamError {
    #[error("no generating function G declared")]
    MissingG,
    #[error("generating function must not depend on time")]
    TimeDependentG,
    #[error("degrees of freedom must be at least 1")]
    ZeroDof,
    #[error("Lambda matrix must be {n} x {n}")]
    LambdaShape { n: usize },
    #[error("the generating field is not a standard symmetry (max residual {max_residual:.3e} > {tolerance:.3e})")]
    PreconditionFailed {
        max_residual: f64,
        tolerance: f64,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Integration(#[from] NumIntError),
}

/// Hamiltonian system with m degrees of freedom and optional generating
/// function.
#[derive(Debug, Clone)]
pub struct HamiltonianSystem {
    m: usize,
    vars: VarSet,
    h: Expr,
    g: Option<Expr>,
}

impl HamiltonianSystem {
    /// Canonical variable names `q1..qm, p1..pm`.
    pub fn canonical_names(m: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=m).map(|a| format!("q{a}")).collect();
        names.extend((1..=m).map(|a| format!("p{a}")));
        names
    }

    pub fn new(m: usize, h: Expr, g: Option<Expr>, time: &str) -> Result<Self, HamError> {
        if m == 0 {
            return Err(HamError::ZeroDof);
        }
        let vars = VarSet::new(Self::canonical_names(m), time)?;
        if let Some(g_expr) = &g {
            if g_expr.references(vars.time()) {
                return Err(HamError::TimeDependentG);
            }
        }
        Ok(HamiltonianSystem { m, vars, h, g })
    }

    /// Parse `H` and optionally `G` against the canonical variables.
    pub fn parse(m: usize, h: &str, g: Option<&str>, time: &str) -> Result<Self, HamError> {
        if m == 0 {
            return Err(HamError::ZeroDof);
        }
        let vars = VarSet::new(Self::canonical_names(m), time)?;
        let h = vars.parse(h)?;
        let g = g.map(|s| vars.parse(s)).transpose()?;
        Self::new(m, h, g, time)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        2 * self.m
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn h(&self) -> &Expr {
        &self.h
    }

    pub fn g(&self) -> Option<&Expr> {
        self.g.as_ref()
    }

    /// `J v` for the block ordering `(q, p)`.
    pub fn apply_j(&self, v: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = Vec::with_capacity(2 * m);
        out.extend_from_slice(&v[m..]);
        out.extend(v[..m].iter().map(|x| -x));
        out
    }

    /// Hamilton equations `q̇ = ∂H/∂p, ṗ = −∂H/∂q` as a dynamical system,
    /// by structural differentiation of H.
    pub fn vector_field(&self) -> DynamicalSystem {
        let names = self.vars.names();
        let m = self.m;
        let mut f = Vec::with_capacity(2 * m);
        for name in &names[m..] {
            f.push(self.h.diff(name));
        }
        for name in &names[..m] {
            f.push(expr::neg(self.h.diff(name)));
        }
        DynamicalSystem::new(self.vars.clone(), f).expect("dimensions fixed by construction")
    }

    /// `Φ = J∇G = (∇_p G, −∇_q G)` as expression trees.
    pub fn generating_field(&self) -> Result<VectorField, HamError> {
        let g = self.g.as_ref().ok_or(HamError::MissingG)?;
        let names = self.vars.names();
        let m = self.m;
        let mut phi = Vec::with_capacity(2 * m);
        for name in &names[m..] {
            phi.push(g.diff(name));
        }
        for name in &names[..m] {
            phi.push(expr::neg(g.diff(name)));
        }
        Ok(VectorField::evolutionary(phi))
    }

    /// Standard Poisson bracket `{A, B}` at a point.
    pub fn poisson_bracket(&self, a: &Expr, b: &Expr, pt: &Point) -> Result<f64, EvalError> {
        let ga = a.gradient(&self.vars, pt)?;
        let gb = b.gradient(&self.vars, pt)?;
        let m = self.m;
        let mut acc = 0.0;
        for alpha in 0..m {
            acc += ga.du[alpha] * gb.du[m + alpha] - ga.du[m + alpha] * gb.du[alpha];
        }
        Ok(acc)
    }

    /// `{A, B}` as an expression tree, by structural differentiation.
    pub fn poisson_bracket_expr(&self, a: &Expr, b: &Expr) -> Expr {
        let names = self.vars.names();
        let m = self.m;
        let mut acc = Expr::Num(0.0);
        for alpha in 0..m {
            let term = expr::sub(
                expr::mul(a.diff(&names[alpha]), b.diff(&names[m + alpha])),
                expr::mul(a.diff(&names[m + alpha]), b.diff(&names[alpha])),
            );
            acc = expr::add(acc, term);
        }
        acc
    }

    /// `D_t G = {G, H}` as a tree (G is time-independent by construction).
    pub fn g_dot_expr(&self) -> Result<Expr, HamError> {
        let g = self.g.as_ref().ok_or(HamError::MissingG)?;
        Ok(self.poisson_bracket_expr(g, &self.h))
    }
}

/// Check the unconditional gradient identity relating `∇(D_t G)` to the
/// bracket `[F, Φ]`: the left side is the AD gradient of the composed
/// `{G, H}` tree, the right side is `−J([F, Φ] + ∂_t Φ)` computed through
/// the Lie bracket. It must hold for arbitrary smooth H and G.
pub fn check_gradient_identity(
    hs: &HamiltonianSystem,
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, HamError> {
    let ds = hs.vector_field();
    let phi = hs.generating_field()?;
    let g_dot = hs.g_dot_expr()?;
    let vs = hs.vars();
    let agg = sampler.sweep(vs, |pt| {
        let lhs = g_dot.gradient(vs, pt)?.du;
        let mut bracket = dynsys::lie_bracket(vs, ds.rhs(), &phi.phi, pt)?;
        for (b, comp) in bracket.iter_mut().zip(&phi.phi) {
            *b += comp.gradient(vs, pt)?.dt;
        }
        let rhs: Vec<f64> = hs.apply_j(&bracket).iter().map(|v| -v).collect();
        let mut worst = 0.0f64;
        for (l, r) in lhs.iter().zip(&rhs) {
            worst = worst.max((l - r).abs());
        }
        Ok(worst)
    })?;
    Ok(Report::from_aggregate(
        CheckKind::GradientIdentity,
        &agg,
        tol,
        sampler.seed,
    ))
}

/// Conservation of the generating function when its field is a standard
/// symmetry.
#[derive(Debug, Clone)]
pub struct GeneratingConservation {
    /// The symmetry precondition check.
    pub symmetry: Report,
    /// `max |D_t G|` over sampled points.
    pub max_g_dot: f64,
    /// `max |X(G)| = |Φ·∇G|`, identically zero by antisymmetry of J.
    pub max_xg: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl GeneratingConservation {
    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}

/// For a standard symmetry with time-independent generating function G,
/// assert that G is conserved (`D_t G ≈ 0`) and X-invariant (`X(G) ≈ 0`).
/// Fails with [`HamError::PreconditionFailed`] when the field is not a
/// standard symmetry in the first place.
pub fn check_generating_conservation(
    hs: &HamiltonianSystem,
    sampler: &Sampler,
    tol: f64,
) -> Result<GeneratingConservation, HamError> {
    let ds = hs.vector_field();
    let phi = hs.generating_field()?;
    let symmetry = crate::symmetry::check_standard(&ds, &phi, sampler, tol)
        .map_err(|e| match e {
            crate::symmetry::SymmetryError::Sampling(s) => HamError::Sampling(s),
            crate::symmetry::SymmetryError::Eval(s) => HamError::Eval(s),
            // check_standard takes no lambda data and a non-degenerate field
            // is not required, so no other variant can occur.
            _ => unreachable!(),
        })?;
    if !symmetry.passed() {
        return Err(HamError::PreconditionFailed {
            max_residual: symmetry.max_residual,
            tolerance: tol,
        });
    }
    let g = hs.g().ok_or(HamError::MissingG)?;
    let g_dot = hs.g_dot_expr()?;
    let vs = hs.vars();
    let mut max_g_dot = 0.0f64;
    let mut max_xg = 0.0f64;
    sampler.for_each(vs, |pt| {
        max_g_dot = max_g_dot.max(g_dot.eval(vs, pt)?.abs());
        let grad_g = g.gradient(vs, pt)?.du;
        let phi_vals = phi.eval_phi(vs, pt)?;
        let xg: f64 = phi_vals.iter().zip(&grad_g).map(|(a, b)| a * b).sum();
        max_xg = max_xg.max(xg.abs());
        Ok(())
    })?;
    Ok(GeneratingConservation {
        symmetry,
        max_g_dot,
        max_xg,
        tolerance: tol,
        verdict: Verdict::from_bool(max_g_dot <= tol && max_xg <= tol),
    })
}

/// Scalar deviation law: `∇(Ġ) + λ ∇G = 0` for a λ-symmetry generated by G.
pub fn check_deviation_lambda(
    hs: &HamiltonianSystem,
    lambda: &Expr,
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, HamError> {
    let g = hs.g().ok_or(HamError::MissingG)?.clone();
    let g_dot = hs.g_dot_expr()?;
    let vs = hs.vars();
    let agg = sampler.sweep(vs, |pt| {
        let grad_g_dot = g_dot.gradient(vs, pt)?.du;
        let grad_g = g.gradient(vs, pt)?.du;
        let lam = lambda.eval(vs, pt)?;
        let mut worst = 0.0f64;
        for (d, gg) in grad_g_dot.iter().zip(&grad_g) {
            worst = worst.max((d + lam * gg).abs());
        }
        Ok(worst)
    })?;
    Ok(Report::from_aggregate(
        CheckKind::DeviationLambda,
        &agg,
        tol,
        sampler.seed,
    ))
}

/// Matrix deviation law: `∇(Ġ) = J Λ J ∇G` for a Λ-symmetry generated by G.
pub fn check_deviation_capital_lambda(
    hs: &HamiltonianSystem,
    capital: &[Vec<Expr>],
    sampler: &Sampler,
    tol: f64,
) -> Result<Report, HamError> {
    let n = hs.n();
    if capital.len() != n || capital.iter().any(|row| row.len() != n) {
        return Err(HamError::LambdaShape { n });
    }
    let g = hs.g().ok_or(HamError::MissingG)?.clone();
    let g_dot = hs.g_dot_expr()?;
    let vs = hs.vars();
    let agg = sampler.sweep(vs, |pt| {
        let grad_g_dot = g_dot.gradient(vs, pt)?.du;
        let grad_g = g.gradient(vs, pt)?.du;
        let v1 = hs.apply_j(&grad_g);
        let mut v2 = vec![0.0; n];
        for (a, row) in capital.iter().enumerate() {
            for (entry, vb) in row.iter().zip(&v1) {
                v2[a] += entry.eval(vs, pt)? * vb;
            }
        }
        let rhs = hs.apply_j(&v2);
        let mut worst = 0.0f64;
        for (d, r) in grad_g_dot.iter().zip(&rhs) {
            worst = worst.max((d - r).abs());
        }
        Ok(worst)
    })?;
    Ok(Report::from_aggregate(
        CheckKind::DeviationCapitalLambda,
        &agg,
        tol,
        sampler.seed,
    ))
}

/// `G` and `Ġ = {G, H}` sampled along one integrated trajectory. `Ġ` is
/// evaluated from the bracket tree on the grid states, never by
/// differencing the G series. The grid states are kept so callers can
/// evaluate comparison quantities (closed-form envelopes, derived
/// invariants) on the same grid.
#[derive(Debug, Clone)]
pub struct DeviationSeries {
    pub t: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub g: Vec<f64>,
    pub g_dot: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Integrate the Hamiltonian flow from `u0` and track the generating
/// function and its deviation along it.
pub fn track_generating_function(
    hs: &HamiltonianSystem,
    u0: &Point,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<DeviationSeries, HamError> {
    let g = hs.g().ok_or(HamError::MissingG)?.clone();
    let g_dot = hs.g_dot_expr()?;
    let ds = hs.vector_field();
    let traj = numint::integrate(&ds, u0, t_span, cfg)?;
    let vs = hs.vars();
    let mut g_series = Vec::with_capacity(traj.len());
    let mut g_dot_series = Vec::with_capacity(traj.len());
    for (t, state) in traj.t.iter().zip(&traj.states) {
        let pt = Point::new(state.clone(), *t);
        g_series.push(g.eval(vs, &pt)?);
        g_dot_series.push(g_dot.eval(vs, &pt)?);
    }
    Ok(DeviationSeries {
        t: traj.t,
        states: traj.states,
        g: g_series,
        g_dot: g_dot_series,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{cubic_momentum_ham, toda_capital_lambda, toda_ham};

    fn box4(count: usize, seed: u64) -> Sampler {
        Sampler::new(vec![(-1.0, 1.0); 4], (0.0, 1.0), count, seed)
    }

    #[test]
    fn harmonic_oscillator_field() {
        let hs = HamiltonianSystem::parse(1, "0.5*(p1^2 + q1^2)", None, "t").unwrap();
        let ds = hs.vector_field();
        let pt = Point::new(vec![0.3, 0.8], 0.0);
        let f = ds.eval_rhs(&pt).unwrap();
        assert_eq!(f, vec![0.8, -0.3]);
    }

    #[test]
    fn cubic_momentum_field_components() {
        let hs = cubic_momentum_ham();
        let ds = hs.vector_field();
        let pt = Point::new(vec![0.5, -0.2, 0.7, 0.4], 0.0);
        let f = ds.eval_rhs(&pt).unwrap();
        // p1' = -dH/dq1 = -p1^3/2
        assert!((f[2] + 0.5 * 0.7_f64.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn toda_field_components() {
        let hs = toda_ham();
        let ds = hs.vector_field();
        let pt = Point::new(vec![0.3, -0.1, 0.0, 0.0], 0.0);
        let f = ds.eval_rhs(&pt).unwrap();
        let want = -(0.2_f64.exp() + 0.4_f64.exp());
        assert!((f[2] - want).abs() < 1e-15);
    }

    #[test]
    fn generating_fields() {
        let hs = cubic_momentum_ham();
        let phi = hs.generating_field().unwrap();
        let pt = Point::new(vec![0.1, 0.2, 0.3, 0.4], 0.0);
        assert_eq!(
            phi.eval_phi(hs.vars(), &pt).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        let hs = toda_ham();
        let phi = hs.generating_field().unwrap();
        assert_eq!(
            phi.eval_phi(hs.vars(), &pt).unwrap(),
            vec![1.0, 1.0, 0.0, 0.0]
        );
        // G = H makes the generating field the dynamical field itself.
        let hs2 = HamiltonianSystem::parse(
            1,
            "0.5*(p1^2 + q1^2)",
            Some("0.5*(p1^2 + q1^2)"),
            "t",
        )
        .unwrap();
        let ds = hs2.vector_field();
        let phi = hs2.generating_field().unwrap();
        let pt1 = Point::new(vec![0.4, -0.9], 0.0);
        assert_eq!(
            phi.eval_phi(hs2.vars(), &pt1).unwrap(),
            ds.eval_rhs(&pt1).unwrap()
        );
    }

    #[test]
    fn canonical_bracket() {
        let hs = toda_ham();
        let vs = hs.vars();
        let q1 = vs.parse("q1").unwrap();
        let p1 = vs.parse("p1").unwrap();
        let pt = Point::new(vec![0.5, 0.1, -0.3, 0.9], 0.0);
        assert_eq!(hs.poisson_bracket(&q1, &p1, &pt).unwrap(), 1.0);
        // Antisymmetry: {A, A} = 0.
        let a = vs.parse("q1*p2 + sin(q2)").unwrap();
        assert_eq!(hs.poisson_bracket(&a, &a, &pt).unwrap(), 0.0);
    }

    #[test]
    fn toda_bracket_gives_g_dot() {
        let hs = toda_ham();
        let g_dot = hs.g_dot_expr().unwrap();
        let pt = Point::new(vec![0.4, 0.3, 0.2, 0.1], 0.0);
        let want = -2.0 * 0.7_f64.exp();
        assert!((g_dot.eval(hs.vars(), &pt).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn gradient_identity_on_fixtures() {
        for hs in [cubic_momentum_ham(), toda_ham()] {
            let rep = check_gradient_identity(&hs, &box4(200, 42), 1e-10).unwrap();
            assert!(rep.passed(), "max {}", rep.max_residual);
        }
    }

    #[test]
    fn gradient_identity_constant_g() {
        let hs = HamiltonianSystem::parse(
            2,
            "0.5*(p1^2 + p2^2) + q1^4 - q2*q1",
            Some("2.5"),
            "t",
        )
        .unwrap();
        let rep = check_gradient_identity(&hs, &box4(100, 7), 0.0).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn free_particle_conserves_momentum() {
        let hs =
            HamiltonianSystem::parse(2, "0.5*(p1^2 + p2^2)", Some("p1"), "t").unwrap();
        let out = check_generating_conservation(&hs, &box4(150, 42), 1e-12).unwrap();
        assert!(out.passed());
        assert_eq!(out.max_g_dot, 0.0);
        assert_eq!(out.max_xg, 0.0);
    }

    #[test]
    fn rotation_invariant_hamiltonian_conserves_angular_momentum() {
        let hs = HamiltonianSystem::parse(
            2,
            "0.5*(p1^2 + p2^2) + 0.5*(q1^2 + q2^2)",
            Some("q1*p2 - q2*p1"),
            "t",
        )
        .unwrap();
        let out = check_generating_conservation(&hs, &box4(200, 42), 1e-10).unwrap();
        assert!(out.passed(), "gdot {} xg {}", out.max_g_dot, out.max_xg);
    }

    #[test]
    fn lambda_symmetry_fails_the_conservation_precondition() {
        let hs = cubic_momentum_ham();
        let err = check_generating_conservation(&hs, &box4(100, 42), 1e-8).unwrap_err();
        assert!(matches!(err, HamError::PreconditionFailed { .. }));
    }

    #[test]
    fn deviation_law_scalar() {
        let hs = cubic_momentum_ham();
        let lambda = hs.vars().parse("1.5*p1^2").unwrap();
        let rep = check_deviation_lambda(&hs, &lambda, &box4(200, 42), 1e-10).unwrap();
        assert!(rep.passed(), "max {}", rep.max_residual);
        // lambda = 0 with a conserved pair reduces to grad(Gdot) = 0.
        let free =
            HamiltonianSystem::parse(2, "0.5*(p1^2 + p2^2)", Some("p1"), "t").unwrap();
        let rep =
            check_deviation_lambda(&free, &Expr::Num(0.0), &box4(100, 7), 1e-12).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn scalar_deviation_cannot_explain_toda() {
        // grad(Gdot) is proportional to (1,1,0,0) while grad G = (0,0,1,1):
        // no scalar lambda fits.
        let hs = toda_ham();
        for lam_text in ["0", "1", "p1^2", "-2*exp(q1 + q2)"] {
            let lambda = hs.vars().parse(lam_text).unwrap();
            let rep = check_deviation_lambda(&hs, &lambda, &box4(100, 42), 1e-8).unwrap();
            assert!(!rep.passed(), "lambda = {lam_text} unexpectedly passed");
        }
    }

    #[test]
    fn deviation_law_matrix() {
        let hs = toda_ham();
        let cap = toda_capital_lambda(hs.vars());
        let rep = check_deviation_capital_lambda(&hs, &cap, &box4(200, 42), 1e-10).unwrap();
        assert!(rep.passed(), "max {}", rep.max_residual);

        // Transposing the block moves it to the wrong corner of J Λ J.
        let transposed: Vec<Vec<Expr>> = (0..4)
            .map(|i| (0..4).map(|j| cap[j][i].clone()).collect())
            .collect();
        let rep =
            check_deviation_capital_lambda(&hs, &transposed, &box4(100, 42), 1e-8).unwrap();
        assert!(!rep.passed());

        // Lambda = 0 with a conserved pair.
        let free =
            HamiltonianSystem::parse(2, "0.5*(p1^2 + p2^2)", Some("p1"), "t").unwrap();
        let zero = vec![vec![Expr::Num(0.0); 4]; 4];
        let rep =
            check_deviation_capital_lambda(&free, &zero, &box4(100, 7), 1e-12).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn track_cubic_momentum_matches_closed_form() {
        // From p1(0) = 1: G(t) = (1 + t)^(-1/2).
        let hs = cubic_momentum_ham();
        let u0 = Point::new(vec![0.0, 0.0, 1.0, 0.0], 0.0);
        let series = track_generating_function(
            &hs,
            &u0,
            (0.0, 10.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        for (t, g) in series.t.iter().zip(&series.g) {
            let want = (1.0 + t).powf(-0.5);
            assert!((g - want).abs() <= 1e-6, "t = {t}: {g} vs {want}");
        }
        // Gdot = -G^3/2 along the flow.
        for (g, gd) in series.g.iter().zip(&series.g_dot) {
            assert!((gd + 0.5 * g.powi(3)).abs() <= 1e-9);
        }
    }

    #[test]
    fn track_conserved_pair_is_flat() {
        let hs = HamiltonianSystem::parse(
            2,
            "0.5*(p1^2 + p2^2) + 0.5*(q1^2 + q2^2)",
            Some("q1*p2 - q2*p1"),
            "t",
        )
        .unwrap();
        let u0 = Point::new(vec![1.0, 0.0, 0.0, 0.5], 0.0);
        let series = track_generating_function(
            &hs,
            &u0,
            (0.0, 10.0),
            &IntegratorConfig::default(),
        )
        .unwrap();
        let g0 = series.g[0];
        for g in &series.g {
            assert!((g - g0).abs() <= 1e-7);
        }
    }

    #[test]
    fn toda_invariant_and_bound() {
        // I = G^2/4 + e^(q1+q2) is constant along the flow and bounds G.
        let hs = toda_ham();
        let vs = hs.vars();
        let inv = vs.parse("(p1 + p2)^2/4 + exp(q1 + q2)").unwrap();
        let u0 = Point::new(vec![0.0, 0.0, 0.4, 0.2], 0.0);
        let ds = hs.vector_field();
        let traj =
            numint::integrate(&ds, &u0, (0.0, 10.0), &IntegratorConfig::default()).unwrap();
        let i0 = inv.eval(vs, &Point::new(traj.states[0].clone(), 0.0)).unwrap();
        let bound = 2.0 * i0.sqrt();
        let g = vs.parse("p1 + p2").unwrap();
        for (t, state) in traj.t.iter().zip(&traj.states) {
            let pt = Point::new(state.clone(), *t);
            let iv = inv.eval(vs, &pt).unwrap();
            assert!((iv - i0).abs() <= 1e-6, "I drift {}", (iv - i0).abs());
            let gv = g.eval(vs, &pt).unwrap();
            assert!(gv.abs() <= bound + 1e-6);
        }
    }

    #[test]
    fn time_dependent_g_is_rejected() {
        let err = HamiltonianSystem::parse(1, "0.5*p1^2", Some("p1*t"), "t").unwrap_err();
        assert!(matches!(err, HamError::TimeDependentG));
    }

    #[test]
    fn j_algebra() {
        let hs = toda_ham();
        // J^2 = -I and J^T J = I on basis vectors, exact.
        for i in 0..4 {
            let mut e = vec![0.0; 4];
            e[i] = 1.0;
            let jje = hs.apply_j(&hs.apply_j(&e));
            for (k, v) in jje.iter().enumerate() {
                let want = if k == i { -1.0 } else { 0.0 };
                assert_eq!(*v, want);
            }
        }
    }
}
