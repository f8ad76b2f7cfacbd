//! Data model for dynamical systems `u̇_a = f_a(u, t)` and vector fields
//! `X = φ·∇ + τ∂_t`, with the differential-geometric algebra built on them:
//! Lie brackets, total derivatives, divergence, evolutionary form, and two
//! constructive families of systems with a built-in symmetry.

use crate::expr::{self, EvalError, Expr, Func, ParseError, Point, VarSet};

#[derive(Debug, thiserror::Error)]
pub enum DynError {
    #[error("system needs {expected} components in {what}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("system must have at least one variable")]
    Empty,
    #[error("sigma[{0}] must be nonzero")]
    ZeroSigma(usize),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// First-order time-evolution system `u̇_a = f_a(u, t)`.
#[derive(Debug, Clone)]
pub struct DynamicalSystem {
    vars: VarSet,
    f: Vec<Expr>,
}

impl DynamicalSystem {
    pub fn new(vars: VarSet, f: Vec<Expr>) -> Result<Self, DynError> {
        if vars.n() == 0 {
            return Err(DynError::Empty);
        }
        if f.len() != vars.n() {
            return Err(DynError::Dimension {
                what: "f",
                expected: vars.n(),
                got: f.len(),
            });
        }
        Ok(DynamicalSystem { vars, f })
    }

    pub fn n(&self) -> usize {
        self.vars.n()
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn rhs(&self) -> &[Expr] {
        &self.f
    }

    pub fn eval_rhs(&self, pt: &Point) -> Result<Vec<f64>, EvalError> {
        self.f.iter().map(|e| e.eval(&self.vars, pt)).collect()
    }

    /// Substitute `<var>_dot` identifiers by the corresponding right-hand
    /// side, i.e. evaluate an expression on the dynamical shell. This is how
    /// λ(u, u̇, t) inputs are brought into λ(u, t) form.
    pub fn substitute_velocities(&self, e: &Expr) -> Expr {
        let mut out = e.clone();
        for (i, name) in self.vars.names().iter().enumerate() {
            let dotted = format!("{}_dot", name);
            if out.references(&dotted) {
                out = out.substitute(&dotted, &self.f[i]);
            }
        }
        out
    }

    /// Names accepted by λ expressions: variables, their `_dot` forms, time.
    pub fn velocity_names(&self) -> Vec<String> {
        self.vars
            .names()
            .iter()
            .map(|n| format!("{}_dot", n))
            .collect()
    }
}

/// Vector field `φ·∇ + τ∂_t`; `tau` absent means τ ≡ 0 (evolutionary form).
#[derive(Debug, Clone)]
pub struct VectorField {
    pub phi: Vec<Expr>,
    pub tau: Option<Expr>,
}

impl VectorField {
    pub fn evolutionary(phi: Vec<Expr>) -> Self {
        VectorField { phi, tau: None }
    }

    pub fn eval_phi(&self, vs: &VarSet, pt: &Point) -> Result<Vec<f64>, EvalError> {
        self.phi.iter().map(|e| e.eval(vs, pt)).collect()
    }
}

/// Scalar λ or matrix Λ attached to a weakened symmetry condition.
#[derive(Debug, Clone)]
pub enum LambdaSpec {
    Scalar(Expr),
    Matrix(Vec<Vec<Expr>>),
}

/// Lie bracket `[a, b]_i = Σ_j (a_j ∂b_i/∂u_j − b_j ∂a_i/∂u_j)` of two
/// fields given by their components, evaluated at a point.
pub fn lie_bracket(
    vs: &VarSet,
    a: &[Expr],
    b: &[Expr],
    pt: &Point,
) -> Result<Vec<f64>, EvalError> {
    let n = vs.n();
    let mut a_vals = Vec::with_capacity(n);
    let mut b_grads = Vec::with_capacity(n);
    let mut b_vals = Vec::with_capacity(n);
    let mut a_grads = Vec::with_capacity(n);
    for i in 0..n {
        let ga = a[i].gradient(vs, pt)?;
        let gb = b[i].gradient(vs, pt)?;
        a_vals.push(ga.value);
        b_vals.push(gb.value);
        a_grads.push(ga.du);
        b_grads.push(gb.du);
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += a_vals[j] * b_grads[i][j] - b_vals[j] * a_grads[i][j];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Total derivative along the flow: `D_t κ = ∂_t κ + Σ_a f_a ∂κ/∂u_a`.
pub fn total_derivative(ds: &DynamicalSystem, kappa: &Expr, pt: &Point) -> Result<f64, EvalError> {
    let g = kappa.gradient(ds.vars(), pt)?;
    let f = ds.eval_rhs(pt)?;
    let mut acc = g.dt;
    for (fa, dk) in f.iter().zip(&g.du) {
        acc += fa * dk;
    }
    Ok(acc)
}

/// `Div φ = Σ_a ∂φ_a/∂u_a` at a point.
pub fn divergence(vs: &VarSet, field: &[Expr], pt: &Point) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (i, comp) in field.iter().enumerate() {
        acc += comp.gradient(vs, pt)?.du[i];
    }
    Ok(acc)
}

/// Convert `X = φ·∇ + τ∂_t` to its evolutionary representative
/// `φ̃ = φ − τ f` with no time component. Identity when τ is absent.
pub fn evolutionary_form(ds: &DynamicalSystem, x: &VectorField) -> VectorField {
    match &x.tau {
        None => x.clone(),
        Some(tau) => VectorField::evolutionary(
            x.phi
                .iter()
                .zip(ds.rhs())
                .map(|(phi_a, f_a)| expr::sub(phi_a.clone(), expr::mul(tau.clone(), f_a.clone())))
                .collect(),
        ),
    }
}

/// How the nonlinear part of a scaling-family system is supplied.
pub enum ScalingForm {
    /// `P_a` given as functions of the exchanged-exponent ratios; the
    /// constructor multiplies by `u_a^(1 - λ0/σ_a)`.
    Ratio(Vec<Expr>),
    /// `g_a` given directly in analytic form.
    Analytic(Vec<Expr>),
}

/// Output of [`build_scaling_family`].
pub struct ScalingFamily {
    pub system: DynamicalSystem,
    /// The standard symmetry `X = e^(λ0 t) g·∇`.
    pub symmetry: VectorField,
    /// For λ0 ≠ 0, the equivalent pair `(X' = g·∇, λ ≡ λ0)` in which `X'`
    /// is a λ-symmetry with constant λ.
    pub lambda_pair: Option<(VectorField, Expr)>,
}

/// Family of systems `u̇_a = σ_a u_a + g_a(u)` that admit the symmetry
/// `e^(λ0 t) g·∇` by construction.
pub fn build_scaling_family(
    vars: VarSet,
    sigma: &[f64],
    lambda0: f64,
    form: ScalingForm,
) -> Result<ScalingFamily, DynError> {
    let n = vars.n();
    if sigma.len() != n {
        return Err(DynError::Dimension {
            what: "sigma",
            expected: n,
            got: sigma.len(),
        });
    }
    for (i, s) in sigma.iter().enumerate() {
        if *s == 0.0 {
            return Err(DynError::ZeroSigma(i));
        }
    }
    let g: Vec<Expr> = match form {
        ScalingForm::Analytic(q) => {
            if q.len() != n {
                return Err(DynError::Dimension {
                    what: "g",
                    expected: n,
                    got: q.len(),
                });
            }
            q
        }
        ScalingForm::Ratio(p) => {
            if p.len() != n {
                return Err(DynError::Dimension {
                    what: "P",
                    expected: n,
                    got: p.len(),
                });
            }
            p.into_iter()
                .enumerate()
                .map(|(a, p_a)| {
                    let u = Expr::Var(vars.names()[a].clone());
                    let exponent = 1.0 - lambda0 / sigma[a];
                    let factor = if exponent.fract() == 0.0 && exponent.abs() < 1e9 {
                        expr::pow(u, Expr::Num(exponent))
                    } else {
                        // Fractional exponent: u^e = exp(e log u), valid on
                        // the positive axis only.
                        expr::fun(
                            Func::Exp,
                            expr::mul(Expr::Num(exponent), expr::fun(Func::Log, u)),
                        )
                    };
                    expr::mul(factor, p_a)
                })
                .collect()
        }
    };
    let f: Vec<Expr> = g
        .iter()
        .enumerate()
        .map(|(a, g_a)| {
            expr::add(
                expr::mul(Expr::Num(sigma[a]), Expr::Var(vars.names()[a].clone())),
                g_a.clone(),
            )
        })
        .collect();
    let phi: Vec<Expr> = if lambda0 == 0.0 {
        g.clone()
    } else {
        let lift = expr::fun(
            Func::Exp,
            expr::mul(Expr::Num(lambda0), Expr::Var(vars.time().to_string())),
        );
        g.iter().map(|g_a| expr::mul(lift.clone(), g_a.clone())).collect()
    };
    let lambda_pair = if lambda0 != 0.0 {
        Some((VectorField::evolutionary(g), Expr::Num(lambda0)))
    } else {
        None
    };
    let system = DynamicalSystem::new(vars, f)?;
    Ok(ScalingFamily {
        system,
        symmetry: VectorField::evolutionary(phi),
        lambda_pair,
    })
}

/// Planar family `ẋ = y, ẏ = y² γ_x/γ + γ F(y/γ)` with the symmetry
/// `X = γ∂_x + y γ_x ∂_y` built in. `gamma` is an expression in `x`,
/// `f_shape` an expression in the single symbol `w`.
pub fn build_gamma_family(
    gamma: &Expr,
    f_shape: &Expr,
) -> Result<(DynamicalSystem, VectorField), DynError> {
    let vars = VarSet::new(["x", "y"], "t")?;
    let y = || Expr::Var("y".to_string());
    let gamma_x = gamma.diff("x");
    let w = expr::div(y(), gamma.clone());
    let f_of_w = f_shape.substitute("w", &w);
    let f2 = expr::add(
        expr::div(
            expr::mul(expr::pow(y(), Expr::Num(2.0)), gamma_x.clone()),
            gamma.clone(),
        ),
        expr::mul(gamma.clone(), f_of_w),
    );
    let ds = DynamicalSystem::new(vars, vec![y(), f2])?;
    let field = VectorField::evolutionary(vec![gamma.clone(), expr::mul(y(), gamma_x)]);
    Ok((ds, field))
}
