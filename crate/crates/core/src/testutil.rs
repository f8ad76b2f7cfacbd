//! Fixtures shared by the unit tests: the four worked systems used
//! throughout the crate, built programmatically.

use crate::dynsys::{build_scaling_family, DynamicalSystem, ScalingFamily, ScalingForm, VectorField};
use crate::expr::{Expr, VarSet};
use crate::hamiltonian::HamiltonianSystem;

/// Generalized-Lorenz-like 3D system: σ = (−1, −1, −2), λ0 = 1,
/// Q = (z − 2y², 2xy, 4xz). Admits X = e^t Q·∇ and three independent
/// constants of motion.
pub(crate) fn lorenz_like() -> ScalingFamily {
    let vars = VarSet::new(["x", "y", "z"], "t").unwrap();
    let q = ["z - 2*y^2", "2*x*y", "4*x*z"]
        .iter()
        .map(|s| vars.parse(s).unwrap())
        .collect();
    build_scaling_family(vars, &[-1.0, -1.0, -2.0], 1.0, ScalingForm::Analytic(q)).unwrap()
}

pub(crate) const LORENZ_KAPPA1: &str = "z/y^2";
pub(crate) const LORENZ_KAPPA2: &str = "exp(2*t)*(x^2 + y^2 - z/2)";
pub(crate) const LORENZ_KAPPA3: &str = "exp(-t)*(1 + log(abs((x - sqrt(x^2 + y^2 - z/2))/(x + sqrt(x^2 + y^2 - z/2))))/(4*sqrt(x^2 + y^2 - z/2)))";

pub(crate) fn lorenz_constants(vs: &VarSet) -> Vec<Expr> {
    [LORENZ_KAPPA1, LORENZ_KAPPA2, LORENZ_KAPPA3]
        .iter()
        .map(|s| vs.parse(s).unwrap())
        .collect()
}

/// Planar system ẋ = y, ẏ = y²(1 − e^(−x)) with symmetry e^x(∂x + y∂y).
pub(crate) fn planar_exp() -> (DynamicalSystem, VectorField) {
    let vars = VarSet::new(["x", "y"], "t").unwrap();
    let f = vec![
        vars.parse("y").unwrap(),
        vars.parse("y^2*(1 - exp(-x))").unwrap(),
    ];
    let phi = vec![
        vars.parse("exp(x)").unwrap(),
        vars.parse("exp(x)*y").unwrap(),
    ];
    (
        DynamicalSystem::new(vars, f).unwrap(),
        VectorField::evolutionary(phi),
    )
}

/// m = 2 Hamiltonian with a scalar-λ weakened symmetry generated by G = p1:
/// H = ½p1² + ½p2² + ½q1p1³ + ½q2²p1², λ = (3/2)p1².
pub(crate) fn cubic_momentum_ham() -> HamiltonianSystem {
    HamiltonianSystem::parse(
        2,
        "0.5*p1^2 + 0.5*p2^2 + 0.5*q1*p1^3 + 0.5*q2^2*p1^2",
        Some("p1"),
        "t",
    )
    .unwrap()
}

/// Two-particle Toda-like Hamiltonian with a matrix-Λ weakened symmetry
/// generated by G = p1 + p2: H = ½p1² + ½p2² + e^(q1+q2) + e^(q1−q2).
pub(crate) fn toda_ham() -> HamiltonianSystem {
    HamiltonianSystem::parse(
        2,
        "0.5*p1^2 + 0.5*p2^2 + exp(q1 + q2) + exp(q1 - q2)",
        Some("p1 + p2"),
        "t",
    )
    .unwrap()
}

/// Λ matrix of the Toda example: −2e^(q1+q2) in the lower-left identity
/// block of a 4x4 matrix.
pub(crate) fn toda_capital_lambda(vs: &VarSet) -> Vec<Vec<Expr>> {
    let zero = || Expr::Num(0.0);
    let entry = || vs.parse("-2*exp(q1 + q2)").unwrap();
    vec![
        vec![zero(), zero(), zero(), zero()],
        vec![zero(), zero(), zero(), zero()],
        vec![entry(), zero(), zero(), zero()],
        vec![zero(), entry(), zero(), zero()],
    ]
}
