//! Benchmark fixtures shared by the criterion targets.

use symflow_core::dynsys::{build_scaling_family, ScalingFamily, ScalingForm};
use symflow_core::expr::VarSet;
use symflow_core::hamiltonian::HamiltonianSystem;

/// The 3D scaling-family system with its symmetry and constants.
pub fn scaling3d() -> ScalingFamily {
    let vars = VarSet::new(["x", "y", "z"], "t").unwrap();
    let q = ["z - 2*y^2", "2*x*y", "4*x*z"]
        .iter()
        .map(|s| vars.parse(s).unwrap())
        .collect();
    build_scaling_family(vars, &[-1.0, -1.0, -2.0], 1.0, ScalingForm::Analytic(q)).unwrap()
}

/// Two-particle Toda-like Hamiltonian with generating function G = p1 + p2.
pub fn toda() -> HamiltonianSystem {
    HamiltonianSystem::parse(
        2,
        "0.5*p1^2 + 0.5*p2^2 + exp(q1 + q2) + exp(q1 - q2)",
        Some("p1 + p2"),
        "t",
    )
    .unwrap()
}
