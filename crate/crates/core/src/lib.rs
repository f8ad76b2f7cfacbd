//! Symbolic-numeric verification toolkit for first-order dynamical systems
//! `u̇_a = f_a(u, t)`.
//!
//! The crate checks (it does not solve for) the structures that connect
//! symmetries and conservation rules of such systems:
//!
//! * point-symmetry conditions, scalar-λ and matrix-Λ weakened variants
//!   ([`symmetry`]);
//! * constants of motion, the Ovsjannikov construction of symmetries from
//!   first integrals, and Liouville fields ([`conserved`]);
//! * symmetry-adapted coordinate charts and the reduced form of a system in
//!   them ([`coords`]);
//! * canonical Hamiltonian structure, generating functions and the deviation
//!   laws governing their non-conservation ([`hamiltonian`]).
//!
//! Everything is evaluated pointwise with exact forward-mode derivatives
//! ([`expr`], [`dual`]) over seeded random samples ([`sample`]) or along
//! numerically integrated trajectories ([`numint`]). No finite differencing
//! is used anywhere in the library path; finite differences appear only as
//! independent oracles in the test suites.

pub mod conserved;
pub mod coords;
pub mod dual;
pub mod dynsys;
pub mod expr;
pub mod hamiltonian;
mod linalg;
pub mod numint;
pub mod report;
pub mod sample;
pub mod symmetry;
#[cfg(test)]
pub(crate) mod testutil;

pub use dynsys::{DynamicalSystem, LambdaSpec, VectorField};
pub use expr::{EvalError, Expr, Gradient, ParseError, Point, VarSet};
pub use numint::{IntegratorConfig, Trajectory};
pub use report::{CheckKind, Report, Verdict};
pub use sample::Sampler;

/// Default residual tolerance for pointwise checks: doubles plus exact
/// forward-mode derivatives leave plenty of headroom below this.
pub const DEFAULT_TOL: f64 = 1e-8;
