//! Common result type for pointwise checks.

use crate::expr::Point;
use crate::sample::Aggregate;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Verdict {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Standard,
    Lambda,
    CapitalLambda,
    ConstantPointwise,
    Liouville,
    IntegratingFactor,
    Chart,
    ReducedStructure,
    GradientIdentity,
    GeneratingConservation,
    DeviationLambda,
    DeviationCapitalLambda,
}

impl std::fmt::Display for CheckKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CheckKind::Standard => "standard-symmetry",
            CheckKind::Lambda => "lambda-symmetry",
            CheckKind::CapitalLambda => "capital-lambda-symmetry",
            CheckKind::ConstantPointwise => "constant-pointwise",
            CheckKind::Liouville => "liouville-field",
            CheckKind::IntegratingFactor => "integrating-factor",
            CheckKind::Chart => "adapted-chart",
            CheckKind::ReducedStructure => "reduced-structure",
            CheckKind::GradientIdentity => "gradient-identity",
            CheckKind::GeneratingConservation => "generating-conservation",
            CheckKind::DeviationLambda => "deviation-lambda",
            CheckKind::DeviationCapitalLambda => "deviation-capital-lambda",
        })
    }
}

/// Aggregated outcome of a pointwise residual check. The verdict is pass
/// exactly when `max_residual <= tolerance`.
#[derive(Debug, Clone)]
pub struct Report {
    pub kind: CheckKind,
    pub points_sampled: usize,
    pub points_excluded: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst_point: Option<Point>,
    pub tolerance: f64,
    pub seed: u64,
    pub verdict: Verdict,
}

impl Report {
    pub(crate) fn from_aggregate(kind: CheckKind, agg: &Aggregate, tol: f64, seed: u64) -> Report {
        Report {
            kind,
            points_sampled: agg.accepted,
            points_excluded: agg.excluded,
            max_residual: agg.max,
            mean_residual: agg.mean(),
            worst_point: agg.worst.clone(),
            tolerance: tol,
            seed,
            verdict: Verdict::from_bool(agg.max <= tol),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }
}
