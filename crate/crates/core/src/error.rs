use thiserror::Error;

use crate::convex::PointCase;

/// The three situations excluded by the pointwise limit theorem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ExcludedCase {
    /// The right derivative takes only infinite values beyond λ
    /// (improper on `[0, ∞)`, or `+∞` everywhere right of λ).
    OnlyInfiniteSlopes,
    /// The function is affine immediately to the right of λ.
    AffineRun,
    /// λ = 0, `L'_r(0+) = -∞` and the function jumps at zero.
    RightDiscontinuousAtZero,
}

impl ExcludedCase {
    pub fn label(self) -> &'static str {
        match self {
            ExcludedCase::OnlyInfiniteSlopes => "(i) right derivative only infinite beyond lambda",
            ExcludedCase::AffineRun => "(ii) affine run to the right of lambda",
            ExcludedCase::RightDiscontinuousAtZero => {
                "(iii) lambda = 0 with L'_r(0+) = -inf and right discontinuity at 0"
            }
        }
    }

    /// Maps a point classification to the excluded case it falls under, if any.
    pub fn from_point_case(case: PointCase) -> Option<Self> {
        match case {
            PointCase::LimitPoint => None,
            PointCase::AffineThenKink | PointCase::AffineRay => Some(ExcludedCase::AffineRun),
            PointCase::FiniteThenInfinite | PointCase::AllInfinite | PointCase::Improper => {
                Some(ExcludedCase::OnlyInfiniteSlopes)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("extended-real domain error: {0}")]
    Domain(String),
    #[error("no oracle or knot covers t = {0}")]
    OracleMissing(f64),
    #[error("finite-difference schedule did not converge at t = {t} ({what})")]
    NoConvergence { t: f64, what: &'static str },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("conjugate extension at -inf unavailable: L'_r(0+) is finite")]
    ExtensionUnavailable,
    #[error("operation undefined on an improper function")]
    ImproperInput,
    #[error("hypothesis violated: excluded case {} [point case {}]", .excluded.label(), .case.tag())]
    HypothesisViolated {
        excluded: ExcludedCase,
        case: PointCase,
    },
    #[error("hypothesis violated: {0}")]
    CurveHypothesis(String),
    #[error("seed is not strictly convex near t = {0}")]
    NotStrictlyConvex(f64),
    #[error("bad chord sequence: {0}")]
    BadChordSeq(String),
    #[error("dense enumeration requested on an empty domain")]
    EmptyDomain,
    #[error("every enumerated atom has infinite conjugate value")]
    AllWeightsInfinite,
    #[error("empirical sequence moves away from the target: {0}")]
    NonMonotoneDivergence(String),
    #[error("local rate estimate unstable: {0}")]
    Unstable(String),
    #[error("z = {0} outside the admissible range")]
    ZOutOfRange(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
