use std::path::PathBuf;

use thiserror::Error;

use crate::ambient::Signature;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("signature mismatch: {left} vs {right}")]
    SignatureMismatch { left: Signature, right: Signature },
    #[error("unsupported signature: dimension {dim} with {timelike_count} timelike directions")]
    InvalidSignature { dim: usize, timelike_count: usize },
    #[error("expected {expected} components, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("space-form curvature must be 0, +1 or -1, got {0}")]
    InvalidCurvature(i32),
    #[error("flat space has no model constraint")]
    NoModelConstraint,
    #[error("degenerate span: Gram determinant {gram:e} below tolerance (scale {scale:e})")]
    Degenerate { gram: f64, scale: f64 },
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CurvatureError {
    #[error("curvature must be positive, got k = {0}")]
    NonPositiveCurvature(f64),
    #[error("prime-integral polynomial is negative for every k > 0 (C = {constant}, c = {c})")]
    NoSolution { constant: f64, c: i32 },
    #[error("kappa2 is undefined for C = 0")]
    DegenerateConstant,
    #[error("span [{0}, {1}] must contain the initial point u = 0")]
    InvalidSpan(f64, f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid space-form curvature {0}")]
    InvalidModel(i32),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ProfileError {
    #[error("rho = {rho} outside the profile domain ({lower}, {upper}]")]
    OutsideDomain { rho: f64, lower: f64, upper: f64 },
    #[error("revolution profile requires C > 0, got {0}")]
    NonPositiveConstant(f64),
    #[error("branch {branch} is incompatible with {reason}")]
    BranchMismatch {
        branch: &'static str,
        reason: String,
    },
    #[error("infeasible initial constraints: {0}")]
    Infeasible(String),
    #[error("k-range must be split: {0}")]
    SplitRange(String),
    #[error("frame integration failed: {0}")]
    Integration(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SurfaceError {
    #[error("builder {builder} cannot use a profile of branch {branch}")]
    BranchMismatch {
        builder: &'static str,
        branch: &'static str,
    },
    #[error("parameter rectangle [{0}, {1}] is outside the evaluable domain [{2}, {3}]")]
    OutsideDomain(f64, f64, f64, f64),
    #[error("mesh needs at least 2x2 samples, got {0}x{1}")]
    GridTooSmall(usize, usize),
    #[error("projection pole {pole} lies on the surface; try pole {suggestion}")]
    PoleOnSurface { pole: String, suggestion: String },
    #[error("projection {0} does not apply to model {1}")]
    ProjectionModel(String, &'static str),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VerifyError {
    #[error("metric is near-degenerate at (u, v) = ({u}, {v}): det g = {det:e}")]
    Conditioning { u: f64, v: f64, det: f64 },
    #[error("finite-difference stencil at (u, v) = ({u}, {v}) leaves the evaluable domain")]
    StencilOutsideDomain { u: f64, v: f64 },
    #[error("verification grid needs at least 2x2 points, got {0}x{1}")]
    GridTooSmall(usize, usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Top-level error of a pipeline run, tagged with the stage that produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

impl Error {
    pub fn stage(stage: &'static str, source: impl Into<StageError>) -> Self {
        Error::Stage {
            stage,
            source: source.into(),
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::Stage { source, .. } => match source {
                StageError::Curvature(CurvatureError::NonPositiveCurvature(_))
                | StageError::Curvature(CurvatureError::NoSolution { .. })
                | StageError::Curvature(CurvatureError::InvalidSpan(..))
                | StageError::Curvature(CurvatureError::InvalidTolerance(_))
                | StageError::Profile(ProfileError::OutsideDomain { .. })
                | StageError::Profile(ProfileError::NonPositiveConstant(_))
                | StageError::Profile(ProfileError::BranchMismatch { .. })
                | StageError::Profile(ProfileError::Infeasible(_))
                | StageError::Surface(SurfaceError::BranchMismatch { .. })
                | StageError::Surface(SurfaceError::GridTooSmall(..))
                | StageError::Surface(SurfaceError::ProjectionModel(..))
                | StageError::Surface(SurfaceError::PoleOnSurface { .. })
                | StageError::Verify(VerifyError::GridTooSmall(..)) => 2,
                _ => 3,
            },
        }
    }
}
