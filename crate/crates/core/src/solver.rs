//! Shared solver surface: report type, error type, and dispatch over the
//! available pose solvers.

use thiserror::Error;

use crate::epnp::{self, ControlPointMode, Weighting};
use crate::geometry::{CameraIntrinsics, CorrespondenceSet, GeometryError, RigidPose};
use crate::{baselines, paraperspective};

/// Errors from the pose solvers.
#[derive(Debug, Clone, Error)]
pub enum SolveError {
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("cheirality failure: no candidate places the points in front of the camera")]
    Cheirality,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("origin index {index} out of bounds for {len} correspondences")]
    OriginIndexOutOfBounds { index: usize, len: usize },
}

/// Which geometric model produced the pose estimate (or its initial value).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initializer {
    EpnpClosedForm,
    WeakPerspective,
    Paraperspective,
    Dlt,
}

/// A solved pose plus diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub pose: RigidPose,
    /// Root-mean-square pixel reprojection residual over all correspondences.
    pub reprojection_rms: f64,
    /// Accepted Gauss-Newton steps (0 for closed-form/linear solvers).
    pub gn_iterations: usize,
    pub initializer: Initializer,
    /// Whether error-transfer weights were applied in the refinement.
    pub weighted: bool,
}

/// The solvers exposed by the library and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Direct linear transform on normalized coordinates (n >= 6).
    Dlt,
    /// Closed-form EPnP without refinement.
    Epnp,
    /// EPnP followed by unweighted Gauss-Newton refinement.
    EpnpGn,
    /// Parallel-perspective initialization + unweighted Gauss-Newton.
    Parallel,
    /// Parallel-perspective initialization + error-transfer-weighted Gauss-Newton.
    ParallelWeight,
    /// Weak-perspective (scaled orthographic) fit, no refinement.
    WeakPerspective,
}

impl SolverKind {
    pub const ALL: [SolverKind; 6] = [
        SolverKind::Dlt,
        SolverKind::Epnp,
        SolverKind::EpnpGn,
        SolverKind::Parallel,
        SolverKind::ParallelWeight,
        SolverKind::WeakPerspective,
    ];

    /// Stable label used in CSV output and CLI flags.
    pub fn label(&self) -> &'static str {
        match self {
            SolverKind::Dlt => "dlt",
            SolverKind::Epnp => "epnp",
            SolverKind::EpnpGn => "epnp-gn",
            SolverKind::Parallel => "parallel",
            SolverKind::ParallelWeight => "parallel-weight",
            SolverKind::WeakPerspective => "weak",
        }
    }

    /// Inverse of [`SolverKind::label`].
    pub fn from_label(s: &str) -> Option<SolverKind> {
        Self::ALL.iter().copied().find(|k| k.label() == s)
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Options shared by the EPnP-family solvers.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// How control points are chosen (EPnP family only).
    pub control_mode: ControlPointMode,
    /// Index of the target-origin correspondence for the perspective
    /// approximation fits. Defaults to the point at the world origin when
    /// present, else the point closest to the world centroid.
    pub origin_index: Option<usize>,
}

/// Runs the selected solver on a correspondence set.
pub fn solve(
    kind: SolverKind,
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    let origin = |corr: &CorrespondenceSet| -> Result<usize, SolveError> {
        match opts.origin_index {
            Some(i) if i >= corr.len() => {
                Err(SolveError::OriginIndexOutOfBounds { index: i, len: corr.len() })
            }
            Some(i) => Ok(i),
            None => Ok(paraperspective::default_origin_index(corr)),
        }
    };
    match kind {
        SolverKind::Dlt => baselines::solve_dlt(corr, intr),
        SolverKind::Epnp => {
            epnp::solve_epnp_with(corr, intr, false, Weighting::None, &opts.control_mode)
        }
        SolverKind::EpnpGn => {
            epnp::solve_epnp_with(corr, intr, true, Weighting::None, &opts.control_mode)
        }
        SolverKind::Parallel => {
            epnp::solve_parallel(corr, intr, false, &opts.control_mode, origin(corr)?)
        }
        SolverKind::ParallelWeight => {
            epnp::solve_parallel(corr, intr, true, &opts.control_mode, origin(corr)?)
        }
        SolverKind::WeakPerspective => baselines::solve_weak_perspective(corr, intr, origin(corr)?),
    }
}
