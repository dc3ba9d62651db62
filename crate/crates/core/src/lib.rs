//! Camera pose estimation from 3D-2D point correspondences.
//!
//! The crate centers on an EPnP-style solver whose Gauss-Newton refinement
//! can be initialized from a parallel-perspective (paraperspective) pose fit
//! and weighted by a geometric error-transfer model. Classic baselines (DLT,
//! closed-form EPnP, weak perspective) and a deterministic Monte-Carlo
//! benchmark harness are included for comparison sweeps.
//!
//! Conventions:
//! - World coordinates are millimeters, pixels are pixels, angles at API
//!   boundaries are degrees.
//! - A pose maps world to camera coordinates: `p_cam = R * p_world + t`.
//! - "Normalized" image coordinates are unit-focal: `(u - u0)/fx, (v - v0)/fy`.

pub mod baselines;
pub mod epnp;
pub mod error_transfer;
pub mod geometry;
pub mod paraperspective;
pub mod sim;
pub mod solver;

pub use geometry::{
    absolute_orientation, euler_zxz_to_rotation, normalize_pixel, project, rotation_to_euler_zxz,
    CameraIntrinsics, Correspondence, CorrespondenceSet, EulerZxz, GeometryError, RigidPose,
};
pub use solver::{solve, Initializer, SolveError, SolveOptions, SolveReport, SolverKind};

/// 2-vector of f64.
pub type Vec2 = nalgebra::Vector2<f64>;
/// 3-vector of f64.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 4-vector of f64.
pub type Vec4 = nalgebra::Vector4<f64>;
/// 3x3 matrix of f64.
pub type Mat3 = nalgebra::Matrix3<f64>;
