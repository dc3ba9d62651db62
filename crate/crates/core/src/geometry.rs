//! Foundational types and operations: pinhole projection, ZXZ Euler angles,
//! and the closed-form absolute-orientation (rigid alignment) solve.

use nalgebra::SVD;
use thiserror::Error;

use crate::{Mat3, Vec2, Vec3};

/// Errors from the geometric primitives.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    /// A point has non-positive depth in the camera frame.
    #[error("point ({x}, {y}, {z}) is behind the camera (depth {depth})")]
    BehindCamera { x: f64, y: f64, z: f64, depth: f64 },
    /// An intrinsics or pose parameter violates its invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// Input point sets have inconsistent lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    /// The point configuration does not determine a unique solution.
    #[error("rank-deficient configuration: {0}")]
    RankDeficient(&'static str),
    /// A correspondence set contains coincident or non-finite points.
    #[error("invalid correspondence set: {0}")]
    InvalidCorrespondences(String),
}

/// Pinhole camera intrinsics.
///
/// `cell_size` (physical pixel pitch, mm) and `focal_mm` are optional and only
/// used by the planar error model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub cell_size: Option<f64>,
    pub focal_mm: Option<f64>,
}

impl CameraIntrinsics {
    /// Creates intrinsics, requiring positive focal lengths.
    pub fn new(fx: f64, fy: f64, u0: f64, v0: f64) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) || !(fx.is_finite() && fy.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "focal lengths must be positive and finite, got fx={fx}, fy={fy}"
            )));
        }
        if !(u0.is_finite() && v0.is_finite()) {
            return Err(GeometryError::InvalidParameter(format!(
                "principal point must be finite, got ({u0}, {v0})"
            )));
        }
        Ok(Self { fx, fy, u0, v0, cell_size: None, focal_mm: None })
    }

    /// Attaches the physical pixel pitch and focal length (both mm, both > 0).
    pub fn with_physical(mut self, cell_size: f64, focal_mm: f64) -> Result<Self, GeometryError> {
        if !(cell_size > 0.0 && focal_mm > 0.0) {
            return Err(GeometryError::InvalidParameter(format!(
                "physical parameters must be positive, got a={cell_size}, f={focal_mm}"
            )));
        }
        self.cell_size = Some(cell_size);
        self.focal_mm = Some(focal_mm);
        Ok(self)
    }
}

/// Rigid transform from world to camera coordinates: `p_cam = R * p_world + t`.
///
/// The rotation is orthonormal with determinant +1 (checked to 1e-9 on
/// construction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl RigidPose {
    const ROTATION_TOL: f64 = 1e-9;

    /// Creates a pose, validating the rotation invariants.
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        let ortho = (rotation.transpose() * rotation - Mat3::identity()).abs().max();
        if ortho > Self::ROTATION_TOL {
            return Err(GeometryError::InvalidParameter(format!(
                "rotation is not orthonormal (max deviation {ortho:.3e})"
            )));
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > Self::ROTATION_TOL {
            return Err(GeometryError::InvalidParameter(format!(
                "rotation determinant is {det}, expected 1"
            )));
        }
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(GeometryError::InvalidParameter(
                "translation has non-finite components".into(),
            ));
        }
        Ok(Self { rotation, translation })
    }

    /// Identity pose.
    pub fn identity() -> Self {
        Self { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    /// Maps a world point into the camera frame.
    pub fn transform(&self, world: &Vec3) -> Vec3 {
        self.rotation * world + self.translation
    }
}

/// One 3D world point paired with its pixel observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub world: Vec3,
    pub pixel: Vec2,
}

impl Correspondence {
    pub fn new(world: Vec3, pixel: Vec2) -> Self {
        Self { world, pixel }
    }
}

/// An ordered set of correspondences.
///
/// Construction rejects non-finite coordinates and coincident world points;
/// minimum sizes are enforced by the individual solver entry points.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    items: Vec<Correspondence>,
}

impl CorrespondenceSet {
    pub fn new(items: Vec<Correspondence>) -> Result<Self, GeometryError> {
        for (i, c) in items.iter().enumerate() {
            let finite = c.world.iter().all(|v| v.is_finite()) && c.pixel.iter().all(|v| v.is_finite());
            if !finite {
                return Err(GeometryError::InvalidCorrespondences(format!(
                    "correspondence {i} has non-finite coordinates"
                )));
            }
        }
        for i in 0..items.len() {
            for j in (i + 1)..items.len() {
                if items[i].world == items[j].world {
                    return Err(GeometryError::InvalidCorrespondences(format!(
                        "world points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[Correspondence] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// World points as an owned vector.
    pub fn world_points(&self) -> Vec<Vec3> {
        self.items.iter().map(|c| c.world).collect()
    }
}

/// Projects a world point to pixel coordinates.
///
/// Fails if the camera-frame depth is not strictly positive.
pub fn project(
    intr: &CameraIntrinsics,
    pose: &RigidPose,
    world: &Vec3,
) -> Result<Vec2, GeometryError> {
    let cam = pose.transform(world);
    if cam.z <= 0.0 {
        return Err(GeometryError::BehindCamera {
            x: world.x,
            y: world.y,
            z: world.z,
            depth: cam.z,
        });
    }
    Ok(Vec2::new(
        intr.u0 + intr.fx * cam.x / cam.z,
        intr.v0 + intr.fy * cam.y / cam.z,
    ))
}

/// Converts a pixel into unit-focal normalized image coordinates.
pub fn normalize_pixel(intr: &CameraIntrinsics, pixel: &Vec2) -> Vec2 {
    Vec2::new((pixel.x - intr.u0) / intr.fx, (pixel.y - intr.v0) / intr.fy)
}

/// Rotation matrix for ZXZ Euler angles in degrees: rotate about Z by
/// `alpha`, about the new X by `beta`, about the new Z by `theta`.
pub fn euler_zxz_to_rotation(alpha_deg: f64, beta_deg: f64, theta_deg: f64) -> Mat3 {
    let (sa, ca) = alpha_deg.to_radians().sin_cos();
    let (sb, cb) = beta_deg.to_radians().sin_cos();
    let (st, ct) = theta_deg.to_radians().sin_cos();
    Mat3::new(
        ca * ct - sa * cb * st,
        -ca * st - sa * cb * ct,
        sa * sb,
        sa * ct + ca * cb * st,
        -sa * st + ca * cb * ct,
        -ca * sb,
        sb * st,
        sb * ct,
        cb,
    )
}

/// ZXZ Euler angles in degrees, with `beta` in [0, 180].
///
/// `degenerate` is set when `beta` is at a gimbal singularity (0 or 180
/// degrees), where only `alpha + theta` (resp. `alpha - theta`) is
/// determined; the canonical representative has `theta = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerZxz {
    pub alpha_deg: f64,
    pub beta_deg: f64,
    pub theta_deg: f64,
    pub degenerate: bool,
}

/// Recovers ZXZ Euler angles from a rotation matrix.
pub fn rotation_to_euler_zxz(r: &Mat3) -> EulerZxz {
    let cb = r[(2, 2)].clamp(-1.0, 1.0);
    let beta = cb.acos();
    let sb = beta.sin();
    // sin(beta) ~ 1e-7 corresponds to ~1e-5 degrees from the singularity.
    if sb > 1e-7 {
        let alpha = r[(0, 2)].atan2(-r[(1, 2)]);
        let theta = r[(2, 0)].atan2(r[(2, 1)]);
        EulerZxz {
            alpha_deg: alpha.to_degrees(),
            beta_deg: beta.to_degrees(),
            theta_deg: theta.to_degrees(),
            degenerate: false,
        }
    } else {
        // Gimbal lock: the matrix reduces to a single Z rotation (beta = 0)
        // or a Z rotation composed with X flip (beta = 180).
        let alpha = r[(1, 0)].atan2(r[(0, 0)]);
        EulerZxz {
            alpha_deg: alpha.to_degrees(),
            beta_deg: beta.to_degrees(),
            theta_deg: 0.0,
            degenerate: true,
        }
    }
}

/// Projects an arbitrary 3x3 matrix to the nearest rotation (polar factor
/// with determinant forced to +1).
pub(crate) fn nearest_rotation(m: &Mat3) -> Result<Mat3, GeometryError> {
    let svd = SVD::new(*m, true, true);
    let u = svd.u.ok_or(GeometryError::RankDeficient("svd failed"))?;
    let v_t = svd.v_t.ok_or(GeometryError::RankDeficient("svd failed"))?;
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u_fix = u;
        u_fix.column_mut(2).neg_mut();
        r = u_fix * v_t;
    }
    Ok(r)
}

/// Rigid alignment of two 3D point sets.
///
/// Returns the pose minimizing `sum ||camera_i - (R * world_i + t)||^2` over
/// rotations with determinant +1 (no scale). Requires at least 3
/// non-collinear world points.
pub fn absolute_orientation(world: &[Vec3], camera: &[Vec3]) -> Result<RigidPose, GeometryError> {
    if world.len() != camera.len() {
        return Err(GeometryError::LengthMismatch { left: world.len(), right: camera.len() });
    }
    let n = world.len();
    if n < 3 {
        return Err(GeometryError::RankDeficient("need at least 3 points"));
    }
    let inv_n = 1.0 / n as f64;
    let c_w: Vec3 = world.iter().sum::<Vec3>() * inv_n;
    let c_c: Vec3 = camera.iter().sum::<Vec3>() * inv_n;

    let mut h = Mat3::zeros();
    for (w, c) in world.iter().zip(camera) {
        h += (w - c_w) * (c - c_c).transpose();
    }

    let svd = SVD::new(h, true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if sv[0] <= 0.0 || sv[1] <= sv[0] * 1e-12 {
        return Err(GeometryError::RankDeficient(
            "world points are collinear or coincident",
        ));
    }
    let u = svd.u.ok_or(GeometryError::RankDeficient("svd failed"))?;
    let v_t = svd.v_t.ok_or(GeometryError::RankDeficient("svd failed"))?;

    // R = V D U^T with D correcting a possible reflection.
    let mut d = Mat3::identity();
    if (v_t.transpose() * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v_t.transpose() * d * u.transpose();
    let t = c_c - r * c_w;
    RigidPose::new(r, t)
}
