//! Geometric error models: planar four-point error ratios, the segment
//! error-transfer identities and sensitivities, and the weights they induce
//! on the Gauss-Newton refinement.
//!
//! All segment quantities live in the parallel-perspective model measured
//! relative to the target origin, which makes the transverse-offset identity
//! exact rather than approximate.

use thiserror::Error;

use crate::epnp::{ControlFrame, CONTROL_PAIRS};
use crate::geometry::{Correspondence, RigidPose};
use crate::{Vec2, Vec3};

/// Angle between segment and optical axis minimizing the attitude
/// sensitivity factor `1 / (sin(beta) * sqrt(cos(beta)))`: atan(sqrt(2)).
pub const OPTIMAL_BETA_DEG: f64 = 54.735610317245346;

/// Errors from the error-transfer model.
#[derive(Debug, Clone, Error)]
pub enum TransferError {
    #[error("point ({x}, {y}, {z}) is behind the camera (depth {depth})")]
    BehindCamera { x: f64, y: f64, z: f64, depth: f64 },
    #[error("segment has zero length")]
    ZeroLengthSegment,
    #[error("{ratio} is undefined at beta = {beta_deg} degrees")]
    RatioOutOfDomain { ratio: &'static str, beta_deg: f64 },
}

/// Error ratios of the planar four-point configuration: azimuth, pitch, and
/// tilt sensitivities relative to the feature extraction error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarRatios {
    pub sigma_gamma_ratio: f64,
    pub sigma_theta_ratio: f64,
    pub sigma_phi_ratio: f64,
}

/// Sensitivities of the angle estimates for a planar target at depth `d`
/// with neighbor spacing `l`, seen by a camera with cell size `a` and focal
/// length `f` (both mm). `pitch`/`tilt` are the plane angles in degrees.
///
/// All lengths must be positive.
pub fn planar_error_ratios(
    cell_size_a: f64,
    focal_f: f64,
    depth_d: f64,
    spacing_l: f64,
    pitch_theta_deg: f64,
    tilt_phi_deg: f64,
) -> PlanarRatios {
    let base = cell_size_a / (2.0 * focal_f);
    let ratio = depth_d / spacing_l;
    PlanarRatios {
        sigma_gamma_ratio: base * ratio,
        sigma_theta_ratio: base * ratio * ratio * pitch_theta_deg.to_radians().cos(),
        sigma_phi_ratio: base * ratio * ratio * tilt_phi_deg.to_radians().cos(),
    }
}

/// Geometry of one target segment (origin point to feature point) as seen by
/// the camera.
#[derive(Debug, Clone, Copy)]
pub struct SegmentGeometry {
    /// Segment length |P0 Pi| in mm.
    pub d_io: f64,
    /// Projected segment length in normalized image units.
    pub m_io: f64,
    /// Normalized distance of the projected target origin from the principal axis.
    pub m_o: f64,
    /// Angle between the segment and the optical axis, degrees.
    pub beta_deg: f64,
    /// Camera depth of the target origin, mm.
    pub tz: f64,
    /// Camera-frame offsets (P_i - P_0): (d_pix, d_piy, d_piz), mm.
    pub offset: Vec3,
    /// Normalized projected offsets (u_ix, v_ix).
    pub norm_offset: Vec2,
    /// Normalized projection of the target origin.
    pub origin_norm: Vec2,
}

impl SegmentGeometry {
    /// Squared transverse offset from the segment angle: `(d_io sin beta)^2`.
    pub fn transverse_sq_from_angle(&self) -> f64 {
        let s = self.d_io * self.beta_deg.to_radians().sin();
        s * s
    }

    /// The same quantity assembled from image measurements:
    /// `tz^2 m_io^2 + m_o^2 d_piz^2 + 2 (u_ix x0 + v_ix y0) tz d_piz`.
    pub fn transverse_sq_from_image(&self) -> f64 {
        let dz = self.offset.z;
        self.tz * self.tz * self.m_io * self.m_io
            + self.m_o * self.m_o * dz * dz
            + 2.0 * (self.norm_offset.x * self.origin_norm.x
                + self.norm_offset.y * self.origin_norm.y)
                * self.tz
                * dz
    }
}

/// Computes the segment geometry between the target-origin correspondence
/// and another feature point under a known pose.
pub fn segment_geometry(
    corr_origin: &Correspondence,
    corr_i: &Correspondence,
    pose: &RigidPose,
) -> Result<SegmentGeometry, TransferError> {
    let behind = |w: &Vec3, cam: &Vec3| TransferError::BehindCamera {
        x: w.x,
        y: w.y,
        z: w.z,
        depth: cam.z,
    };
    let p0 = pose.transform(&corr_origin.world);
    if p0.z <= 0.0 {
        return Err(behind(&corr_origin.world, &p0));
    }
    let pi = pose.transform(&corr_i.world);
    if pi.z <= 0.0 {
        return Err(behind(&corr_i.world, &pi));
    }
    let offset = pi - p0;
    let d_io = offset.norm();
    if d_io == 0.0 {
        return Err(TransferError::ZeroLengthSegment);
    }
    let tz = p0.z;
    let origin_norm = Vec2::new(p0.x / p0.z, p0.y / p0.z);
    // Parallel-perspective projected offsets relative to the origin ray.
    let norm_offset = Vec2::new(
        (offset.x - origin_norm.x * offset.z) / tz,
        (offset.y - origin_norm.y * offset.z) / tz,
    );
    let beta = (offset.xy().norm()).atan2(offset.z);
    Ok(SegmentGeometry {
        d_io,
        m_io: norm_offset.norm(),
        m_o: origin_norm.norm(),
        beta_deg: beta.to_degrees(),
        tz,
        offset,
        norm_offset,
        origin_norm,
    })
}

/// First-order sensitivities of the segment length and angle to the image
/// measurements. Ratios outside their validity domain are `None`; the
/// checked accessors name the offending ratio.
#[derive(Debug, Clone, Copy)]
pub struct ErrorRatios {
    pub d_wrt_mio: Option<f64>,
    pub d_wrt_mo: Option<f64>,
    pub d_wrt_beta: Option<f64>,
    pub beta_wrt_mio: Option<f64>,
    pub beta_wrt_mo: Option<f64>,
    beta_deg: f64,
}

impl ErrorRatios {
    fn get(&self, v: Option<f64>, name: &'static str) -> Result<f64, TransferError> {
        v.ok_or(TransferError::RatioOutOfDomain { ratio: name, beta_deg: self.beta_deg })
    }

    pub fn d_wrt_mio(&self) -> Result<f64, TransferError> {
        self.get(self.d_wrt_mio, "d_wrt_mio")
    }
    pub fn d_wrt_mo(&self) -> Result<f64, TransferError> {
        self.get(self.d_wrt_mo, "d_wrt_mo")
    }
    pub fn d_wrt_beta(&self) -> Result<f64, TransferError> {
        self.get(self.d_wrt_beta, "d_wrt_beta")
    }
    pub fn beta_wrt_mio(&self) -> Result<f64, TransferError> {
        self.get(self.beta_wrt_mio, "beta_wrt_mio")
    }
    pub fn beta_wrt_mo(&self) -> Result<f64, TransferError> {
        self.get(self.beta_wrt_mo, "beta_wrt_mo")
    }
}

/// The attitude sensitivity factor `1 / (sin(beta) sqrt(cos(beta)))`,
/// defined for beta strictly inside (0, 90) degrees.
pub fn angle_sensitivity_factor(beta_deg: f64) -> Option<f64> {
    let b = beta_deg.to_radians();
    let (sb, cb) = (b.sin(), b.cos());
    if sb <= 0.0 || cb <= 0.0 {
        return None;
    }
    Some(1.0 / (sb * cb.sqrt()))
}

/// Evaluates the closed-form sensitivities for one segment geometry.
pub fn segment_error_ratios(geom: &SegmentGeometry) -> ErrorRatios {
    let b = geom.beta_deg.to_radians();
    let (sb, mut cb) = (b.sin(), b.cos());
    // cos(90 degrees) rounds to ~6e-17 through the radian conversion; pin the
    // boundary so the angle ratios are rejected exactly at and beyond it.
    if geom.beta_deg >= 90.0 && cb > 0.0 {
        cb = 0.0;
    }
    let sin_ok = sb > 0.0;
    let d = geom.d_io;
    let tz2 = geom.tz * geom.tz;
    let dz2 = geom.offset.z * geom.offset.z;

    let d_wrt_mio = sin_ok.then(|| tz2 * geom.m_io / (d * sb * sb));
    let d_wrt_mo = sin_ok.then(|| dz2 * geom.m_o / (d * sb * sb));
    let d_wrt_beta = (sin_ok && cb >= 0.0).then(|| d * cb.sqrt() / sb);
    let angle_den = sin_ok && cb > 0.0;
    let beta_wrt_mio = angle_den.then(|| tz2 * geom.m_io / (d * d * sb * cb.sqrt()));
    let beta_wrt_mo = angle_den.then(|| dz2 * geom.m_o / (d * d * sb * cb.sqrt()));

    ErrorRatios {
        d_wrt_mio,
        d_wrt_mo,
        d_wrt_beta,
        beta_wrt_mio,
        beta_wrt_mo,
        beta_deg: geom.beta_deg,
    }
}

/// Degenerate projected lengths are clamped here before dividing.
const WEIGHT_CLAMP: f64 = 1e-6;

/// Gauss-Newton weights for the six control-point pairs:
/// `w_ij = d_ij^2 / (tz^2 m_o m_ij)`, normalized to unit mean.
///
/// Segment projections use the parallel-perspective model under the coarse
/// pose, so the weights are well defined even for extreme viewing geometry;
/// near-zero `m_o` or `m_ij` are clamped instead of raising an error.
pub fn gn_weights(frame: &ControlFrame, coarse_pose: &RigidPose) -> [f64; 6] {
    let t = coarse_pose.translation;
    let tz = if t.z.abs() > WEIGHT_CLAMP { t.z.abs() } else { WEIGHT_CLAMP };
    let x0 = t.x / t.z;
    let y0 = t.y / t.z;
    let m_o = (x0 * x0 + y0 * y0).sqrt().max(WEIGHT_CLAMP);

    let cam: Vec<Vec3> =
        frame.control_world.iter().map(|c| coarse_pose.transform(c)).collect();

    let mut weights = [0.0; 6];
    for (p, (i, j)) in CONTROL_PAIRS.iter().enumerate() {
        let d = (frame.control_world[*i] - frame.control_world[*j]).norm();
        let delta = cam[*i] - cam[*j];
        let u = (delta.x - x0 * delta.z) / tz;
        let v = (delta.y - y0 * delta.z) / tz;
        let m_ij = (u * u + v * v).sqrt().max(WEIGHT_CLAMP);
        weights[p] = d * d / (tz * tz * m_o * m_ij);
    }
    let mean = weights.iter().sum::<f64>() / 6.0;
    if mean > 0.0 && mean.is_finite() {
        for w in &mut weights {
            *w /= mean;
        }
    }
    weights
}
