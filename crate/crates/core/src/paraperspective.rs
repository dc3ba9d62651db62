//! Parallel-perspective (paraperspective) pose fitting.
//!
//! The paraperspective model projects points parallel to the ray through a
//! reference point (the target origin) and then applies that point's
//! perspective scaling. It is a first-order perspective correction and is
//! noticeably more accurate than weak perspective when the target is close
//! to the camera. The fitted pose seeds the Gauss-Newton betas of the
//! EPnP-style refinement.

use nalgebra::SymmetricEigen;

use crate::epnp::ControlFrame;
use crate::geometry::{nearest_rotation, normalize_pixel, CameraIntrinsics, CorrespondenceSet, RigidPose};
use crate::solver::SolveError;
use crate::{Mat3, Vec2, Vec3, Vec4};

/// Result of the paraperspective fit.
///
/// `ip` and `jp` are the fitted projection directions scaled by 1/tz;
/// `origin_norm` is the normalized-image observation of the target origin.
#[derive(Debug, Clone)]
pub struct ParaperspectiveFit {
    pub ip: Vec3,
    pub jp: Vec3,
    pub origin_norm: Vec2,
    pub tz: f64,
    pub pose: RigidPose,
}

/// Default reference point: the correspondence at the world origin when
/// present, otherwise the one closest to the world centroid.
pub fn default_origin_index(corr: &CorrespondenceSet) -> usize {
    let items = corr.items();
    if let Some(i) = items.iter().position(|c| c.world == Vec3::zeros()) {
        return i;
    }
    let centroid: Vec3 = items.iter().map(|c| c.world).sum::<Vec3>() / items.len() as f64;
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in items.iter().enumerate() {
        let d = (c.world - centroid).norm_squared();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Minimum-norm least-squares solve of `rows * x = b` for the two image
/// axes, via the spectral decomposition of the 3x3 normal matrix. Requires
/// the rows to span at least a plane (rank >= 2); planar targets get the
/// minimum-norm solution, collinear ones are rejected.
pub(crate) fn fit_linear_directions(
    rows: &[Vec3],
    bx: &[f64],
    by: &[f64],
) -> Result<(Vec3, Vec3), SolveError> {
    let mut ata = Mat3::zeros();
    let mut atx = Vec3::zeros();
    let mut aty = Vec3::zeros();
    for (i, r) in rows.iter().enumerate() {
        ata += r * r.transpose();
        atx += r * bx[i];
        aty += r * by[i];
    }
    let eig = SymmetricEigen::new(ata);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    // Eigenvalues are squared singular values; this matches a 1e-9 ratio
    // threshold on the singular values themselves.
    if lambda_max <= 0.0 || eig.eigenvalues[order[1]] <= 1e-18 * lambda_max {
        return Err(SolveError::DegenerateConfiguration(
            "world points are collinear; projection directions are underdetermined".into(),
        ));
    }
    let solve_one = |atb: &Vec3| -> Vec3 {
        let mut x = Vec3::zeros();
        for &k in &order {
            let lambda = eig.eigenvalues[k];
            if lambda <= 1e-20 * lambda_max {
                continue;
            }
            let axis: Vec3 = eig.eigenvectors.column(k).into();
            x += axis * (axis.dot(atb) / lambda);
        }
        x
    };
    Ok((solve_one(&atx), solve_one(&aty)))
}

/// Fits the paraperspective pose to a correspondence set.
///
/// `origin_index` names the correspondence playing the role of the target
/// origin; its observation anchors the projection reference ray.
pub fn fit_paraperspective(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    origin_index: usize,
) -> Result<ParaperspectiveFit, SolveError> {
    let n = corr.len();
    if n < 4 {
        return Err(SolveError::InsufficientPoints { needed: 4, got: n });
    }
    if origin_index >= n {
        return Err(SolveError::OriginIndexOutOfBounds { index: origin_index, len: n });
    }
    let items = corr.items();
    let origin_world = items[origin_index].world;
    let origin_norm = normalize_pixel(intr, &items[origin_index].pixel);

    // Linear solve for the projection directions with world coordinates
    // shifted so the reference point is the origin.
    let mut rows = Vec::with_capacity(n);
    let mut bx = Vec::with_capacity(n);
    let mut by = Vec::with_capacity(n);
    for c in items {
        let norm = normalize_pixel(intr, &c.pixel);
        rows.push(c.world - origin_world);
        bx.push(norm.x - origin_norm.x);
        by.push(norm.y - origin_norm.y);
    }
    let (ip, jp) = fit_linear_directions(&rows, &bx, &by)?;

    let ip_norm = ip.norm();
    let jp_norm = jp.norm();
    if ip_norm <= f64::MIN_POSITIVE.sqrt() || jp_norm <= f64::MIN_POSITIVE.sqrt() {
        return Err(SolveError::DegenerateConfiguration(
            "projection directions collapsed to zero".into(),
        ));
    }

    // Two depth estimates from the row norms of the rotation; average them.
    let (x0, y0) = (origin_norm.x, origin_norm.y);
    let tz = 0.5 * ((1.0 + x0 * x0).sqrt() / ip_norm + (1.0 + y0 * y0).sqrt() / jp_norm);

    // Third rotation row from the orthogonality constraint.
    let lhs = Mat3::identity() - skew(&ip) * (tz * y0) + skew(&jp) * (tz * x0);
    let rhs = ip.cross(&jp) * (tz * tz);
    let k = lhs.lu().solve(&rhs).ok_or_else(|| {
        SolveError::DegenerateConfiguration("singular system for the third rotation row".into())
    })?;

    let i = ip * tz + k * x0;
    let j = jp * tz + k * y0;
    let raw = Mat3::new(i.x, i.y, i.z, j.x, j.y, j.z, k.x, k.y, k.z);
    let rotation = nearest_rotation(&raw).map_err(SolveError::Geometry)?;

    // Translation of the shifted frame, then undo the shift.
    let t_shifted = Vec3::new(x0 * tz, y0 * tz, tz);
    let translation = t_shifted - rotation * origin_world;
    let pose = RigidPose::new(rotation, translation).map_err(SolveError::Geometry)?;

    Ok(ParaperspectiveFit { ip, jp, origin_norm, tz, pose })
}

/// Initial betas for the Gauss-Newton refinement: the camera-frame control
/// points implied by the fitted pose, projected orthogonally onto the
/// null-space basis.
pub fn init_betas(fit: &ParaperspectiveFit, frame: &ControlFrame) -> Vec4 {
    let mut x0 = crate::epnp::Vector12::zeros();
    for (j, c) in frame.control_world.iter().enumerate() {
        let cc = fit.pose.transform(c);
        x0.fixed_rows_mut::<3>(3 * j).copy_from(&cc);
    }
    let mut betas = Vec4::zeros();
    for (k, v) in frame.basis.iter().enumerate().take(4) {
        betas[k] = v.dot(&x0);
    }
    betas
}
