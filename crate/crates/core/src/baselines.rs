//! Reference solvers for comparison sweeps: a known-intrinsics DLT and a
//! weak-perspective (scaled orthographic) fit.

use nalgebra::{DMatrix, Matrix3x4, SVD};

use crate::geometry::{
    nearest_rotation, normalize_pixel, CameraIntrinsics, CorrespondenceSet, RigidPose,
};
use crate::paraperspective::fit_linear_directions;
use crate::solver::{Initializer, SolveError, SolveReport};
use crate::{Mat3, Vec3};

fn reprojection_rms(corr: &CorrespondenceSet, intr: &CameraIntrinsics, pose: &RigidPose) -> f64 {
    let mut sum = 0.0;
    for c in corr.items() {
        let cam = pose.transform(&c.world);
        if cam.z == 0.0 {
            return f64::INFINITY;
        }
        let du = intr.u0 + intr.fx * cam.x / cam.z - c.pixel.x;
        let dv = intr.v0 + intr.fy * cam.y / cam.z - c.pixel.y;
        sum += du * du + dv * dv;
    }
    (sum / corr.len() as f64).sqrt()
}

/// Direct linear transform for `[R|t]` with known intrinsics.
///
/// Solves the homogeneous 2n x 12 system in intrinsics-normalized image
/// coordinates (world points are centered and scaled internally for
/// conditioning), fixes sign by positive mean depth and scale by the
/// geometric mean of the rotation row norms, projects onto a rotation, and
/// re-solves the translation linearly for the fixed rotation.
pub fn solve_dlt(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
) -> Result<SolveReport, SolveError> {
    let n = corr.len();
    if n < 6 {
        return Err(SolveError::InsufficientPoints { needed: 6, got: n });
    }

    let world = corr.world_points();
    let centroid: Vec3 = world.iter().sum::<Vec3>() / n as f64;
    let mean_dist =
        world.iter().map(|w| (w - centroid).norm()).sum::<f64>() / n as f64;
    if mean_dist <= 0.0 {
        return Err(SolveError::DegenerateConfiguration("coincident world points".into()));
    }
    let scale = 3.0_f64.sqrt() / mean_dist;

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    let mut norm_px = Vec::with_capacity(n);
    for (i, c) in corr.items().iter().enumerate() {
        let w = (c.world - centroid) * scale;
        let p = normalize_pixel(intr, &c.pixel);
        norm_px.push(p);
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[(r0, 0)] = w.x;
        a[(r0, 1)] = w.y;
        a[(r0, 2)] = w.z;
        a[(r0, 3)] = 1.0;
        a[(r0, 8)] = -p.x * w.x;
        a[(r0, 9)] = -p.x * w.y;
        a[(r0, 10)] = -p.x * w.z;
        a[(r0, 11)] = -p.x;
        a[(r1, 4)] = w.x;
        a[(r1, 5)] = w.y;
        a[(r1, 6)] = w.z;
        a[(r1, 7)] = 1.0;
        a[(r1, 8)] = -p.y * w.x;
        a[(r1, 9)] = -p.y * w.y;
        a[(r1, 10)] = -p.y * w.z;
        a[(r1, 11)] = -p.y;
    }

    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.as_ref().expect("SVD with v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap()
    });
    let s_max = svd.singular_values[order[order.len() - 1]];
    // A second near-zero singular value means the configuration does not
    // determine the projection (e.g. coplanar points).
    if s_max <= 0.0 || svd.singular_values[order[1]] <= 1e-9 * s_max {
        return Err(SolveError::DegenerateConfiguration(
            "point configuration does not determine a unique projection".into(),
        ));
    }
    let p_vec = v_t.row(order[0]);

    let mut p = Matrix3x4::<f64>::zeros();
    for r in 0..3 {
        for c in 0..4 {
            p[(r, c)] = p_vec[4 * r + c];
        }
    }
    // Undo the world normalization: X_norm = scale * (X - centroid).
    let m_part = p.fixed_view::<3, 3>(0, 0).into_owned() * scale;
    let t_part: Vec3 = p.column(3).into_owned() - m_part * centroid;

    // Sign from mean depth, scale from the rotation row norms.
    let mut depth = 0.0;
    for w in &world {
        depth += (m_part.row(2) * w)[0] + t_part.z;
    }
    let sign = if depth < 0.0 { -1.0 } else { 1.0 };
    let row_norms =
        [m_part.row(0).norm(), m_part.row(1).norm(), m_part.row(2).norm()];
    let gm = (row_norms[0] * row_norms[1] * row_norms[2]).powf(1.0 / 3.0);
    if !(gm > 0.0) {
        return Err(SolveError::DegenerateConfiguration("zero rotation block".into()));
    }
    let m_scaled = m_part * (sign / gm);
    let rotation = nearest_rotation(&m_scaled).map_err(SolveError::Geometry)?;

    // Re-solve t for the projected rotation: for each point,
    // u (r3.X + tz) = r1.X + tx and likewise for v. The stacked rows are
    // (1, 0, -u) and (0, 1, -v); accumulate the 3x3 normal equations.
    let mut ata = Mat3::zeros();
    let mut atb = Vec3::zeros();
    for (i, c) in corr.items().iter().enumerate() {
        let rw = rotation * c.world;
        let p = norm_px[i];
        let rows = [Vec3::new(1.0, 0.0, -p.x), Vec3::new(0.0, 1.0, -p.y)];
        let vals = [p.x * rw.z - rw.x, p.y * rw.z - rw.y];
        for (row, val) in rows.iter().zip(vals) {
            ata += row * row.transpose();
            atb += row * val;
        }
    }
    let translation = ata.lu().solve(&atb).ok_or_else(|| {
        SolveError::NumericalFailure("singular normal equations for the translation".into())
    })?;

    let pose = RigidPose::new(rotation, translation).map_err(SolveError::Geometry)?;
    Ok(SolveReport {
        reprojection_rms: reprojection_rms(corr, intr, &pose),
        pose,
        gn_iterations: 0,
        initializer: Initializer::Dlt,
        weighted: false,
    })
}

/// Weak-perspective (scaled orthographic) pose fit.
///
/// All points share the reference depth: the image offsets from the origin
/// observation are modeled as `(i . Q) / tz, (j . Q) / tz` with `Q` the world
/// offset from the reference point.
pub fn solve_weak_perspective(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    origin_index: usize,
) -> Result<SolveReport, SolveError> {
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

    let mut rows = Vec::with_capacity(n);
    let mut bx = Vec::with_capacity(n);
    let mut by = Vec::with_capacity(n);
    for c in items {
        let norm = normalize_pixel(intr, &c.pixel);
        rows.push(c.world - origin_world);
        bx.push(norm.x - origin_norm.x);
        by.push(norm.y - origin_norm.y);
    }
    let (iw, jw) = fit_linear_directions(&rows, &bx, &by)?;
    let iw_norm = iw.norm();
    let jw_norm = jw.norm();
    if iw_norm <= f64::MIN_POSITIVE.sqrt() || jw_norm <= f64::MIN_POSITIVE.sqrt() {
        return Err(SolveError::DegenerateConfiguration(
            "projection directions collapsed to zero".into(),
        ));
    }
    let tz = 0.5 * (1.0 / iw_norm + 1.0 / jw_norm);
    let i = iw * tz;
    let j = jw * tz;
    let k = i.cross(&j);
    let raw = Mat3::new(i.x, i.y, i.z, j.x, j.y, j.z, k.x, k.y, k.z);
    let rotation = nearest_rotation(&raw).map_err(SolveError::Geometry)?;
    let t_shifted = Vec3::new(origin_norm.x * tz, origin_norm.y * tz, tz);
    let translation = t_shifted - rotation * origin_world;
    let pose = RigidPose::new(rotation, translation).map_err(SolveError::Geometry)?;
    Ok(SolveReport {
        reprojection_rms: reprojection_rms(corr, intr, &pose),
        pose,
        gn_iterations: 0,
        initializer: Initializer::WeakPerspective,
        weighted: false,
    })
}
