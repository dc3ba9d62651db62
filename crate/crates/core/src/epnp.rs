//! EPnP control-point machinery: barycentric coordinates, the 2n x 12 linear
//! system, null-space extraction, beta estimation, Gauss-Newton refinement
//! (optionally weighted), and pose recovery.
//!
//! This module hosts both the classic EPnP(+GN) pipeline and the
//! parallel-perspective-initialized variant.

use nalgebra::{DMatrix, SMatrix, SVector, SVD};

use crate::error_transfer::gn_weights;
use crate::geometry::{
    absolute_orientation, CameraIntrinsics, CorrespondenceSet, GeometryError, RigidPose,
};
use crate::paraperspective::{fit_paraperspective, init_betas};
use crate::solver::{Initializer, SolveError, SolveReport};
use crate::{Vec3, Vec4};

/// Stacked camera-frame control points: (C1x, C1y, C1z, ..., C4z).
pub type Vector12 = SVector<f64, 12>;

/// Control-point pairs (i < j), in the order used for distances and weights.
pub const CONTROL_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// How the four virtual control points are chosen.
#[derive(Debug, Clone, Default)]
pub enum ControlPointMode {
    /// World centroid plus principal axes scaled by per-axis standard deviation.
    #[default]
    CentroidPca,
    /// Caller-supplied non-coplanar points, used verbatim.
    Explicit([Vec3; 4]),
}

/// Whether the Gauss-Newton objective uses error-transfer weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    None,
    ErrorTransfer,
}

/// Control points, barycentric coefficients, and the null-space basis of one
/// correspondence set.
#[derive(Debug, Clone)]
pub struct ControlFrame {
    pub control_world: [Vec3; 4],
    /// Per-point barycentric coefficients; each row sums to 1.
    pub alphas: Vec<[f64; 4]>,
    /// Orthonormal 12-vectors ordered by ascending singular value of M.
    pub basis: Vec<Vector12>,
    /// Mixing coefficients of the basis, filled in by the solve pipelines.
    pub betas: Vec4,
}

impl ControlFrame {
    /// Builds the frame for a correspondence set: control points, barycentric
    /// coordinates, and a 4-vector null-space basis.
    pub fn build(
        corr: &CorrespondenceSet,
        intr: &CameraIntrinsics,
        mode: &ControlPointMode,
    ) -> Result<Self, SolveError> {
        let world = corr.world_points();
        let control_world = choose_control_points(&world, mode)?;
        let alphas = world
            .iter()
            .map(|w| barycentric_coords(w, &control_world))
            .collect::<Result<Vec<_>, _>>()?;
        let m = build_m(corr, &alphas, intr);
        let basis = null_space_basis(&m, 4);
        Ok(Self { control_world, alphas, basis, betas: Vec4::zeros() })
    }
}

/// Chooses four non-coplanar control points for a world point set.
pub fn choose_control_points(
    world: &[Vec3],
    mode: &ControlPointMode,
) -> Result<[Vec3; 4], SolveError> {
    match mode {
        ControlPointMode::Explicit(points) => {
            if tetrahedron_volume(points) <= 0.0 {
                return Err(SolveError::DegenerateConfiguration(
                    "explicit control points are coplanar".into(),
                ));
            }
            Ok(*points)
        }
        ControlPointMode::CentroidPca => {
            if world.len() < 4 {
                return Err(SolveError::InsufficientPoints { needed: 4, got: world.len() });
            }
            let n = world.len() as f64;
            let centroid: Vec3 = world.iter().sum::<Vec3>() / n;
            let mut cov = crate::Mat3::zeros();
            for w in world {
                let d = w - centroid;
                cov += d * d.transpose();
            }
            cov /= n;
            let eig = nalgebra::SymmetricEigen::new(cov);
            // Per-axis standard deviations; reject (near-)coplanar sets.
            let mut stddev = [0.0f64; 3];
            for i in 0..3 {
                stddev[i] = eig.eigenvalues[i].max(0.0).sqrt();
            }
            let max_dev = stddev.iter().cloned().fold(0.0, f64::max);
            let min_dev = stddev.iter().cloned().fold(f64::INFINITY, f64::min);
            if max_dev <= 0.0 || min_dev < 1e-9 * max_dev {
                return Err(SolveError::DegenerateConfiguration(
                    "world points are coplanar: smallest principal axis is degenerate".into(),
                ));
            }
            let mut control = [centroid; 4];
            for i in 0..3 {
                let axis: Vec3 = eig.eigenvectors.column(i).into();
                control[i + 1] = centroid + axis * stddev[i];
            }
            Ok(control)
        }
    }
}

fn tetrahedron_volume(points: &[Vec3; 4]) -> f64 {
    let a = points[0] - points[3];
    let b = points[1] - points[3];
    let c = points[2] - points[3];
    a.cross(&b).dot(&c).abs() / 6.0
}

/// Barycentric coordinates of a world point with respect to four control
/// points: `sum(alpha) = 1` and `sum(alpha_j * C_j) = world`.
pub fn barycentric_coords(world: &Vec3, control: &[Vec3; 4]) -> Result<[f64; 4], SolveError> {
    let mut a = nalgebra::Matrix4::<f64>::zeros();
    for j in 0..4 {
        a[(0, j)] = control[j].x;
        a[(1, j)] = control[j].y;
        a[(2, j)] = control[j].z;
        a[(3, j)] = 1.0;
    }
    let rhs = Vec4::new(world.x, world.y, world.z, 1.0);
    let lu = a.lu();
    let alpha = lu
        .solve(&rhs)
        .ok_or_else(|| SolveError::DegenerateConfiguration("control points are coplanar".into()))?;
    // LU succeeds on nearly-singular systems; verify the reconstruction.
    let scale = control.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let recon: Vec3 = (0..4).map(|j| control[j] * alpha[j]).sum();
    if (recon - world).norm() > 1e-6 * scale.max(world.norm()) {
        return Err(SolveError::DegenerateConfiguration("control points are coplanar".into()));
    }
    Ok([alpha[0], alpha[1], alpha[2], alpha[3]])
}

/// Assembles the 2n x 12 EPnP coefficient matrix.
///
/// Row 2i:   alpha_ij * fx in the x-slots, alpha_ij * (u0 - u_i) in the z-slots.
/// Row 2i+1: alpha_ij * fy in the y-slots, alpha_ij * (v0 - v_i) in the z-slots.
pub fn build_m(
    corr: &CorrespondenceSet,
    alphas: &[[f64; 4]],
    intr: &CameraIntrinsics,
) -> DMatrix<f64> {
    let n = corr.len();
    debug_assert_eq!(alphas.len(), n);
    let mut m = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (c, alpha)) in corr.items().iter().zip(alphas).enumerate() {
        for (j, &a) in alpha.iter().enumerate() {
            let col = 3 * j;
            m[(2 * i, col)] = a * intr.fx;
            m[(2 * i, col + 2)] = a * (intr.u0 - c.pixel.x);
            m[(2 * i + 1, col + 1)] = a * intr.fy;
            m[(2 * i + 1, col + 2)] = a * (intr.v0 - c.pixel.y);
        }
    }
    m
}

/// Returns `count` right-singular vectors of M with the smallest singular
/// values, orthonormal and ordered by ascending singular value.
pub fn null_space_basis(m: &DMatrix<f64>, count: usize) -> Vec<Vector12> {
    assert!(count <= 4, "EPnP uses at most 4 null-space directions");
    let svd = SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("SVD of a finite matrix yields V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap()
    });
    order
        .into_iter()
        .take(count)
        .map(|idx| {
            let row = v_t.row(idx);
            Vector12::from_fn(|k, _| row[k])
        })
        .collect()
}

fn control_points_from(x: &Vector12) -> [Vec3; 4] {
    [
        x.fixed_rows::<3>(0).into(),
        x.fixed_rows::<3>(3).into(),
        x.fixed_rows::<3>(6).into(),
        x.fixed_rows::<3>(9).into(),
    ]
}

fn combine(betas: &Vec4, basis: &[Vector12]) -> Vector12 {
    let mut x = Vector12::zeros();
    for (k, v) in basis.iter().enumerate().take(4) {
        x += v * betas[k];
    }
    x
}

/// Mean camera-frame depth of the feature points reconstructed from `betas`.
fn mean_depth(betas: &Vec4, frame: &ControlFrame) -> f64 {
    let x = combine(betas, &frame.basis);
    let control = control_points_from(&x);
    let mut total = 0.0;
    for alpha in &frame.alphas {
        let mut z = 0.0;
        for (j, &a) in alpha.iter().enumerate() {
            z += a * control[j].z;
        }
        total += z;
    }
    total / frame.alphas.len() as f64
}

/// Flips the sign of `betas` if the reconstructed points have negative mean
/// depth. Returns the corrected betas and the (positive) mean depth.
fn fix_cheirality(betas: Vec4, frame: &ControlFrame) -> (Vec4, f64) {
    let depth = mean_depth(&betas, frame);
    if depth < 0.0 {
        (-betas, -depth)
    } else {
        (betas, depth)
    }
}

/// RMS pixel reprojection residual; uses the algebraic pinhole map so that a
/// degenerate pose yields a large finite (or infinite) value instead of an
/// error.
fn reprojection_rms(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    pose: &RigidPose,
) -> f64 {
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

/// Raw closed-form beta candidates for the N = 1 and N = 2 cases, before
/// cheirality correction.
fn closed_form_candidates(frame: &ControlFrame) -> Vec<Vec4> {
    let d: [f64; 6] = CONTROL_PAIRS
        .map(|(i, j)| (frame.control_world[i] - frame.control_world[j]).norm());

    let mut candidates: Vec<Vec4> = Vec::with_capacity(2);

    // N = 1: x = beta * v1; distances are linear in |beta|.
    {
        let v1 = &frame.basis[0];
        let mut num = 0.0;
        let mut den = 0.0;
        for (p, (i, j)) in CONTROL_PAIRS.iter().enumerate() {
            let dv = (v1.fixed_rows::<3>(3 * i) - v1.fixed_rows::<3>(3 * j)).norm();
            num += dv * d[p];
            den += dv * dv;
        }
        if den > 0.0 {
            candidates.push(Vec4::new(num / den, 0.0, 0.0, 0.0));
        }
    }

    // N = 2: linearize over (beta1^2, beta1*beta2, beta2^2).
    if frame.basis.len() >= 2 {
        let v1 = &frame.basis[0];
        let v2 = &frame.basis[1];
        let mut l = SMatrix::<f64, 6, 3>::zeros();
        let mut rhs = SVector::<f64, 6>::zeros();
        for (p, (i, j)) in CONTROL_PAIRS.iter().enumerate() {
            let d1: Vec3 = (v1.fixed_rows::<3>(3 * i) - v1.fixed_rows::<3>(3 * j)).into();
            let d2: Vec3 = (v2.fixed_rows::<3>(3 * i) - v2.fixed_rows::<3>(3 * j)).into();
            l[(p, 0)] = d1.norm_squared();
            l[(p, 1)] = 2.0 * d1.dot(&d2);
            l[(p, 2)] = d2.norm_squared();
            rhs[p] = d[p] * d[p];
        }
        let lt = l.transpose();
        if let Some(sol) = (lt * l).lu().solve(&(lt * rhs)) {
            let beta1 = sol[0].abs().sqrt();
            let beta2 = sol[2].abs().sqrt() * if sol[1] < 0.0 { -1.0 } else { 1.0 };
            candidates.push(Vec4::new(beta1, beta2, 0.0, 0.0));
        }
    }
    candidates
}

/// Closed-form beta estimation: the N = 1 and N = 2 case analysis over the
/// six inter-control-point distance constraints. The candidate with the lower
/// reprojection error wins; the global sign is fixed so reconstructed points
/// have positive mean depth.
pub fn solve_betas_closed_form(
    frame: &ControlFrame,
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
) -> Result<Vec4, SolveError> {
    assert!(!frame.basis.is_empty(), "need at least one basis vector");
    let mut best: Option<(f64, Vec4)> = None;
    let mut last_error: Option<SolveError> = None;
    for cand in closed_form_candidates(frame) {
        let (betas, depth) = fix_cheirality(cand, frame);
        if depth <= 0.0 {
            last_error = Some(SolveError::Cheirality);
            continue;
        }
        match recover_pose(&betas, &frame.basis, frame, corr, intr) {
            Ok((_, rms)) => {
                if best.as_ref().is_none_or(|(b, _)| rms < *b) {
                    best = Some((rms, betas));
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    match best {
        Some((_, betas)) => Ok(betas),
        None => Err(last_error.unwrap_or(SolveError::Cheirality)),
    }
}

/// Signed volume of the control tetrahedron spanned by points 1..3 about
/// point 4.
fn control_orientation(points: &[Vec3; 4]) -> f64 {
    let a = points[0] - points[3];
    let b = points[1] - points[3];
    let c = points[2] - points[3];
    a.cross(&b).dot(&c)
}

/// The inter-distance objective cannot tell a configuration from its mirror
/// image, and a reflected control tetrahedron is unreachable by any rigid
/// pose. Detects that failure mode for a refined solution.
fn is_mirrored(betas: &Vec4, frame: &ControlFrame) -> bool {
    let x = combine(betas, &frame.basis);
    let cam = control_points_from(&x);
    control_orientation(&cam) * control_orientation(&frame.control_world) < 0.0
}

struct RefinedCandidate {
    betas: Vec4,
    pose: RigidPose,
    rms: f64,
    iterations: usize,
    mirrored: bool,
}

/// Refines one starting point (optionally) and recovers its pose.
fn refine_candidate(
    start: &Vec4,
    frame: &ControlFrame,
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    weights: Option<&[f64; 6]>,
    refine: bool,
) -> Result<RefinedCandidate, SolveError> {
    let (betas, iterations) = if refine {
        let gn = gauss_newton_refine(start, &frame.basis, &frame.control_world, weights)?;
        (gn.betas, gn.iterations)
    } else {
        (*start, 0)
    };
    let (betas, _) = fix_cheirality(betas, frame);
    let (pose, rms) = recover_pose(&betas, &frame.basis, frame, corr, intr)?;
    Ok(RefinedCandidate { mirrored: is_mirrored(&betas, frame), betas, pose, rms, iterations })
}

/// Refines every starting point and keeps the best result: non-mirrored
/// beats mirrored, then lower reprojection error wins. Returns the winning
/// start's index alongside the candidate.
fn best_refined(
    starts: &[Vec4],
    frame: &ControlFrame,
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    weights: Option<&[f64; 6]>,
    refine: bool,
) -> Result<(usize, RefinedCandidate), SolveError> {
    let mut best: Option<(usize, RefinedCandidate)> = None;
    let mut last_error: Option<SolveError> = None;
    for (idx, start) in starts.iter().enumerate() {
        match refine_candidate(start, frame, corr, intr, weights, refine) {
            Ok(cand) => {
                let better = match &best {
                    Some((_, b)) => {
                        (!cand.mirrored && b.mirrored)
                            || (cand.mirrored == b.mirrored && cand.rms < b.rms)
                    }
                    None => true,
                };
                if better {
                    best = Some((idx, cand));
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    best.ok_or_else(|| last_error.unwrap_or(SolveError::Cheirality))
}

/// Outcome of the Gauss-Newton refinement.
#[derive(Debug, Clone)]
pub struct GnOutcome {
    pub betas: Vec4,
    /// Accepted steps.
    pub iterations: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
}

const GN_MAX_ITERATIONS: usize = 15;
const GN_RELATIVE_DECREASE: f64 = 1e-12;

/// Refines `betas0` by minimizing the (optionally weighted) squared
/// difference between inter-control-point distances in the camera and world
/// frames.
///
/// Steps are only accepted when they decrease the objective, so the returned
/// objective never exceeds the initial one.
pub fn gauss_newton_refine(
    betas0: &Vec4,
    basis: &[Vector12],
    control_world: &[Vec3; 4],
    weights: Option<&[f64; 6]>,
) -> Result<GnOutcome, SolveError> {
    let k = basis.len().min(4);
    let d2: [f64; 6] =
        CONTROL_PAIRS.map(|(i, j)| (control_world[i] - control_world[j]).norm_squared());
    let w: [f64; 6] = match weights {
        Some(w) => *w,
        None => [1.0; 6],
    };
    // Per-pair, per-direction difference vectors of the basis.
    let mut deltas = [[Vec3::zeros(); 4]; 6];
    for (p, (i, j)) in CONTROL_PAIRS.iter().enumerate() {
        for (m, v) in basis.iter().enumerate().take(k) {
            deltas[p][m] = (v.fixed_rows::<3>(3 * i) - v.fixed_rows::<3>(3 * j)).into();
        }
    }

    let objective = |betas: &Vec4| -> f64 {
        let mut obj = 0.0;
        for p in 0..6 {
            let mut s = Vec3::zeros();
            for m in 0..k {
                s += deltas[p][m] * betas[m];
            }
            let r = s.norm_squared() - d2[p];
            obj += w[p] * r * r;
        }
        obj
    };

    let mut betas = *betas0;
    let initial = objective(&betas);
    if !initial.is_finite() {
        return Err(SolveError::NumericalFailure(
            "non-finite Gauss-Newton objective; degenerate basis".into(),
        ));
    }
    let mut current = initial;
    let mut iterations = 0;

    // Below this the residuals are double-precision noise in the squared
    // distances; iterating further only chases rounding. Weighted so the
    // stopping point is invariant to a uniform weight scale.
    let objective_floor =
        1e-20 * d2.iter().zip(&w).map(|(v, wp)| wp * v * v).sum::<f64>();

    while iterations < GN_MAX_ITERATIONS && current > objective_floor {
        // Residuals r_p = sqrt(w_p) (|s_p|^2 - d2_p); Jacobian 2 sqrt(w_p) s_p . delta.
        let mut jtj = nalgebra::Matrix4::<f64>::zeros();
        let mut jtr = Vec4::zeros();
        for p in 0..6 {
            let mut s = Vec3::zeros();
            for m in 0..k {
                s += deltas[p][m] * betas[m];
            }
            let r = s.norm_squared() - d2[p];
            let mut grad = Vec4::zeros();
            for m in 0..k {
                grad[m] = 2.0 * s.dot(&deltas[p][m]);
            }
            for a in 0..k {
                for b in 0..k {
                    jtj[(a, b)] += w[p] * grad[a] * grad[b];
                }
            }
            jtr += grad * (w[p] * r);
        }
        for m in k..4 {
            jtj[(m, m)] = 1.0;
        }
        let Some(step) = jtj.lu().solve(&(-jtr)) else {
            break;
        };
        if !step.iter().all(|v| v.is_finite()) {
            break;
        }

        // Backtrack on non-improving steps.
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..8 {
            let trial = betas + step * scale;
            let obj = objective(&trial);
            if obj.is_finite() && obj < current {
                accepted = Some((trial, obj));
                break;
            }
            scale *= 0.5;
        }
        let Some((trial, obj)) = accepted else {
            break;
        };
        let decrease = current - obj;
        betas = trial;
        current = obj;
        iterations += 1;
        if decrease <= GN_RELATIVE_DECREASE * current.max(f64::MIN_POSITIVE) {
            break;
        }
    }

    Ok(GnOutcome { betas, iterations, initial_objective: initial, final_objective: current })
}

/// Rebuilds the camera-frame control and feature points from `betas` and
/// solves the absolute-orientation problem for the pose. Returns the pose and
/// its RMS pixel reprojection residual.
pub fn recover_pose(
    betas: &Vec4,
    basis: &[Vector12],
    frame: &ControlFrame,
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
) -> Result<(RigidPose, f64), SolveError> {
    if !betas.iter().all(|b| b.is_finite()) {
        return Err(SolveError::NumericalFailure("non-finite betas".into()));
    }
    let x = combine(betas, basis);
    let control = control_points_from(&x);
    let camera: Vec<Vec3> = frame
        .alphas
        .iter()
        .map(|alpha| {
            let mut p = Vec3::zeros();
            for (j, &a) in alpha.iter().enumerate() {
                p += control[j] * a;
            }
            p
        })
        .collect();
    let world = corr.world_points();
    let pose = absolute_orientation(&world, &camera).map_err(|e| match e {
        GeometryError::RankDeficient(_) => SolveError::DegenerateConfiguration(
            "reconstructed control points are rank-deficient".into(),
        ),
        other => SolveError::Geometry(other),
    })?;
    let rms = reprojection_rms(corr, intr, &pose);
    Ok((pose, rms))
}

/// Full EPnP pipeline with centroid-PCA control points.
pub fn solve_epnp(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    refine: bool,
    weighting: Weighting,
) -> Result<SolveReport, SolveError> {
    solve_epnp_with(corr, intr, refine, weighting, &ControlPointMode::CentroidPca)
}

/// Full EPnP pipeline with an explicit control-point choice.
pub fn solve_epnp_with(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    refine: bool,
    weighting: Weighting,
    control_mode: &ControlPointMode,
) -> Result<SolveReport, SolveError> {
    if corr.len() < 4 {
        return Err(SolveError::InsufficientPoints { needed: 4, got: corr.len() });
    }
    let mut frame = ControlFrame::build(corr, intr, control_mode)?;
    let betas_cf = solve_betas_closed_form(&frame, corr, intr)?;
    if !refine {
        frame.betas = betas_cf;
        let (pose, rms) = recover_pose(&betas_cf, &frame.basis, &frame, corr, intr)?;
        return Ok(SolveReport {
            pose,
            reprojection_rms: rms,
            gn_iterations: 0,
            initializer: Initializer::EpnpClosedForm,
            weighted: false,
        });
    }
    let weights = match weighting {
        Weighting::None => None,
        Weighting::ErrorTransfer => {
            // Weights need a coarse pose; use the pre-refinement closed form.
            let (coarse, _) = recover_pose(&betas_cf, &frame.basis, &frame, corr, intr)?;
            Some(gn_weights(&frame, &coarse))
        }
    };
    let chosen = refine_candidate(&betas_cf, &frame, corr, intr, weights.as_ref(), true)?;
    frame.betas = chosen.betas;
    Ok(SolveReport {
        pose: chosen.pose,
        reprojection_rms: chosen.rms,
        gn_iterations: chosen.iterations,
        initializer: Initializer::EpnpClosedForm,
        weighted: weighting == Weighting::ErrorTransfer,
    })
}

/// Parallel-perspective-initialized solver: the paraperspective pose seeds
/// the betas, which are then refined by (optionally weighted) Gauss-Newton.
pub fn solve_parallel(
    corr: &CorrespondenceSet,
    intr: &CameraIntrinsics,
    weighted: bool,
    control_mode: &ControlPointMode,
    origin_index: usize,
) -> Result<SolveReport, SolveError> {
    if corr.len() < 4 {
        return Err(SolveError::InsufficientPoints { needed: 4, got: corr.len() });
    }
    let mut frame = ControlFrame::build(corr, intr, control_mode)?;
    let fit = fit_paraperspective(corr, intr, origin_index)?;
    let betas0 = init_betas(&fit, &frame);
    let (betas0, _) = fix_cheirality(betas0, &frame);
    let weights = weighted.then(|| gn_weights(&frame, &fit.pose));
    // The closed-form betas back up the paraperspective start: in extreme
    // proximity the refinement can land on a mirrored configuration or a
    // local minimum, which the reprojection comparison rejects.
    let mut starts = vec![betas0];
    for cand in closed_form_candidates(&frame) {
        let (fixed, depth) = fix_cheirality(cand, &frame);
        if depth > 0.0 {
            starts.push(fixed);
        }
    }
    let (winner, chosen) = best_refined(&starts, &frame, corr, intr, weights.as_ref(), true)?;
    frame.betas = chosen.betas;
    Ok(SolveReport {
        pose: chosen.pose,
        reprojection_rms: chosen.rms,
        gn_iterations: chosen.iterations,
        initializer: if winner == 0 {
            Initializer::Paraperspective
        } else {
            Initializer::EpnpClosedForm
        },
        weighted,
    })
}
