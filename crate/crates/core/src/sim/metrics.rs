//! Pose error metrics and relative-motion sequence evaluation.

use super::BenchError;
use crate::geometry::RigidPose;
use crate::solver::SolveReport;
use crate::{Mat3, Vec3};

/// Rotation error in degrees: the largest angle between corresponding
/// columns of the two rotation matrices.
///
/// The angle is evaluated as `atan2(|a x b|, a . b)`, which equals
/// `acos(a . b)` for unit vectors but stays fully accurate near zero where
/// the arc cosine loses half the floating-point digits.
pub fn rotation_error_deg(r_true: &Mat3, r_est: &Mat3) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let a: Vec3 = r_true.column(k).into();
        let b: Vec3 = r_est.column(k).into();
        let angle = a.cross(&b).norm().atan2(a.dot(&b));
        worst = worst.max(angle.to_degrees());
    }
    worst
}

/// Relative translation error in percent: `100 |t_true - t_est| / |t_true|`.
pub fn translation_error_pct(t_true: &Vec3, t_est: &Vec3) -> Result<f64, BenchError> {
    let norm = t_true.norm();
    if norm <= 0.0 {
        return Err(BenchError::ZeroTranslation);
    }
    Ok(100.0 * (t_true - t_est).norm() / norm)
}

/// Row status in experiment output.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    Error(String),
    AggregateMean,
    AggregateMedian,
}

impl TrialStatus {
    pub fn as_csv(&self) -> String {
        match self {
            TrialStatus::Ok => "ok".into(),
            TrialStatus::Error(msg) => {
                let sanitized: String = msg
                    .chars()
                    .map(|c| if c == ',' || c == '\n' || c == '\r' { ';' } else { c })
                    .collect();
                format!("error:{sanitized}")
            }
            TrialStatus::AggregateMean => "aggregate_mean".into(),
            TrialStatus::AggregateMedian => "aggregate_median".into(),
        }
    }
}

/// One scored solve (or aggregate) in an experiment sweep.
#[derive(Debug, Clone)]
pub struct TrialResult {
    pub solver_name: String,
    pub rot_error_deg: f64,
    pub trans_error_pct: f64,
    pub solve_time_s: f64,
    /// Trial number; -1 marks aggregate rows.
    pub trial_index: i64,
    pub sweep_value: f64,
    pub status: TrialStatus,
}

/// Scores a sequence of pose estimates against known per-step relative
/// motions. Step `i` compares the estimated relative rotation
/// `R_{i-1}^T R_i` and estimated movement `t_i - t_{i-1}` with the true
/// relative pose `true_relative[i-1]`.
pub fn evaluate_sequence(
    reports: &[SolveReport],
    true_relative: &[RigidPose],
    solver_name: &str,
) -> Result<Vec<TrialResult>, BenchError> {
    if reports.len() != true_relative.len() + 1 {
        return Err(BenchError::LengthMismatch {
            left: reports.len(),
            right: true_relative.len(),
        });
    }
    let mut out = Vec::with_capacity(true_relative.len());
    for (i, rel_true) in true_relative.iter().enumerate() {
        let prev = &reports[i].pose;
        let curr = &reports[i + 1].pose;
        let rel_est = prev.rotation.transpose() * curr.rotation;
        let rot = rotation_error_deg(&rel_true.rotation, &rel_est);
        let move_est = curr.translation - prev.translation;
        let move_true = rel_true.translation;
        let trans = if move_true.norm() <= 1e-12 {
            if move_est.norm() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            100.0 * (move_true - move_est).norm() / move_true.norm()
        };
        out.push(TrialResult {
            solver_name: solver_name.to_string(),
            rot_error_deg: rot,
            trans_error_pct: trans,
            solve_time_s: 0.0,
            trial_index: (i + 1) as i64,
            sweep_value: (i + 1) as f64,
            status: TrialStatus::Ok,
        });
    }
    Ok(out)
}
