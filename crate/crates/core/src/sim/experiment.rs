//! The experiment protocols: deterministic sweeps producing per-trial and
//! aggregate CSV rows plus a metadata sidecar.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use super::metrics::{rotation_error_deg, translation_error_pct, TrialResult, TrialStatus};
use super::scene::{
    biprism_target, default_intrinsics, generate_scene, SceneConfig, TargetKind,
};
use super::{mix_seed, BenchError};
use crate::epnp::ControlPointMode;
use crate::geometry::CameraIntrinsics;
use crate::solver::{solve, SolveOptions, SolverKind};
use crate::{Mat3, Vec3};

/// The benchmark protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Accuracy vs number of feature points (4..20).
    FeatureCount,
    /// Accuracy vs pixel noise level (0..10 px, step 0.5).
    Noise,
    /// Solve time vs number of feature points (4..104, step 4).
    Timing,
    /// Accuracy vs camera depth (near and far sweeps merged).
    DepthRatio,
    /// Accuracy vs lateral offset of the target origin from the optical axis.
    OffAxis,
    /// Accuracy vs target rotation about the camera Y axis (-90..90 degrees).
    Angle,
}

impl Protocol {
    pub const ALL: [Protocol; 6] = [
        Protocol::FeatureCount,
        Protocol::Noise,
        Protocol::Timing,
        Protocol::DepthRatio,
        Protocol::OffAxis,
        Protocol::Angle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::FeatureCount => "feature_count",
            Protocol::Noise => "noise",
            Protocol::Timing => "timing",
            Protocol::DepthRatio => "depth_ratio",
            Protocol::OffAxis => "off_axis",
            Protocol::Angle => "angle",
        }
    }

    pub fn from_name(s: &str) -> Option<Protocol> {
        Self::ALL.iter().copied().find(|p| p.name() == s)
    }

    fn id(&self) -> u64 {
        match self {
            Protocol::FeatureCount => 1,
            Protocol::Noise => 2,
            Protocol::Timing => 3,
            Protocol::DepthRatio => 4,
            Protocol::OffAxis => 5,
            Protocol::Angle => 6,
        }
    }

    fn default_grid(&self) -> Vec<f64> {
        match self {
            Protocol::FeatureCount => (4..=20).map(f64::from).collect(),
            Protocol::Noise => (0..=20).map(|k| 0.5 * f64::from(k)).collect(),
            Protocol::Timing => (1..=26).map(|k| f64::from(4 * k)).collect(),
            Protocol::DepthRatio => {
                let mut grid: Vec<f64> = (0..=5).map(|k| f64::from(100 * k)).collect();
                grid.extend((0..=20).map(|k| f64::from(500 * k)));
                grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
                grid.dedup();
                grid
            }
            Protocol::OffAxis => (0..20).map(|k| f64::from(1 + 25 * k)).collect(),
            Protocol::Angle => (-90..=90).map(f64::from).collect(),
        }
    }

    fn default_trials(&self) -> usize {
        match self {
            Protocol::FeatureCount => 200,
            Protocol::Noise | Protocol::Timing => 500,
            Protocol::DepthRatio | Protocol::OffAxis | Protocol::Angle => 100,
        }
    }

    fn default_sigma(&self) -> f64 {
        0.2
    }

    fn default_target(&self) -> TargetKind {
        match self {
            Protocol::FeatureCount | Protocol::Noise | Protocol::Timing => TargetKind::RandomCloud,
            _ => TargetKind::Biprism { l: 50.0 },
        }
    }

    fn default_intrinsics(&self) -> CameraIntrinsics {
        // Each protocol carries its own focal setting; the principal point is
        // shared across all of them.
        match self {
            Protocol::FeatureCount | Protocol::Noise | Protocol::OffAxis => {
                CameraIntrinsics::new(80.0, 80.0, 653.0, 508.0).expect("static intrinsics")
            }
            Protocol::DepthRatio | Protocol::Angle => {
                CameraIntrinsics::new(500.0, 500.0, 653.0, 508.0).expect("static intrinsics")
            }
            Protocol::Timing => default_intrinsics(),
        }
    }
}

/// An experiment request: a protocol plus optional overrides.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub seed: u64,
    pub solvers: Vec<SolverKind>,
    pub trials: Option<usize>,
    pub grid: Option<Vec<f64>>,
    pub noise_sigma: Option<f64>,
    pub n_points: Option<usize>,
    pub target: Option<TargetKind>,
    pub intrinsics: Option<CameraIntrinsics>,
    /// Camera depth of the target origin for the off-axis protocol, mm.
    pub off_axis_depth_mm: f64,
}

impl ExperimentConfig {
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        Self {
            protocol,
            seed,
            solvers: vec![
                SolverKind::Dlt,
                SolverKind::Epnp,
                SolverKind::EpnpGn,
                SolverKind::Parallel,
                SolverKind::ParallelWeight,
            ],
            trials: None,
            grid: None,
            noise_sigma: None,
            n_points: None,
            target: None,
            intrinsics: None,
            off_axis_depth_mm: 100.0,
        }
    }
}

/// All rows of a finished sweep plus the sidecar metadata.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<TrialResult>,
    pub metadata: Vec<(String, String)>,
}

fn fmt_full(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub const CSV_HEADER: &str =
    "protocol,sweep_value,trial,solver,rot_error_deg,trans_error_pct,solve_time_s,status";

impl ExperimentResult {
    fn protocol_name(&self) -> String {
        self.metadata
            .iter()
            .find(|(k, _)| k == "protocol")
            .map(|(_, v)| v.clone())
            .unwrap_or_default()
    }

    /// Serializes all rows as CSV, header included.
    pub fn to_csv_string(&self) -> String {
        let name = self.protocol_name();
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                name,
                r.sweep_value,
                r.trial_index,
                r.solver_name,
                fmt_full(r.rot_error_deg),
                fmt_full(r.trans_error_pct),
                fmt_full(r.solve_time_s),
                r.status.as_csv(),
            ));
        }
        out
    }

    fn aggregate(&self, sweep: f64, solver: &str, status: &TrialStatus) -> Option<&TrialResult> {
        self.rows.iter().find(|r| {
            r.trial_index == -1
                && r.sweep_value == sweep
                && r.solver_name == solver
                && r.status == *status
        })
    }

    /// Median rotation error of the successful trials in one cell.
    pub fn median_rot_error(&self, sweep: f64, solver: SolverKind) -> Option<f64> {
        self.aggregate(sweep, solver.label(), &TrialStatus::AggregateMedian)
            .map(|r| r.rot_error_deg)
    }

    /// Mean solve time of the successful trials in one cell.
    pub fn mean_solve_time(&self, sweep: f64, solver: SolverKind) -> Option<f64> {
        self.aggregate(sweep, solver.label(), &TrialStatus::AggregateMean)
            .map(|r| r.solve_time_s)
    }
}

/// Writes the CSV file and its `.meta` sidecar (same path with the extension
/// replaced by `meta`).
pub fn write_csv(result: &ExperimentResult, path: &Path) -> Result<(), BenchError> {
    std::fs::write(path, result.to_csv_string())?;
    let mut meta = String::new();
    for (k, v) in &result.metadata {
        meta.push_str(&format!("{k}={v}\n"));
    }
    std::fs::write(path.with_extension("meta"), meta)?;
    Ok(())
}

struct ResolvedExperiment {
    protocol: Protocol,
    seed: u64,
    solvers: Vec<SolverKind>,
    trials: usize,
    grid: Vec<f64>,
    /// Explicit sigma override; the noise protocol sweeps sigma otherwise.
    sigma_override: Option<f64>,
    n_points: Option<usize>,
    target: TargetKind,
    intrinsics: CameraIntrinsics,
    off_axis_depth_mm: f64,
}

fn rotation_about_y(angle_deg: f64) -> Mat3 {
    let (s, c) = angle_deg.to_radians().sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

impl ResolvedExperiment {
    fn from(cfg: &ExperimentConfig) -> Result<Self, BenchError> {
        if cfg.solvers.is_empty() {
            return Err(BenchError::Config("experiment needs at least one solver".into()));
        }
        let grid = cfg.grid.clone().unwrap_or_else(|| cfg.protocol.default_grid());
        if grid.is_empty() {
            return Err(BenchError::Config("sweep grid is empty".into()));
        }
        let trials = cfg.trials.unwrap_or_else(|| cfg.protocol.default_trials());
        if trials == 0 {
            return Err(BenchError::Config("need at least one trial per cell".into()));
        }
        Ok(Self {
            protocol: cfg.protocol,
            seed: cfg.seed,
            solvers: cfg.solvers.clone(),
            trials,
            grid,
            sigma_override: cfg.noise_sigma,
            n_points: cfg.n_points,
            target: cfg.target.unwrap_or_else(|| cfg.protocol.default_target()),
            intrinsics: cfg.intrinsics.unwrap_or_else(|| cfg.protocol.default_intrinsics()),
            off_axis_depth_mm: cfg.off_axis_depth_mm,
        })
    }

    /// Scene family for one sweep cell. The cell seed isolates every cell's
    /// generator from its neighbors.
    fn cell_config(&self, sweep_idx: usize, value: f64) -> SceneConfig {
        let mut sc = SceneConfig {
            target_kind: self.target,
            intrinsics: self.intrinsics,
            noise_sigma: self.cell_sigma(value),
            trials: self.trials,
            seed: mix_seed(&[self.seed, self.protocol.id(), sweep_idx as u64]),
            n_points: self.n_points.unwrap_or(10),
            ..SceneConfig::default()
        };
        match self.protocol {
            Protocol::FeatureCount | Protocol::Timing => {
                sc.n_points = self.n_points.unwrap_or(value as usize);
                if self.protocol == Protocol::Timing {
                    sc.box_min = Vec3::new(-100.0, -100.0, 300.0);
                    sc.box_max = Vec3::new(100.0, 100.0, 700.0);
                    sc.origin_min = sc.box_min;
                    sc.origin_max = sc.box_max;
                }
            }
            Protocol::Noise => {}
            Protocol::DepthRatio => {
                let depth = value;
                sc.origin_min = Vec3::new(0.0, 0.0, depth);
                sc.origin_max = sc.origin_min;
                if matches!(self.target, TargetKind::RandomCloud) {
                    sc.box_min = Vec3::new(-250.0, -250.0, depth.max(1e-3));
                    sc.box_max = Vec3::new(250.0, 250.0, depth + 500.0);
                }
            }
            Protocol::OffAxis => {
                sc.origin_min = Vec3::new(0.0, value, self.off_axis_depth_mm);
                sc.origin_max = sc.origin_min;
            }
            Protocol::Angle => {
                sc.origin_min = Vec3::new(0.0, 0.0, 500.0);
                sc.origin_max = sc.origin_min;
                sc.fixed_rotation = Some(rotation_about_y(value));
            }
        }
        sc
    }

    /// The noise protocol sweeps sigma itself unless explicitly overridden.
    fn cell_sigma(&self, sweep_value: f64) -> f64 {
        match self.sigma_override {
            Some(s) => s,
            None if self.protocol == Protocol::Noise => sweep_value,
            None => self.protocol.default_sigma(),
        }
    }
}

fn solve_options_for(target: &TargetKind) -> SolveOptions {
    match target {
        TargetKind::Biprism { l } => SolveOptions {
            control_mode: ControlPointMode::Explicit(
                biprism_target(*l).expect("positive biprism size").control,
            ),
            origin_index: None,
        },
        TargetKind::RandomCloud => SolveOptions::default(),
    }
}

fn run_one_trial(
    sc: &SceneConfig,
    opts: &SolveOptions,
    solvers: &[SolverKind],
    value: f64,
    trial: usize,
) -> Vec<TrialResult> {
    let mut rows = Vec::with_capacity(solvers.len());
    let scene = generate_scene(sc, trial as u64);
    match scene {
        Err(e) => {
            let msg = e.to_string();
            for solver in solvers {
                rows.push(TrialResult {
                    solver_name: solver.label().to_string(),
                    rot_error_deg: f64::NAN,
                    trans_error_pct: f64::NAN,
                    solve_time_s: f64::NAN,
                    trial_index: trial as i64,
                    sweep_value: value,
                    status: TrialStatus::Error(msg.clone()),
                });
            }
        }
        Ok((corr, truth)) => {
            for solver in solvers {
                let start = Instant::now();
                let outcome = solve(*solver, &corr, &sc.intrinsics, opts);
                let dt = start.elapsed().as_secs_f64();
                let row = match outcome {
                    Ok(report) => {
                        let rot = rotation_error_deg(&truth.rotation, &report.pose.rotation);
                        match translation_error_pct(
                            &truth.translation,
                            &report.pose.translation,
                        ) {
                            Ok(trans) => TrialResult {
                                solver_name: solver.label().to_string(),
                                rot_error_deg: rot,
                                trans_error_pct: trans,
                                solve_time_s: dt,
                                trial_index: trial as i64,
                                sweep_value: value,
                                status: TrialStatus::Ok,
                            },
                            Err(e) => TrialResult {
                                solver_name: solver.label().to_string(),
                                rot_error_deg: rot,
                                trans_error_pct: f64::NAN,
                                solve_time_s: dt,
                                trial_index: trial as i64,
                                sweep_value: value,
                                status: TrialStatus::Error(e.to_string()),
                            },
                        }
                    }
                    Err(e) => TrialResult {
                        solver_name: solver.label().to_string(),
                        rot_error_deg: f64::NAN,
                        trans_error_pct: f64::NAN,
                        solve_time_s: dt,
                        trial_index: trial as i64,
                        sweep_value: value,
                        status: TrialStatus::Error(e.to_string()),
                    },
                };
                rows.push(row);
            }
        }
    }
    rows
}

fn median_of(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn aggregate_rows(cell_rows: &[TrialResult], solvers: &[SolverKind], value: f64) -> Vec<TrialResult> {
    let mut out = Vec::with_capacity(2 * solvers.len());
    for solver in solvers {
        let ok: Vec<&TrialResult> = cell_rows
            .iter()
            .filter(|r| r.solver_name == solver.label() && r.status == TrialStatus::Ok)
            .collect();
        let mut rots: Vec<f64> = ok.iter().map(|r| r.rot_error_deg).collect();
        let mut trans: Vec<f64> = ok.iter().map(|r| r.trans_error_pct).collect();
        let mut times: Vec<f64> = ok.iter().map(|r| r.solve_time_s).collect();
        rots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        trans.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = ok.len() as f64;
        let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / n };
        out.push(TrialResult {
            solver_name: solver.label().to_string(),
            rot_error_deg: mean(&rots),
            trans_error_pct: mean(&trans),
            solve_time_s: mean(&times),
            trial_index: -1,
            sweep_value: value,
            status: TrialStatus::AggregateMean,
        });
        out.push(TrialResult {
            solver_name: solver.label().to_string(),
            rot_error_deg: median_of(&rots),
            trans_error_pct: median_of(&trans),
            solve_time_s: median_of(&times),
            trial_index: -1,
            sweep_value: value,
            status: TrialStatus::AggregateMedian,
        });
    }
    out
}

/// Runs a full experiment sweep.
///
/// Rows are emitted in deterministic (sweep value, trial, solver) order with
/// per-cell aggregate rows (`trial = -1`) after each cell. Trials run on
/// parallel workers except for the timing protocol, which stays
/// single-threaded so measurements are not skewed by contention.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, BenchError> {
    let resolved = ResolvedExperiment::from(cfg)?;
    let mut rows = Vec::new();

    for (sweep_idx, &value) in resolved.grid.iter().enumerate() {
        let sc = resolved.cell_config(sweep_idx, value);
        let opts = solve_options_for(&sc.target_kind);
        let cell_rows: Vec<TrialResult> = if resolved.protocol == Protocol::Timing {
            // Warm up caches and allocator before trusting the clock.
            if let Ok((corr, _)) = generate_scene(&sc, 0) {
                for solver in &resolved.solvers {
                    for _ in 0..3 {
                        let _ = solve(*solver, &corr, &sc.intrinsics, &opts);
                    }
                }
            }
            (0..resolved.trials)
                .flat_map(|trial| run_one_trial(&sc, &opts, &resolved.solvers, value, trial))
                .collect()
        } else {
            (0..resolved.trials)
                .into_par_iter()
                .map(|trial| run_one_trial(&sc, &opts, &resolved.solvers, value, trial))
                .collect::<Vec<_>>()
                .into_iter()
                .flatten()
                .collect()
        };
        let aggregates = aggregate_rows(&cell_rows, &resolved.solvers, value);
        rows.extend(cell_rows);
        rows.extend(aggregates);
    }

    let grid_str = resolved
        .grid
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let solver_str = resolved
        .solvers
        .iter()
        .map(|s| s.label().to_string())
        .collect::<Vec<_>>()
        .join(",");
    let (target_str, size_str, size_def) = match resolved.target {
        TargetKind::Biprism { l } => {
            ("biprism".to_string(), l.to_string(), "depth / biprism_l".to_string())
        }
        TargetKind::RandomCloud => {
            let sc = resolved.cell_config(0, resolved.grid[0]);
            ("random_cloud".to_string(), sc.box_size().to_string(), "depth / largest_box_edge".to_string())
        }
    };
    let metadata = vec![
        ("protocol".to_string(), resolved.protocol.name().to_string()),
        ("seed".to_string(), resolved.seed.to_string()),
        ("trials".to_string(), resolved.trials.to_string()),
        ("solvers".to_string(), solver_str),
        ("grid".to_string(), grid_str),
        ("noise_model".to_string(), "gaussian_sigma_px".to_string()),
        (
            "noise_sigma".to_string(),
            match resolved.sigma_override {
                Some(s) => s.to_string(),
                None if resolved.protocol == Protocol::Noise => "sweep".to_string(),
                None => resolved.protocol.default_sigma().to_string(),
            },
        ),
        ("target".to_string(), target_str),
        ("target_size".to_string(), size_str),
        ("depth_size_definition".to_string(), size_def),
        ("intrinsics.fx".to_string(), resolved.intrinsics.fx.to_string()),
        ("intrinsics.fy".to_string(), resolved.intrinsics.fy.to_string()),
        ("intrinsics.u0".to_string(), resolved.intrinsics.u0.to_string()),
        ("intrinsics.v0".to_string(), resolved.intrinsics.v0.to_string()),
    ];
    Ok(ExperimentResult { rows, metadata })
}
