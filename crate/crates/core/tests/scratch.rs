use parapnp::sim::*;
use parapnp::solver::SolverKind;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.is_empty() {
        return f64::NAN;
    }
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[test]
fn probe_criterion_1_noise_free_exactness() {
    use parapnp::solver::{solve, SolveOptions};
    use parapnp::epnp::ControlPointMode;
    let solvers = [
        SolverKind::Dlt,
        SolverKind::Epnp,
        SolverKind::EpnpGn,
        SolverKind::Parallel,
        SolverKind::ParallelWeight,
    ];
    let mut worst_rot = 0.0f64;
    let mut worst_trans = 0.0f64;
    for (target, n) in [(TargetKind::Biprism { l: 50.0 }, 6usize), (TargetKind::RandomCloud, 10)] {
        let cfg = SceneConfig { target_kind: target, n_points: n, seed: 1234, ..SceneConfig::default() };
        let opts = match target {
            TargetKind::Biprism { l } => SolveOptions {
                control_mode: ControlPointMode::Explicit(biprism_target(l).unwrap().control),
                origin_index: None,
            },
            _ => SolveOptions::default(),
        };
        for trial in 0..250 {
            let (corr, truth) = generate_scene(&cfg, trial).unwrap();
            for kind in solvers {
                let report = solve(kind, &corr, &cfg.intrinsics, &opts)
                    .unwrap_or_else(|e| panic!("{kind} failed on trial {trial}: {e}"));
                let rot = rotation_error_deg(&truth.rotation, &report.pose.rotation);
                let trans = (report.pose.translation - truth.translation).norm()
                    / truth.translation.norm();
                if rot > 1e-6 || trans > 1e-8 {
                    println!(
                        "BAD: {kind} target {target:?} trial {trial} rot {rot:.3e} trans {trans:.3e} rms {:.3e} iters {}",
                        report.reprojection_rms, report.gn_iterations
                    );
                }
                if rot > worst_rot {
                    worst_rot = rot;
                }
                if trans > worst_trans {
                    worst_trans = trans;
                }
            }
        }
    }
    println!("criterion1 probe: worst rot {worst_rot:.3e} deg, worst rel trans {worst_trans:.3e}");
}

#[test]
fn probe_criterion_6_near_field() {
    let mut cfg = ExperimentConfig::new(Protocol::DepthRatio, 20260809);
    cfg.grid = Some(vec![50.0, 100.0, 150.0, 200.0]);
    cfg.trials = Some(200);
    cfg.solvers = vec![SolverKind::Parallel, SolverKind::ParallelWeight];
    let result = run_experiment(&cfg).unwrap();
    for depth in [50.0, 100.0, 150.0, 200.0] {
        let p = result.median_rot_error(depth, SolverKind::Parallel).unwrap();
        let pw = result.median_rot_error(depth, SolverKind::ParallelWeight).unwrap();
        let nfail = result
            .rows
            .iter()
            .filter(|r| r.sweep_value == depth && r.trial_index >= 0 && !matches!(r.status, TrialStatus::Ok))
            .count();
        println!("depth {depth}: parallel {p:.5} vs weight {pw:.5}  (pw<=p: {})  failures {nfail}", pw <= p);
    }
}

#[test]
fn probe_criterion_7_off_axis() {
    let mut cfg = ExperimentConfig::new(Protocol::OffAxis, 20260809);
    cfg.grid = Some(vec![476.0]);
    cfg.trials = Some(100);
    cfg.solvers = vec![SolverKind::Parallel, SolverKind::ParallelWeight];
    let result = run_experiment(&cfg).unwrap();
    let p = result.median_rot_error(476.0, SolverKind::Parallel).unwrap();
    let pw = result.median_rot_error(476.0, SolverKind::ParallelWeight).unwrap();
    println!("off-axis 476: parallel {p:.5} vs weight {pw:.5}, ratio {:.3}", pw / p);
}

#[test]
fn probe_criterion_8_ordering() {
    use parapnp::solver::{solve, SolveOptions};
    use parapnp::epnp::ControlPointMode;
    use parapnp::Vec3;
    let cfg = SceneConfig {
        target_kind: TargetKind::Biprism { l: 50.0 },
        noise_sigma: 2.0,
        origin_min: Vec3::new(0.0, 0.0, 800.0),
        origin_max: Vec3::new(0.0, 0.0, 800.0),
        seed: 808,
        ..SceneConfig::default()
    };
    let opts = SolveOptions {
        control_mode: ControlPointMode::Explicit(biprism_target(50.0).unwrap().control),
        origin_index: None,
    };
    let solvers = [SolverKind::Dlt, SolverKind::Epnp, SolverKind::EpnpGn, SolverKind::ParallelWeight];
    let mut errs: Vec<Vec<f64>> = vec![Vec::new(); 4];
    for trial in 0..200 {
        let (corr, truth) = generate_scene(&cfg, trial).unwrap();
        for (slot, kind) in solvers.iter().enumerate() {
            if let Ok(report) = solve(*kind, &corr, &cfg.intrinsics, &opts) {
                errs[slot].push(rotation_error_deg(&truth.rotation, &report.pose.rotation));
            }
        }
    }
    let m: Vec<f64> = errs.into_iter().map(median).collect();
    println!(
        "criterion8: dlt {:.4} epnp {:.4} epnp-gn {:.4} pw {:.4} | pw<=gn {} gn<=epnp {} pw<=dlt {}",
        m[0], m[1], m[2], m[3], m[3] <= m[2], m[2] <= m[1], m[3] <= m[0]
    );
}

#[test]
fn probe_criterion_5_noise_monotonicity() {
    let mut cfg = ExperimentConfig::new(Protocol::Noise, 55);
    cfg.grid = Some((0..=10).map(|k| 0.5 * k as f64).collect());
    cfg.trials = Some(100);
    let result = run_experiment(&cfg).unwrap();
    for kind in [
        SolverKind::Dlt,
        SolverKind::Epnp,
        SolverKind::EpnpGn,
        SolverKind::Parallel,
        SolverKind::ParallelWeight,
    ] {
        let meds: Vec<f64> = (0..=10)
            .map(|k| result.median_rot_error(0.5 * k as f64, kind).unwrap())
            .collect();
        let mut inversions = 0;
        for i in 1..meds.len() {
            if meds[i] < meds[i - 1] {
                inversions += 1;
            }
        }
        println!("{kind}: inversions {inversions} meds {:?}", meds.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
    }
}

#[test]
fn probe_criterion_9_timing() {
    let mut cfg = ExperimentConfig::new(Protocol::Timing, 99);
    cfg.trials = Some(100);
    cfg.solvers = vec![SolverKind::Epnp, SolverKind::ParallelWeight];
    let t0 = std::time::Instant::now();
    let result = run_experiment(&cfg).unwrap();
    println!("timing protocol wall time: {:.1}s", t0.elapsed().as_secs_f64());
    for kind in [SolverKind::Epnp, SolverKind::ParallelWeight] {
        let pts: Vec<(f64, f64)> = (1..=26)
            .map(|k| {
                let n = (4 * k) as f64;
                (n, result.mean_solve_time(n, kind).unwrap())
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let a = (sy - b * sx) / n;
        let mean_y = sy / n;
        let ss_res: f64 = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
        let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        let t8 = pts.iter().find(|p| p.0 == 8.0).unwrap().1;
        let t104 = pts.iter().find(|p| p.0 == 104.0).unwrap().1;
        println!("{kind}: r2 {r2:.4} t8 {t8:.2e} t104 {t104:.2e} ratio {:.1}", t104 / t8);
    }
}

#[test]
fn dissect_trial_181() {
    use parapnp::epnp::*;
    use parapnp::paraperspective::*;
    use parapnp::sim::*;
    let cfg = SceneConfig { target_kind: TargetKind::RandomCloud, n_points: 10, seed: 1234, ..SceneConfig::default() };
    let (corr, truth) = generate_scene(&cfg, 181).unwrap();
    println!("truth t = {:?}", truth.translation);
    let frame = ControlFrame::build(&corr, &cfg.intrinsics, &ControlPointMode::CentroidPca).unwrap();
    let oi = default_origin_index(&corr);
    println!("origin index {oi} world {:?}", corr.items()[oi].world);
    let fit = fit_paraperspective(&corr, &cfg.intrinsics, oi).unwrap();
    println!("fit tz {} pose rot err {}", fit.tz, rotation_error_deg(&truth.rotation, &fit.pose.rotation));
    let betas0 = init_betas(&fit, &frame);
    println!("betas0 {:?}", betas0);
    let gn = gauss_newton_refine(&betas0, &frame.basis, &frame.control_world, None).unwrap();
    println!("gn initial {} final {} iters {}", gn.initial_objective, gn.final_objective, gn.iterations);
    println!("gn betas {:?}", gn.betas);
    let (pose, rms) = recover_pose(&gn.betas, &frame.basis, &frame, &corr, &cfg.intrinsics).unwrap();
    println!("recover rms {rms} rot err {}", rotation_error_deg(&truth.rotation, &pose.rotation));
    // what does the closed form say?
    let cf = solve_betas_closed_form(&frame, &corr, &cfg.intrinsics).unwrap();
    println!("closed form betas {:?}", cf);
    let (pose_cf, rms_cf) = recover_pose(&cf, &frame.basis, &frame, &corr, &cfg.intrinsics).unwrap();
    println!("cf rms {rms_cf} rot err {}", rotation_error_deg(&truth.rotation, &pose_cf.rotation));
}

#[test]
fn dissect_dlt_74() {
    use parapnp::baselines::solve_dlt;
    use parapnp::sim::*;
    let cfg = SceneConfig { target_kind: TargetKind::RandomCloud, n_points: 10, seed: 1234, ..SceneConfig::default() };
    let (corr, truth) = generate_scene(&cfg, 74).unwrap();
    let report = solve_dlt(&corr, &cfg.intrinsics).unwrap();
    println!("R diff max {:.3e}", (report.pose.rotation - truth.rotation).abs().max());
    println!("t est {:?}", report.pose.translation);
    println!("t tru {:?}", truth.translation);
    println!("t diff {:?}", report.pose.translation - truth.translation);
    println!("rms {:.3e}", report.reprojection_rms);
    // World point spread
    let worlds = corr.world_points();
    let maxw = worlds.iter().map(|w| w.norm()).fold(0.0, f64::max);
    println!("max world norm {maxw:.1}");
    let minz = worlds.iter().map(|w| truth.transform(w).z).fold(f64::INFINITY, f64::min);
    println!("min depth {minz:.1}");
}

#[test]
fn dissect_dlt_tsolve() {
    use nalgebra::{DMatrix, DVector, SVD};
    use parapnp::geometry::normalize_pixel;
    use parapnp::sim::*;
    let cfg = SceneConfig { target_kind: TargetKind::RandomCloud, n_points: 10, seed: 1234, ..SceneConfig::default() };
    let (corr, truth) = generate_scene(&cfg, 74).unwrap();
    let rotation = truth.rotation;
    let n = corr.len();
    let mut lhs = DMatrix::<f64>::zeros(2 * n, 3);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for (i, c) in corr.items().iter().enumerate() {
        let rw = rotation * c.world;
        let p = normalize_pixel(&cfg.intrinsics, &c.pixel);
        lhs[(2 * i, 0)] = 1.0;
        lhs[(2 * i, 2)] = -p.x;
        rhs[2 * i] = p.x * rw.z - rw.x;
        lhs[(2 * i + 1, 1)] = 1.0;
        lhs[(2 * i + 1, 2)] = -p.y;
        rhs[2 * i + 1] = p.y * rw.z - rw.y;
    }
    let svd = SVD::new(lhs.clone(), true, true);
    println!("singular values {:?}", svd.singular_values.as_slice());
    let t = svd.solve(&rhs, 1e-12).unwrap();
    println!("t svd {:?}", t.as_slice());
    println!("t tru {:?}", truth.translation.as_slice());
    let r1 = (&lhs * &t - &rhs).norm();
    let tt = DVector::from_column_slice(truth.translation.as_slice());
    let r2 = (&lhs * &tt - &rhs).norm();
    println!("residual at svd t {r1:.3e}, at true t {r2:.3e}");
    // normal equations solve
    let ata = lhs.transpose() * &lhs;
    let atb = lhs.transpose() * &rhs;
    let t_ne = ata.lu().solve(&atb).unwrap();
    println!("t ne  {:?}", t_ne.as_slice());
}

#[test]
fn dissect_nalgebra_svd() {
    use nalgebra::{DMatrix, SVD};
    use parapnp::geometry::normalize_pixel;
    use parapnp::sim::*;
    let cfg = SceneConfig { target_kind: TargetKind::RandomCloud, n_points: 10, seed: 1234, ..SceneConfig::default() };
    let (corr, _) = generate_scene(&cfg, 74).unwrap();
    let n = corr.len();
    let mut lhs = DMatrix::<f64>::zeros(2 * n, 3);
    for (i, c) in corr.items().iter().enumerate() {
        let p = normalize_pixel(&cfg.intrinsics, &c.pixel);
        lhs[(2 * i, 0)] = 1.0;
        lhs[(2 * i, 2)] = -p.x;
        lhs[(2 * i + 1, 1)] = 1.0;
        lhs[(2 * i + 1, 2)] = -p.y;
    }
    let svd = SVD::new(lhs.clone(), true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let sigma = DMatrix::from_diagonal(&svd.singular_values);
    let recon = u * &sigma * vt;
    println!("factorization residual {:.3e}", (&lhs - &recon).abs().max());
    println!("u orth residual {:.3e}", (u.transpose() * u - DMatrix::identity(3, 3)).abs().max());
    println!("v orth residual {:.3e}", (vt * vt.transpose() - DMatrix::identity(3, 3)).abs().max());
}

#[test]
fn dissect_off_axis_weights() {
    use parapnp::epnp::*;
    use parapnp::error_transfer::gn_weights;
    use parapnp::paraperspective::*;
    use parapnp::sim::*;
    use parapnp::Vec3;
    let cfg = SceneConfig {
        target_kind: TargetKind::Biprism { l: 50.0 },
        noise_sigma: 0.2,
        intrinsics: parapnp::geometry::CameraIntrinsics::new(80.0, 80.0, 653.0, 508.0).unwrap(),
        origin_min: Vec3::new(0.0, 476.0, 100.0),
        origin_max: Vec3::new(0.0, 476.0, 100.0),
        seed: 777,
        ..SceneConfig::default()
    };
    let opts_control = biprism_target(50.0).unwrap().control;
    let mut diffs = Vec::new();
    for trial in 0..20 {
        let (corr, truth) = generate_scene(&cfg, trial).unwrap();
        let frame = ControlFrame::build(&corr, &cfg.intrinsics, &ControlPointMode::Explicit(opts_control)).unwrap();
        let oi = default_origin_index(&corr);
        let fit = fit_paraperspective(&corr, &cfg.intrinsics, oi).unwrap();
        let w = gn_weights(&frame, &fit.pose);
        if trial < 3 {
            println!("trial {trial}: weights {:?}", w.map(|v| (v * 1000.0).round() / 1000.0));
            println!("  fit pose err {:.3}", rotation_error_deg(&truth.rotation, &fit.pose.rotation));
        }
        let p = solve_parallel(&corr, &cfg.intrinsics, false, &ControlPointMode::Explicit(opts_control), oi).unwrap();
        let pw = solve_parallel(&corr, &cfg.intrinsics, true, &ControlPointMode::Explicit(opts_control), oi).unwrap();
        let dp = rotation_error_deg(&p.pose.rotation, &pw.pose.rotation);
        let ep = rotation_error_deg(&truth.rotation, &p.pose.rotation);
        let epw = rotation_error_deg(&truth.rotation, &pw.pose.rotation);
        diffs.push((dp, ep, epw, p.initializer, pw.initializer, p.gn_iterations, pw.gn_iterations));
    }
    for (i, d) in diffs.iter().enumerate() {
        println!("trial {i}: p-vs-pw {:.4} err_p {:.4} err_pw {:.4} init {:?}/{:?} iters {}/{}", d.0, d.1, d.2, d.3, d.4, d.5, d.6);
    }
}

#[test]
fn probe_criterion_9_median_timing() {
    let mut cfg = ExperimentConfig::new(Protocol::Timing, 99);
    cfg.trials = Some(100);
    cfg.solvers = vec![SolverKind::Epnp, SolverKind::ParallelWeight];
    let result = run_experiment(&cfg).unwrap();
    for kind in [SolverKind::Epnp, SolverKind::ParallelWeight] {
        let pts: Vec<(f64, f64)> = (1..=26)
            .map(|k| {
                let n = (4 * k) as f64;
                let med = result
                    .rows
                    .iter()
                    .find(|r| {
                        r.trial_index == -1
                            && r.sweep_value == n
                            && r.solver_name == kind.label()
                            && r.status == TrialStatus::AggregateMedian
                    })
                    .unwrap()
                    .solve_time_s;
                (n, med)
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let a = (sy - b * sx) / n;
        let mean_y = sy / n;
        let ss_res: f64 = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
        let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
        println!("median-based {kind}: r2 {:.4} t8 {:.2e} t104 {:.2e}", 1.0 - ss_res / ss_tot,
            pts.iter().find(|p| p.0 == 8.0).unwrap().1, pts.iter().find(|p| p.0 == 104.0).unwrap().1);
    }
}

#[test]
fn characterize_c6_c7_across_seeds() {
    for seed in [1u64, 7, 42, 20260809] {
        let mut cfg = ExperimentConfig::new(Protocol::DepthRatio, seed);
        cfg.grid = Some(vec![50.0, 100.0, 150.0, 200.0]);
        cfg.trials = Some(200);
        cfg.solvers = vec![SolverKind::Parallel, SolverKind::ParallelWeight];
        let result = run_experiment(&cfg).unwrap();
        let wins: Vec<bool> = [50.0, 100.0, 150.0, 200.0]
            .iter()
            .map(|&d| {
                result.median_rot_error(d, SolverKind::ParallelWeight).unwrap()
                    <= result.median_rot_error(d, SolverKind::Parallel).unwrap()
            })
            .collect();
        let mut cfg7 = ExperimentConfig::new(Protocol::OffAxis, seed);
        cfg7.grid = Some(vec![476.0]);
        cfg7.trials = Some(100);
        cfg7.solvers = vec![SolverKind::Parallel, SolverKind::ParallelWeight];
        let r7 = run_experiment(&cfg7).unwrap();
        let ratio = r7.median_rot_error(476.0, SolverKind::ParallelWeight).unwrap()
            / r7.median_rot_error(476.0, SolverKind::Parallel).unwrap();
        println!("seed {seed}: C6 cells pw<=p {:?}, C7 ratio {ratio:.3}", wins);
    }
}
