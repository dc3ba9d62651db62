//! Deterministic synthetic scene generation: the biprism marker, random
//! clouds, pose sampling, and pixel noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{mix_seed, BenchError};
use crate::geometry::{
    euler_zxz_to_rotation, project, CameraIntrinsics, Correspondence, CorrespondenceSet, RigidPose,
};
use crate::{Mat3, Vec2, Vec3};

/// Points closer than this to the camera plane count as behind the camera.
const MIN_DEPTH_MM: f64 = 1e-6;
const MAX_POSE_ATTEMPTS: usize = 100;

/// The intrinsics used as the global default for synthetic experiments.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(1301.473508, 1300.926193, 653.0, 508.0)
        .expect("static intrinsics are valid")
}

/// What the synthetic target looks like.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetKind {
    /// Points sampled uniformly in the camera-frame box and back-transformed.
    RandomCloud,
    /// The six-vertex biprism marker with vertex distance `l` (mm).
    Biprism { l: f64 },
}

/// The biprism marker: six vertices at distance `l` from the centroid along
/// the coordinate axes, plus the four control points used by the EPnP family.
#[derive(Debug, Clone)]
pub struct BiprismTarget {
    pub vertices: Vec<Vec3>,
    pub control: [Vec3; 4],
}

/// Builds the biprism marker. The vertex order pairs each axis point with its
/// opposite: z+, x+, z-, x-, y+, y-.
pub fn biprism_target(l: f64) -> Result<BiprismTarget, BenchError> {
    if !(l > 0.0) {
        return Err(BenchError::Config(format!("biprism size must be positive, got {l}")));
    }
    Ok(BiprismTarget {
        vertices: vec![
            Vec3::new(0.0, 0.0, l),
            Vec3::new(l, 0.0, 0.0),
            Vec3::new(0.0, 0.0, -l),
            Vec3::new(-l, 0.0, 0.0),
            Vec3::new(0.0, l, 0.0),
            Vec3::new(0.0, -l, 0.0),
        ],
        control: [
            Vec3::new(l, 0.0, 0.0),
            Vec3::new(0.0, l, 0.0),
            Vec3::new(0.0, 0.0, l),
            Vec3::new(0.0, 0.0, 0.0),
        ],
    })
}

/// Configuration of one synthetic scene family.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    /// Number of cloud points (ignored for the biprism, which has 6).
    pub n_points: usize,
    /// Camera-frame sampling box for cloud points, mm.
    pub box_min: Vec3,
    pub box_max: Vec3,
    pub target_kind: TargetKind,
    /// Sampling ranges for the ZXZ Euler angles, degrees.
    pub euler_ranges: [(f64, f64); 3],
    /// When set, the ground-truth rotation is fixed instead of sampled.
    pub fixed_rotation: Option<Mat3>,
    /// Sampling region for the target origin (the translation), mm.
    pub origin_min: Vec3,
    pub origin_max: Vec3,
    pub intrinsics: CameraIntrinsics,
    /// Standard deviation of the pixel noise.
    pub noise_sigma: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let box_min = Vec3::new(-500.0, -500.0, 500.0);
        let box_max = Vec3::new(500.0, 500.0, 1500.0);
        Self {
            n_points: 10,
            box_min,
            box_max,
            target_kind: TargetKind::RandomCloud,
            euler_ranges: [(-180.0, 180.0), (0.0, 180.0), (-180.0, 180.0)],
            fixed_rotation: None,
            origin_min: box_min,
            origin_max: box_max,
            intrinsics: default_intrinsics(),
            noise_sigma: 0.0,
            trials: 1,
            seed: 0,
        }
    }
}

impl SceneConfig {
    fn validate(&self) -> Result<(), BenchError> {
        for k in 0..3 {
            if !(self.box_max[k] >= self.box_min[k]) || !(self.origin_max[k] >= self.origin_min[k])
            {
                return Err(BenchError::Config("box bounds are inverted".into()));
            }
        }
        if matches!(self.target_kind, TargetKind::RandomCloud) {
            if self.n_points == 0 {
                return Err(BenchError::Config("cloud needs at least one point".into()));
            }
            if !(self.box_min.z > 0.0) {
                return Err(BenchError::Config(
                    "cloud sampling box must lie strictly in front of the camera".into(),
                ));
            }
            if !(self.box_max.x > self.box_min.x
                && self.box_max.y > self.box_min.y
                && self.box_max.z > self.box_min.z)
            {
                return Err(BenchError::Config("cloud box must have positive extent".into()));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(BenchError::Config("noise sigma must be non-negative".into()));
        }
        Ok(())
    }

    /// Largest edge of the cloud sampling box; the size used for
    /// depth-to-size ratios of cloud targets.
    pub fn box_size(&self) -> f64 {
        (self.box_max - self.box_min).amax()
    }
}

fn sample_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        lo + rng.random::<f64>() * (hi - lo)
    } else {
        lo
    }
}

fn sample_pose(cfg: &SceneConfig, rng: &mut impl Rng) -> RigidPose {
    let rotation = match cfg.fixed_rotation {
        Some(r) => r,
        None => {
            let a = sample_in(rng, cfg.euler_ranges[0].0, cfg.euler_ranges[0].1);
            let b = sample_in(rng, cfg.euler_ranges[1].0, cfg.euler_ranges[1].1);
            let t = sample_in(rng, cfg.euler_ranges[2].0, cfg.euler_ranges[2].1);
            euler_zxz_to_rotation(a, b, t)
        }
    };
    let translation = Vec3::new(
        sample_in(rng, cfg.origin_min.x, cfg.origin_max.x),
        sample_in(rng, cfg.origin_min.y, cfg.origin_max.y),
        sample_in(rng, cfg.origin_min.z, cfg.origin_max.z),
    );
    RigidPose { rotation, translation }
}

/// Adds independent zero-mean Gaussian noise to each pixel coordinate.
/// `sigma = 0` leaves the input bit-identical and consumes no randomness.
pub fn add_noise(pixels: &mut [Vec2], sigma: f64, rng: &mut impl Rng) {
    assert!(sigma >= 0.0, "noise sigma must be non-negative");
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("finite positive sigma");
    for p in pixels {
        p.x += normal.sample(rng);
        p.y += normal.sample(rng);
    }
}

/// Generates one scene: samples the ground-truth pose, places the target,
/// projects it, and applies pixel noise. The generator is derived from
/// `(cfg.seed, trial)`, so identical inputs reproduce the scene bit for bit.
pub fn generate_scene(
    cfg: &SceneConfig,
    trial: u64,
) -> Result<(CorrespondenceSet, RigidPose), BenchError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(&[cfg.seed, trial]));

    let (world, pose) = match cfg.target_kind {
        TargetKind::Biprism { l } => {
            let target = biprism_target(l)?;
            let mut found = None;
            for _ in 0..MAX_POSE_ATTEMPTS {
                let pose = sample_pose(cfg, &mut rng);
                if target.vertices.iter().all(|v| pose.transform(v).z > MIN_DEPTH_MM) {
                    found = Some(pose);
                    break;
                }
            }
            let pose =
                found.ok_or(BenchError::PlacementFailed { attempts: MAX_POSE_ATTEMPTS })?;
            (target.vertices, pose)
        }
        TargetKind::RandomCloud => {
            let pose = sample_pose(cfg, &mut rng);
            let inv = pose.rotation.transpose();
            let world = (0..cfg.n_points)
                .map(|_| {
                    let cam = Vec3::new(
                        sample_in(&mut rng, cfg.box_min.x, cfg.box_max.x),
                        sample_in(&mut rng, cfg.box_min.y, cfg.box_max.y),
                        sample_in(&mut rng, cfg.box_min.z, cfg.box_max.z),
                    );
                    inv * (cam - pose.translation)
                })
                .collect();
            (world, pose)
        }
    };

    let mut pixels: Vec<Vec2> = world
        .iter()
        .map(|w| project(&cfg.intrinsics, &pose, w))
        .collect::<Result<_, _>>()?;
    add_noise(&mut pixels, cfg.noise_sigma, &mut rng);

    let items = world
        .into_iter()
        .zip(pixels)
        .map(|(w, p)| Correspondence::new(w, p))
        .collect();
    Ok((CorrespondenceSet::new(items)?, pose))
}
