//! Synthetic scene generation, error metrics, and the Monte-Carlo experiment
//! protocols with CSV output.

mod experiment;
mod metrics;
mod scene;

pub use experiment::{
    run_experiment, write_csv, ExperimentConfig, ExperimentResult, Protocol,
};
pub use metrics::{
    evaluate_sequence, rotation_error_deg, translation_error_pct, TrialResult, TrialStatus,
};
pub use scene::{
    add_noise, biprism_target, default_intrinsics, generate_scene, BiprismTarget, SceneConfig,
    TargetKind,
};

use thiserror::Error;

/// Errors from scene generation and experiment execution.
#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("could not place the target in front of the camera after {attempts} pose samples")]
    PlacementFailed { attempts: usize },
    #[error("true translation is zero; relative translation error is undefined")]
    ZeroTranslation,
    #[error("length mismatch: {left} poses vs {right} relative steps")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// SplitMix64 finalizer; the basis of all derived seeds.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed derivation: folds each component through SplitMix64 so
/// cells and trials own independent, reproducible generators.
pub(crate) fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C909, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}
