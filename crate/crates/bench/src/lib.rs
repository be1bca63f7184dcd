//! Shared fixtures for the criterion benchmarks.

use wrenchfit::models::{ModelKind, ParamVector};
use wrenchfit::synth::{generate, Motion, NoiseSpec, SynthSpec};
use wrenchfit::Demonstration;

/// A noisy planar_relaxed sliding recording, the pipeline's bread and
/// butter: 300 samples at 120 Hz with friction.
pub fn plane_demo() -> (SynthSpec, Demonstration) {
    let spec = SynthSpec {
        kind: ModelKind::PlanarRelaxed,
        alpha_true: ParamVector::new(ModelKind::PlanarRelaxed, vec![0.15, 0.3, -0.2]).unwrap(),
        duration_s: 2.5,
        rate_hz: 120.0,
        motion: Motion::Lissajous {
            amp_x: 0.15,
            amp_y: 0.1,
            freq_x: 0.7,
            freq_y: 1.1,
            phase: 0.5,
        },
        lambda_range: [1.0, 10.0],
        mu: 0.3,
        noise: NoiseSpec::default(),
        seed: 11,
    };
    let demo = generate(&spec).unwrap().demo;
    (spec, demo)
}

/// An axial (hinge) recording: the hardest kind to fit, exercising the
/// full 11-parameter path.
pub fn hinge_demo() -> (SynthSpec, Demonstration) {
    let spec = SynthSpec {
        kind: ModelKind::Axial,
        alpha_true: ParamVector::new(
            ModelKind::Axial,
            vec![0.0, 0.0, 1.0, 0.3, 0.0, 0.0, 0.4, 0.1, 0.2, 0.1, -0.2],
        )
        .unwrap(),
        duration_s: 2.5,
        rate_hz: 120.0,
        motion: Motion::Arc {
            start_rad: 0.0,
            end_rad: 2.0,
        },
        lambda_range: [1.0, 10.0],
        mu: 0.3,
        noise: NoiseSpec::default(),
        seed: 11,
    };
    let demo = generate(&spec).unwrap().demo;
    (spec, demo)
}
