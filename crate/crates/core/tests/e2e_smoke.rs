use wrenchfit::models::{ModelKind, ParamVector};
use wrenchfit::pipeline::{run_inference, PipelineConfig};
use wrenchfit::synth::{generate, Motion, NoiseSpec, SynthSpec};

#[test]
fn planar_relaxed_end_to_end() {
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
    let out = generate(&spec).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.fit.irls_iterations = 8;
    cfg.fit.restarts = 1;
    let t0 = std::time::Instant::now();
    let report = run_inference(&out.demo, &cfg, true, 0).unwrap();
    eprintln!("inference took {:?}", t0.elapsed());
    assert_eq!(report.segments.len(), 1);
    let seg = &report.segments[0];
    eprintln!("chosen: {:?}", seg.chosen);
    for (k, m) in &seg.models {
        eprintln!("{k}: ce={} lik={:.3} k_err={:.4e}", m.ce, m.likelihood, m.k_error);
    }
    assert_eq!(seg.chosen, Some(ModelKind::PlanarRelaxed));
}
