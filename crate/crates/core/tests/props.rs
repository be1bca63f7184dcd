//! Property tests over the public API: quaternion algebra, likelihood
//! normalization, combined-error monotonicity, segmentation structure,
//! file round trips, and projection idempotence.

use std::collections::BTreeMap;

use proptest::prelude::*;
use wrenchfit::io::{read_trajectory, write_trajectory};
use wrenchfit::kinematics::Demonstration;
use wrenchfit::metrics::{combined_error_from, project_to_constraint, ErrorThresholds, SampleErrors};
use wrenchfit::models::{param_len, ModelKind, ParamVector};
use wrenchfit::segmentation::{segment, SegmentationConfig};
use wrenchfit::selection::{likelihoods, select};
use wrenchfit::{Sample, UnitQuaternion, Vec3};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit_quat() -> impl Strategy<Value = UnitQuaternion> {
    vec3().prop_map(UnitQuaternion::exp)
}

proptest! {
    #[test]
    fn quat_rotation_composes(q1 in unit_quat(), q2 in unit_quat(), v in vec3()) {
        let lhs = q2.mul(q1).rotate(v);
        let rhs = q2.rotate(q1.rotate(v));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn quat_rotation_preserves_norm(q in unit_quat(), v in vec3()) {
        prop_assert!((q.rotate(v).norm() - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn quat_exp_log_round_trip(w in vec3()) {
        prop_assume!(w.norm() < std::f64::consts::PI - 1e-3);
        let back = UnitQuaternion::exp(w).log();
        prop_assert!((back - w).norm() < 1e-9);
    }

    #[test]
    fn likelihoods_normalized(ces in proptest::collection::vec(1u64..1000, 1..8)) {
        let map: BTreeMap<ModelKind, u64> = ModelKind::ALL
            .into_iter()
            .zip(ces.iter().copied())
            .collect();
        let l = likelihoods(&map).unwrap();
        let sum: f64 = l.values().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(l.values().all(|&v| v > 0.0 && v <= 1.0));
        // the selection always picks a candidate with minimal CE
        let chosen = select(&map).unwrap().chosen;
        let min_ce = map.values().min().copied().unwrap();
        prop_assert_eq!(map[&chosen], min_ce);
    }

    #[test]
    fn combined_error_monotone_in_thresholds(
        errs in proptest::collection::vec(
            (0.0..0.01f64, 0.0..0.1f64, proptest::option::of(0.0..1.0f64),
             proptest::option::of(0.0..1.0f64)),
            1..60,
        ),
        scale in 1.0..4.0f64,
    ) {
        let errors: Vec<SampleErrors> = errs
            .iter()
            .map(|&(d_r, d_q, e_f, e_n)| SampleErrors { d_r, d_q, e_f, e_n })
            .collect();
        let tight = ErrorThresholds::default();
        let loose = ErrorThresholds {
            position_m: tight.position_m * scale,
            orientation_rad: tight.orientation_rad * scale,
            force: tight.force * scale,
            moment: tight.moment * scale,
        };
        let ce_tight = combined_error_from(&errors, &tight, true);
        let ce_loose = combined_error_from(&errors, &loose, true);
        prop_assert!(ce_loose <= ce_tight);
        // dropping the wrench indicators never increases the count
        let ce_kin = combined_error_from(&errors, &tight, false);
        prop_assert!(ce_kin <= ce_tight);
        prop_assert!(ce_kin >= 1.0 && ce_tight <= 1.0 + 4.0 * errors.len() as f64);
    }

    #[test]
    fn segmentation_structure(
        mags in proptest::collection::vec(0.0..10.0f64, 2..200),
        threshold in 0.5..5.0f64,
    ) {
        let samples: Vec<Sample> = mags
            .iter()
            .enumerate()
            .map(|(i, &m)| Sample {
                t: i as f64 / 120.0,
                r: Vec3::ZERO,
                q: UnitQuaternion::identity(),
                f: Vec3::new(m, 0.0, 0.0),
                n: Vec3::ZERO,
                v: Vec3::ZERO,
                omega: Vec3::ZERO,
            })
            .collect();
        let demo = Demonstration::new(samples, 120.0).unwrap();
        let cfg = SegmentationConfig {
            force_threshold: threshold,
            ..SegmentationConfig::default()
        };
        let segs = segment(&demo, &cfg);
        for s in &segs {
            prop_assert!(s.start_idx <= s.end_idx);
            prop_assert!(s.end_idx < mags.len());
            prop_assert!(s.len() >= cfg.min_segment_samples);
            // runs begin and end on above-threshold samples
            prop_assert!(mags[s.start_idx] > threshold);
            prop_assert!(mags[s.end_idx] > threshold);
        }
        for w in segs.windows(2) {
            prop_assert!(w[0].end_idx < w[1].start_idx);
        }
    }

    #[test]
    fn trajectory_round_trip(
        rows in proptest::collection::vec(
            (vec3(), unit_quat(), vec3(), vec3(), vec3(), vec3()),
            2..40,
        ),
        with_vel in proptest::bool::ANY,
    ) {
        let samples: Vec<Sample> = rows
            .iter()
            .enumerate()
            .map(|(i, &(r, q, f, n, v, omega))| Sample {
                t: i as f64 / 120.0,
                r,
                q,
                f,
                n,
                v,
                omega,
            })
            .collect();
        let demo = Demonstration::new(samples, 120.0).unwrap();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &demo, with_vel).unwrap();
        let (back, had_vel) = read_trajectory(buf.as_slice()).unwrap();
        prop_assert_eq!(had_vel, with_vel);
        prop_assert_eq!(back.samples().len(), demo.samples().len());
        for (a, b) in back.samples().iter().zip(demo.samples()) {
            prop_assert!((a.t - b.t).abs() <= 1e-9 * (1.0 + b.t.abs()));
            prop_assert!((a.r - b.r).norm() <= 1e-9 * (1.0 + b.r.norm()));
            prop_assert!((a.f - b.f).norm() <= 1e-9 * (1.0 + b.f.norm()));
            prop_assert!((a.n - b.n).norm() <= 1e-9 * (1.0 + b.n.norm()));
            if with_vel {
                prop_assert!((a.v - b.v).norm() <= 1e-9 * (1.0 + b.v.norm()));
                prop_assert!((a.omega - b.omega).norm() <= 1e-9 * (1.0 + b.omega.norm()));
            }
        }
    }

    #[test]
    fn projection_idempotent(
        kind_idx in 0usize..8,
        raw in proptest::collection::vec(-0.8..0.8f64, 11),
        r in vec3(),
        q in unit_quat(),
    ) {
        let kind = ModelKind::ALL[kind_idx];
        let mut data = raw[..param_len(kind)].to_vec();
        if kind == ModelKind::AxialRelaxed {
            data[5] = data[5].abs().max(0.05); // non-degenerate radius
        }
        let alpha = ParamVector::new(kind, data).unwrap();
        if let Ok((rp, qp)) = project_to_constraint(&alpha, r, q) {
            let (rp2, qp2) = project_to_constraint(&alpha, rp, qp).unwrap();
            prop_assert!((rp2 - rp).norm() < 1e-6);
            let moved = wrenchfit::kinematics::quat_angle(qp2.mul(qp.conj()));
            prop_assert!(moved < 1e-6);
        }
    }
}
