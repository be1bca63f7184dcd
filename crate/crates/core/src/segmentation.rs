//! Force-magnitude segmentation: finds candidate constrained intervals as
//! runs of samples whose force exceeds a threshold, with debouncing of
//! short gaps.

use serde::{Deserialize, Serialize};

use crate::kinematics::Demonstration;

/// Inclusive index range into a demonstration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start_idx: usize,
    pub end_idx: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end_idx - self.start_idx + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Force magnitude above which a sample counts as constrained, N.
    pub force_threshold: f64,
    /// Below-threshold gaps shorter than this are bridged.
    pub min_gap_samples: usize,
    /// Runs shorter than this are dropped.
    pub min_segment_samples: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            force_threshold: 0.1,
            min_gap_samples: 12,
            min_segment_samples: 6,
        }
    }
}

/// Find maximal above-threshold runs, merge runs separated by fewer than
/// `min_gap_samples` quiet samples, and drop runs shorter than
/// `min_segment_samples`.
pub fn segment(demo: &Demonstration, config: &SegmentationConfig) -> Vec<Segment> {
    let samples = demo.samples();
    let mut runs: Vec<Segment> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, s) in samples.iter().enumerate() {
        let active = s.f.norm() > config.force_threshold;
        match (active, start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                runs.push(Segment {
                    start_idx: st,
                    end_idx: i - 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        runs.push(Segment {
            start_idx: st,
            end_idx: samples.len() - 1,
        });
    }
    // bridge short gaps
    let mut merged: Vec<Segment> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(prev) if run.start_idx - prev.end_idx - 1 < config.min_gap_samples => {
                prev.end_idx = run.end_idx;
            }
            _ => merged.push(run),
        }
    }
    merged
        .into_iter()
        .filter(|s| s.len() >= config.min_segment_samples)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{Sample, UnitQuaternion, Vec3};

    fn demo_from_forces(f: &[f64]) -> Demonstration {
        let samples: Vec<Sample> = f
            .iter()
            .enumerate()
            .map(|(i, &mag)| Sample {
                t: i as f64 / 120.0,
                r: Vec3::ZERO,
                q: UnitQuaternion::identity(),
                f: Vec3::new(0.0, 0.0, mag),
                n: Vec3::ZERO,
                v: Vec3::ZERO,
                omega: Vec3::ZERO,
            })
            .collect();
        Demonstration::new(samples, 120.0).unwrap()
    }

    #[test]
    fn simple_run() {
        let demo = demo_from_forces(&[0.0, 0.0, 5.0, 6.0, 0.0]);
        let cfg = SegmentationConfig {
            force_threshold: 2.0,
            min_gap_samples: 1,
            min_segment_samples: 1,
        };
        assert_eq!(
            segment(&demo, &cfg),
            vec![Segment {
                start_idx: 2,
                end_idx: 3
            }]
        );
    }

    #[test]
    fn all_zero_forces() {
        let demo = demo_from_forces(&[0.0; 10]);
        assert_eq!(segment(&demo, &SegmentationConfig::default()), vec![]);
    }

    #[test]
    fn short_gap_merged_long_gap_kept() {
        let mut f = vec![5.0; 20];
        f.extend(vec![0.0; 5]); // short gap, bridged
        f.extend(vec![5.0; 20]);
        f.extend(vec![0.0; 30]); // long gap
        f.extend(vec![5.0; 20]);
        let demo = demo_from_forces(&f);
        let cfg = SegmentationConfig {
            force_threshold: 2.0,
            min_gap_samples: 12,
            min_segment_samples: 6,
        };
        let segs = segment(&demo, &cfg);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0], Segment { start_idx: 0, end_idx: 44 });
        assert_eq!(segs[1], Segment { start_idx: 75, end_idx: 94 });
    }

    #[test]
    fn short_runs_dropped() {
        let mut f = vec![0.0; 20];
        f.extend(vec![5.0; 3]);
        f.extend(vec![0.0; 20]);
        let demo = demo_from_forces(&f);
        let cfg = SegmentationConfig {
            force_threshold: 2.0,
            min_gap_samples: 1,
            min_segment_samples: 6,
        };
        assert!(segment(&demo, &cfg).is_empty());
    }

    #[test]
    fn segments_disjoint_and_sorted() {
        let mut f = Vec::new();
        for block in 0..4 {
            f.extend(vec![if block % 2 == 0 { 5.0 } else { 0.0 }; 25]);
        }
        let demo = demo_from_forces(&f);
        let segs = segment(&demo, &SegmentationConfig::default());
        for w in segs.windows(2) {
            assert!(w[0].end_idx < w[1].start_idx);
        }
    }
}
