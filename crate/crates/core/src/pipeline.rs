//! End-to-end inference: velocity estimation → segmentation → per-model
//! fitting → metrics → selection → null hypothesis, plus the report and
//! configuration types the CLI serializes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{estimate_velocities, Demonstration};
use crate::metrics::{combined_error_from, segment_errors, SampleErrors};
use crate::models::{ModelKind, ParamVector};
use crate::regression::{fit, FitConfig, FitMode};
use crate::segmentation::{segment, Segment, SegmentationConfig};
use crate::selection::{
    null_hypothesis_from, select, NullHypothesisReport, RejectionReason, SelectionConfig, Verdict,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Moving-average window for velocity estimation (1 disables smoothing).
    pub velocity_window: usize,
    /// Candidate model kinds; empty means all eight.
    pub models: Vec<ModelKind>,
    pub segmentation: SegmentationConfig,
    pub fit: FitConfig,
    pub selection: SelectionConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            velocity_window: 5,
            models: vec![],
            segmentation: SegmentationConfig::default(),
            fit: FitConfig::default(),
            selection: SelectionConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn candidate_models(&self) -> Vec<ModelKind> {
        if self.models.is_empty() {
            ModelKind::ALL.to_vec()
        } else {
            self.models.clone()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Per-model outcome on one segment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelReport {
    pub ce: u64,
    pub likelihood: f64,
    pub alpha: Vec<f64>,
    pub k_error: f64,
    pub w_error: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentReport {
    pub start_idx: usize,
    pub end_idx: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub models: BTreeMap<ModelKind, ModelReport>,
    /// The selected model, absent when the segment was rejected.
    pub chosen: Option<ModelKind>,
    pub rejection: Option<RejectionReason>,
    pub null_hypothesis: Option<NullHypothesisReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InferenceReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub mode: FitMode,
    pub seed: u64,
    pub config: PipelineConfig,
    pub segments: Vec<SegmentReport>,
}

/// Run the full pipeline on a demonstration. `have_velocities` skips the
/// estimation step (synthetic data carries analytic velocities).
pub fn run_inference(
    demo: &Demonstration,
    config: &PipelineConfig,
    have_velocities: bool,
    seed: u64,
) -> Result<InferenceReport> {
    let demo = if have_velocities {
        demo.clone()
    } else {
        estimate_velocities(demo, config.velocity_window)?
    };
    let segments = segment(&demo, &config.segmentation);
    if segments.is_empty() {
        return Err(Error::NoSegments);
    }
    let reports = segments
        .iter()
        .enumerate()
        .map(|(i, seg)| analyze_segment(&demo, *seg, config, seed.wrapping_add(i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(InferenceReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        mode: config.fit.mode,
        seed,
        config: config.clone(),
        segments: reports,
    })
}

fn analyze_segment(
    demo: &Demonstration,
    seg: Segment,
    config: &PipelineConfig,
    seed: u64,
) -> Result<SegmentReport> {
    let samples = &demo.samples()[seg.start_idx..=seg.end_idx];
    let mut report = SegmentReport {
        start_idx: seg.start_idx,
        end_idx: seg.end_idx,
        t_start: samples[0].t,
        t_end: samples[samples.len() - 1].t,
        models: BTreeMap::new(),
        chosen: None,
        rejection: None,
        null_hypothesis: None,
    };
    if samples.len() < config.selection.min_segment_samples {
        report.rejection = Some(RejectionReason::TooShort);
        return Ok(report);
    }
    let use_wrench = config.fit.mode == FitMode::Combined;
    let mut ce_map: BTreeMap<ModelKind, u64> = BTreeMap::new();
    let mut fitted: BTreeMap<ModelKind, (ParamVector, f64, f64, Vec<SampleErrors>)> =
        BTreeMap::new();
    for kind in config.candidate_models() {
        let res = match fit(kind, samples, &config.fit, seed) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let errors = match segment_errors(&res.params, samples) {
            Ok(e) => e,
            Err(_) => continue, // projection failed: model unusable here
        };
        let ce = combined_error_from(&errors, &config.selection.thresholds, use_wrench) as u64;
        ce_map.insert(kind, ce);
        fitted.insert(kind, (res.params, res.k_error, res.w_error, errors));
    }
    if ce_map.is_empty() {
        report.rejection = Some(RejectionReason::NoModels);
        return Ok(report);
    }
    let selection = select(&ce_map)?;
    for (kind, score) in &selection.per_model {
        let (alpha, k_err, w_err, _) = &fitted[kind];
        report.models.insert(
            *kind,
            ModelReport {
                ce: score.ce,
                likelihood: score.likelihood,
                alpha: alpha.data().to_vec(),
                k_error: *k_err,
                w_error: *w_err,
            },
        );
    }
    let (_, _, _, errors) = &fitted[&selection.chosen];
    let nh = null_hypothesis_from(errors, &config.selection);
    match &nh.verdict {
        Verdict::Keep => report.chosen = Some(selection.chosen),
        Verdict::Discard(reason) => report.rejection = Some(reason.clone()),
    }
    report.null_hypothesis = Some(nh);
    Ok(report)
}
