//! Per-segment model choice: inverse-combined-error likelihoods, the
//! penalized kinematic baseline, and the constraint null hypothesis that
//! discards false-positive segments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Sample;
use crate::metrics::ErrorThresholds;
use crate::models::{model_info, ModelKind, ParamVector};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub thresholds: ErrorThresholds,
    /// Maximum allowed fraction of threshold exceedances per metric before
    /// a chosen model is discarded.
    pub null_max_fraction: f64,
    /// Segments shorter than this are discarded outright.
    pub min_segment_samples: usize,
    /// Weight on model DOF in the penalized kinematic score.
    pub beta: f64,
    /// Weight on parameter count in the penalized kinematic score.
    pub gamma: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            thresholds: ErrorThresholds::default(),
            null_max_fraction: 0.75,
            min_segment_samples: 6,
            beta: 1.69,
            gamma: 0.40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    TooShort,
    /// Which metric's tally fraction exceeded the maximum.
    TallyExceeded(String),
    NoModels,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelScore {
    pub ce: u64,
    pub likelihood: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionResult {
    pub per_model: BTreeMap<ModelKind, ModelScore>,
    pub chosen: ModelKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NullHypothesisReport {
    pub v_r: u64,
    pub v_q: u64,
    pub v_f: u64,
    pub v_n: u64,
    /// Exceedance fractions in the order `r, q, f, n`, each over the count
    /// of samples where that metric applies.
    pub fractions: [f64; 4],
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Keep,
    Discard(RejectionReason),
}

/// Normalized inverse-CE likelihood distribution over models.
pub fn likelihoods(ce_by_model: &BTreeMap<ModelKind, u64>) -> Result<BTreeMap<ModelKind, f64>> {
    if ce_by_model.is_empty() {
        return Err(Error::NoModels);
    }
    let total: f64 = ce_by_model.values().map(|&c| 1.0 / c.max(1) as f64).sum();
    Ok(ce_by_model
        .iter()
        .map(|(&k, &c)| (k, (1.0 / c.max(1) as f64) / total))
        .collect())
}

/// Kind order used as the final tie-break.
fn kind_rank(k: ModelKind) -> usize {
    ModelKind::ALL.iter().position(|&m| m == k).unwrap()
}

/// Pick the maximum-likelihood model; ties go to fewer DOF, then fewer
/// parameters, then a fixed kind order.
pub fn select(ce_by_model: &BTreeMap<ModelKind, u64>) -> Result<SelectionResult> {
    let lik = likelihoods(ce_by_model)?;
    let chosen = lik
        .iter()
        .min_by(|(ka, la), (kb, lb)| {
            lb.partial_cmp(la)
                .unwrap()
                .then_with(|| model_info(**ka).dof.cmp(&model_info(**kb).dof))
                .then_with(|| model_info(**ka).n_params.cmp(&model_info(**kb).n_params))
                .then_with(|| kind_rank(**ka).cmp(&kind_rank(**kb)))
        })
        .map(|(&k, _)| k)
        .ok_or(Error::NoModels)?;
    let per_model = ce_by_model
        .iter()
        .map(|(&k, &ce)| {
            (
                k,
                ModelScore {
                    ce,
                    likelihood: lik[&k],
                },
            )
        })
        .collect();
    Ok(SelectionResult { per_model, chosen })
}

/// Penalized kinematic-likelihood choice:
/// `argmin beta * DOF(m) + gamma * n_params(m) - ln L(m)`.
pub fn penalized_select(
    likelihood_by_model: &BTreeMap<ModelKind, f64>,
    beta: f64,
    gamma: f64,
) -> Result<ModelKind> {
    likelihood_by_model
        .iter()
        .min_by(|(ka, la), (kb, lb)| {
            let score = |k: ModelKind, l: f64| {
                let info = model_info(k);
                beta * info.dof as f64 + gamma * info.n_params as f64 - l.max(1e-300).ln()
            };
            score(**ka, **la)
                .partial_cmp(&score(**kb, **lb))
                .unwrap()
                .then_with(|| kind_rank(**ka).cmp(&kind_rank(**kb)))
        })
        .map(|(&k, _)| k)
        .ok_or(Error::NoModels)
}

/// Evaluate the constraint null hypothesis for a chosen model on a segment.
///
/// Tallies threshold exceedances per metric; the wrench tallies count only
/// samples whose reaction magnitude clears the measurement floor. The
/// segment is discarded when too short or when any exceedance fraction
/// passes `null_max_fraction`.
pub fn null_hypothesis(
    alpha: &ParamVector,
    samples: &[Sample],
    config: &SelectionConfig,
) -> Result<NullHypothesisReport> {
    if samples.len() < config.min_segment_samples {
        return Ok(NullHypothesisReport {
            v_r: 0,
            v_q: 0,
            v_f: 0,
            v_n: 0,
            fractions: [0.0; 4],
            verdict: Verdict::Discard(RejectionReason::TooShort),
        });
    }
    Ok(null_hypothesis_from(
        &crate::metrics::segment_errors(alpha, samples)?,
        config,
    ))
}

/// Null-hypothesis verdict from precomputed per-sample indicators. The
/// length check against `min_segment_samples` is the caller's job here.
pub fn null_hypothesis_from(
    errors: &[crate::metrics::SampleErrors],
    config: &SelectionConfig,
) -> NullHypothesisReport {
    let n = errors.len();
    let th = &config.thresholds;
    let (mut v_r, mut v_q, mut v_f, mut v_n) = (0u64, 0u64, 0u64, 0u64);
    let (mut n_f, mut n_n) = (0u64, 0u64);
    for e in errors {
        if e.d_r > th.position_m {
            v_r += 1;
        }
        if e.d_q > th.orientation_rad {
            v_q += 1;
        }
        if let Some(ef) = e.e_f {
            n_f += 1;
            if ef > th.force {
                v_f += 1;
            }
        }
        if let Some(en) = e.e_n {
            n_n += 1;
            if en > th.moment {
                v_n += 1;
            }
        }
    }
    let frac = |v: u64, d: u64| if d == 0 { 0.0 } else { v as f64 / d as f64 };
    let fractions = [
        frac(v_r, n as u64),
        frac(v_q, n as u64),
        frac(v_f, n_f),
        frac(v_n, n_n),
    ];
    let names = ["position", "orientation", "force", "moment"];
    let verdict = match fractions
        .iter()
        .zip(names)
        .find(|(f, _)| **f > config.null_max_fraction)
    {
        Some((_, name)) => Verdict::Discard(RejectionReason::TallyExceeded(name.to_string())),
        None => Verdict::Keep,
    };
    NullHypothesisReport {
        v_r,
        v_q,
        v_f,
        v_n,
        fractions,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{UnitQuaternion, Vec3};
    use approx::assert_abs_diff_eq;

    #[test]
    fn likelihood_examples() {
        let mut ce = BTreeMap::new();
        ce.insert(ModelKind::Axial, 1);
        ce.insert(ModelKind::Planar, 3);
        let l = likelihoods(&ce).unwrap();
        assert_abs_diff_eq!(l[&ModelKind::Axial], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(l[&ModelKind::Planar], 0.25, epsilon = 1e-12);

        let mut eq = BTreeMap::new();
        for k in [ModelKind::Planar, ModelKind::Axial, ModelKind::Prismatic] {
            eq.insert(k, 7);
        }
        let l = likelihoods(&eq).unwrap();
        for v in l.values() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-12);
        }

        let mut single = BTreeMap::new();
        single.insert(ModelKind::PointOnLine, 42);
        assert_abs_diff_eq!(
            likelihoods(&single).unwrap()[&ModelKind::PointOnLine],
            1.0,
            epsilon = 1e-15
        );

        assert!(matches!(
            likelihoods(&BTreeMap::new()),
            Err(Error::NoModels)
        ));
    }

    #[test]
    fn likelihoods_sum_to_one() {
        let mut ce = BTreeMap::new();
        for (i, k) in ModelKind::ALL.into_iter().enumerate() {
            ce.insert(k, (i as u64 % 5) + 1);
        }
        let l = likelihoods(&ce).unwrap();
        let sum: f64 = l.values().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        assert!(l.values().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn select_dof_tie_break() {
        let mut ce = BTreeMap::new();
        ce.insert(ModelKind::PointOnLine, 1);
        ce.insert(ModelKind::Axial, 1);
        let res = select(&ce).unwrap();
        assert_eq!(res.chosen, ModelKind::Axial);
    }

    #[test]
    fn select_prefers_lower_ce() {
        let mut ce = BTreeMap::new();
        ce.insert(ModelKind::Planar, 5);
        ce.insert(ModelKind::PlanarRelaxed, 2);
        let res = select(&ce).unwrap();
        assert_eq!(res.chosen, ModelKind::PlanarRelaxed);
        assert_eq!(res.per_model[&ModelKind::PlanarRelaxed].ce, 2);
    }

    #[test]
    fn penalized_zero_weights_is_argmax() {
        let mut l = BTreeMap::new();
        l.insert(ModelKind::Axial, 0.3);
        l.insert(ModelKind::PlanarRelaxed, 0.7);
        assert_eq!(
            penalized_select(&l, 0.0, 0.0).unwrap(),
            ModelKind::PlanarRelaxed
        );
    }

    #[test]
    fn penalized_equal_likelihoods_pick_cheapest() {
        let mut l = BTreeMap::new();
        // 1.69*4 + 0.40*8 = 9.96 for axial_relaxed vs 1.69*5 + 0.40*3 = 9.65
        // for planar_relaxed
        l.insert(ModelKind::AxialRelaxed, 0.5);
        l.insert(ModelKind::PlanarRelaxed, 0.5);
        assert_eq!(
            penalized_select(&l, 1.69, 0.40).unwrap(),
            ModelKind::PlanarRelaxed
        );
    }

    fn plane_sample(z: f64) -> Sample {
        Sample {
            t: 0.0,
            r: Vec3::new(0.0, 0.0, z),
            q: UnitQuaternion::identity(),
            f: Vec3::new(0.0, 0.0, -4.0),
            n: Vec3::ZERO,
            v: Vec3::ZERO,
            omega: Vec3::ZERO,
        }
    }

    #[test]
    fn null_hypothesis_short_segment() {
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.0, 0.0, 0.0]).unwrap();
        let samples: Vec<Sample> = (0..5).map(|_| plane_sample(0.0)).collect();
        let rep = null_hypothesis(&alpha, &samples, &SelectionConfig::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Discard(RejectionReason::TooShort));
    }

    #[test]
    fn null_hypothesis_keeps_clean_segment() {
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.0, 0.0, 0.0]).unwrap();
        let samples: Vec<Sample> = (0..20).map(|_| plane_sample(0.0)).collect();
        let rep = null_hypothesis(&alpha, &samples, &SelectionConfig::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Keep);
        assert_eq!(rep.v_r + rep.v_q + rep.v_f + rep.v_n, 0);
    }

    #[test]
    fn null_hypothesis_discards_off_constraint() {
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.0, 0.0, 0.0]).unwrap();
        let samples: Vec<Sample> = (0..20).map(|i| plane_sample(0.05 + i as f64 * 0.01)).collect();
        let rep = null_hypothesis(&alpha, &samples, &SelectionConfig::default()).unwrap();
        assert!(matches!(
            rep.verdict,
            Verdict::Discard(RejectionReason::TallyExceeded(_))
        ));
        assert_eq!(rep.v_r, 20);
    }

    #[test]
    fn null_hypothesis_monotone_in_clean_samples() {
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.0, 0.0, 0.0]).unwrap();
        // 12 bad + 8 good: position fraction 0.6 < 0.75 -> keep; adding more
        // clean samples keeps it kept
        let mut samples: Vec<Sample> = (0..12).map(|_| plane_sample(0.05)).collect();
        samples.extend((0..8).map(|_| plane_sample(0.0)));
        let rep = null_hypothesis(&alpha, &samples, &SelectionConfig::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Keep);
        samples.extend((0..10).map(|_| plane_sample(0.0)));
        let rep2 = null_hypothesis(&alpha, &samples, &SelectionConfig::default()).unwrap();
        assert_eq!(rep2.verdict, Verdict::Keep);
        assert!(rep2.fractions[0] <= rep.fractions[0]);
    }
}
