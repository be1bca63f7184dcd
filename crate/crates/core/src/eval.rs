//! Fit-error-versus-segment-length evaluation: fit a model on randomly
//! placed contiguous windows of a recording and score each fit by the mean
//! position error against a dense ground-truth demonstration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Demonstration;
use crate::metrics::project_to_constraint;
use crate::models::{ModelKind, ParamVector};
use crate::regression::{fit, FitConfig, FitMode};

/// One evaluation point: statistics of the fit error at a window length.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalRow {
    pub length: usize,
    pub mode: FitMode,
    /// Mean over windows of the per-window mean position error, m.
    pub mean_error_m: f64,
    /// Standard deviation over windows of the per-window mean error, m.
    pub std_error_m: f64,
    /// Windows whose fit succeeded, out of `per_length`.
    pub fits_ok: usize,
}

/// Parse a lengths specification: either an explicit comma list (`2,8,32`)
/// or `lo:hi:log` for doubling steps from `lo` through `hi`.
pub fn parse_lengths(spec: &str) -> Result<Vec<usize>> {
    if let Some(rest) = spec.strip_suffix(":log") {
        let (lo, hi) = rest
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("bad lengths spec '{spec}'")))?;
        let lo: usize = lo
            .parse()
            .map_err(|_| Error::invalid(format!("bad lengths spec '{spec}'")))?;
        let hi: usize = hi
            .parse()
            .map_err(|_| Error::invalid(format!("bad lengths spec '{spec}'")))?;
        if lo < 2 || hi < lo {
            return Err(Error::invalid(format!("bad lengths spec '{spec}'")));
        }
        let mut out = Vec::new();
        let mut l = lo;
        while l <= hi {
            out.push(l);
            l *= 2;
        }
        return Ok(out);
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let l: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad lengths spec '{spec}'")))?;
        if l < 2 {
            return Err(Error::invalid(format!("bad lengths spec '{spec}'")));
        }
        out.push(l);
    }
    if out.is_empty() {
        return Err(Error::invalid(format!("bad lengths spec '{spec}'")));
    }
    Ok(out)
}

/// Mean position error of a fitted model over every sample of the truth
/// demonstration.
pub fn mean_position_error(alpha: &ParamVector, truth: &Demonstration) -> Result<f64> {
    let mut total = 0.0;
    for s in truth.samples() {
        let (rp, _) = project_to_constraint(alpha, s.r, s.q)?;
        total += (rp - s.r).norm();
    }
    Ok(total / truth.samples().len() as f64)
}

/// Evaluate fit error against window length for both fit modes.
///
/// For each requested length, `per_length` windows are drawn uniformly from
/// `input`, fitted, and scored with [`mean_position_error`] against `truth`.
/// Lengths longer than the input are skipped. Windows whose fit or scoring
/// fails are excluded from the statistics (`fits_ok` records how many
/// survived).
pub fn eval_curve(
    input: &Demonstration,
    truth: &Demonstration,
    kind: ModelKind,
    lengths: &[usize],
    per_length: usize,
    config: &FitConfig,
    seed: u64,
) -> Result<Vec<EvalRow>> {
    if per_length == 0 {
        return Err(Error::invalid("per_length must be positive"));
    }
    let n = input.samples().len();
    let mut rows = Vec::new();
    for mode in [FitMode::Kinematic, FitMode::Combined] {
        let mut cfg = config.clone();
        cfg.mode = mode;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for &length in lengths {
            if length > n {
                continue; // caller warns about skipped rows
            }
            let mut errs = Vec::new();
            for _ in 0..per_length {
                let start = rng.gen_range(0..=n - length);
                let fit_seed = rng.gen::<u64>();
                let window = &input.samples()[start..start + length];
                let Ok(res) = fit(kind, window, &cfg, fit_seed) else {
                    continue;
                };
                if let Ok(e) = mean_position_error(&res.params, truth) {
                    errs.push(e);
                }
            }
            let fits_ok = errs.len();
            if fits_ok == 0 {
                continue;
            }
            let mean = errs.iter().sum::<f64>() / fits_ok as f64;
            let var =
                errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / fits_ok as f64;
            rows.push(EvalRow {
                length,
                mode,
                mean_error_m: mean,
                std_error_m: var.sqrt(),
                fits_ok,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_log_spec() {
        assert_eq!(parse_lengths("2:256:log").unwrap(), vec![2, 4, 8, 16, 32, 64, 128, 256]);
        assert_eq!(parse_lengths("2:5:log").unwrap(), vec![2, 4]);
        assert_eq!(parse_lengths("4,16,9").unwrap(), vec![4, 16, 9]);
        assert!(parse_lengths("1:8:log").is_err());
        assert!(parse_lengths("x").is_err());
        assert!(parse_lengths("").is_err());
    }
}
