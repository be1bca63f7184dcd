//! Fit-quality indicators: projection of measured poses onto a fitted
//! constraint, kinematic distances, normalized force/moment balance errors,
//! and the combined error count used by model selection.

use crate::error::{Error, Result};
use crate::kinematics::{Sample, UnitQuaternion, Vec3};
use crate::math::{exp_quat, Dual, Q4, Real, V3};
use crate::models::{jacobians_generic, phi_generic, ModelKind, ParamVector};
use crate::optimize::{minimize, BfgsOptions};
use crate::regression::wrench_residual;

/// Per-indicator thresholds; an exceedance increments the combined error.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErrorThresholds {
    /// Projection distance, m.
    pub position_m: f64,
    /// Projection rotation angle, rad.
    pub orientation_rad: f64,
    /// Normalized force-balance error (dimensionless).
    pub force: f64,
    /// Normalized moment-balance error (dimensionless).
    pub moment: f64,
}

impl Default for ErrorThresholds {
    fn default() -> Self {
        ErrorThresholds {
            position_m: 0.002,
            orientation_rad: 2.0_f64.to_radians(),
            force: 0.06,
            moment: 0.06,
        }
    }
}

/// Measured wrench magnitudes below these floors give no usable
/// normalized error; the corresponding indicator is skipped.
pub const FORCE_FLOOR_N: f64 = 0.05;
pub const MOMENT_FLOOR_NM: f64 = 0.005;

/// All indicators of one sample against one fitted model.
#[derive(Clone, Copy, Debug)]
pub struct SampleErrors {
    /// Distance to the nearest constraint-satisfying position, m.
    pub d_r: f64,
    /// Rotation angle to the nearest constraint-satisfying orientation, rad.
    pub d_q: f64,
    /// Normalized force-balance error, if the reaction force is measurable.
    pub e_f: Option<f64>,
    /// Normalized moment-balance error, if the reaction moment is
    /// measurable.
    pub e_n: Option<f64>,
}

/// Residual tolerance the projection must reach.
const PROJECTION_TOL: f64 = 1e-6;

fn projection_objective<T: Real>(
    kind: ModelKind,
    a: &[f64],
    r0: V3<f64>,
    q0: Q4<f64>,
    x: &[T],
    weight: f64,
) -> T {
    let ac: [T; 12] = {
        let mut out = [T::zero(); 12];
        for (o, &v) in out.iter_mut().zip(a) {
            *o = T::c(v);
        }
        out
    };
    let dr = V3::new(x[0], x[1], x[2]);
    let w = V3::new(x[3], x[4], x[5]);
    let r = V3::c(r0.x, r0.y, r0.z) + dr;
    let q = exp_quat(w).mul(Q4 {
        w: T::c(q0.w),
        v: V3::c(q0.v.x, q0.v.y, q0.v.z),
    });
    let (phi, k) = phi_generic(kind, &ac[..a.len()], r, q);
    let mut p2 = T::zero();
    for p in &phi[..k] {
        p2 = p2 + *p * *p;
    }
    dr.smooth_norm() + w.smooth_norm() + p2 * T::c(weight)
}

/// Exact projections for the kinds whose constraint separates into
/// independent position and orientation parts; `None` means a numeric
/// solve is required.
fn project_closed_form(
    alpha: &ParamVector,
    r: Vec3,
    q: UnitQuaternion,
) -> Option<(Vec3, UnitQuaternion)> {
    let a = alpha.data();
    match alpha.kind() {
        ModelKind::PlanarRelaxed => {
            let (_, _, n) = crate::models::frame(a[1], a[2]);
            let n = Vec3::from_g(n);
            Some((r + n.scale(a[0] - n.dot(r)), q))
        }
        ModelKind::Planar => {
            let (_, _, n) = crate::models::frame(a[4], a[5]);
            let n = Vec3::from_g(n);
            let rp = r + n.scale(a[3] - n.dot(r));
            // smallest rotation aligning the rotated axis with +-n
            let at = q.rotate(Vec3::new(a[0], a[1], a[2]).normalized());
            let target = if at.dot(n) >= 0.0 { n } else { n.scale(-1.0) };
            let axis = at.cross(target);
            let s = axis.norm();
            let qp = if s < 1e-12 {
                q
            } else {
                let angle = s.atan2(at.dot(target));
                UnitQuaternion::exp(axis.scale(angle / s)).mul(q)
            };
            Some((rp, qp))
        }
        ModelKind::PrismaticRelaxed => {
            let (u, v, n) = crate::models::frame(a[2], a[3]);
            let (u, v, n) = (Vec3::from_g(u), Vec3::from_g(v), Vec3::from_g(n));
            let p0 = u.scale(a[0]) + v.scale(a[1]);
            Some((p0 + n.scale((r - p0).dot(n)), q))
        }
        ModelKind::AxialRelaxed => {
            let (u, _, n) = crate::models::frame(a[3], a[4]);
            let (u, n) = (Vec3::from_g(u), Vec3::from_g(n));
            let d = Vec3::new(a[0], a[1], a[2]);
            let rel = r - d;
            let radial = rel - n.scale(rel.dot(n));
            let rn = radial.norm();
            let dir = if rn < 1e-12 { u } else { radial.scale(1.0 / rn) };
            Some((d + dir.scale(a[5].abs()), q))
        }
        _ => None,
    }
}

/// Project a measured pose onto the constraint surface of `alpha`: the
/// nearest pose (mixed position/rotation distance) satisfying the model.
///
/// Separable kinds are projected in closed form; the rest use a penalty
/// formulation with an escalating weight. The returned pose satisfies
/// `|phi| <= 1e-6`.
pub fn project_to_constraint(
    alpha: &ParamVector,
    r: Vec3,
    q: UnitQuaternion,
) -> Result<(Vec3, UnitQuaternion)> {
    let kind = alpha.kind();
    let a = alpha.data();
    let (rp, qp) = match project_closed_form(alpha, r, q) {
        Some(p) => p,
        None => {
            let r0 = r.g();
            let q0 = q.g();
            let mut x = [0.0f64; 6];
            for &(weight, max_iters) in &[(1e3, 80), (1e6, 50), (1e9, 50)] {
                let res = minimize(
                    |p| {
                        let mut vars = [Dual::<6>::c(0.0); 6];
                        for (i, &pi) in p.iter().enumerate() {
                            vars[i] = Dual::var(pi, i);
                        }
                        let v = projection_objective(kind, a, r0, q0, &vars, weight);
                        (v.re, v.dx[..6].to_vec())
                    },
                    &x,
                    &BfgsOptions {
                        grad_tol: 1e-10,
                        max_iters,
                    },
                );
                x.copy_from_slice(&res.x);
            }
            let dr = Vec3::new(x[0], x[1], x[2]);
            let w = Vec3::new(x[3], x[4], x[5]);
            (r + dr, UnitQuaternion::exp(w).mul(q))
        }
    };
    let (phi, k) = phi_generic(kind, a, rp.g(), qp.g());
    let residual = phi[..k].iter().map(|p| p * p).sum::<f64>().sqrt();
    if residual > PROJECTION_TOL {
        return Err(Error::ProjectionFailed { residual });
    }
    Ok((rp, qp))
}

/// Kinematic indicators `(D_r, D_q)`: position and orientation distance from
/// the sample pose to its projection onto the constraint.
pub fn kinematic_errors(alpha: &ParamVector, s: &Sample) -> Result<(f64, f64)> {
    let (rp, qp) = project_to_constraint(alpha, s.r, s.q)?;
    let d_r = (rp - s.r).norm();
    let d_q = crate::kinematics::quat_angle(qp.mul(s.q.conj()));
    Ok((d_r, d_q))
}

/// Normalized wrench-balance indicators `(E_F, E_N)`.
///
/// `E_F = |phi_r^T lambda + F_r| / |F|` with the least-squares multipliers
/// on the resolved reaction wrench, normalized by the measured magnitude;
/// `None` when the measured magnitude is below the floor.
pub fn wrench_errors(alpha: &ParamVector, s: &Sample) -> (Option<f64>, Option<f64>) {
    let kind = alpha.kind();
    let a = alpha.data();
    let (_, lambda) = wrench_residual(alpha, s);
    let ((jr, k), (jp, _)) = jacobians_generic(kind, a, s.r.g(), s.q.g());
    let (fr, nr) = crate::models::resolve_reaction_generic(
        kind,
        a,
        s.q.g(),
        s.v.g(),
        s.omega.g(),
        s.f.g(),
        s.n.g(),
    );
    let mut rf = fr;
    let mut rn = nr;
    for i in 0..k {
        rf = rf + jr[i].scale(lambda[i]);
        rn = rn + jp[i].scale(lambda[i]);
    }
    let fmag = s.f.norm();
    let nmag = s.n.norm();
    let e_f = (fmag >= FORCE_FLOOR_N).then(|| rf.norm_sq().sqrt() / fmag);
    let e_n = (nmag >= MOMENT_FLOOR_NM).then(|| rn.norm_sq().sqrt() / nmag);
    (e_f, e_n)
}

/// All indicators for one sample.
pub fn sample_errors(alpha: &ParamVector, s: &Sample) -> Result<SampleErrors> {
    let (d_r, d_q) = kinematic_errors(alpha, s)?;
    let (e_f, e_n) = wrench_errors(alpha, s);
    Ok(SampleErrors { d_r, d_q, e_f, e_n })
}

/// Indicators for every sample of a segment against one fitted model.
pub fn segment_errors(alpha: &ParamVector, samples: &[Sample]) -> Result<Vec<SampleErrors>> {
    samples.iter().map(|s| sample_errors(alpha, s)).collect()
}

/// Combined error from precomputed per-sample indicators: one plus the
/// number of threshold exceedances across all samples and indicators.
/// When `use_wrench` is false only the kinematic indicators count.
pub fn combined_error_from(
    errors: &[SampleErrors],
    thresholds: &ErrorThresholds,
    use_wrench: bool,
) -> f64 {
    let mut count = 0u64;
    for e in errors {
        if e.d_r > thresholds.position_m {
            count += 1;
        }
        if e.d_q > thresholds.orientation_rad {
            count += 1;
        }
        if use_wrench {
            if e.e_f.map(|v| v > thresholds.force).unwrap_or(false) {
                count += 1;
            }
            if e.e_n.map(|v| v > thresholds.moment).unwrap_or(false) {
                count += 1;
            }
        }
    }
    1.0 + count as f64
}

/// Combined error of a model over a segment; see [`combined_error_from`].
pub fn combined_error(
    alpha: &ParamVector,
    samples: &[Sample],
    thresholds: &ErrorThresholds,
    use_wrench: bool,
) -> Result<f64> {
    Ok(combined_error_from(
        &segment_errors(alpha, samples)?,
        thresholds,
        use_wrench,
    ))
}
