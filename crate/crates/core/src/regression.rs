//! Robust model fitting: the smoothed kinematic+wrench objective, the
//! closed-form inner Lagrange-multiplier solve, data-driven initial guesses
//! and the iteratively reweighted BFGS outer loop.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kinematics::{Sample, UnitQuaternion, Vec3};
use crate::math::{smooth_sqrt, solve_spd, Dual, Q4, Real, V3};
use crate::models::{
    jacobians_generic, param_len, phi_generic, phi_params_generic, resolve_reaction_generic,
    ModelKind, ParamVector,
};
use crate::optimize::{minimize, BfgsOptions};

/// Which residuals enter the objective and the reweighting errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMode {
    /// Pose residuals only.
    Kinematic,
    /// Pose residuals plus the force-balance residual.
    Combined,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub mode: FitMode,
    /// Outer reweighting iterations (fixed count).
    pub irls_iterations: usize,
    /// Exponent in the weight update `w = 1 / (1 + E^p)`.
    pub irls_exponent: f64,
    /// Quadratic penalty weight on parameter unit/orthogonality residuals.
    pub param_penalty_weight: f64,
    /// Inner quasi-Newton settings per reweighting round.
    pub optimizer: BfgsOptions,
    /// Number of additional jittered starts.
    pub restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            mode: FitMode::Combined,
            irls_iterations: 100,
            irls_exponent: 0.1,
            param_penalty_weight: 1000.0,
            // IRLS rounds warm-start the optimizer, so a modest per-round
            // iteration cap converges over rounds at a fraction of the cost
            optimizer: BfgsOptions {
                grad_tol: 1e-9,
                max_iters: 40,
            },
            restarts: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: ParamVector,
    /// Final weighted objective value (including the parameter penalty).
    pub objective: f64,
    /// Unweighted kinematic error sum over the segment.
    pub k_error: f64,
    /// Unweighted wrench residual sum over the segment.
    pub w_error: f64,
    /// Final per-sample weights, normalized to sum 1.
    pub weights: Vec<f64>,
    /// Reweighting rounds actually executed.
    pub iterations: usize,
}

#[inline]
fn cv<T: Real>(v: Vec3) -> V3<T> {
    V3::c(v.x, v.y, v.z)
}

#[inline]
fn cq<T: Real>(q: UnitQuaternion) -> Q4<T> {
    let e = q.vector();
    Q4 {
        w: T::c(q.scalar()),
        v: V3::c(e.x, e.y, e.z),
    }
}

/// Smoothed per-sample error: `|phi|` plus, in combined mode, the norm of
/// the force-balance residual after the inner multiplier solve.
fn sample_error_generic<T: Real>(kind: ModelKind, a: &[T], s: &Sample, combined: bool) -> T {
    let r = cv::<T>(s.r);
    let q = cq::<T>(s.q);
    let (phi, k) = phi_generic(kind, a, r, q);
    let mut ksq = T::zero();
    for p in &phi[..k] {
        ksq = ksq + *p * *p;
    }
    let mut e = smooth_sqrt(ksq);
    if combined {
        let ((jr, _), (jp, _)) = jacobians_generic(kind, a, r, q);
        let (fr, nr) = resolve_reaction_generic(
            kind,
            a,
            q,
            cv::<T>(s.v),
            cv::<T>(s.omega),
            cv::<T>(s.f),
            cv::<T>(s.n),
        );
        e = e + smooth_sqrt(wrench_residual_sq(&jr[..k], &jp[..k], fr, nr));
    }
    e
}

/// Squared norm of `A lambda - b` at the ridge-regularized least-squares
/// multiplier, with `A = [phi_r^T; phi_pi^T]` and `b = [-F_r; -N_r]`.
fn wrench_residual_sq<T: Real>(jr: &[V3<T>], jp: &[V3<T>], fr: V3<T>, nr: V3<T>) -> T {
    let k = jr.len();
    debug_assert!(k <= 5);
    let mut m = [T::zero(); 25];
    let mut rhs = [T::zero(); 5];
    for i in 0..k {
        for j in 0..k {
            m[i * k + j] = jr[i].dot(jr[j]) + jp[i].dot(jp[j]);
        }
        rhs[i] = -(jr[i].dot(fr) + jp[i].dot(nr));
    }
    let mut trace = 0.0;
    for i in 0..k {
        trace += m[i * k + i].re();
    }
    let ridge = T::c(1e-12 * (1.0 + trace / k as f64));
    for i in 0..k {
        m[i * k + i] = m[i * k + i] + ridge;
    }
    let mut lambda = [T::zero(); 5];
    solve_spd(&m[..k * k], &rhs[..k], k, &mut lambda[..k]);
    let mut rf = fr;
    let mut rn = nr;
    for i in 0..k {
        rf = rf + jr[i].scale(lambda[i]);
        rn = rn + jp[i].scale(lambda[i]);
    }
    rf.norm_sq() + rn.norm_sq()
}

/// Force-balance residual of one sample: `min_lambda |A lambda - b|` with
/// the reaction wrench on the right-hand side. Returns the residual norm and
/// the minimizing multipliers.
pub fn wrench_residual(alpha: &ParamVector, s: &Sample) -> (f64, Vec<f64>) {
    let kind = alpha.kind();
    let a = alpha.data();
    let r = s.r.g();
    let q = s.q.g();
    let ((jr, k), (jp, _)) = jacobians_generic(kind, a, r, q);
    let (fr, nr) =
        resolve_reaction_generic(kind, a, q, s.v.g(), s.omega.g(), s.f.g(), s.n.g());
    let jr = &jr[..k];
    let jp = &jp[..k];
    let mut m = [0.0; 25];
    let mut rhs = [0.0; 5];
    for i in 0..k {
        for j in 0..k {
            m[i * k + j] = jr[i].dot(jr[j]) + jp[i].dot(jp[j]);
        }
        rhs[i] = -(jr[i].dot(fr) + jp[i].dot(nr));
    }
    let mut trace = 0.0;
    for i in 0..k {
        trace += m[i * k + i];
    }
    let ridge = 1e-12 * (1.0 + trace / k as f64);
    for i in 0..k {
        m[i * k + i] += ridge;
    }
    let mut lambda = [0.0; 5];
    solve_spd(&m[..k * k], &rhs[..k], k, &mut lambda[..k]);
    let mut rf = fr;
    let mut rn = nr;
    for i in 0..k {
        rf = rf + jr[i].scale(lambda[i]);
        rn = rn + jp[i].scale(lambda[i]);
    }
    (
        (rf.norm_sq() + rn.norm_sq()).sqrt(),
        lambda[..k].to_vec(),
    )
}

/// Unweighted sum of per-sample kinematic residual norms.
pub fn k_error(alpha: &ParamVector, samples: &[Sample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let (phi, k) = phi_generic(alpha.kind(), alpha.data(), s.r.g(), s.q.g());
            phi[..k].iter().map(|p| p * p).sum::<f64>().sqrt()
        })
        .sum()
}

/// Unweighted sum of per-sample force-balance residual norms.
pub fn w_error(alpha: &ParamVector, samples: &[Sample]) -> f64 {
    samples.iter().map(|s| wrench_residual(alpha, s).0).sum()
}

/// Weighted objective: `sum_i w_i E_i + W_p * |phi_params|^2`.
pub fn objective(
    alpha: &ParamVector,
    samples: &[Sample],
    weights: &[f64],
    config: &FitConfig,
) -> f64 {
    objective_generic(
        alpha.kind(),
        alpha.data(),
        samples,
        weights,
        config.mode == FitMode::Combined,
        config.param_penalty_weight,
    )
}

fn objective_generic<T: Real>(
    kind: ModelKind,
    a: &[T],
    samples: &[Sample],
    weights: &[f64],
    combined: bool,
    penalty_weight: f64,
) -> T {
    let mut total = T::zero();
    for (s, &w) in samples.iter().zip(weights) {
        total = total + sample_error_generic(kind, a, s, combined) * T::c(w);
    }
    let (pp, np) = phi_params_generic(kind, a);
    for p in &pp[..np] {
        total = total + *p * *p * T::c(penalty_weight);
    }
    total
}

fn grad_objective_n<const N: usize>(
    kind: ModelKind,
    x: &[f64],
    samples: &[Sample],
    weights: &[f64],
    combined: bool,
    penalty_weight: f64,
) -> (f64, Vec<f64>) {
    let n = x.len();
    let mut a = [Dual::<N>::c(0.0); N];
    for (i, &xi) in x.iter().enumerate() {
        a[i] = Dual::var(xi, i);
    }
    let v = objective_generic(kind, &a[..n], samples, weights, combined, penalty_weight);
    (v.re, v.dx[..n].to_vec())
}

fn grad_objective(
    kind: ModelKind,
    x: &[f64],
    samples: &[Sample],
    weights: &[f64],
    combined: bool,
    penalty_weight: f64,
) -> (f64, Vec<f64>) {
    // dispatch to the narrowest derivative lane that fits the parameter
    // count; dual-number cost scales linearly with the lane width
    match x.len() {
        0..=4 => grad_objective_n::<4>(kind, x, samples, weights, combined, penalty_weight),
        5..=7 => grad_objective_n::<7>(kind, x, samples, weights, combined, penalty_weight),
        _ => grad_objective_n::<12>(kind, x, samples, weights, combined, penalty_weight),
    }
}

// ---------------------------------------------------------------------------
// Initial guesses
// ---------------------------------------------------------------------------

/// Centroid and eigen-decomposition of the position covariance, eigenvalues
/// ascending.
fn position_pca(samples: &[Sample]) -> (Vec3, [Vec3; 3], [f64; 3]) {
    let n = samples.len() as f64;
    let mut c = Vec3::ZERO;
    for s in samples {
        c = c + s.r;
    }
    c = c.scale(1.0 / n);
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for s in samples {
        let d = s.r - c;
        let dv = nalgebra::Vector3::new(d.x, d.y, d.z);
        cov += dv * dv.transpose();
    }
    cov /= n;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vecs = [Vec3::ZERO; 3];
    let mut vals = [0.0; 3];
    for (slot, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        vecs[slot] = Vec3::new(v[0], v[1], v[2]);
        vals[slot] = eig.eigenvalues[i];
    }
    (c, vecs, vals)
}

/// Exponential coordinates `[wx, wy]` of the rotation (about an axis in the
/// x-y plane) taking `e_z` to `n`.
fn w_from_normal(n: Vec3) -> [f64; 2] {
    let sxy = (n.x * n.x + n.y * n.y).sqrt();
    if sxy < 1e-12 {
        return if n.z >= 0.0 {
            [0.0, 0.0]
        } else {
            [std::f64::consts::PI, 0.0]
        };
    }
    let angle = sxy.atan2(n.z);
    // axis = normalize(e_z x n) = (-ny, nx, 0)/sxy
    [-n.y / sxy * angle, n.x / sxy * angle]
}

fn frame_from_w(wx: f64, wy: f64) -> (Vec3, Vec3, Vec3) {
    let e = crate::kinematics::exp_map(Vec3::new(wx, wy, 0.0));
    (
        Vec3::new(e[(0, 0)], e[(1, 0)], e[(2, 0)]),
        Vec3::new(e[(0, 1)], e[(1, 1)], e[(2, 1)]),
        Vec3::new(e[(0, 2)], e[(1, 2)], e[(2, 2)]),
    )
}

/// Least-squares circle through 2-D points (Kasa fit): returns center and
/// radius.
fn circle_fit(pts: &[(f64, f64)]) -> ((f64, f64), f64) {
    // x^2 + y^2 + D x + E y + F = 0
    let mut m = [0.0f64; 9];
    let mut b = [0.0f64; 3];
    for &(x, y) in pts {
        let row = [x, y, 1.0];
        let t = -(x * x + y * y);
        for i in 0..3 {
            for j in 0..3 {
                m[i * 3 + j] += row[i] * row[j];
            }
            b[i] += row[i] * t;
        }
    }
    for i in 0..3 {
        m[i * 3 + i] += 1e-9 * (1.0 + m[i * 3 + i]);
    }
    let mut sol = [0.0f64; 3];
    solve_spd(&m, &b, 3, &mut sol);
    let cx = -sol[0] / 2.0;
    let cy = -sol[1] / 2.0;
    let r2 = (cx * cx + cy * cy - sol[2]).max(1e-12);
    ((cx, cy), r2.sqrt())
}

/// Mean angular velocity direction, if well defined.
fn omega_axis(samples: &[Sample]) -> Option<Vec3> {
    let mut acc = Vec3::ZERO;
    // align signs against the first clearly nonzero omega
    let mut reference = Vec3::ZERO;
    for s in samples {
        if reference.norm() < 1e-9 {
            reference = s.omega;
        }
        let w = if s.omega.dot(reference) < 0.0 {
            -s.omega
        } else {
            s.omega
        };
        acc = acc + w;
    }
    let n = acc.norm();
    if n > 1e-6 * samples.len() as f64 {
        Some(acc.scale(1.0 / n))
    } else {
        None
    }
}

/// Data-driven initial parameter guess for `kind`.
fn initial_guess(kind: ModelKind, samples: &[Sample]) -> Vec<f64> {
    let (centroid, vecs, _vals) = position_pca(samples);
    let small = vecs[0]; // least motion: plane normal candidate
    let large = vecs[2]; // dominant motion: line axis candidate
    let qm = samples[samples.len() / 2].q;
    match kind {
        ModelKind::PointOnPlane => {
            let n = if small.z >= 0.0 { small } else { -small };
            let [wx, wy] = w_from_normal(n);
            vec![0.0, 0.0, 0.0, centroid.dot(n), wx, wy]
        }
        ModelKind::PlanarRelaxed => {
            let n = if small.z >= 0.0 { small } else { -small };
            let [wx, wy] = w_from_normal(n);
            vec![centroid.dot(n), wx, wy]
        }
        ModelKind::Planar => {
            let n = if small.z >= 0.0 { small } else { -small };
            let [wx, wy] = w_from_normal(n);
            // tbar stays aligned with the plane normal
            let t = qm.conj().rotate(n);
            vec![t.x, t.y, t.z, centroid.dot(n), wx, wy]
        }
        ModelKind::PointOnLine => {
            let axis = large;
            let [wx, wy] = w_from_normal(axis);
            let (u, v, _) = frame_from_w(wx, wy);
            vec![
                0.0,
                0.0,
                0.0,
                centroid.dot(u),
                centroid.dot(v),
                wx,
                wy,
            ]
        }
        ModelKind::PrismaticRelaxed => {
            let axis = large;
            let [wx, wy] = w_from_normal(axis);
            let (u, v, _) = frame_from_w(wx, wy);
            vec![centroid.dot(u), centroid.dot(v), wx, wy]
        }
        ModelKind::Prismatic => {
            let axis = large;
            let [wx, wy] = w_from_normal(axis);
            let (u, v, n) = frame_from_w(wx, wy);
            let sbar = qm.conj().rotate(n);
            let tbar = qm.conj().rotate(v);
            vec![
                tbar.x,
                tbar.y,
                tbar.z,
                sbar.x,
                sbar.y,
                sbar.z,
                centroid.dot(u),
                centroid.dot(v),
                wx,
                wy,
            ]
        }
        ModelKind::Axial | ModelKind::AxialRelaxed => {
            let axis = match omega_axis(samples) {
                Some(a) => a,
                None => small,
            };
            let n = if axis.z >= 0.0 { axis } else { -axis };
            let [wx, wy] = w_from_normal(n);
            let (u, v, _) = frame_from_w(wx, wy);
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .map(|s| (s.r.dot(u), s.r.dot(v)))
                .collect();
            let ((cx, cy), radius) = circle_fit(&pts);
            let height = samples.iter().map(|s| s.r.dot(n)).sum::<f64>()
                / samples.len() as f64;
            let d = u.scale(cx) + v.scale(cy) + n.scale(height);
            if kind == ModelKind::AxialRelaxed {
                vec![d.x, d.y, d.z, wx, wy, radius]
            } else {
                let r0 = samples[0].r;
                let q0 = samples[0].q;
                let arm = d - r0;
                let sbar = q0.conj().rotate(arm);
                let tdir = n.cross(arm);
                let t_world = if tdir.norm() > 1e-9 {
                    tdir.normalized()
                } else {
                    u
                };
                let tbar = q0.conj().rotate(t_world);
                vec![
                    tbar.x, tbar.y, tbar.z, sbar.x, sbar.y, sbar.z, d.x, d.y, d.z,
                    wx, wy,
                ]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Canonicalization after optimization
// ---------------------------------------------------------------------------

/// Wrap exponential coordinates at indices `(i, i+1)` back into `|w| <= pi`.
fn wrap_w(data: &mut [f64], i: usize) {
    loop {
        let n = (data[i] * data[i] + data[i + 1] * data[i + 1]).sqrt();
        if n <= std::f64::consts::PI || n < 1e-12 {
            return;
        }
        let scale = 1.0 - 2.0 * std::f64::consts::PI / n;
        data[i] *= scale;
        data[i + 1] *= scale;
    }
}

/// Exact re-normalization of unit-vector parameters so the parameter-side
/// residuals vanish identically after the penalized optimization.
fn canonicalize(kind: ModelKind, data: &mut [f64]) {
    let norm3 = |d: &mut [f64]| {
        let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        if n > 1e-12 {
            d[0] /= n;
            d[1] /= n;
            d[2] /= n;
        }
    };
    match kind {
        ModelKind::Planar => {
            norm3(&mut data[0..3]);
            wrap_w(data, 4);
        }
        ModelKind::Prismatic => {
            norm3(&mut data[3..6]);
            let dot = data[0] * data[3] + data[1] * data[4] + data[2] * data[5];
            for i in 0..3 {
                data[i] -= dot * data[i + 3];
            }
            norm3(&mut data[0..3]);
            wrap_w(data, 8);
        }
        ModelKind::Axial => {
            let s2 = data[3] * data[3] + data[4] * data[4] + data[5] * data[5];
            if s2 > 1e-18 {
                let dot =
                    (data[0] * data[3] + data[1] * data[4] + data[2] * data[5]) / s2;
                for i in 0..3 {
                    data[i] -= dot * data[i + 3];
                }
            }
            norm3(&mut data[0..3]);
            wrap_w(data, 9);
        }
        ModelKind::PointOnPlane => wrap_w(data, 4),
        ModelKind::PointOnLine => wrap_w(data, 5),
        ModelKind::PlanarRelaxed => wrap_w(data, 1),
        ModelKind::PrismaticRelaxed => wrap_w(data, 2),
        ModelKind::AxialRelaxed => {
            wrap_w(data, 3);
            data[5] = data[5].abs();
        }
    }
}

// ---------------------------------------------------------------------------
// IRLS driver
// ---------------------------------------------------------------------------

/// Fit `kind` to a segment with iteratively reweighted quasi-Newton
/// regression. Deterministic for a fixed `seed`.
pub fn fit(
    kind: ModelKind,
    samples: &[Sample],
    config: &FitConfig,
    seed: u64,
) -> Result<FitResult> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} samples is too few to fit {kind}",
            samples.len()
        )));
    }
    let combined = config.mode == FitMode::Combined;
    let n = param_len(kind);
    let base = initial_guess(kind, samples);
    debug_assert_eq!(base.len(), n);

    // jitter scale: positional entries by a tenth of the motion extent,
    // angular entries by 0.2 rad
    let (_, _, vals) = position_pca(samples);
    let extent = vals[2].sqrt().max(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, usize)> = None;
    for restart in 0..=config.restarts {
        let mut x = base.clone();
        if restart > 0 {
            for xi in x.iter_mut() {
                let scale = if xi.abs() > 2.0 * std::f64::consts::PI {
                    0.1 * extent
                } else {
                    (0.1 * extent).max(0.1)
                };
                *xi += (rng.gen::<f64>() * 2.0 - 1.0) * scale;
            }
        }
        let mut weights = vec![1.0 / samples.len() as f64; samples.len()];
        let mut rounds = 0;
        for _ in 0..config.irls_iterations {
            let res = minimize(
                |p| {
                    grad_objective(
                        kind,
                        p,
                        samples,
                        &weights,
                        combined,
                        config.param_penalty_weight,
                    )
                },
                &x,
                &config.optimizer,
            );
            let stalled = res.iters == 0;
            x = res.x;
            rounds += 1;
            // reweight by per-sample error magnitude
            let mut delta: f64 = 0.0;
            let mut raw: Vec<f64> = Vec::with_capacity(samples.len());
            for s in samples {
                let e = sample_error_generic(kind, &x, s, combined);
                raw.push(1.0 / (1.0 + e.powf(config.irls_exponent)));
            }
            let sum: f64 = raw.iter().sum();
            for (w, r) in weights.iter_mut().zip(&raw) {
                let nw = r / sum;
                delta = delta.max((nw - *w).abs());
                *w = nw;
            }
            if stalled && delta < 1e-12 {
                break;
            }
        }
        canonicalize(kind, &mut x);
        let score = objective_generic(
            kind,
            &x,
            samples,
            &weights,
            combined,
            config.param_penalty_weight,
        );
        if best
            .as_ref()
            .map(|(s, _, _, _)| score < *s)
            .unwrap_or(true)
        {
            best = Some((score, x, weights, rounds));
        }
    }
    let (score, x, weights, rounds) = best.expect("at least one restart runs");
    let params = ParamVector::new(kind, x)?;
    Ok(FitResult {
        k_error: k_error(&params, samples),
        w_error: w_error(&params, samples),
        params,
        objective: score,
        weights,
        iterations: rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn planar_samples(d: f64, n: Vec3) -> Vec<Sample> {
        let n = n.normalized();
        let ex = Vec3::new(1.0, 0.0, 0.0);
        let u = {
            let p = ex - n.scale(ex.dot(n));
            p.normalized()
        };
        let v = n.cross(u);
        (0..120)
            .map(|i| {
                let t = i as f64 / 120.0;
                let x = 0.2 * (2.0 * t).sin();
                let y = 0.15 * (3.0 * t + 0.4).cos();
                Sample {
                    t,
                    r: n.scale(d) + u.scale(x) + v.scale(y),
                    q: UnitQuaternion::identity(),
                    f: n.scale(2.0 + t),
                    n: Vec3::ZERO,
                    v: u.scale(0.4 * (2.0 * t).cos()) - v.scale(0.45 * (3.0 * t + 0.4).sin()),
                    omega: Vec3::ZERO,
                }
            })
            .collect()
    }

    #[test]
    fn wrench_residual_planar_pure_normal_force() {
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.3, 0.0, 0.0]).unwrap();
        let s = Sample {
            t: 0.0,
            r: Vec3::new(0.1, 0.2, 0.3),
            q: UnitQuaternion::identity(),
            f: Vec3::new(0.0, 0.0, -5.0),
            n: Vec3::ZERO,
            v: Vec3::ZERO,
            omega: Vec3::ZERO,
        };
        let (resid, lambda) = wrench_residual(&alpha, &s);
        assert!(resid < 1e-9, "resid {resid}");
        assert_abs_diff_eq!(lambda[0], -5.0, epsilon = 1e-6);
    }

    #[test]
    fn wrench_residual_detects_in_plane_force() {
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.3, 0.0, 0.0]).unwrap();
        let s = Sample {
            t: 0.0,
            r: Vec3::new(0.1, 0.2, 0.3),
            q: UnitQuaternion::identity(),
            f: Vec3::new(3.0, 0.0, -4.0),
            n: Vec3::ZERO,
            v: Vec3::ZERO,
            omega: Vec3::ZERO,
        };
        // at rest no friction direction: the 3 N tangential force cannot be
        // explained by the plane constraint
        let (resid, _) = wrench_residual(&alpha, &s);
        assert_abs_diff_eq!(resid, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn k_error_zero_on_constraint() {
        let samples = planar_samples(0.25, Vec3::new(0.0, 0.0, 1.0));
        let alpha = ParamVector::new(ModelKind::PlanarRelaxed, vec![0.25, 0.0, 0.0]).unwrap();
        assert!(k_error(&alpha, &samples) < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let samples = planar_samples(0.1, Vec3::new(0.2, -0.1, 0.9));
        let weights = vec![1.0 / samples.len() as f64; samples.len()];
        let x0 = vec![0.15, 0.1, -0.2];
        let (_, g) = grad_objective(
            ModelKind::PlanarRelaxed,
            &x0,
            &samples,
            &weights,
            true,
            1000.0,
        );
        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[i] += h;
            xm[i] -= h;
            let fp = objective_generic(
                ModelKind::PlanarRelaxed,
                &xp,
                &samples,
                &weights,
                true,
                1000.0,
            );
            let fm = objective_generic(
                ModelKind::PlanarRelaxed,
                &xm,
                &samples,
                &weights,
                true,
                1000.0,
            );
            let fd = (fp - fm) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-5, "var {i}: {} vs {}", g[i], fd);
        }
    }

    #[test]
    fn fit_planar_relaxed_recovers_plane() {
        let samples = planar_samples(0.25, Vec3::new(0.1, -0.2, 1.0));
        let cfg = FitConfig {
            irls_iterations: 20,
            restarts: 2,
            ..Default::default()
        };
        let res = fit(ModelKind::PlanarRelaxed, &samples, &cfg, 7).unwrap();
        // every sample should lie on the recovered plane
        assert!(
            res.k_error / samples.len() as f64 * 1000.0 < 0.5,
            "mean plane distance {} m",
            res.k_error / samples.len() as f64
        );
        let w = res.params.data();
        assert!((w[1] * w[1] + w[2] * w[2]).sqrt() <= std::f64::consts::PI);
    }

    #[test]
    fn canonicalize_restores_unit_params() {
        let mut data = vec![0.2, 0.3, 1.9, 0.5, 0.4, 7.0];
        canonicalize(ModelKind::Planar, &mut data);
        let t2 = data[0] * data[0] + data[1] * data[1] + data[2] * data[2];
        assert_abs_diff_eq!(t2, 1.0, epsilon = 1e-12);
        let wn = (data[4] * data[4] + data[5] * data[5]).sqrt();
        assert!(wn <= std::f64::consts::PI);
    }

    #[test]
    fn fit_rejects_tiny_segments() {
        let samples = planar_samples(0.1, Vec3::new(0.0, 0.0, 1.0));
        assert!(matches!(
            fit(
                ModelKind::PlanarRelaxed,
                &samples[..1],
                &FitConfig::default(),
                0
            ),
            Err(Error::InsufficientData(_))
        ));
    }
}
