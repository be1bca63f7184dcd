//! Forward generator of labeled ground-truth demonstrations: poses that
//! satisfy a chosen constraint exactly, reaction wrenches from sampled
//! Lagrange multipliers, per-kind friction along the sliding direction, and
//! Gaussian measurement noise added last.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Demonstration, Sample, UnitQuaternion, Vec3};
use crate::models::{
    jacobians_generic, param_constraint_len, phi_params, ModelKind, ParamVector,
};
use crate::segmentation::Segment;

/// Parametric free-coordinate paths. Coordinates are meters for sliding
/// kinds and radians for axial kinds; the second coordinate is ignored by
/// one-dimensional motions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Motion {
    /// Two-coordinate figure: `x = ax sin(2 pi fx t)`,
    /// `y = ay sin(2 pi fy t + phase)`.
    Lissajous {
        amp_x: f64,
        amp_y: f64,
        freq_x: f64,
        freq_y: f64,
        phase: f64,
    },
    /// Oscillation along one coordinate: `s = amp sin(2 pi freq t)`.
    Line { amp: f64, freq: f64 },
    /// Constant-rate sweep from `start_rad` to `end_rad` over the duration.
    Arc { start_rad: f64, end_rad: f64 },
    /// Smoothstep interpolation through waypoints, uniformly spaced in time.
    Scripted { waypoints: Vec<[f64; 2]> },
}

impl Motion {
    /// Coordinates and their time derivatives at `t` for a spec of total
    /// duration `total`.
    fn eval(&self, t: f64, total: f64) -> ([f64; 2], [f64; 2]) {
        use std::f64::consts::TAU;
        match self {
            Motion::Lissajous {
                amp_x,
                amp_y,
                freq_x,
                freq_y,
                phase,
            } => {
                let (wx, wy) = (TAU * freq_x, TAU * freq_y);
                (
                    [amp_x * (wx * t).sin(), amp_y * (wy * t + phase).sin()],
                    [
                        amp_x * wx * (wx * t).cos(),
                        amp_y * wy * (wy * t + phase).cos(),
                    ],
                )
            }
            Motion::Line { amp, freq } => {
                let w = TAU * freq;
                ([amp * (w * t).sin(), 0.0], [amp * w * (w * t).cos(), 0.0])
            }
            Motion::Arc { start_rad, end_rad } => {
                let rate = (end_rad - start_rad) / total;
                ([start_rad + rate * t, 0.0], [rate, 0.0])
            }
            Motion::Scripted { waypoints } => {
                let n = waypoints.len();
                if n == 1 {
                    return ([waypoints[0][0], waypoints[0][1]], [0.0, 0.0]);
                }
                let span = total / (n - 1) as f64;
                let seg = ((t / span) as usize).min(n - 2);
                let tau = ((t - seg as f64 * span) / span).clamp(0.0, 1.0);
                let h = tau * tau * (3.0 - 2.0 * tau);
                let dh = 6.0 * tau * (1.0 - tau) / span;
                let a = waypoints[seg];
                let b = waypoints[seg + 1];
                (
                    [a[0] + (b[0] - a[0]) * h, a[1] + (b[1] - a[1]) * h],
                    [(b[0] - a[0]) * dh, (b[1] - a[1]) * dh],
                )
            }
        }
    }

    fn compatible_with(&self, kind: ModelKind) -> bool {
        use ModelKind::*;
        match self {
            Motion::Lissajous { .. } => {
                matches!(kind, PointOnPlane | Planar | PlanarRelaxed)
            }
            Motion::Line { .. } => {
                matches!(kind, PointOnLine | Prismatic | PrismaticRelaxed)
            }
            Motion::Arc { .. } => matches!(kind, Axial | AxialRelaxed),
            Motion::Scripted { .. } => true,
        }
    }
}

/// Measurement noise standard deviations, applied independently per axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_r_m: f64,
    pub sigma_q_rad: f64,
    pub sigma_f_n: f64,
    pub sigma_n_nm: f64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec {
        sigma_r_m: 0.0,
        sigma_q_rad: 0.0,
        sigma_f_n: 0.0,
        sigma_n_nm: 0.0,
    };
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma_r_m: 0.0005,
            sigma_q_rad: 0.2_f64.to_radians(),
            sigma_f_n: 0.05,
            sigma_n_nm: 0.005,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: ModelKind,
    pub alpha_true: ParamVector,
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    pub motion: Motion,
    /// Range the sampled multiplier magnitudes stay within, N.
    #[serde(default = "default_lambda_range")]
    pub lambda_range: [f64; 2],
    /// Friction coefficient; zero disables friction.
    #[serde(default)]
    pub mu: f64,
    #[serde(default = "NoiseSpec::default")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
}

fn default_rate() -> f64 {
    120.0
}

fn default_lambda_range() -> [f64; 2] {
    [1.0, 10.0]
}

/// A demonstration with ground-truth constraint labels.
#[derive(Clone, Debug)]
pub struct LabeledDemonstration {
    pub demo: Demonstration,
    pub true_segments: Vec<(Segment, ModelKind, ParamVector)>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, sigma: f64) -> Vec3 {
    Vec3::new(
        sigma * gaussian(rng),
        sigma * gaussian(rng),
        sigma * gaussian(rng),
    )
}

/// Smooth multiplier profile staying inside `[lo, hi]` with positive sign.
struct LambdaProfile {
    base: Vec<f64>,
    amp: Vec<f64>,
    freq: Vec<f64>,
    phase: Vec<f64>,
}

impl LambdaProfile {
    fn sample(rng: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Self {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let mut p = LambdaProfile {
            base: vec![],
            amp: vec![],
            freq: vec![],
            phase: vec![],
        };
        for _ in 0..k {
            p.base.push(mid + half * 0.3 * (rng.gen::<f64>() * 2.0 - 1.0));
            p.amp.push(half * (0.2 + 0.4 * rng.gen::<f64>()));
            p.freq.push(0.2 + 1.3 * rng.gen::<f64>());
            p.phase.push(std::f64::consts::TAU * rng.gen::<f64>());
        }
        p
    }

    fn at(&self, j: usize, t: f64) -> f64 {
        self.base[j] + self.amp[j] * (std::f64::consts::TAU * self.freq[j] * t + self.phase[j]).sin()
    }
}

/// Shortest-arc unit quaternion rotating `a` onto `b` (both unit).
fn quat_between(a: Vec3, b: Vec3) -> UnitQuaternion {
    let c = a.cross(b);
    let w = 1.0 + a.dot(b);
    if w < 1e-9 {
        // antiparallel: rotate pi about any axis orthogonal to a
        let axis = if a.x.abs() < 0.9 {
            a.cross(Vec3::new(1.0, 0.0, 0.0)).normalized()
        } else {
            a.cross(Vec3::new(0.0, 1.0, 0.0)).normalized()
        };
        return UnitQuaternion::new(0.0, axis.x, axis.y, axis.z).expect("unit axis");
    }
    UnitQuaternion::new(w, c.x, c.y, c.z).expect("valid arc")
}

/// Quaternion whose rotation matrix has the given (orthonormal) columns.
fn quat_from_columns(c0: Vec3, c1: Vec3, c2: Vec3) -> UnitQuaternion {
    let m = nalgebra::Matrix3::new(c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z);
    let rot = nalgebra::Rotation3::from_matrix_unchecked(m);
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
    UnitQuaternion::new(q.w, q.i, q.j, q.k).expect("rotation quaternion")
}

/// Smooth free-orientation wobble about a base quaternion with exact
/// angular velocity.
struct Wobble {
    a1: Vec3,
    a2: Vec3,
    amp1: f64,
    amp2: f64,
    f1: f64,
    f2: f64,
    p1: f64,
    p2: f64,
    base: UnitQuaternion,
}

impl Wobble {
    fn sample(rng: &mut ChaCha8Rng, base: UnitQuaternion, amplitude: f64) -> Self {
        let rand_axis = |rng: &mut ChaCha8Rng| loop {
            let v = Vec3::new(
                rng.gen::<f64>() * 2.0 - 1.0,
                rng.gen::<f64>() * 2.0 - 1.0,
                rng.gen::<f64>() * 2.0 - 1.0,
            );
            if v.norm() > 0.1 {
                return v.normalized();
            }
        };
        Wobble {
            a1: rand_axis(rng),
            a2: rand_axis(rng),
            amp1: amplitude * (0.6 + 0.4 * rng.gen::<f64>()),
            amp2: amplitude * (0.6 + 0.4 * rng.gen::<f64>()),
            f1: 0.5 + 0.8 * rng.gen::<f64>(),
            f2: 0.3 + 0.7 * rng.gen::<f64>(),
            p1: std::f64::consts::TAU * rng.gen::<f64>(),
            p2: std::f64::consts::TAU * rng.gen::<f64>(),
            base,
        }
    }

    /// Orientation and global-frame angular velocity at `t`.
    fn at(&self, t: f64) -> (UnitQuaternion, Vec3) {
        use std::f64::consts::TAU;
        let th1 = self.amp1 * (TAU * self.f1 * t + self.p1).sin();
        let th2 = self.amp2 * (TAU * self.f2 * t + self.p2).sin();
        let dth1 = self.amp1 * TAU * self.f1 * (TAU * self.f1 * t + self.p1).cos();
        let dth2 = self.amp2 * TAU * self.f2 * (TAU * self.f2 * t + self.p2).cos();
        let q1 = UnitQuaternion::exp(self.a1.scale(th1));
        let q2 = UnitQuaternion::exp(self.a2.scale(th2));
        let q = q1.mul(q2).mul(self.base);
        // d/dt (q1 q2) = [omega]x with omega = th1' a1 + R(q1) th2' a2
        let omega = self.a1.scale(dth1) + q1.rotate(self.a2.scale(dth2));
        (q, omega)
    }
}

/// Frame axes `(u, v, n)` encoded by the exponential coordinates of `alpha`
/// at flat indices `(i, i+1)`.
fn alpha_frame(alpha: &ParamVector, i: usize) -> (Vec3, Vec3, Vec3) {
    let d = alpha.data();
    let e = crate::kinematics::exp_map(Vec3::new(d[i], d[i + 1], 0.0));
    (
        Vec3::new(e[(0, 0)], e[(1, 0)], e[(2, 0)]),
        Vec3::new(e[(0, 1)], e[(1, 1)], e[(2, 1)]),
        Vec3::new(e[(0, 2)], e[(1, 2)], e[(2, 2)]),
    )
}

fn v3(d: &[f64], i: usize) -> Vec3 {
    Vec3::new(d[i], d[i + 1], d[i + 2])
}

/// Pose and exact velocities of one sample on the constraint.
struct TruePose {
    r: Vec3,
    q: UnitQuaternion,
    v: Vec3,
    omega: Vec3,
}

/// Per-kind noiseless trajectory synthesis.
struct Generator<'a> {
    spec: &'a SynthSpec,
    wobble: Wobble,
    /// Extra scalar profile driving the in-constraint rotation of Planar
    /// (yaw about the normal).
    yaw_amp: f64,
    yaw_freq: f64,
    yaw_phase: f64,
    /// Fixed base orientation for kinds whose q is constrained.
    q0: UnitQuaternion,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SynthSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        use ModelKind::*;
        let a = spec.alpha_true.data();
        let q0 = match spec.kind {
            Planar => {
                // A(q0) tbar = n
                let (_, _, n) = alpha_frame(&spec.alpha_true, 4);
                let t = v3(a, 0);
                quat_between(t.normalized(), n)
            }
            Prismatic => {
                // A(q0) sbar = n (motion axis), A(q0) tbar = v
                let (_, v, n) = alpha_frame(&spec.alpha_true, 8);
                let s = v3(a, 3);
                let t = v3(a, 0);
                let q = quat_from_columns(n, v, n.cross(v));
                let body = quat_from_columns(s, t, s.cross(t));
                q.mul(body.conj())
            }
            Axial => {
                // A(q0) maps the (normalized) arm into the rotation plane
                let (u, v, n) = alpha_frame(&spec.alpha_true, 9);
                let s = v3(a, 3);
                let sn = s.norm();
                if sn < 1e-9 {
                    return Err(Error::InvalidSpec(
                        "axial radius (|sbar|) must be positive".into(),
                    ));
                }
                let t = v3(a, 0);
                let q = quat_from_columns(u, v, n);
                let shat = s.scale(1.0 / sn);
                let body = quat_from_columns(shat, t, shat.cross(t));
                q.mul(body.conj())
            }
            _ => UnitQuaternion::identity(),
        };
        let free_orientation = matches!(
            spec.kind,
            PointOnPlane | PointOnLine | PlanarRelaxed | PrismaticRelaxed | AxialRelaxed
        );
        let wobble_base = if spec.kind == PointOnPlane || spec.kind == PointOnLine {
            q0
        } else {
            UnitQuaternion::identity()
        };
        let amplitude = if free_orientation { 0.25 } else { 0.0 };
        Ok(Generator {
            spec,
            wobble: Wobble::sample(rng, wobble_base, amplitude),
            yaw_amp: 0.4 + 0.3 * rng.gen::<f64>(),
            yaw_freq: 0.4 + 0.6 * rng.gen::<f64>(),
            yaw_phase: std::f64::consts::TAU * rng.gen::<f64>(),
            q0,
        })
    }

    fn pose_at(&self, t: f64) -> TruePose {
        use std::f64::consts::TAU;
        use ModelKind::*;
        let spec = self.spec;
        let a = spec.alpha_true.data();
        let ([c1, c2], [dc1, dc2]) = spec.motion.eval(t, spec.duration_s);
        match spec.kind {
            PointOnPlane => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 4);
                let sbar = v3(a, 0);
                let p = n.scale(a[3]) + u.scale(c1) + v.scale(c2);
                let dp = u.scale(dc1) + v.scale(dc2);
                let (q, omega) = self.wobble.at(t);
                let arm = q.rotate(sbar);
                TruePose {
                    r: p - arm,
                    q,
                    v: dp - omega.cross(arm),
                    omega,
                }
            }
            PlanarRelaxed => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 1);
                let (q, omega) = self.wobble.at(t);
                TruePose {
                    r: n.scale(a[0]) + u.scale(c1) + v.scale(c2),
                    q,
                    v: u.scale(dc1) + v.scale(dc2),
                    omega,
                }
            }
            Planar => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 4);
                let psi = self.yaw_amp * (TAU * self.yaw_freq * t + self.yaw_phase).sin();
                let dpsi =
                    self.yaw_amp * TAU * self.yaw_freq * (TAU * self.yaw_freq * t + self.yaw_phase).cos();
                let q = UnitQuaternion::exp(n.scale(psi)).mul(self.q0);
                TruePose {
                    r: n.scale(a[3]) + u.scale(c1) + v.scale(c2),
                    q,
                    v: u.scale(dc1) + v.scale(dc2),
                    omega: n.scale(dpsi),
                }
            }
            PointOnLine => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 5);
                let sbar = v3(a, 0);
                let p = u.scale(a[3]) + v.scale(a[4]) + n.scale(c1);
                let (q, omega) = self.wobble.at(t);
                let arm = q.rotate(sbar);
                TruePose {
                    r: p - arm,
                    q,
                    v: n.scale(dc1) - omega.cross(arm),
                    omega,
                }
            }
            Prismatic => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 8);
                TruePose {
                    r: u.scale(a[6]) + v.scale(a[7]) + n.scale(c1),
                    q: self.q0,
                    v: n.scale(dc1),
                    omega: Vec3::ZERO,
                }
            }
            PrismaticRelaxed => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 2);
                let (q, omega) = self.wobble.at(t);
                TruePose {
                    r: u.scale(a[0]) + v.scale(a[1]) + n.scale(c1),
                    q,
                    v: n.scale(dc1),
                    omega,
                }
            }
            Axial => {
                let (_, _, n) = alpha_frame(&spec.alpha_true, 9);
                let sbar = v3(a, 3);
                let d = v3(a, 6);
                let q = UnitQuaternion::exp(n.scale(c1)).mul(self.q0);
                let omega = n.scale(dc1);
                let arm = q.rotate(sbar);
                TruePose {
                    r: d - arm,
                    q,
                    v: -omega.cross(arm),
                    omega,
                }
            }
            AxialRelaxed => {
                let (u, v, n) = alpha_frame(&spec.alpha_true, 3);
                let d = v3(a, 0);
                let l = a[5];
                let radial = u.scale(c1.cos()) + v.scale(c1.sin());
                let tangent = v.scale(c1.cos()) - u.scale(c1.sin());
                let (q, omega) = self.wobble.at(t);
                let _ = n;
                TruePose {
                    r: d + radial.scale(l),
                    q,
                    v: tangent.scale(l * dc1),
                    omega,
                }
            }
        }
    }
}

/// Friction wrench for the generated motion; exactly invertible by
/// `resolve_reaction`.
fn friction_wrench(
    kind: ModelKind,
    alpha: &ParamVector,
    pose: &TruePose,
    f_r: Vec3,
    n_r: Vec3,
    mu: f64,
) -> (Vec3, Vec3) {
    use ModelKind::*;
    if mu == 0.0 {
        return (Vec3::ZERO, Vec3::ZERO);
    }
    let dir = |v: Vec3| -> Option<Vec3> {
        let n = v.norm();
        (n > 1e-6).then(|| v.scale(1.0 / n))
    };
    match kind {
        PointOnPlane | PointOnLine => {
            let arm = pose.q.rotate(v3(alpha.data(), 0));
            let v_s = pose.v + pose.omega.cross(arm);
            match dir(v_s) {
                Some(vhat) => {
                    let f_mu = vhat.scale(-mu * f_r.norm());
                    (f_mu, arm.cross(f_mu))
                }
                None => (Vec3::ZERO, Vec3::ZERO),
            }
        }
        Planar | PlanarRelaxed | PrismaticRelaxed | AxialRelaxed => {
            let f_mu = dir(pose.v)
                .map(|vh| vh.scale(-mu * f_r.norm()))
                .unwrap_or(Vec3::ZERO);
            let n_mu = dir(pose.omega)
                .map(|wh| wh.scale(-mu * (0.1 * f_r.norm() + n_r.norm())))
                .unwrap_or(Vec3::ZERO);
            (f_mu, n_mu)
        }
        Prismatic => {
            let f_mu = dir(pose.v)
                .map(|vh| vh.scale(-mu * f_r.norm()))
                .unwrap_or(Vec3::ZERO);
            (f_mu, Vec3::ZERO)
        }
        Axial => {
            let n_mu = dir(pose.omega)
                .map(|wh| wh.scale(-mu * (0.1 * f_r.norm() + n_r.norm())))
                .unwrap_or(Vec3::ZERO);
            (Vec3::ZERO, n_mu)
        }
    }
}

/// Generate one constrained demonstration per `spec`.
pub fn generate(spec: &SynthSpec) -> Result<LabeledDemonstration> {
    let samples = generate_samples(spec, 0.0)?;
    let n = samples.len();
    let demo = Demonstration::new(samples, spec.rate_hz)?;
    Ok(LabeledDemonstration {
        true_segments: vec![(
            Segment {
                start_idx: 0,
                end_idx: n - 1,
            },
            spec.kind,
            spec.alpha_true.clone(),
        )],
        demo,
    })
}

/// Raw sample synthesis with a time offset (used by `script_task` for
/// concatenation).
fn generate_samples(spec: &SynthSpec, t0: f64) -> Result<Vec<Sample>> {
    if !(spec.duration_s > 0.0) || !(spec.rate_hz > 0.0) {
        return Err(Error::InvalidSpec("duration and rate must be positive".into()));
    }
    if spec.alpha_true.kind() != spec.kind {
        return Err(Error::InvalidSpec(format!(
            "alpha_true is for {}, spec kind is {}",
            spec.alpha_true.kind(),
            spec.kind
        )));
    }
    if !spec.motion.compatible_with(spec.kind) {
        return Err(Error::InvalidSpec(format!(
            "motion is incompatible with {}",
            spec.kind
        )));
    }
    if param_constraint_len(spec.kind) > 0 {
        let viol = phi_params(&spec.alpha_true)
            .iter()
            .map(|p| p.abs())
            .fold(0.0, f64::max);
        if viol > 1e-9 {
            return Err(Error::InvalidSpec(format!(
                "alpha_true violates parameter constraints by {viol:.3e}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gen = Generator::new(spec, &mut rng)?;
    let k = crate::models::model_info(spec.kind).k;
    let profile = LambdaProfile::sample(&mut rng, k, spec.lambda_range[0], spec.lambda_range[1]);
    let count = (spec.duration_s * spec.rate_hz).round() as usize;
    let mut out = Vec::with_capacity(count);
    let a = spec.alpha_true.data();
    for i in 0..count {
        let t = i as f64 / spec.rate_hz;
        let pose = gen.pose_at(t);
        let ((jr, _), (jp, _)) = jacobians_generic(spec.kind, a, pose.r.g(), pose.q.g());
        let mut f_r = Vec3::ZERO;
        let mut n_r = Vec3::ZERO;
        for j in 0..k {
            let lam = profile.at(j, t);
            f_r = f_r - Vec3::from_g(jr[j].scale(lam));
            n_r = n_r - Vec3::from_g(jp[j].scale(lam));
        }
        let (f_mu, n_mu) = friction_wrench(spec.kind, &spec.alpha_true, &pose, f_r, n_r, spec.mu);
        let mut s = Sample {
            t: t0 + t,
            r: pose.r,
            q: pose.q,
            f: f_r + f_mu,
            n: n_r + n_mu,
            v: pose.v,
            omega: pose.omega,
        };
        // measurement noise last; velocities stay at their analytic values
        s.r = s.r + gaussian_vec(&mut rng, spec.noise.sigma_r_m);
        if spec.noise.sigma_q_rad > 0.0 {
            s.q = UnitQuaternion::exp(gaussian_vec(&mut rng, spec.noise.sigma_q_rad)).mul(s.q);
        }
        s.f = s.f + gaussian_vec(&mut rng, spec.noise.sigma_f_n);
        s.n = s.n + gaussian_vec(&mut rng, spec.noise.sigma_n_nm);
        out.push(s);
    }
    Ok(out)
}

/// One step of a scripted multi-constraint task.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScriptStep {
    /// Unconstrained carry: gentle drifting motion with a smooth force bump
    /// peaking at `force_amp` (set below the segmentation threshold for
    /// true free space, above it to synthesize a false-positive segment).
    Free {
        duration_s: f64,
        force_amp: f64,
        #[serde(default)]
        seed: u64,
    },
    Constrained(SynthSpec),
}

/// Concatenate script steps into one demonstration with labels for the
/// constrained parts.
pub fn script_task(script: &[ScriptStep], rate_hz: f64) -> Result<LabeledDemonstration> {
    if !(rate_hz > 0.0) {
        return Err(Error::InvalidSpec("rate must be positive".into()));
    }
    let mut samples: Vec<Sample> = Vec::new();
    let mut labels = Vec::new();
    let mut last_pose = (Vec3::ZERO, UnitQuaternion::identity());
    for step in script {
        let start = samples.len();
        let t0 = start as f64 / rate_hz;
        match step {
            ScriptStep::Free {
                duration_s,
                force_amp,
                seed,
            } => {
                let part = free_samples(
                    *duration_s,
                    rate_hz,
                    t0,
                    last_pose,
                    *force_amp,
                    *seed,
                )?;
                samples.extend(part);
            }
            ScriptStep::Constrained(spec) => {
                if (spec.rate_hz - rate_hz).abs() > 1e-9 {
                    return Err(Error::InvalidSpec(
                        "all script steps must share the sample rate".into(),
                    ));
                }
                let part = generate_samples(spec, t0)?;
                let end = start + part.len() - 1;
                samples.extend(part);
                labels.push((
                    Segment {
                        start_idx: start,
                        end_idx: end,
                    },
                    spec.kind,
                    spec.alpha_true.clone(),
                ));
            }
        }
        if let Some(s) = samples.last() {
            last_pose = (s.r, s.q);
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidSpec("empty script".into()));
    }
    Ok(LabeledDemonstration {
        demo: Demonstration::new(samples, rate_hz)?,
        true_segments: labels,
    })
}

/// Free-space wander around the previous pose: 3-D drift, orientation
/// wobble, and a smooth force bump that vanishes at both ends.
fn free_samples(
    duration_s: f64,
    rate_hz: f64,
    t0: f64,
    from: (Vec3, UnitQuaternion),
    force_amp: f64,
    seed: u64,
) -> Result<Vec<Sample>> {
    use std::f64::consts::{PI, TAU};
    if !(duration_s > 0.0) {
        return Err(Error::InvalidSpec("free step needs positive duration".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f4ee);
    let wobble = Wobble::sample(&mut rng, from.1, 0.2);
    let amp = Vec3::new(
        0.02 + 0.02 * rng.gen::<f64>(),
        0.02 + 0.02 * rng.gen::<f64>(),
        0.02 + 0.02 * rng.gen::<f64>(),
    );
    let freq = Vec3::new(
        0.5 + 0.5 * rng.gen::<f64>(),
        0.4 + 0.5 * rng.gen::<f64>(),
        0.6 + 0.5 * rng.gen::<f64>(),
    );
    let fdir = {
        let v = Vec3::new(
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        );
        if v.norm() > 1e-3 {
            v.normalized()
        } else {
            Vec3::new(1.0, 0.0, 0.0)
        }
    };
    let count = (duration_s * rate_hz).round() as usize;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / rate_hz;
        // sin^2 envelope: zero displacement/force at both step boundaries
        let env = (PI * t / duration_s).sin().powi(2);
        let denv = 2.0 * (PI * t / duration_s).sin() * (PI * t / duration_s).cos() * PI
            / duration_s;
        let osc = Vec3::new(
            amp.x * (TAU * freq.x * t).sin(),
            amp.y * (TAU * freq.y * t).sin(),
            amp.z * (TAU * freq.z * t).sin(),
        );
        let dosc = Vec3::new(
            amp.x * TAU * freq.x * (TAU * freq.x * t).cos(),
            amp.y * TAU * freq.y * (TAU * freq.y * t).cos(),
            amp.z * TAU * freq.z * (TAU * freq.z * t).cos(),
        );
        let (q, omega) = wobble.at(t);
        out.push(Sample {
            t: t0 + t,
            r: from.0 + osc.scale(env),
            q,
            f: fdir.scale(force_amp * env),
            n: Vec3::ZERO,
            v: dosc.scale(env) + osc.scale(denv),
            omega,
        });
    }
    Ok(out)
}
