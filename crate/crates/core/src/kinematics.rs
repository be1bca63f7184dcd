//! Rigid-body math shared by every other module: quaternion and rotation
//! algebra, the exponential map, the virtual-rotation Jacobian conversion and
//! velocity estimation from pose series.
//!
//! Conventions: quaternions are scalar-first `(e0, ex, ey, ez)` with Hamilton
//! products; angular velocities are expressed in the global frame.

use nalgebra::{DMatrix, Matrix3, SMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{exp_quat, Q4, V3};

/// Plain 3-vector carrying positions (m), forces (N), moments (N m) or
/// angular velocities (rad/s) depending on role.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        self.scale(1.0 / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub(crate) fn g(self) -> V3<f64> {
        V3::new(self.x, self.y, self.z)
    }

    pub(crate) fn from_g(v: V3<f64>) -> Vec3 {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Vec3 {
        Vec3::new(a[0], a[1], a[2])
    }
}

/// Unit quaternion in Spin(3), scalar part first.
///
/// Every constructor normalizes, so a held value is unit-norm to machine
/// precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    e0: f64,
    e: Vec3,
}

impl UnitQuaternion {
    /// Build from raw components, normalizing. Rejects non-finite or
    /// near-zero input.
    pub fn new(e0: f64, ex: f64, ey: f64, ez: f64) -> Result<Self> {
        let n2 = e0 * e0 + ex * ex + ey * ey + ez * ez;
        if !n2.is_finite() || n2 < 1e-12 {
            return Err(Error::invalid(format!(
                "quaternion norm^2 {n2:.3e} not normalizable"
            )));
        }
        let inv = 1.0 / n2.sqrt();
        Ok(UnitQuaternion {
            e0: e0 * inv,
            e: Vec3::new(ex * inv, ey * inv, ez * inv),
        })
    }

    pub fn identity() -> Self {
        UnitQuaternion {
            e0: 1.0,
            e: Vec3::ZERO,
        }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let n = axis.norm();
        if n < 1e-12 {
            return Err(Error::invalid("zero rotation axis"));
        }
        let h = 0.5 * angle;
        let s = h.sin() / n;
        UnitQuaternion::new(h.cos(), axis.x * s, axis.y * s, axis.z * s)
    }

    /// Exponential of a rotation vector.
    pub fn exp(w: Vec3) -> Self {
        let q = exp_quat(w.g());
        UnitQuaternion {
            e0: q.w,
            e: Vec3::from_g(q.v),
        }
    }

    pub fn scalar(self) -> f64 {
        self.e0
    }

    pub fn vector(self) -> Vec3 {
        self.e
    }

    pub fn conj(self) -> Self {
        UnitQuaternion {
            e0: self.e0,
            e: -self.e,
        }
    }

    /// Hamilton product `self * o`.
    pub fn mul(self, o: UnitQuaternion) -> Self {
        let q = self.g().mul(o.g());
        // renormalize to keep the unit invariant under long chains
        UnitQuaternion::new(q.w, q.v.x, q.v.y, q.v.z).expect("product of unit quaternions")
    }

    pub fn rotate(self, v: Vec3) -> Vec3 {
        Vec3::from_g(self.g().rotate(v.g()))
    }

    /// Rotation vector (axis * angle) of this quaternion, angle in `[0, pi]`.
    pub fn log(self) -> Vec3 {
        let s = self.e.norm();
        if s < 1e-12 {
            return Vec3::ZERO;
        }
        let angle = 2.0 * s.atan2(self.e0.abs());
        let sign = if self.e0 < 0.0 { -1.0 } else { 1.0 };
        self.e.scale(sign * angle / s)
    }

    pub(crate) fn g(self) -> Q4<f64> {
        Q4 {
            w: self.e0,
            v: self.e.g(),
        }
    }

}

/// Rotation angle of a quaternion in `[0, pi]`; symmetric under `q <-> -q`.
pub fn quat_angle(q: UnitQuaternion) -> f64 {
    2.0 * q.vector().norm().atan2(q.scalar().abs())
}

/// Skew-symmetric matrix of `v`: `skew(v) u = v x u`.
pub fn skew(v: Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Orthogonal rotation matrix of a unit quaternion:
/// `A = (e0^2 - e.e) I + 2 e e^T + 2 e0 skew(e)`.
pub fn rotation_matrix(q: UnitQuaternion) -> Matrix3<f64> {
    let e0 = q.scalar();
    let e = q.vector();
    let ev = nalgebra::Vector3::new(e.x, e.y, e.z);
    Matrix3::identity() * (e0 * e0 - e.dot(e)) + ev * ev.transpose() * 2.0 + skew(e) * (2.0 * e0)
}

/// The `G` matrix `[-e | -skew(e) + e0 I]` mapping quaternion rates to
/// body-side angular quantities; satisfies `G q = 0`.
pub fn g_matrix(q: UnitQuaternion) -> SMatrix<f64, 3, 4> {
    let e0 = q.scalar();
    let e = q.vector();
    let right = -skew(e) + Matrix3::identity() * e0;
    let mut g = SMatrix::<f64, 3, 4>::zeros();
    g[(0, 0)] = -e.x;
    g[(1, 0)] = -e.y;
    g[(2, 0)] = -e.z;
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j + 1)] = right[(i, j)];
        }
    }
    g
}

/// Rotation matrix of the exponential map (Rodrigues), with a Taylor branch
/// near zero.
pub fn exp_map(w: Vec3) -> Matrix3<f64> {
    let t2 = w.dot(w);
    let wt = skew(w);
    let (a, b) = if t2 < 1e-16 {
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        let t = t2.sqrt();
        (t.sin() / t, (1.0 - t.cos()) / t2)
    };
    Matrix3::identity() + wt * a + wt * wt * b
}

/// Convert a quaternion-side Jacobian `phi_q` (k x 4) into the
/// virtual-rotation Jacobian `phi_pi = phi_q * (1/2) G^T A^T` (k x 3).
pub fn phi_pi_from_phi_q(phi_q: &DMatrix<f64>, q: UnitQuaternion) -> Result<DMatrix<f64>> {
    if phi_q.ncols() != 4 {
        return Err(Error::invalid(format!(
            "phi_q must have 4 columns, got {}",
            phi_q.ncols()
        )));
    }
    let conv = 0.5 * g_matrix(q).transpose() * rotation_matrix(q).transpose();
    let out = phi_q * conv;
    Ok(DMatrix::from_fn(out.nrows(), 3, |i, j| out[(i, j)]))
}

/// One time-stamped measurement tuple.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Sample {
    /// Time in seconds.
    pub t: f64,
    /// Position of the measurement frame, m, global frame.
    pub r: Vec3,
    /// Orientation of the measurement frame.
    pub q: UnitQuaternion,
    /// Measured force, N, global frame.
    pub f: Vec3,
    /// Measured moment, N m, global frame.
    pub n: Vec3,
    /// Estimated linear velocity, m/s.
    pub v: Vec3,
    /// Estimated angular velocity, rad/s, global frame.
    pub omega: Vec3,
}

/// An ordered, uniformly sampled recording.
#[derive(Clone, Debug)]
pub struct Demonstration {
    samples: Vec<Sample>,
    sample_rate_hz: f64,
}

impl Demonstration {
    /// Validates ordering and spacing (uniform within 1% of the nominal
    /// rate).
    pub fn new(samples: Vec<Sample>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientData("empty demonstration".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let dt = 1.0 / sample_rate_hz;
        for w in samples.windows(2) {
            let step = w[1].t - w[0].t;
            if step <= 0.0 {
                return Err(Error::invalid("sample times must be strictly increasing"));
            }
            if (step - dt).abs() > 0.01 * dt {
                return Err(Error::invalid(format!(
                    "non-uniform sampling: step {step:.6e}s vs nominal {dt:.6e}s"
                )));
            }
        }
        Ok(Demonstration {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Populate `v` and `omega` by differencing the pose series.
///
/// Linear velocity is the central difference of `r`; angular velocity comes
/// from the relative rotation `q_{i+1} * conj(q_{i-1})` over the spanned
/// interval (global frame). Endpoints use one-sided differences. An optional
/// centered moving average of length `window` smooths both series.
pub fn estimate_velocities(demo: &Demonstration, window: usize) -> Result<Demonstration> {
    let s = demo.samples();
    let n = s.len();
    if n < 3 {
        return Err(Error::InsufficientData(
            "velocity estimation needs at least 3 samples".into(),
        ));
    }
    let mut v = vec![Vec3::ZERO; n];
    let mut w = vec![Vec3::ZERO; n];
    for i in 0..n {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let dt = s[b].t - s[a].t;
        v[i] = (s[b].r - s[a].r).scale(1.0 / dt);
        let rel = s[b].q.mul(s[a].q.conj());
        w[i] = rel.log().scale(1.0 / dt);
    }
    let (v, w) = if window > 1 {
        (moving_average(&v, window), moving_average(&w, window))
    } else {
        (v, w)
    };
    let samples = s
        .iter()
        .enumerate()
        .map(|(i, smp)| Sample {
            v: v[i],
            omega: w[i],
            ..*smp
        })
        .collect();
    Demonstration::new(samples, demo.sample_rate_hz())
}

fn moving_average(series: &[Vec3], window: usize) -> Vec<Vec3> {
    let half = window / 2;
    let n = series.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            let mut acc = Vec3::ZERO;
            for s in &series[lo..hi] {
                acc = acc + *s;
            }
            acc.scale(1.0 / (hi - lo) as f64)
        })
        .collect()
}
