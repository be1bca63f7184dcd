//! Scalar abstraction used by the constraint models.
//!
//! All residuals, Jacobians and friction resolutions are written once,
//! generically over [`Real`], and evaluated either with plain `f64` or with
//! forward-mode dual numbers ([`Dual`]) when a gradient is needed. The dual
//! carries a fixed-width derivative lane so no allocation happens in the hot
//! path; [`MAX_VARS`] covers the largest parameter vector (11 scalars for the
//! axial model) and the 7-variable pose projection.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Width of the dual-number derivative lane.
pub const MAX_VARS: usize = 12;

/// Smoothing constant for norms that must stay differentiable at zero.
pub const NORM_EPS: f64 = 1e-18;

/// Scalar trait: `f64` or a forward-mode dual.
pub trait Real:
    Copy
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Lift a constant (zero derivative).
    fn c(x: f64) -> Self;
    /// Real part.
    fn re(self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn abs(self) -> Self;

    fn zero() -> Self {
        Self::c(0.0)
    }
    fn one() -> Self {
        Self::c(1.0)
    }
}

impl Real for f64 {
    #[inline]
    fn c(x: f64) -> Self {
        x
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// Forward-mode dual number with `N` derivative directions. `N` defaults
/// to [`MAX_VARS`]; narrower widths keep the hot loops short for models
/// with few parameters.
#[derive(Clone, Copy, Debug)]
pub struct Dual<const N: usize = MAX_VARS> {
    pub re: f64,
    pub dx: [f64; N],
}

impl<const N: usize> Dual<N> {
    /// Variable `i` seeded with unit derivative.
    pub fn var(value: f64, i: usize) -> Self {
        let mut dx = [0.0; N];
        dx[i] = 1.0;
        Dual { re: value, dx }
    }
}

impl<const N: usize> PartialEq for Dual<N> {
    fn eq(&self, other: &Self) -> bool {
        self.re == other.re
    }
}

impl<const N: usize> PartialOrd for Dual<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.re.partial_cmp(&other.re)
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Dual<N>;
    #[inline]
    fn add(self, o: Dual<N>) -> Dual<N> {
        let mut dx = self.dx;
        for i in 0..N {
            dx[i] += o.dx[i];
        }
        Dual {
            re: self.re + o.re,
            dx,
        }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Dual<N>;
    #[inline]
    fn sub(self, o: Dual<N>) -> Dual<N> {
        let mut dx = self.dx;
        for i in 0..N {
            dx[i] -= o.dx[i];
        }
        Dual {
            re: self.re - o.re,
            dx,
        }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Dual<N>;
    #[inline]
    fn mul(self, o: Dual<N>) -> Dual<N> {
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = self.dx[i] * o.re + self.re * o.dx[i];
        }
        Dual {
            re: self.re * o.re,
            dx,
        }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Dual<N>;
    #[inline]
    fn div(self, o: Dual<N>) -> Dual<N> {
        let inv = 1.0 / o.re;
        let v = self.re * inv;
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = (self.dx[i] - v * o.dx[i]) * inv;
        }
        Dual { re: v, dx }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Dual<N>;
    #[inline]
    fn neg(self) -> Dual<N> {
        let mut dx = self.dx;
        for d in &mut dx {
            *d = -*d;
        }
        Dual { re: -self.re, dx }
    }
}

impl<const N: usize> Real for Dual<N> {
    #[inline]
    fn c(x: f64) -> Self {
        Dual {
            re: x,
            dx: [0.0; N],
        }
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        let k = 0.5 / s;
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= k;
        }
        Dual { re: s, dx }
    }
    #[inline]
    fn sin(self) -> Self {
        let c = self.re.cos();
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= c;
        }
        Dual {
            re: self.re.sin(),
            dx,
        }
    }
    #[inline]
    fn cos(self) -> Self {
        let s = -self.re.sin();
        let mut dx = self.dx;
        for d in &mut dx {
            *d *= s;
        }
        Dual {
            re: self.re.cos(),
            dx,
        }
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let y = self;
        let denom = 1.0 / (x.re * x.re + y.re * y.re);
        let mut dx = [0.0; N];
        for i in 0..N {
            dx[i] = (x.re * y.dx[i] - y.re * x.dx[i]) * denom;
        }
        Dual {
            re: y.re.atan2(x.re),
            dx,
        }
    }
    #[inline]
    fn abs(self) -> Self {
        if self.re < 0.0 {
            -self
        } else {
            self
        }
    }
}

/// 3-vector over a generic scalar.
#[derive(Clone, Copy, Debug)]
pub struct V3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> V3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        V3 { x, y, z }
    }
    #[inline]
    pub fn zero() -> Self {
        V3::new(T::zero(), T::zero(), T::zero())
    }
    #[inline]
    pub fn c(x: f64, y: f64, z: f64) -> Self {
        V3::new(T::c(x), T::c(y), T::c(z))
    }
    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    #[inline]
    pub fn cross(self, o: Self) -> Self {
        V3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    #[inline]
    pub fn norm_sq(self) -> T {
        self.dot(self)
    }
    #[inline]
    pub fn norm(self) -> T {
        self.norm_sq().sqrt()
    }
    /// `sqrt(|v|^2 + eps) - sqrt(eps)`: zero at zero, differentiable everywhere.
    #[inline]
    pub fn smooth_norm(self) -> T {
        smooth_sqrt(self.norm_sq())
    }
    #[inline]
    pub fn scale(self, s: T) -> Self {
        V3::new(self.x * s, self.y * s, self.z * s)
    }
    #[inline]
    pub fn re(self) -> V3<f64> {
        V3::new(self.x.re(), self.y.re(), self.z.re())
    }
}

/// Smoothed square root of a nonnegative quantity, exact zero at zero.
#[inline]
pub fn smooth_sqrt<T: Real>(s: T) -> T {
    (s + T::c(NORM_EPS)).sqrt() - T::c(NORM_EPS.sqrt())
}

impl<T: Real> Add for V3<T> {
    type Output = V3<T>;
    #[inline]
    fn add(self, o: V3<T>) -> V3<T> {
        V3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Real> Sub for V3<T> {
    type Output = V3<T>;
    #[inline]
    fn sub(self, o: V3<T>) -> V3<T> {
        V3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Real> Neg for V3<T> {
    type Output = V3<T>;
    #[inline]
    fn neg(self) -> V3<T> {
        V3::new(-self.x, -self.y, -self.z)
    }
}

/// Quaternion over a generic scalar, scalar-first Hamilton convention.
#[derive(Clone, Copy, Debug)]
pub struct Q4<T> {
    pub w: T,
    pub v: V3<T>,
}

impl<T: Real> Q4<T> {
    #[inline]
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Q4 {
            w,
            v: V3::new(x, y, z),
        }
    }
    #[inline]
    pub fn identity() -> Self {
        Q4::new(T::one(), T::zero(), T::zero(), T::zero())
    }
    #[inline]
    pub fn conj(self) -> Self {
        Q4 {
            w: self.w,
            v: -self.v,
        }
    }
    /// Hamilton product `self * o`.
    #[inline]
    pub fn mul(self, o: Self) -> Self {
        Q4 {
            w: self.w * o.w - self.v.dot(o.v),
            v: o.v.scale(self.w) + self.v.scale(o.w) + self.v.cross(o.v),
        }
    }
    /// Rotate a vector: `A(q) u` with
    /// `A = (e0^2 - e.e) I + 2 e e^T + 2 e0 skew(e)`.
    #[inline]
    pub fn rotate(self, u: V3<T>) -> V3<T> {
        let e = self.v;
        let a = self.w * self.w - e.dot(e);
        u.scale(a) + e.scale(T::c(2.0) * e.dot(u)) + e.cross(u).scale(T::c(2.0) * self.w)
    }
    /// Rotation angle in `[0, pi]`, insensitive to the sign of `q`.
    #[inline]
    pub fn angle(self) -> T {
        let s = self.v.smooth_norm();
        T::c(2.0) * s.atan2(self.w.abs())
    }
    #[inline]
    pub fn norm_sq(self) -> T {
        self.w * self.w + self.v.norm_sq()
    }
    #[inline]
    pub fn re(self) -> Q4<f64> {
        Q4 {
            w: self.w.re(),
            v: self.v.re(),
        }
    }
}

/// Rodrigues' formula applied to a vector: `exp(skew(w)) u`.
///
/// Falls back to the second-order Taylor coefficients below `|w| = 1e-8`.
#[inline]
pub fn exp_apply<T: Real>(w: V3<T>, u: V3<T>) -> V3<T> {
    let t2 = w.norm_sq();
    let (a, b) = if t2.re() < 1e-16 {
        // sin(t)/t and (1-cos(t))/t^2 as series
        (
            T::one() - t2 / T::c(6.0),
            T::c(0.5) - t2 / T::c(24.0),
        )
    } else {
        let t = t2.sqrt();
        ((t.sin()) / t, (T::one() - t.cos()) / t2)
    };
    u + w.cross(u).scale(a) + w.cross(w.cross(u)).scale(b)
}

/// Unit quaternion for a rotation vector (`exp` map into Spin(3)).
#[inline]
pub fn exp_quat<T: Real>(w: V3<T>) -> Q4<T> {
    let t2 = w.norm_sq();
    if t2.re() < 1e-16 {
        let half = T::c(0.5) - t2 / T::c(48.0);
        Q4 {
            w: T::one() - t2 / T::c(8.0),
            v: w.scale(half),
        }
    } else {
        let t = t2.sqrt();
        let h = t * T::c(0.5);
        Q4 {
            w: h.cos(),
            v: w.scale(h.sin() / t),
        }
    }
}

/// Solve the SPD system `M x = b` (small `n`) via Cholesky, generically.
///
/// `m` is row-major `n x n`; caller guarantees positive definiteness
/// (a ridge term is always added by the users of this routine).
pub fn solve_spd<T: Real>(m: &[T], b: &[T], n: usize, out: &mut [T]) {
    debug_assert!(n <= 6);
    let mut l = [T::zero(); 36];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s = s - l[i * 6 + k] * l[j * 6 + k];
            }
            if i == j {
                l[i * 6 + j] = s.sqrt();
            } else {
                l[i * 6 + j] = s / l[j * 6 + j];
            }
        }
    }
    // forward solve L y = b
    let mut y = [T::zero(); 6];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i * 6 + k] * y[k];
        }
        y[i] = s / l[i * 6 + i];
    }
    // back solve L^T x = y
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s = s - l[k * 6 + i] * out[k];
        }
        out[i] = s / l[i * 6 + i];
    }
}
