//! The eight scleronomic constraint models: residuals, Jacobians with respect
//! to position and virtual rotation, parameter-side unit/orthogonality
//! equations, friction resolution into reaction wrenches, and per-model
//! metadata.
//!
//! Everything geometric is written once over a generic scalar so the fitting
//! code can push dual numbers through the same expressions it evaluates with
//! `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{Sample, UnitQuaternion, Vec3};
use crate::math::{exp_apply, Q4, Real, V3};

/// The eight model kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    PointOnPlane,
    PointOnLine,
    Planar,
    PlanarRelaxed,
    Prismatic,
    PrismaticRelaxed,
    Axial,
    AxialRelaxed,
}

impl ModelKind {
    pub const ALL: [ModelKind; 8] = [
        ModelKind::PointOnPlane,
        ModelKind::PointOnLine,
        ModelKind::Planar,
        ModelKind::PlanarRelaxed,
        ModelKind::Prismatic,
        ModelKind::PrismaticRelaxed,
        ModelKind::Axial,
        ModelKind::AxialRelaxed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PointOnPlane => "point_on_plane",
            ModelKind::PointOnLine => "point_on_line",
            ModelKind::Planar => "planar",
            ModelKind::PlanarRelaxed => "planar_relaxed",
            ModelKind::Prismatic => "prismatic",
            ModelKind::PrismaticRelaxed => "prismatic_relaxed",
            ModelKind::Axial => "axial",
            ModelKind::AxialRelaxed => "axial_relaxed",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::invalid(format!("unknown model kind '{name}'")))
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Static metadata: unconstrained DOF, parameter count used by the penalized
/// likelihood, and number of geometric constraint equations `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelInfo {
    pub kind: ModelKind,
    pub dof: u32,
    pub n_params: u32,
    pub k: usize,
}

pub fn model_info(kind: ModelKind) -> ModelInfo {
    let (dof, n_params, k) = match kind {
        ModelKind::PointOnPlane => (5, 6, 1),
        ModelKind::PointOnLine => (4, 7, 2),
        ModelKind::Planar => (3, 6, 3),
        ModelKind::PlanarRelaxed => (5, 3, 1),
        ModelKind::Prismatic => (1, 10, 5),
        ModelKind::PrismaticRelaxed => (4, 4, 2),
        ModelKind::Axial => (1, 11, 5),
        // Stored as 6 scalars (center, two exponential coordinates, radius);
        // the advertised parameter count follows the model table.
        ModelKind::AxialRelaxed => (4, 8, 2),
    };
    ModelInfo {
        kind,
        dof,
        n_params,
        k,
    }
}

/// Number of stored scalars in the parameter vector for `kind`.
pub fn param_len(kind: ModelKind) -> usize {
    match kind {
        ModelKind::PointOnPlane => 6,
        ModelKind::PointOnLine => 7,
        ModelKind::Planar => 6,
        ModelKind::PlanarRelaxed => 3,
        ModelKind::Prismatic => 10,
        ModelKind::PrismaticRelaxed => 4,
        ModelKind::Axial => 11,
        ModelKind::AxialRelaxed => 6,
    }
}

/// Number of parameter-side constraint equations (unit norms,
/// orthogonality).
pub fn param_constraint_len(kind: ModelKind) -> usize {
    match kind {
        ModelKind::Planar => 1,
        ModelKind::Prismatic => 3,
        ModelKind::Axial => 2,
        _ => 0,
    }
}

/// A model parameter vector `alpha` with a per-kind flat layout.
///
/// Layouts (all SI units, exponential coordinates in radians):
/// * `point_on_plane`: `[sx, sy, sz, d, wx, wy]`
/// * `point_on_line`: `[sx, sy, sz, dx, dy, wx, wy]`
/// * `planar`: `[tx, ty, tz, d, wx, wy]`
/// * `planar_relaxed`: `[d, wx, wy]`
/// * `prismatic`: `[tx, ty, tz, sx, sy, sz, dx, dy, wx, wy]`
/// * `prismatic_relaxed`: `[dx, dy, wx, wy]`
/// * `axial`: `[tx, ty, tz, sx, sy, sz, dx, dy, dz, wx, wy]`
/// * `axial_relaxed`: `[dx, dy, dz, wx, wy, l]`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    kind: ModelKind,
    data: Vec<f64>,
}

impl ParamVector {
    pub fn new(kind: ModelKind, data: Vec<f64>) -> Result<Self> {
        if data.len() != param_len(kind) {
            return Err(Error::invalid(format!(
                "parameter vector for {} needs {} scalars, got {}",
                kind,
                param_len(kind),
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(ParamVector { kind, data })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

}

/// Reaction force and moment after friction removal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionWrench {
    pub f_r: Vec3,
    pub n_r: Vec3,
}

// ---------------------------------------------------------------------------
// Generic evaluation
// ---------------------------------------------------------------------------

/// Fixed-capacity residual vector (k <= 5).
pub(crate) type Resid<T> = ([T; 5], usize);
/// Fixed-capacity Jacobian rows (k <= 5).
pub(crate) type Rows<T> = ([V3<T>; 5], usize);

#[inline]
fn v3_from<T: Real>(a: &[T], i: usize) -> V3<T> {
    V3::new(a[i], a[i + 1], a[i + 2])
}

/// Basis vectors of the displaced frame: `e^skew(w) e_x`, `e_y`, `e_z`
/// with `w = [wx, wy, 0]`.
#[inline]
pub(crate) fn frame<T: Real>(wx: T, wy: T) -> (V3<T>, V3<T>, V3<T>) {
    let w = V3::new(wx, wy, T::zero());
    (
        exp_apply(w, V3::c(1.0, 0.0, 0.0)),
        exp_apply(w, V3::c(0.0, 1.0, 0.0)),
        exp_apply(w, V3::c(0.0, 0.0, 1.0)),
    )
}

/// Geometric constraint residuals for any kind.
pub(crate) fn phi_generic<T: Real>(kind: ModelKind, a: &[T], r: V3<T>, q: Q4<T>) -> Resid<T> {
    let mut out = [T::zero(); 5];
    let len;
    match kind {
        ModelKind::PointOnPlane => {
            let sbar = v3_from(a, 0);
            let (_, _, n) = frame(a[4], a[5]);
            let p0 = n.scale(a[3]);
            out[0] = (p0 - r - q.rotate(sbar)).dot(n);
            len = 1;
        }
        ModelKind::PointOnLine => {
            let sbar = v3_from(a, 0);
            let (u, v, _) = frame(a[5], a[6]);
            let p0 = u.scale(a[3]) + v.scale(a[4]);
            let d = p0 - r - q.rotate(sbar);
            out[0] = d.dot(u);
            out[1] = d.dot(v);
            len = 2;
        }
        ModelKind::Planar => {
            let tbar = v3_from(a, 0);
            let (u, v, n) = frame(a[4], a[5]);
            let at = q.rotate(tbar);
            out[0] = (n.scale(a[3]) - r).dot(n);
            out[1] = at.dot(u);
            out[2] = at.dot(v);
            len = 3;
        }
        ModelKind::PlanarRelaxed => {
            let (_, _, n) = frame(a[1], a[2]);
            out[0] = (n.scale(a[0]) - r).dot(n);
            len = 1;
        }
        ModelKind::Prismatic => {
            let tbar = v3_from(a, 0);
            let sbar = v3_from(a, 3);
            let (u, v, _) = frame(a[8], a[9]);
            let p0 = u.scale(a[6]) + v.scale(a[7]);
            let d = p0 - r;
            let asb = q.rotate(sbar);
            let atb = q.rotate(tbar);
            out[0] = d.dot(u);
            out[1] = d.dot(v);
            out[2] = asb.dot(u);
            out[3] = asb.dot(v);
            out[4] = atb.dot(u);
            len = 5;
        }
        ModelKind::PrismaticRelaxed => {
            let (u, v, _) = frame(a[2], a[3]);
            let p0 = u.scale(a[0]) + v.scale(a[1]);
            let d = p0 - r;
            out[0] = d.dot(u);
            out[1] = d.dot(v);
            len = 2;
        }
        ModelKind::Axial => {
            let tbar = v3_from(a, 0);
            let sbar = v3_from(a, 3);
            let dvec = v3_from(a, 6);
            let (_, _, n) = frame(a[9], a[10]);
            let res = r + q.rotate(sbar) - dvec;
            out[0] = res.x;
            out[1] = res.y;
            out[2] = res.z;
            out[3] = q.rotate(tbar).dot(n);
            out[4] = q.rotate(sbar).dot(n);
            len = 5;
        }
        ModelKind::AxialRelaxed => {
            let dvec = v3_from(a, 0);
            let (_, _, n) = frame(a[3], a[4]);
            let rel = r - dvec;
            out[0] = rel.norm_sq() - a[5] * a[5];
            out[1] = rel.dot(n);
            len = 2;
        }
    }
    (out, len)
}

/// Parameter-side residuals (unit norms, orthogonality); empty for kinds
/// without unit-vector parameters.
pub(crate) fn phi_params_generic<T: Real>(kind: ModelKind, a: &[T]) -> Resid<T> {
    let mut out = [T::zero(); 5];
    let len;
    match kind {
        ModelKind::Planar => {
            let tbar = v3_from(a, 0);
            out[0] = tbar.dot(tbar) - T::one();
            len = 1;
        }
        ModelKind::Prismatic => {
            let tbar = v3_from(a, 0);
            let sbar = v3_from(a, 3);
            out[0] = sbar.dot(sbar) - T::one();
            out[1] = tbar.dot(tbar) - T::one();
            out[2] = sbar.dot(tbar);
            len = 3;
        }
        ModelKind::Axial => {
            let tbar = v3_from(a, 0);
            let sbar = v3_from(a, 3);
            out[0] = tbar.dot(tbar) - T::one();
            out[1] = sbar.dot(tbar);
            len = 2;
        }
        _ => {
            len = 0;
        }
    }
    (out, len)
}

/// Analytic Jacobian rows of the geometric residuals.
///
/// Row `j` of the first element is `d phi_j / d r`; row `j` of the second is
/// `d phi_j / d pi` for a global virtual rotation `pi` (so a perturbation
/// replaces `A` with `(I + skew(d pi)) A`, i.e. `d(A b)/d pi = -skew(A b)`).
pub(crate) fn jacobians_generic<T: Real>(
    kind: ModelKind,
    a: &[T],
    _r: V3<T>,
    q: Q4<T>,
) -> (Rows<T>, Rows<T>) {
    let mut jr = [V3::zero(); 5];
    let mut jp = [V3::zero(); 5];
    let len;
    match kind {
        ModelKind::PointOnPlane => {
            let sbar = v3_from(a, 0);
            let (_, _, n) = frame(a[4], a[5]);
            jr[0] = -n;
            jp[0] = n.cross(q.rotate(sbar));
            len = 1;
        }
        ModelKind::PointOnLine => {
            let sbar = v3_from(a, 0);
            let (u, v, _) = frame(a[5], a[6]);
            let asb = q.rotate(sbar);
            jr[0] = -u;
            jr[1] = -v;
            jp[0] = u.cross(asb);
            jp[1] = v.cross(asb);
            len = 2;
        }
        ModelKind::Planar => {
            let tbar = v3_from(a, 0);
            let (u, v, n) = frame(a[4], a[5]);
            let atb = q.rotate(tbar);
            jr[0] = -n;
            jp[1] = atb.cross(u);
            jp[2] = atb.cross(v);
            len = 3;
        }
        ModelKind::PlanarRelaxed => {
            let (_, _, n) = frame(a[1], a[2]);
            jr[0] = -n;
            len = 1;
        }
        ModelKind::Prismatic => {
            let tbar = v3_from(a, 0);
            let sbar = v3_from(a, 3);
            let (u, v, _) = frame(a[8], a[9]);
            let asb = q.rotate(sbar);
            let atb = q.rotate(tbar);
            jr[0] = -u;
            jr[1] = -v;
            jp[2] = asb.cross(u);
            jp[3] = asb.cross(v);
            jp[4] = atb.cross(u);
            len = 5;
        }
        ModelKind::PrismaticRelaxed => {
            let (u, v, _) = frame(a[2], a[3]);
            jr[0] = -u;
            jr[1] = -v;
            len = 2;
        }
        ModelKind::Axial => {
            let tbar = v3_from(a, 0);
            let sbar = v3_from(a, 3);
            let (_, _, n) = frame(a[9], a[10]);
            let asb = q.rotate(sbar);
            let atb = q.rotate(tbar);
            // vector equation r + A sbar - d
            jr[0] = V3::c(1.0, 0.0, 0.0);
            jr[1] = V3::c(0.0, 1.0, 0.0);
            jr[2] = V3::c(0.0, 0.0, 1.0);
            // d(A sbar)/d pi = -skew(A sbar): row i is -skew row = (e_i x A sbar)... use
            // component form: d(asb_i) = (d pi x asb)_i => row_i = -skew(asb) row i.
            jp[0] = V3::new(T::zero(), asb.z, -asb.y);
            jp[1] = V3::new(-asb.z, T::zero(), asb.x);
            jp[2] = V3::new(asb.y, -asb.x, T::zero());
            jp[3] = atb.cross(n);
            jp[4] = asb.cross(n);
            len = 5;
        }
        ModelKind::AxialRelaxed => {
            let dvec = v3_from(a, 0);
            let (_, _, n) = frame(a[3], a[4]);
            let rel = _r - dvec;
            jr[0] = rel.scale(T::c(2.0));
            jr[1] = n;
            len = 2;
        }
    }
    ((jr, len), (jp, len))
}

const VEL_FLOOR: f64 = 1e-6;

/// Friction resolution: subtract the model-specific friction wrench from the
/// measured wrench, leaving the reaction wrench.
pub(crate) fn resolve_reaction_generic<T: Real>(
    kind: ModelKind,
    a: &[T],
    q: Q4<T>,
    v: V3<T>,
    omega: V3<T>,
    f: V3<T>,
    n: V3<T>,
) -> (V3<T>, V3<T>) {
    let project = |w: V3<T>, dir: V3<T>| -> V3<T> {
        // component of w along dir (dir need not be unit)
        let d2 = dir.norm_sq();
        if d2.re() < VEL_FLOOR * VEL_FLOOR {
            V3::zero()
        } else {
            dir.scale(w.dot(dir) / d2)
        }
    };
    match kind {
        ModelKind::PointOnPlane | ModelKind::PointOnLine => {
            let sbar = v3_from(a, 0);
            let s = q.rotate(sbar);
            let v_s = v + omega.cross(s);
            let f_mu = project(f, v_s);
            (f - f_mu, n - s.cross(f_mu))
        }
        ModelKind::Planar
        | ModelKind::PlanarRelaxed
        | ModelKind::PrismaticRelaxed
        | ModelKind::AxialRelaxed => {
            let f_mu = project(f, v);
            let n_mu = project(n, omega);
            (f - f_mu, n - n_mu)
        }
        ModelKind::Prismatic => {
            let f_mu = project(f, v);
            (f - f_mu, n)
        }
        ModelKind::Axial => {
            let w2 = omega.norm_sq();
            if w2.re() < VEL_FLOOR * VEL_FLOOR {
                (f, n)
            } else {
                let work = v.dot(f) + omega.dot(n);
                let n_mu = omega.scale(work / w2);
                (f, n - n_mu)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Public f64 wrappers
// ---------------------------------------------------------------------------

/// Geometric constraint residuals at a pose; zero iff the pose satisfies the
/// constraint.
pub fn phi(alpha: &ParamVector, r: Vec3, q: UnitQuaternion) -> Vec<f64> {
    let (vals, len) = phi_generic(alpha.kind(), alpha.data(), r.g(), q.g());
    vals[..len].to_vec()
}

/// Parameter-side residuals; empty for kinds without unit-vector
/// parameters.
pub fn phi_params(alpha: &ParamVector) -> Vec<f64> {
    let (vals, len) = phi_params_generic(alpha.kind(), alpha.data());
    vals[..len].to_vec()
}

/// Jacobians `(phi_r, phi_pi)` as `k x 3` matrices.
pub fn jacobians(
    alpha: &ParamVector,
    r: Vec3,
    q: UnitQuaternion,
) -> (nalgebra::DMatrix<f64>, nalgebra::DMatrix<f64>) {
    let ((jr, len), (jp, _)) = jacobians_generic(alpha.kind(), alpha.data(), r.g(), q.g());
    let pack = |rows: &[V3<f64>]| {
        nalgebra::DMatrix::from_fn(len, 3, |i, j| match j {
            0 => rows[i].x,
            1 => rows[i].y,
            _ => rows[i].z,
        })
    };
    (pack(&jr[..len]), pack(&jp[..len]))
}

/// Estimate the reaction wrench of a sample by removing the model-specific
/// friction wrench. Degenerate sliding velocities leave the measurement
/// untouched (friction direction undefined at rest).
pub fn resolve_reaction(alpha: &ParamVector, sample: &Sample) -> ReactionWrench {
    let (f_r, n_r) = resolve_reaction_generic(
        alpha.kind(),
        alpha.data(),
        sample.q.g(),
        sample.v.g(),
        sample.omega.g(),
        sample.f.g(),
        sample.n.g(),
    );
    ReactionWrench {
        f_r: Vec3::from_g(f_r),
        n_r: Vec3::from_g(n_r),
    }
}
