//! Dense BFGS with a strong-Wolfe line search.
//!
//! Problem sizes here are tiny (at most 12 variables), so the inverse
//! Hessian approximation is kept as a dense matrix and updated with the
//! standard rank-two formula. The line search follows the
//! bracket-then-zoom scheme of Nocedal & Wright (Algorithms 3.5/3.6) with
//! c1 = 1e-4, c2 = 0.9.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfgsOptions {
    /// Stop when the gradient infinity norm drops below this.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            grad_tol: 1e-9,
            max_iters: 500,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// Minimize `f` starting at `x0`. The objective returns the value and its
/// gradient; non-finite values are treated as +inf by the line search.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut fx, g0) = f(x.as_slice());
    let mut g = DVector::from_vec(g0);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    let mut iters = 0;

    while iters < opts.max_iters {
        let gnorm = g.amax();
        if !gnorm.is_finite() || gnorm < opts.grad_tol {
            return BfgsResult {
                x: x.as_slice().to_vec(),
                f: fx,
                grad_norm: gnorm,
                iters,
                converged: gnorm < opts.grad_tol,
            };
        }
        let mut p = -(&h * &g);
        let mut dphi0 = g.dot(&p);
        if dphi0 >= 0.0 {
            // H lost positive definiteness; restart steepest descent
            h = DMatrix::identity(n, n);
            p = -g.clone();
            dphi0 = g.dot(&p);
        }
        let (alpha, fa, ga) = line_search(&mut f, &x, fx, dphi0, &p, &g);
        if alpha == 0.0 {
            break;
        }
        let x_new = &x + &p * alpha;
        let g_new = DVector::from_vec(ga);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if first {
                h *= sy / y.dot(&y);
                first = false;
            }
            let rho = 1.0 / sy;
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += &s * s.transpose() * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        x = x_new;
        fx = fa;
        g = g_new;
        iters += 1;
    }
    let gnorm = g.amax();
    BfgsResult {
        x: x.as_slice().to_vec(),
        f: fx,
        grad_norm: gnorm,
        iters,
        converged: gnorm < opts.grad_tol,
    }
}

/// Strong-Wolfe line search; returns `(alpha, f(x + alpha p), grad)`.
/// `alpha = 0` signals failure.
fn line_search<F>(
    f: &mut F,
    x: &DVector<f64>,
    f0: f64,
    dphi0: f64,
    p: &DVector<f64>,
    g0: &DVector<f64>,
) -> (f64, f64, Vec<f64>)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut eval = |a: f64| {
        let xt = x + p * a;
        let (v, grad) = f(xt.as_slice());
        let v = if v.is_finite() { v } else { f64::INFINITY };
        let d = DVector::from_column_slice(&grad).dot(p);
        (v, d, grad)
    };

    let mut a_prev = 0.0;
    let mut f_prev = f0;
    let mut d_prev = dphi0;
    let mut a = 1.0;
    let a_max = 1e4;
    for _ in 0..25 {
        let (fa, da, ga) = eval(a);
        if fa > f0 + C1 * a * dphi0 || (a_prev > 0.0 && fa >= f_prev) {
            return zoom(&mut eval, f0, dphi0, a_prev, f_prev, d_prev, a, fa);
        }
        if da.abs() <= -C2 * dphi0 {
            return (a, fa, ga);
        }
        if da >= 0.0 {
            return zoom(&mut eval, f0, dphi0, a, fa, da, a_prev, f_prev);
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        a = (a * 2.0).min(a_max);
        if a >= a_max {
            return (a_prev, f_prev, eval(a_prev).2);
        }
    }
    let _ = d_prev;
    let _ = g0;
    (0.0, f0, vec![])
}

/// Zoom phase: shrink `[lo, hi]` (ordered by function value, not position)
/// until a strong-Wolfe point appears.
#[allow(clippy::too_many_arguments)]
fn zoom<E>(
    eval: &mut E,
    f0: f64,
    dphi0: f64,
    mut a_lo: f64,
    mut f_lo: f64,
    mut d_lo: f64,
    mut a_hi: f64,
    mut f_hi: f64,
) -> (f64, f64, Vec<f64>)
where
    E: FnMut(f64) -> (f64, f64, Vec<f64>),
{
    for _ in 0..40 {
        // quadratic interpolation with a safeguarded bisection fallback
        let mut a = {
            let denom = 2.0 * (f_hi - f_lo - d_lo * (a_hi - a_lo));
            if denom.abs() > 1e-300 && f_hi.is_finite() {
                a_lo - d_lo * (a_hi - a_lo) * (a_hi - a_lo) / denom
            } else {
                0.5 * (a_lo + a_hi)
            }
        };
        let lo = a_lo.min(a_hi);
        let hi = a_lo.max(a_hi);
        let width = hi - lo;
        if !(a.is_finite() && a > lo + 0.1 * width && a < hi - 0.1 * width) {
            a = 0.5 * (a_lo + a_hi);
        }
        if width < 1e-16 * (1.0 + a_lo.abs()) {
            break;
        }
        let (fa, da, ga) = eval(a);
        if fa > f0 + C1 * a * dphi0 || fa >= f_lo {
            a_hi = a;
            f_hi = fa;
        } else {
            if da.abs() <= -C2 * dphi0 {
                return (a, fa, ga);
            }
            if da * (a_hi - a_lo) >= 0.0 {
                a_hi = a_lo;
                f_hi = f_lo;
            }
            a_lo = a;
            f_lo = fa;
            d_lo = da;
        }
    }
    if f_lo < f0 && a_lo > 0.0 {
        let (fa, _, ga) = eval(a_lo);
        return (a_lo, fa, ga);
    }
    (0.0, f0, vec![])
}
