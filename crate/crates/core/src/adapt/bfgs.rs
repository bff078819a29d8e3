//! Quasi-Newton minimization with an inverse-Hessian BFGS update and a
//! strong-Wolfe line search.

use crate::error::{Error, Result};
use crate::linalg::dot;

pub const MAX_ITERATIONS: usize = 500;
const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub theta: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    /// Whether the max-abs gradient reached the tolerance.
    pub converged: bool,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F> Counted<F>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evaluations += 1;
        let (v, g) = (self.f)(x)?;
        if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Optimization { value: v, theta: x.to_vec() });
        }
        Ok((v, g))
    }
}

/// A point accepted by the line search.
struct Step {
    alpha: f64,
    value: f64,
    gradient: Vec<f64>,
}

fn along(x: &[f64], p: &[f64], a: f64) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect()
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, if defined.
fn cubic_min(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> Option<f64> {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn line_search<F>(f: &mut Counted<F>, x: &[f64], fx: f64, p: &[f64], d0: f64) -> Result<Option<Step>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut best: Option<Step> = None;
    let keep = |s: &Step, best: &mut Option<Step>| {
        if s.value <= fx + C1 * s.alpha * d0 && best.as_ref().map_or(true, |b| s.value < b.value) {
            *best = Some(Step { alpha: s.alpha, value: s.value, gradient: s.gradient.clone() });
        }
    };

    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, fx, d0);
    let mut a = 1.0;
    let mut bracket = None;
    for i in 0..MAX_LINE_STEPS {
        let (fa, ga) = f.eval(&along(x, p, a))?;
        let da = dot(&ga, p);
        let s = Step { alpha: a, value: fa, gradient: ga };
        keep(&s, &mut best);
        if fa > fx + C1 * a * d0 || (i > 0 && fa >= f_prev) {
            bracket = Some(((a_prev, f_prev, d_prev), (a, fa, da)));
            break;
        }
        if da.abs() <= -C2 * d0 {
            return Ok(Some(s));
        }
        if da >= 0.0 {
            bracket = Some(((a, fa, da), (a_prev, f_prev, d_prev)));
            break;
        }
        a_prev = a;
        f_prev = fa;
        d_prev = da;
        a *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(best);
    };
    for _ in 0..MAX_LINE_STEPS {
        let (l, h) = (lo.0.min(hi.0), lo.0.max(hi.0));
        let width = h - l;
        if width <= 1e-16 * h.abs().max(1.0) {
            break;
        }
        let guard = 0.1 * width;
        let a = match cubic_min(lo.0, lo.1, lo.2, hi.0, hi.1, hi.2) {
            Some(t) if t > l + guard && t < h - guard => t,
            _ => 0.5 * (lo.0 + hi.0),
        };
        let (fa, ga) = f.eval(&along(x, p, a))?;
        let da = dot(&ga, p);
        let s = Step { alpha: a, value: fa, gradient: ga };
        keep(&s, &mut best);
        if fa > fx + C1 * a * d0 || fa >= lo.1 {
            hi = (a, fa, da);
        } else {
            if da.abs() <= -C2 * d0 {
                return Ok(Some(s));
            }
            if da * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, da);
        }
    }
    Ok(best)
}

/// Minimizes `f` from `theta0` until the max-abs gradient component is at
/// most `tol` or [`MAX_ITERATIONS`] iterations pass. Returns the best iterate.
pub fn bfgs_minimize<F>(f: F, theta0: &[f64], tol: f64) -> Result<BfgsResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("BFGS tolerance must be positive, got {tol}")));
    }
    let mut f = Counted { f, evaluations: 0 };
    let n = theta0.len();
    let mut x = theta0.to_vec();
    let (mut fx, mut g) = f.eval(&x)?;
    let mut hinv = identity(n);
    let mut iterations = 0;
    let mut converged = max_abs(&g) <= tol;
    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut p = matvec(&hinv, &g, -1.0);
        let mut d0 = dot(&g, &p);
        if !(d0 < 0.0) {
            hinv = identity(n);
            p = g.iter().map(|v| -v).collect();
            d0 = dot(&g, &p);
        }
        let Some(step) = line_search(&mut f, &x, fx, &p, d0)? else {
            break;
        };
        let s: Vec<f64> = p.iter().map(|v| step.alpha * v).collect();
        let y: Vec<f64> = step.gradient.iter().zip(&g).map(|(a, b)| a - b).collect();
        x.iter_mut().zip(&s).for_each(|(xi, si)| *xi += si);
        fx = step.value;
        g = step.gradient;
        converged = max_abs(&g) <= tol;
        let ys = dot(&y, &s);
        if ys > 0.0 {
            if iterations == 1 {
                let scale = ys / dot(&y, &y);
                hinv = identity(n).into_iter().map(|v| v * scale).collect();
            }
            bfgs_update(&mut hinv, &s, &y, 1.0 / ys);
        }
    }
    Ok(BfgsResult { theta: x, value: fx, gradient: g, iterations, evaluations: f.evaluations, converged })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn matvec(m: &[f64], v: &[f64], scale: f64) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| scale * dot(&m[i * n..(i + 1) * n], v)).collect()
}

/// `H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], rho: f64) {
    let n = s.len();
    let hy = matvec(h, y, 1.0);
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
