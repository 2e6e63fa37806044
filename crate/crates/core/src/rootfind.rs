//! Scalar root finding: Brent's method on a sign-changing bracket, and a
//! guarded Newton iteration for polishing from a seed.

use crate::error::{Error, Result};

/// Endpoints of an interval on which `f` changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends and checks for a strict sign change.
    pub fn new(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<Self> {
        Self::from_values(lo, hi, f(lo), f(hi))
    }

    pub fn from_values(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        let valid = lo < hi
            && f_lo.is_finite()
            && f_hi.is_finite()
            && f_lo != 0.0
            && f_hi != 0.0
            && f_lo.signum() != f_hi.signum();
        if valid {
            Ok(Self { lo, hi, f_lo, f_hi })
        } else {
            Err(Error::NoSignChange { lo, hi, f_lo, f_hi })
        }
    }

    /// Moves both ends inward by `gap`, for functions that blow up at the
    /// nominal endpoints.
    pub fn shrunk(f: impl Fn(f64) -> f64, lo: f64, hi: f64, gap: f64) -> Result<Self> {
        Self::new(f, lo + gap, hi - gap)
    }
}

/// Stopping rules for [`solve_bracketed`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub x: f64,
    pub f: f64,
    pub max_iter: usize,
}

impl Tolerance {
    /// `tol_x = 1e-12·max(1, |hi|)`, `tol_f = 1e-12`.
    pub fn default_for(bracket: &Bracket) -> Self {
        Self { x: 1e-12 * bracket.hi.abs().max(1.0), f: 1e-12, max_iter: 200 }
    }
}

/// Inward shift applied to brackets whose functions are singular at the
/// nominal endpoints.
pub const ENDPOINT_GAP: f64 = 1e-9 * std::f64::consts::TAU;

/// Brent's method. The returned root always lies in `[lo, hi]`.
pub fn solve_bracketed(f: impl Fn(f64) -> f64, bracket: Bracket, tol: Tolerance) -> Result<f64> {
    let Bracket { lo, hi, f_lo, f_hi } = bracket;
    let (mut a, mut b, mut c) = (lo, hi, hi);
    let (mut fa, mut fb, mut fc) = (f_lo, f_hi, f_hi);
    let (mut d, mut e) = (b - a, b - a);

    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.x;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol.f || xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b.clamp(lo, hi));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Domain(format!("non-finite function value at {b}")));
        }
    }
    Err(Error::MaxIterations { iterations: tol.max_iter, last: b })
}

/// Brent with the default tolerances on `[lo, hi]`.
pub fn solve_in(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let bracket = Bracket::new(&f, lo, hi)?;
    solve_bracketed(&f, bracket, Tolerance::default_for(&bracket))
}

/// Newton iteration from `seed` with a central-difference derivative,
/// falling back to a secant step when the derivative is unusable. Iterates
/// must stay within `max(1, |seed|)/2` of the seed.
pub fn refine_open(f: impl Fn(f64) -> f64, seed: f64, tol: f64) -> Result<f64> {
    let radius = 0.5 * seed.abs().max(1.0);
    refine_open_guarded(f, seed, tol, (seed - radius, seed + radius))
}

pub fn refine_open_guarded(f: impl Fn(f64) -> f64, seed: f64, tol: f64, guard: (f64, f64)) -> Result<f64> {
    const MAX_ITER: usize = 100;
    let mut x = seed;
    let mut fx = f(x);
    let mut prev: Option<(f64, f64)> = None;

    for _ in 0..MAX_ITER {
        if !fx.is_finite() {
            return Err(Error::Diverged { last: x });
        }
        if fx.abs() <= tol {
            return Ok(x);
        }
        let h = 1e-7 * x.abs().max(1.0);
        let slope = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut step = -fx / slope;
        if !step.is_finite() || slope == 0.0 {
            step = match prev {
                Some((xp, fp)) if fp != fx => -fx * (x - xp) / (fx - fp),
                _ => return Err(Error::Diverged { last: x }),
            };
        }
        // Halve the step until the residual stops growing.
        let mut next = x + step;
        let mut f_next = f(next);
        let mut halvings = 0;
        while !(f_next.abs() < fx.abs()) && halvings < 30 {
            step *= 0.5;
            next = x + step;
            f_next = f(next);
            halvings += 1;
        }
        if next < guard.0 || next > guard.1 {
            return Err(Error::Diverged { last: next });
        }
        prev = Some((x, fx));
        if (next - x).abs() <= f64::EPSILON * 4.0 * x.abs().max(1.0) {
            return if f_next.abs() <= tol.max(fx.abs()) {
                Ok(next)
            } else {
                Err(Error::MaxIterations { iterations: MAX_ITER, last: next })
            };
        }
        x = next;
        fx = f_next;
    }
    Err(Error::MaxIterations { iterations: MAX_ITER, last: x })
}
