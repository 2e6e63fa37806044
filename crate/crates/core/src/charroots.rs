//! Characteristic roots of the linearised cutting dynamics.
//!
//! With P(λ) = λ² + ξλ + δ and E(λ) = 1 − e^{−λ} the characteristic
//! functions are
//!
//! ```text
//! delayed:  F(λ) = P(λ) + δ(h + q/(λe^λ)) E(λ)
//! instant:  F(λ) = P(λ) + δ(h + q/λ) E(λ)
//! ```
//!
//! F has a pole at 0. Multiplying by λe^λ (delayed) or λ (instant) gives an
//! entire G with a simple zero at 0 that is not a characteristic root, since
//! G′(0) = δ(q+1). Root counting uses H = G/λ instead, which is entire, has
//! H(0) = δ(q+1) and has exactly the characteristic roots as zeros.

use std::f64::consts::{FRAC_PI_4, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lobes_delayed::beta_bounds_delayed;
use crate::lobes_instant::beta_bounds_instant;
use crate::Variant;

/// Parameters of one characteristic function. `h` is h₁ for the delayed law
/// and h₂ for the instant law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharParams {
    pub variant: Variant,
    pub xi: f64,
    pub delta: f64,
    pub h: f64,
    pub q: f64,
    /// When false the regenerative term δ(h + …)E is dropped, leaving P.
    pub delay_term: bool,
}

impl CharParams {
    pub fn new(variant: Variant, xi: f64, delta: f64, h: f64, q: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::Domain(format!("xi must be positive, got {xi}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::Domain(format!("q must be positive, got {q}")));
        }
        if !h.is_finite() {
            return Err(Error::Domain(format!("h must be finite, got {h}")));
        }
        Ok(Self { variant, xi, delta, h, q, delay_term: true })
    }

    pub fn without_delay_term(self) -> Self {
        Self { delay_term: false, ..self }
    }
}

/// Below this modulus E/λ and its derivative come from their Taylor series.
const SERIES_RADIUS: f64 = 1e-3;
const SERIES_TERMS: usize = 9;

/// (E(λ)/λ, d/dλ E(λ)/λ).
fn e_over_lambda(l: Complex64) -> (Complex64, Complex64) {
    if l.norm() < SERIES_RADIUS {
        // E/λ = Σ (−λ)^k/(k+1)!
        let mut val = Complex64::new(0.0, 0.0);
        let mut der = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0); // (−λ)^k
        let mut fact = 1.0; // (k+1)!
        for k in 0..SERIES_TERMS {
            fact *= (k + 1) as f64;
            val += pow / fact;
            if k + 1 < SERIES_TERMS {
                // d/dλ (−λ)^{k+1} = −(k+1)(−λ)^k
                der -= pow * ((k + 1) as f64) / (fact * (k + 2) as f64);
            }
            pow *= -l;
        }
        (val, der)
    } else {
        let em = (-l).exp();
        let e = 1.0 - em;
        (e / l, (em * (l + 1.0) - 1.0) / (l * l))
    }
}

fn quad(l: Complex64, p: &CharParams) -> (Complex64, Complex64) {
    (l * l + p.xi * l + p.delta, 2.0 * l + p.xi)
}

/// The characteristic function F itself (singular at 0).
pub fn eval_char(l: Complex64, p: &CharParams) -> Complex64 {
    let (pl, _) = quad(l, p);
    if !p.delay_term {
        return pl;
    }
    let e = 1.0 - (-l).exp();
    let tail = match p.variant {
        Variant::Delayed => p.q * (-l).exp() / l,
        Variant::Instant => p.q / l,
    };
    pl + p.delta * (p.h + tail) * e
}

/// H = G/λ together with H′.
pub fn eval_reduced_with_derivative(l: Complex64, p: &CharParams) -> (Complex64, Complex64) {
    let (pl, dpl) = quad(l, p);
    let (el, del) = e_over_lambda(l);
    let d = p.delta;
    match (p.variant, p.delay_term) {
        (Variant::Delayed, true) => {
            // H = e^λ P + δh(e^λ − 1) + δq E/λ
            let ex = l.exp();
            let h = ex * pl + d * p.h * (ex - 1.0) + d * p.q * el;
            let dh = ex * (pl + dpl) + d * p.h * ex + d * p.q * del;
            (h, dh)
        }
        (Variant::Delayed, false) => {
            let ex = l.exp();
            (ex * pl, ex * (pl + dpl))
        }
        (Variant::Instant, true) => {
            // H = P + δhE + δq E/λ
            let em = (-l).exp();
            let h = pl + d * p.h * (1.0 - em) + d * p.q * el;
            let dh = dpl + d * p.h * em + d * p.q * del;
            (h, dh)
        }
        (Variant::Instant, false) => (pl, dpl),
    }
}

pub fn eval_reduced(l: Complex64, p: &CharParams) -> Complex64 {
    eval_reduced_with_derivative(l, p).0
}

/// The entire function G = λe^λ F (delayed) or λF (instant); G(0) = 0.
pub fn eval_entire(l: Complex64, p: &CharParams) -> Complex64 {
    l * eval_reduced(l, p)
}

/// G′(λ) = H(λ) + λH′(λ), so G′(0) = H(0) = δ(q+1).
pub fn eval_entire_derivative(l: Complex64, p: &CharParams) -> Complex64 {
    let (h, dh) = eval_reduced_with_derivative(l, p);
    h + l * dh
}

/// Radius R such that every characteristic root with Re λ ≥ `sigma_lo`
/// satisfies |λ| ≤ R.
///
/// On Re λ ≥ σ₀ (σ₀ ≤ 0) one has |e^{−λ}| ≤ a = e^{−σ₀} and |E| ≤ 1 + a, so
/// a root obeys r² ≤ ξr + δ + δ(|h| + q·a/r)(1 + a) with r = |λ| (drop the
/// factor a in the q-term for the instant law). R is the positive root of the
/// resulting cubic.
pub fn root_modulus_bound(p: &CharParams, sigma_lo: f64) -> f64 {
    let a = (-sigma_lo.min(0.0)).exp();
    let (c1, c0) = if p.delay_term {
        let qa = match p.variant {
            Variant::Delayed => p.q * a,
            Variant::Instant => p.q,
        };
        (p.delta + p.delta * p.h.abs() * (1.0 + a), p.delta * qa * (1.0 + a))
    } else {
        (p.delta, 0.0)
    };
    let f = |r: f64| ((r - p.xi) * r - c1) * r - c0;
    let (mut lo, mut hi) = (0.0, 1.0 + p.xi + c1 + c0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Rectangle [sigma_lo, sigma_hi] × [−omega, omega] in the λ-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    re_lo: f64,
    re_hi: f64,
    im_lo: f64,
    im_hi: f64,
}

impl Rect {
    fn strip(sigma_lo: f64, sigma_hi: f64, omega: f64) -> Self {
        Self { re_lo: sigma_lo, re_hi: sigma_hi, im_lo: -omega, im_hi: omega }
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_lo, self.im_lo),
            Complex64::new(self.re_hi, self.im_lo),
            Complex64::new(self.re_hi, self.im_hi),
            Complex64::new(self.re_lo, self.im_hi),
        ]
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    fn size(&self) -> f64 {
        (self.re_hi - self.re_lo).max(self.im_hi - self.im_lo)
    }

    fn contains(&self, z: Complex64, pad: f64) -> bool {
        z.re >= self.re_lo - pad && z.re <= self.re_hi + pad && z.im >= self.im_lo - pad && z.im <= self.im_hi + pad
    }

    /// Splits the longer side at fraction `t`.
    fn split(&self, t: f64) -> (Rect, Rect) {
        if self.re_hi - self.re_lo >= self.im_hi - self.im_lo {
            let m = self.re_lo + t * (self.re_hi - self.re_lo);
            (Rect { re_hi: m, ..*self }, Rect { re_lo: m, ..*self })
        } else {
            let m = self.im_lo + t * (self.im_hi - self.im_lo);
            (Rect { im_hi: m, ..*self }, Rect { im_lo: m, ..*self })
        }
    }
}

/// Result of tracking arg H around a rectangle.
#[derive(Debug, Clone, Copy)]
struct Winding {
    count: usize,
    min_abs: f64,
}

/// Coarse sampling step along contour edges before adaptive refinement.
const COARSE_STEP: f64 = 0.05;

struct PhaseTracker<'a> {
    p: &'a CharParams,
    min_abs: f64,
    floor: f64,
}

impl PhaseTracker<'_> {
    fn eval(&mut self, z: Complex64) -> Result<Complex64> {
        let h = eval_reduced(z, self.p);
        let a = h.norm();
        if !a.is_finite() {
            return Err(Error::Domain(format!("characteristic function overflows at {z}")));
        }
        self.min_abs = self.min_abs.min(a);
        if a == 0.0 {
            return Err(Error::ContourTooClose { min_abs: 0.0 });
        }
        Ok(h)
    }

    /// Phase change of H from `a` to `b`, refined until every accepted piece
    /// turns by less than π/4 and agrees with its two halves.
    fn segment(&mut self, a: Complex64, b: Complex64, ha: Complex64, hb: Complex64) -> Result<f64> {
        let m = 0.5 * (a + b);
        let hm = self.eval(m)?;
        let d = (hb / ha).arg();
        let d1 = (hm / ha).arg();
        let d2 = (hb / hm).arg();
        if d.abs() < FRAC_PI_4 && d1.abs() < FRAC_PI_4 && d2.abs() < FRAC_PI_4 && (d1 + d2 - d).abs() < 1e-3 {
            return Ok(d1 + d2);
        }
        if (b - a).norm() <= self.floor {
            return Err(Error::ContourTooClose { min_abs: self.min_abs });
        }
        Ok(self.segment(a, m, ha, hm)? + self.segment(m, b, hm, hb)?)
    }

    fn winding(&mut self, rect: &Rect) -> Result<Winding> {
        let c = rect.corners();
        let scale = c.iter().map(|z| z.norm()).fold(1.0, f64::max);
        self.floor = 1e-14 * scale;
        let mut total = 0.0;
        for k in 0..4 {
            let (a, b) = (c[k], c[(k + 1) % 4]);
            let pieces = ((b - a).norm() / COARSE_STEP).ceil().max(4.0) as usize;
            let mut z0 = a;
            let mut h0 = self.eval(z0)?;
            for j in 1..=pieces {
                let z1 = a + (b - a) * (j as f64 / pieces as f64);
                let h1 = self.eval(z1)?;
                total += self.segment(z0, z1, h0, h1)?;
                z0 = z1;
                h0 = h1;
            }
        }
        let turns = total / TAU;
        let count = turns.round();
        if (turns - count).abs() > 0.05 || count < 0.0 {
            return Err(Error::WindingNotInteger { winding: turns });
        }
        Ok(Winding { count: count as usize, min_abs: self.min_abs })
    }
}

fn winding(p: &CharParams, rect: &Rect) -> Result<Winding> {
    PhaseTracker { p, min_abs: f64::INFINITY, floor: 0.0 }.winding(rect)
}

/// Left edge of the unstable-root contour; keeps the extraneous zero of G
/// at 0 outside.
pub const CONTOUR_EPS: f64 = 1e-7;

/// Smallest |H| tolerated on the contour of [`count_unstable`].
pub const CONTOUR_FLOOR: f64 = 1e-9;

/// Number of characteristic roots with Re λ ∈ (ε, sigma_max) and
/// |Im λ| < omega_max, by the argument principle.
///
/// The closeness guard is applied to |H| = |G/λ| rather than |G|: near the
/// left edge |G| ≈ δ(q+1)·ε regardless of where the roots are.
pub fn count_unstable(p: &CharParams, omega_max: f64, sigma_max: f64) -> Result<usize> {
    let w = winding(p, &Rect::strip(CONTOUR_EPS, sigma_max, omega_max))?;
    if w.min_abs < CONTOUR_FLOOR {
        return Err(Error::ContourTooClose { min_abs: w.min_abs });
    }
    Ok(w.count)
}

/// Contour half-height and right edge that enclose every unstable root.
///
/// The half-height is twice the lemma bound on β (when it applies) but never
/// less than the modulus bound, which is what actually guarantees coverage.
pub fn contour_extent(p: &CharParams) -> (f64, f64) {
    let r = root_modulus_bound(p, 0.0) + 1.0;
    let lemma_sq = match p.variant {
        Variant::Delayed => beta_bounds_delayed(p.h, p.delta, p.xi, p.q).1,
        Variant::Instant if p.h > 0.0 => beta_bounds_instant(p.h, p.delta, p.xi, p.q).1,
        Variant::Instant => 0.0,
    };
    let omega = if lemma_sq.is_finite() { (2.0 * lemma_sq.sqrt()).max(r) } else { r };
    (omega, (5.0 * p.xi.max(1.0)).max(r))
}

/// Newton's method on H from `seed`.
pub fn refine_root(seed: Complex64, p: &CharParams) -> Result<Complex64> {
    let guard = 2.0f64.max(0.5 * seed.norm());
    let mut z = seed;
    for _ in 0..100 {
        let (h, dh) = eval_reduced_with_derivative(z, p);
        let step = h / dh;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Err(Error::Diverged { last: z.norm() });
        }
        z -= step;
        if (z - seed).norm() > guard {
            return Err(Error::Diverged { last: z.norm() });
        }
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            // one more step to settle on the last bit
            let (h, dh) = eval_reduced_with_derivative(z, p);
            let last = z - h / dh;
            if z.norm() < 1e-8 {
                return Err(Error::Diverged { last: 0.0 });
            }
            return Ok(if last.re.is_finite() && last.im.is_finite() { last } else { z });
        }
    }
    Err(Error::MaxIterations { iterations: 100, last: z.norm() })
}

/// How far left of the imaginary axis roots are tracked when measuring the
/// stability margin; margins beyond it are reported as this value.
pub const MARGIN_PROBE: f64 = 1.0;

/// Every characteristic root with Re λ ≥ `sigma_lo`, by recursive
/// subdivision of a rectangle known to contain them all, polished with
/// Newton. Sorted by decreasing real part; conjugate pairs both appear.
pub fn locate_roots(p: &CharParams, sigma_lo: f64) -> Result<Vec<Complex64>> {
    let r = root_modulus_bound(p, sigma_lo) + 1.0;
    let top = Rect::strip(sigma_lo, r.max(sigma_lo + 1.0), r);
    let mut roots: Vec<Complex64> = Vec::new();
    let mut stack = vec![(top, winding(p, &top)?.count)];
    while let Some((rect, count)) = stack.pop() {
        if count == 0 {
            continue;
        }
        if count == 1 && rect.size() < 0.05 || rect.size() < 1e-6 {
            let mut z = refine_root(rect.center(), p).unwrap_or_else(|_| rect.center());
            if !rect.contains(z, 1e-6) {
                z = rect.center();
            }
            roots.extend(std::iter::repeat_n(z, count));
            continue;
        }
        // Off-centre splits avoid cutting through roots on symmetry lines.
        let mut done = false;
        for t in [0.4871, 0.5129, 0.4622, 0.5378] {
            let (a, b) = rect.split(t);
            if let (Ok(wa), Ok(wb)) = (winding(p, &a), winding(p, &b)) {
                if wa.count + wb.count == count {
                    stack.push((a, wa.count));
                    stack.push((b, wb.count));
                    done = true;
                    break;
                }
            }
        }
        if !done {
            return Err(Error::ContourTooClose { min_abs: 0.0 });
        }
    }
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(roots)
}

/// Outcome of a stability classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub unstable_count: usize,
    /// Root with the largest real part, when one lies within
    /// [`MARGIN_PROBE`] of the imaginary axis or to its right.
    pub rightmost_root: Option<Complex64>,
    pub stable: bool,
    /// Distance from the imaginary axis to the nearest root, capped at
    /// [`MARGIN_PROBE`].
    pub margin: f64,
}

/// Margins at or below this count as touching the axis.
pub const MARGIN_TOL: f64 = 1e-9;

pub fn verdict(p: &CharParams) -> Result<StabilityVerdict> {
    let (omega, sigma) = contour_extent(p);
    let unstable_count = count_unstable(p, omega, sigma)?;
    let roots = locate_roots(p, -MARGIN_PROBE)?;
    let located_unstable = roots.iter().filter(|z| z.re > 0.0).count();
    if located_unstable != unstable_count {
        return Err(Error::ContourTooClose { min_abs: 0.0 });
    }
    let margin = roots.iter().map(|z| z.re.abs()).fold(MARGIN_PROBE, f64::min);
    let rightmost_root = roots.first().map(|z| Complex64::new(z.re, z.im.abs()));
    Ok(StabilityVerdict { unstable_count, rightmost_root, stable: unstable_count == 0 && margin > MARGIN_TOL, margin })
}
