//! Stability boundary for the instantaneous spindle law.
//!
//! Here iβ solves `λ² + ξλ + δ + δ(h₂ + q/λ)(1 − e^{−λ}) = 0` exactly when
//! (h₂, δ) = (h₂(β), δ(β)). Only the quadrant δ > 0, h₂ > 0 is physical, so
//! besides the zeros of the δ numerator and denominator the zeros γ*, γ̃ of
//! h₂ enter the interval bookkeeping. Which of them exist depends on the
//! sign of ξ − 2q.

use std::f64::consts::PI;

use crate::boundary::{self, half_angle_zero, BoundaryBranch, Interval, LobeIndex, POLE_TOL};
use crate::error::{Error, Result};
use crate::lobes_delayed::beta_star;
use crate::rootfind::{self, ENDPOINT_GAP};
use crate::Variant;

/// Zero of 2q(1−cos β) + β sin β in ((2n−1)π, 2nπ).
pub fn tilde_beta_instant(q: f64, n: LobeIndex) -> Result<f64> {
    half_angle_zero(2.0 * q, n)
}

/// Solution of β cot(β/2) = −q in ((2n−1)π, 2nπ).
pub fn bar_beta(q: f64, n: LobeIndex) -> Result<f64> {
    half_angle_zero(q, n)
}

/// q√(ξ/(ξ−2q)), the largest β at which h₂ can vanish when ξ > 2q.
pub fn zero_reach(xi: f64, q: f64) -> Option<f64> {
    (xi > 2.0 * q).then(|| q * (xi / (xi - 2.0 * q)).sqrt())
}

/// Smallest n with 2nπ ≥ q√(ξ/(ξ−2q)); lobes beyond it carry no h₂ zeros.
pub fn n0(xi: f64, q: f64) -> Option<u32> {
    zero_reach(xi, q).map(|r| ((r / (2.0 * PI)).ceil() as u32).max(1))
}

/// (h₂, δ) at which iβ is a characteristic root.
pub fn h2_delta_of_beta(beta: f64, xi: f64, q: f64) -> Result<(f64, f64)> {
    let (s, c) = beta.sin_cos();
    let h_den = xi * beta * (1.0 - c) + beta * beta * s;
    let d_den = 2.0 * q * (1.0 - c) + beta * s;
    if h_den.abs() < POLE_TOL || d_den.abs() < POLE_TOL {
        return Err(Error::PoleAt(beta));
    }
    let h2 = (q * beta * (1.0 - c) - xi * beta - q * xi * s) / h_den;
    let delta = (xi * beta * beta * (1.0 - c) + beta.powi(3) * s) / d_den;
    Ok((h2, delta))
}

/// Numerator of h₂: qβ(1−cos β) − ξβ − qξ sin β.
pub fn h2_numerator(beta: f64, xi: f64, q: f64) -> f64 {
    q * beta * (1.0 - beta.cos()) - xi * beta - q * xi * beta.sin()
}

/// Right-hand sides of cot(β/2) = −q/β ± q√(1/β² + 2/(qξ) − 1/q²); γ* lies
/// on the `+` branch and γ̃ on the `−` branch. `None` where the radicand is
/// negative.
pub fn cot_branches(beta: f64, xi: f64, q: f64) -> Option<(f64, f64)> {
    let rad = 1.0 / (beta * beta) + 2.0 / (q * xi) - 1.0 / (q * q);
    (rad >= 0.0).then(|| {
        let r = q * rad.sqrt();
        (-q / beta + r, -q / beta - r)
    })
}

/// Which case of the h₂-zero analysis applies to a lobe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H2ZeroCase {
    /// ξ < 2q: always two zeros.
    DampingBelowTwoQ,
    /// ξ > 2q and n > n₀.
    BeyondN0,
    /// ξ > 2q and q√(ξ/(ξ−2q)) ≤ (2n−1)π.
    ReachBelowWindow,
    /// ξ > 2q and β̄ₙ > q√(ξ/(ξ−2q)).
    BarBeyondReach,
    /// ξ > 2q and β̄ₙ ≤ q√(ξ/(ξ−2q)): two zeros below β̃ₙ.
    BarWithinReach,
}

/// Zeros of h₂ in lobe `n`, tagged with the case that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Zeros {
    pub case: H2ZeroCase,
    pub zeros: Option<(f64, f64)>,
}

fn check_xi_q(xi: f64, q: f64) -> Result<()> {
    if !(xi > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("xi and q must be positive (xi={xi}, q={q})")));
    }
    if (xi - 2.0 * q).abs() <= 1e-12 * xi.max(1.0) {
        return Err(Error::UnsupportedParameters(format!("xi = 2q ({xi}) is excluded")));
    }
    Ok(())
}

/// Zeros γ*ₙ < γ̃ₙ of h₂ in lobe `n`, when present.
pub fn h2_zeros(xi: f64, q: f64, n: LobeIndex) -> Result<H2Zeros> {
    check_xi_q(xi, q)?;
    let nf = n.f();
    let num = |b: f64| h2_numerator(b, xi, q);
    let lo = 2.0 * (nf - 1.0) * PI + ENDPOINT_GAP;
    let hi = 2.0 * nf * PI;
    let Some(reach) = zero_reach(xi, q) else {
        let bs = beta_star(xi, n)?;
        let bt = tilde_beta_instant(q, n)?;
        let gamma_star = rootfind::solve_in(num, lo, bs)?;
        let gamma_tilde = rootfind::solve_in(num, bt, hi)?;
        return Ok(H2Zeros { case: H2ZeroCase::DampingBelowTwoQ, zeros: Some((gamma_star, gamma_tilde)) });
    };
    let none = |case| Ok(H2Zeros { case, zeros: None });
    if n.get() > n0(xi, q).unwrap_or(1) {
        return none(H2ZeroCase::BeyondN0);
    }
    if reach <= (2.0 * nf - 1.0) * PI {
        return none(H2ZeroCase::ReachBelowWindow);
    }
    let bb = bar_beta(q, n)?;
    if bb > reach + 1e-10 {
        return none(H2ZeroCase::BarBeyondReach);
    }
    let zeros = if (bb - reach).abs() <= 1e-10 {
        // tangency: the two zeros merge at β̄
        (bb, bb)
    } else {
        let bt = tilde_beta_instant(q, n)?;
        (rootfind::solve_in(num, lo, bb)?, rootfind::solve_in(num, bb, bt)?)
    };
    Ok(H2Zeros { case: H2ZeroCase::BarWithinReach, zeros: Some(zeros) })
}

/// All zeros organising lobe `n` of the instant boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantLobeZeros {
    pub n: LobeIndex,
    pub beta_star: f64,
    pub tilde_beta: f64,
    pub gamma_star: Option<f64>,
    pub gamma_tilde: Option<f64>,
    /// Only computed when ξ > 2q.
    pub bar_beta: Option<f64>,
    /// Only defined when ξ > 2q.
    pub n0: Option<u32>,
}

impl InstantLobeZeros {
    pub fn compute(xi: f64, q: f64, n: LobeIndex) -> Result<Self> {
        let hz = h2_zeros(xi, q, n)?;
        Ok(Self {
            n,
            beta_star: beta_star(xi, n)?,
            tilde_beta: tilde_beta_instant(q, n)?,
            gamma_star: hz.zeros.map(|z| z.0),
            gamma_tilde: hz.zeros.map(|z| z.1),
            bar_beta: if xi > 2.0 * q { Some(bar_beta(q, n)?) } else { None },
            n0: n0(xi, q),
        })
    }
}

/// Open β-intervals of lobe `n` on which δ(β) > 0 and h₂(β) > 0.
pub fn positive_pair_intervals_instant(xi: f64, q: f64, n: LobeIndex) -> Result<Vec<Interval>> {
    let hz = h2_zeros(xi, q, n)?;
    let bs = beta_star(xi, n)?;
    let two_n_pi = n.window().hi;
    let mut out = Vec::with_capacity(2);
    match (hz.case, hz.zeros) {
        (H2ZeroCase::DampingBelowTwoQ, Some((gs, gt))) => {
            out.push(Interval::new(gs, bs));
            out.push(Interval::new(gt, two_n_pi));
        }
        (H2ZeroCase::BarWithinReach, Some((gs, gt))) => {
            out.push(Interval::new(gs, gt));
            out.push(Interval::new(bs, two_n_pi));
        }
        _ => out.push(Interval::new(bs, two_n_pi)),
    }
    out.retain(|iv| !iv.is_empty());
    Ok(out)
}

/// Bounds (lower, upper) on β² for an imaginary root iβ at (h₂, δ), h₂ > 0.
pub fn beta_bounds_instant(h2: f64, delta: f64, xi: f64, q: f64) -> (f64, f64) {
    let b = delta * h2 + 2.0 * delta * h2 * h2 - xi * q;
    let upper = (b + (b * b + 8.0 * delta * h2 * q * q).sqrt()) / (2.0 * h2);
    let lower = (delta - q * xi / h2).max(0.0);
    (lower, upper)
}

/// One branch per positive-pair interval of lobe `n`.
pub fn sample_branches_instant(xi: f64, q: f64, n: LobeIndex, samples: usize) -> Result<Vec<BoundaryBranch>> {
    positive_pair_intervals_instant(xi, q, n)?
        .into_iter()
        .map(|iv| boundary::sample_interval(Variant::Instant, n, iv, samples, |b| h2_delta_of_beta(b, xi, q)))
        .collect()
}
