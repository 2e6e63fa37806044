//! Stability boundary for the delayed spindle law.
//!
//! A purely imaginary root λ = iβ of
//! `λ² + ξλ + δ + δ(h₁ + q/(λe^λ))(1 − e^{−λ}) = 0` exists exactly when
//! (h₁, δ) = (h₁(β), δ(β)) below. Physically relevant crossings need δ > 0,
//! and the β-intervals where that holds are assembled from the zeros β*
//! (numerator of δ) and β̃ (denominator of δ).

use std::f64::consts::{PI, TAU};

use crate::boundary::{self, half_angle_zero, BoundaryBranch, Interval, LobeIndex, POLE_TOL};
use crate::error::{Error, Result};
use crate::rootfind;
use crate::Variant;

/// Zeros that organise lobe `n` of the delayed boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedLobeZeros {
    pub n: LobeIndex,
    /// Zero of ξ(1−cos β) + β sin β in ((2n−1)π, 2nπ).
    pub beta_star: f64,
    /// 2nπ − arccos((√5−1)/2), the interior maximum that splits β̃ₙ,₂ and β̃ₙ,₃.
    pub beta1: f64,
    pub q_threshold: f64,
    /// Zeros of 2q cos β(1−cos β) + β sin β in the lobe window, ascending.
    pub tilde_betas: Vec<f64>,
}

impl DelayedLobeZeros {
    pub fn compute(xi: f64, q: f64, n: LobeIndex) -> Result<Self> {
        Ok(Self {
            n,
            beta_star: beta_star(xi, n)?,
            beta1: beta1(n),
            q_threshold: q_threshold(n),
            tilde_betas: tilde_betas(q, n)?,
        })
    }
}

/// Zero of ξ(1−cos β) + β sin β in ((2n−1)π, 2nπ).
pub fn beta_star(xi: f64, n: LobeIndex) -> Result<f64> {
    half_angle_zero(xi, n)
}

/// 2nπ − arccos((√5−1)/2).
pub fn beta1(n: LobeIndex) -> f64 {
    2.0 * n.f() * PI - golden_cos().acos()
}

/// cos β₁ = (√5 − 1)/2.
fn golden_cos() -> f64 {
    0.5 * (5f64.sqrt() - 1.0)
}

/// Smallest q for which lobe `n` has three denominator zeros:
/// β₁·√(2√5−2)/(4√5−8).
pub fn q_threshold(n: LobeIndex) -> f64 {
    let s5 = 5f64.sqrt();
    beta1(n) * (2.0 * s5 - 2.0).sqrt() / (4.0 * s5 - 8.0)
}

/// The δ denominator 2q cos β(1−cos β) + β sin β.
pub fn delta_denominator(beta: f64, q: f64) -> f64 {
    let c = beta.cos();
    2.0 * q * c * (1.0 - c) + beta * beta.sin()
}

/// Zeros of 2q cos β(1−cos β) + β sin β in (2(n−1)π, 2nπ).
///
/// Dividing out 2 sin(β/2) leaves `2q cos β sin(β/2) + β cos(β/2)`, which is
/// smooth across the window and is what gets bracketed.
pub fn tilde_betas(q: f64, n: LobeIndex) -> Result<Vec<f64>> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("q must be positive, got {q}")));
    }
    let threshold = q_threshold(n);
    if (q - threshold).abs() < 1e-8 * threshold {
        return Err(Error::DegenerateTangency { n: n.get(), q, threshold });
    }
    let f = |b: f64| 2.0 * q * b.cos() * (0.5 * b).sin() + b * (0.5 * b).cos();
    let nf = n.f();
    let first = rootfind::solve_in(f, (2.0 * nf - 1.5) * PI, (2.0 * nf - 1.0) * PI)?;
    if q < threshold {
        return Ok(vec![first]);
    }
    let b1 = beta1(n);
    let second = rootfind::solve_in(f, (2.0 * nf - 0.5) * PI, b1)?;
    let third = rootfind::solve_in(f, b1, 2.0 * nf * PI)?;
    Ok(vec![first, second, third])
}

/// (h₁, δ) at which iβ is a characteristic root.
pub fn h1_delta_of_beta(beta: f64, xi: f64, q: f64) -> Result<(f64, f64)> {
    let (s, c) = beta.sin_cos();
    let h_den = xi * beta * (1.0 - c) + beta * beta * s;
    let d_den = 2.0 * q * c * (1.0 - c) + beta * s;
    if h_den.abs() < POLE_TOL || d_den.abs() < POLE_TOL {
        return Err(Error::PoleAt(beta));
    }
    let h1 = (q * beta * (1.0 - c) * (1.0 + 2.0 * c) - xi * beta + q * xi * s * (1.0 - 2.0 * c)) / h_den;
    let delta = (xi * beta * beta * (1.0 - c) + beta.powi(3) * s) / d_den;
    Ok((h1, delta))
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

/// Open β-intervals of lobe `n` on which δ(β) > 0.
pub fn positive_delta_intervals(xi: f64, q: f64, n: LobeIndex) -> Result<Vec<Interval>> {
    check_xi_q(xi, q)?;
    let z = DelayedLobeZeros::compute(xi, q, n)?;
    let lo = n.window().lo;
    let two_n_pi = n.window().hi;
    let bs = z.beta_star;
    let mut out = vec![Interval::new(lo, z.tilde_betas[0])];
    match z.tilde_betas[..] {
        [_, b2, b3] => {
            if bs <= b2 {
                out.push(Interval::new(bs, b2));
                out.push(Interval::new(b3, two_n_pi));
            } else if bs <= b3 {
                out.push(Interval::new(b2, bs));
                out.push(Interval::new(b3, two_n_pi));
            } else {
                out.push(Interval::new(b2, b3));
                out.push(Interval::new(bs, two_n_pi));
            }
        }
        _ => out.push(Interval::new(bs, two_n_pi)),
    }
    out.retain(|iv| !iv.is_empty());
    Ok(out)
}

/// Bounds (lower, upper) on β² for an imaginary root iβ at (h₁, δ).
///
/// These come from crude termwise estimates of the real and imaginary
/// parts and are not tight; along parts of the boundary the true β² lies a
/// few percent outside them. Root counting therefore never relies on them
/// alone (see [`crate::charroots::root_modulus_bound`]).
pub fn beta_bounds_delayed(h1: f64, delta: f64, xi: f64, q: f64) -> (f64, f64) {
    if h1 == 0.0 {
        return (0.0, 9.0 * delta * q / (8.0 * xi));
    }
    let a = h1.abs();
    let b_up = delta * a + 2.0 * delta * h1 * h1 + 2.0 * q * xi;
    let upper = (b_up + (b_up * b_up + 8.0 * q * q * delta * a).sqrt()) / (2.0 * a);
    let b_lo = delta * a - 2.0 * delta * h1 * h1 - 2.0 * q * xi;
    let disc = b_lo * b_lo - 4.0 * q * q * delta * a;
    let lower = if disc >= 0.0 { ((b_lo + disc.sqrt()) / (2.0 * a)).max(0.0) } else { 0.0 };
    (lower, upper)
}

/// Vibration frequency in cycles per revolution, β/(2π).
pub fn frequency_estimate(beta: f64) -> f64 {
    beta / TAU
}

/// One branch per positivity interval of lobe `n`, each with
/// `samples_per_interval` points.
pub fn sample_branches_delayed(
    xi: f64,
    q: f64,
    n: LobeIndex,
    samples_per_interval: usize,
) -> Result<Vec<BoundaryBranch>> {
    positive_delta_intervals(xi, q, n)?
        .into_iter()
        .map(|iv| {
            boundary::sample_interval(Variant::Delayed, n, iv, samples_per_interval, |b| h1_delta_of_beta(b, xi, q))
        })
        .collect()
}
