//! Types and helpers shared by the two lobe modules.

use std::f64::consts::PI;
use std::fmt;
use std::num::NonZeroU32;

use crate::error::{Error, Result};
use crate::rootfind;
use crate::Variant;

/// Lobe index n ≥ 1; lobe n lives on β ∈ (2(n−1)π, 2nπ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LobeIndex(NonZeroU32);

impl LobeIndex {
    pub fn new(n: u32) -> Result<Self> {
        NonZeroU32::new(n).map(Self).ok_or_else(|| Error::Domain("lobe index must be at least 1".into()))
    }

    pub fn get(self) -> u32 {
        self.0.get()
    }

    pub(crate) fn f(self) -> f64 {
        f64::from(self.get())
    }

    /// The window (2(n−1)π, 2nπ).
    pub fn window(self) -> Interval {
        let n = self.f();
        Interval::new(2.0 * (n - 1.0) * PI, 2.0 * n * PI)
    }
}

impl fmt::Display for LobeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

/// Open interval (lo, hi) in β.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }
}

/// One point (β, δ(β), h(β)) of a stability boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub beta: f64,
    pub delta: f64,
    pub h: f64,
}

/// A sampled boundary curve over one positivity interval of lobe `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBranch {
    pub variant: Variant,
    pub n: LobeIndex,
    pub beta_interval: Interval,
    pub points: Vec<BoundaryPoint>,
}

/// Closest sample to an interval end, as a fraction of its width.
const END_CLEARANCE: f64 = 1e-4;

/// `count` interior points of `iv`, spaced geometrically towards both ends
/// so the local density falls off like 1/distance-to-endpoint.
pub fn clustered_grid(iv: Interval, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (iv.lo + iv.hi)],
        _ => {
            let m = count as f64;
            // logistic map, scaled so the outermost samples sit END_CLEARANCE
            // of the width from the ends
            let span = (1.0 / END_CLEARANCE - 1.0).ln() / (1.0 - 1.0 / m);
            (0..count)
                .map(|k| {
                    let u = (k as f64 + 0.5) / m;
                    let s = 1.0 / (1.0 + (-span * (2.0 * u - 1.0)).exp());
                    iv.lo + iv.width() * s
                })
                .collect()
        }
    }
}

/// The unique zero of `a·sin(β/2) + β·cos(β/2)` in ((2n−1)π, 2nπ), a > 0.
///
/// On that window this is the half-angle form of `a(1 − cos β) + β sin β`
/// with the common factor `2 sin(β/2)` removed, so it has no spurious zero
/// at 2nπ. With `a = ξ` it gives β*, with `a = 2q` the instant-law β̃, and
/// with `a = q` the solution of `β cot(β/2) = −q`.
pub(crate) fn half_angle_zero(a: f64, n: LobeIndex) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("coefficient must be positive, got {a}")));
    }
    let f = |b: f64| a * (0.5 * b).sin() + b * (0.5 * b).cos();
    let nf = n.f();
    rootfind::solve_in(f, (2.0 * nf - 1.0) * PI, 2.0 * nf * PI)
}

/// Samples `eval` on a clustered grid of `iv`, dropping nothing: callers
/// pick intervals on which `eval` is finite.
pub(crate) fn sample_interval(
    variant: Variant,
    n: LobeIndex,
    iv: Interval,
    count: usize,
    eval: impl Fn(f64) -> Result<(f64, f64)>,
) -> Result<BoundaryBranch> {
    let points = clustered_grid(iv, count)
        .into_iter()
        .map(|beta| eval(beta).map(|(h, delta)| BoundaryPoint { beta, delta, h }))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryBranch { variant, n, beta_interval: iv, points })
}

/// |x| below which a parameterisation denominator counts as zero.
pub(crate) const POLE_TOL: f64 = 1e-13;
