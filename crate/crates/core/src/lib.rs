//! Stability analysis of regenerative chatter in turning with spindle-speed
//! feedback.
//!
//! Two feedback laws are covered. The *delayed* law drives the spindle from
//! the tool position one revolution back, the *instant* law from the current
//! position. Both are rewritten on a revolution clock η in which the
//! regenerative delay becomes the constant 1, and the crate works in that
//! frame:
//!
//! - [`params`] reduces physical constants to dimensionless groups.
//! - [`lobes_delayed`] and [`lobes_instant`] parameterise the stability
//!   boundaries in the (δ, h) plane.
//! - [`charroots`] counts unstable characteristic roots.
//! - [`simulate`] integrates the delay systems as an independent check.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod charroots;
pub mod error;
pub mod lobes_delayed;
pub mod lobes_instant;
pub mod params;
pub mod rootfind;
pub mod simulate;

pub use boundary::{BoundaryBranch, BoundaryPoint, Interval, LobeIndex};
pub use error::{Error, Result};

use std::fmt;
use std::str::FromStr;

/// Which spindle-speed feedback law is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Spindle speed set from the tool deflection one revolution earlier.
    Delayed,
    /// Spindle speed set from the current tool deflection.
    Instant,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Delayed => "delayed",
            Variant::Instant => "instant",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delayed" => Ok(Variant::Delayed),
            "instant" => Ok(Variant::Instant),
            other => Err(Error::Domain(format!("unknown variant `{other}`"))),
        }
    }
}

/// Boundary branches of lobe `n` for either law.
pub fn sample_branches(variant: Variant, xi: f64, q: f64, n: LobeIndex, samples: usize) -> Result<Vec<BoundaryBranch>> {
    match variant {
        Variant::Delayed => lobes_delayed::sample_branches_delayed(xi, q, n, samples),
        Variant::Instant => lobes_instant::sample_branches_instant(xi, q, n, samples),
    }
}

/// Parameter sets and plot windows of the reference lobe diagrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig4,
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig4, Preset::Fig6, Preset::Fig7, Preset::Fig8];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Fig8 => "fig8",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Preset::Fig4 | Preset::Fig6 => Variant::Delayed,
            Preset::Fig7 | Preset::Fig8 => Variant::Instant,
        }
    }

    /// (ξ, q).
    pub fn xi_q(self) -> (f64, f64) {
        match self {
            Preset::Fig4 => (0.2, 12.0),
            Preset::Fig6 | Preset::Fig7 => (0.2, 0.8),
            Preset::Fig8 => (1.62, 0.8),
        }
    }

    /// Plot window ((δ_min, δ_max), (h_min, h_max)).
    pub fn axes(self) -> ((f64, f64), (f64, f64)) {
        match self {
            Preset::Fig4 => ((0.0, 40.0), (-5.0, 20.0)),
            Preset::Fig6 => ((0.0, 41.0), (-1.0, 20.0)),
            Preset::Fig7 => ((0.0, 42.0), (-1.0, 10.0)),
            Preset::Fig8 => ((0.0, 360.0), (-0.1, 1.5)),
        }
    }

    /// Lobes drawn in the reference diagram.
    pub fn n_max(self) -> u32 {
        match self {
            Preset::Fig4 | Preset::Fig6 | Preset::Fig7 => 1,
            Preset::Fig8 => 3,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Domain(format!("unknown preset `{s}`")))
    }
}
