//! Physical and dimensionless parameters, the spindle gain condition and the
//! stationary cutting state.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use crate::charroots::CharParams;
use crate::error::{Error, Result};
use crate::Variant;

/// Turning-model parameters in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Tool mass m.
    pub m: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub k_x: f64,
    pub k_y: f64,
    /// Cutting coefficient K_x.
    pub cutting_x: f64,
    /// Cutting coefficient K_y.
    pub cutting_y: f64,
    /// Depth of cut ω.
    pub omega_cut: f64,
    /// Cutting force exponent.
    pub q: f64,
    /// Feed speed ν.
    pub nu: f64,
    /// Workpiece radius R.
    pub radius: f64,
    /// Virtual constant spindle speed Ω₀.
    pub omega0: f64,
}

/// Default cutting force exponent.
pub const DEFAULT_Q: f64 = 0.75;

const SYMMETRY_TOL: f64 = 1e-12;

/// Keys accepted in parameter files, in file order.
pub const PARAM_KEYS: [&str; 12] =
    ["m", "c_x", "c_y", "k_x", "k_y", "K_x", "K_y", "omega_cut", "q", "nu", "R", "Omega0"];

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in PARAM_KEYS.iter().zip(self.values()) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn values(&self) -> [f64; 12] {
        [
            self.m,
            self.c_x,
            self.c_y,
            self.k_x,
            self.k_y,
            self.cutting_x,
            self.cutting_y,
            self.omega_cut,
            self.q,
            self.nu,
            self.radius,
            self.omega0,
        ]
    }

    /// The characteristic equation needs c_x = c_y and k_x = k_y.
    pub fn ensure_symmetric(&self) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs());
        if close(self.c_x, self.c_y) && close(self.k_x, self.k_y) {
            Ok(())
        } else {
            Err(Error::UnsupportedParameters(
                "characteristic analysis needs a symmetric tool (c_x = c_y, k_x = k_y)".into(),
            ))
        }
    }

    /// A symmetric tool whose reduced parameters are (ξ, δ, h, q), with
    /// k* = 1 and unit mass, radius 1/(2π) and Ω₀ = 2π.
    ///
    /// The delayed law takes k_r = 1 and picks p so that 1 − p has the sign
    /// of h₁. The instant law needs h₂ > 0 and uses p = 1/2.
    pub fn realize(variant: Variant, xi: f64, delta: f64, h: f64, q: f64) -> Result<Self> {
        CharParams::new(variant, xi, delta, h, q)?;
        let (p, k1p): (f64, f64) = match variant {
            Variant::Delayed if h > 0.0 => (0.5, 2.0 * h),
            Variant::Delayed if h < 0.0 => (2.0, -h),
            Variant::Delayed => (1.0, 1.0),
            Variant::Instant if h > 0.0 => (0.5, h),
            Variant::Instant => {
                return Err(Error::UnsupportedParameters(format!(
                    "h2 = K1 p^(q-1) is positive for every physical tool, got {h}"
                )))
            }
        };
        // K₁p^{q−1} = k1p with K₁ = qK_y/δ when ω = 1 and 2πR = 1
        let k1 = k1p * p.powf(1.0 - q);
        let cutting = k1 * delta / q;
        let phys = Self {
            m: 1.0,
            c_x: xi,
            c_y: xi,
            k_x: delta,
            k_y: delta,
            cutting_x: cutting,
            cutting_y: cutting,
            omega_cut: 1.0,
            q,
            nu: p,
            radius: 1.0 / TAU,
            omega0: TAU,
        };
        phys.validate()?;
        Ok(phys)
    }

    /// Reduced characteristic parameters for `variant`.
    pub fn char_params(&self, variant: Variant) -> Result<CharParams> {
        self.ensure_symmetric()?;
        let d = reduce(self)?;
        let h = match variant {
            Variant::Delayed => d.h1,
            Variant::Instant => d.h2,
        };
        CharParams::new(variant, d.xi, d.delta, h, d.q)
    }
}

impl FromStr for PhysicalParams {
    type Err = Error;

    /// `key=value` lines; `#` starts a comment; every key exactly once.
    fn from_str(s: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 12] = [None; 12];
        for (i, raw) in s.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let (key, value) =
                line.split_once('=').ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
            let key = key.trim();
            let slot =
                PARAM_KEYS.iter().position(|k| *k == key).ok_or_else(|| parse_err(format!("unknown key {key:?}")))?;
            if vals[slot].is_some() {
                return Err(parse_err(format!("duplicate key {key:?}")));
            }
            let v: f64 =
                value.trim().parse().map_err(|_| parse_err(format!("{key}: not a number: {:?}", value.trim())))?;
            vals[slot] = Some(v);
        }
        let mut out = [0.0; 12];
        for (k, (slot, v)) in out.iter_mut().zip(vals).enumerate() {
            *slot = v.ok_or_else(|| Error::Parse { line: 0, message: format!("missing key {:?}", PARAM_KEYS[k]) })?;
        }
        let [m, c_x, c_y, k_x, k_y, cutting_x, cutting_y, omega_cut, q, nu, radius, omega0] = out;
        let phys = Self { m, c_x, c_y, k_x, k_y, cutting_x, cutting_y, omega_cut, q, nu, radius, omega0 };
        phys.validate()?;
        Ok(phys)
    }
}

impl fmt::Display for PhysicalParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in PARAM_KEYS.iter().zip(self.values()) {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Reduced groups controlling the lobe geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub xi: f64,
    pub delta: f64,
    pub h1: f64,
    pub h2: f64,
    pub k_star: f64,
    /// Dimensionless depth of cut K₁.
    pub k1: f64,
    /// Cutting force ratio K_y/K_x.
    pub k_r: f64,
    /// Dimensionless feed per revolution.
    pub p: f64,
    pub c_gain: f64,
    pub q: f64,
}

impl fmt::Display for DimensionlessParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "xi={:.12e}", self.xi)?;
        writeln!(f, "delta={:.12e}", self.delta)?;
        writeln!(f, "h1={:.12e}", self.h1)?;
        writeln!(f, "h2={:.12e}", self.h2)?;
        writeln!(f, "k_star={:.12e}", self.k_star)?;
        writeln!(f, "p={:.12e}", self.p)?;
        writeln!(f, "K1={:.12e}", self.k1)?;
        writeln!(f, "k_r={:.12e}", self.k_r)?;
        writeln!(f, "c={:.12e}", self.c_gain)?;
        write!(f, "q={}", self.q)
    }
}

/// Stationary cutting state; identical for both control laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryState {
    pub r_star: f64,
    pub rho_star: f64,
    pub k_star: f64,
    pub j_star: f64,
    pub l_star: f64,
}

/// Gain c that makes the stationary delay equal 2π/Ω₀.
pub fn spindle_gain(phys: &PhysicalParams) -> Result<f64> {
    phys.validate()?;
    let p = phys;
    Ok(p.radius * p.omega0.powf(p.q + 1.0) * p.k_x / ((TAU * p.nu).powf(p.q) * p.cutting_x * p.omega_cut))
}

/// Stationary delay for an arbitrary gain c.
pub fn stationary_delay(phys: &PhysicalParams, c: f64) -> Result<f64> {
    phys.validate()?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!("gain must be positive, got {c}")));
    }
    let p = phys;
    Ok((TAU * p.radius * p.k_x / (c * p.cutting_x * p.omega_cut * p.nu.powf(p.q))).powf(1.0 / (p.q + 1.0)))
}

pub fn stationary_state(phys: &PhysicalParams, c: f64) -> Result<StationaryState> {
    let k_star = stationary_delay(phys, c)?;
    let chip = (phys.nu * k_star).powf(phys.q);
    Ok(StationaryState {
        r_star: phys.cutting_x * phys.omega_cut * chip / phys.k_x,
        rho_star: -phys.cutting_y * phys.omega_cut * chip / phys.k_y,
        k_star,
        j_star: 0.0,
        l_star: 0.0,
    })
}

pub fn reduce(phys: &PhysicalParams) -> Result<DimensionlessParams> {
    let c = spindle_gain(phys)?;
    let k_star = stationary_delay(phys, c)?;
    let p = phys.nu / (phys.radius * phys.omega0);
    let k_r = phys.cutting_y / phys.cutting_x;
    let k1 = phys.q * phys.cutting_y * phys.omega_cut * (TAU * phys.radius).powf(phys.q - 1.0) / phys.k_x;
    let h2 = k1 * p.powf(phys.q - 1.0);
    Ok(DimensionlessParams {
        xi: phys.c_x * k_star / phys.m,
        delta: phys.k_x * k_star * k_star / phys.m,
        h1: h2 * (1.0 - p / k_r),
        h2,
        k_star,
        k1,
        k_r,
        p,
        c_gain: c,
        q: phys.q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> PhysicalParams {
        PhysicalParams {
            m: 1.0,
            c_x: 0.05,
            c_y: 0.05,
            k_x: 1.0,
            k_y: 1.0,
            cutting_x: 1.0,
            cutting_y: 1.0,
            omega_cut: 0.1,
            q: 0.75,
            nu: 0.01,
            radius: 0.05,
            omega0: 100.0,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn gain_collapses_to_two_pi() {
        let phys = PhysicalParams {
            radius: 1.0,
            omega0: TAU,
            k_x: 1.0,
            nu: 1.0,
            cutting_x: 1.0,
            omega_cut: 1.0,
            q: 0.75,
            ..example()
        };
        assert!(rel(spindle_gain(&phys).unwrap(), TAU) < 1e-14);
    }

    #[test]
    fn example_set_round_trips() {
        let phys = example();
        let c = spindle_gain(&phys).unwrap();
        // hand evaluation: 0.05·100^1.75·1/((2π·0.01)^0.75·1·0.1)
        let by_hand = 0.05 * 100f64.powf(1.75) / ((TAU * 0.01f64).powf(0.75) * 0.1);
        assert!(rel(c, by_hand) < 1e-14);
        assert!(rel(c, 12598.971776919036) < 1e-12);
        let d = reduce(&phys).unwrap();
        assert!(rel(d.k_star, TAU / 100.0) < 1e-12);
        assert!(rel(d.p, 0.002) < 1e-14);
        assert!(rel(d.k_r, 1.0) < 1e-14);
        assert!(rel(d.xi, 0.05 * TAU / 100.0) < 1e-12);
        assert!(rel(d.delta, (TAU / 100.0).powi(2)) < 1e-12);
        // K₁ = qK_yω(2πR)^{q−1}/k_x
        assert!(rel(d.k1, 0.75 * 0.1 * (TAU * 0.05f64).powf(-0.25)) < 1e-14);
    }

    #[test]
    fn ratio_definitions() {
        let phys = PhysicalParams { cutting_y: 2.0, cutting_x: 4.0, nu: 1.0, radius: 2.0, omega0: 0.25, ..example() };
        let d = reduce(&phys).unwrap();
        assert_eq!(d.k_r, 0.5);
        assert_eq!(d.p, 2.0);
    }

    fn check_identities(phys: &PhysicalParams) {
        let d = reduce(phys).unwrap();
        let ks = d.k_star;
        let a_x = phys.q * phys.cutting_x * phys.omega_cut * (phys.nu * ks).powf(phys.q - 1.0) / phys.m;
        let a_y = phys.q * phys.cutting_y * phys.omega_cut * (phys.nu * ks).powf(phys.q - 1.0) / phys.m;
        let km = phys.k_x / phys.m;
        assert!(rel(a_x, km * d.k1 / d.k_r * d.p.powf(phys.q - 1.0)) < 1e-10);
        assert!(rel(a_y, km * d.k1 * d.p.powf(phys.q - 1.0)) < 1e-10);
        let scale = TAU * phys.radius;
        assert!(rel(ks.powi(3) * phys.nu / scale, d.p * ks * ks) < 1e-10);
        assert!(
            rel(d.c_gain * ks.powi(3) * phys.nu / scale, ks * phys.q * d.k_r / d.k1 * d.p.powf(1.0 - phys.q)) < 1e-10
        );
        assert!(rel(d.h2, d.k1 * d.p.powf(phys.q - 1.0)) < 1e-15);
        assert!(rel(d.h1, d.h2 * (1.0 - d.p / d.k_r)) < 1e-15);
    }

    #[test]
    fn simplification_identities_on_example() {
        check_identities(&example());
    }

    #[test]
    fn stationary_state_symmetry_and_sign() {
        let phys = example();
        let c = spindle_gain(&phys).unwrap();
        let s = stationary_state(&phys, c).unwrap();
        assert!(s.r_star > 0.0 && s.rho_star < 0.0);
        assert!(rel(-s.rho_star, s.r_star) < 1e-15);
        assert_eq!((s.j_star, s.l_star), (0.0, 0.0));
        assert!(rel(s.k_star, TAU / phys.omega0) < 1e-12);
        // k* = 2πR/(c r*)
        assert!(rel(s.k_star, TAU * phys.radius / (c * s.r_star)) < 1e-12);
    }

    #[test]
    fn delay_decreases_with_gain() {
        let phys = example();
        let ks: Vec<f64> = (1..50).map(|i| stationary_delay(&phys, 10.0 * i as f64).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_non_positive() {
        let phys = PhysicalParams { nu: 0.0, ..example() };
        assert!(matches!(spindle_gain(&phys), Err(Error::Domain(_))));
        assert!(matches!(reduce(&PhysicalParams { m: -1.0, ..example() }), Err(Error::Domain(_))));
        assert!(stationary_delay(&example(), 0.0).is_err());
    }

    #[test]
    fn asymmetric_tool_rejected_for_characteristic_analysis() {
        let phys = PhysicalParams { c_y: 0.06, ..example() };
        assert!(reduce(&phys).is_ok());
        assert!(matches!(phys.char_params(Variant::Delayed), Err(Error::UnsupportedParameters(_))));
    }

    #[test]
    fn realization_reproduces_target() {
        for (v, h) in
            [(Variant::Delayed, 0.7), (Variant::Delayed, -2.0), (Variant::Delayed, 0.0), (Variant::Instant, 0.3)]
        {
            let phys = PhysicalParams::realize(v, 0.2, 3.5, h, 0.8).unwrap();
            let cp = phys.char_params(v).unwrap();
            assert!(rel(cp.xi, 0.2) < 1e-12);
            assert!(rel(cp.delta, 3.5) < 1e-12);
            assert!((cp.h - h).abs() < 1e-12);
            let d = reduce(&phys).unwrap();
            assert!(rel(d.k_star, 1.0) < 1e-12);
        }
        assert!(matches!(
            PhysicalParams::realize(Variant::Instant, 0.2, 1.0, -0.1, 0.8),
            Err(Error::UnsupportedParameters(_))
        ));
    }

    #[test]
    fn parses_param_file() {
        let text = "# example tool\nm=1\nc_x=0.05\nc_y = 0.05\nk_x=1\nk_y=1\nK_x=1\nK_y=1\nomega_cut=0.1 # depth\nq=0.75\nnu=0.01\nR=0.05\nOmega0=100\n";
        let phys: PhysicalParams = text.parse().unwrap();
        assert_eq!(phys, example());
        let again: PhysicalParams = phys.to_string().parse().unwrap();
        assert_eq!(again, phys);
    }

    #[test]
    fn parser_rejects_bad_input() {
        let base = example().to_string();
        let unknown = format!("{base}speed=3\n");
        assert!(matches!(unknown.parse::<PhysicalParams>(), Err(Error::Parse { line: 13, .. })));
        let missing = base.replace("nu=0.01\n", "");
        assert!(matches!(missing.parse::<PhysicalParams>(), Err(Error::Parse { .. })));
        let dup = format!("{base}q=0.8\n");
        assert!(dup.parse::<PhysicalParams>().is_err());
        assert!("m 1".parse::<PhysicalParams>().is_err());
        let neg = base.replace("m=1", "m=-1");
        assert!(matches!(neg.parse::<PhysicalParams>(), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn round_trip_identities(
            m in 0.1f64..10.0, c in 0.001f64..1.0, k in 0.1f64..1e3,
            kx in 0.1f64..10.0, ky in 0.1f64..10.0, w in 1e-3f64..1.0,
            q in 0.3f64..2.0, nu in 1e-3f64..1.0, r in 0.01f64..1.0, om in 1.0f64..500.0,
        ) {
            let phys = PhysicalParams {
                m, c_x: c, c_y: c, k_x: k, k_y: k, cutting_x: kx, cutting_y: ky,
                omega_cut: w, q, nu, radius: r, omega0: om,
            };
            check_identities(&phys);
            let d = reduce(&phys).unwrap();
            prop_assert!(rel(d.k_star, TAU / om) < 1e-12);
            let back = (TAU * r * k / (d.c_gain * kx * w * nu.powf(q))).powf(1.0 / (q + 1.0));
            prop_assert!(rel(back, TAU / om) < 1e-12);
        }
    }
}
