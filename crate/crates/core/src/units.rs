//! Internal unit system and unit-suffixed quantity parsing.
//!
//! Everything inside the crate uses a single system: time in ps, rates in
//! ps⁻¹, energies in meV, angular frequencies in rad/ps. Inputs carrying
//! other units (ns, eV, K, SI material constants) are converted at the
//! boundary.

/// Reduced Planck constant, meV·ps.
pub const HBAR_MEV_PS: f64 = 0.6582119569;
/// Boltzmann constant, meV/K.
pub const KB_MEV_PER_K: f64 = 0.08617333262;

/// Convert an energy in meV to an angular frequency in rad/ps.
pub fn mev_to_radps(e_mev: f64) -> f64 {
    e_mev / HBAR_MEV_PS
}

/// Convert an angular frequency in rad/ps to an energy in meV.
pub fn radps_to_mev(omega: f64) -> f64 {
    omega * HBAR_MEV_PS
}

/// Thermal energy k_B·T in meV for a temperature in Kelvin.
pub fn thermal_energy_mev(temperature_k: f64) -> f64 {
    KB_MEV_PER_K * temperature_k
}

use crate::error::{CoemitError, Result};

/// A parsed physical quantity with an explicit unit suffix, e.g. "1.76 ns",
/// "2.9 meV", "4 K". Rates may be given as inverse times ("1/1.76 ns" is not
/// accepted; use the time and invert at the call site).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    /// Time, stored in ps.
    Time(f64),
    /// Rate, stored in ps⁻¹.
    Rate(f64),
    /// Energy, stored in meV.
    Energy(f64),
    /// Temperature, stored in K.
    Temperature(f64),
    /// Dimensionless number.
    Dimensionless(f64),
}

impl Quantity {
    pub fn parse(s: &str) -> Result<Quantity> {
        let s = s.trim();
        // longest-suffix match so "meV" wins over "eV" and scientific
        // notation ("7.5e-5") is not split at its exponent marker
        const SUFFIXES: [&str; 13] = [
            "ueV", "µeV", "meV", "eV", "/fs", "/ps", "/ns", "fs", "ps", "ns", "us", "µs", "K",
        ];
        let unit_part = SUFFIXES
            .iter()
            .copied()
            .find(|u| s.ends_with(u) && s[..s.len() - u.len()].trim().parse::<f64>().is_ok())
            .unwrap_or("");
        let num_part = &s[..s.len() - unit_part.len()];
        let value: f64 = num_part
            .trim()
            .parse()
            .map_err(|_| CoemitError::UnitParse(format!("bad quantity {s:?}")))?;
        let q = match unit_part {
            "" => Quantity::Dimensionless(value),
            "fs" => Quantity::Time(value * 1e-3),
            "ps" => Quantity::Time(value),
            "ns" => Quantity::Time(value * 1e3),
            "us" | "µs" => Quantity::Time(value * 1e6),
            "/fs" => Quantity::Rate(value * 1e3),
            "/ps" => Quantity::Rate(value),
            "/ns" => Quantity::Rate(value * 1e-3),
            "ueV" | "µeV" => Quantity::Energy(value * 1e-3),
            "meV" => Quantity::Energy(value),
            "eV" => Quantity::Energy(value * 1e3),
            "K" => Quantity::Temperature(value),
            other => {
                return Err(CoemitError::UnitParse(format!(
                    "unknown unit {other:?} in {s:?}"
                )))
            }
        };
        Ok(q)
    }

    /// Interpret as a time in ps.
    pub fn as_time_ps(&self) -> Result<f64> {
        match self {
            Quantity::Time(t) => Ok(*t),
            other => Err(CoemitError::UnitParse(format!("expected time, got {other:?}"))),
        }
    }

    /// Interpret as a rate in ps⁻¹. A time quantity is inverted.
    pub fn as_rate_per_ps(&self) -> Result<f64> {
        match self {
            Quantity::Rate(r) => Ok(*r),
            Quantity::Time(t) if *t > 0.0 => Ok(1.0 / t),
            other => Err(CoemitError::UnitParse(format!("expected rate, got {other:?}"))),
        }
    }

    pub fn as_energy_mev(&self) -> Result<f64> {
        match self {
            Quantity::Energy(e) => Ok(*e),
            other => Err(CoemitError::UnitParse(format!(
                "expected energy, got {other:?}"
            ))),
        }
    }

    pub fn as_temperature_k(&self) -> Result<f64> {
        match self {
            Quantity::Temperature(t) => Ok(*t),
            other => Err(CoemitError::UnitParse(format!(
                "expected temperature, got {other:?}"
            ))),
        }
    }

    pub fn as_dimensionless(&self) -> Result<f64> {
        match self {
            Quantity::Dimensionless(x) => Ok(*x),
            other => Err(CoemitError::UnitParse(format!(
                "expected dimensionless, got {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_suffixes() {
        assert_eq!(Quantity::parse("1.76 ns").unwrap(), Quantity::Time(1760.0));
        assert_eq!(Quantity::parse("2.9 meV").unwrap(), Quantity::Energy(2.9));
        assert_eq!(Quantity::parse("4 K").unwrap(), Quantity::Temperature(4.0));
        assert_eq!(
            Quantity::parse("7.5e-5").unwrap(),
            Quantity::Dimensionless(7.5e-5)
        );
        assert_eq!(Quantity::parse("0.5 /ps").unwrap(), Quantity::Rate(0.5));
    }

    #[test]
    fn time_inverts_to_rate() {
        let q = Quantity::parse("2 ns").unwrap();
        assert!((q.as_rate_per_ps().unwrap() - 5e-4).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_unit() {
        assert!(Quantity::parse("3 furlong").is_err());
    }

    #[test]
    fn hbar_omega_roundtrip() {
        let e = 4.0;
        assert!((radps_to_mev(mev_to_radps(e)) - e).abs() < 1e-14);
    }
}
