//! Internal unit system and conversions.
//!
//! Internally ħ = k_B = 1. Energies and frequencies are angular frequencies in
//! rad/ps, times are in ps, so an inverse temperature β is a time in ps and
//! rates come out in ps⁻¹.
//!
//! Every physical constant lives in [`constants`]; no other module carries a
//! CODATA literal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// CODATA 2018 exact/recommended constants and the conversion factors derived
/// from them.
///
/// ```json
/// {
///   "speed_of_light_cm_per_s": 2.99792458e10,
///   "planck_j_s": 6.62607015e-34,
///   "elementary_charge_c": 1.602176634e-19,
///   "boltzmann_j_per_k": 1.380649e-23,
///   "hartree_ev": 27.211386245988,
///   "cm_inv_to_rad_per_ps": 0.18836515673,
///   "ev_to_rad_per_ps": 1519.2674479,
///   "kelvin_to_rad_per_ps": 0.13092033913,
///   "hartree_to_rad_per_ps": 41341.373335
/// }
/// ```
pub mod constants {
    use std::f64::consts::PI;

    pub const SPEED_OF_LIGHT_CM_PER_S: f64 = 2.997_924_58e10;
    pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
    pub const HBAR_J_S: f64 = PLANCK_J_S / (2.0 * PI);
    pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;
    pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;
    pub const HARTREE_EV: f64 = 27.211_386_245_988;

    /// Seconds per picosecond.
    pub const PS: f64 = 1e-12;

    /// 1 cm⁻¹ as an angular frequency: 2πc.
    pub const CM_INV_TO_RAD_PER_PS: f64 = 2.0 * PI * SPEED_OF_LIGHT_CM_PER_S * PS;
    /// 1 eV as an angular frequency: e/ħ.
    pub const EV_TO_RAD_PER_PS: f64 = ELEMENTARY_CHARGE_C / HBAR_J_S * PS;
    /// k_B · 1 K as an angular frequency: k_B/ħ.
    pub const KELVIN_TO_RAD_PER_PS: f64 = BOLTZMANN_J_PER_K / HBAR_J_S * PS;
    pub const HARTREE_TO_RAD_PER_PS: f64 = HARTREE_EV * EV_TO_RAD_PER_PS;
    /// Picoseconds per nanosecond, for reporting rates in ns⁻¹.
    pub const PER_PS_TO_PER_NS: f64 = 1e3;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("unsupported energy unit `{0}` (expected rad_per_ps, cm_inv, eV or hartree)")]
    UnsupportedUnit(String),
    #[error("unsupported NDC unit `{0}` (expected au or sqrt_radps)")]
    UnsupportedNdcUnit(String),
    #[error("cannot parse energy `{0}`")]
    Malformed(String),
    #[error("temperature must be positive and finite, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("inverse temperature must be positive and finite, got {0}")]
    InvalidBeta(f64),
    #[error("non-finite value {0}")]
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyUnit {
    #[serde(rename = "rad_per_ps")]
    RadPerPs,
    #[serde(rename = "cm_inv", alias = "cm-1", alias = "cm^-1")]
    CmInv,
    #[serde(rename = "eV", alias = "ev")]
    Ev,
    #[serde(rename = "hartree", alias = "Eh")]
    Hartree,
}

impl EnergyUnit {
    /// Multiplicative factor taking a value in this unit to rad/ps.
    pub fn factor(self) -> f64 {
        match self {
            EnergyUnit::RadPerPs => 1.0,
            EnergyUnit::CmInv => constants::CM_INV_TO_RAD_PER_PS,
            EnergyUnit::Ev => constants::EV_TO_RAD_PER_PS,
            EnergyUnit::Hartree => constants::HARTREE_TO_RAD_PER_PS,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EnergyUnit::RadPerPs => "rad_per_ps",
            EnergyUnit::CmInv => "cm_inv",
            EnergyUnit::Ev => "eV",
            EnergyUnit::Hartree => "hartree",
        }
    }
}

impl FromStr for EnergyUnit {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "rad_per_ps" | "rad/ps" | "radps" => Ok(EnergyUnit::RadPerPs),
            "cm_inv" | "cm-1" | "cm^-1" | "cm1" => Ok(EnergyUnit::CmInv),
            "eV" | "ev" => Ok(EnergyUnit::Ev),
            "hartree" | "Eh" | "au" => Ok(EnergyUnit::Hartree),
            other => Err(UnitError::UnsupportedUnit(other.to_string())),
        }
    }
}

impl fmt::Display for EnergyUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// An energy tagged with its unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyValue {
    pub value: f64,
    pub unit: EnergyUnit,
}

impl EnergyValue {
    pub fn new(value: f64, unit: EnergyUnit) -> Self {
        Self { value, unit }
    }

    pub fn to_internal(self) -> f64 {
        to_internal(self)
    }
}

/// Parses `"1.7816eV"`, `"200 cm-1"`, `"3.5 rad_per_ps"`. A bare number is
/// taken to already be in rad/ps.
impl FromStr for EnergyValue {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let split = s
            .char_indices()
            .find(|&(i, c)| {
                c.is_ascii_alphabetic()
                    && !((c == 'e' || c == 'E')
                        && s[i + 1..]
                            .chars()
                            .next()
                            .is_some_and(|n| n.is_ascii_digit() || n == '-' || n == '+'))
            })
            .map(|(i, _)| i)
            .unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| UnitError::Malformed(s.to_string()))?;
        let unit = if unit.trim().is_empty() {
            EnergyUnit::RadPerPs
        } else {
            unit.parse()?
        };
        Ok(EnergyValue { value, unit })
    }
}

pub fn to_internal(value: EnergyValue) -> f64 {
    value.value * value.unit.factor()
}

pub fn from_internal(omega: f64, unit: EnergyUnit) -> EnergyValue {
    EnergyValue::new(omega / unit.factor(), unit)
}

/// Which form of the thermal factor coth(βω/2) to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CothMode {
    #[default]
    Exact,
    /// 1 + 2e^{-x} + 2e^{-2x} + (2/x) e^{-5x/2}, which the Ohmic closed forms
    /// are built on.
    FourTerm,
}

/// coth(x/2) or its four-term approximation, x = βω.
pub fn coth_factor(x: f64, mode: CothMode) -> Result<f64, UnitError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(UnitError::InvalidBeta(x));
    }
    Ok(coth_unchecked(x, mode))
}

#[inline]
pub(crate) fn coth_unchecked(x: f64, mode: CothMode) -> f64 {
    match mode {
        CothMode::Exact => 1.0 / (0.5 * x).tanh(),
        CothMode::FourTerm => {
            1.0 + 2.0 * (-x).exp() + 2.0 * (-2.0 * x).exp() + 2.0 / x * (-2.5 * x).exp()
        }
    }
}

/// Thermal state of the initial-surface bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalState {
    /// Finite temperature; `beta` in ps.
    Finite {
        beta: f64,
        temperature_k: Option<f64>,
    },
    /// T = 0: every coth(βω/2) is replaced by 1.
    Zero,
}

impl ThermalState {
    pub fn from_beta(beta: f64) -> Result<Self, UnitError> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(UnitError::InvalidBeta(beta));
        }
        Ok(ThermalState::Finite {
            beta,
            temperature_k: None,
        })
    }

    /// k_B T given as an energy in rad/ps.
    pub fn from_kbt(kbt: f64) -> Result<Self, UnitError> {
        Self::from_beta(1.0 / kbt)
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            ThermalState::Finite { beta, .. } => Some(beta),
            ThermalState::Zero => None,
        }
    }

    /// k_B T in rad/ps (0 at zero temperature).
    pub fn kbt(&self) -> f64 {
        self.beta().map_or(0.0, |b| 1.0 / b)
    }

    pub fn temperature_k(&self) -> Option<f64> {
        match *self {
            ThermalState::Finite { temperature_k, beta } => {
                Some(temperature_k.unwrap_or(1.0 / (beta * constants::KELVIN_TO_RAD_PER_PS)))
            }
            ThermalState::Zero => Some(0.0),
        }
    }

    /// coth(βω/2) for ω > 0; 1 at zero temperature.
    #[inline]
    pub fn coth(&self, omega: f64, mode: CothMode) -> f64 {
        match *self {
            ThermalState::Finite { beta, .. } => coth_unchecked(beta * omega, mode),
            ThermalState::Zero => 1.0,
        }
    }
}

pub fn beta_from_temperature(kelvin: f64) -> Result<ThermalState, UnitError> {
    if !(kelvin > 0.0) || !kelvin.is_finite() {
        return Err(UnitError::NonPositiveTemperature(kelvin));
    }
    Ok(ThermalState::Finite {
        beta: 1.0 / (kelvin * constants::KELVIN_TO_RAD_PER_PS),
        temperature_k: Some(kelvin),
    })
}

/// Unit of a derivative-coupling projection Im F̃ (dimension energy^{1/2}).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NdcUnit {
    #[serde(rename = "sqrt_radps")]
    SqrtRadPerPs,
    /// √E_h.
    #[default]
    #[serde(rename = "au")]
    Atomic,
}

impl NdcUnit {
    pub fn factor(self) -> f64 {
        match self {
            NdcUnit::SqrtRadPerPs => 1.0,
            NdcUnit::Atomic => constants::HARTREE_TO_RAD_PER_PS.sqrt(),
        }
    }
}

impl FromStr for NdcUnit {
    type Err = UnitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "au" | "atomic" => Ok(NdcUnit::Atomic),
            "sqrt_radps" => Ok(NdcUnit::SqrtRadPerPs),
            other => Err(UnitError::UnsupportedNdcUnit(other.to_string())),
        }
    }
}

pub fn ndc_to_internal(value: f64, unit: NdcUnit) -> Result<f64, UnitError> {
    if !value.is_finite() {
        return Err(UnitError::NonFinite(value));
    }
    Ok(value * unit.factor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn wavenumber_conversion() {
        let w = to_internal(EnergyValue::new(1.0, EnergyUnit::CmInv));
        // 2πc with c in cm/ps
        assert!(rel(w, 2.0 * PI * 0.029_979_245_8) < 1e-12);
        assert!((w - 0.188365).abs() < 1e-6);
    }

    #[test]
    fn electronvolt_conversion() {
        assert_eq!(to_internal(EnergyValue::new(0.0, EnergyUnit::Ev)), 0.0);
        let w = to_internal(EnergyValue::new(1.0, EnergyUnit::Ev));
        assert!((w - 1519.27).abs() < 0.01, "{w}");
    }

    #[test]
    fn room_temperature() {
        let th = beta_from_temperature(300.0).unwrap();
        let kbt = th.kbt();
        assert!((kbt - 39.27).abs() < 0.01, "{kbt}");
        // ≈ 208.5 cm⁻¹
        let cm = from_internal(kbt, EnergyUnit::CmInv).value;
        assert!((cm - 208.5).abs() < 0.1, "{cm}");
        assert!(rel(th.temperature_k().unwrap(), 300.0) < 1e-14);
    }

    #[test]
    fn temperature_matching_cutoff() {
        let omega_c = 1.0;
        let t = omega_c / constants::KELVIN_TO_RAD_PER_PS;
        let th = beta_from_temperature(t).unwrap();
        assert!((th.beta().unwrap() * omega_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn high_temperature_limit() {
        let th = beta_from_temperature(1e9).unwrap();
        let w = 3.0;
        let x = th.beta().unwrap() * w;
        assert!(rel(th.coth(w, CothMode::Exact), 2.0 / x) < 1e-9);
    }

    #[test]
    fn bad_temperatures() {
        assert!(beta_from_temperature(0.0).is_err());
        assert!(beta_from_temperature(-3.0).is_err());
        assert!(ThermalState::from_beta(f64::INFINITY).is_err());
        assert!(coth_factor(0.0, CothMode::Exact).is_err());
    }

    #[test]
    fn zero_temperature_coth() {
        for w in [0.1, 1.0, 100.0] {
            assert_eq!(ThermalState::Zero.coth(w, CothMode::Exact), 1.0);
            assert_eq!(ThermalState::Zero.coth(w, CothMode::FourTerm), 1.0);
        }
    }

    #[test]
    fn coth_spot_values() {
        let exact = coth_factor(1.0, CothMode::Exact).unwrap();
        let approx = coth_factor(1.0, CothMode::FourTerm).unwrap();
        assert!((exact - 2.163953).abs() < 1e-6);
        assert!((approx - 2.170600).abs() < 1e-6);
        assert!((rel(approx, exact) - 3.07e-3).abs() < 1e-4);
    }

    #[test]
    fn ndc_atomic_unit() {
        let f = ndc_to_internal(1.0, NdcUnit::Atomic).unwrap();
        let oracle = (27.2114 * 1519.27f64).sqrt();
        assert!(rel(f, oracle) < 1e-4, "{f}");
        assert!((f - 203.3).abs() < 0.1);
        assert_eq!(ndc_to_internal(0.42, NdcUnit::SqrtRadPerPs).unwrap(), 0.42);
        assert_eq!(ndc_to_internal(0.0, NdcUnit::Atomic).unwrap(), 0.0);
        assert!(ndc_to_internal(f64::NAN, NdcUnit::Atomic).is_err());
    }

    #[test]
    fn parse_energy_strings() {
        let e: EnergyValue = "1.7816eV".parse().unwrap();
        assert_eq!(e, EnergyValue::new(1.7816, EnergyUnit::Ev));
        let e: EnergyValue = "2e3 cm-1".parse().unwrap();
        assert_eq!(e, EnergyValue::new(2000.0, EnergyUnit::CmInv));
        let e: EnergyValue = "-4.5".parse().unwrap();
        assert_eq!(e, EnergyValue::new(-4.5, EnergyUnit::RadPerPs));
        assert!(matches!(
            "3 furlongs".parse::<EnergyValue>(),
            Err(UnitError::UnsupportedUnit(_))
        ));
        assert!("eV".parse::<EnergyValue>().is_err());
    }

    #[test]
    fn constants_live_in_one_table() {
        let src_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("src");
        let literals = ["2.997", "6.626", "1.0545", "1.602", "1.3806", "27.211", "0.18836", "1519.2"];
        let mut stack = vec![src_dir];
        while let Some(dir) = stack.pop() {
            for entry in std::fs::read_dir(dir).unwrap() {
                let path = entry.unwrap().path();
                if path.is_dir() {
                    stack.push(path);
                    continue;
                }
                if path.file_name().unwrap() == "units.rs" {
                    continue;
                }
                let text = std::fs::read_to_string(&path).unwrap();
                for lit in literals {
                    assert!(
                        !text.contains(lit),
                        "{} contains physical-constant literal {lit}",
                        path.display()
                    );
                }
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn conversions_round_trip(x in -1e6f64..1e6, idx in 0usize..4) {
            let unit = [EnergyUnit::RadPerPs, EnergyUnit::CmInv, EnergyUnit::Ev, EnergyUnit::Hartree][idx];
            let back = from_internal(to_internal(EnergyValue::new(x, unit)), unit).value;
            proptest::prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }
}
