//! Named parameter sets: the six Ohmic-plus-peak model cases and the five
//! bath models used with molecular mode data.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::mode_data::{modes_to_spectral, ModeSet};
use crate::spectral_density::{ModelParameters, OhmicTerm, SpectralTriple};
use crate::units::constants::CM_INV_TO_RAD_PER_PS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelCase {
    #[serde(rename = "I-A")]
    IA,
    #[serde(rename = "I-B")]
    IB,
    #[serde(rename = "I-C")]
    IC,
    #[serde(rename = "II-A")]
    IIA,
    #[serde(rename = "II-B")]
    IIB,
    #[serde(rename = "II-C")]
    IIC,
}

impl ModelCase {
    pub const ALL: [ModelCase; 6] = [
        ModelCase::IA,
        ModelCase::IB,
        ModelCase::IC,
        ModelCase::IIA,
        ModelCase::IIB,
        ModelCase::IIC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelCase::IA => "I-A",
            ModelCase::IB => "I-B",
            ModelCase::IC => "I-C",
            ModelCase::IIA => "II-A",
            ModelCase::IIB => "II-B",
            ModelCase::IIC => "II-C",
        }
    }

    /// Parameters in units where ω_c = 1 (η = 1, γ = 0). Pair with
    /// k_BT = ω_c.
    pub fn parameters(self) -> ModelParameters {
        let (omega_h, s_h, eta_d, eta_f, s_d, s_f) = match self {
            ModelCase::IA => (5.0, 1.0, 0.0, 0.0, 4.0, 2.0),
            ModelCase::IB => (5.0, 1.0, 15.0, 2.0, 1.0, 1.0),
            ModelCase::IC => (5.0, 1.0, 15.0, 2.0, 1.0, -1.0),
            ModelCase::IIA => (15.0, 0.2, 0.0, 0.0, 1.0, 0.2f64.sqrt()),
            ModelCase::IIB => (15.0, 0.2, 12.0, 2.0, 0.2, 0.2),
            ModelCase::IIC => (15.0, 0.2, 12.0, 2.0, 0.2, -0.2),
        };
        ModelParameters {
            eta: 1.0,
            omega_c: 1.0,
            s_h,
            omega_h,
            eta_d,
            eta_f,
            s_d,
            s_f,
            gamma: 0.0,
        }
    }

    /// Same case with ω_c given in rad/ps.
    pub fn parameters_scaled(self, omega_c: f64) -> ModelParameters {
        let p = self.parameters();
        ModelParameters {
            omega_c,
            omega_h: p.omega_h * omega_c,
            ..p
        }
    }
}

impl fmt::Display for ModelCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_uppercase();
        ModelCase::ALL
            .into_iter()
            .find(|c| c.name().replace('-', "") == key)
            .ok_or_else(|| format!("unknown model case '{s}' (expected one of I-A … II-C)"))
    }
}

/// Bath models added to molecular mode data: an Ohmic term in J and/or a
/// common friction for every mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BathPreset {
    A,
    B,
    C,
    D,
    E,
}

/// Dimensional bath block: η, ν̃_c and γ̃ in cm⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathParameters {
    pub eta: f64,
    #[serde(default)]
    pub nu_c_cm1: Option<f64>,
    #[serde(default)]
    pub gamma_cm1: f64,
}

impl BathParameters {
    pub fn omega_c(&self) -> Option<f64> {
        self.nu_c_cm1.map(|n| n * CM_INV_TO_RAD_PER_PS)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_cm1 * CM_INV_TO_RAD_PER_PS
    }

    /// Ohmic J term with λ_l = η ω_c, if any.
    pub fn ohmic(&self) -> Option<OhmicTerm> {
        match self.omega_c() {
            Some(wc) if self.eta != 0.0 => Some(OhmicTerm::new(self.eta * wc, wc)),
            _ => None,
        }
    }

    /// Mode peaks broadened by γ, plus the Ohmic term in the J channel.
    pub fn apply(&self, modes: &ModeSet) -> SpectralTriple {
        let mut triple = modes_to_spectral(modes, self.gamma());
        if let Some(o) = self.ohmic() {
            triple.j.ohmic.push(o);
        }
        triple
    }
}

impl BathPreset {
    pub const ALL: [BathPreset; 5] = [
        BathPreset::A,
        BathPreset::B,
        BathPreset::C,
        BathPreset::D,
        BathPreset::E,
    ];

    pub fn parameters(self) -> BathParameters {
        let (eta, nu_c, gamma) = match self {
            BathPreset::A => (1.0, Some(10.0), 0.0),
            BathPreset::B => (0.0, None, 10.0),
            BathPreset::C => (10.0, Some(200.0), 0.0),
            BathPreset::D => (0.0, None, 400.0),
            BathPreset::E => (10.0, Some(200.0), 400.0),
        };
        BathParameters {
            eta,
            nu_c_cm1: nu_c,
            gamma_cm1: gamma,
        }
    }

    /// Published azulene rates (ns⁻¹) at the two reference gaps, as
    /// (k at 1.8176 eV, k at 1.7816 eV). Only reproducible with the matching
    /// mode table, which is not distributed.
    pub fn reference_rates_per_ns(self) -> (f64, f64) {
        match self {
            BathPreset::A => (0.439, 0.617),
            BathPreset::B => (0.453, 0.639),
            BathPreset::C => (0.861, 1.20),
            BathPreset::D => (1.43, 1.93),
            BathPreset::E => (2.40, 3.20),
        }
    }
}

/// The two reference gaps E₁ − E₂ in eV (larger rate first).
pub const REFERENCE_GAPS_EV: [f64; 2] = [1.7816, 1.8176];

impl fmt::Display for BathPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for BathPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(BathPreset::A),
            "B" => Ok(BathPreset::B),
            "C" => Ok(BathPreset::C),
            "D" => Ok(BathPreset::D),
            "E" => Ok(BathPreset::E),
            _ => Err(format!("unknown bath preset '{s}' (expected A–E)")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_data::Mode;
    use crate::spectral_density::{default_bound_grid, validate_cross_bound};

    #[test]
    fn case_names_round_trip() {
        for c in ModelCase::ALL {
            assert_eq!(c.name().parse::<ModelCase>().unwrap(), c);
        }
        assert_eq!("iib".parse::<ModelCase>().unwrap(), ModelCase::IIB);
        assert!("III-A".parse::<ModelCase>().is_err());
    }

    #[test]
    fn single_mode_identity_holds_for_peaks() {
        for c in ModelCase::ALL {
            let p = c.parameters();
            assert!(p.single_mode_residual().abs() < 1e-12, "{c}");
        }
    }

    #[test]
    fn sum_of_nd_constant_within_family() {
        // D_l + D_h is the same for A, B and C of each family
        for fam in [
            [ModelCase::IA, ModelCase::IB, ModelCase::IC],
            [ModelCase::IIA, ModelCase::IIB, ModelCase::IIC],
        ] {
            let tot: Vec<f64> = fam
                .iter()
                .map(|c| {
                    let p = c.parameters();
                    p.eta_d * p.omega_c + p.s_d * p.omega_h
                })
                .collect();
            assert!((tot[0] - tot[1]).abs() < 1e-12 && (tot[1] - tot[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn bath_presets_pass_bound() {
        let modes = ModeSet::new(vec![
            Mode::new(1000.0 * CM_INV_TO_RAD_PER_PS, 0.3, 1.5),
            Mode::new(1924.0 * CM_INV_TO_RAD_PER_PS, -0.2, 0.8),
        ])
        .unwrap();
        for b in BathPreset::ALL {
            let t = b.parameters().apply(&modes);
            let grid = default_bound_grid(&t, 400);
            assert!(validate_cross_bound(&t, &grid).is_valid(), "{b}");
        }
    }

    #[test]
    fn bath_e_content() {
        let p = BathPreset::E.parameters();
        let o = p.ohmic().unwrap();
        assert!((o.cutoff - 200.0 * CM_INV_TO_RAD_PER_PS).abs() < 1e-12);
        assert!((o.strength - 10.0 * o.cutoff).abs() < 1e-12);
        assert!((p.gamma() - 75.346).abs() < 1e-3);
        assert!(BathPreset::B.parameters().ohmic().is_none());
    }
}
