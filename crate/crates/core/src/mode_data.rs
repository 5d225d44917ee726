//! Discrete vibrational modes and their CSV representation.
//!
//! File format:
//!
//! ```text
//! wavenumber_cm1,g,ndc_im
//! # ndc_unit=au
//! 1924,0.1,0.005
//! ```
//!
//! The `# ndc_unit=` line is optional (`au` by default, or `sqrt_radps`);
//! other lines starting with `#` are comments. Columns may come in any order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral_density::{PeakTerm, SpectralTriple};
use crate::units::constants::CM_INV_TO_RAD_PER_PS;
use crate::units::{ndc_to_internal, NdcUnit, ThermalState};

#[derive(Debug, Error)]
pub enum ModeError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("mode file has no data rows")]
    Empty,
    #[error("missing column '{0}' in header")]
    MissingColumn(&'static str),
    #[error("invalid mode: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// One displaced oscillator: ω (rad/ps), dimensionless displacement g
/// (Huang–Rhys factor g²) and f = Im F̃ in (rad/ps)^{1/2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub omega: f64,
    pub g: f64,
    pub f: f64,
}

impl Mode {
    pub fn new(omega: f64, g: f64, f: f64) -> Self {
        Self { omega, g, f }
    }

    pub fn reorganization(&self) -> f64 {
        self.omega * self.g * self.g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    modes: Vec<Mode>,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub ndc_unit: NdcUnit,
}

impl ModeSet {
    /// Validates and sorts by frequency.
    pub fn new(mut modes: Vec<Mode>) -> Result<Self, ModeError> {
        for m in &modes {
            if !(m.omega > 0.0) || !m.omega.is_finite() {
                return Err(ModeError::Invalid(format!(
                    "frequency must be positive, got {}",
                    m.omega
                )));
            }
            if !m.g.is_finite() || !m.f.is_finite() {
                return Err(ModeError::Invalid("non-finite g or f".into()));
            }
        }
        modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        Ok(Self {
            modes,
            source: None,
            ndc_unit: NdcUnit::default(),
        })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// λ = Σ ω_j g_j².
    pub fn reorganization_energy(&self) -> f64 {
        self.modes.iter().map(Mode::reorganization).sum()
    }

    pub fn max_frequency(&self) -> f64 {
        self.modes.last().map_or(0.0, |m| m.omega)
    }

    /// D(0) = Σ (ω_j/2) f_j² coth(βω_j/2).
    pub fn d_at_zero(&self, thermal: &ThermalState) -> f64 {
        self.modes
            .iter()
            .map(|m| 0.5 * m.omega * m.f * m.f * thermal.coth(m.omega, Default::default()))
            .sum()
    }
}

/// Parses a mode table. `default_unit` applies when the file has no
/// `# ndc_unit=` line.
pub fn parse_modes_str(text: &str, default_unit: NdcUnit) -> Result<ModeSet, ModeError> {
    let mut unit = default_unit;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(value) = rest.trim().strip_prefix("ndc_unit=") {
                unit = value.parse().map_err(|e| ModeError::Parse {
                    line: i as u64 + 1,
                    message: format!("{e}"),
                })?;
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| ModeError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() {
        return Err(ModeError::Empty);
    }
    let column = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(ModeError::MissingColumn(name))
    };
    let (iw, ig, if_) = (column("wavenumber_cm1")?, column("g")?, column("ndc_im")?);

    let mut modes = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ModeError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |idx: usize, name: &str| -> Result<f64, ModeError> {
            let raw = record.get(idx).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                let message = if name == "ndc_im" && raw.contains(['i', 'j']) && !raw.contains("inf") {
                    format!("complex value '{raw}' in ndc_im; give the imaginary part as a real number")
                } else {
                    format!("cannot parse {name} value '{raw}'")
                };
                ModeError::Parse { line, message }
            })?;
            if !v.is_finite() {
                return Err(ModeError::Parse {
                    line,
                    message: format!("non-finite {name} value '{raw}'"),
                });
            }
            Ok(v)
        };
        let nu = field(iw, "wavenumber_cm1")?;
        if nu <= 0.0 {
            return Err(ModeError::Parse {
                line,
                message: format!("wavenumber must be positive, got {nu}"),
            });
        }
        let g = field(ig, "g")?;
        let f = ndc_to_internal(field(if_, "ndc_im")?, unit).map_err(|e| ModeError::Parse {
            line,
            message: e.to_string(),
        })?;
        modes.push(Mode::new(nu * CM_INV_TO_RAD_PER_PS, g, f));
    }
    if modes.is_empty() {
        return Err(ModeError::Empty);
    }
    let mut set = ModeSet::new(modes)?;
    set.ndc_unit = unit;
    Ok(set)
}

pub fn parse_modes(path: &Path, default_unit: NdcUnit) -> Result<ModeSet, ModeError> {
    let text = fs::read_to_string(path).map_err(|source| ModeError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut set = parse_modes_str(&text, default_unit)?;
    set.source = Some(path.display().to_string());
    Ok(set)
}

/// One peak per mode and channel: J weight ω g², J_D weight f²/2 and signed
/// J_F weight √(ω/2) f g, all with friction `gamma`. Zero weights are dropped.
pub fn modes_to_spectral(modes: &ModeSet, gamma: f64) -> SpectralTriple {
    let mut t = SpectralTriple::default();
    for m in modes.modes() {
        let wj = m.omega * m.g * m.g;
        let wd = 0.5 * m.f * m.f;
        let wf = (0.5 * m.omega).sqrt() * m.f * m.g;
        if wj != 0.0 {
            t.j.peaks.push(PeakTerm::new(m.omega, wj, gamma));
        }
        if wd != 0.0 {
            t.jd.peaks.push(PeakTerm::new(m.omega, wd, gamma));
        }
        if wf != 0.0 {
            t.jf.peaks.push(PeakTerm::new(m.omega, wf, gamma));
        }
    }
    t
}
