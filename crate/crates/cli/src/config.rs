//! Run configuration: JSON schema, CLI overrides and resolution to internal
//! units.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use goldenrate::correlations::{
    ClosedFormModel, CorrelationModel, DiscreteModel, QuadratureModel, QuadratureOptions, Route,
};
use goldenrate::mode_data::{parse_modes, ModeError, ModeSet};
use goldenrate::presets::{BathParameters, BathPreset, ModelCase};
use goldenrate::quadrature::PanelScheme;
use goldenrate::spectral_density::{
    default_bound_grid, from_parameter_table, validate_cross_bound, CrossBoundReport,
    ModelParameters, SpectralError,
};
use goldenrate::units::constants::CM_INV_TO_RAD_PER_PS;
use goldenrate::units::{beta_from_temperature, NdcUnit};
use goldenrate::{CothMode, EnergyUnit, EnergyValue, RateOptions, SpectralTriple, ThermalState};

use crate::CliError;

pub const SCHEMA: &str = "goldenrate.run/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub input: Option<Input>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<Thermal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<Bath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Gaps>,
    #[serde(default)]
    pub grid: GridControls,
    #[serde(default)]
    pub flags: Flags,
    /// Directory relative mode-file paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA.to_string(),
            input: None,
            thermal: None,
            bath: None,
            gaps: None,
            grid: GridControls::default(),
            flags: Flags::default(),
            base_dir: None,
        }
    }
}

/// Exactly one source of spectral data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Input {
    /// A named Ohmic-plus-peak case, in reduced units (ω_c = 1).
    Case(ModelCase),
    /// Ohmic-plus-peak parameters in reduced units.
    Model(ModelParameters),
    /// Explicit channels; `dimensional` marks rad/ps instead of reduced units.
    Spectral {
        triple: SpectralTriple,
        #[serde(default)]
        dimensional: bool,
    },
    /// A mode table (always dimensional).
    Modes {
        path: PathBuf,
        #[serde(default)]
        ndc_unit: NdcUnit,
    },
}

/// One of `kbt` (same units as the input), `temperature_k` (dimensional
/// input only) or `zero`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Thermal {
    Kbt(f64),
    TemperatureK(f64),
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Bath {
    Preset(BathPreset),
    Custom(BathParameters),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaps {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<GapRange>,
    /// Required for dimensional input; absent means reduced units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<EnergyUnit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GapRange {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() || self.stop < self.start {
            return Err(CliError::Config(format!("invalid gap range {self:?}")));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        if n > 1_000_000 {
            return Err(CliError::Config(format!("gap range has {n} points")));
        }
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteChoice {
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridControls {
    #[serde(default)]
    pub route: RouteChoice,
    /// Time step and end of the rate grid, in the input's time unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    /// Panel width: cm⁻¹ for dimensional input, reduced units otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_panels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_cutoff: Option<f64>,
    #[serde(default)]
    pub coth: CothMode,
    /// Time samples for `corr`.
    #[serde(default = "default_corr_points")]
    pub corr_points: usize,
}

fn default_tail_tol() -> f64 {
    RateOptions::default().tail_tol
}

fn default_corr_points() -> usize {
    201
}

impl Default for GridControls {
    fn default() -> Self {
        Self {
            route: RouteChoice::Auto,
            dt: None,
            t_max: None,
            tail_tol: default_tail_tol(),
            panel_width: None,
            n_panels: None,
            reference_cutoff: None,
            coth: CothMode::Exact,
            corr_points: default_corr_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flags {
    #[serde(default = "yes")]
    pub condon: bool,
    /// Report ln κ with κ = √(k_BT λ/π)·k (reduced units only).
    #[serde(default = "yes")]
    pub kappa: bool,
}

fn yes() -> bool {
    true
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            condon: true,
            kappa: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "{}: schema '{}' is not supported (expected '{SCHEMA}')",
                path.display(),
                cfg.schema
            )));
        }
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Canonical JSON used for hashing and dry runs.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Everything in internal units, ready to run.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub dimensional: bool,
    pub triple: SpectralTriple,
    #[serde(skip)]
    pub modes: Option<ModeSet>,
    pub thermal: ThermalState,
    /// Gaps as given and in internal units.
    pub gaps_given: Vec<f64>,
    pub gaps: Vec<f64>,
    pub gap_unit: Option<EnergyUnit>,
    pub route: Route,
    pub quadrature: QuadratureOptions,
    pub rate_options: RateOptions,
    pub lambda: f64,
    pub corr_points: usize,
    pub flags: Flags,
}

fn spectral_error(e: SpectralError) -> CliError {
    match e {
        SpectralError::BoundViolated(report) => CliError::Bound(report),
        other => CliError::Config(other.to_string()),
    }
}

fn mode_error(e: ModeError) -> CliError {
    match e {
        ModeError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let input = self
            .input
            .as_ref()
            .ok_or_else(|| CliError::Config("no input: give --case, --modes or an input block in --config".into()))?;

        let (triple, modes, dimensional) = match input {
            Input::Case(case) => (from_parameter_table(&case.parameters()).map_err(spectral_error)?, None, false),
            Input::Model(p) => (from_parameter_table(p).map_err(spectral_error)?, None, false),
            Input::Spectral { triple, dimensional } => {
                triple.check_terms().map_err(spectral_error)?;
                (triple.clone(), None, *dimensional)
            }
            Input::Modes { path, ndc_unit } => {
                let path = match &self.base_dir {
                    Some(base) if path.is_relative() => base.join(path),
                    _ => path.clone(),
                };
                let modes = parse_modes(&path, *ndc_unit).map_err(mode_error)?;
                let bath = match self.bath {
                    Some(Bath::Preset(p)) => p.parameters(),
                    Some(Bath::Custom(b)) => b,
                    None => BathParameters {
                        eta: 0.0,
                        nu_c_cm1: None,
                        gamma_cm1: 0.0,
                    },
                };
                (bath.apply(&modes), Some(modes), true)
            }
        };
        if self.bath.is_some() && modes.is_none() {
            return Err(CliError::Config("a bath block needs a mode-file input".into()));
        }
        check_bound(&triple)?;

        let thermal = match (self.thermal, dimensional) {
            (None, false) => ThermalState::from_kbt(1.0).expect("unit temperature"),
            (None, true) => {
                return Err(CliError::Config(
                    "dimensional input needs an explicit thermal block (--temperature or --kbt)".into(),
                ))
            }
            (Some(Thermal::Zero), _) => ThermalState::Zero,
            (Some(Thermal::Kbt(k)), _) => ThermalState::from_kbt(k).map_err(|e| CliError::Config(e.to_string()))?,
            (Some(Thermal::TemperatureK(t)), true) => {
                beta_from_temperature(t).map_err(|e| CliError::Config(e.to_string()))?
            }
            (Some(Thermal::TemperatureK(_)), false) => {
                return Err(CliError::Config("temperature in K needs dimensional input; use kbt in reduced units".into()))
            }
        };

        let (gaps_given, gap_unit) = match &self.gaps {
            None => (Vec::new(), None),
            Some(g) => {
                let mut v = g.values.clone();
                if let Some(r) = g.range {
                    v.extend(r.values()?);
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(CliError::Config("non-finite gap".into()));
                }
                match (g.unit, dimensional) {
                    (None, true) => return Err(CliError::Config("dimensional input needs a gap unit".into())),
                    (Some(u), false) => {
                        return Err(CliError::Config(format!("gaps in {u} given for reduced-unit input")))
                    }
                    _ => {}
                }
                (v, g.unit)
            }
        };
        let gaps: Vec<f64> = gaps_given
            .iter()
            .map(|&x| gap_unit.map_or(x, |u| EnergyValue::new(x, u).to_internal()))
            .collect();

        let mut quadrature = QuadratureOptions {
            coth: self.grid.coth,
            reference_cutoff: self.grid.reference_cutoff,
            ..Default::default()
        };
        let scale = if dimensional { CM_INV_TO_RAD_PER_PS } else { 1.0 };
        match (self.grid.panel_width, self.grid.n_panels) {
            (None, None) if !dimensional => {
                // reduced units: cover the spectral extent with 20 000 panels
                let top = triple.spectral_extent().max(1.0) * 1.2;
                quadrature.scheme = PanelScheme::new(top / 20_000.0, 20_000);
            }
            (None, None) => {
                let d = quadrature.scheme;
                let top = d.omega_max().max(triple.spectral_extent() * 1.2);
                quadrature.scheme = PanelScheme::covering(d.delta_omega, top);
            }
            (w, n) => {
                let width = w.map_or(quadrature.scheme.delta_omega, |w| w * scale);
                let n = n.unwrap_or_else(|| {
                    (triple.spectral_extent() * 1.2 / width).ceil().max(1.0) as usize
                });
                quadrature.scheme = PanelScheme::new(width, n);
            }
        }
        quadrature
            .scheme
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let route = match self.grid.route {
            RouteChoice::ClosedForm => Route::ClosedForm,
            RouteChoice::Quadrature => Route::Quadrature,
            RouteChoice::Discrete => {
                if modes.is_none() {
                    return Err(CliError::Config("the discrete route needs a mode file".into()));
                }
                Route::Discrete
            }
            RouteChoice::Auto => {
                if triple.has_broadened_peaks() {
                    Route::Quadrature
                } else {
                    Route::ClosedForm
                }
            }
        };

        if !(self.grid.tail_tol > 0.0 && self.grid.tail_tol < 1.0) {
            return Err(CliError::Config(format!("tail_tol must be in (0, 1), got {}", self.grid.tail_tol)));
        }
        let rate_options = RateOptions {
            dt: self.grid.dt,
            t_max: self.grid.t_max,
            tail_tol: self.grid.tail_tol,
            include_condon: self.flags.condon,
            ..Default::default()
        };
        if self.grid.corr_points < 2 {
            return Err(CliError::Config("corr_points must be at least 2".into()));
        }
        let lambda = goldenrate::spectral_density::reorganization_energy(&triple);
        Ok(Resolved {
            dimensional,
            triple,
            modes,
            thermal,
            gaps_given,
            gaps,
            gap_unit,
            route,
            quadrature,
            rate_options,
            lambda,
            corr_points: self.grid.corr_points,
            flags: self.flags,
        })
    }
}

fn check_bound(triple: &SpectralTriple) -> Result<(), CliError> {
    let grid = if triple.has_broadened_peaks() {
        default_bound_grid(triple, 2000)
    } else {
        Vec::new()
    };
    let report: CrossBoundReport = validate_cross_bound(triple, &grid);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Bound(report))
    }
}

impl Resolved {
    pub fn model(&self) -> Result<Box<dyn CorrelationModel>, CliError> {
        let model: Box<dyn CorrelationModel> = match self.route {
            Route::Discrete => {
                let modes = self.modes.clone().expect("checked at resolution");
                Box::new(DiscreteModel::new(modes, self.thermal).map_err(|e| CliError::Numerical(e.to_string()))?)
            }
            Route::ClosedForm => Box::new(
                ClosedFormModel::new(self.triple.clone(), self.thermal)
                    .map_err(|e| CliError::Config(e.to_string()))?,
            ),
            Route::Quadrature => Box::new(
                QuadratureModel::new(self.triple.clone(), self.thermal, self.quadrature)
                    .map_err(|e| CliError::Numerical(e.to_string()))?,
            ),
        };
        Ok(model)
    }

    pub fn gap_unit_label(&self) -> &'static str {
        self.gap_unit.map_or("reduced", |u| u.symbol())
    }
}
