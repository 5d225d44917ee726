//! Bath correlation functions K(t), D(t) and F(t).
//!
//! ```text
//! K(t) = (1/π)∫ dω J(ω)/ω²  [coth(βω/2)(1 − cos ωt) − i sin ωt]  = K_R − iK_I
//! D(t) = (1/π)∫ dω J_D(ω)   [coth(βω/2) cos ωt + i sin ωt]       = D_R + iD_I
//! F(t) = (i/π)∫ dω J_F(ω)/ω [coth(βω/2)(1 − cos ωt) − i sin ωt]  = F_R + iF_I
//! ```
//!
//! Three routes produce them: [`discrete`] (exact sums over modes),
//! [`closed_form`] (Ohmic terms with the four-term coth, sharp peaks exact)
//! and [`spectral`] (panel quadrature for broadened spectral densities).

pub mod closed_form;
pub mod discrete;
pub mod spectral;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::QuadratureError;
use crate::spectral_density::SpectralError;

pub use closed_form::ClosedFormModel;
pub use discrete::DiscreteModel;
pub use spectral::{QuadratureModel, QuadratureOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("the closed-form route only handles Ohmic terms and sharp peaks; {0} broadened peak(s) need the quadrature route")]
    NeedsQuadrature(usize),
    #[error("no modes given")]
    NoModes,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Discrete,
    ClosedForm,
    Quadrature,
}

impl std::fmt::Display for Route {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Route::Discrete => "discrete",
            Route::ClosedForm => "closed_form",
            Route::Quadrature => "quadrature",
        })
    }
}

/// K, D and F at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorrelationSample {
    pub k: Complex64,
    pub d: Complex64,
    pub f: Complex64,
}

impl std::ops::Add for CorrelationSample {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            k: self.k + o.k,
            d: self.d + o.d,
            f: self.f + o.f,
        }
    }
}

impl std::ops::AddAssign for CorrelationSample {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Anything that can evaluate K, D and F at an arbitrary (signed) time.
pub trait CorrelationModel: Send + Sync {
    fn sample(&self, t: f64) -> CorrelationSample;

    /// λ entering the rate exponent.
    fn reorganization_energy(&self) -> f64;

    /// Highest frequency with appreciable spectral weight.
    fn max_frequency(&self) -> f64;

    fn route(&self) -> Route;

    /// Upper bound on K_R over all t if it stays bounded (pure sharp
    /// spectra), `None` if it grows without bound.
    fn k_real_bound(&self) -> Option<f64> {
        None
    }
}

/// Uniform time grid t = m·dt, m = 0..n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dt: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(dt: f64, n: usize) -> Self {
        Self { dt, n }
    }

    /// 20 samples per period of the fastest bath frequency.
    pub fn default_dt(omega_max: f64) -> f64 {
        2.0 * PI / omega_max / 20.0
    }

    /// Grid from 0 to at least `t_max` with the default step.
    pub fn covering(omega_max: f64, t_max: f64) -> Self {
        let dt = Self::default_dt(omega_max);
        Self::new(dt, (t_max / dt).ceil() as usize + 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |m| m as f64 * self.dt)
    }

    pub fn validate(&self) -> Result<(), CorrelationError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() || self.n == 0 {
            return Err(CorrelationError::InvalidGrid(format!(
                "need dt > 0 and n ≥ 1, got dt = {}, n = {}",
                self.dt, self.n
            )));
        }
        Ok(())
    }
}

/// K, D, F sampled at t = m·dt for m = 0..n, with the λ of the same input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub dt: f64,
    pub k: Vec<Complex64>,
    pub d: Vec<Complex64>,
    pub f: Vec<Complex64>,
    pub lambda: f64,
    pub route: Route,
}

impl CorrelationGrid {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn sample(&self, m: usize) -> CorrelationSample {
        CorrelationSample {
            k: self.k[m],
            d: self.d[m],
            f: self.f[m],
        }
    }

    /// Largest violation of K(0) = 0, F(0) = 0 and Im D(0) = 0, relative to
    /// the grid's scale.
    pub fn origin_residual(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let scale = self
            .k
            .iter()
            .chain(&self.d)
            .chain(&self.f)
            .map(|z| z.norm())
            .fold(1e-300, f64::max);
        (self.k[0].norm().max(self.f[0].norm()).max(self.d[0].im.abs())) / scale
    }
}

/// Samples a model on a grid; time points are evaluated in parallel and kept
/// in order.
pub fn build_grid(
    model: &dyn CorrelationModel,
    spec: GridSpec,
) -> Result<CorrelationGrid, CorrelationError> {
    spec.validate()?;
    let samples: Vec<CorrelationSample> = (0..spec.n)
        .into_par_iter()
        .map(|m| model.sample(m as f64 * spec.dt))
        .collect();
    Ok(CorrelationGrid {
        dt: spec.dt,
        k: samples.iter().map(|s| s.k).collect(),
        d: samples.iter().map(|s| s.d).collect(),
        f: samples.iter().map(|s| s.f).collect(),
        lambda: model.reorganization_energy(),
        route: model.route(),
    })
}

/// Largest violation of K(−t) = K*(t), D(−t) = D*(t), F(−t) = −F*(t) over
/// the given times.
pub fn parity_residual(model: &dyn CorrelationModel, times: &[f64]) -> f64 {
    times
        .iter()
        .map(|&t| {
            let p = model.sample(t);
            let m = model.sample(-t);
            let scale = 1.0 + p.k.norm() + p.d.norm() + p.f.norm();
            ((m.k - p.k.conj()).norm()
                + (m.d - p.d.conj()).norm()
                + (m.f + p.f.conj()).norm())
                / scale
        })
        .fold(0.0, f64::max)
}
