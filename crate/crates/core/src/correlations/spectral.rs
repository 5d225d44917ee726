//! Correlation functions of general spectral densities by panel quadrature.
//!
//! The continuous part of each channel (Ohmic terms and broadened peaks) is
//! split as J = J₀ + δJ. The reference J₀ = a₁ω e^{−ω/Ω} + a₂ω e^{−2ω/Ω}
//! matches the slope and the ω² coefficient of J at ω = 0, so it is a pair of
//! Ohmic terms handled by the closed forms, while δJ = O(ω³) leaves integrands
//! that are finite at ω = 0 and go to the panel sums. When the exact coth is
//! requested the remainder also carries J·coth − J₀·coth₄, which compensates
//! for the four-term coth built into the reference.
//!
//! Sharp peaks are added exactly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::closed_form::{ohmic_sample, sharp_sample};
use super::{CorrelationError, CorrelationModel, CorrelationSample, Route};
use crate::quadrature::{composite_many, composite_plain, sample_on, PanelScheme};
use crate::spectral_density::{
    reorganization_energy, Channel, ChannelTerms, OhmicTerm, SpectralTriple,
};
use crate::units::{CothMode, ThermalState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureOptions {
    pub scheme: PanelScheme,
    /// coth used inside the panel integrands.
    pub coth: CothMode,
    /// Cutoff Ω of the reference J₀; defaults to the smallest friction of the
    /// broadened peaks, or the smallest Ohmic cutoff when there are none.
    pub reference_cutoff: Option<f64>,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            scheme: PanelScheme::default(),
            coth: CothMode::Exact,
            reference_cutoff: None,
        }
    }
}

/// Low-frequency expansion J ≈ s₁ω + s₂ω² of the continuous part.
fn low_frequency_coefficients(terms: &ChannelTerms) -> (f64, f64) {
    let s1 = terms
        .ohmic
        .iter()
        .map(|o| PI * o.strength / o.cutoff)
        .sum::<f64>()
        + terms
            .broadened_peaks()
            .map(|p| p.low_frequency_slope())
            .sum::<f64>();
    let s2 = -terms
        .ohmic
        .iter()
        .map(|o| PI * o.strength / (o.cutoff * o.cutoff))
        .sum::<f64>();
    (s1, s2)
}

/// The two Ohmic terms forming J₀ for one channel.
fn reference_terms(terms: &ChannelTerms, omega_ref: f64) -> Vec<OhmicTerm> {
    let (s1, s2) = low_frequency_coefficients(terms);
    let a1 = 2.0 * s1 + s2 * omega_ref;
    let a2 = -s2 * omega_ref - s1;
    let mut out = Vec::new();
    if a1 != 0.0 {
        out.push(OhmicTerm::new(a1 * omega_ref / PI, omega_ref));
    }
    if a2 != 0.0 {
        out.push(OhmicTerm::new(a2 * 0.5 * omega_ref / PI, 0.5 * omega_ref));
    }
    out
}

fn eval_ohmic(terms: &[OhmicTerm], omega: f64) -> f64 {
    terms.iter().map(|o| o.eval(omega)).sum()
}

#[derive(Debug, Clone, Default)]
struct Remainder {
    /// (1 − cos) kernel samples for K, D, F; `None` where a channel has no
    /// continuous part.
    cos: [Option<Vec<f64>>; 3],
    /// sin kernel samples for K, D, F.
    sin: [Option<Vec<f64>>; 3],
    /// ∫ of the D cos-kernel integrand at t = 0.
    d_full: f64,
}

/// Quadrature route; all panel samples are computed once at construction.
#[derive(Debug, Clone)]
pub struct QuadratureModel {
    triple: SpectralTriple,
    thermal: ThermalState,
    options: QuadratureOptions,
    omega_ref: f64,
    reference: [Vec<OhmicTerm>; 3],
    remainder: Remainder,
    lambda: f64,
}

impl QuadratureModel {
    pub fn new(
        triple: SpectralTriple,
        thermal: ThermalState,
        options: QuadratureOptions,
    ) -> Result<Self, CorrelationError> {
        triple.check_terms()?;
        options.scheme.validate()?;

        let default_ref = Channel::ALL
            .iter()
            .flat_map(|&c| triple.channel(c).broadened_peaks().map(|p| p.gamma))
            .fold(f64::INFINITY, f64::min);
        let default_ref = if default_ref.is_finite() {
            default_ref
        } else {
            Channel::ALL
                .iter()
                .flat_map(|&c| triple.channel(c).ohmic.iter().map(|o| o.cutoff))
                .fold(f64::INFINITY, f64::min)
        };
        let omega_ref = options.reference_cutoff.unwrap_or(default_ref);
        let has_continuum = Channel::ALL.iter().any(|&c| {
            let t = triple.channel(c);
            !t.ohmic.is_empty() || t.broadened_peaks().next().is_some()
        });
        if has_continuum && !(omega_ref > 0.0 && omega_ref.is_finite()) {
            return Err(CorrelationError::InvalidGrid(format!(
                "reference cutoff must be positive, got {omega_ref}"
            )));
        }

        let top = options.scheme.omega_max();
        for c in Channel::ALL {
            let t = triple.channel(c);
            let reach = t
                .ohmic
                .iter()
                .map(|o| 30.0 * o.cutoff)
                .chain(t.broadened_peaks().map(|p| p.omega + 10.0 * p.gamma))
                .fold(0.0, f64::max);
            if reach > top {
                log::warn!(
                    "{c} channel has weight up to ~{reach:.4e} rad/ps but panels stop at {top:.4e}"
                );
            }
        }

        let mut reference: [Vec<OhmicTerm>; 3] = Default::default();
        let mut remainder = Remainder::default();
        let scheme = options.scheme;
        for (i, c) in Channel::ALL.into_iter().enumerate() {
            let terms = triple.channel(c);
            if terms.ohmic.is_empty() && terms.broadened_peaks().next().is_none() {
                continue;
            }
            let refs = reference_terms(terms, omega_ref);
            let exact = |w: f64| terms.eval_continuous(w);
            let coth_e = |w: f64| thermal.coth(w, options.coth);
            let coth_4 = |w: f64| thermal.coth(w, CothMode::FourTerm);
            let (cos_f, sin_f): (Vec<f64>, Vec<f64>) = match c {
                Channel::J => (
                    sample_on(&scheme, |w| {
                        (exact(w) * coth_e(w) - eval_ohmic(&refs, w) * coth_4(w)) / (PI * w * w)
                    }),
                    sample_on(&scheme, |w| (exact(w) - eval_ohmic(&refs, w)) / (PI * w * w)),
                ),
                Channel::D => (
                    sample_on(&scheme, |w| {
                        (exact(w) * coth_e(w) - eval_ohmic(&refs, w) * coth_4(w)) / PI
                    }),
                    sample_on(&scheme, |w| (exact(w) - eval_ohmic(&refs, w)) / PI),
                ),
                Channel::F => (
                    sample_on(&scheme, |w| {
                        (exact(w) * coth_e(w) - eval_ohmic(&refs, w) * coth_4(w)) / (PI * w)
                    }),
                    sample_on(&scheme, |w| (exact(w) - eval_ohmic(&refs, w)) / (PI * w)),
                ),
            };
            if c == Channel::D {
                remainder.d_full = composite_plain(&cos_f, scheme.delta_omega);
            }
            remainder.cos[i] = Some(cos_f);
            remainder.sin[i] = Some(sin_f);
            reference[i] = refs;
        }

        let lambda = reorganization_energy(&triple);
        Ok(Self {
            triple,
            thermal,
            options,
            omega_ref,
            reference,
            remainder,
            lambda,
        })
    }

    pub fn reference_cutoff(&self) -> f64 {
        self.omega_ref
    }

    pub fn options(&self) -> &QuadratureOptions {
        &self.options
    }

    /// Panel-sum part only (δK_R, δK_I, δD_R, δD_I, δF_R, δF_I) at time t,
    /// without the reference and sharp-peak contributions.
    pub fn remainder_at(&self, t: f64) -> [f64; 6] {
        let (c, s) = self.panel_sums(t);
        [c[0], s[0], self.remainder.d_full - c[1], s[1], s[2], c[2]]
    }

    fn panel_sums(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let mut idx = Vec::with_capacity(3);
        let mut cos_sets: Vec<&[f64]> = Vec::with_capacity(3);
        let mut sin_sets: Vec<&[f64]> = Vec::with_capacity(3);
        for i in 0..3 {
            if let (Some(c), Some(s)) = (&self.remainder.cos[i], &self.remainder.sin[i]) {
                idx.push(i);
                cos_sets.push(c);
                sin_sets.push(s);
            }
        }
        let mut oc = vec![0.0; idx.len()];
        let mut os = vec![0.0; idx.len()];
        composite_many(
            &cos_sets,
            &sin_sets,
            self.options.scheme.delta_omega,
            t,
            &mut oc,
            &mut os,
        );
        let mut c = [0.0; 3];
        let mut s = [0.0; 3];
        for (k, &i) in idx.iter().enumerate() {
            c[i] = oc[k];
            s[i] = os[k];
        }
        (c, s)
    }
}

impl CorrelationModel for QuadratureModel {
    fn sample(&self, t: f64) -> CorrelationSample {
        let mut out = ohmic_sample(
            &self.reference[0],
            &self.reference[1],
            &self.reference[2],
            &self.thermal,
            t,
        ) + sharp_sample(&self.triple, &self.thermal, t);
        let r = self.remainder_at(t);
        let has = |i: usize| self.remainder.cos[i].is_some();
        if has(0) {
            out.k.re += r[0];
            out.k.im -= r[1];
        }
        if has(1) {
            out.d.re += r[2];
            out.d.im += r[3];
        }
        if has(2) {
            out.f.re += r[4];
            out.f.im += r[5];
        }
        out
    }

    fn reorganization_energy(&self) -> f64 {
        self.lambda
    }

    fn max_frequency(&self) -> f64 {
        self.triple.spectral_extent()
    }

    fn route(&self) -> Route {
        Route::Quadrature
    }
}

/// Samples the quadrature route on a grid.
pub fn correlations_from_spectral(
    triple: &SpectralTriple,
    thermal: &ThermalState,
    grid: super::GridSpec,
    options: QuadratureOptions,
) -> Result<super::CorrelationGrid, CorrelationError> {
    let model = QuadratureModel::new(triple.clone(), *thermal, options)?;
    super::build_grid(&model, grid)
}
