//! The three bath spectral densities J(ω), J_D(ω) and J_F(ω).
//!
//! Each channel is a sum of Ohmic terms π·s·(ω/ω_c)e^{-ω/ω_c} and peaks
//! π·w·ω_j·δ(ω−ω_j). A peak with γ > 0 replaces the delta function by the
//! normalized Brownian-oscillator profile J_γ(ω; ω_j); a peak with γ = 0 is a
//! true delta and only ever appears under an integral (the discrete-mode and
//! closed-form correlation routes handle it exactly).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("{channel} channel has an unbroadened peak at ω = {omega}; delta peaks cannot be evaluated pointwise (use the discrete-mode or closed-form route, or give it γ > 0)")]
    NeedsBroadening { channel: Channel, omega: f64 },
    #[error("invalid term in {channel} channel: {reason}")]
    InvalidTerm { channel: Channel, reason: String },
    #[error("cross-channel bound |J_F| ≤ (J + J_D)/2 violated:\n{0}")]
    BoundViolated(CrossBoundReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// Displacement (Franck–Condon) channel J.
    J,
    /// Squared derivative-coupling channel J_D.
    D,
    /// Cross channel J_F (signed).
    F,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::J, Channel::D, Channel::F];
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Channel::J => "J",
            Channel::D => "J_D",
            Channel::F => "J_F",
        })
    }
}

/// π·strength·(ω/ω_c)·e^{-ω/ω_c}.
///
/// `strength` is λ_l, D_l or F_l depending on the channel; for J it is the
/// reorganization energy carried by the term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmicTerm {
    pub strength: f64,
    pub cutoff: f64,
}

impl OhmicTerm {
    pub fn new(strength: f64, cutoff: f64) -> Self {
        Self { strength, cutoff }
    }

    #[inline]
    pub fn eval(&self, omega: f64) -> f64 {
        PI * self.strength * omega / self.cutoff * (-omega / self.cutoff).exp()
    }
}

/// π·weight·ω_j·δ(ω−ω_j), or its Brownian-oscillator broadening when γ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakTerm {
    pub omega: f64,
    pub weight: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl PeakTerm {
    pub fn new(omega: f64, weight: f64, gamma: f64) -> Self {
        Self {
            omega,
            weight,
            gamma,
        }
    }

    pub fn is_sharp(&self) -> bool {
        self.gamma == 0.0
    }

    /// Pointwise value of a broadened peak; zero for sharp peaks.
    #[inline]
    pub fn eval_broadened(&self, omega: f64) -> f64 {
        if self.is_sharp() {
            return 0.0;
        }
        PI * self.weight * self.omega * bo_profile(omega, self.omega, self.gamma)
    }

    /// (1/π)∫₀^∞ (peak)/ω dω: the peak's contribution to λ (J channel).
    pub fn reorganization(&self) -> f64 {
        if self.is_sharp() {
            self.weight
        } else {
            // ∫₀^∞ J_γ(ω)/ω dω = A_j γ π / (4 ω_j²)
            self.weight * bo_normalization(self.omega, self.gamma) * self.gamma * PI
                / (4.0 * self.omega)
        }
    }

    /// lim_{ω→0} (broadened peak)/ω.
    pub(crate) fn low_frequency_slope(&self) -> f64 {
        if self.is_sharp() {
            return 0.0;
        }
        let a = bo_normalization(self.omega, self.gamma);
        PI * self.weight * a * self.gamma * self.gamma / self.omega.powi(3)
    }
}

/// Normalization constant A_j of the Brownian-oscillator profile, chosen so
/// that ∫₀^∞ J_γ(ω; ω_j) dω = 1.
///
/// With R = (ω_j/γ)² − 1 the three branches (R > 0, R = 0, R < 0) are written
/// as 4√R / atan2(2√R, 1−R) and 2s / atanh(s), s = √(−R), which are the same
/// expressions without the cancellation near R = 0.
pub fn bo_normalization(omega_j: f64, gamma: f64) -> f64 {
    let r = (omega_j / gamma).powi(2) - 1.0;
    if r > 0.0 {
        let sr = r.sqrt();
        4.0 * sr / (2.0 * sr).atan2(1.0 - r)
    } else if r == 0.0 {
        2.0
    } else {
        let s = (-r).sqrt();
        2.0 * s / s.atanh()
    }
}

/// J_γ(ω; ω_j) = (A_j/γ²)·ω / [(ω² − ω_j²)²/γ⁴ + 4(ω/γ)²].
#[inline]
pub fn bo_profile(omega: f64, omega_j: f64, gamma: f64) -> f64 {
    let a = bo_normalization(omega_j, gamma);
    bo_profile_with_norm(omega, omega_j, gamma, a)
}

#[inline]
pub(crate) fn bo_profile_with_norm(omega: f64, omega_j: f64, gamma: f64, norm: f64) -> f64 {
    let g2 = gamma * gamma;
    let d = omega * omega - omega_j * omega_j;
    norm * g2 * omega / (d * d + 4.0 * g2 * omega * omega)
}

/// Ohmic terms and peaks of one channel.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelTerms {
    #[serde(default)]
    pub ohmic: Vec<OhmicTerm>,
    #[serde(default)]
    pub peaks: Vec<PeakTerm>,
}

impl ChannelTerms {
    pub fn is_empty(&self) -> bool {
        self.ohmic.is_empty() && self.peaks.is_empty()
    }

    pub fn sharp_peaks(&self) -> impl Iterator<Item = &PeakTerm> {
        self.peaks.iter().filter(|p| p.is_sharp())
    }

    pub fn broadened_peaks(&self) -> impl Iterator<Item = &PeakTerm> {
        self.peaks.iter().filter(|p| !p.is_sharp())
    }

    /// Pointwise value of the Ohmic terms plus broadened peaks, ignoring
    /// sharp peaks.
    pub fn eval_continuous(&self, omega: f64) -> f64 {
        self.ohmic.iter().map(|o| o.eval(omega)).sum::<f64>()
            + self.peaks.iter().map(|p| p.eval_broadened(omega)).sum::<f64>()
    }
}

/// The J, J_D and J_F channels. Immutable after construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralTriple {
    #[serde(default)]
    pub j: ChannelTerms,
    #[serde(default)]
    pub jd: ChannelTerms,
    #[serde(default)]
    pub jf: ChannelTerms,
}

impl SpectralTriple {
    pub fn channel(&self, channel: Channel) -> &ChannelTerms {
        match channel {
            Channel::J => &self.j,
            Channel::D => &self.jd,
            Channel::F => &self.jf,
        }
    }

    pub fn channel_mut(&mut self, channel: Channel) -> &mut ChannelTerms {
        match channel {
            Channel::J => &mut self.j,
            Channel::D => &mut self.jd,
            Channel::F => &mut self.jf,
        }
    }

    pub fn is_empty(&self) -> bool {
        Channel::ALL.iter().all(|&c| self.channel(c).is_empty())
    }

    pub fn has_sharp_peaks(&self) -> bool {
        Channel::ALL
            .iter()
            .any(|&c| self.channel(c).sharp_peaks().next().is_some())
    }

    pub fn has_broadened_peaks(&self) -> bool {
        Channel::ALL
            .iter()
            .any(|&c| self.channel(c).broadened_peaks().next().is_some())
    }

    /// Union of two triples (channel sums).
    pub fn merged(mut self, other: &SpectralTriple) -> SpectralTriple {
        for c in Channel::ALL {
            let dst = self.channel_mut(c);
            let src = other.channel(c);
            dst.ohmic.extend_from_slice(&src.ohmic);
            dst.peaks.extend_from_slice(&src.peaks);
        }
        self
    }

    /// Structural checks on every term.
    pub fn check_terms(&self) -> Result<(), SpectralError> {
        for c in Channel::ALL {
            let terms = self.channel(c);
            for o in &terms.ohmic {
                if !(o.cutoff > 0.0) || !o.cutoff.is_finite() {
                    return Err(SpectralError::InvalidTerm {
                        channel: c,
                        reason: format!("Ohmic cutoff must be positive, got {}", o.cutoff),
                    });
                }
                if !o.strength.is_finite() || (c != Channel::F && o.strength < 0.0) {
                    return Err(SpectralError::InvalidTerm {
                        channel: c,
                        reason: format!("Ohmic strength {} not allowed", o.strength),
                    });
                }
            }
            for p in &terms.peaks {
                if !(p.omega > 0.0) || !p.omega.is_finite() {
                    return Err(SpectralError::InvalidTerm {
                        channel: c,
                        reason: format!("peak frequency must be positive, got {}", p.omega),
                    });
                }
                if !(p.gamma >= 0.0) || !p.gamma.is_finite() {
                    return Err(SpectralError::InvalidTerm {
                        channel: c,
                        reason: format!("peak friction must be non-negative, got {}", p.gamma),
                    });
                }
                if !p.weight.is_finite() || (c != Channel::F && p.weight < 0.0) {
                    return Err(SpectralError::InvalidTerm {
                        channel: c,
                        reason: format!("peak weight {} not allowed", p.weight),
                    });
                }
            }
        }
        Ok(())
    }

    /// Highest frequency carrying appreciable spectral weight; sets the
    /// default time step.
    pub fn spectral_extent(&self) -> f64 {
        let mut w: f64 = 0.0;
        for c in Channel::ALL {
            let terms = self.channel(c);
            for o in &terms.ohmic {
                w = w.max(10.0 * o.cutoff);
            }
            for p in &terms.peaks {
                w = w.max(p.omega + 5.0 * p.gamma);
            }
        }
        w
    }
}

/// Pointwise value of one channel.
pub fn eval_channel(
    triple: &SpectralTriple,
    channel: Channel,
    omega: f64,
) -> Result<f64, SpectralError> {
    let terms = triple.channel(channel);
    if let Some(p) = terms.sharp_peaks().next() {
        return Err(SpectralError::NeedsBroadening {
            channel,
            omega: p.omega,
        });
    }
    Ok(terms.eval_continuous(omega))
}

/// λ = (1/π)∫₀^∞ J(ω)/ω dω, including the shift that broadening introduces.
pub fn reorganization_energy(triple: &SpectralTriple) -> f64 {
    triple.j.ohmic.iter().map(|o| o.strength).sum::<f64>()
        + triple.j.peaks.iter().map(PeakTerm::reorganization).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ViolationSite {
    /// Ohmic terms sharing this cutoff.
    Ohmic { cutoff: f64 },
    /// Peaks at this frequency and friction.
    Peak { omega: f64, gamma: f64 },
    /// Pointwise on the broadened evaluation grid.
    Grid { omega: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub site: ViolationSite,
    /// |J_F| at the site.
    pub cross: f64,
    /// (J + J_D)/2 at the site.
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossBoundReport {
    pub violations: Vec<Violation>,
}

impl CrossBoundReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for CrossBoundReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "bound satisfied");
        }
        for v in &self.violations {
            let site = match v.site {
                ViolationSite::Ohmic { cutoff } => format!("Ohmic terms at ω_c = {cutoff}"),
                ViolationSite::Peak { omega, gamma } => {
                    format!("peak at ω = {omega} (γ = {gamma})")
                }
                ViolationSite::Grid { omega } => format!("grid point ω = {omega}"),
            };
            writeln!(f, "  {site}: |J_F| = {:.6e} > (J + J_D)/2 = {:.6e}", v.cross, v.bound)?;
        }
        Ok(())
    }
}

const BOUND_RTOL: f64 = 1e-12;

fn exceeds(cross: f64, bound: f64) -> bool {
    cross.abs() > bound + BOUND_RTOL * bound.abs().max(cross.abs())
}

/// Checks |J_F| ≤ (J + J_D)/2 per matching component (Ohmic terms grouped by
/// cutoff, peaks grouped by frequency and friction) and pointwise on `grid`
/// for the continuous part. Never fails; an empty report means valid.
pub fn validate_cross_bound(triple: &SpectralTriple, grid: &[f64]) -> CrossBoundReport {
    let mut violations = Vec::new();

    let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());

    for fo in &triple.jf.ohmic {
        let cutoff = fo.cutoff;
        if violations
            .iter()
            .any(|v: &Violation| matches!(v.site, ViolationSite::Ohmic { cutoff: c } if same(c, cutoff)))
        {
            continue;
        }
        let cross: f64 = triple
            .jf
            .ohmic
            .iter()
            .filter(|o| same(o.cutoff, cutoff))
            .map(|o| o.strength)
            .sum();
        let bound = 0.5
            * triple
                .j
                .ohmic
                .iter()
                .chain(&triple.jd.ohmic)
                .filter(|o| same(o.cutoff, cutoff))
                .map(|o| o.strength)
                .sum::<f64>();
        if exceeds(cross, bound) {
            violations.push(Violation {
                site: ViolationSite::Ohmic { cutoff },
                cross: cross.abs(),
                bound,
            });
        }
    }

    let mut seen: Vec<(f64, f64)> = Vec::new();
    for fp in &triple.jf.peaks {
        let key = (fp.omega, fp.gamma);
        if seen.iter().any(|&(w, g)| same(w, key.0) && same(g, key.1)) {
            continue;
        }
        seen.push(key);
        let matches = |p: &&PeakTerm| same(p.omega, key.0) && same(p.gamma, key.1);
        let cross: f64 = triple.jf.peaks.iter().filter(matches).map(|p| p.weight).sum();
        let bound = 0.5
            * triple
                .j
                .peaks
                .iter()
                .chain(&triple.jd.peaks)
                .filter(matches)
                .map(|p| p.weight)
                .sum::<f64>();
        if exceeds(cross, bound) {
            violations.push(Violation {
                site: ViolationSite::Peak {
                    omega: key.0,
                    gamma: key.1,
                },
                cross: cross.abs(),
                bound,
            });
        }
    }

    for &omega in grid {
        let cross = triple.jf.eval_continuous(omega);
        let bound = 0.5 * (triple.j.eval_continuous(omega) + triple.jd.eval_continuous(omega));
        if exceeds(cross, bound) {
            violations.push(Violation {
                site: ViolationSite::Grid { omega },
                cross: cross.abs(),
                bound,
            });
        }
    }

    CrossBoundReport { violations }
}

/// A frequency grid covering the broadened content of a triple, for the
/// pointwise part of [`validate_cross_bound`].
pub fn default_bound_grid(triple: &SpectralTriple, n: usize) -> Vec<f64> {
    let top = triple.spectral_extent().max(f64::MIN_POSITIVE) * 2.0;
    (1..=n).map(|i| top * i as f64 / n as f64).collect()
}

/// Dimensionless (or dimensional) model parameters of the
/// Ohmic-plus-single-peak spectral densities:
/// λ_l = η ω_c, λ_h = s_h ω_h, D_l = η_D ω_c, D_h = s_D ω_h,
/// F_l = η_F ω_c, F_h = s_F ω_h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub eta: f64,
    pub omega_c: f64,
    pub s_h: f64,
    pub omega_h: f64,
    #[serde(default)]
    pub eta_d: f64,
    #[serde(default)]
    pub eta_f: f64,
    #[serde(default)]
    pub s_d: f64,
    #[serde(default)]
    pub s_f: f64,
    /// Friction applied to every peak; 0 keeps them as delta functions.
    #[serde(default)]
    pub gamma: f64,
}

impl ModelParameters {
    /// s_F² − s_h s_D; zero when the cross weight comes from a single mode.
    pub fn single_mode_residual(&self) -> f64 {
        self.s_f * self.s_f - self.s_h * self.s_d
    }
}

/// Builds the three channels of the Ohmic-plus-peak model. Zero-strength
/// terms are omitted. Fails if the cross-channel bound is violated.
pub fn from_parameter_table(params: &ModelParameters) -> Result<SpectralTriple, SpectralError> {
    let p = params;
    let all = [p.eta, p.omega_c, p.s_h, p.omega_h, p.eta_d, p.eta_f, p.s_d, p.s_f, p.gamma];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::InvalidTerm {
            channel: Channel::J,
            reason: "non-finite model parameter".into(),
        });
    }
    let resid = p.single_mode_residual();
    if resid.abs() > 1e-9 * (p.s_f * p.s_f).max(p.s_h * p.s_d).max(1e-300) {
        log::warn!(
            "s_F² = {} differs from s_h·s_D = {}; the peak cross term is not that of a single mode",
            p.s_f * p.s_f,
            p.s_h * p.s_d
        );
    }

    let mut triple = SpectralTriple::default();
    let mut push = |channel: Channel, low: f64, high: f64| {
        let terms = triple.channel_mut(channel);
        if low != 0.0 {
            terms.ohmic.push(OhmicTerm::new(low * p.omega_c, p.omega_c));
        }
        if high != 0.0 {
            terms
                .peaks
                .push(PeakTerm::new(p.omega_h, high * p.omega_h, p.gamma));
        }
    };
    push(Channel::J, p.eta, p.s_h);
    push(Channel::D, p.eta_d, p.s_d);
    push(Channel::F, p.eta_f, p.s_f);

    triple.check_terms()?;
    let grid = if triple.has_broadened_peaks() {
        default_bound_grid(&triple, 2000)
    } else {
        Vec::new()
    };
    let report = validate_cross_bound(&triple, &grid);
    if !report.is_valid() {
        return Err(SpectralError::BoundViolated(report));
    }
    Ok(triple)
}
