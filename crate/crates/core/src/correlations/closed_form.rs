//! Closed forms for Ohmic terms (four-term coth) and sharp peaks (exact coth).
//!
//! With θ = βω_c and τ_n = ω_c t/(1 + nθ), an Ohmic term of strength s
//! contributes
//!
//! ```text
//! K_R = (s/ω_c){½ln(1+τ₀²) + ln(1+τ₁²) + ln(1+τ₂²)
//!               + 2(1+5θ/2)/θ [τ_{5/2} atan τ_{5/2} − ½ln(1+τ_{5/2}²)]}
//! K_I = (s/ω_c) atan τ₀
//! D_R = ω_c s {(1−τ₀²)/(1+τ₀²)² + 2/(1+θ)² (1−τ₁²)/(1+τ₁²)²
//!              + 2/(1+2θ)² (1−τ₂²)/(1+τ₂²)² + 2/(θ(1+5θ/2)) 1/(1+τ_{5/2}²)}
//! D_I = ω_c s 2τ₀/(1+τ₀²)²
//! F_R = s τ₀/(1+τ₀²)
//! F_I = s {τ₀²/(1+τ₀²) + 2/(1+θ) τ₁²/(1+τ₁²) + 2/(1+2θ) τ₂²/(1+τ₂²)
//!          + (1/θ) ln(1+τ_{5/2}²)}
//! ```
//!
//! At zero temperature only the first term of each survives.

use num_complex::Complex64;

use super::{CorrelationError, CorrelationModel, CorrelationSample, Route};
use crate::spectral_density::{reorganization_energy, OhmicTerm, PeakTerm, SpectralTriple};
use crate::units::{CothMode, ThermalState};

#[inline]
fn ln1p_sq(x: f64) -> f64 {
    (x * x).ln_1p()
}

/// K = K_R − iK_I of one Ohmic term in the J channel.
pub fn ohmic_k(term: &OhmicTerm, thermal: &ThermalState, t: f64) -> Complex64 {
    let (s, wc) = (term.strength, term.cutoff);
    let tau0 = wc * t;
    let ki = s / wc * tau0.atan();
    let mut kr = 0.5 * ln1p_sq(tau0);
    if let Some(beta) = thermal.beta() {
        let th = beta * wc;
        let a = 1.0 + 2.5 * th;
        let t1 = tau0 / (1.0 + th);
        let t2 = tau0 / (1.0 + 2.0 * th);
        let t5 = tau0 / a;
        kr += ln1p_sq(t1) + ln1p_sq(t2) + 2.0 * a / th * (t5 * t5.atan() - 0.5 * ln1p_sq(t5));
    }
    Complex64::new(s / wc * kr, -ki)
}

/// D = D_R + iD_I of one Ohmic term in the J_D channel.
pub fn ohmic_d(term: &OhmicTerm, thermal: &ThermalState, t: f64) -> Complex64 {
    let (s, wc) = (term.strength, term.cutoff);
    let tau0 = wc * t;
    let lor = |x: f64| (1.0 - x * x) / (1.0 + x * x).powi(2);
    let mut dr = lor(tau0);
    if let Some(beta) = thermal.beta() {
        let th = beta * wc;
        let a = 1.0 + 2.5 * th;
        dr += 2.0 / (1.0 + th).powi(2) * lor(tau0 / (1.0 + th))
            + 2.0 / (1.0 + 2.0 * th).powi(2) * lor(tau0 / (1.0 + 2.0 * th))
            + 2.0 / (th * a) / (1.0 + (tau0 / a).powi(2));
    }
    let di = 2.0 * tau0 / (1.0 + tau0 * tau0).powi(2);
    Complex64::new(wc * s * dr, wc * s * di)
}

/// F = F_R + iF_I of one Ohmic term in the J_F channel.
pub fn ohmic_f(term: &OhmicTerm, thermal: &ThermalState, t: f64) -> Complex64 {
    let (s, wc) = (term.strength, term.cutoff);
    let tau0 = wc * t;
    let sat = |x: f64| x * x / (1.0 + x * x);
    let fr = tau0 / (1.0 + tau0 * tau0);
    let mut fi = sat(tau0);
    if let Some(beta) = thermal.beta() {
        let th = beta * wc;
        let a = 1.0 + 2.5 * th;
        fi += 2.0 / (1.0 + th) * sat(tau0 / (1.0 + th))
            + 2.0 / (1.0 + 2.0 * th) * sat(tau0 / (1.0 + 2.0 * th))
            + ln1p_sq(tau0 / a) / th;
    }
    Complex64::new(s * fr, s * fi)
}

/// All three functions from Ohmic terms of the given strengths sharing one
/// cutoff-agnostic evaluation.
pub fn ohmic_sample(
    j: &[OhmicTerm],
    jd: &[OhmicTerm],
    jf: &[OhmicTerm],
    thermal: &ThermalState,
    t: f64,
) -> CorrelationSample {
    CorrelationSample {
        k: j.iter().map(|o| ohmic_k(o, thermal, t)).sum(),
        d: jd.iter().map(|o| ohmic_d(o, thermal, t)).sum(),
        f: jf.iter().map(|o| ohmic_f(o, thermal, t)).sum(),
    }
}

/// Sharp peak in J: (w/ω_j)[c(1 − cos) − i sin].
pub fn peak_k(p: &PeakTerm, thermal: &ThermalState, t: f64) -> Complex64 {
    let c = thermal.coth(p.omega, CothMode::Exact);
    let a = p.weight / p.omega;
    Complex64::new(a * c * 2.0 * (0.5 * p.omega * t).sin().powi(2), -a * (p.omega * t).sin())
}

/// Sharp peak in J_D: ω_j w [c cos + i sin].
pub fn peak_d(p: &PeakTerm, thermal: &ThermalState, t: f64) -> Complex64 {
    let c = thermal.coth(p.omega, CothMode::Exact);
    let a = p.weight * p.omega;
    let (s, co) = (p.omega * t).sin_cos();
    Complex64::new(a * c * co, a * s)
}

/// Sharp peak in J_F: w [sin + i c(1 − cos)].
pub fn peak_f(p: &PeakTerm, thermal: &ThermalState, t: f64) -> Complex64 {
    let c = thermal.coth(p.omega, CothMode::Exact);
    Complex64::new(
        p.weight * (p.omega * t).sin(),
        p.weight * c * 2.0 * (0.5 * p.omega * t).sin().powi(2),
    )
}

/// Contribution of every sharp (γ = 0) peak of a triple.
pub fn sharp_sample(triple: &SpectralTriple, thermal: &ThermalState, t: f64) -> CorrelationSample {
    CorrelationSample {
        k: triple.j.sharp_peaks().map(|p| peak_k(p, thermal, t)).sum(),
        d: triple.jd.sharp_peaks().map(|p| peak_d(p, thermal, t)).sum(),
        f: triple.jf.sharp_peaks().map(|p| peak_f(p, thermal, t)).sum(),
    }
}

/// Ohmic terms plus sharp peaks.
#[derive(Debug, Clone)]
pub struct ClosedFormModel {
    triple: SpectralTriple,
    thermal: ThermalState,
    lambda: f64,
}

impl ClosedFormModel {
    pub fn new(triple: SpectralTriple, thermal: ThermalState) -> Result<Self, CorrelationError> {
        triple.check_terms()?;
        let broadened: usize = [&triple.j, &triple.jd, &triple.jf]
            .iter()
            .map(|c| c.broadened_peaks().count())
            .sum();
        if broadened > 0 {
            return Err(CorrelationError::NeedsQuadrature(broadened));
        }
        let lambda = reorganization_energy(&triple);
        Ok(Self {
            triple,
            thermal,
            lambda,
        })
    }

    pub fn triple(&self) -> &SpectralTriple {
        &self.triple
    }
}

impl CorrelationModel for ClosedFormModel {
    fn sample(&self, t: f64) -> CorrelationSample {
        ohmic_sample(
            &self.triple.j.ohmic,
            &self.triple.jd.ohmic,
            &self.triple.jf.ohmic,
            &self.thermal,
            t,
        ) + sharp_sample(&self.triple, &self.thermal, t)
    }

    fn reorganization_energy(&self) -> f64 {
        self.lambda
    }

    fn max_frequency(&self) -> f64 {
        self.triple.spectral_extent()
    }

    fn route(&self) -> Route {
        Route::ClosedForm
    }

    fn k_real_bound(&self) -> Option<f64> {
        if !self.triple.j.ohmic.is_empty() {
            return None;
        }
        Some(
            self.triple
                .j
                .peaks
                .iter()
                .map(|p| 2.0 * p.weight / p.omega * self.thermal.coth(p.omega, CothMode::Exact))
                .sum(),
        )
    }
}

pub fn k_ohmic_closed(
    ohmic: &OhmicTerm,
    peak: Option<&PeakTerm>,
    thermal: &ThermalState,
    times: &[f64],
) -> Vec<Complex64> {
    times
        .iter()
        .map(|&t| ohmic_k(ohmic, thermal, t) + peak.map_or(Complex64::default(), |p| peak_k(p, thermal, t)))
        .collect()
}

pub fn d_ohmic_closed(
    ohmic: &OhmicTerm,
    peak: Option<&PeakTerm>,
    thermal: &ThermalState,
    times: &[f64],
) -> Vec<Complex64> {
    times
        .iter()
        .map(|&t| ohmic_d(ohmic, thermal, t) + peak.map_or(Complex64::default(), |p| peak_d(p, thermal, t)))
        .collect()
}

pub fn f_ohmic_closed(
    ohmic: &OhmicTerm,
    peak: Option<&PeakTerm>,
    thermal: &ThermalState,
    times: &[f64],
) -> Vec<Complex64> {
    times
        .iter()
        .map(|&t| ohmic_f(ohmic, thermal, t) + peak.map_or(Complex64::default(), |p| peak_f(p, thermal, t)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::discrete::mode_sample;
    use crate::correlations::parity_residual;
    use crate::mode_data::Mode;
    use crate::units::coth_factor;
    use std::f64::consts::PI;

    /// Brute-force oracle: Simpson over ω ∈ (0, 60ω_c] of the defining
    /// integrals with the four-term coth.
    fn oracle(term: &OhmicTerm, thermal: &ThermalState, t: f64) -> (f64, f64, f64, f64, f64, f64) {
        let wc = term.cutoff;
        let n = 400_000;
        let top = 60.0 * wc;
        let h = top / n as f64;
        let mut acc = [0.0f64; 6];
        for i in 0..=n {
            let w = if i == 0 { 1e-12 * wc } else { i as f64 * h };
            let wt = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let j = PI * term.strength * w / wc * (-w / wc).exp();
            let c = match thermal.beta() {
                Some(b) => coth_factor(b * w, CothMode::FourTerm).unwrap(),
                None => 1.0,
            };
            let omc = 2.0 * (0.5 * w * t).sin().powi(2);
            let (s, co) = (w * t).sin_cos();
            let vals = [
                j / (w * w) * c * omc,
                j / (w * w) * s,
                j * c * co,
                j * s,
                j / w * s,
                j / w * c * omc,
            ];
            for k in 0..6 {
                acc[k] += wt * vals[k];
            }
        }
        let f = h / 3.0 / PI;
        (acc[0] * f, acc[1] * f, acc[2] * f, acc[3] * f, acc[4] * f, acc[5] * f)
    }

    #[test]
    fn ohmic_forms_match_brute_force() {
        let term = OhmicTerm::new(1.3, 0.8);
        for thermal in [
            ThermalState::from_beta(0.6).unwrap(),
            ThermalState::from_beta(2.0).unwrap(),
            ThermalState::Zero,
        ] {
            for t in [0.3, 1.7, 6.0] {
                let (kr, ki, dr, di, fr, fi) = oracle(&term, &thermal, t);
                let k = ohmic_k(&term, &thermal, t);
                let d = ohmic_d(&term, &thermal, t);
                let f = ohmic_f(&term, &thermal, t);
                let tol = 2e-6;
                assert!((k.re - kr).abs() < tol, "K_R {thermal:?} {t}: {} {kr}", k.re);
                assert!((-k.im - ki).abs() < tol, "K_I {t}: {} {ki}", -k.im);
                assert!((f.re - fr).abs() < tol, "F_R {t}: {} {fr}", f.re);
                assert!((f.im - fi).abs() < tol, "F_I {t}: {} {fi}", f.im);
                assert!((d.im - di).abs() < tol, "D_I {t}: {} {di}", d.im);
                // D_R has a 1/ω-like coth factor at ω → 0, which the Simpson
                // oracle handles less well
                assert!((d.re - dr).abs() < 1e-4, "D_R {thermal:?} {t}: {} {dr}", d.re);
            }
        }
    }

    #[test]
    fn d_at_origin() {
        let term = OhmicTerm::new(2.0, 1.5);
        for th in [0.5, 1.0, 5.0] {
            let thermal = ThermalState::from_beta(th / 1.5).unwrap();
            let d = ohmic_d(&term, &thermal, 0.0);
            let expect = 1.5
                * 2.0
                * (1.0 + 2.0 / (1.0 + th).powi(2) + 2.0 / (1.0 + 2.0 * th).powi(2) + 2.0 / (th * (1.0 + 2.5 * th)));
            assert!((d.re - expect).abs() < 1e-12);
            assert_eq!(d.im, 0.0);
        }
        let f = ohmic_f(&term, &ThermalState::from_beta(1.0).unwrap(), 0.0);
        assert_eq!(f, Complex64::new(0.0, 0.0));
        assert_eq!(ohmic_k(&term, &ThermalState::from_beta(1.0).unwrap(), 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn long_time_asymptotics() {
        let term = OhmicTerm::new(1.0, 1.0);
        let th = 1.0;
        let thermal = ThermalState::from_beta(th).unwrap();
        let t = 1e3;
        let k = ohmic_k(&term, &thermal, t);
        assert!((-k.im - PI / 2.0).abs() < 2e-3);
        // slope of K_R tends to (2/θ)(π/2) = π/θ (times λ/ω_c · ω_c)
        let slope = (ohmic_k(&term, &thermal, t + 1.0).re - k.re) / 1.0;
        assert!((slope - PI / th).abs() < 1e-2, "{slope}");
    }

    #[test]
    fn sharp_peak_equals_discrete_mode() {
        // mode ω, g, f ↔ peaks with weights ωg², f²/2, √(ω/2)fg
        let m = Mode::new(1.7, 0.6, -0.9);
        let thermal = ThermalState::from_beta(0.8).unwrap();
        let pk = PeakTerm::new(m.omega, m.omega * m.g * m.g, 0.0);
        let pd = PeakTerm::new(m.omega, 0.5 * m.f * m.f, 0.0);
        let pf = PeakTerm::new(m.omega, (0.5 * m.omega).sqrt() * m.f * m.g, 0.0);
        for t in [0.0, 0.4, 3.3, -2.0] {
            let s = mode_sample(&m, &thermal, t);
            assert!((peak_k(&pk, &thermal, t) - s.k).norm() < 1e-14);
            assert!((peak_d(&pd, &thermal, t) - s.d).norm() < 1e-14);
            assert!((peak_f(&pf, &thermal, t) - s.f).norm() < 1e-14);
        }
    }

    #[test]
    fn broadened_input_rejected() {
        let mut t = SpectralTriple::default();
        t.j.peaks.push(PeakTerm::new(1.0, 1.0, 0.1));
        assert!(matches!(
            ClosedFormModel::new(t, ThermalState::Zero),
            Err(CorrelationError::NeedsQuadrature(1))
        ));
    }

    #[test]
    fn parity_holds() {
        let p = crate::presets::ModelCase::IB.parameters();
        let triple = crate::spectral_density::from_parameter_table(&p).unwrap();
        let model = ClosedFormModel::new(triple, ThermalState::from_beta(1.0).unwrap()).unwrap();
        let times: Vec<f64> = (0..50).map(|i| 0.37 * i as f64).collect();
        assert!(parity_residual(&model, &times) < 1e-14);
        for &t in &times {
            assert!(model.sample(t).k.re >= 0.0);
        }
    }
}
