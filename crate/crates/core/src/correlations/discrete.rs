//! Exact sums over discrete displaced modes (exact coth throughout).

use num_complex::Complex64;

use super::{CorrelationError, CorrelationModel, CorrelationSample, Route};
use crate::mode_data::{Mode, ModeSet};
use crate::units::{CothMode, ThermalState};

/// One mode's contribution:
/// K_j = g²[c(1 − cos ωt) − i sin ωt],
/// D_j = (ω/2) f² [c cos ωt + i sin ωt],
/// F_j = √(ω/2) f g [sin ωt + i c(1 − cos ωt)].
#[inline]
pub fn mode_sample(mode: &Mode, thermal: &ThermalState, t: f64) -> CorrelationSample {
    let c = thermal.coth(mode.omega, CothMode::Exact);
    let (s, co) = (mode.omega * t).sin_cos();
    let one_minus_cos = 2.0 * (0.5 * mode.omega * t).sin().powi(2);
    let g2 = mode.g * mode.g;
    let wd = 0.5 * mode.omega * mode.f * mode.f;
    let wf = (0.5 * mode.omega).sqrt() * mode.f * mode.g;
    CorrelationSample {
        k: Complex64::new(g2 * c * one_minus_cos, -g2 * s),
        d: Complex64::new(wd * c * co, wd * s),
        f: Complex64::new(wf * s, wf * c * one_minus_cos),
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteModel {
    modes: ModeSet,
    thermal: ThermalState,
}

impl DiscreteModel {
    pub fn new(modes: ModeSet, thermal: ThermalState) -> Result<Self, CorrelationError> {
        if modes.is_empty() {
            return Err(CorrelationError::NoModes);
        }
        Ok(Self { modes, thermal })
    }

    pub fn modes(&self) -> &ModeSet {
        &self.modes
    }
}

impl CorrelationModel for DiscreteModel {
    fn sample(&self, t: f64) -> CorrelationSample {
        let mut acc = CorrelationSample::default();
        for m in self.modes.modes() {
            acc += mode_sample(m, &self.thermal, t);
        }
        acc
    }

    fn reorganization_energy(&self) -> f64 {
        self.modes.reorganization_energy()
    }

    fn max_frequency(&self) -> f64 {
        self.modes.max_frequency()
    }

    fn route(&self) -> Route {
        Route::Discrete
    }

    fn k_real_bound(&self) -> Option<f64> {
        Some(
            self.modes
                .modes()
                .iter()
                .map(|m| 2.0 * m.g * m.g * self.thermal.coth(m.omega, CothMode::Exact))
                .sum(),
        )
    }
}

fn sweep(
    modes: &ModeSet,
    thermal: &ThermalState,
    times: &[f64],
    pick: impl Fn(CorrelationSample) -> Complex64,
) -> Vec<Complex64> {
    times
        .iter()
        .map(|&t| {
            pick(
                modes
                    .modes()
                    .iter()
                    .map(|m| mode_sample(m, thermal, t))
                    .fold(CorrelationSample::default(), |a, b| a + b),
            )
        })
        .collect()
}

pub fn k_discrete(modes: &ModeSet, thermal: &ThermalState, times: &[f64]) -> Vec<Complex64> {
    sweep(modes, thermal, times, |s| s.k)
}

pub fn d_discrete(modes: &ModeSet, thermal: &ThermalState, times: &[f64]) -> Vec<Complex64> {
    sweep(modes, thermal, times, |s| s.d)
}

pub fn f_discrete(modes: &ModeSet, thermal: &ThermalState, times: &[f64]) -> Vec<Complex64> {
    sweep(modes, thermal, times, |s| s.f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::parity_residual;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn one(omega: f64, g: f64, f: f64) -> ModeSet {
        ModeSet::new(vec![Mode::new(omega, g, f)]).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn k_spot_values() {
        let m = one(1.0, 1.0, 0.0);
        assert_eq!(k_discrete(&m, &ThermalState::Zero, &[0.0])[0], Complex64::new(0.0, 0.0));
        let k = k_discrete(&m, &ThermalState::Zero, &[PI])[0];
        assert!(close(k, Complex64::new(2.0, 0.0), 1e-14));
        let th = ThermalState::from_beta(1.0).unwrap();
        let k = k_discrete(&m, &th, &[PI / 2.0])[0];
        assert!(close(k, Complex64::new(2.163953, -1.0), 1e-6), "{k}");
    }

    #[test]
    fn d_spot_values() {
        let d = d_discrete(&one(2.0, 0.3, 1.0), &ThermalState::Zero, &[0.0])[0];
        assert!(close(d, Complex64::new(1.0, 0.0), 1e-15));
        let d = d_discrete(&one(2.0, 0.3, 0.0), &ThermalState::Zero, &[0.0, 1.0, 2.0]);
        assert!(d.iter().all(|z| z.norm() == 0.0));
        let th = ThermalState::from_beta(1.0).unwrap();
        let d = d_discrete(&one(1.0, 0.0, 1.0), &th, &[PI])[0];
        assert!(close(d, Complex64::new(-0.5 * 2.163953, 0.0), 1e-6), "{d}");
    }

    #[test]
    fn f_spot_values() {
        let m = one(2.0, 1.0, 1.0);
        assert_eq!(f_discrete(&m, &ThermalState::Zero, &[0.0])[0].norm(), 0.0);
        let f = f_discrete(&m, &ThermalState::Zero, &[PI / 2.0])[0];
        assert!(close(f, Complex64::new(0.0, 2.0), 1e-14), "{f}");
        let f = f_discrete(&one(2.0, 0.0, 1.0), &ThermalState::Zero, &[0.7])[0];
        assert_eq!(f.norm(), 0.0);
    }

    #[test]
    fn d_at_zero_matches_mode_set() {
        let modes = ModeSet::new(vec![Mode::new(1.0, 0.2, 0.5), Mode::new(2.5, -0.4, 0.3)]).unwrap();
        let th = ThermalState::from_beta(0.7).unwrap();
        let d = d_discrete(&modes, &th, &[0.0])[0];
        assert_eq!(d.im, 0.0);
        assert!((d.re - modes.d_at_zero(&th)).abs() < 1e-14);
    }

    #[test]
    fn empty_mode_set_rejected() {
        let empty = ModeSet::new(vec![]).unwrap();
        assert!(matches!(
            DiscreteModel::new(empty, ThermalState::Zero),
            Err(CorrelationError::NoModes)
        ));
    }

    proptest! {
        #[test]
        fn parity_and_positivity(
            w in 0.1f64..5.0, g in -2.0f64..2.0, f in -2.0f64..2.0,
            beta in 0.05f64..20.0, t in -30.0f64..30.0,
        ) {
            let model = DiscreteModel::new(one(w, g, f), ThermalState::from_beta(beta).unwrap()).unwrap();
            prop_assert!(parity_residual(&model, &[t]) < 1e-13);
            let s = model.sample(t);
            prop_assert!(s.k.re >= 0.0);
            prop_assert!(s.k.re <= model.k_real_bound().unwrap() + 1e-12);
        }
    }
}
