//! Golden-rule rate from sampled correlation functions.
//!
//! ```text
//! k = ∫ dt G(t),   G(t) = e^{i(Δ+λ)t − K*(t)} { D*(t) − F*(t)² },   Δ = E₁ − E₂
//! ```
//!
//! K(−t) = K*(t), D(−t) = D*(t) and F(−t) = −F*(t) make G(−t) = G*(t), so a
//! real rate needs only t ≥ 0. By default negative times are still sampled
//! from the model, and |Im ∫G| measures how well the parity holds. The Condon
//! reference replaces the braces by D_R(0).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlations::{build_grid, CorrelationError, CorrelationGrid, CorrelationModel, GridSpec};
use crate::quadrature::{time_integral, NeumaierComplex, QuadratureError};
use crate::units::ThermalState;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("correlation functions do not decay: {0}")]
    NoDecay(String),
    #[error("time step {dt:.3e} ps cannot resolve frequency {needed:.3e} rad/ps (limit π/dt = {limit:.3e}); reduce dt")]
    GridTooCoarse { dt: f64, needed: f64, limit: f64 },
    #[error("sampled correlations violate K(0) = F(0) = Im D(0) = 0 (relative residual {0:.3e})")]
    InconsistentGrid(f64),
    #[error("negative rate {rate:.6e} beyond round-off (scale {scale:.3e})")]
    NegativeRate { rate: f64, scale: f64 },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Quadrature(QuadratureError),
    #[error("invalid request: {0}")]
    Invalid(String),
}

impl From<QuadratureError> for RateError {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::NoDecay { .. } => RateError::NoDecay(e.to_string()),
            other => RateError::Quadrature(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Time step; default (2π/ω_max)/20, reduced further if a gap needs it.
    #[serde(default)]
    pub dt: Option<f64>,
    /// End of the time grid; default found from the decay of e^{−K_R}.
    #[serde(default)]
    pub t_max: Option<f64>,
    /// Required |G(T)|/max|G| at the grid ends.
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "yes")]
    pub include_condon: bool,
    #[serde(default)]
    pub keep_integrand: bool,
    /// Sample t < 0 from the model rather than by reflection.
    #[serde(default = "yes")]
    pub two_sided: bool,
}

fn default_tail_tol() -> f64 {
    1e-8
}

fn yes() -> bool {
    true
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: None,
            tail_tol: default_tail_tol(),
            include_condon: true,
            keep_integrand: false,
            two_sided: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    /// E₁ − E₂ (rad/ps).
    pub gap: f64,
    /// Rate in ps⁻¹ (or in ω_c units for dimensionless input).
    pub k_fgr: f64,
    pub k_condon: Option<f64>,
    /// |Im ∫G| / |Re ∫G|.
    pub imag_residual: f64,
    /// |G(±T)| / max|G|.
    pub tail_estimate: f64,
    pub lambda: f64,
    pub dt: f64,
    pub t_max: f64,
    /// (t, G(t)) on the symmetric grid when requested.
    #[serde(default)]
    pub integrand: Option<Vec<(f64, Complex64)>>,
}

/// κ = √(k_BT λ/π)·k.
pub fn kappa(rate: f64, kbt: f64, lambda: f64) -> f64 {
    (kbt * lambda / PI).sqrt() * rate
}

/// Correlations on a grid plus the gap-independent part of the integrand.
#[derive(Debug, Clone)]
pub struct PreparedRate {
    grid: CorrelationGrid,
    /// e^{iλt − K*(t)} {D*(t) − F*(t)²} for t ≥ 0.
    base: Vec<Complex64>,
    /// e^{iλt − K*(t)}.
    bare: Vec<Complex64>,
    /// The same at −t, when sampled directly.
    negative: Option<(Vec<Complex64>, Vec<Complex64>)>,
    d0: f64,
    omega_max: f64,
    opts: RateOptions,
}

const ORIGIN_TOL: f64 = 1e-10;
const T_DOUBLINGS: usize = 40;
/// Largest grid from_model will allocate (one-sided samples).
pub const MAX_SAMPLES: usize = 1 << 23;

impl PreparedRate {
    /// Samples `model` on a grid long enough for e^{−K_R} to fall below the
    /// tail tolerance and fine enough for every gap in `gaps`.
    pub fn from_model(
        model: &dyn CorrelationModel,
        gaps: &[f64],
        opts: &RateOptions,
    ) -> Result<Self, RateError> {
        if !(opts.tail_tol > 0.0 && opts.tail_tol < 1.0) {
            return Err(RateError::Invalid(format!("tail_tol must be in (0, 1), got {}", opts.tail_tol)));
        }
        let omega_max = model.max_frequency().max(f64::MIN_POSITIVE);
        let lambda = model.reorganization_energy();
        let worst = gaps.iter().map(|g| (g + lambda).abs()).fold(0.0, f64::max);
        let dt = opts.dt.unwrap_or_else(|| {
            GridSpec::default_dt(omega_max).min(0.5 * PI / (worst + omega_max))
        });

        if let Some(bound) = model.k_real_bound() {
            return Err(RateError::NoDecay(format!(
                "K_R stays below {bound:.4} for all t (only sharp peaks); e^(-K_R) recurs instead of decaying. Add an Ohmic term or broadening"
            )));
        }

        let target = (1.0 / opts.tail_tol).ln() + 2.0;
        let mut t_max = match opts.t_max {
            Some(t) => t,
            None => {
                let mut t = 2.0 * PI / omega_max;
                let mut n = 0;
                while model.sample(t).k.re < target {
                    t *= 2.0;
                    n += 1;
                    if n > T_DOUBLINGS {
                        return Err(RateError::NoDecay(format!(
                            "K_R({t:.3e}) = {:.3e} still below {target:.2}",
                            model.sample(t).k.re
                        )));
                    }
                }
                t
            }
        };

        let mut tries = 0;
        loop {
            let n = (t_max / dt).ceil() + 1.0;
            if !(n <= MAX_SAMPLES as f64) {
                return Err(RateError::NoDecay(format!(
                    "reaching T = {t_max:.3e} at dt = {dt:.3e} needs {n:.3e} samples (limit {MAX_SAMPLES}); correlations decay too slowly. Raise tail_tol or give t_max"
                )));
            }
            let n = n as usize;
            let grid = build_grid(model, GridSpec::new(dt, n))?;
            let mut prepared = Self::from_grid(grid, omega_max, opts)?;
            if opts.two_sided {
                prepared.negative = Some(Self::sample_negative(model, dt, n, lambda));
            }
            let tail = prepared.tail();
            if tail <= opts.tail_tol || opts.t_max.is_some() || tries >= 6 {
                return Ok(prepared);
            }
            log::debug!("tail {tail:.3e} above tolerance at T = {t_max:.4e}; doubling");
            t_max *= 2.0;
            tries += 1;
        }
    }

    /// Uses an existing grid (its λ and samples); `omega_max` is the highest
    /// bath frequency, needed for the resolution check.
    pub fn from_grid(
        grid: CorrelationGrid,
        omega_max: f64,
        opts: &RateOptions,
    ) -> Result<Self, RateError> {
        if grid.is_empty() {
            return Err(RateError::Invalid("empty correlation grid".into()));
        }
        let resid = grid.origin_residual();
        if resid > ORIGIN_TOL {
            return Err(RateError::InconsistentGrid(resid));
        }
        let lambda = grid.lambda;
        let (base, bare): (Vec<Complex64>, Vec<Complex64>) = (0..grid.len())
            .map(|m| {
                let t = grid.time(m);
                let s = grid.sample(m);
                let e = (Complex64::new(0.0, lambda * t) - s.k.conj()).exp();
                let f = s.f.conj();
                (e * (s.d.conj() - f * f), e)
            })
            .unzip();
        let d0 = grid.d[0].re;
        Ok(Self {
            grid,
            base,
            bare,
            negative: None,
            d0,
            omega_max,
            opts: *opts,
        })
    }

    /// Base and bare factors at t = −m·dt.
    fn sample_negative(
        model: &dyn CorrelationModel,
        dt: f64,
        n: usize,
        lambda: f64,
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        (0..n)
            .into_par_iter()
            .map(|m| {
                let t = -(m as f64) * dt;
                let s = model.sample(t);
                let e = (Complex64::new(0.0, lambda * t) - s.k.conj()).exp();
                let f = s.f.conj();
                (e * (s.d.conj() - f * f), e)
            })
            .unzip()
    }

    pub fn grid(&self) -> &CorrelationGrid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.grid.lambda
    }

    /// D_R(0), the Condon prefactor.
    pub fn condon_prefactor(&self) -> f64 {
        self.d0
    }

    pub fn t_max(&self) -> f64 {
        self.grid.time(self.grid.len() - 1)
    }

    fn tail(&self) -> f64 {
        let env = |v: &[Complex64]| {
            let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if peak == 0.0 {
                0.0
            } else {
                v.last().unwrap().norm() / peak
            }
        };
        env(&self.base).max(env(&self.bare))
    }

    fn check_resolution(&self, gap: f64) -> Result<(), RateError> {
        let needed = (gap + self.lambda()).abs() + self.omega_max;
        let limit = PI / self.grid.dt;
        if needed > limit {
            return Err(RateError::GridTooCoarse {
                dt: self.grid.dt,
                needed,
                limit,
            });
        }
        Ok(())
    }

    fn symmetric(v: &[Complex64], neg: Option<&[Complex64]>, gap: f64, dt: f64) -> Vec<Complex64> {
        let n = v.len();
        let mut out = vec![Complex64::default(); 2 * n - 1];
        for (m, z) in v.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, gap * m as f64 * dt);
            let g = phase * z;
            out[n - 1 + m] = g;
            out[n - 1 - m] = match neg {
                Some(w) if m > 0 => phase.conj() * w[m],
                _ => g.conj(),
            };
        }
        out
    }

    /// G(t) on the symmetric grid −T..T.
    pub fn integrand(&self, gap: f64) -> Vec<Complex64> {
        let neg = self.negative.as_ref().map(|(b, _)| b.as_slice());
        Self::symmetric(&self.base, neg, gap, self.grid.dt)
    }

    /// The full rate at one gap.
    pub fn rate(&self, gap: f64) -> Result<RateResult, RateError> {
        if !gap.is_finite() {
            return Err(RateError::Invalid(format!("non-finite gap {gap}")));
        }
        self.check_resolution(gap)?;
        let dt = self.grid.dt;
        let g = self.integrand(gap);
        let integral = time_integral(&g, dt, self.opts.tail_tol)?;
        let k = integral.value.re;
        let scale = dt * g.iter().map(|z| z.norm()).sum::<f64>();
        if k < -1e-8 * scale {
            return Err(RateError::NegativeRate { rate: k, scale });
        }
        let k_condon = if self.opts.include_condon {
            Some(self.condon(gap)?)
        } else {
            None
        };
        let n = self.grid.len() as f64 - 1.0;
        Ok(RateResult {
            gap,
            k_fgr: k,
            k_condon,
            imag_residual: if k != 0.0 { integral.value.im.abs() / k.abs() } else { integral.value.im.abs() },
            tail_estimate: integral.tail,
            lambda: self.lambda(),
            dt,
            t_max: n * dt,
            integrand: self.opts.keep_integrand.then(|| {
                g.iter()
                    .enumerate()
                    .map(|(i, z)| ((i as f64 - n) * dt, *z))
                    .collect()
            }),
        })
    }

    /// Condon reference D_R(0)·∫ e^{i(Δ+λ)t − K*(t)} dt.
    pub fn condon(&self, gap: f64) -> Result<f64, RateError> {
        self.check_resolution(gap)?;
        if self.d0 == 0.0 {
            return Ok(0.0);
        }
        let neg = self.negative.as_ref().map(|(_, b)| b.as_slice());
        let g = Self::symmetric(&self.bare, neg, gap, self.grid.dt);
        let integral = time_integral(&g, self.grid.dt, self.opts.tail_tol)?;
        Ok(self.d0 * integral.value.re)
    }

    /// The same rate from the first form,
    /// ∫ e^{−i(Δ+λ)t − K(t)} {F(t)F*(−t) + D(t)} dt, evaluated directly from
    /// the samples on both half-lines.
    pub fn rate_first_form(&self, gap: f64) -> Result<f64, RateError> {
        self.check_resolution(gap)?;
        let dt = self.grid.dt;
        let lambda = self.lambda();
        let n = self.grid.len();
        let mut acc = NeumaierComplex::default();
        for m in 0..n {
            let s = self.grid.sample(m);
            let t = self.grid.time(m);
            let w = if m == n - 1 { 0.5 } else { 1.0 };
            // t ≥ 0: F*(−t) = −F(t)
            let pos = (Complex64::new(0.0, -(gap + lambda) * t) - s.k).exp() * (s.d - s.f * s.f);
            // −t: K(−t) = K*, D(−t) = D*, F(−t) = −F*, F*(t)
            let neg = (Complex64::new(0.0, (gap + lambda) * t) - s.k.conj()).exp()
                * (s.d.conj() - s.f.conj() * s.f.conj());
            if m == 0 {
                acc.add(pos);
            } else {
                acc.add(w * pos);
                acc.add(w * neg);
            }
        }
        Ok(acc.value().re * dt)
    }

    /// Rates for many gaps; rows are independent and keep input order.
    pub fn scan(&self, gaps: &[f64]) -> Vec<Result<RateResult, RateError>> {
        gaps.par_iter().map(|&g| self.rate(g)).collect()
    }
}

impl CorrelationGrid {
    /// Copy with D(t) frozen at D_R(0) and F ≡ 0.
    pub fn with_frozen_coupling(&self) -> CorrelationGrid {
        let d0 = Complex64::new(self.d[0].re, 0.0);
        CorrelationGrid {
            d: vec![d0; self.len()],
            f: vec![Complex64::default(); self.len()],
            ..self.clone()
        }
    }
}

/// k_FGR (and the Condon reference) at one gap.
pub fn compute_rate(
    model: &dyn CorrelationModel,
    gap: f64,
    opts: &RateOptions,
) -> Result<RateResult, RateError> {
    PreparedRate::from_model(model, &[gap], opts)?.rate(gap)
}

/// Condon rate alone.
pub fn condon_rate(model: &dyn CorrelationModel, gap: f64, opts: &RateOptions) -> Result<f64, RateError> {
    PreparedRate::from_model(model, &[gap], opts)?.condon(gap)
}

/// Gap scan reusing one set of correlation samples.
pub fn scan_gap(
    model: &dyn CorrelationModel,
    gaps: &[f64],
    opts: &RateOptions,
) -> Result<Vec<Result<RateResult, RateError>>, RateError> {
    let prepared = PreparedRate::from_model(model, gaps, opts)?;
    Ok(prepared.scan(gaps))
}

/// κ for a rate at the given thermal state.
pub fn scaled(rate: f64, thermal: &ThermalState, lambda: f64) -> f64 {
    kappa(rate, thermal.kbt(), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{ClosedFormModel, DiscreteModel, Route};
    use crate::mode_data::{Mode, ModeSet};
    use crate::presets::ModelCase;
    use crate::spectral_density::{from_parameter_table, ModelParameters, OhmicTerm, SpectralTriple};

    fn case(c: ModelCase) -> ClosedFormModel {
        model_from(c.parameters())
    }

    fn model_from(p: ModelParameters) -> ClosedFormModel {
        ClosedFormModel::new(
            from_parameter_table(&p).unwrap(),
            ThermalState::from_beta(1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn slow_decay_is_an_error_not_an_allocation() {
        // Ohmic K_R grows only logarithmically at T = 0
        let model = ClosedFormModel::new(
            from_parameter_table(&ModelCase::IA.parameters()).unwrap(),
            ThermalState::Zero,
        )
        .unwrap();
        let err = PreparedRate::from_model(&model, &[2.0], &RateOptions::default()).unwrap_err();
        assert!(matches!(err, RateError::NoDecay(_)), "{err}");
    }

    #[test]
    fn constant_coupling_integrand() {
        let n = 11;
        let grid = CorrelationGrid {
            dt: 0.1,
            k: vec![Complex64::default(); n],
            d: vec![Complex64::new(2.5, 0.0); n],
            f: vec![Complex64::default(); n],
            lambda: 0.0,
            route: Route::ClosedForm,
        };
        let p = PreparedRate::from_grid(grid, 1.0, &RateOptions::default()).unwrap();
        assert!(p.integrand(0.0).iter().all(|z| (*z - Complex64::new(2.5, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn integrand_is_hermitian() {
        let p = PreparedRate::from_model(&case(ModelCase::IB), &[10.0], &RateOptions::default()).unwrap();
        let g = p.integrand(10.0);
        let n = g.len() / 2;
        for m in 0..=n {
            assert!((g[n + m] - g[n - m].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn no_coupling_gives_zero() {
        let mut t = SpectralTriple::default();
        t.j.ohmic.push(OhmicTerm::new(1.0, 1.0));
        let model = ClosedFormModel::new(t, ThermalState::from_beta(1.0).unwrap()).unwrap();
        let r = compute_rate(&model, 5.0, &RateOptions::default()).unwrap();
        assert_eq!(r.k_fgr, 0.0);
        assert_eq!(r.k_condon, Some(0.0));
    }

    #[test]
    fn sharp_only_spectrum_does_not_decay() {
        let modes = ModeSet::new(vec![Mode::new(1.0, 0.5, 0.3)]).unwrap();
        let model = DiscreteModel::new(modes, ThermalState::Zero).unwrap();
        assert!(matches!(
            compute_rate(&model, 1.0, &RateOptions::default()),
            Err(RateError::NoDecay(_))
        ));
    }

    #[test]
    fn rate_identities_case_ia() {
        let model = case(ModelCase::IA);
        let gaps = [0.0, 5.0, 10.0, 15.0, 20.0];
        let p = PreparedRate::from_model(&model, &gaps, &RateOptions::default()).unwrap();
        let frozen = PreparedRate::from_grid(
            p.grid().with_frozen_coupling(),
            model.max_frequency(),
            &RateOptions::default(),
        )
        .unwrap();
        for &g in &gaps {
            let r = p.rate(g).unwrap();
            assert!(r.imag_residual < 1e-8, "{g}: {}", r.imag_residual);
            let first = p.rate_first_form(g).unwrap();
            assert!(((first - r.k_fgr) / r.k_fgr).abs() < 1e-10, "{g}: {first} {}", r.k_fgr);
            let fr = frozen.rate(g).unwrap().k_fgr;
            let c = r.k_condon.unwrap();
            assert!(((fr - c) / c).abs() < 1e-12, "{g}: {fr} {c}");
        }
    }

    #[test]
    fn enhancement_and_sign_effects() {
        let gap = 10.0;
        let opts = RateOptions::default();
        let a = compute_rate(&case(ModelCase::IA), gap, &opts).unwrap();
        assert!(a.k_fgr > a.k_condon.unwrap());
        let b = compute_rate(&case(ModelCase::IB), gap, &opts).unwrap();
        let c = compute_rate(&case(ModelCase::IC), gap, &opts).unwrap();
        // the sign of s_F matters once the Ohmic part also carries F
        assert!(((b.k_fgr - c.k_fgr) / b.k_fgr).abs() > 1e-3);
        let (cb, cc) = (b.k_condon.unwrap(), c.k_condon.unwrap());
        assert!(((cb - cc) / cb).abs() < 1e-12);
        // and does not when it is the only source of F
        let mut p = ModelCase::IA.parameters();
        let plus = compute_rate(&model_from(p), gap, &opts).unwrap().k_fgr;
        p.s_f = -p.s_f;
        let minus = compute_rate(&model_from(p), gap, &opts).unwrap().k_fgr;
        assert!(((plus - minus) / plus).abs() < 1e-12);
    }

    #[test]
    fn scan_rows_do_not_depend_on_neighbours() {
        let model = case(ModelCase::IIA);
        let opts = RateOptions {
            dt: Some(0.01),
            t_max: Some(12.0),
            ..Default::default()
        };
        let coarse: Vec<f64> = (0..5).map(|i| 4.0 * i as f64).collect();
        let fine: Vec<f64> = (0..9).map(|i| 2.0 * i as f64).collect();
        let a = scan_gap(&model, &coarse, &opts).unwrap();
        let b = scan_gap(&model, &fine, &opts).unwrap();
        for (i, r) in a.iter().enumerate() {
            assert_eq!(r.as_ref().unwrap().k_fgr, b[2 * i].as_ref().unwrap().k_fgr);
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let model = case(ModelCase::IA);
        let opts = RateOptions {
            dt: Some(0.5),
            ..Default::default()
        };
        assert!(matches!(
            compute_rate(&model, 20.0, &opts),
            Err(RateError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn inconsistent_grid_rejected() {
        let grid = CorrelationGrid {
            dt: 0.1,
            k: vec![Complex64::new(0.1, 0.0); 4],
            d: vec![Complex64::new(1.0, 0.0); 4],
            f: vec![Complex64::default(); 4],
            lambda: 0.0,
            route: Route::Discrete,
        };
        assert!(matches!(
            PreparedRate::from_grid(grid, 1.0, &RateOptions::default()),
            Err(RateError::InconsistentGrid(_))
        ));
    }

    #[test]
    fn kappa_scaling() {
        assert!((kappa(2.0, 1.0, PI) - 2.0).abs() < 1e-15);
    }
}
