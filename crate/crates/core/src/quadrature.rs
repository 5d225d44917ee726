//! Oscillatory panel quadrature over frequency and trapezoidal integration
//! over time.
//!
//! On a panel [ω₁, ω₂] the smooth factor f is replaced by its linear
//! interpolant and the products with (1 − cos ωt) and sin ωt are integrated
//! exactly. Summed over a uniform grid the endpoint terms telescope, so a
//! composite sum needs one complex rotation per panel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::constants::CM_INV_TO_RAD_PER_PS;

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierComplex {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierComplex {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Uniform panels [nδω, (n+1)δω], n = 0..M−1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelScheme {
    pub delta_omega: f64,
    pub n_panels: usize,
}

impl Default for PanelScheme {
    /// δν̃ = 0.1 cm⁻¹ and M = 50 000, i.e. up to 5000 cm⁻¹.
    fn default() -> Self {
        Self {
            delta_omega: 0.1 * CM_INV_TO_RAD_PER_PS,
            n_panels: 50_000,
        }
    }
}

impl PanelScheme {
    pub fn new(delta_omega: f64, n_panels: usize) -> Self {
        Self {
            delta_omega,
            n_panels,
        }
    }

    /// Panels of width `delta_omega` up to at least `omega_max`.
    pub fn covering(delta_omega: f64, omega_max: f64) -> Self {
        let n = (omega_max / delta_omega).ceil().max(1.0) as usize;
        Self::new(delta_omega, n)
    }

    pub fn omega_max(&self) -> f64 {
        self.delta_omega * self.n_panels as f64
    }

    /// Half the panel width over the same range.
    pub fn halved(&self) -> Self {
        Self::new(0.5 * self.delta_omega, 2 * self.n_panels)
    }

    /// The M + 1 nodes nδω.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_panels).map(move |n| n as f64 * self.delta_omega)
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.delta_omega > 0.0) || !self.delta_omega.is_finite() || self.n_panels == 0 {
            return Err(QuadratureError::InvalidScheme(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("invalid panel scheme {0:?}: need δω > 0 and at least one panel")]
    InvalidScheme(PanelScheme),
    #[error("integrand has not decayed at the end of the time grid (tail/peak = {tail:.3e}, tolerance {tolerance:.1e}); add bath broadening or a continuum")]
    NoDecay { tail: f64, tolerance: f64 },
    #[error("time integral needs an odd number (≥ 1) of samples on a symmetric grid, got {0}")]
    BadGrid(usize),
    #[error("panel sum not converged: halving δω changed the result by {change:.3e} (tolerance {tolerance:.1e})")]
    NotConverged { change: f64, tolerance: f64 },
}

const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Below this |ω₂t| the closed panel formulas lose digits to cancellation and
/// Gauss–Legendre on the (then very smooth) integrand takes over.
const SMALL_PANEL_ARG: f64 = 1e-3;

#[inline]
fn gl_panel(f1: f64, f2: f64, w1: f64, w2: f64, kernel: impl Fn(f64) -> f64) -> f64 {
    let half = 0.5 * (w2 - w1);
    let mid = 0.5 * (w1 + w2);
    let mut s = 0.0;
    for (x, w) in GL4_X.iter().zip(GL4_W) {
        let u = 0.5 * (1.0 + x);
        let fl = f1 + (f2 - f1) * u;
        s += w * fl * kernel(mid + half * x);
    }
    s * half
}

/// ∫_{ω₁}^{ω₂} f_lin(ω)(1 − cos ωt) dω.
pub fn panel_cos(f1: f64, f2: f64, omega1: f64, omega2: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if (omega2 * t).abs().max((omega1 * t).abs()) < SMALL_PANEL_ARG {
        return gl_panel(f1, f2, omega1, omega2, |w| {
            let s = (0.5 * w * t).sin();
            2.0 * s * s
        });
    }
    let dw = omega2 - omega1;
    let (s1, c1) = (omega1 * t).sin_cos();
    let (s2, c2) = (omega2 * t).sin_cos();
    dw * (f1 + f2) / 2.0 - (f2 * s2 - f1 * s1) / t - (c2 - c1) / (t * t) * (f2 - f1) / dw
}

/// ∫_{ω₁}^{ω₂} f_lin(ω) sin ωt dω.
pub fn panel_sin(f1: f64, f2: f64, omega1: f64, omega2: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    if (omega2 * t).abs().max((omega1 * t).abs()) < SMALL_PANEL_ARG {
        return gl_panel(f1, f2, omega1, omega2, |w| (w * t).sin());
    }
    let dw = omega2 - omega1;
    let (s1, c1) = (omega1 * t).sin_cos();
    let (s2, c2) = (omega2 * t).sin_cos();
    (f1 * c1 - f2 * c2) / t + (f2 - f1) / (t * t) * (s2 - s1) / dw
}

/// Below this Wt (W the top of the panel range) composite sums go panel by
/// panel with Gauss–Legendre instead of the telescoped form.
const SMALL_COMPOSITE_ARG: f64 = 1.0;

const RESEED: usize = 512;

/// Composite panel sums of several sampled integrands at one time.
///
/// `cos_sets[k]` are samples f(nδω), n = 0..=M, integrated against
/// (1 − cos ωt); `sin_sets[k]` against sin ωt. Results are written to the
/// output slices in the same order.
pub fn composite_many(
    cos_sets: &[&[f64]],
    sin_sets: &[&[f64]],
    delta_omega: f64,
    t: f64,
    out_cos: &mut [f64],
    out_sin: &mut [f64],
) {
    let m = cos_sets
        .iter()
        .chain(sin_sets)
        .map(|s| s.len())
        .next()
        .unwrap_or(0)
        .saturating_sub(1);
    debug_assert!(cos_sets.iter().chain(sin_sets).all(|s| s.len() == m + 1));
    if t == 0.0 || m == 0 {
        out_cos.iter_mut().for_each(|x| *x = 0.0);
        out_sin.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let top = delta_omega * m as f64;
    if (top * t).abs() < SMALL_COMPOSITE_ARG {
        for (k, f) in cos_sets.iter().enumerate() {
            let mut acc = Neumaier::default();
            for n in 0..m {
                let w1 = n as f64 * delta_omega;
                acc.add(gl_panel(f[n], f[n + 1], w1, w1 + delta_omega, |w| {
                    let s = (0.5 * w * t).sin();
                    2.0 * s * s
                }));
            }
            out_cos[k] = acc.value();
        }
        for (k, f) in sin_sets.iter().enumerate() {
            let mut acc = Neumaier::default();
            for n in 0..m {
                let w1 = n as f64 * delta_omega;
                acc.add(gl_panel(f[n], f[n + 1], w1, w1 + delta_omega, |w| (w * t).sin()));
            }
            out_sin[k] = acc.value();
        }
        return;
    }

    // Σ Δf_n·Im z_n and Σ Δf_n·Re z_n with z_n = e^{i(n+½)δω t}.
    let mut acc_c = vec![Neumaier::default(); cos_sets.len()];
    let mut acc_s = vec![Neumaier::default(); sin_sets.len()];
    let mut trap = vec![Neumaier::default(); cos_sets.len()];
    let rot = Complex64::from_polar(1.0, delta_omega * t);
    let mut z = Complex64::new(0.0, 0.0);
    for n in 0..m {
        if n % RESEED == 0 {
            z = Complex64::from_polar(1.0, (n as f64 + 0.5) * delta_omega * t);
        } else {
            z *= rot;
        }
        for (k, f) in cos_sets.iter().enumerate() {
            acc_c[k].add((f[n + 1] - f[n]) * z.im);
            trap[k].add(0.5 * (f[n] + f[n + 1]));
        }
        for (k, f) in sin_sets.iter().enumerate() {
            acc_s[k].add((f[n + 1] - f[n]) * z.re);
        }
    }
    let (s_top, c_top) = (top * t).sin_cos();
    let factor = 2.0 * (0.5 * delta_omega * t).sin() / (t * t * delta_omega);
    for (k, f) in cos_sets.iter().enumerate() {
        out_cos[k] = delta_omega * trap[k].value() - f[m] * s_top / t + factor * acc_c[k].value();
    }
    for (k, f) in sin_sets.iter().enumerate() {
        out_sin[k] = (f[0] - f[m] * c_top) / t + factor * acc_s[k].value();
    }
}

/// Σ_n F_c(t; nδω, (n+1)δω) for samples f(nδω), n = 0..=M.
pub fn composite_cos(samples: &[f64], delta_omega: f64, t: f64) -> f64 {
    let mut out = [0.0];
    composite_many(&[samples], &[], delta_omega, t, &mut out, &mut []);
    out[0]
}

/// Σ_n F_s(t; nδω, (n+1)δω) for samples f(nδω), n = 0..=M.
pub fn composite_sin(samples: &[f64], delta_omega: f64, t: f64) -> f64 {
    let mut out = [0.0];
    composite_many(&[], &[samples], delta_omega, t, &mut [], &mut out);
    out[0]
}

/// Trapezoid of the samples: ∫ f_lin dω over the whole panel range.
pub fn composite_plain(samples: &[f64], delta_omega: f64) -> f64 {
    let mut acc = Neumaier::default();
    for w in samples.windows(2) {
        acc.add(0.5 * (w[0] + w[1]));
    }
    acc.value() * delta_omega
}

/// Samples f on the scheme's nodes; f(0) is extrapolated linearly from the
/// next two nodes so that integrands with a removable singularity at ω = 0
/// need no special casing.
pub fn sample_on(scheme: &PanelScheme, f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    use rayon::prelude::*;
    let dw = scheme.delta_omega;
    let mut v: Vec<f64> = (0..=scheme.n_panels)
        .into_par_iter()
        .map(|n| if n == 0 { 0.0 } else { f(n as f64 * dw) })
        .collect();
    v[0] = if v.len() > 2 {
        2.0 * v[1] - v[2]
    } else {
        v.get(1).copied().unwrap_or(0.0)
    };
    v
}

/// Compares a composite panel sum with the same integrand on halved panels.
pub fn check_halving(
    f: impl Fn(f64) -> f64 + Sync,
    scheme: &PanelScheme,
    t: f64,
    kernel_is_cos: bool,
    tolerance: f64,
) -> Result<f64, QuadratureError> {
    let eval = |s: &PanelScheme| {
        let v = sample_on(s, &f);
        if kernel_is_cos {
            composite_cos(&v, s.delta_omega, t)
        } else {
            composite_sin(&v, s.delta_omega, t)
        }
    };
    let coarse = eval(scheme);
    let fine = eval(&scheme.halved());
    let change = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    if change > tolerance {
        return Err(QuadratureError::NotConverged { change, tolerance });
    }
    Ok(fine)
}

/// Result of a time integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeIntegral {
    pub value: Complex64,
    /// max(|G(±T)|) / max|G|.
    pub tail: f64,
}

/// Trapezoidal ∫_{−T}^{T} G dt for samples on the symmetric grid
/// t = −T, …, 0, …, T (odd length). Fails if the integrand has not decayed to
/// `tail_tol` relative to its peak at either end.
pub fn time_integral(
    samples: &[Complex64],
    dt: f64,
    tail_tol: f64,
) -> Result<TimeIntegral, QuadratureError> {
    let n = samples.len();
    if n == 0 || n.is_multiple_of(2) {
        return Err(QuadratureError::BadGrid(n));
    }
    if n == 1 {
        return Ok(TimeIntegral {
            value: Complex64::new(0.0, 0.0),
            tail: 0.0,
        });
    }
    let peak = samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tail = if peak > 0.0 {
        samples[0].norm().max(samples[n - 1].norm()) / peak
    } else {
        0.0
    };
    if tail > tail_tol {
        return Err(QuadratureError::NoDecay {
            tail,
            tolerance: tail_tol,
        });
    }
    let mut acc = NeumaierComplex::default();
    acc.add(0.5 * samples[0]);
    for z in &samples[1..n - 1] {
        acc.add(*z);
    }
    acc.add(0.5 * samples[n - 1]);
    Ok(TimeIntegral {
        value: acc.value() * dt,
        tail,
    })
}
