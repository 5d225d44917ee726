//! Brute-force checks in a truncated Fock space.
//!
//! For one displaced oscillator, H = ω(b†b + ½), B = ωg(b + b†) and
//! p = i√(ω/2)(b† − b). The traces
//!
//! ```text
//! C(t)     = Tr{e^{it(H+B)} e^{−itH} ρ}
//! C_p1(t)  = Tr{e^{it(H+B)} p e^{−itH} ρ}
//! C_p2(t)  = Tr{p e^{it(H+B)} e^{−itH} ρ}
//! C_pp(t)  = Tr{e^{it(H+B)} p e^{−itH} ρ p}
//! ```
//!
//! are evaluated from a dense eigendecomposition of H + B and compared with
//! their closed forms in K_g(t) = g²[coth(βω/2)(1 − cos ωt) − i sin ωt].
//! [`sos_rate`] sums golden-rule transition probabilities over eigenstates of
//! one or two modes.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mode_data::Mode;
use crate::spectral_density::{bo_normalization, bo_profile_with_norm};
use crate::units::{CothMode, ThermalState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("truncation at N = {n} not converged: N → N+10 changed the result by {drift:.3e}")]
    Truncation { n: usize, drift: f64 },
    #[error("sum over states supports 1 or 2 modes, got {0}")]
    TooManyModes(usize),
    #[error("invalid oscillator: {0}")]
    Invalid(String),
}

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Level count for which thermal occupation of the top level is below 1e-12,
/// with room for the displacement.
pub fn suggested_levels(omega: f64, g: f64, thermal: &ThermalState) -> usize {
    let thermal_levels = match thermal.beta() {
        Some(beta) => (27.7 / (beta * omega)).ceil() as usize + 1,
        None => 1,
    };
    let c = thermal.coth(omega, CothMode::Exact);
    thermal_levels + (4.0 * g * g * c).ceil() as usize + 30
}

/// One oscillator truncated to N levels.
#[derive(Debug, Clone)]
pub struct TruncatedOscillator {
    pub n_levels: usize,
    pub omega: f64,
    pub g: f64,
    /// b (real).
    pub b: DMatrix<f64>,
    /// p = i√(ω/2)(b† − b).
    pub p: DMatrix<Complex64>,
    /// Diagonal of H = ω(n + ½).
    pub h_diag: DVector<f64>,
    /// Eigenvalues of H + B.
    pub eigenvalues: DVector<f64>,
    /// Columns are eigenvectors of H + B in the number basis.
    pub eigenvectors: DMatrix<f64>,
}

impl TruncatedOscillator {
    pub fn new(n_levels: usize, omega: f64, g: f64) -> Result<Self, OracleError> {
        if n_levels < 2 || !(omega > 0.0) || !g.is_finite() {
            return Err(OracleError::Invalid(format!(
                "need N ≥ 2, ω > 0, finite g (N = {n_levels}, ω = {omega}, g = {g})"
            )));
        }
        let n = n_levels;
        let mut b = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            b[(k - 1, k)] = (k as f64).sqrt();
        }
        let bd = b.transpose();
        let amp = (0.5 * omega).sqrt();
        let p = (&bd - &b).map(|x| I * amp * x);
        let h_diag = DVector::from_fn(n, |k, _| omega * (k as f64 + 0.5));
        let hb = DMatrix::from_diagonal(&h_diag) + (&b + &bd) * (omega * g);
        let eig = SymmetricEigen::new(hb);
        Ok(Self {
            n_levels: n,
            omega,
            g,
            b,
            p,
            h_diag,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    /// Thermal populations of H (normalized over the truncated space).
    pub fn populations(&self, thermal: &ThermalState) -> DVector<f64> {
        let n = self.n_levels;
        let mut rho = match thermal.beta() {
            Some(beta) => DVector::from_fn(n, |k, _| (-beta * self.omega * k as f64).exp()),
            None => DVector::from_fn(n, |k, _| if k == 0 { 1.0 } else { 0.0 }),
        };
        let z = rho.sum();
        rho /= z;
        rho
    }

    /// e^{it(H+B)}.
    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let v = self.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let phases = DVector::from_iterator(
            self.n_levels,
            self.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, e * t)),
        );
        let mut vd = v.clone();
        for (j, mut col) in vd.column_iter_mut().enumerate() {
            col *= phases[j];
        }
        vd * v.transpose()
    }

    fn free_phases(&self, t: f64) -> DVector<Complex64> {
        self.h_diag.map(|e| Complex64::from_polar(1.0, -e * t))
    }

    /// (C, C_p1, C_p2, C_pp) at time t.
    pub fn traces(&self, thermal: &ThermalState, t: f64) -> OracleTraces {
        let u = self.propagator(t);
        let rho = self.populations(thermal);
        let ph = self.free_phases(t);
        let up = &u * &self.p;
        let pu = &self.p * &u;
        let n = self.n_levels;
        let mut c = Complex64::default();
        let mut cp1 = Complex64::default();
        let mut cp2 = Complex64::default();
        let mut cpp = Complex64::default();
        for m in 0..n {
            let w = ph[m] * rho[m];
            c += u[(m, m)] * w;
            cp1 += up[(m, m)] * w;
            cp2 += pu[(m, m)] * w;
            for k in 0..n {
                // (U p)_{km} e^{−iε_m t} ρ_m p_{mk}
                cpp += up[(k, m)] * w * self.p[(m, k)];
            }
        }
        OracleTraces { c, cp1, cp2, cpp }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTraces {
    pub c: Complex64,
    pub cp1: Complex64,
    pub cp2: Complex64,
    pub cpp: Complex64,
}

impl OracleTraces {
    pub fn max_abs_diff(&self, o: &OracleTraces) -> f64 {
        [
            (self.c - o.c).norm(),
            (self.cp1 - o.cp1).norm(),
            (self.cp2 - o.cp2).norm(),
            (self.cpp - o.cpp).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn diffs(&self, o: &OracleTraces) -> [f64; 4] {
        [
            (self.c - o.c).norm(),
            (self.cp1 - o.cp1).norm(),
            (self.cp2 - o.cp2).norm(),
            (self.cpp - o.cpp).norm(),
        ]
    }
}

/// Closed forms of the four traces.
pub fn closed_form_traces(omega: f64, g: f64, thermal: &ThermalState, t: f64) -> OracleTraces {
    let c = thermal.coth(omega, CothMode::Exact);
    let (s, co) = (omega * t).sin_cos();
    let omc = 2.0 * (0.5 * omega * t).sin().powi(2);
    // K_g/g, finite as g → 0
    let kg_over_g = Complex64::new(g * c * omc, -g * s);
    let kg = kg_over_g * g;
    let lambda = omega * g * g;
    let e = (-kg - I * lambda * t).exp();
    let amp = (0.5 * omega).sqrt();
    OracleTraces {
        c: e,
        cp1: -I * amp * kg_over_g * e,
        cp2: I * amp * kg_over_g * e,
        cpp: 0.5 * omega * (Complex64::new(c * co, s) + kg_over_g * kg_over_g) * e,
    }
}

pub fn trace_c(osc: &TruncatedOscillator, thermal: &ThermalState, t: f64) -> Complex64 {
    osc.traces(thermal, t).c
}

pub fn trace_cp1(osc: &TruncatedOscillator, thermal: &ThermalState, t: f64) -> Complex64 {
    osc.traces(thermal, t).cp1
}

pub fn trace_cp2(osc: &TruncatedOscillator, thermal: &ThermalState, t: f64) -> Complex64 {
    osc.traces(thermal, t).cp2
}

pub fn trace_cpp(osc: &TruncatedOscillator, thermal: &ThermalState, t: f64) -> Complex64 {
    osc.traces(thermal, t).cpp
}

/// Traces at N and N + 10 levels; fails if they drift apart by more than
/// `drift_tol`.
pub fn converged_traces(
    omega: f64,
    g: f64,
    thermal: &ThermalState,
    times: &[f64],
    drift_tol: f64,
) -> Result<Vec<OracleTraces>, OracleError> {
    let n = suggested_levels(omega, g, thermal);
    let a = TruncatedOscillator::new(n, omega, g)?;
    let b = TruncatedOscillator::new(n + 10, omega, g)?;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let ta = a.traces(thermal, t);
        let tb = b.traces(thermal, t);
        let drift = ta.max_abs_diff(&tb);
        if drift > drift_tol {
            return Err(OracleError::Truncation { n, drift });
        }
        out.push(tb);
    }
    Ok(out)
}

/// One row of an oracle sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub g: f64,
    /// βω, infinite at zero temperature.
    pub beta_omega: f64,
    pub omega_t: f64,
    /// |numeric − closed form| for C, C_p1, C_p2, C_pp.
    pub deviation: [f64; 4],
}

/// Compares numeric and closed-form traces over a parameter grid (ω = 1).
/// `beta_omega = ∞` selects zero temperature.
pub fn oracle_sweep(
    gs: &[f64],
    beta_omegas: &[f64],
    omega_ts: &[f64],
) -> Result<Vec<OracleRow>, OracleError> {
    let omega = 1.0;
    let jobs: Vec<(f64, f64)> = gs
        .iter()
        .flat_map(|&g| beta_omegas.iter().map(move |&b| (g, b)))
        .collect();
    let rows: Result<Vec<Vec<OracleRow>>, OracleError> = jobs
        .par_iter()
        .map(|&(g, bw)| {
            let thermal = if bw.is_infinite() {
                ThermalState::Zero
            } else {
                ThermalState::from_beta(bw / omega)
                    .map_err(|e| OracleError::Invalid(e.to_string()))?
            };
            let times: Vec<f64> = omega_ts.iter().map(|x| x / omega).collect();
            let numeric = converged_traces(omega, g, &thermal, &times, 1e-9)?;
            Ok(times
                .iter()
                .zip(numeric)
                .map(|(&t, num)| OracleRow {
                    g,
                    beta_omega: bw,
                    omega_t: omega * t,
                    deviation: num.diffs(&closed_form_traces(omega, g, &thermal, t)),
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Line profile used by the sum over states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LineShape {
    /// Normalized Brownian-oscillator profile centered at the transition
    /// energy; lines at non-positive transition energy are dropped.
    BrownianOscillator { gamma: f64 },
    /// As above with friction `ratio`·(transition energy) for each line.
    BrownianOscillatorRelative { ratio: f64 },
    /// (η/π)/((Δ − Δ_line)² + η²). Exactly what an e^{−η|t|} damping of the
    /// undamped time-domain integrand produces.
    Lorentzian { hwhm: f64 },
}

impl LineShape {
    fn width(&self) -> f64 {
        match *self {
            LineShape::BrownianOscillator { gamma } => gamma,
            LineShape::BrownianOscillatorRelative { ratio } => ratio,
            LineShape::Lorentzian { hwhm } => hwhm,
        }
    }
}

/// Golden-rule sum over states for one or two modes:
///
/// ```text
/// k = 2π Σ_i p_i Σ_f |⟨f| Σ_j f_j p_j |i⟩|² L(Δ; ε_f − e_i)
/// ```
///
/// |i⟩ are number states of the initial surface and |f⟩ eigenstates of the
/// displaced final surface. Here L is the Brownian-oscillator profile with
/// friction `gamma`, centered at each transition energy.
pub fn sos_rate(
    modes: &[Mode],
    thermal: &ThermalState,
    gap: f64,
    gamma: f64,
) -> Result<f64, OracleError> {
    sos_rate_with(modes, thermal, gap, LineShape::BrownianOscillator { gamma }, None)
}

/// [`sos_rate`] with a chosen line shape and optional level counts per mode.
pub fn sos_rate_with(
    modes: &[Mode],
    thermal: &ThermalState,
    gap: f64,
    shape: LineShape,
    levels: Option<&[usize]>,
) -> Result<f64, OracleError> {
    if modes.is_empty() || modes.len() > 2 {
        return Err(OracleError::TooManyModes(modes.len()));
    }
    if !(shape.width() > 0.0) {
        return Err(OracleError::Invalid("sum over states needs a positive line width".into()));
    }
    let oscs: Vec<TruncatedOscillator> = modes
        .iter()
        .enumerate()
        .map(|(j, m)| {
            let n = levels
                .and_then(|l| l.get(j).copied())
                .unwrap_or_else(|| suggested_levels(m.omega, m.g, thermal).max(40));
            TruncatedOscillator::new(n, m.omega, m.g)
        })
        .collect::<Result<_, _>>()?;

    // ⟨f|i⟩ and ⟨f|p|i⟩ per mode; p is imaginary, so ⟨f|p|i⟩ = i·q.
    let overlaps: Vec<DMatrix<f64>> = oscs.iter().map(|o| o.eigenvectors.transpose()).collect();
    let moments: Vec<DMatrix<f64>> = oscs
        .iter()
        .map(|o| {
            let p_im = o.p.map(|z| z.im);
            o.eigenvectors.transpose() * p_im
        })
        .collect();
    let pops: Vec<DVector<f64>> = oscs.iter().map(|o| o.populations(thermal)).collect();

    let profile = |line: f64| match shape {
        LineShape::BrownianOscillator { gamma } => {
            if line <= 0.0 {
                0.0
            } else {
                bo_profile_with_norm(gap, line, gamma, bo_normalization(line, gamma))
            }
        }
        LineShape::BrownianOscillatorRelative { ratio } => {
            if line <= 0.0 {
                0.0
            } else {
                let gamma = ratio * line;
                bo_profile_with_norm(gap, line, gamma, bo_normalization(line, gamma))
            }
        }
        LineShape::Lorentzian { hwhm } => {
            let x = gap - line;
            hwhm / (std::f64::consts::PI * (x * x + hwhm * hwhm))
        }
    };

    const POP_CUT: f64 = 1e-16;
    let total = if modes.len() == 1 {
        let (o, q, p) = (&oscs[0], &moments[0], &pops[0]);
        let f = modes[0].f;
        let mut acc = 0.0;
        for i in 0..o.n_levels {
            if p[i] < POP_CUT {
                continue;
            }
            for k in 0..o.n_levels {
                let amp = f * q[(k, i)];
                let line = o.eigenvalues[k] - o.h_diag[i];
                acc += p[i] * amp * amp * profile(line);
            }
        }
        acc
    } else {
        let (o1, o2) = (&oscs[0], &oscs[1]);
        let (f1, f2) = (modes[0].f, modes[1].f);
        let rows: Vec<f64> = (0..o1.n_levels)
            .into_par_iter()
            .map(|i1| {
                let mut acc = 0.0;
                if pops[0][i1] < POP_CUT {
                    return acc;
                }
                for i2 in 0..o2.n_levels {
                    let pi = pops[0][i1] * pops[1][i2];
                    if pi < POP_CUT {
                        continue;
                    }
                    let e_i = o1.h_diag[i1] + o2.h_diag[i2];
                    for k1 in 0..o1.n_levels {
                        let a1 = f1 * moments[0][(k1, i1)];
                        let s1 = overlaps[0][(k1, i1)];
                        for k2 in 0..o2.n_levels {
                            let amp = a1 * overlaps[1][(k2, i2)] + s1 * f2 * moments[1][(k2, i2)];
                            let line = o1.eigenvalues[k1] + o2.eigenvalues[k2] - e_i;
                            acc += pi * amp * amp * profile(line);
                        }
                    }
                }
                acc
            })
            .collect();
        rows.iter().sum()
    };
    Ok(2.0 * std::f64::consts::PI * total)
}
