use std::f64::consts::PI;

use goldenrate::correlations::{build_grid, CorrelationModel, DiscreteModel, GridSpec, QuadratureModel, QuadratureOptions};
use goldenrate::fock_oracle::{sos_rate_with, LineShape};
use goldenrate::mode_data::modes_to_spectral;
use goldenrate::quadrature::PanelScheme;
use goldenrate::rate_engine::PreparedRate;
use goldenrate::{Mode, ModeSet, RateOptions, ThermalState};

/// Undamped two-mode integrand times e^{−η|t|} against a Lorentzian sum over
/// eigenstates. Both sides are the same quantity, so this pins the rate
/// formula, including the sign of the cross term, to the Fock-space result.
#[test]
fn damped_time_domain_equals_lorentzian_sum_over_states() {
    let thermal = ThermalState::from_beta(1.0).unwrap();
    let eta = 0.1;
    let dt = 0.01;
    for sign in [1.0, -1.0] {
        let modes = vec![Mode::new(1.0, 0.8, 0.5), Mode::new(2.5, 0.3, sign * 0.2)];
        let model = DiscreteModel::new(ModeSet::new(modes.clone()).unwrap(), thermal).unwrap();
        let n = (40.0 / eta / dt) as usize;
        let grid = build_grid(&model, GridSpec::new(dt, n)).unwrap();
        let p = PreparedRate::from_grid(grid, 2.5, &RateOptions::default()).unwrap();
        for gap in [-1.0, 0.0, 2.0, 4.0, 6.0] {
            let g = p.integrand(gap);
            let mid = (g.len() - 1) / 2;
            let td: f64 = g
                .iter()
                .enumerate()
                .map(|(k, z)| {
                    let t = (k as f64 - mid as f64) * dt;
                    z.re * (-eta * t.abs()).exp()
                })
                .sum::<f64>()
                * dt;
            let sos = sos_rate_with(&modes, &thermal, gap, LineShape::Lorentzian { hwhm: eta }, None).unwrap();
            assert!((sos / td - 1.0).abs() < 1e-4, "sign {sign}, gap {gap}: {td} vs {sos}");
        }
    }
}

fn bo_deviation(ratio: f64) -> f64 {
    let thermal = ThermalState::from_beta(1.0).unwrap();
    let set = ModeSet::new(vec![Mode::new(1.0, 0.5, 0.5)]).unwrap();
    let discrete = DiscreteModel::new(set.clone(), thermal).unwrap();
    let opts = QuadratureOptions {
        scheme: PanelScheme::covering(ratio / 40.0, 40.0),
        ..Default::default()
    };
    let broadened = QuadratureModel::new(modes_to_spectral(&set, ratio), thermal, opts).unwrap();
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for i in 0..64 {
        let t = 2.0 * PI * i as f64 / 63.0;
        let (a, b) = (broadened.sample(t), discrete.sample(t));
        num = num.max((a.k - b.k).norm());
        den = den.max(b.k.norm());
    }
    num / den
}

/// The broadened peak approaches the discrete mode linearly in γ over one
/// period.
#[test]
fn bo_peak_converges_to_discrete_mode_at_first_order() {
    let (a, b) = (bo_deviation(2e-2), bo_deviation(1e-2));
    let order = (a / b).log2();
    assert!((0.85..=1.15).contains(&order), "order {order} ({a}, {b})");
}
