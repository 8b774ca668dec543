use std::f64::consts::PI;

use willmore_core::asymptotics::{dilated_energy_closed, leading_coefficient_target, DILATED_R};
use willmore_core::energy::ebar;
use willmore_core::{make_family_chart, Family};

fn chart_ebar(a: f64, res: usize) -> f64 {
    let c = make_family_chart(Family::DilatedAnchor { big_r: 1.0, r: DILATED_R, a }).unwrap();
    ebar(&c, c.natural_background(), res).unwrap()
}

#[test]
fn one_dimensional_integral_matches_four_dimensional_quadrature() {
    // The profile sharpens with `a`, so the tensor grid needs more nodes.
    for (a, res) in [(1.0, 32), (2.0, 32), (5.0, 64)] {
        let closed = dilated_energy_closed(a, 64).unwrap();
        let quad = chart_ebar(a, res);
        assert!((quad - closed).abs() <= 1e-5 * closed.abs(), "a = {a}: {quad} vs {closed}");
    }
}

#[test]
fn growth_is_quartic_with_target_coefficient() {
    let target = leading_coefficient_target();
    assert!((target - 256.0 * PI * PI / 35.0).abs() < 1e-12);
    let ratio = dilated_energy_closed(400.0, 64).unwrap() / 400f64.powi(4);
    assert!((ratio / target - 1.0).abs() < 5e-3, "{ratio}");
}
