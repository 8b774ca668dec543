//! Dilated anchor rings `δ_a(T_{1,1/√2})`: the explicit integrand, the
//! reduced energy integral, its `a⁴` growth, and the limiting integrals.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chart::{make_family_chart, Background, Family};
use crate::error::{Error, Result};
use crate::geometry::{geometry_at, Depth};
use crate::quadrature::{composite_gauss_legendre, pairwise_sum};

/// Tube radius of the dilated ring (core radius 1).
pub const DILATED_R: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One monomial `c s^i a^j` of `p(a, s)`; `c = num/den`, times `√2` when `root2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    pub a_pow: u32,
    pub s_pow: u32,
    pub num: i64,
    pub den: i64,
    pub root2: bool,
}

const fn m(a_pow: u32, s_pow: u32, num: i64, den: i64, root2: bool) -> Monomial {
    Monomial { a_pow, s_pow, num, den, root2 }
}

/// Coefficients of `p(a, s)`, grouped by the power of `a`.
pub const P_TABLE: &[Monomial] = &[
    m(16, 12, 4, 1, false),
    //
    m(14, 12, -24, 1, false),
    m(14, 11, -24, 1, true),
    m(14, 10, -24, 1, false),
    m(14, 9, -24, 1, true),
    //
    m(12, 12, 54, 1, false),
    m(12, 11, 92, 1, true),
    m(12, 10, -16, 1, false),
    m(12, 9, -128, 1, true),
    m(12, 8, -218, 1, false),
    m(12, 7, -172, 1, true),
    m(12, 6, -132, 1, false),
    //
    m(10, 12, -50, 1, false),
    m(10, 11, -106, 1, true),
    m(10, 10, 226, 1, false),
    m(10, 9, 502, 1, true),
    m(10, 8, 246, 1, false),
    m(10, 7, -162, 1, true),
    m(10, 6, -234, 1, false),
    m(10, 5, -286, 1, true),
    m(10, 4, -380, 1, false),
    m(10, 3, -188, 1, true),
    m(10, 2, -144, 1, false),
    //
    m(8, 12, 9, 4, false),
    m(8, 11, -7, 1, true),
    m(8, 10, -354, 1, false),
    m(8, 9, -440, 1, true),
    m(8, 8, 541, 2, false),
    m(8, 7, 632, 1, true),
    m(8, 6, 25, 1, false),
    m(8, 5, -350, 1, true),
    m(8, 4, -847, 4, false),
    m(8, 3, 95, 1, true),
    m(8, 2, 327, 1, false),
    m(8, 1, 118, 1, true),
    m(8, 0, 9, 1, false),
    //
    m(6, 12, 27, 1, false),
    m(6, 11, 88, 1, true),
    m(6, 10, 208, 1, false),
    m(6, 9, -34, 1, true),
    m(6, 8, -478, 1, false),
    m(6, 7, -42, 1, true),
    m(6, 6, 816, 1, false),
    m(6, 5, 398, 1, true),
    m(6, 4, -241, 1, false),
    m(6, 3, -302, 1, true),
    m(6, 2, -304, 1, false),
    m(6, 1, -108, 1, true),
    m(6, 0, -28, 1, false),
    //
    m(4, 12, -25, 2, false),
    m(4, 11, -38, 1, true),
    m(4, 10, -16, 1, false),
    m(4, 9, 146, 1, true),
    m(4, 8, 165, 1, false),
    m(4, 7, -322, 1, true),
    m(4, 6, -570, 1, false),
    m(4, 5, 254, 1, true),
    m(4, 4, 1523, 2, false),
    m(4, 3, 64, 1, true),
    m(4, 2, -318, 1, false),
    m(4, 1, -104, 1, true),
    m(4, 0, -10, 1, false),
    //
    m(2, 12, -3, 1, false),
    m(2, 11, -14, 1, true),
    m(2, 10, -42, 1, false),
    m(2, 9, -4, 1, true),
    m(2, 8, 100, 1, false),
    m(2, 7, 84, 1, true),
    m(2, 6, -22, 1, false),
    m(2, 5, -88, 1, true),
    m(2, 4, -69, 1, false),
    m(2, 3, 10, 1, true),
    m(2, 2, 32, 1, false),
    m(2, 1, 12, 1, true),
    m(2, 0, 4, 1, false),
    //
    m(0, 12, 9, 4, false),
    m(0, 11, 9, 1, true),
    m(0, 10, 18, 1, false),
    m(0, 9, -18, 1, true),
    m(0, 8, -171, 2, false),
    m(0, 7, -18, 1, true),
    m(0, 6, 117, 1, false),
    m(0, 5, 72, 1, true),
    m(0, 4, -207, 4, false),
    m(0, 3, -63, 1, true),
    m(0, 2, -9, 1, false),
    m(0, 1, 18, 1, true),
    m(0, 0, 9, 1, false),
];

impl Monomial {
    pub fn coefficient(&self) -> f64 {
        let c = self.num as f64 / self.den as f64;
        if self.root2 {
            c * SQRT_2
        } else {
            c
        }
    }
}

/// `p(a, s)` by Horner in `s` for each power of `a`, then in `a`.
pub fn p_poly(a: f64, s: f64) -> f64 {
    let mut by_a = [[0.0f64; 13]; 17];
    for t in P_TABLE {
        by_a[t.a_pow as usize][t.s_pow as usize] += t.coefficient();
    }
    let in_s: Vec<f64> = by_a.iter().map(|cs| cs.iter().rev().fold(0.0, |acc, c| acc * s + c)).collect();
    in_s.iter().rev().fold(0.0, |acc, c| acc * a + c)
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("dilation factor must be positive, got {a}")))
    }
}

/// `I(s) = −p(a,s) / (8a³ (1 + s/√2)² (1 + (a²−1)s²)^{11/2})`.
pub fn dilated_integrand_i(a: f64, s: f64) -> Result<f64> {
    check_a(a)?;
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s must lie in [-1, 1], got {s}")));
    }
    Ok(-p_poly(a, s) / (8.0 * a.powi(3) * (1.0 + s / SQRT_2).powi(2) * (1.0 + (a * a - 1.0) * s * s).powf(5.5)))
}

/// Panels on `[−1, 1]` refined geometrically towards `s = 0` on the scale `1/a`.
fn clustered_breaks(a: f64) -> Vec<f64> {
    let mut pos = vec![0.0];
    let mut h = (0.25 / a).min(0.25);
    while h < 1.0 {
        pos.push(h);
        h *= 2.0;
    }
    pos.push(1.0);
    let mut breaks: Vec<f64> = pos.iter().skip(1).rev().map(|x| -x).collect();
    breaks.extend(pos);
    breaks
}

/// `∫_{−1}^{1} f` by Gauss–Legendre with `n` points per clustered panel.
fn integrate_s(a: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = composite_gauss_legendre(&clustered_breaks(a), n);
    pairwise_sum(&rule.iter().map(|&(s, w)| w * f(s)).collect::<Vec<_>>())
}

/// `Ē(δ_a(T_{1,1/√2})) = 8π² ∫ I(s) ds`.
pub fn dilated_energy_closed(a: f64, resolution: usize) -> Result<f64> {
    check_a(a)?;
    if resolution < 2 {
        return Err(Error::Config("resolution must be at least 2".into()));
    }
    Ok(8.0 * PI * PI * integrate_s(a, resolution, |s| dilated_integrand_i(a, s).expect("s in range")))
}

/// Integrand of `I` recomputed from the chart geometry:
/// `128 · a⁽⁴⁾ · √det g / (sin φ₁ sin φ₂)` at `φ₂ = arccos s`.
pub fn dilated_integrand_geometric(a: f64, s: f64) -> Result<f64> {
    check_a(a)?;
    let chart = make_family_chart(Family::DilatedAnchor { big_r: 1.0, r: DILATED_R, a })?;
    let phi1 = 1.1;
    let phi2 = s.acos();
    let u = [phi1, 0.3, phi2, 0.7];
    let g = geometry_at(&chart, Background::Euclidean(5), &u, Depth::Gradient)?;
    let d = crate::energy::energy_density(&g, Background::Euclidean(5), 4)?;
    Ok(128.0 * d * g.sqrt_det_g / (phi1.sin() * phi2.sin()))
}

/// Largest relative deviation between the transcribed and geometric integrands.
pub fn transcription_residual(a_values: &[f64], s_values: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &a in a_values {
        for &s in s_values {
            let t = dilated_integrand_i(a, s)?;
            let g = dilated_integrand_geometric(a, s)?;
            worst = worst.max((t - g).abs() / g.abs().max(1e-300));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationScan {
    pub a: Vec<f64>,
    pub ebar: Vec<f64>,
    /// Extrapolated `lim Ē(a)/a⁴`.
    pub coefficient: f64,
    pub target: f64,
}

/// Target `256π²/35` of the `a⁴` law.
pub fn leading_coefficient_target() -> f64 {
    256.0 * PI * PI / 35.0
}

/// Least-squares fit of `Ē(a)/a⁴ = c₀ + c₁/a + …` (up to `1/a²`), returning `c₀`.
pub fn asymptotic_fit(a_list: &[f64]) -> Result<DilationScan> {
    if a_list.len() < 3 || a_list.windows(2).any(|w| w[1] <= w[0]) || a_list[0] < 10.0 {
        return Err(Error::Config("need at least 3 increasing dilation factors, all >= 10".into()));
    }
    let ebar: Vec<f64> = a_list.iter().map(|&a| dilated_energy_closed(a, 24)).collect::<Result<_>>()?;
    let y = DVector::from_iterator(a_list.len(), a_list.iter().zip(&ebar).map(|(a, e)| e / a.powi(4)));
    let cols = if a_list.len() >= 4 { 3 } else { 2 };
    let x = DMatrix::from_fn(a_list.len(), cols, |i, j| a_list[i].powi(-(j as i32)));
    let sol = x
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Config(format!("least-squares fit failed: {e}")))?;
    Ok(DilationScan { a: a_list.to_vec(), ebar, coefficient: sol[0], target: leading_coefficient_target() })
}

/// `Γ(n/2)` for positive integers `n`.
fn gamma_half(n: u32) -> f64 {
    let (mut g, mut k) = if n % 2 == 0 { (1.0, 2) } else { (PI.sqrt(), 1) };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaIntegral {
    pub i: u32,
    pub j: u32,
    pub a: f64,
    pub value: f64,
    /// `∫ tⁱ (1 + t²)^{−11/2} dt` when `j − i = 1` and `i < 10`; `0` when `j − i < 1`, `j < 11`.
    pub limit: Option<f64>,
}

/// `𝕀_{i,j}(a) = ∫_{−1}^{1} a^j s^i ds / ((1 + s/√2)² (1 + (a²−1)s²)^{11/2})`.
pub fn lemma_integral(i: u32, j: u32, a: f64) -> Result<LemmaIntegral> {
    check_a(a)?;
    let value = integrate_s(a, 24, |s| {
        a.powi(j as i32) * s.powi(i as i32) / ((1.0 + s / SQRT_2).powi(2) * (1.0 + (a * a - 1.0) * s * s).powf(5.5))
    });
    let limit = if j == i + 1 && i < 10 {
        Some(if i % 2 == 1 { 0.0 } else { gamma_half(i + 1) * gamma_half(10 - i) / gamma_half(11) })
    } else if j <= i && j < 11 {
        Some(0.0)
    } else {
        None
    };
    Ok(LemmaIntegral { i, j, a, value, limit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_at_origin_and_unit_dilation() {
        assert_eq!(p_poly(1.0, 0.0), -16.0);
        assert!((dilated_integrand_i(1.0, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((dilated_integrand_geometric(1.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn table_has_documented_shape() {
        assert!(P_TABLE.iter().all(|t| t.a_pow as i64 - t.s_pow as i64 <= 8));
        let top: Vec<_> = P_TABLE.iter().filter(|t| t.a_pow as i64 - t.s_pow as i64 == 8).collect();
        assert_eq!(top.len(), 2);
        assert!(top.iter().any(|t| t.a_pow == 8 && t.s_pow == 0 && t.num == 9));
        assert!(top.iter().any(|t| t.a_pow == 10 && t.s_pow == 2 && t.num == -144));
    }

    #[test]
    fn unit_dilation_energy() {
        let e = dilated_energy_closed(1.0, 24).unwrap();
        assert!((e / (192.0 * PI * PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrand_matches_geometry_on_a_grid() {
        let a: Vec<f64> = (0..5).map(|i| 0.3 * 3f64.powi(i)).collect();
        let s: Vec<f64> = (0..5).map(|i| -0.9 + 0.45 * i as f64).collect();
        assert!(transcription_residual(&a, &s).unwrap() < 1e-10);
    }

    #[test]
    fn lemma_limits() {
        let l = lemma_integral(0, 1, 1e4).unwrap();
        assert!((l.limit.unwrap() - 256.0 / 315.0).abs() < 1e-15);
        assert!((l.value - 256.0 / 315.0).abs() < 1e-3);
        let l = lemma_integral(2, 3, 1e4).unwrap();
        assert!((l.limit.unwrap() - 32.0 / 315.0).abs() < 1e-15);
        assert!((l.value - 32.0 / 315.0).abs() < 1e-3);
        let l = lemma_integral(4, 4, 1e4).unwrap();
        assert_eq!(l.limit, Some(0.0));
        assert!(l.value.abs() < 1e-3);
        assert_eq!(lemma_integral(12, 13, 10.0).unwrap().limit, None);
        let combo = -PI * PI * (9.0 * 256.0 / 315.0 - 144.0 * 32.0 / 315.0);
        assert!((combo - leading_coefficient_target()).abs() < 1e-12);
    }

    #[test]
    fn fit_reaches_leading_coefficient() {
        let scan = asymptotic_fit(&[20.0, 40.0, 80.0, 160.0]).unwrap();
        assert!((scan.coefficient / scan.target - 1.0).abs() < 0.01, "{}", scan.coefficient);
        assert!(scan.ebar.windows(2).all(|w| w[1] > w[0]));
        let coarse = asymptotic_fit(&[10.0, 20.0, 40.0]).unwrap();
        assert!(coarse.coefficient > 0.0);
        assert!((coarse.coefficient / coarse.target - 1.0).abs() < 0.05);
        let e40 = dilated_energy_closed(40.0, 24).unwrap();
        assert!((e40 / (leading_coefficient_target() * 40f64.powi(4)) - 1.0).abs() < 0.05);
    }

    #[test]
    fn integrand_finite_at_endpoints() {
        for a in [0.05, 0.5, 1.0, 7.0, 300.0] {
            assert!(dilated_integrand_i(a, -1.0).unwrap().is_finite());
            assert!(dilated_integrand_i(a, 1.0).unwrap().is_finite());
        }
        assert!(dilated_integrand_i(1.0, 1.5).is_err());
        assert!(dilated_integrand_i(0.0, 0.5).is_err());
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(asymptotic_fit(&[20.0, 40.0]).is_err());
        assert!(asymptotic_fit(&[5.0, 40.0, 80.0]).is_err());
        assert!(asymptotic_fit(&[40.0, 20.0, 80.0]).is_err());
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half(10), 24.0);
        assert!((gamma_half(11) - 945.0 / 32.0 * PI.sqrt()).abs() < 1e-12);
    }
}
