//! Energy densities, renormalized-area coefficients and their integrals.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Background, ImmersionChart};
use crate::error::{Error, Result};
use crate::geometry::{geometry_at, intrinsic_curvature, Depth, GeometryData};
use crate::quadrature::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub e: f64,
    /// `128 E`; only defined for `k = 4`.
    pub ebar: Option<f64>,
    pub area: f64,
    pub resolution: usize,
    /// `|value − value at half resolution|`, in the units of `ebar` (or `e` for `k = 2`).
    pub est_error: f64,
}

fn check_k(k: usize) -> Result<()> {
    if k == 2 || k == 4 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("energies are defined for k = 2 and k = 4, got {k}")))
    }
}

/// The integrand `a⁽ᵏ⁾` of `ℰ`.
pub fn energy_density(geom: &GeometryData, background: Background, k: usize) -> Result<f64> {
    check_k(k)?;
    if geom.k != k {
        return Err(Error::Unsupported(format!("geometry has k = {}, density requested for k = {k}", geom.k)));
    }
    let h2 = geom.h_norm2();
    if k == 2 {
        return Ok(-(h2 + 4.0 * background.schouten_trace(2)) / 8.0);
    }
    let grad = geom
        .grad_h_norm2()
        .ok_or(Error::UnsupportedOrder { requested: 3, max: 2 })?;
    let mut d = grad - geom.lt_h_norm2() + 7.0 / 16.0 * h2 * h2;
    if background.is_sphere() {
        d += 6.0 * h2 + 48.0;
    }
    Ok(d / 128.0)
}

/// Same integrand written with the trace-free second fundamental form.
pub fn energy_density_trace_free(geom: &GeometryData, background: Background) -> Result<f64> {
    let grad = geom
        .grad_h_norm2()
        .ok_or(Error::UnsupportedOrder { requested: 3, max: 2 })?;
    let h2 = geom.h_norm2();
    let mut d = grad - geom.l0t_h_norm2() + 3.0 / 16.0 * h2 * h2;
    if background.is_sphere() {
        d += 6.0 * h2 + 48.0;
    }
    Ok(d / 128.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaCoefficients {
    pub a2: f64,
    pub a4: Option<f64>,
}

pub fn area_coefficients(geom: &GeometryData, background: Background) -> Result<AreaCoefficients> {
    let k = geom.k;
    check_k(k)?;
    let kf = k as f64;
    let mut a2 = -(kf - 1.0) / (2.0 * kf * kf) * geom.h_norm2();
    if background.is_sphere() {
        a2 -= kf / 4.0;
    }
    let a4 = if k == 4 && geom.grad_h.is_some() { Some(energy_density(geom, background, 4)?) } else { None };
    Ok(AreaCoefficients { a2, a4 })
}

/// Integrates several pointwise quantities against `da` on the chart's rule.
pub fn integrate<F>(chart: &ImmersionChart, background: Background, resolution: usize, depth: Depth, f: F) -> Result<Vec<f64>>
where
    F: Fn(&GeometryData) -> Result<Vec<f64>> + Sync,
{
    let rule = crate::chart::quadrature_rule(chart, resolution)?;
    let rows: Vec<Vec<f64>> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let g = geometry_at(chart, background, rule.node(i), depth)?;
            let w = rule.weights[i] * g.sqrt_det_g;
            Ok(f(&g)?.into_iter().map(|v| v * w).collect())
        })
        .collect::<Result<_>>()?;
    let m = rows.first().map_or(0, Vec::len);
    Ok((0..m).map(|j| pairwise_sum(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())).collect())
}

fn require_compact(chart: &ImmersionChart) -> Result<()> {
    if chart.family.is_compact() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{} is not compact; energies are integrals over closed submanifolds", chart.family.tag())))
    }
}

/// `(ℰ, area)` by quadrature at one resolution.
pub fn energy_at(chart: &ImmersionChart, background: Background, resolution: usize) -> Result<(f64, f64)> {
    let k = chart.k;
    let depth = if k == 4 { Depth::Gradient } else { Depth::Base };
    let v = integrate(chart, background, resolution, depth, |g| Ok(vec![energy_density(g, background, k)?, 1.0]))?;
    Ok((v[0], v[1]))
}

/// `ℰ = ∫ a⁽ᵏ⁾ da` by quadrature, with a resolution-halving error estimate.
pub fn energy(chart: &ImmersionChart, background: Background, resolution: usize) -> Result<EnergyReport> {
    check_k(chart.k)?;
    require_compact(chart)?;
    let (e, area) = energy_at(chart, background, resolution)?;
    let (e_half, _) = energy_at(chart, background, (resolution / 2).max(4))?;
    let scale = if chart.k == 4 { 128.0 } else { 1.0 };
    Ok(EnergyReport {
        e,
        ebar: (chart.k == 4).then_some(128.0 * e),
        area,
        resolution,
        est_error: scale * (e - e_half).abs(),
    })
}

/// `Ē` without the error estimate.
pub fn ebar(chart: &ImmersionChart, background: Background, resolution: usize) -> Result<f64> {
    if chart.k != 4 {
        return Err(Error::Unsupported("Ē is defined for k = 4".into()));
    }
    require_compact(chart)?;
    Ok(128.0 * energy_at(chart, background, resolution)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModifiedEnergy {
    pub ebar: f64,
    /// `Ē` from the trace-free form of the integrand.
    pub ebar_trace_free: f64,
    /// `∫ |L̊|⁴ da`.
    pub l0_quartic: f64,
    pub beta: f64,
    /// `Ē + β ∫ |L̊|⁴ da`.
    pub value: f64,
}

pub fn modified_energy(chart: &ImmersionChart, background: Background, beta: f64, resolution: usize) -> Result<ModifiedEnergy> {
    if chart.k != 4 {
        return Err(Error::Unsupported("modified energies need k = 4".into()));
    }
    require_compact(chart)?;
    let v = integrate(chart, background, resolution, Depth::Gradient, |g| {
        let l0 = g.l0_norm2();
        Ok(vec![energy_density(g, background, 4)?, energy_density_trace_free(g, background)?, l0 * l0])
    })?;
    let ebar = 128.0 * v[0];
    Ok(ModifiedEnergy { ebar, ebar_trace_free: 128.0 * v[1], l0_quartic: v[2], beta, value: ebar + beta * v[2] })
}

fn require_euler(chart: &ImmersionChart) -> Result<i64> {
    chart
        .family
        .euler_characteristic()
        .ok_or_else(|| Error::Unsupported(format!("no Euler characteristic known for {}", chart.family.tag())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussBonnet {
    /// `∫ (|W̄|² + 16 σ₂(P̄)) da`.
    pub integral: f64,
    pub chi: i64,
    pub residual: f64,
}

pub fn gauss_bonnet(chart: &ImmersionChart, resolution: usize) -> Result<GaussBonnet> {
    if chart.k != 4 {
        return Err(Error::Unsupported("Chern–Gauss–Bonnet check needs k = 4".into()));
    }
    let chi = require_euler(chart)?;
    let bg = chart.natural_background();
    let v = integrate(chart, bg, resolution, Depth::Base, |g| {
        let ic = intrinsic_curvature(g)?;
        Ok(vec![ic.weyl_norm2 + 16.0 * ic.sigma2])
    })?;
    let target = 32.0 * PI * PI * chi as f64;
    Ok(GaussBonnet { integral: v[0], chi, residual: (v[0] - target).abs() })
}

pub fn gauss_bonnet_residual(chart: &ImmersionChart, resolution: usize) -> Result<f64> {
    Ok(gauss_bonnet(chart, resolution)?.residual)
}

/// Hypersurface invariants in the frame of the chosen unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypersurfaceScalars {
    pub h: f64,
    pub l0_norm2: f64,
    pub tr_l0_3: f64,
    pub tr_l0_4: f64,
    /// `P̄_α^γ L̊^{αβ} L̊_{γβ}`.
    pub p_l0_l0: f64,
    pub tr_p: f64,
    pub sigma2: f64,
    pub weyl_norm2: f64,
}

pub fn hypersurface_scalars(geom: &GeometryData) -> Result<HypersurfaceScalars> {
    let ic = intrinsic_curvature(geom)?;
    let nu = geom
        .unit_normal()
        .ok_or_else(|| Error::Unsupported("hypersurface invariants need codimension one".into()))?;
    let l0f = geom.frame_tensor(&geom.l0);
    let m = DMatrix::from_fn(4, 4, |a, b| l0f[a * 4 + b].dot(&nu));
    Ok(HypersurfaceScalars {
        h: geom.h.dot(&nu),
        l0_norm2: ic.l0_norm2,
        tr_l0_3: ic.tr_l0_3.unwrap_or(0.0),
        tr_l0_4: ic.tr_l0_4.unwrap_or(0.0),
        p_l0_l0: ic.schouten_l0_l0(&m),
        tr_p: ic.schouten.trace(),
        sigma2: ic.sigma2,
        weyl_norm2: ic.weyl_norm2,
    })
}

impl HypersurfaceScalars {
    /// `−4 P̄·L̊L̊ + 2 tr P̄ |L̊|²`.
    pub fn vyatkin_curvature_terms(&self) -> f64 {
        -4.0 * self.p_l0_l0 + 2.0 * self.tr_p * self.l0_norm2
    }

    /// The same terms rewritten through the Gauss equation in a flat ambient.
    pub fn vyatkin_curvature_terms_expanded(&self) -> f64 {
        let q = self.l0_norm2;
        2.0 * self.tr_l0_4 - 2.0 / 3.0 * q * q - self.h * self.tr_l0_3 + self.h * self.h * q / 8.0
    }

    /// `|W̄|²` predicted by extrinsic data.
    pub fn weyl_norm2_expanded(&self) -> f64 {
        let q = self.l0_norm2;
        7.0 / 3.0 * q * q - 4.0 * self.tr_l0_4
    }

    /// `4 σ₂(P̄)` predicted by extrinsic data, with the quartic coefficient as published.
    pub fn four_sigma2_expanded(&self) -> f64 {
        let (q, h) = (self.l0_norm2, self.h);
        self.tr_l0_4 - q * q / 3.0 - h * self.tr_l0_3 + 3.0 / 8.0 * h * h * q - 3.0 / 64.0 * h.powi(4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VyatkinReport {
    pub v: f64,
    pub ebar: f64,
    pub chi: i64,
    /// `∫ (2 tr L̊⁴ − 11/12 |L̊|⁴) da`.
    pub quartic: f64,
    /// `V − (¼ Ē + 8π² χ + quartic)`.
    pub relation_residual: f64,
    /// `max |(−4P̄·L̊L̊ + 2 tr P̄ |L̊|²) − expansion|` over nodes.
    pub terms_residual: f64,
    /// `max` pointwise deviation of `|W̄|²` and `4σ₂` from their extrinsic expansions.
    pub weyl_residual: f64,
    pub sigma2_residual: f64,
}

/// Vyatkin's energy of a closed hypersurface of `ℝ⁵` and its relation to `Ē`.
pub fn vyatkin_energy(chart: &ImmersionChart, resolution: usize) -> Result<VyatkinReport> {
    if chart.k != 4 || chart.natural_background() != Background::Euclidean(5) {
        return Err(Error::Unsupported("Vyatkin energy needs a hypersurface of ℝ⁵".into()));
    }
    require_compact(chart)?;
    let chi = require_euler(chart)?;
    let bg = Background::Euclidean(5);
    let v = integrate(chart, bg, resolution, Depth::Gradient, |g| {
        let s = hypersurface_scalars(g)?;
        let grad = g.grad_h_norm2().unwrap_or(0.0);
        let q = s.l0_norm2;
        Ok(vec![
            0.25 * grad + s.vyatkin_curvature_terms(),
            energy_density(g, bg, 4)?,
            2.0 * s.tr_l0_4 - 11.0 / 12.0 * q * q,
        ])
    })?;
    let ebar = 128.0 * v[1];
    let rhs = 0.25 * ebar + 8.0 * PI * PI * chi as f64 + v[2];
    let rule = crate::chart::quadrature_rule(chart, (resolution / 2).max(4))?;
    let mut worst = [0.0f64; 3];
    for i in 0..rule.len() {
        let g = geometry_at(chart, bg, rule.node(i), Depth::Base)?;
        let s = hypersurface_scalars(&g)?;
        worst[0] = worst[0].max((s.vyatkin_curvature_terms() - s.vyatkin_curvature_terms_expanded()).abs());
        worst[1] = worst[1].max((s.weyl_norm2 - s.weyl_norm2_expanded()).abs());
        worst[2] = worst[2].max((4.0 * s.sigma2 - s.four_sigma2_expanded()).abs());
    }
    Ok(VyatkinReport {
        v: v[0],
        ebar,
        chi,
        quartic: v[2],
        relation_residual: v[0] - rhs,
        terms_residual: worst[0],
        weyl_residual: worst[1],
        sigma2_residual: worst[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{make_family_chart, Family};
    use std::f64::consts::SQRT_2;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn s4() -> ImmersionChart {
        make_family_chart(Family::RoundSphere { k: 4, radius: 1.0 }).unwrap()
    }

    #[test]
    fn unit_s4_density_and_energy() {
        let c = s4();
        let g = geometry_at(&c, Background::Euclidean(5), &[1.0, 0.5, 0.2, 0.3], Depth::Gradient).unwrap();
        assert!((energy_density(&g, Background::Euclidean(5), 4).unwrap() - 48.0 / 128.0).abs() < 1e-13);
        let r = energy(&c, Background::Euclidean(5), 16).unwrap();
        assert!(rel(r.ebar.unwrap(), 128.0 * PI * PI) < 1e-12);
        assert!(rel(r.area, 8.0 * PI * PI / 3.0) < 1e-12);
        assert!(r.est_error < 1e-8);
    }

    #[test]
    fn minimal_products_have_ebar_48_area() {
        let c = make_family_chart(Family::ProductSpheres { dims: vec![2, 2], radii: vec![0.5f64.sqrt(), 0.5f64.sqrt()] }).unwrap();
        let r = energy(&c, Background::Sphere(5), 16).unwrap();
        assert!(rel(r.ebar.unwrap(), 48.0 * r.area) < 1e-12);
        assert!(rel(r.ebar.unwrap(), 192.0 * PI * PI) < 1e-10);
        let eq = make_family_chart(Family::Equator).unwrap();
        let r = energy(&eq, Background::Sphere(5), 12).unwrap();
        assert!(rel(r.ebar.unwrap(), 48.0 * 8.0 * PI * PI / 3.0) < 1e-12);
    }

    #[test]
    fn two_dimensional_energies() {
        let s2 = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 }).unwrap();
        let r = energy(&s2, Background::Euclidean(3), 16).unwrap();
        assert!(rel(r.e, -2.0 * PI) < 1e-12);
        assert!(r.ebar.is_none());
        let cl = make_family_chart(Family::ProductSpheres { dims: vec![1, 1], radii: vec![0.5f64.sqrt(), 0.5f64.sqrt()] }).unwrap();
        let r = energy(&cl, Background::Sphere(3), 16).unwrap();
        assert!(rel(r.e, -PI * PI) < 1e-12);
    }

    #[test]
    fn area_coefficients_specializations() {
        let c = s4();
        let g = geometry_at(&c, Background::Euclidean(5), &[1.0, 0.5, 0.2, 0.3], Depth::Gradient).unwrap();
        let a = area_coefficients(&g, Background::Euclidean(5)).unwrap();
        assert!((a.a2 + 1.5).abs() < 1e-13);
        assert_eq!(a.a4, Some(energy_density(&g, Background::Euclidean(5), 4).unwrap()));
        let m = make_family_chart(Family::ProductSpheres { dims: vec![1, 3], radii: vec![0.5, 0.75f64.sqrt()] }).unwrap();
        let g = geometry_at(&m, Background::Sphere(5), &[1.0, 0.5, 0.2, 0.3], Depth::Base).unwrap();
        let a = area_coefficients(&g, Background::Sphere(5)).unwrap();
        assert!((a.a2 + 1.0).abs() < 1e-13);
        assert_eq!(a.a4, None);
    }

    #[test]
    fn anchor_ring_matches_product() {
        let c = make_family_chart(Family::Anchor { j: 2, k: 2, big_r: SQRT_2, r: 1.0 }).unwrap();
        let r = energy(&c, Background::Euclidean(5), 24).unwrap();
        assert!(rel(r.ebar.unwrap(), 192.0 * PI * PI) < 1e-9, "{:?}", r);
    }

    #[test]
    fn trace_free_form_and_nonnegativity() {
        for fam in [Family::Anchor { j: 2, k: 2, big_r: SQRT_2, r: 1.3 }, Family::Ellipsoid { a: 2.0 }] {
            let c = make_family_chart(fam).unwrap();
            let m = modified_energy(&c, Background::Euclidean(5), 4.0 / 3.0, 16).unwrap();
            assert!(rel(m.ebar, m.ebar_trace_free) < 1e-12);
            assert!(m.value >= -1e-8);
        }
        let m = modified_energy(&s4(), Background::Euclidean(5), 7.0, 12).unwrap();
        assert!(rel(m.value, 128.0 * PI * PI) < 1e-12);
    }

    #[test]
    fn gauss_bonnet_on_basic_families() {
        assert!(gauss_bonnet_residual(&s4(), 16).unwrap() < 1e-8);
        let p = make_family_chart(Family::ProductSpheres { dims: vec![2, 2], radii: vec![0.6, 0.8] }).unwrap();
        assert!(gauss_bonnet_residual(&p, 16).unwrap() < 1e-8);
        let t = make_family_chart(Family::Anchor { j: 1, k: 3, big_r: 2.0, r: 1.0 }).unwrap();
        assert!(gauss_bonnet_residual(&t, 16).unwrap() < 1e-8);
    }

    #[test]
    fn vyatkin_terms_follow_gauss_equation() {
        let c = make_family_chart(Family::Anchor { j: 2, k: 2, big_r: SQRT_2, r: 1.2 }).unwrap();
        let v = vyatkin_energy(&c, 12).unwrap();
        assert!(v.terms_residual < 1e-10);
        assert!(v.weyl_residual < 1e-10);
        assert_eq!(v.chi, 4);
        assert!(vyatkin_energy(&make_family_chart(Family::Equator).unwrap(), 8).is_err());
    }

    #[test]
    fn graph_energy_rejected() {
        let g = make_family_chart(Family::PeriodicGraph { eps: 0.1, phi: vec![] }).unwrap();
        assert!(energy(&g, Background::Euclidean(5), 8).is_err());
    }
}
