//! First variation of `ℰ` against the obstruction field, Jacobi spectra of
//! the round `S⁴` and `S²×S²`, and the second variation along the `S²×S²` family.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{trig_poly, Background, ImmersionChart, Perturbation, TrigMode};
use crate::energy::energy_at;
use crate::error::{Error, Result};
use crate::families::{family_energy_radii, ProductFamily};
use crate::geometry::JetGeometry;
use crate::jet::Jet;
use crate::obstruction::{obstruction, obstruction_order};
use crate::quadrature::pairwise_sum;

/// Normal variation field `V` of a chart.
#[derive(Debug, Clone, PartialEq)]
pub enum VariationField {
    /// The family's unit normal.
    FamilyNormal,
    /// Normal projection of a trigonometric-polynomial ambient field.
    Ambient(Vec<Vec<TrigMode>>),
}

impl VariationField {
    fn perturbation(&self, t: f64) -> Perturbation {
        match self {
            VariationField::FamilyNormal => Perturbation::FamilyNormal { t },
            VariationField::Ambient(field) => Perturbation::Ambient { t, field: field.clone() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstVariation {
    pub h: f64,
    /// Central differences of `ℰ(x + tV)` at steps `h`, `h/2`, `h/4`.
    pub derivatives: [f64; 3],
    /// Richardson combination of the two finer differences.
    pub extrapolated: f64,
    /// `−∫⟨V, ℋ⟩ da`.
    pub predicted: f64,
    pub residual: f64,
    /// `log₂` of successive difference ratios; `None` when the differences vanish.
    pub order: Option<f64>,
}

fn check_variation(chart: &ImmersionChart, background: Background) -> Result<()> {
    if background.is_sphere() {
        return Err(Error::Unsupported("x + tV leaves the sphere; first variation needs a Euclidean background".into()));
    }
    if chart.k == 4 || chart.k == 2 {
        if chart.perturbation.is_some() || !chart.maps.is_empty() {
            return Err(Error::Unsupported("first variation needs an unperturbed family chart without ambient maps".into()));
        }
        Ok(())
    } else {
        Err(Error::Unsupported(format!("first variation needs k = 2 or 4, got {}", chart.k)))
    }
}

/// `−∫⟨V, ℋ⟩ da` with `V` evaluated on the unperturbed chart.
pub fn predicted_first_variation(chart: &ImmersionChart, field: &VariationField, background: Background, resolution: usize) -> Result<f64> {
    check_variation(chart, background)?;
    let rule = crate::chart::quadrature_rule(&chart.with_perturbation(field.perturbation(0.0)), resolution)?;
    let k = chart.k;
    let order = obstruction_order(k);
    let vals: Vec<f64> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let u = rule.node(i);
            let geo = JetGeometry::new(chart.jet_eval(u, order)?, background)?;
            let ob = obstruction(&geo, background)?;
            let v: DVector<f64> = match field {
                VariationField::FamilyNormal => DVector::from_vec(
                    chart
                        .normal_at(u)
                        .ok_or_else(|| Error::Unsupported(format!("{} has no scalar unit normal", chart.family.tag())))?,
                ),
                VariationField::Ambient(f) => {
                    if f.len() != geo.n {
                        return Err(Error::Config("variation field needs one component per ambient coordinate".into()));
                    }
                    let p: Vec<Jet> = u.iter().map(|&x| Jet::constant(k, 0, x)).collect();
                    let raw: Vec<Jet> = f.iter().map(|m| trig_poly(m, &p)).collect();
                    let c: Vec<Jet> = raw.iter().map(|j| Jet::constant(k, 0, j.value())).collect();
                    DVector::from_iterator(geo.n, geo.proj.apply(&c).iter().map(Jet::value))
                }
            };
            let g = DMatrix::from_fn(k, k, |a, b| geo.g[a][b].value());
            Ok(-rule.weights[i] * g.determinant().sqrt() * v.dot(&ob.field))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&vals))
}

/// Compares `dℰ/dt` of `x + tV` at `t = 0` with `−∫⟨V, ℋ⟩ da`.
pub fn first_variation_residual(
    chart: &ImmersionChart,
    field: &VariationField,
    background: Background,
    h: f64,
    resolution: usize,
) -> Result<FirstVariation> {
    check_variation(chart, background)?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("step must be positive, got {h}")));
    }
    let e = |t: f64| -> Result<f64> { Ok(energy_at(&chart.with_perturbation(field.perturbation(t)), background, resolution)?.0) };
    let diff = |s: f64| -> Result<f64> { Ok((e(s)? - e(-s)?) / (2.0 * s)) };
    let d = [diff(h)?, diff(h / 2.0)?, diff(h / 4.0)?];
    let extrapolated = (4.0 * d[2] - d[1]) / 3.0;
    let predicted = predicted_first_variation(chart, field, background, resolution)?;
    let (a, b) = ((d[0] - d[1]).abs(), (d[1] - d[2]).abs());
    let order = (a > 0.0 && b > 0.0).then(|| (a / b).log2());
    Ok(FirstVariation { h, derivatives: d, extrapolated, predicted, residual: (extrapolated - predicted).abs(), order })
}

/// Minimal hypersurfaces with closed-form Jacobi spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Surface {
    S4,
    S2xS2,
}

impl Surface {
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "s4" => Ok(Surface::S4),
            "s2xs2" => Ok(Surface::S2xS2),
            other => Err(Error::Config(format!("unknown surface '{other}' (expected s4, s2xs2)"))),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Surface::S4 => "s4",
            Surface::S2xS2 => "s2xs2",
        }
    }
}

/// `2λ(λ + 4)(λ + 6)`, the eigenvalue of `𝒥 = 2J(J + 4)(J + 6)`.
pub fn cj(lambda: i64) -> i64 {
    2 * lambda * (lambda + 4) * (lambda + 6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SpectrumRow {
    pub lambda: i64,
    pub mult: u64,
    pub cj: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectrumTable {
    pub surface: Surface,
    pub rows: Vec<SpectrumRow>,
    /// `dim ker J`.
    pub killing_dim: u64,
    /// `dim ker (J + 4)`.
    pub conformal_dim: u64,
    /// `dim ker 𝒥`.
    pub j_kernel_dim: u64,
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

/// Eigenvalues of `J` with multiplicities, for harmonic degrees up to `j_max`.
/// For `S²×S²` only eigenvalues all of whose contributing degree pairs lie
/// within `j_max` are listed, so every multiplicity is complete.
pub fn jacobi_spectrum(surface: Surface, j_max: u32) -> Result<SpectrumTable> {
    if j_max < 2 {
        return Err(Error::Config(format!("j_max must be at least 2, got {j_max}")));
    }
    let mut by_lambda: BTreeMap<i64, u64> = BTreeMap::new();
    match surface {
        Surface::S4 => {
            for j in 0..=j_max as u64 {
                let lambda = (j * (j + 3)) as i64 - 4;
                *by_lambda.entry(lambda).or_default() += binomial(j + 4, 4) - binomial(j + 2, 4);
            }
        }
        Surface::S2xS2 => {
            let sphere = |j: u64| (2 * j * (j + 1)) as i64;
            let bound = sphere(j_max as u64 + 1) - 8;
            for j in 0..=j_max as u64 {
                for jp in 0..=j_max as u64 {
                    let lambda = sphere(j) + sphere(jp) - 8;
                    if lambda < bound {
                        *by_lambda.entry(lambda).or_default() += (2 * j + 1) * (2 * jp + 1);
                    }
                }
            }
        }
    }
    let rows: Vec<SpectrumRow> = by_lambda.into_iter().map(|(lambda, mult)| SpectrumRow { lambda, mult, cj: cj(lambda) }).collect();
    let mult_of = |l: i64| rows.iter().find(|r| r.lambda == l).map_or(0, |r| r.mult);
    let j_kernel_dim = rows.iter().filter(|r| r.cj == 0).map(|r| r.mult).sum();
    let (killing_dim, conformal_dim) = (mult_of(0), mult_of(-4));
    Ok(SpectrumTable { surface, rows, killing_dim, conformal_dim, j_kernel_dim })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondVariation {
    pub h: f64,
    /// Central second difference of `Ē` along `S²(cos θ)×S²(sin θ)` at `θ = π/4`.
    pub fd_value: f64,
    /// `cJ(−8) · Area` with the area from chart quadrature.
    pub operator_value: f64,
    pub area: f64,
}

fn family_ebar(theta: f64) -> Result<f64> {
    family_energy_radii(ProductFamily::S2xS2, &[theta.cos(), theta.sin()])
}

/// Second derivative of `Ē` along the `S²×S²` family against `∫⟨𝒥ν, ν⟩`.
pub fn second_variation_family_check(resolution: usize, h: f64) -> Result<SecondVariation> {
    if !(h > 0.0 && h < FRAC_PI_4) {
        return Err(Error::Config(format!("step must lie in (0, π/4), got {h}")));
    }
    let fd_value = (family_ebar(FRAC_PI_4 + h)? - 2.0 * family_ebar(FRAC_PI_4)? + family_ebar(FRAC_PI_4 - h)?) / (h * h);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let chart = crate::chart::make_family_chart(crate::chart::Family::ProductSpheres { dims: vec![2, 2], radii: vec![r, r] })?;
    let (_, area) = energy_at(&chart, chart.natural_background(), resolution)?;
    Ok(SecondVariation { h, fd_value, operator_value: cj(-8) as f64 * area, area })
}

/// `−512π²`, the exact value of both sides.
pub fn second_variation_target() -> f64 {
    -512.0 * PI * PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{make_family_chart, Family};
    use std::f64::consts::SQRT_2;

    #[test]
    fn s4_rows() {
        let t = jacobi_spectrum(Surface::S4, 2).unwrap();
        let rows: Vec<(i64, u64)> = t.rows.iter().map(|r| (r.lambda, r.mult)).collect();
        assert_eq!(rows, vec![(-4, 1), (0, 5), (6, 14)]);
        assert_eq!((t.killing_dim, t.conformal_dim, t.j_kernel_dim), (5, 1, 6));
        assert!(t.rows.iter().all(|r| r.cj >= 0));
        let big = jacobi_spectrum(Surface::S4, 8).unwrap();
        assert!(big.rows.iter().filter(|r| r.lambda != -4 && r.lambda != 0).all(|r| r.cj > 0));
    }

    #[test]
    fn s2xs2_rows() {
        let t = jacobi_spectrum(Surface::S2xS2, 2).unwrap();
        let rows: Vec<(i64, u64)> = t.rows.iter().take(4).map(|r| (r.lambda, r.mult)).collect();
        assert_eq!(rows, vec![(-8, 1), (-4, 6), (0, 9), (4, 10)]);
        assert_eq!((t.killing_dim, t.conformal_dim, t.j_kernel_dim), (9, 6, 15));
        let negative: Vec<_> = t.rows.iter().filter(|r| r.cj < 0).collect();
        assert_eq!(negative.len(), 1);
        assert_eq!((negative[0].lambda, negative[0].mult), (-8, 1));
        // raising j_max only appends rows
        let more = jacobi_spectrum(Surface::S2xS2, 5).unwrap();
        assert_eq!(&more.rows[..t.rows.len()], &t.rows[..]);
    }

    #[test]
    fn cj_values() {
        assert_eq!(cj(-8), -128);
        assert_eq!(cj(6), 1440);
        assert_eq!(cj(-4), 0);
        assert_eq!(cj(0), 0);
    }

    #[test]
    fn bad_spectrum_input() {
        assert!(jacobi_spectrum(Surface::S4, 1).is_err());
        assert!(Surface::from_tag("s3").is_err());
    }

    #[test]
    fn family_second_variation() {
        let sv = second_variation_family_check(16, 1e-3).unwrap();
        let target = second_variation_target();
        assert!((sv.fd_value / target - 1.0).abs() < 1e-4);
        assert!((sv.operator_value / target - 1.0).abs() < 1e-12);
        // f(θ) = −16π²(cot²θ + tan²θ − 14): f'' = −16π²(6cot⁴θ + 8cot²θ + 6tan⁴θ + 8tan²θ + 4)
        let th: f64 = 0.6;
        let (c, t) = (1.0 / th.tan(), th.tan());
        let exact = -16.0 * PI * PI * (6.0 * c.powi(4) + 8.0 * c * c + 6.0 * t.powi(4) + 8.0 * t * t + 4.0);
        let h = 1e-3;
        let fd = (family_ebar(th + h).unwrap() - 2.0 * family_ebar(th).unwrap() + family_ebar(th - h).unwrap()) / (h * h);
        assert!((fd / exact - 1.0).abs() < 1e-5);
    }

    #[test]
    fn round_sphere_first_variation_vanishes() {
        let chart = make_family_chart(Family::RoundSphere { k: 4, radius: 1.0 }).unwrap();
        let fv = first_variation_residual(&chart, &VariationField::FamilyNormal, Background::Euclidean(5), 0.05, 8).unwrap();
        assert!(fv.extrapolated.abs() < 1e-10);
        assert!(fv.predicted.abs() < 1e-10);
    }

    #[test]
    fn round_s2_ambient_variation() {
        let chart = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 }).unwrap();
        let field = vec![
            vec![TrigMode::cos(0.3, [1, 1, 0, 0])],
            vec![TrigMode::sin(0.2, [0, 2, 0, 0])],
            vec![TrigMode::cos(0.5, [2, 0, 0, 0]), TrigMode::sin(0.1, [1, 1, 0, 0])],
        ];
        let fv = first_variation_residual(&chart, &VariationField::Ambient(field), Background::Euclidean(3), 1e-3, 24).unwrap();
        assert!(fv.residual < 1e-6, "{fv:?}");
        assert!(fv.predicted.abs() < 1e-10);
    }

    #[test]
    fn sphere_background_rejected() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let chart = make_family_chart(Family::ProductSpheres { dims: vec![1, 1], radii: vec![r, r] }).unwrap();
        let bg = chart.natural_background();
        assert!(matches!(
            first_variation_residual(&chart, &VariationField::FamilyNormal, bg, 1e-3, 8),
            Err(Error::Unsupported(_))
        ));
        let t = make_family_chart(Family::Anchor { j: 2, k: 2, big_r: SQRT_2, r: 1.0 }).unwrap();
        assert!(first_variation_residual(&t, &VariationField::FamilyNormal, Background::Euclidean(5), 0.0, 8).is_err());
    }
}
