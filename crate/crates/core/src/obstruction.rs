//! Expansion coefficients of the minimal extension and the obstruction field.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{Background, Family, ImmersionChart};
use crate::error::{Error, Result};
use crate::geometry::{Depth, GeometryData, JetGeometry, NTensor};
use crate::jet::{vector as jv, Jet};
use crate::quadrature::pairwise_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub u2: DVector<f64>,
    pub u4: Option<DVector<f64>>,
}

fn llh(geom: &GeometryData) -> DVector<f64> {
    // L_{αβ} ⟨L^{αβ}, H⟩
    let k = geom.k;
    let a = DMatrix::from_fn(k, k, |i, j| geom.l[i * k + j].dot(&geom.h));
    let up = &geom.ginv * a * &geom.ginv;
    (0..k * k).fold(DVector::zeros(geom.n), |acc, i| acc + &geom.l[i] * up[(i / k, i % k)])
}

/// `U₍₂₎ = H/(2k)` and, for `k = 4` with `ΔH` available, `U₍₄₎`.
pub fn expansion_coefficients(geom: &GeometryData, background: Background) -> Result<ExpansionCoefficients> {
    let k = geom.k;
    if k != 2 && k != 4 {
        return Err(Error::Unsupported(format!("expansion coefficients need k = 2 or 4, got {k}")));
    }
    let kf = k as f64;
    let u2 = &geom.h / (2.0 * kf);
    let u4 = match (&geom.lap_h, k) {
        (Some(lap), 4) => {
            let mut b = lap + llh(geom) - &geom.h * (2.0 / (kf * kf) * geom.h_norm2());
            if background.is_sphere() {
                // −P^α_α H + (k−4) P(H) + 2k P^{αβ} L_{αβ} with P = ½ g
                b += &geom.h * (kf - 2.0);
            }
            Some(b / (8.0 * kf * (kf - 2.0)))
        }
        _ => None,
    };
    Ok(ExpansionCoefficients { u2, u4 })
}

/// `U₍₄₎` for `k = 4`; `k = 2` is rejected because that slot is the obstruction.
pub fn u4(geom: &GeometryData, background: Background) -> Result<DVector<f64>> {
    if geom.k != 4 {
        return Err(Error::Unsupported("U4 is defined here for k = 4; for k = 2 use the obstruction".into()));
    }
    expansion_coefficients(geom, background)?
        .u4
        .ok_or(Error::UnsupportedOrder { requested: 4, max: 3 })
}

/// The obstruction field with its named summands. For `k = 4` the terms add
/// up to `128 ℋ`; for `k = 2` to `4 ℋ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstruction {
    pub field: DVector<f64>,
    pub terms: Vec<(&'static str, DVector<f64>)>,
    pub normalization: f64,
}

impl Obstruction {
    /// `Σ |term|`, the magnitude against which cancellation is judged.
    pub fn term_scale(&self) -> f64 {
        self.terms.iter().map(|(_, t)| t.norm()).sum::<f64>() / self.normalization
    }

    pub fn term(&self, name: &str) -> Option<&DVector<f64>> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, t)| t)
    }
}

fn val(v: &[Jet]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(Jet::value))
}

/// Obstruction at one point from order-6 (k = 4) or order-4 (k = 2) jets.
pub fn obstruction(geo: &JetGeometry, background: Background) -> Result<Obstruction> {
    match (geo.k, background.is_sphere()) {
        (2, _) => obstruction_k2(geo),
        (4, false) => obstruction_k4(geo),
        (4, true) => Err(Error::Unsupported("the k = 4 obstruction is only available in a Euclidean background".into())),
        (k, _) => Err(Error::Unsupported(format!("obstruction needs k = 2 or 4, got {k}"))),
    }
}

fn need_order(geo: &JetGeometry, order: usize) -> Result<()> {
    let have = geo.x[0].order();
    if have < order {
        Err(Error::UnsupportedOrder { requested: order, max: have })
    } else {
        Ok(())
    }
}

fn obstruction_k2(geo: &JetGeometry) -> Result<Obstruction> {
    need_order(geo, 4)?;
    let lap = val(&geo.laplacian(&geo.h));
    let h = val(&geo.h);
    let a: Vec<Jet> = geo.l_dot(&geo.h).iter().map(|c| c.truncate(0)).collect();
    let llh = val(&geo.l_contract(&a));
    let h2 = h.norm_squared();
    // the round-sphere curvature terms −P^α_α H − 2P(H) + 4P·L cancel for k = 2
    let terms = vec![("lap_h", lap), ("llh", llh), ("h2_h", &h * (-0.5 * h2))];
    let field = terms.iter().fold(DVector::zeros(geo.n), |acc, (_, t)| acc + t) / 4.0;
    Ok(Obstruction { field, terms, normalization: 4.0 })
}

fn obstruction_k4(geo: &JetGeometry) -> Result<Obstruction> {
    need_order(geo, 6)?;
    let k = geo.k;
    let n = geo.n;
    let h = &geo.h;
    let grad = geo.cov(&NTensor::normal_field(h.clone()));
    let lap = geo.div(&grad).comps.remove(0);
    let bilap = geo.laplacian(&lap);

    let a = geo.l_dot(h);
    let llh_j = geo.l_contract(&a);
    let h2_j = jv::dot(h, h);
    let h2h_j = jv::scale(h, &h2_j);
    let mut ah = NTensor { rank: 2, normal: true, comps: Vec::with_capacity(k * k) };
    for c in &a {
        ah.comps.push(jv::scale(h, c));
    }
    let ddah = geo.div(&geo.div(&ah)).comps.remove(0);

    let h0 = val(h);
    let h2 = h0.norm_squared();
    let ginv = DMatrix::from_fn(k, k, |i, j| geo.ginv[i][j].value());
    let lv: Vec<DVector<f64>> = geo.l.comps.iter().map(|c| val(c)).collect();
    let contract = |m: &DMatrix<f64>| -> DVector<f64> {
        // L_{αβ} M^{αβ} for M with lower indices
        let up = &ginv * m * &ginv;
        (0..k * k).fold(DVector::zeros(n), |acc, i| acc + &lv[i] * up[(i / k, i % k)])
    };
    let gradv: Vec<DVector<f64>> = grad.comps.iter().map(|c| val(c)).collect();
    let lapv = val(&lap);
    let am = DMatrix::from_fn(k, k, |i, j| lv[i * k + j].dot(&h0));
    let llh = val(&llh_j);
    let grad_sq = DMatrix::from_fn(k, k, |i, j| gradv[i].dot(&gradv[j]));
    let grad_norm2 = ginv.component_mul(&grad_sq).sum();
    let lt_h2 = (&ginv * &am * &ginv).component_mul(&am).sum();
    let a_up = &ginv * &am * &ginv;
    // L_{αγ} ⟨L^γ_β, H⟩ ⟨L^{αβ}, H⟩ = L_{αγ} (Â A g⁻¹)^{αγ}
    let d8 = &a_up * &am * &ginv;
    let t8 = (0..k * k).fold(DVector::zeros(n), |acc, i| acc + &lv[i] * d8[(i / k, i % k)]);

    let terms = vec![
        ("bilap_h", val(&bilap) * 2.0),
        ("l_grad_grad", contract(&grad_sq) * -2.0),
        ("l_l_lap", contract(&DMatrix::from_fn(k, k, |i, j| lv[i * k + j].dot(&lapv))) * 2.0),
        ("grad2_h", &h0 * grad_norm2),
        ("lap_llh", val(&geo.laplacian(&llh_j)) * 2.0),
        ("divdiv_ah", val(&ddah) * 2.0),
        ("l_l_llh", contract(&DMatrix::from_fn(k, k, |i, j| lv[i * k + j].dot(&llh))) * 2.0),
        ("l_a_a", t8 * 2.0),
        ("lth2_h", &h0 * -lt_h2),
        ("lap_h2h", val(&geo.laplacian(&h2h_j)) * -1.75),
        ("llh_h2", &llh * (-1.75 * h2)),
        ("h4_h", &h0 * (7.0 / 16.0 * h2 * h2)),
    ];
    let field = terms.iter().fold(DVector::zeros(n), |acc, (_, t)| acc + t) / 128.0;
    Ok(Obstruction { field, terms, normalization: 128.0 })
}

/// Jet order needed for the obstruction of a `k`-dimensional chart.
pub fn obstruction_order(k: usize) -> usize {
    if k == 4 {
        Depth::Bilaplacian.jet_order()
    } else {
        Depth::Laplacian.jet_order()
    }
}

pub fn obstruction_at(chart: &ImmersionChart, background: Background, u: &[f64]) -> Result<Obstruction> {
    let x = chart.jet_eval(u, obstruction_order(chart.k))?;
    let geo = JetGeometry::new(x, background).map_err(|e| match e {
        Error::Degenerate { condition, .. } => Error::Degenerate { node: u.to_vec(), condition },
        other => other,
    })?;
    obstruction(&geo, background)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionNorms {
    pub sup: f64,
    pub l2: f64,
    /// `sup |ℋ|` divided by the summed sup-norms of the individual terms.
    pub scaled_sup: f64,
    pub term_sups: Vec<(String, f64)>,
    pub nodes: usize,
    /// Largest `|P_N ℋ − ℋ|` seen.
    pub normal_defect: f64,
}

pub fn obstruction_norms(chart: &ImmersionChart, background: Background, resolution: usize) -> Result<ObstructionNorms> {
    let rule = crate::chart::quadrature_rule(chart, resolution)?;
    let order = obstruction_order(chart.k);
    let rows: Vec<(Obstruction, f64, f64)> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            let u = rule.node(i);
            let x = chart.jet_eval(u, order)?;
            let geo = JetGeometry::new(x, background).map_err(|e| match e {
                Error::Degenerate { condition, .. } => Error::Degenerate { node: u.to_vec(), condition },
                other => other,
            })?;
            let ob = obstruction(&geo, background)?;
            let g = DMatrix::from_fn(chart.k, chart.k, |a, b| geo.g[a][b].value());
            let fj: Vec<Jet> = ob.field.iter().map(|&v| Jet::constant(chart.k, 0, v)).collect();
            let defect = (val(&geo.proj.apply(&fj)) - &ob.field).norm();
            Ok((ob, rule.weights[i] * g.determinant().sqrt(), defect))
        })
        .collect::<Result<_>>()?;
    let sup = rows.iter().map(|(o, _, _)| o.field.norm()).fold(0.0, f64::max);
    let l2 = pairwise_sum(&rows.iter().map(|(o, w, _)| w * o.field.norm_squared()).collect::<Vec<_>>()).sqrt();
    let names: Vec<&str> = rows.first().map(|(o, _, _)| o.terms.iter().map(|(n, _)| *n).collect()).unwrap_or_default();
    let norm = rows.first().map_or(1.0, |(o, _, _)| o.normalization);
    let term_sups: Vec<(String, f64)> = names
        .iter()
        .enumerate()
        .map(|(j, n)| (n.to_string(), rows.iter().map(|(o, _, _)| o.terms[j].1.norm()).fold(0.0, f64::max) / norm))
        .collect();
    let scale: f64 = term_sups.iter().map(|(_, s)| s).sum();
    let normal_defect = rows.iter().map(|(_, _, d)| *d).fold(0.0, f64::max);
    Ok(ObstructionNorms {
        sup,
        l2,
        scaled_sup: if scale > 0.0 { sup / scale } else { 0.0 },
        term_sups,
        nodes: rows.len(),
        normal_defect,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadingTerm {
    pub eps: f64,
    /// `max |ℋ − Δ²H/64| / ε` at `ε`.
    pub residual: f64,
    /// The same at `ε/2`.
    pub residual_half: f64,
    /// `residual / residual_half`; close to 4 for quadratic decay.
    pub ratio: f64,
}

fn leading_residual(chart: &ImmersionChart, nodes: &[Vec<f64>]) -> Result<f64> {
    let eps = match &chart.family {
        Family::PeriodicGraph { eps, .. } => *eps,
        _ => return Err(Error::Unsupported("leading-term check needs a periodic graph chart".into())),
    };
    let worst = nodes
        .par_iter()
        .map(|u| {
            let ob = obstruction_at(chart, Background::Euclidean(5), u)?;
            // ℋ − Δ²H/64 is every summand except the bilaplacian one
            let rest = ob.terms.iter().skip(1).fold(DVector::zeros(5), |acc, (_, t)| acc + t) / 128.0;
            Ok(rest.norm())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(if eps == 0.0 { 0.0 } else { worst / eps.abs() })
}

/// Compares `ℋ` with its linearization `Δ²H/64` on a periodic graph at `ε` and `ε/2`.
pub fn leading_term_check(chart: &ImmersionChart, resolution: usize) -> Result<LeadingTerm> {
    let (eps, phi) = match &chart.family {
        Family::PeriodicGraph { eps, phi } => (*eps, phi.clone()),
        _ => return Err(Error::Unsupported("leading-term check needs a periodic graph chart".into())),
    };
    let rule = chart.quadrature_full(resolution);
    let nodes: Vec<Vec<f64>> = (0..rule.len()).map(|i| rule.node(i).to_vec()).collect();
    let residual = leading_residual(chart, &nodes)?;
    let half = crate::chart::make_family_chart(Family::PeriodicGraph { eps: eps / 2.0, phi })?;
    let residual_half = leading_residual(&half, &nodes)?;
    Ok(LeadingTerm { eps, residual, residual_half, ratio: residual / residual_half })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{make_family_chart, TrigMode};
    use crate::geometry::geometry_at;
    use std::f64::consts::SQRT_2;

    fn s4() -> ImmersionChart {
        make_family_chart(Family::RoundSphere { k: 4, radius: 1.0 }).unwrap()
    }

    #[test]
    fn s4_expansion_coefficients() {
        let c = s4();
        let u = [1.0, 0.7, 0.4, 2.0];
        let g = geometry_at(&c, Background::Euclidean(5), &u, Depth::Laplacian).unwrap();
        let nu = DVector::from_vec(c.normal_at(&u).unwrap());
        let e = expansion_coefficients(&g, Background::Euclidean(5)).unwrap();
        assert!((&e.u2 - &nu * 0.5).norm() < 1e-12);
        assert!((e.u4.unwrap() - &nu * 0.125).norm() < 1e-12);
    }

    #[test]
    fn minimal_products_have_vanishing_coefficients() {
        let c = make_family_chart(Family::ProductSpheres { dims: vec![1, 3], radii: vec![0.5, 0.75f64.sqrt()] }).unwrap();
        let g = geometry_at(&c, Background::Sphere(5), &[1.0, 0.7, 0.4, 2.0], Depth::Laplacian).unwrap();
        let e = expansion_coefficients(&g, Background::Sphere(5)).unwrap();
        assert!(e.u2.norm() < 1e-12 && e.u4.unwrap().norm() < 1e-12);
        assert!(u4(&geometry_at(&make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 }).unwrap(), Background::Euclidean(3), &[1.0, 0.3], Depth::Laplacian).unwrap(), Background::Euclidean(3)).is_err());
    }

    #[test]
    fn s4_obstruction_ledger() {
        let c = s4();
        let u = [1.0, 0.7, 0.4, 2.0];
        let ob = obstruction_at(&c, Background::Euclidean(5), &u).unwrap();
        let nu = DVector::from_vec(c.normal_at(&u).unwrap());
        let expect = [
            ("l_l_llh", 128.0),
            ("l_a_a", 128.0),
            ("lth2_h", -256.0),
            ("llh_h2", -448.0),
            ("h4_h", 448.0),
            ("bilap_h", 0.0),
            ("lap_llh", 0.0),
            ("divdiv_ah", 0.0),
            ("lap_h2h", 0.0),
        ];
        for (name, v) in expect {
            assert!((ob.term(name).unwrap() - &nu * v).norm() < 1e-9, "{name}");
        }
        assert!(ob.field.norm() < 1e-10);
    }

    #[test]
    fn k2_round_sphere_and_clifford_torus() {
        let s2 = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 }).unwrap();
        assert!(obstruction_norms(&s2, Background::Euclidean(3), 8).unwrap().sup < 1e-10);
        let cl = make_family_chart(Family::ProductSpheres { dims: vec![1, 1], radii: vec![0.5f64.sqrt(), 0.5f64.sqrt()] }).unwrap();
        assert!(obstruction_norms(&cl, Background::Sphere(3), 8).unwrap().sup < 1e-10);
        let off = make_family_chart(Family::ProductSpheres { dims: vec![1, 1], radii: vec![0.6, 0.8] }).unwrap();
        assert!(obstruction_norms(&off, Background::Sphere(3), 8).unwrap().sup > 1e-3);
    }

    #[test]
    fn k4_sphere_background_rejected() {
        let c = make_family_chart(Family::Equator).unwrap();
        assert!(matches!(obstruction_at(&c, Background::Sphere(5), &[1.0, 0.7, 0.4, 2.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn critical_anchor_vanishes_and_perturbed_does_not() {
        let c = make_family_chart(Family::Anchor { j: 2, k: 2, big_r: SQRT_2, r: 1.0 }).unwrap();
        let n = obstruction_norms(&c, Background::Euclidean(5), 6).unwrap();
        assert!(n.scaled_sup < 1e-9, "{n:?}");
        let c = make_family_chart(Family::Anchor { j: 2, k: 2, big_r: SQRT_2, r: 1.2 }).unwrap();
        let n = obstruction_norms(&c, Background::Euclidean(5), 6).unwrap();
        assert!(n.scaled_sup > 1e-2, "{n:?}");
        assert!(n.normal_defect < 1e-10);
    }

    #[test]
    fn flat_graph_has_zero_obstruction() {
        let c = make_family_chart(Family::PeriodicGraph { eps: 0.0, phi: vec![TrigMode::cos(1.0, [1, 0, 0, 0])] }).unwrap();
        let ob = obstruction_at(&c, Background::Euclidean(5), &[0.3, 0.2, 0.1, 0.0]).unwrap();
        assert_eq!(ob.field.norm(), 0.0);
    }
}
