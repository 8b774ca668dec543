//! The acceptance criteria, each evaluated at its pinned tolerance.

use std::f64::consts::{PI, SQRT_2};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asymptotics::{asymptotic_fit, dilated_energy_closed, lemma_integral, transcription_residual, DILATED_R};
use crate::chart::{make_family_chart, parse_trig, Background, Family, ImmersionChart};
use crate::config::RunConfig;
use crate::conformal::{anchor_correspondence_residual, conformal_invariance_residual, AmbientMap};
use crate::energy::{ebar, gauss_bonnet, modified_energy};
use crate::error::Result;
use crate::families::{
    boundedness_scan, family_energy_closed, family_energy_radii, find_critical_points, relation_residuals, Classification,
    ProductFamily,
};
use crate::obstruction::{leading_term_check, obstruction_norms};
use crate::variation::{first_variation_residual, jacobi_spectrum, second_variation_family_check, second_variation_target, Surface, VariationField};

pub const CRITERIA: [(u8, &str); 15] = [
    (1, "closed-form family energies"),
    (2, "chart quadrature vs closed forms"),
    (3, "critical points and classification"),
    (4, "family relations"),
    (5, "conformal invariance and stereographic correspondence"),
    (6, "obstruction field vanishing"),
    (7, "first variation"),
    (8, "Jacobi tables"),
    (9, "family second variation"),
    (10, "dilated anchor asymptotics"),
    (11, "ellipsoid family"),
    (12, "unboundedness scans"),
    (13, "Chern-Gauss-Bonnet"),
    (14, "trace-free form and modified energy"),
    (15, "linearized obstruction"),
];

/// Criteria that only touch closed forms or one-dimensional integrals.
pub const FAST: [u8; 7] = [1, 3, 4, 8, 9, 10, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Fast,
}

impl std::str::FromStr for Suite {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "fast" => Ok(Suite::Fast),
            other => Err(crate::error::Error::Config(format!("unknown suite '{other}' (expected all or fast)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {:<52} {} ({:.1}s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn sphere_family(dims: &[usize], radii: &[f64]) -> Result<ImmersionChart> {
    make_family_chart(Family::ProductSpheres { dims: dims.to_vec(), radii: radii.to_vec() })
}

fn anchor(j: usize, k: usize, big_r: f64, r: f64) -> Result<ImmersionChart> {
    make_family_chart(Family::Anchor { j, k, big_r, r })
}

fn s4() -> Result<ImmersionChart> {
    make_family_chart(Family::RoundSphere { k: 4, radius: 1.0 })
}

type Outcome = Result<(bool, String)>;

fn c1_closed_forms() -> Outcome {
    let s = f64::sqrt;
    let cases = [
        (ProductFamily::S2xS2, vec![1.0], 192.0 * PI * PI),
        (ProductFamily::S1xS3, vec![1.0 / s(3.0)], 36.0 * s(3.0) * PI.powi(3)),
        (ProductFamily::S1S1S2, vec![s(0.5), s(0.5)], 96.0 * PI.powi(3)),
        (ProductFamily::Torus4, vec![1.0; 3], 48.0 * PI.powi(4)),
        (ProductFamily::S1xS3, vec![s(0.6)], 16.0 * s(15.0) * PI.powi(3)),
        (ProductFamily::S1S1S2, vec![s(0.5), s(0.9)], 128.0 * s(5.0) * PI.powi(3) / 3.0),
        (ProductFamily::Torus4, vec![s(5.0 / 9.0); 3], 64.0 * s(5.0) * PI.powi(4) / 3.0),
    ];
    let mut worst: f64 = 0.0;
    for (f, t, target) in cases {
        worst = worst.max(rel(family_energy_closed(f, &t)?, target));
    }
    Ok((worst < 1e-9, format!("max rel err {worst:.2e} (tol 1e-9)")))
}

fn random_radii(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.3..1.0)).collect();
    let norm = raw.iter().map(|r| r * r).sum::<f64>().sqrt();
    raw.iter().map(|r| r / norm).collect()
}

fn c2_quadrature_vs_closed(cfg: &RunConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for f in ProductFamily::ALL {
        for _ in 0..10 {
            let radii = random_radii(&mut rng, f.dims().len());
            let chart = sphere_family(&f.dims(), &radii)?;
            let quad = ebar(&chart, chart.natural_background(), 32)?;
            worst = worst.max(rel(quad, family_energy_radii(f, &radii)?));
        }
    }
    Ok((worst < 1e-6, format!("max rel err {worst:.2e} over 40 charts (tol 1e-6)")))
}

/// Radii squared sorted within each block of equal-dimensional factors.
fn canonical(family: ProductFamily, r2: &[f64]) -> Vec<f64> {
    let dims = family.dims();
    let mut out = r2.to_vec();
    let mut start = 0;
    while start < dims.len() {
        let end = (start..dims.len()).find(|&i| dims[i] != dims[start]).unwrap_or(dims.len());
        out[start..end].sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        start = end;
    }
    out
}

fn c3_critical_points() -> Outcome {
    let q = 1.0 / 24.0;
    let expected: [(ProductFamily, Vec<f64>, Option<Classification>); 7] = [
        (ProductFamily::S2xS2, vec![0.5, 0.5], None),
        (ProductFamily::S1xS3, vec![0.25, 0.75], Some(Classification::Max)),
        (ProductFamily::S1xS3, vec![3.0 / 8.0, 5.0 / 8.0], Some(Classification::Min)),
        (ProductFamily::S1S1S2, vec![0.25, 0.25, 0.5], None),
        (ProductFamily::S1S1S2, vec![5.0 * q, 9.0 * q, 10.0 * q], None),
        (ProductFamily::Torus4, vec![0.25; 4], None),
        (ProductFamily::Torus4, vec![5.0 * q, 5.0 * q, 5.0 * q, 9.0 * q], None),
    ];
    let found: Vec<_> = ProductFamily::ALL.iter().map(|&f| (f, find_critical_points(f))).collect();
    let mut missing = Vec::new();
    let mut grad_max: f64 = 0.0;
    for (family, r2, class) in &expected {
        let target = canonical(*family, r2);
        let list = &found.iter().find(|(f, _)| f == family).expect("all families").1;
        let hit = list.iter().find(|cp| {
            canonical(*family, &cp.radii_squared).iter().zip(&target).all(|(a, b)| (a - b).abs() < 1e-8)
                && class.map_or(true, |c| cp.classification == c)
        });
        match hit {
            Some(cp) => grad_max = grad_max.max(cp.grad_norm),
            None => missing.push(format!("{}{:?}", family.tag(), r2)),
        }
    }
    let pass = missing.is_empty() && grad_max < 1e-10;
    let total: usize = found.iter().map(|(_, l)| l.len()).sum();
    let detail = if missing.is_empty() {
        format!("7/7 recovered ({total} points found), max |grad| {grad_max:.1e}")
    } else {
        format!("missing {}", missing.join(", "))
    };
    Ok((pass, detail))
}

fn c4_relations(cfg: &RunConfig) -> Outcome {
    let ebar_s4 = ebar(&s4()?, Background::Euclidean(5), cfg.resolution)?;
    let s2 = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 })?;
    let e_s2 = crate::energy::energy_at(&s2, Background::Euclidean(3), cfg.resolution)?.0;
    let rows = relation_residuals(20, cfg.seed, ebar_s4, e_s2)?;
    let worst = rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    Ok((worst < 1e-9, format!("5 relations, max residual {worst:.2e} (tol 1e-9)")))
}

/// Stereographic images of `S¹×S³` come within `0.27` of the projection
/// point, so their conformal factor spans two decades and needs a finer rule.
const CONFORMAL_RESOLUTION: usize = 64;

fn c5_conformal(cfg: &RunConfig) -> Outcome {
    let s = f64::sqrt;
    let res = cfg.resolution.max(CONFORMAL_RESOLUTION);
    let charts = [
        sphere_family(&[2, 2], &[s(0.5), s(0.5)])?,
        sphere_family(&[2, 2], &[0.6, 0.8])?,
        sphere_family(&[1, 3], &[0.5, s(0.75)])?,
        sphere_family(&[1, 3], &[s(3.0 / 8.0), s(5.0 / 8.0)])?,
        sphere_family(&[1, 1, 2], &[0.5, 0.5, s(0.5)])?,
        sphere_family(&[1, 1, 1, 1], &[0.5; 4])?,
    ];
    let mut stereo: f64 = 0.0;
    for c in &charts {
        stereo = stereo.max(conformal_invariance_residual(c, &AmbientMap::Stereographic, res)?);
    }
    let mut corr: f64 = 0.0;
    for (j, k, r1, r2) in [(2, 2, 0.6, 0.8), (1, 3, 0.5, s(0.75)), (3, 1, s(0.75), 0.5), (1, 1, s(0.5), s(0.5))] {
        corr = corr.max(anchor_correspondence_residual(j, k, r1, r2, 8)?);
    }
    let inversion = AmbientMap::Inversion { center: vec![0.0, 0.0, 4.0, 0.0, 0.0], radius: 2.0 };
    let mobius = conformal_invariance_residual(&anchor(2, 2, SQRT_2, 1.0)?, &inversion, res)?;
    let pass = stereo < 1e-5 && corr < 1e-10 && mobius < 1e-5;
    Ok((pass, format!("stereographic {stereo:.1e}, correspondence {corr:.1e}, inversion {mobius:.1e}")))
}

fn c6_obstruction() -> Outcome {
    let s = f64::sqrt;
    let e5 = Background::Euclidean(5);
    let mut worst: f64 = 0.0;
    for (j, k, big_r, r) in [(2, 2, s(2.0), 1.0), (3, 1, 2.0, 1.0), (1, 3, 2.0, s(3.0)), (1, 3, s(8.0), s(5.0)), (3, 1, s(8.0), s(3.0))] {
        worst = worst.max(obstruction_norms(&anchor(j, k, big_r, r)?, e5, 12)?.scaled_sup);
    }
    worst = worst.max(obstruction_norms(&s4()?, e5, 8)?.scaled_sup);
    let off = obstruction_norms(&anchor(2, 2, s(2.0), 1.2)?, e5, 12)?.scaled_sup;
    let s2 = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 })?;
    let k2_sphere = obstruction_norms(&s2, Background::Euclidean(3), 16)?.sup;
    let clifford = sphere_family(&[1, 1], &[s(0.5), s(0.5)])?;
    let k2_clifford = obstruction_norms(&clifford, clifford.natural_background(), 16)?.sup;
    let k2 = k2_sphere.max(k2_clifford);
    let pass = worst < 1e-6 && off > 1e-2 && k2 < 1e-10;
    Ok((pass, format!("critical {worst:.1e}, perturbed {off:.1e}, k=2 {k2:.1e}")))
}

fn c7_first_variation() -> Outcome {
    let chart = anchor(2, 2, SQRT_2, 1.1)?;
    let fv = first_variation_residual(&chart, &VariationField::FamilyNormal, Background::Euclidean(5), 0.02, 16)?;
    let order = fv.order.unwrap_or(f64::NAN);
    let pass = (1.9..=2.1).contains(&order) && fv.residual < 1e-5;
    Ok((pass, format!("order {order:.3}, residual {:.1e}", fv.residual)))
}

fn c8_jacobi() -> Outcome {
    let s4 = jacobi_spectrum(Surface::S4, 2)?;
    let sxs = jacobi_spectrum(Surface::S2xS2, 2)?;
    let rows = |t: &crate::variation::SpectrumTable, n: usize| t.rows.iter().take(n).map(|r| (r.lambda, r.mult)).collect::<Vec<_>>();
    let negatives = |t: &crate::variation::SpectrumTable| t.rows.iter().filter(|r| r.cj < 0).count();
    let pass = rows(&s4, 3) == [(-4, 1), (0, 5), (6, 14)]
        && rows(&sxs, 4) == [(-8, 1), (-4, 6), (0, 9), (4, 10)]
        && s4.j_kernel_dim == 6
        && sxs.j_kernel_dim == 15
        && negatives(&sxs) == 1
        && negatives(&s4) == 0;
    Ok((pass, format!("kernels {} and {}, negative rows {} and {}", s4.j_kernel_dim, sxs.j_kernel_dim, negatives(&s4), negatives(&sxs))))
}

fn c9_second_variation(cfg: &RunConfig) -> Outcome {
    let sv = second_variation_family_check(cfg.resolution, 1e-3)?;
    let target = second_variation_target();
    let (fd, op) = (rel(sv.fd_value, target), rel(sv.operator_value, target));
    Ok((fd < 1e-4 && op < 1e-10, format!("fd rel err {fd:.1e}, operator rel err {op:.1e}")))
}

fn c10_asymptotics() -> Outcome {
    let fit = asymptotic_fit(&[20.0, 40.0, 80.0, 160.0])?;
    let fit_err = rel(fit.coefficient, fit.target);
    let l0 = lemma_integral(0, 1, 1e4)?;
    let l2 = lemma_integral(2, 3, 1e4)?;
    let lemma = (l0.value - 256.0 / 315.0).abs().max((l2.value - 32.0 / 315.0).abs());
    let a: Vec<f64> = (0..20).map(|i| 0.1 * 1.35f64.powi(i)).collect();
    let s: Vec<f64> = (0..20).map(|i| -0.95 + 0.1 * i as f64).collect();
    let transcription = transcription_residual(&a, &s)?;
    let unit = rel(dilated_energy_closed(1.0, 24)?, 192.0 * PI * PI);
    let pass = fit_err < 0.01 && lemma < 1e-3 && transcription < 1e-8 && unit < 1e-8;
    Ok((
        pass,
        format!("fit {:.3} vs {:.3} ({fit_err:.1e}), lemma {lemma:.1e}, transcription {transcription:.1e}", fit.coefficient, fit.target),
    ))
}

fn c11_ellipsoids(cfg: &RunConfig) -> Outcome {
    let e = |a: f64| -> Result<f64> {
        let c = make_family_chart(Family::Ellipsoid { a })?;
        ebar(&c, Background::Euclidean(5), cfg.resolution)
    };
    let (e05, e1, e2, e5) = (e(0.5)?, e(1.0)?, e(2.0)?, e(5.0)?);
    let round = rel(e1, 128.0 * PI * PI);
    let pass = round < 1e-6 && e05 > e1 && e2 > e1 && e5 > e2;
    Ok((pass, format!("E(1) rel err {round:.1e}; E(0.5)={e05:.1}, E(1)={e1:.1}, E(2)={e2:.1}, E(5)={e5:.1}")))
}

fn c12_unbounded() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for f in ProductFamily::ALL {
        let scan = boundedness_scan(f, 0.02, 50.0, 2000)?;
        let mut max = scan.max;
        if f == ProductFamily::S2xS2 {
            // the S²×S² product family is bounded above by 192π²; above, the
            // dilated anchor rings of the same topology take over
            max = max.max(dilated_energy_closed(50.0, 24)?);
        }
        pass &= max > 1e4 && scan.min < -1e4;
        parts.push(format!("{} [{:.1e}, {:.1e}]", f.tag(), scan.min, max));
    }
    Ok((pass, parts.join(", ")))
}

fn c13_gauss_bonnet(cfg: &RunConfig) -> Outcome {
    let s = f64::sqrt;
    let charts = [
        s4()?,
        sphere_family(&[2, 2], &[s(0.5), s(0.5)])?,
        sphere_family(&[2, 2], &[0.6, 0.8])?,
        sphere_family(&[2, 2], &[0.3, s(0.91)])?,
        anchor(1, 3, 2.0, 1.0)?,
        anchor(3, 1, 2.0, 1.0)?,
        sphere_family(&[1, 3], &[0.5, s(0.75)])?,
        sphere_family(&[1, 1, 1, 1], &[0.5; 4])?,
    ];
    let mut worst: f64 = 0.0;
    for c in &charts {
        worst = worst.max(gauss_bonnet(c, cfg.resolution)?.residual);
    }
    Ok((worst < 1e-5, format!("{} charts, max residual {worst:.1e} (tol 1e-5)", charts.len())))
}

/// Closed hypersurfaces of `ℝ⁵` used by corpus-wide checks.
pub fn euclidean_corpus() -> Result<Vec<ImmersionChart>> {
    let s = f64::sqrt;
    Ok(vec![
        s4()?,
        anchor(2, 2, s(2.0), 1.0)?,
        anchor(2, 2, s(2.0), 1.3)?,
        anchor(3, 1, 2.0, 1.0)?,
        anchor(1, 3, 2.0, s(3.0))?,
        anchor(1, 3, s(8.0), s(5.0))?,
        make_family_chart(Family::DilatedAnchor { big_r: 1.0, r: DILATED_R, a: 2.0 })?,
        make_family_chart(Family::DilatedAnchor { big_r: 1.0, r: DILATED_R, a: 0.5 })?,
        make_family_chart(Family::Ellipsoid { a: 2.0 })?,
    ])
}

fn c14_trace_free(cfg: &RunConfig) -> Outcome {
    let mut elo: f64 = 0.0;
    let mut lowest = f64::INFINITY;
    for c in euclidean_corpus()? {
        let m = modified_energy(&c, Background::Euclidean(5), 4.0 / 3.0, cfg.resolution)?;
        elo = elo.max((m.ebar - m.ebar_trace_free).abs() / m.ebar.abs().max(1.0));
        lowest = lowest.min(m.value);
    }
    Ok((elo < 1e-8 && lowest >= -1e-8, format!("max rel diff {elo:.1e}, min modified energy {lowest:.1}")))
}

fn c15_linearization() -> Outcome {
    let mut ratios = Vec::new();
    for phi in ["cos1000", "cos1000+cos0100"] {
        let c = make_family_chart(Family::PeriodicGraph { eps: 1e-3, phi: parse_trig(phi)? })?;
        ratios.push(leading_term_check(&c, 4)?.ratio);
    }
    let pass = ratios.iter().all(|r| (3.6..=4.4).contains(r));
    Ok((pass, format!("ratios {:.4}, {:.4} (range [3.6, 4.4])", ratios[0], ratios[1])))
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u8, cfg: &RunConfig) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => c1_closed_forms(),
        2 => c2_quadrature_vs_closed(cfg),
        3 => c3_critical_points(),
        4 => c4_relations(cfg),
        5 => c5_conformal(cfg),
        6 => c6_obstruction(),
        7 => c7_first_variation(),
        8 => c8_jacobi(),
        9 => c9_second_variation(cfg),
        10 => c10_asymptotics(),
        11 => c11_ellipsoids(cfg),
        12 => c12_unbounded(),
        13 => c13_gauss_bonnet(cfg),
        14 => c14_trace_free(cfg),
        15 => c15_linearization(),
        other => Err(crate::error::Error::Config(format!("no criterion {other}"))),
    };
    let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    let name = CRITERIA.iter().find(|(i, _)| *i == id).map_or("unknown", |(_, n)| *n);
    CriterionResult { id, name, pass, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Vec<CriterionResult> {
    let ids: Vec<u8> = match suite {
        Suite::All => CRITERIA.iter().map(|(i, _)| *i).collect(),
        Suite::Fast => FAST.to_vec(),
    };
    ids.into_iter().map(|id| run_criterion(id, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sorts_within_blocks() {
        assert_eq!(canonical(ProductFamily::S1S1S2, &[0.4, 0.2, 0.4]), vec![0.2, 0.4, 0.4]);
        assert_eq!(canonical(ProductFamily::S1xS3, &[0.75, 0.25]), vec![0.75, 0.25]);
        assert_eq!(canonical(ProductFamily::Torus4, &[0.4, 0.1, 0.3, 0.2]), vec![0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(16, &RunConfig::default());
        assert!(!r.pass);
        assert!(r.line().contains("FAIL"));
    }

    #[test]
    fn closed_form_criteria_pass() {
        let cfg = RunConfig::default();
        for id in [1, 8, 9] {
            let r = run_criterion(id, &cfg);
            assert!(r.pass, "{}", r.line());
        }
    }

    #[test]
    fn suites_parse() {
        assert_eq!("fast".parse::<Suite>().unwrap(), Suite::Fast);
        assert!("quick".parse::<Suite>().is_err());
    }
}
