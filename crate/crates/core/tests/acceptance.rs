//! Acceptance criteria 1-15. Each check prints one PASS/FAIL line; the test
//! fails at the end if any criterion failed.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use willmore_core::asymptotics::{asymptotic_fit, dilated_energy_closed, dilated_integrand_geometric, dilated_integrand_i, lemma_integral};
use willmore_core::chart::parse_trig;
use willmore_core::conformal::{anchor_correspondence_residual, conformal_invariance_residual, AmbientMap};
use willmore_core::energy::{energy_at, gauss_bonnet, modified_energy};
use willmore_core::families::{
    boundedness_scan, family_energy_closed, family_energy_radii, find_critical_points, relation_residuals, Classification,
    ProductFamily,
};
use willmore_core::obstruction::{leading_term_check, obstruction_norms};
use willmore_core::variation::{first_variation_residual, jacobi_spectrum, second_variation_family_check, Surface, VariationField};
use willmore_core::{make_family_chart, Background, Family, ImmersionChart};

const RES: usize = 32;
const E5: Background = Background::Euclidean(5);

fn s(x: f64) -> f64 {
    x.sqrt()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn products(dims: &[usize], radii: &[f64]) -> ImmersionChart {
    make_family_chart(Family::ProductSpheres { dims: dims.to_vec(), radii: radii.to_vec() }).unwrap()
}

fn anchor(j: usize, k: usize, big_r: f64, r: f64) -> ImmersionChart {
    make_family_chart(Family::Anchor { j, k, big_r, r }).unwrap()
}

fn s4() -> ImmersionChart {
    make_family_chart(Family::RoundSphere { k: 4, radius: 1.0 }).unwrap()
}

fn ebar(c: &ImmersionChart, res: usize) -> f64 {
    willmore_core::energy::ebar(c, c.natural_background(), res).unwrap()
}

fn crit1() -> (bool, String) {
    let cases = [
        (ProductFamily::S2xS2, vec![1.0], 192.0 * PI * PI),
        (ProductFamily::S1xS3, vec![1.0 / s(3.0)], 36.0 * s(3.0) * PI.powi(3)),
        (ProductFamily::S1S1S2, vec![s(0.5); 2], 96.0 * PI.powi(3)),
        (ProductFamily::Torus4, vec![1.0; 3], 48.0 * PI.powi(4)),
        (ProductFamily::S1xS3, vec![s(3.0 / 5.0)], 16.0 * s(15.0) * PI.powi(3)),
        (ProductFamily::S1S1S2, vec![s(5.0 / 10.0), s(9.0 / 10.0)], 128.0 * s(5.0) * PI.powi(3) / 3.0),
        (ProductFamily::Torus4, vec![s(5.0 / 9.0); 3], 64.0 * s(5.0) * PI.powi(4) / 3.0),
    ];
    let worst = cases.iter().map(|(f, t, v)| rel(family_energy_closed(*f, t).unwrap(), *v)).fold(0.0, f64::max);
    (worst < 1e-9, format!("max rel err {worst:.1e}"))
}

fn crit2() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for f in ProductFamily::ALL {
        for _ in 0..10 {
            let raw: Vec<f64> = f.dims().iter().map(|_| rng.gen_range(0.25..1.0)).collect();
            let n = raw.iter().map(|r| r * r).sum::<f64>().sqrt();
            let radii: Vec<f64> = raw.iter().map(|r| r / n).collect();
            let q = ebar(&products(&f.dims(), &radii), RES);
            worst = worst.max(rel(q, family_energy_radii(f, &radii).unwrap()));
        }
    }
    (worst < 1e-6, format!("40 random charts, max rel err {worst:.1e}"))
}

fn crit3() -> (bool, String) {
    let w = 1.0 / 24.0;
    let targets: Vec<(ProductFamily, Vec<f64>, Option<Classification>)> = vec![
        (ProductFamily::S2xS2, vec![0.5, 0.5], None),
        (ProductFamily::S1xS3, vec![0.25, 0.75], Some(Classification::Max)),
        (ProductFamily::S1xS3, vec![0.375, 0.625], Some(Classification::Min)),
        (ProductFamily::S1S1S2, vec![0.25, 0.25, 0.5], None),
        (ProductFamily::S1S1S2, vec![5.0 * w, 9.0 * w, 10.0 * w], None),
        (ProductFamily::Torus4, vec![0.25; 4], None),
        (ProductFamily::Torus4, vec![5.0 * w, 5.0 * w, 5.0 * w, 9.0 * w], None),
    ];
    let mut hits = 0;
    for (f, r2, class) in &targets {
        let pts = find_critical_points(*f);
        let dims = f.dims();
        // factors of equal dimension may be permuted
        let found = pts.iter().any(|p| {
            let mut perm: Vec<usize> = (0..r2.len()).collect();
            let matches = |perm: &[usize]| {
                perm.iter().enumerate().all(|(i, &j)| dims[i] == dims[j] && (p.radii_squared[j] - r2[i]).abs() < 1e-8)
            };
            let mut ok = matches(&perm);
            while !ok && next_permutation(&mut perm) {
                ok = matches(&perm);
            }
            ok && p.grad_norm < 1e-10 && class.map_or(true, |c| p.classification == c)
        });
        hits += found as usize;
    }
    let s1xs3 = find_critical_points(ProductFamily::S1xS3);
    let max_at = s1xs3.iter().find(|p| p.classification == Classification::Max).map(|p| p.t[0]);
    let ok_max = max_at.is_some_and(|t| (t - 1.0 / s(3.0)).abs() < 1e-8);
    (hits == targets.len() && ok_max, format!("{hits}/{} radii sets, S1xS3 max at t={}", targets.len(), max_at.map_or("none".into(), |t| format!("{t:.12}"))))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("pivot");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn crit4() -> (bool, String) {
    let e_s4 = ebar(&s4(), RES);
    let s2 = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 }).unwrap();
    let e_s2 = energy_at(&s2, Background::Euclidean(3), RES).unwrap().0;
    let rows = relation_residuals(20, 99, e_s4, e_s2).unwrap();
    let expected = [PI / 2.0, 4.0 * PI / (3.0 * s(3.0)), PI * PI / 4.0, 3.0 * PI * PI / 8.0, PI / 2.0];
    let consts_ok = rows.iter().zip(expected).all(|(r, c)| (r.constant - c).abs() < 1e-15);
    let worst = rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    (consts_ok && worst < 1e-9, format!("5 relations x 20 samples, max residual {worst:.1e}"))
}

fn crit5() -> (bool, String) {
    let charts = [
        products(&[2, 2], &[s(0.5), s(0.5)]),
        products(&[2, 2], &[0.8, 0.6]),
        products(&[1, 3], &[0.5, s(0.75)]),
        products(&[1, 3], &[s(0.375), s(0.625)]),
        products(&[1, 1, 2], &[0.5, 0.5, s(0.5)]),
        products(&[1, 1, 1, 1], &[0.5; 4]),
    ];
    let stereo = charts
        .iter()
        .map(|c| conformal_invariance_residual(c, &AmbientMap::Stereographic, 64).unwrap())
        .fold(0.0, f64::max);
    let corr = [(2, 2, 0.6, 0.8), (3, 1, s(0.5), s(0.5)), (1, 3, 0.8, 0.6), (1, 1, s(0.5), s(0.5))]
        .iter()
        .map(|&(j, k, a, b)| anchor_correspondence_residual(j, k, a, b, 8).unwrap())
        .fold(0.0, f64::max);
    let inv = AmbientMap::Inversion { center: vec![0.0, 0.0, 4.0, 0.0, 0.0], radius: 2.0 };
    let mob = conformal_invariance_residual(&anchor(2, 2, SQRT_2, 1.0), &inv, 64).unwrap();
    (stereo < 1e-5 && corr < 1e-10 && mob < 1e-5, format!("stereographic {stereo:.1e}, correspondence {corr:.1e}, inversion {mob:.1e}"))
}

fn crit6() -> (bool, String) {
    let critical = [(2, 2, s(2.0), 1.0), (3, 1, 2.0, 1.0), (1, 3, 2.0, s(3.0)), (1, 3, s(8.0), s(5.0)), (3, 1, s(8.0), s(3.0))];
    let mut worst = critical
        .iter()
        .map(|&(j, k, a, b)| obstruction_norms(&anchor(j, k, a, b), E5, 12).unwrap().scaled_sup)
        .fold(0.0, f64::max);
    worst = worst.max(obstruction_norms(&s4(), E5, 8).unwrap().scaled_sup);
    let off = obstruction_norms(&anchor(2, 2, s(2.0), 1.2), E5, 12).unwrap().scaled_sup;
    let s2 = make_family_chart(Family::RoundSphere { k: 2, radius: 1.0 }).unwrap();
    let cl = products(&[1, 1], &[s(0.5), s(0.5)]);
    let k2 = obstruction_norms(&s2, Background::Euclidean(3), 16)
        .unwrap()
        .sup
        .max(obstruction_norms(&cl, cl.natural_background(), 16).unwrap().sup);
    (worst < 1e-6 && off > 1e-2 && k2 < 1e-10, format!("critical {worst:.1e}, T22(sqrt2,1.2) {off:.1e}, k=2 {k2:.1e}"))
}

fn crit7() -> (bool, String) {
    let fv = first_variation_residual(&anchor(2, 2, SQRT_2, 1.1), &VariationField::FamilyNormal, E5, 0.02, 16).unwrap();
    let order = fv.order.unwrap_or(f64::NAN);
    ((1.9..=2.1).contains(&order) && fv.residual < 1e-5, format!("order {order:.3}, residual {:.1e}", fv.residual))
}

fn crit8() -> (bool, String) {
    let a = jacobi_spectrum(Surface::S4, 2).unwrap();
    let b = jacobi_spectrum(Surface::S2xS2, 2).unwrap();
    let rows = |t: &willmore_core::variation::SpectrumTable| t.rows.iter().map(|r| (r.lambda, r.mult)).collect::<Vec<_>>();
    let neg = |t: &willmore_core::variation::SpectrumTable| t.rows.iter().filter(|r| r.cj < 0).count();
    let pass = rows(&a) == [(-4, 1), (0, 5), (6, 14)]
        && rows(&b)[..4] == [(-8, 1), (-4, 6), (0, 9), (4, 10)]
        && a.j_kernel_dim == 6
        && b.j_kernel_dim == 15
        && neg(&a) == 0
        && neg(&b) == 1;
    (pass, format!("kernel dims {} / {}, negative rows {} / {}", a.j_kernel_dim, b.j_kernel_dim, neg(&a), neg(&b)))
}

fn crit9() -> (bool, String) {
    // d²/dθ² of −16π²(cot²θ + tan²θ − 14) at π/4
    let f = |t: f64| -16.0 * PI * PI * (1.0 / t.tan().powi(2) + t.tan().powi(2) - 14.0);
    let h = 1e-4;
    let oracle = (f(FRAC_PI_4 + h) - 2.0 * f(FRAC_PI_4) + f(FRAC_PI_4 - h)) / (h * h);
    let sv = second_variation_family_check(RES, 1e-3).unwrap();
    let target = -512.0 * PI * PI;
    let pass = rel(sv.fd_value, target) < 1e-4 && rel(oracle, target) < 1e-4 && rel(sv.operator_value, -128.0 * 4.0 * PI * PI) < 1e-10;
    (pass, format!("fd {:.4}, operator {:.4}, target {target:.4}", sv.fd_value, sv.operator_value))
}

fn beta_limit(i: u32) -> f64 {
    // ∫ t^i (1+t²)^{-11/2} dt over ℝ by the substitution t = tan u
    let n = 4000;
    let h = PI / n as f64;
    (0..n)
        .map(|m| {
            let u = -PI / 2.0 + (m as f64 + 0.5) * h;
            u.tan().powi(i as i32) * u.cos().powi(9) * h
        })
        .sum()
}

fn crit10() -> (bool, String) {
    let fit = asymptotic_fit(&[20.0, 40.0, 80.0, 160.0]).unwrap();
    let target = 256.0 * PI * PI / 35.0;
    let fit_err = rel(fit.coefficient, target);
    let l01 = lemma_integral(0, 1, 1e4).unwrap().value;
    let l23 = lemma_integral(2, 3, 1e4).unwrap().value;
    let b0 = beta_limit(0);
    let b2 = beta_limit(2);
    let lemma_ok = (b0 - 256.0 / 315.0).abs() < 1e-9 && (b2 - 32.0 / 315.0).abs() < 1e-9;
    let lemma = (l01 - 256.0 / 315.0).abs().max((l23 - 32.0 / 315.0).abs());
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let a = 0.1 * 1.35f64.powi(i);
        for j in 0..20 {
            let sv = -0.95 + 0.1 * j as f64;
            let t = dilated_integrand_i(a, sv).unwrap();
            let g = dilated_integrand_geometric(a, sv).unwrap();
            worst = worst.max((t - g).abs() / g.abs());
        }
    }
    let unit = rel(dilated_energy_closed(1.0, 24).unwrap(), 192.0 * PI * PI);
    let pass = fit_err < 0.01 && lemma_ok && lemma < 1e-3 && worst < 1e-8 && unit < 1e-8;
    (pass, format!("fit {:.4} ({fit_err:.1e}), lemma {lemma:.1e}, transcription {worst:.1e}", fit.coefficient))
}

fn crit11() -> (bool, String) {
    let e = |a: f64| ebar(&make_family_chart(Family::Ellipsoid { a }).unwrap(), RES);
    let (e05, e1, e2, e5) = (e(0.5), e(1.0), e(2.0), e(5.0));
    let pass = rel(e1, 128.0 * PI * PI) < 1e-6 && e05 > e1 && e2 > e1 && e5 > e2;
    (pass, format!("E(0.5)={e05:.2} E(1)={e1:.2} E(2)={e2:.2} E(5)={e5:.2}"))
}

fn crit12() -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for f in ProductFamily::ALL {
        let scan = boundedness_scan(f, 0.02, 50.0, 2000).unwrap();
        let mut max = scan.max;
        if f == ProductFamily::S2xS2 {
            // the product family itself never exceeds 192π²
            assert!(scan.max <= 192.0 * PI * PI * (1.0 + 1e-12));
            max = max.max(dilated_energy_closed(50.0, 24).unwrap());
        }
        pass &= max > 1e4 && scan.min < -1e4;
        parts.push(format!("{}:[{:.1e},{:.1e}]", f.tag(), scan.min, max));
    }
    (pass, parts.join(" "))
}

fn crit13() -> (bool, String) {
    let charts = [
        (s4(), 2),
        (products(&[2, 2], &[s(0.5), s(0.5)]), 4),
        (products(&[2, 2], &[0.6, 0.8]), 4),
        (products(&[2, 2], &[0.28, s(1.0 - 0.28 * 0.28)]), 4),
        (anchor(1, 3, 2.0, 1.0), 0),
        (anchor(1, 3, s(8.0), s(5.0)), 0),
        (products(&[1, 3], &[0.5, s(0.75)]), 0),
        (products(&[1, 1, 1, 1], &[0.5; 4]), 0),
    ];
    let mut worst: f64 = 0.0;
    for (c, chi) in &charts {
        let g = gauss_bonnet(c, RES).unwrap();
        assert_eq!(g.chi, *chi);
        worst = worst.max((g.integral - 32.0 * PI * PI * *chi as f64).abs());
    }
    (worst < 1e-5, format!("{} charts, max residual {worst:.1e}", charts.len()))
}

fn crit14() -> (bool, String) {
    let corpus = vec![
        s4(),
        anchor(2, 2, s(2.0), 1.0),
        anchor(2, 2, s(2.0), 1.3),
        anchor(3, 1, 2.0, 1.0),
        anchor(1, 3, 2.0, s(3.0)),
        make_family_chart(Family::DilatedAnchor { big_r: 1.0, r: 1.0 / SQRT_2, a: 3.0 }).unwrap(),
        make_family_chart(Family::Ellipsoid { a: 0.5 }).unwrap(),
    ];
    let mut elo: f64 = 0.0;
    let mut low = f64::INFINITY;
    for c in &corpus {
        let m = modified_energy(c, E5, 4.0 / 3.0, RES).unwrap();
        elo = elo.max(rel(m.ebar_trace_free, m.ebar));
        low = low.min(m.ebar + 4.0 / 3.0 * m.l0_quartic);
    }
    (elo < 1e-8 && low >= -1e-8, format!("max rel diff {elo:.1e}, min E+4/3|L0|^4 {low:.2}"))
}

fn crit15() -> (bool, String) {
    let mut ratios = Vec::new();
    for phi in ["cos1000", "cos1000+cos0100"] {
        let c = make_family_chart(Family::PeriodicGraph { eps: 1e-3, phi: parse_trig(phi).unwrap() }).unwrap();
        ratios.push(leading_term_check(&c, 4).unwrap().ratio);
    }
    (ratios.iter().all(|r| (3.6..=4.4).contains(r)), format!("ratios {ratios:.4?}"))
}

// Runs without the libtest harness so the per-criterion lines are never captured.
fn main() {
    let checks: [(u8, fn() -> (bool, String)); 15] = [
        (1, crit1),
        (2, crit2),
        (3, crit3),
        (4, crit4),
        (5, crit5),
        (6, crit6),
        (7, crit7),
        (8, crit8),
        (9, crit9),
        (10, crit10),
        (11, crit11),
        (12, crit12),
        (13, crit13),
        (14, crit14),
        (15, crit15),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (id, check) in checks {
        let t = Instant::now();
        let (pass, detail) = check();
        println!("criterion {id:>2}: {} {detail} ({:.1}s)", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
        if !pass {
            failed.push(id);
        }
    }
    println!("total {:.1}s, {} of 15 passed", start.elapsed().as_secs_f64(), 15 - failed.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
