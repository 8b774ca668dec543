//! Closed-form energies of products of spheres, their critical points,
//! the relations between families, and boundedness scans.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductFamily {
    S2xS2,
    S1xS3,
    S1S1S2,
    Torus4,
}

impl ProductFamily {
    pub const ALL: [ProductFamily; 4] = [ProductFamily::S2xS2, ProductFamily::S1xS3, ProductFamily::S1S1S2, ProductFamily::Torus4];

    pub fn arity(self) -> usize {
        match self {
            ProductFamily::S2xS2 | ProductFamily::S1xS3 => 1,
            ProductFamily::S1S1S2 => 2,
            ProductFamily::Torus4 => 3,
        }
    }

    /// Sphere dimensions of the factors.
    pub fn dims(self) -> Vec<usize> {
        match self {
            ProductFamily::S2xS2 => vec![2, 2],
            ProductFamily::S1xS3 => vec![1, 3],
            ProductFamily::S1S1S2 => vec![1, 1, 2],
            ProductFamily::Torus4 => vec![1, 1, 1, 1],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ProductFamily::S2xS2 => "s2xs2",
            ProductFamily::S1xS3 => "s1xs3",
            ProductFamily::S1S1S2 => "s1s1s2",
            ProductFamily::Torus4 => "torus4",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        ProductFamily::ALL
            .into_iter()
            .find(|f| f.tag() == tag)
            .ok_or_else(|| Error::Config(format!("unknown product family '{tag}' (expected s2xs2, s1xs3, s1s1s2, torus4)")))
    }

    /// Radii on the unit sphere from the ratios `t_i = r_i / r_last`.
    pub fn radii_from_t(self, t: &[f64]) -> Vec<f64> {
        let last = 1.0 / (1.0 + t.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let mut r: Vec<f64> = t.iter().map(|x| x * last).collect();
        r.push(last);
        r
    }

    /// Ratios `t_i = r_i / r_last`.
    pub fn t_from_radii(self, radii: &[f64]) -> Vec<f64> {
        let last = radii[radii.len() - 1];
        radii[..radii.len() - 1].iter().map(|r| r / last).collect()
    }
}

fn check_t(family: ProductFamily, t: &[f64]) -> Result<()> {
    if t.len() != family.arity() {
        return Err(Error::Domain(format!("{} takes {} parameter(s), got {}", family.tag(), family.arity(), t.len())));
    }
    if let Some(x) = t.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("{} needs positive parameters, got {x}", family.tag())));
    }
    Ok(())
}

fn pw(x: &Jet, n: u32) -> Jet {
    let mut out = x.clone();
    for _ in 1..n {
        out = &out * x;
    }
    out
}

/// `Ē` in the ratio parameters, evaluated on jets.
pub fn family_energy_jet(family: ProductFamily, t: &[Jet]) -> Jet {
    match family {
        ProductFamily::S2xS2 => {
            let t2 = t[0].square();
            (&t2 + &t2.recip()).add_scalar(-14.0).scale(-16.0 * PI * PI)
        }
        ProductFamily::S1xS3 => {
            let t2 = t[0].square();
            let num = (&pw(&t2, 2).scale(15.0) + &t2.scale(14.0)).add_scalar(-1.0);
            num.div(&pw(&t[0], 3)).scale(9.0 * PI.powi(3) / 4.0)
        }
        ProductFamily::S1S1S2 => {
            let (a, b) = (&t[0], &t[1]);
            let (a2, b2) = (a.square(), b.square());
            let (a4, b4) = (a2.square(), b2.square());
            let mut br = (&a4 * &b4).scale(16.0);
            br += &(&(&a4 * &b2) + &(&b4 * &a2)).scale(-56.0);
            br += &(&a4 + &b4).scale(9.0);
            br += &(&a2 * &b2).scale(-14.0);
            br.div(&pw(&(a * b), 3)).scale(-PI.powi(3))
        }
        ProductFamily::Torus4 => {
            let s2: Vec<Jet> = t.iter().map(Jet::square).collect();
            let s4: Vec<Jet> = s2.iter().map(Jet::square).collect();
            let (i, j, k) = (0, 1, 2);
            let mut br = (&(&s4[i] * &s4[j]) * &s4[k]).scale(9.0);
            // Sym over S₃ of a monomial with exponents (4,4,0), (4,4,2), (4,2,2)
            let sym44 = &(&(&s4[i] * &s4[j]) + &(&s4[i] * &s4[k])) + &(&s4[j] * &s4[k]);
            let sym442 = &(&(&(&s4[i] * &s4[j]) * &s2[k]) + &(&(&s4[i] * &s4[k]) * &s2[j])) + &(&(&s4[j] * &s4[k]) * &s2[i]);
            let p = &(&s2[i] * &s2[j]) * &s2[k];
            let sym422 = &(&(&s2[i] + &s2[j]) + &s2[k]) * &p;
            br += &sym44.scale(27.0 / 3.0);
            br += &sym442.scale(-42.0 / 3.0);
            br += &sym422.scale(-42.0 / 3.0);
            br.div(&pw(&(&(&t[0] * &t[1]) * &t[2]), 3)).scale(-PI.powi(4))
        }
    }
}

pub fn family_energy_closed(family: ProductFamily, t: &[f64]) -> Result<f64> {
    check_t(family, t)?;
    let p: Vec<Jet> = t.iter().map(|&x| Jet::constant(t.len(), 0, x)).collect();
    Ok(family_energy_jet(family, &p).value())
}

/// `Ē` as a homogeneous degree-0 function of the radii.
pub fn family_energy_radii(family: ProductFamily, r: &[f64]) -> Result<f64> {
    if r.len() != family.dims().len() || r.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Domain(format!("{} needs {} positive radii", family.tag(), family.dims().len())));
    }
    let v = match family {
        ProductFamily::S2xS2 => {
            let (a, b) = (r[0] * r[0], r[1] * r[1]);
            -16.0 * PI * PI * (a * a + b * b - 14.0 * a * b) / (a * b)
        }
        ProductFamily::S1xS3 => {
            let (a, b) = (r[0], r[1]);
            9.0 * PI.powi(3) / 4.0 * (15.0 * a.powi(4) * b * b + 14.0 * a * a * b.powi(4) - b.powi(6)) / (a * b).powi(3)
        }
        ProductFamily::S1S1S2 => {
            let (a, b, c) = (r[0], r[1], r[2]);
            let br = 16.0 * (a * b).powi(4) * c - 56.0 * (a.powi(4) * b * b + b.powi(4) * a * a) * c.powi(3)
                + (9.0 * (a.powi(4) + b.powi(4)) - 14.0 * (a * b).powi(2)) * c.powi(5);
            -PI.powi(3) / (a * b * c).powi(3) * br
        }
        ProductFamily::Torus4 => {
            let q: Vec<f64> = r.iter().map(|x| x * x).collect();
            let prod: f64 = q.iter().product();
            // Sym(r₁⁴r₂⁴r₃⁴) and Sym(r₁⁴r₂⁴r₃²r₄²)
            let sym444: f64 = (0..4).map(|i| (prod / q[i]).powi(2)).sum::<f64>() / 4.0;
            let mut sym4422 = 0.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    sym4422 += q[i] * q[j] * prod;
                }
            }
            sym4422 /= 6.0;
            -PI.powi(4) / prod.powf(1.5) * (36.0 * sym444 - 84.0 * sym4422)
        }
    };
    Ok(v)
}

/// Value, gradient and Hessian of the closed form.
pub fn family_energy_derivatives(family: ProductFamily, t: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
    check_t(family, t)?;
    let m = t.len();
    let p: Vec<Jet> = (0..m).map(|i| Jet::variable(m, 2, i, t[i])).collect();
    let e = family_energy_jet(family, &p);
    let grad = DVector::from_fn(m, |i, _| {
        let mut d = vec![0; m];
        d[i] = 1;
        e.partial(&d)
    });
    let hess = DMatrix::from_fn(m, m, |i, j| {
        let mut d = vec![0; m];
        d[i] += 1;
        d[j] += 1;
        e.partial(&d)
    });
    Ok((e.value(), grad, hess))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Max,
    Min,
    Saddle,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Max => "max",
            Classification::Min => "min",
            Classification::Saddle => "saddle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub family: ProductFamily,
    pub t: Vec<f64>,
    pub radii: Vec<f64>,
    pub radii_squared: Vec<f64>,
    pub ebar: f64,
    pub grad_norm: f64,
    pub classification: Classification,
}

const GRID: usize = 12;
const START_LO: f64 = 0.1;
const START_HI: f64 = 3.0;
const MERGE_TOL: f64 = 1e-8;

fn newton(family: ProductFamily, start: &[f64]) -> Option<Vec<f64>> {
    let mut t = start.to_vec();
    for _ in 0..200 {
        let (_, g, h) = family_energy_derivatives(family, &t).ok()?;
        if g.norm() < 1e-11 {
            return Some(t);
        }
        let step = h.lu().solve(&g)?;
        let mut s = 1.0;
        // keep iterates in the positive orthant
        while t.iter().zip(step.iter()).any(|(x, d)| x - s * d <= 0.0) {
            s *= 0.5;
            if s < 1e-6 {
                return None;
            }
        }
        for (x, d) in t.iter_mut().zip(step.iter()) {
            *x -= s * d;
        }
        if t.iter().any(|x| !x.is_finite() || *x > 1e3) {
            return None;
        }
    }
    let (_, g, _) = family_energy_derivatives(family, &t).ok()?;
    (g.norm() < 1e-10).then_some(t)
}

fn classify(h: &DMatrix<f64>) -> Classification {
    let ev = h.clone().symmetric_eigen().eigenvalues;
    if ev.iter().all(|&l| l < 0.0) {
        Classification::Max
    } else if ev.iter().all(|&l| l > 0.0) {
        Classification::Min
    } else {
        Classification::Saddle
    }
}

/// Newton from a `12^arity` start grid over `(0.1, 3)`; duplicates merged.
pub fn find_critical_points(family: ProductFamily) -> Vec<CriticalPoint> {
    use rayon::prelude::*;
    let m = family.arity();
    let axis: Vec<f64> = (0..GRID).map(|i| START_LO + (START_HI - START_LO) * (i as f64 + 0.5) / GRID as f64).collect();
    let starts: Vec<Vec<f64>> = (0..GRID.pow(m as u32))
        .map(|mut idx| {
            (0..m)
                .map(|_| {
                    let v = axis[idx % GRID];
                    idx /= GRID;
                    v
                })
                .collect()
        })
        .collect();
    let found: Vec<Vec<f64>> = starts.par_iter().filter_map(|s| newton(family, s)).collect();
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    for t in found {
        if !uniq.iter().any(|u| u.iter().zip(&t).all(|(a, b)| (a - b).abs() < MERGE_TOL)) {
            uniq.push(t);
        }
    }
    uniq.sort_by(|a, b| a.partial_cmp(b).expect("finite critical points"));
    uniq.into_iter()
        .map(|t| {
            let (e, g, h) = family_energy_derivatives(family, &t).expect("validated");
            let radii = family.radii_from_t(&t);
            CriticalPoint {
                family,
                radii_squared: radii.iter().map(|r| r * r).collect(),
                radii,
                ebar: e,
                grad_norm: g.norm(),
                classification: classify(&h),
                t,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub family: ProductFamily,
    pub min: f64,
    pub argmin: Vec<f64>,
    pub max: f64,
    pub argmax: Vec<f64>,
    /// `(t, Ē)` rows along the scanned line.
    pub rows: Vec<(Vec<f64>, f64)>,
}

/// Scans `t₁ ∈ [lo, hi]` with the remaining ratios fixed at 1.
pub fn boundedness_scan(family: ProductFamily, lo: f64, hi: f64, steps: usize) -> Result<ScanResult> {
    if !(lo > 0.0 && hi > lo && steps >= 2) {
        return Err(Error::Domain(format!("scan needs 0 < lo < hi and steps >= 2, got {lo}:{hi} with {steps}")));
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let mut t = vec![1.0; family.arity()];
        t[0] = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
        let e = family_energy_closed(family, &t)?;
        rows.push((t, e));
    }
    let (imin, imax) = rows.iter().enumerate().fold((0, 0), |(a, b), (i, (_, e))| {
        (if *e < rows[a].1 { i } else { a }, if *e > rows[b].1 { i } else { b })
    });
    Ok(ScanResult {
        family,
        min: rows[imin].1,
        argmin: rows[imin].0.clone(),
        max: rows[imax].1,
        argmax: rows[imax].0.clone(),
        rows,
    })
}

/// The k = 2 energy of `S¹(r₁) × S¹(r₂)` in the sphere of radius `√(r₁² + r₂²)`.
pub fn clifford_family_energy_k2(r1: f64, r2: f64) -> f64 {
    -PI * PI / 2.0 * (r1 * r1 + r2 * r2) / (r1 * r2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationResidual {
    pub name: &'static str,
    pub constant: f64,
    /// Largest `|LHS − RHS| / max(|LHS|, |RHS|, 1)` over the samples.
    pub max_residual: f64,
}

/// Checks the five relations between families on random radii. `ebar_s4` and
/// `e_s2` are the quadrature values of the round `S⁴` (k = 4, `Ē`) and round
/// `S²` (k = 2, `ℰ`).
pub fn relation_residuals(sample_count: usize, seed: u64, ebar_s4: f64, e_s2: f64) -> Result<Vec<RelationResidual>> {
    if sample_count == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    let sqrt2 = 2f64.sqrt();
    let sqrt3 = 3f64.sqrt();
    let consts = [PI / 2.0, 4.0 * PI / (3.0 * sqrt3), PI * PI / 4.0, 3.0 * PI * PI / 8.0, PI / 2.0];
    let names = ["torus(r1,r2,r3,r3)~s1s1s2", "torus(r1,r2,r2,r2)~s1xs3", "torus(r1,r1,r2,r2)~s2xs2", "torus(r1,r1,r1,r1)~s4", "clifford~s2"];
    let mut worst = [0.0f64; 5];
    for _ in 0..sample_count {
        let (r1, r2, r3): (f64, f64, f64) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
        let torus = |r: [f64; 4]| family_energy_radii(ProductFamily::Torus4, &r);
        let pairs = [
            (torus([r1, r2, r3, r3])?, family_energy_radii(ProductFamily::S1S1S2, &[r1, r2, sqrt2 * r3])?),
            (torus([r1, r2, r2, r2])?, family_energy_radii(ProductFamily::S1xS3, &[r1, sqrt3 * r2])?),
            (torus([r1, r1, r2, r2])?, family_energy_radii(ProductFamily::S2xS2, &[sqrt2 * r1, sqrt2 * r2])?),
            (torus([r1, r1, r1, r1])?, ebar_s4),
            (clifford_family_energy_k2(r1, r1), e_s2),
        ];
        for (i, (lhs, rhs)) in pairs.iter().enumerate() {
            worst[i] = worst[i].max(rel(*lhs, consts[i] * rhs));
        }
    }
    Ok((0..5).map(|i| RelationResidual { name: names[i], constant: consts[i], max_residual: worst[i] }).collect())
}

/// Area of the round `S^d(r)`.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    let unit = match d {
        1 => 2.0 * PI,
        2 => 4.0 * PI,
        3 => 2.0 * PI * PI,
        4 => 8.0 * PI * PI / 3.0,
        _ => {
            // |S^d| = 2π^{(d+1)/2} / Γ((d+1)/2), via |S^d| = 2π/(d−1) |S^{d−2}|
            let mut a = if d % 2 == 1 { 2.0 * PI } else { 4.0 * PI };
            let mut k = if d % 2 == 1 { 1 } else { 2 };
            while k < d {
                a *= 2.0 * PI / (k as f64 + 1.0);
                k += 2;
            }
            a
        }
    };
    unit * r.powi(d as i32)
}
