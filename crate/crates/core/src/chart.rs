//! Parametrized immersions evaluated through jet arithmetic.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use crate::conformal::AmbientMap;
use crate::error::{Error, Result};
use crate::jet::{self, Jet, MAX_ORDER};
use crate::quadrature::{ParamKind, QuadratureRule};

/// Ambient space of a submanifold. `Sphere(n)` is the unit sphere `Sⁿ ⊂ ℝⁿ⁺¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Background {
    Euclidean(usize),
    Sphere(usize),
}

impl Background {
    /// Dimension of the Euclidean space holding the chart values.
    pub fn embedding_dim(&self) -> usize {
        match *self {
            Background::Euclidean(n) => n,
            Background::Sphere(n) => n + 1,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Background::Euclidean(n) | Background::Sphere(n) => n,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Background::Sphere(_))
    }

    /// Trace of the ambient Schouten tensor restricted to a `k`-dimensional tangent space.
    pub fn schouten_trace(&self, k: usize) -> f64 {
        if self.is_sphere() {
            k as f64 / 2.0
        } else {
            0.0
        }
    }

    pub fn name(&self) -> &'static str {
        if self.is_sphere() {
            "sphere"
        } else {
            "euclidean"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    pub intervals: Vec<(f64, f64)>,
    pub kinds: Vec<ParamKind>,
}

impl ChartDomain {
    fn from_kinds(kinds: Vec<ParamKind>) -> Self {
        let intervals = kinds
            .iter()
            .map(|k| match k {
                ParamKind::Periodic => (0.0, TAU),
                ParamKind::Polar | ParamKind::PolarEven => (0.0, PI),
            })
            .collect();
        ChartDomain { intervals, kinds }
    }

    pub fn periodic(&self, i: usize) -> bool {
        self.kinds[i] == ParamKind::Periodic
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }
}

/// One term `coeff · cos(n·u)` or `coeff · sin(n·u)` of a trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigMode {
    pub coeff: f64,
    pub freq: [i32; 4],
    pub sine: bool,
}

impl TrigMode {
    pub fn cos(coeff: f64, freq: [i32; 4]) -> Self {
        TrigMode { coeff, freq, sine: false }
    }

    pub fn sin(coeff: f64, freq: [i32; 4]) -> Self {
        TrigMode { coeff, freq, sine: true }
    }
}

/// Evaluates `Σ modes` on parameter jets.
pub fn trig_poly(modes: &[TrigMode], p: &[Jet]) -> Jet {
    let mut acc = Jet::zero(p[0].num_vars(), p[0].order());
    for m in modes {
        let mut arg = Jet::zero(p[0].num_vars(), p[0].order());
        for (pi, &f) in p.iter().zip(&m.freq) {
            if f != 0 {
                arg += &pi.scale(f as f64);
            }
        }
        let t = if m.sine { arg.sin() } else { arg.cos() };
        acc += &t.scale(m.coeff);
    }
    acc
}

/// Built-in families of immersions.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `S^{d₁}(r₁) × … × S^{d_l}(r_l)` inside the unit sphere of `ℝ^{Σ(dᵢ+1)}`.
    ProductSpheres { dims: Vec<usize>, radii: Vec<f64> },
    /// Totally geodesic `S⁴ ⊂ S⁵`.
    Equator,
    /// `S^k(radius) ⊂ ℝ^{k+1}`.
    RoundSphere { k: usize, radius: f64 },
    /// Tube `T^{j,k}_{R,r}` of radius `r` about `S^j(R) ⊂ ℝ^{j+1}`.
    Anchor { j: usize, k: usize, big_r: f64, r: f64 },
    /// `δ_a(T^{2,2}_{R,r})` with `δ_a(y, v) = (y, a v)`.
    DilatedAnchor { big_r: f64, r: f64, a: f64 },
    /// `(x₁,…,x₄, x₅/a)` on the unit sphere, i.e. semiaxes `(1,1,1,1,a)`.
    Ellipsoid { a: f64 },
    /// Graph `(u, ε φ(u))` over `ℝ⁴ ⊂ ℝ⁵`, `φ` a trigonometric polynomial.
    PeriodicGraph { eps: f64, phi: Vec<TrigMode> },
}

const SUM_SQ_TOL: f64 = 1e-12;

impl Family {
    pub fn validate(&self) -> Result<()> {
        match self {
            Family::ProductSpheres { dims, radii } => {
                let tag = self.tag();
                if dims.len() != radii.len() || dims.len() < 2 {
                    return Err(Error::param(tag, "one radius per factor, at least two factors"));
                }
                if dims.iter().any(|&d| !(1..=3).contains(&d)) {
                    return Err(Error::param(tag, "factor dimensions must be 1, 2 or 3"));
                }
                if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                    return Err(Error::param(tag, "radii must be positive"));
                }
                let s: f64 = radii.iter().map(|r| r * r).sum();
                if (s - 1.0).abs() > SUM_SQ_TOL {
                    return Err(Error::param(tag, format!("sum of squared radii must be 1 (got {s:.15})")));
                }
                let k: usize = dims.iter().sum();
                if k != 2 && k != 4 {
                    return Err(Error::param(tag, "total dimension must be 2 or 4"));
                }
            }
            Family::Equator => {}
            Family::RoundSphere { k, radius } => {
                if *k != 2 && *k != 4 {
                    return Err(Error::param("sphere", "dimension must be 2 or 4"));
                }
                if !(*radius > 0.0) {
                    return Err(Error::param("sphere", "radius must be positive"));
                }
            }
            Family::Anchor { j, k, big_r, r } => {
                if *j < 1 || *k < 1 || *j > 3 || *k > 3 || (j + k != 2 && j + k != 4) {
                    return Err(Error::param("anchor", "need j, k >= 1 and j + k in {2, 4}"));
                }
                if !(*r > 0.0 && r < big_r) {
                    return Err(Error::param("anchor", "need 0 < r < R"));
                }
            }
            Family::DilatedAnchor { big_r, r, a } => {
                if !(*r > 0.0 && r < big_r) {
                    return Err(Error::param("dilated", "need 0 < r < R"));
                }
                if !(*a > 0.0) {
                    return Err(Error::param("dilated", "need a > 0"));
                }
            }
            Family::Ellipsoid { a } => {
                if !(*a > 0.0) {
                    return Err(Error::param("ellipsoid", "semiaxis a must be positive"));
                }
            }
            Family::PeriodicGraph { eps, phi } => {
                if !eps.is_finite() || phi.iter().any(|m| !m.coeff.is_finite()) {
                    return Err(Error::param("graph", "finite amplitude and coefficients required"));
                }
            }
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        match self {
            Family::ProductSpheres { dims, .. } => match dims.as_slice() {
                [2, 2] => "s2xs2".into(),
                [1, 3] => "s1xs3".into(),
                [1, 1, 2] => "s1s1s2".into(),
                [1, 1, 1, 1] => "torus4".into(),
                [1, 1] => "clifford".into(),
                d => format!("product{d:?}"),
            },
            Family::Equator => "equator".into(),
            Family::RoundSphere { k, .. } => format!("s{k}"),
            Family::Anchor { j, k, .. } => format!("anchor{j}{k}"),
            Family::DilatedAnchor { .. } => "dilated".into(),
            Family::Ellipsoid { .. } => "ellipsoid".into(),
            Family::PeriodicGraph { .. } => "graph".into(),
        }
    }

    /// Numeric parameters, for reports.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match self {
            Family::ProductSpheres { radii, .. } => {
                for (i, r) in radii.iter().enumerate() {
                    m.insert(format!("r{}", i + 1), *r);
                }
            }
            Family::Equator => {}
            Family::RoundSphere { radius, .. } => {
                m.insert("radius".into(), *radius);
            }
            Family::Anchor { j, k, big_r, r } => {
                m.insert("j".into(), *j as f64);
                m.insert("k".into(), *k as f64);
                m.insert("R".into(), *big_r);
                m.insert("r".into(), *r);
            }
            Family::DilatedAnchor { big_r, r, a } => {
                m.insert("R".into(), *big_r);
                m.insert("r".into(), *r);
                m.insert("a".into(), *a);
            }
            Family::Ellipsoid { a } => {
                m.insert("a".into(), *a);
            }
            Family::PeriodicGraph { eps, .. } => {
                m.insert("eps".into(), *eps);
            }
        }
        m
    }

    pub fn k(&self) -> usize {
        match self {
            Family::ProductSpheres { dims, .. } => dims.iter().sum(),
            Family::RoundSphere { k, .. } => *k,
            Family::Anchor { j, k, .. } => j + k,
            _ => 4,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Family::ProductSpheres { dims, .. } => dims.iter().map(|d| d + 1).sum(),
            Family::Equator => 6,
            Family::RoundSphere { k, .. } => k + 1,
            Family::Anchor { j, k, .. } => j + k + 1,
            _ => 5,
        }
    }

    /// The background the family is naturally posed in.
    pub fn natural_background(&self) -> Background {
        let n = self.ambient_dim();
        match self {
            Family::ProductSpheres { .. } | Family::Equator => Background::Sphere(n - 1),
            _ => Background::Euclidean(n),
        }
    }

    pub fn euler_characteristic(&self) -> Option<i64> {
        match self {
            Family::ProductSpheres { dims, .. } => {
                Some(dims.iter().map(|&d| if d % 2 == 0 { 2 } else { 0 }).product())
            }
            Family::Equator | Family::Ellipsoid { .. } => Some(2),
            Family::RoundSphere { k, .. } => Some(if k % 2 == 0 { 2 } else { 0 }),
            Family::Anchor { j, k, .. } => Some(
                (if j % 2 == 0 { 2 } else { 0 }) * (if k % 2 == 0 { 2 } else { 0 }),
            ),
            Family::DilatedAnchor { .. } => Some(4),
            Family::PeriodicGraph { .. } => None,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Family::PeriodicGraph { .. })
    }

    fn factor_charts(&self) -> Vec<SphereChart> {
        match self {
            Family::ProductSpheres { dims, .. } => dims.iter().map(|&d| SphereChart::standard(d)).collect(),
            Family::Equator | Family::Ellipsoid { .. } => vec![SphereChart::S4],
            Family::RoundSphere { k, .. } => vec![SphereChart::standard(*k)],
            Family::Anchor { j, k, .. } => vec![SphereChart::standard(*j), SphereChart::fiber(*k)],
            Family::DilatedAnchor { .. } => vec![SphereChart::S2, SphereChart::S2],
            Family::PeriodicGraph { .. } => vec![],
        }
    }

    pub fn domain(&self) -> ChartDomain {
        if let Family::PeriodicGraph { .. } = self {
            return ChartDomain::from_kinds(vec![ParamKind::Periodic; 4]);
        }
        ChartDomain::from_kinds(self.factor_charts().iter().flat_map(|c| c.kinds()).collect())
    }

    /// Coordinate plane rotated by each parameter when that rotation is a
    /// symmetry of the image; `None` otherwise.
    pub fn rotation_planes(&self) -> Vec<Option<(usize, usize)>> {
        let shift = |p: Option<(usize, usize)>, off: usize| p.map(|(a, b)| (a + off, b + off));
        match self {
            Family::ProductSpheres { .. } | Family::Equator | Family::RoundSphere { .. } | Family::Ellipsoid { .. } => {
                let mut off = 0;
                let mut out = Vec::new();
                for c in self.factor_charts() {
                    out.extend(c.planes().into_iter().map(|p| shift(p, off)));
                    off += c.dim() + 1;
                }
                out
            }
            Family::Anchor { j, k, .. } => anchor_planes(*j, *k),
            Family::DilatedAnchor { .. } => anchor_planes(2, 2),
            Family::PeriodicGraph { .. } => vec![None; 4],
        }
    }

    /// Immersion evaluated on parameter jets.
    pub fn eval(&self, p: &[Jet]) -> Vec<Jet> {
        match self {
            Family::ProductSpheres { dims, radii } => {
                let mut x = Vec::new();
                let mut off = 0;
                for (&d, &r) in dims.iter().zip(radii) {
                    let c = SphereChart::standard(d);
                    x.extend(jet::vector::scale_f(&c.eval(&p[off..off + d]), r));
                    off += d;
                }
                x
            }
            Family::Equator => {
                let mut x = SphereChart::S4.eval(p);
                x.push(Jet::zero(p[0].num_vars(), p[0].order()));
                x
            }
            Family::RoundSphere { k, radius } => jet::vector::scale_f(&SphereChart::standard(*k).eval(p), *radius),
            Family::Anchor { j, k, big_r, r } => anchor_eval(*j, *k, *big_r, *r, 1.0, p),
            Family::DilatedAnchor { big_r, r, a } => anchor_eval(2, 2, *big_r, *r, *a, p),
            Family::Ellipsoid { a } => {
                let mut x = SphereChart::S4.eval(p);
                x[4] = x[4].scale(*a);
                x
            }
            Family::PeriodicGraph { eps, phi } => {
                let mut x: Vec<Jet> = p.to_vec();
                x.push(trig_poly(phi, p).scale(*eps));
                x
            }
        }
    }

    /// Unit normal used to define scalar curvatures of hypersurfaces.
    ///
    /// Product of two spheres: `(−(r₂/r₁) y₁, (r₁/r₂) y₂)`. Round spheres and
    /// ellipsoids: inward. Anchor rings: outward `(w ŷ, v)`. Graphs: upward.
    pub fn normal(&self, p: &[Jet]) -> Option<Vec<Jet>> {
        let nv = p[0].num_vars();
        let o = p[0].order();
        match self {
            Family::ProductSpheres { dims, radii } if dims.len() == 2 => {
                let x = self.eval(p);
                let (r1, r2) = (radii[0], radii[1]);
                let d1 = dims[0] + 1;
                Some(
                    x.iter()
                        .enumerate()
                        .map(|(i, c)| if i < d1 { c.scale(-r2 / r1) } else { c.scale(r1 / r2) })
                        .collect(),
                )
            }
            Family::Equator => {
                let mut n = jet::vector::zero(6, nv, o);
                n[5] = Jet::constant(nv, o, 1.0);
                Some(n)
            }
            Family::RoundSphere { k, .. } => Some(jet::vector::scale_f(&SphereChart::standard(*k).eval(p), -1.0)),
            Family::Anchor { j, k, .. } => {
                let (y, v, w) = anchor_parts(*j, *k, p);
                let mut n: Vec<Jet> = y.iter().map(|c| c * &w).collect();
                n.extend(v);
                Some(n)
            }
            Family::DilatedAnchor { a, .. } => {
                let (y, v, w) = anchor_parts(2, 2, p);
                let aw = w.scale(*a);
                let ell2 = &(&aw * &aw) + &jet::vector::dot(&v, &v);
                let inv = ell2.powf(-0.5);
                let mut n: Vec<Jet> = y.iter().map(|c| &(c * &aw) * &inv).collect();
                n.extend(v.iter().map(|c| c * &inv));
                Some(n)
            }
            Family::Ellipsoid { a } => {
                let s = SphereChart::S4.eval(p);
                let mut g = s.clone();
                g[4] = s[4].scale(1.0 / a);
                let inv = jet::vector::dot(&g, &g).powf(-0.5).scale(-1.0);
                Some(jet::vector::scale(&g, &inv))
            }
            Family::PeriodicGraph { eps, phi } => {
                // closed-form gradient; differentiating the jet would lose an order
                let mut grad = Vec::with_capacity(4);
                for i in 0..4 {
                    let d: Vec<TrigMode> = phi
                        .iter()
                        .filter(|m| m.freq[i] != 0)
                        .map(|m| TrigMode {
                            coeff: if m.sine { m.coeff * m.freq[i] as f64 } else { -m.coeff * m.freq[i] as f64 },
                            freq: m.freq,
                            sine: !m.sine,
                        })
                        .collect();
                    grad.push(if d.is_empty() { Jet::zero(nv, o) } else { trig_poly(&d, p).scale(*eps) });
                }
                let norm2 = jet::vector::dot(&grad, &grad).add_scalar(1.0);
                let inv = norm2.powf(-0.5);
                let mut n: Vec<Jet> = grad.iter().map(|g| (g * &inv).scale(-1.0)).collect();
                n.push(inv);
                Some(n)
            }
            _ => None,
        }
    }
}

fn anchor_planes(j: usize, k: usize) -> Vec<Option<(usize, usize)>> {
    let base = SphereChart::standard(j);
    let fiber = SphereChart::fiber(k);
    let mut out = base.planes();
    let off = j + 1;
    // rotations of the fiber survive only if they fix the w-coordinate
    out.extend(fiber.planes().into_iter().map(|p| p.filter(|&(a, b)| a < k && b < k).map(|(a, b)| (a + off, b + off))));
    out
}

fn anchor_parts(j: usize, k: usize, p: &[Jet]) -> (Vec<Jet>, Vec<Jet>, Jet) {
    let y = SphereChart::standard(j).eval(&p[..j]);
    let mut z = SphereChart::fiber(k).eval(&p[j..j + k]);
    let w = z.pop().expect("fiber has k + 1 components");
    (y, z, w)
}

fn anchor_eval(j: usize, k: usize, big_r: f64, r: f64, a: f64, p: &[Jet]) -> Vec<Jet> {
    let (y, v, w) = anchor_parts(j, k, p);
    let rad = w.scale(r).add_scalar(big_r);
    let mut x: Vec<Jet> = y.iter().map(|c| c * &rad).collect();
    x.extend(v.iter().map(|c| c.scale(r * a)));
    x
}

/// Coordinate charts of unit spheres.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SphereChart {
    S1,
    /// `(sin φ cos θ, sin φ sin θ, cos φ)`.
    S2,
    /// Hopf coordinates `(cos(ψ/2) e^{iθ₁}, sin(ψ/2) e^{iθ₂})`.
    S3Hopf,
    /// `(sin χ · S²(φ, θ), cos χ)`.
    S3Axial,
    /// `(sin ω · Hopf(ψ, θ₁, θ₂), cos ω)`.
    S4,
}

impl SphereChart {
    fn standard(d: usize) -> Self {
        match d {
            1 => SphereChart::S1,
            2 => SphereChart::S2,
            3 => SphereChart::S3Hopf,
            _ => SphereChart::S4,
        }
    }

    /// Fiber chart of a tube: rotations about the last axis stay symmetries.
    fn fiber(d: usize) -> Self {
        match d {
            3 => SphereChart::S3Axial,
            d => SphereChart::standard(d),
        }
    }

    fn dim(&self) -> usize {
        match self {
            SphereChart::S1 => 1,
            SphereChart::S2 => 2,
            SphereChart::S3Hopf | SphereChart::S3Axial => 3,
            SphereChart::S4 => 4,
        }
    }

    fn kinds(&self) -> Vec<ParamKind> {
        use ParamKind::*;
        match self {
            SphereChart::S1 => vec![Periodic],
            SphereChart::S2 => vec![Polar, Periodic],
            SphereChart::S3Hopf => vec![Polar, Periodic, Periodic],
            SphereChart::S3Axial => vec![PolarEven, Polar, Periodic],
            SphereChart::S4 => vec![Polar, Polar, Periodic, Periodic],
        }
    }

    fn planes(&self) -> Vec<Option<(usize, usize)>> {
        match self {
            SphereChart::S1 => vec![Some((0, 1))],
            SphereChart::S2 => vec![None, Some((0, 1))],
            SphereChart::S3Hopf => vec![None, Some((0, 1)), Some((2, 3))],
            SphereChart::S3Axial => vec![None, None, Some((0, 1))],
            SphereChart::S4 => vec![None, None, Some((0, 1)), Some((2, 3))],
        }
    }

    fn eval(&self, p: &[Jet]) -> Vec<Jet> {
        match self {
            SphereChart::S1 => vec![p[0].cos(), p[0].sin()],
            SphereChart::S2 => {
                let (sp, cp) = (p[0].sin(), p[0].cos());
                vec![&sp * &p[1].cos(), &sp * &p[1].sin(), cp]
            }
            SphereChart::S3Hopf => {
                let half = p[0].scale(0.5);
                let (c, s) = (half.cos(), half.sin());
                vec![&c * &p[1].cos(), &c * &p[1].sin(), &s * &p[2].cos(), &s * &p[2].sin()]
            }
            SphereChart::S3Axial => {
                let sc = p[0].sin();
                let mut v = jet::vector::scale(&SphereChart::S2.eval(&p[1..3]), &sc);
                v.push(p[0].cos());
                v
            }
            SphereChart::S4 => {
                let so = p[0].sin();
                let mut v = jet::vector::scale(&SphereChart::S3Hopf.eval(&p[1..4]), &so);
                v.push(p[0].cos());
                v
            }
        }
    }
}

/// Variation `x + t V` applied before any ambient map.
#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// `V` = the family's unit normal.
    FamilyNormal { t: f64 },
    /// `V` = normal projection of an ambient field whose components are
    /// trigonometric polynomials in the chart parameters.
    Ambient { t: f64, field: Vec<Vec<TrigMode>> },
}

/// A parametrized immersion: a built-in family, an optional variation, and a
/// list of ambient maps applied afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionChart {
    pub family: Family,
    pub k: usize,
    pub ambient_dim: usize,
    pub domain: ChartDomain,
    pub perturbation: Option<Perturbation>,
    pub maps: Vec<AmbientMap>,
}

/// Builds the chart of a built-in family after validating its parameters.
pub fn make_family_chart(family: Family) -> Result<ImmersionChart> {
    family.validate()?;
    Ok(ImmersionChart {
        k: family.k(),
        ambient_dim: family.ambient_dim(),
        domain: family.domain(),
        family,
        perturbation: None,
        maps: Vec::new(),
    })
}

impl ImmersionChart {
    pub fn with_perturbation(&self, p: Perturbation) -> Self {
        let mut c = self.clone();
        c.perturbation = Some(p);
        c
    }

    /// The background a chart lives in after its maps have been applied.
    pub fn natural_background(&self) -> Background {
        let mut bg = self.family.natural_background();
        if self.perturbation.is_some() && bg.is_sphere() {
            bg = Background::Euclidean(bg.embedding_dim());
        }
        for m in &self.maps {
            bg = m.output_background(bg);
        }
        bg
    }

    /// Parameters whose rotations are exact symmetries of the final image.
    pub fn symmetric_params(&self) -> Vec<bool> {
        let mut planes = self.family.rotation_planes();
        if matches!(self.perturbation, Some(Perturbation::Ambient { .. })) {
            planes.iter_mut().for_each(|p| *p = None);
        }
        let mut n = self.family.ambient_dim();
        for m in &self.maps {
            for p in planes.iter_mut() {
                *p = p.and_then(|pl| m.transport_plane(pl, n));
            }
            n = m.output_dim(n);
        }
        planes.iter().zip(&self.domain.kinds).map(|(p, k)| p.is_some() && *k == ParamKind::Periodic).collect()
    }

    /// Chart values on arbitrary parameter jets (no domain checks).
    pub fn eval_jets(&self, p: &[Jet]) -> Result<Vec<Jet>> {
        let mut x = match &self.perturbation {
            None => self.family.eval(p),
            Some(Perturbation::FamilyNormal { t }) => {
                let x = self.family.eval(p);
                let n = self
                    .family
                    .normal(p)
                    .ok_or_else(|| Error::Unsupported(format!("{} has no scalar unit normal", self.family.tag())))?;
                jet::vector::add(&x, &jet::vector::scale_f(&n, *t))
            }
            Some(Perturbation::Ambient { t, field }) => {
                if field.len() != self.ambient_dim {
                    return Err(Error::param(self.family.tag(), "variation field needs one component per ambient coordinate"));
                }
                let o = p[0].order();
                if o + 1 > MAX_ORDER {
                    return Err(Error::UnsupportedOrder { requested: o + 1, max: MAX_ORDER });
                }
                let up: Vec<Jet> = p.iter().map(|q| raise_order(q, o + 1)).collect();
                let xb = self.family.eval(&up);
                let v: Vec<Jet> = field.iter().map(|modes| trig_poly(modes, p)).collect();
                let bg = self.family.natural_background();
                let proj = crate::geometry::NormalProjector::new(&xb, bg.is_sphere())?;
                let vn = proj.apply(&v);
                jet::vector::add(&jet::vector::truncate(&xb, o), &jet::vector::scale_f(&vn, *t))
            }
        };
        for m in &self.maps {
            x = m.apply_jets(&x)?;
        }
        Ok(x)
    }

    /// Jet of the immersion at `u`; periodic parameters are wrapped.
    pub fn jet_eval(&self, u: &[f64], order: usize) -> Result<Vec<Jet>> {
        if order > MAX_ORDER {
            return Err(Error::UnsupportedOrder { requested: order, max: MAX_ORDER });
        }
        let u = self.wrap(u)?;
        let p: Vec<Jet> = (0..self.k).map(|i| Jet::variable(self.k, order, i, u[i])).collect();
        self.eval_jets(&p)
    }

    /// Family unit normal at `u` (before ambient maps).
    pub fn normal_at(&self, u: &[f64]) -> Option<Vec<f64>> {
        let p: Vec<Jet> = (0..self.k).map(|i| Jet::variable(self.k, 0, i, u[i])).collect();
        self.family.normal(&p).map(|n| jet::vector::values(&n))
    }

    fn wrap(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.k {
            return Err(Error::Domain(format!("expected {} parameters, got {}", self.k, u.len())));
        }
        u.iter()
            .enumerate()
            .map(|(i, &x)| {
                let (lo, hi) = self.domain.intervals[i];
                if !x.is_finite() {
                    Err(Error::Domain(format!("parameter {i} is not finite")))
                } else if self.domain.periodic(i) {
                    Ok(lo + (x - lo).rem_euclid(hi - lo))
                } else if x < lo || x > hi {
                    Err(Error::Domain(format!("parameter {i} = {x} outside [{lo}, {hi}]")))
                } else {
                    Ok(x)
                }
            })
            .collect()
    }

    /// Quadrature rule with symmetric periodic parameters collapsed.
    pub fn quadrature(&self, resolution: usize) -> QuadratureRule {
        QuadratureRule::tensor(&self.domain.kinds, resolution, &self.symmetric_params())
    }

    /// Full tensor rule with every parameter sampled.
    pub fn quadrature_full(&self, resolution: usize) -> QuadratureRule {
        QuadratureRule::tensor(&self.domain.kinds, resolution, &[])
    }
}

fn raise_order(p: &Jet, order: usize) -> Jet {
    // parameter jets are affine: value plus one linear coefficient
    let nv = p.num_vars();
    let mut out = Jet::constant(nv, order, p.value());
    let lin: Vec<f64> = p.coeffs().iter().skip(1).take(nv).copied().collect();
    for (i, c) in lin.iter().enumerate() {
        if *c != 0.0 {
            out += &Jet::variable(nv, order, i, 0.0).scale(*c);
        }
    }
    out
}

/// Builds the quadrature rule for a chart, checking the minimum resolution.
pub fn quadrature_rule(chart: &ImmersionChart, resolution: usize) -> Result<QuadratureRule> {
    if resolution < 4 {
        return Err(Error::Config(format!("resolution {resolution} below minimum 4")));
    }
    Ok(chart.quadrature(resolution))
}

/// Family parsed from a tag and `key=value` list.
pub fn parse_family(tag: &str, params: &str) -> Result<Family> {
    let mut kv = BTreeMap::new();
    for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{item}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let num = |key: &str, default: Option<f64>| -> Result<f64> {
        match kv.get(key) {
            Some(v) => v.parse::<f64>().map_err(|_| Error::Config(format!("parameter {key}: `{v}` is not a number"))),
            None => default.ok_or_else(|| Error::Config(format!("{tag}: missing parameter {key}"))),
        }
    };
    let radii = |n: usize, default: f64| -> Result<Vec<f64>> {
        (1..=n).map(|i| num(&format!("r{i}"), Some(default))).collect()
    };
    let int = |key: &str| -> Result<usize> { Ok(num(key, None)? as usize) };
    let fam = match tag {
        "s2xs2" => Family::ProductSpheres { dims: vec![2, 2], radii: radii(2, 0.5f64.sqrt())? },
        "s1xs3" => Family::ProductSpheres { dims: vec![1, 3], radii: vec![num("r1", Some(0.5))?, num("r2", Some(0.75f64.sqrt()))?] },
        "s1s1s2" => Family::ProductSpheres {
            dims: vec![1, 1, 2],
            radii: vec![num("r1", Some(0.5))?, num("r2", Some(0.5))?, num("r3", Some(0.5f64.sqrt()))?],
        },
        "torus4" => Family::ProductSpheres { dims: vec![1, 1, 1, 1], radii: radii(4, 0.5)? },
        "clifford" => Family::ProductSpheres { dims: vec![1, 1], radii: radii(2, 0.5f64.sqrt())? },
        "equator" => Family::Equator,
        "s4" => Family::RoundSphere { k: 4, radius: num("radius", Some(1.0))? },
        "s2" => Family::RoundSphere { k: 2, radius: num("radius", Some(1.0))? },
        "anchor" => Family::Anchor { j: int("j")?, k: int("k")?, big_r: num("R", None)?, r: num("r", None)? },
        "t11" => Family::Anchor { j: 1, k: 1, big_r: num("R", Some(2f64.sqrt()))?, r: num("r", Some(1.0))? },
        "dilated" => Family::DilatedAnchor {
            big_r: num("R", Some(2f64.sqrt()))?,
            r: num("r", Some(1.0))?,
            a: num("a", None)?,
        },
        "ellipsoid" => Family::Ellipsoid { a: num("a", None)? },
        "graph" => Family::PeriodicGraph {
            eps: num("eps", None)?,
            phi: parse_trig(kv.get("phi").map(String::as_str).unwrap_or("cos1000"))?,
        },
        other => return Err(Error::Config(format!("unknown family `{other}`"))),
    };
    let allowed: &[&str] = match tag {
        "s2xs2" | "clifford" => &["r1", "r2"],
        "s1xs3" => &["r1", "r2"],
        "s1s1s2" => &["r1", "r2", "r3"],
        "torus4" => &["r1", "r2", "r3", "r4"],
        "equator" => &[],
        "s4" | "s2" => &["radius"],
        "anchor" => &["j", "k", "R", "r"],
        "t11" => &["R", "r"],
        "dilated" => &["R", "r", "a"],
        "ellipsoid" => &["a"],
        _ => &["eps", "phi"],
    };
    if let Some(bad) = kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!("{tag}: unknown parameter `{bad}`")));
    }
    Ok(fam)
}

/// Parses `cos1000+0.5sin0110`: optional coefficient, `cos`/`sin`, four
/// single-digit frequencies.
pub fn parse_trig(s: &str) -> Result<Vec<TrigMode>> {
    s.split('+')
        .map(|term| {
            let term = term.trim();
            let pos = term
                .find("cos")
                .or_else(|| term.find("sin"))
                .ok_or_else(|| Error::Config(format!("trig term `{term}` lacks cos/sin")))?;
            let coeff = if pos == 0 {
                1.0
            } else {
                term[..pos].parse::<f64>().map_err(|_| Error::Config(format!("bad coefficient in `{term}`")))?
            };
            let sine = &term[pos..pos + 3] == "sin";
            let digits: Vec<i32> = term[pos + 3..].chars().filter_map(|c| c.to_digit(10)).map(|d| d as i32).collect();
            if digits.len() != 4 || term[pos + 3..].len() != 4 {
                return Err(Error::Config(format!("trig term `{term}` needs four frequency digits")));
            }
            Ok(TrigMode { coeff, freq: [digits[0], digits[1], digits[2], digits[3]], sine })
        })
        .collect()
}
