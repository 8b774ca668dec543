//! Stereographic projection and Möbius maps as post-compositions of charts.

use crate::chart::{Background, ImmersionChart};
use crate::energy::energy;
use crate::error::{Error, Result};
use crate::jet::{vector as jv, Jet};

/// Smallest admissible distance between the image and a map singularity.
pub const SINGULARITY_MARGIN: f64 = 1e-6;

/// Resolution of the full tensor grid on which map singularities are screened.
const SCREEN_RESOLUTION: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum AmbientMap {
    /// `(x′, x_last) ↦ x′ / (1 − x_last)` from the unit sphere.
    Stereographic,
    /// `x ↦ c + ρ² (x − c) / |x − c|²`.
    Inversion { center: Vec<f64>, radius: f64 },
    /// Scales the listed axes by `a`; `None` scales every axis.
    Dilation { a: f64, axes: Option<Vec<usize>> },
    Translation { offset: Vec<f64> },
    /// Rotation by `angle` in the coordinate plane `(i, j)`.
    Rotation { i: usize, j: usize, angle: f64 },
}

impl AmbientMap {
    /// `δ_a(y, v) = (y, a v)` acting on the last `count` coordinates of `ℝⁿ`.
    pub fn dilate_last(a: f64, n: usize, count: usize) -> Self {
        AmbientMap::Dilation { a, axes: Some((n - count..n).collect()) }
    }

    pub fn is_conformal(&self) -> bool {
        match self {
            AmbientMap::Dilation { a, axes: Some(ax) } => *a == 1.0 || ax.is_empty(),
            _ => true,
        }
    }

    pub fn output_background(&self, bg: Background) -> Background {
        match (self, bg) {
            (AmbientMap::Stereographic, Background::Sphere(n)) => Background::Euclidean(n),
            (AmbientMap::Rotation { .. }, b) => b,
            (_, b) => Background::Euclidean(b.embedding_dim()),
        }
    }

    pub fn output_dim(&self, n: usize) -> usize {
        match self {
            AmbientMap::Stereographic => n - 1,
            _ => n,
        }
    }

    /// Image of an invariant rotation plane, or `None` when the map breaks
    /// that rotation symmetry.
    pub fn transport_plane(&self, plane: (usize, usize), n: usize) -> Option<(usize, usize)> {
        let (a, b) = plane;
        let keep = match self {
            AmbientMap::Stereographic => a < n - 1 && b < n - 1,
            AmbientMap::Inversion { center, .. } => center[a] == 0.0 && center[b] == 0.0,
            AmbientMap::Dilation { axes: None, .. } => true,
            AmbientMap::Dilation { axes: Some(ax), .. } => ax.contains(&a) == ax.contains(&b),
            AmbientMap::Translation { offset } => offset[a] == 0.0 && offset[b] == 0.0,
            AmbientMap::Rotation { i, j, .. } => {
                let (p, q) = (*i.min(j), *i.max(j));
                let (lo, hi) = (a.min(b), a.max(b));
                (p, q) == (lo, hi) || (p != a && p != b && q != a && q != b)
            }
        };
        keep.then_some(plane)
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        let need = match self {
            AmbientMap::Inversion { center, .. } => Some(center.len()),
            AmbientMap::Translation { offset } => Some(offset.len()),
            _ => None,
        };
        if let Some(m) = need {
            if m != n {
                return Err(Error::Config(format!("map expects ambient dimension {m}, chart has {n}")));
            }
        }
        match self {
            AmbientMap::Rotation { i, j, .. } if *i >= n || *j >= n || i == j => {
                Err(Error::Config(format!("rotation plane ({i}, {j}) invalid in dimension {n}")))
            }
            AmbientMap::Dilation { axes: Some(ax), .. } if ax.iter().any(|&a| a >= n) => {
                Err(Error::Config(format!("dilation axis out of range for dimension {n}")))
            }
            AmbientMap::Inversion { radius, .. } if !(*radius > 0.0) => Err(Error::Config("inversion radius must be positive".into())),
            AmbientMap::Dilation { a, .. } if !(*a > 0.0) => Err(Error::Config("dilation factor must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Composes the map with jet-valued ambient coordinates.
    pub fn apply_jets(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let n = x.len();
        self.check_dim(n)?;
        match self {
            AmbientMap::Stereographic => {
                let last = &x[n - 1];
                let d = last.scale(-1.0).add_scalar(1.0);
                // |x − N|² = 2 (1 − x_last) on the unit sphere
                let dist = (2.0 * d.value()).max(0.0).sqrt();
                if dist <= SINGULARITY_MARGIN {
                    return Err(Error::MapSingularity(format!("point within {dist:.2e} of the stereographic base point")));
                }
                let inv = d.recip();
                Ok(x[..n - 1].iter().map(|c| c * &inv).collect())
            }
            AmbientMap::Inversion { center, radius } => {
                let y: Vec<Jet> = x.iter().zip(center).map(|(c, &p)| c.add_scalar(-p)).collect();
                let r2 = jv::dot(&y, &y);
                if r2.value().sqrt() <= SINGULARITY_MARGIN {
                    return Err(Error::MapSingularity(format!("point within {:.2e} of the inversion center", r2.value().sqrt())));
                }
                let s = r2.recip().scale(radius * radius);
                Ok(y.iter().zip(center).map(|(c, &p)| (c * &s).add_scalar(p)).collect())
            }
            AmbientMap::Dilation { a, axes } => Ok(x
                .iter()
                .enumerate()
                .map(|(i, c)| match axes {
                    Some(ax) if !ax.contains(&i) => c.clone(),
                    _ => c.scale(*a),
                })
                .collect()),
            AmbientMap::Translation { offset } => Ok(x.iter().zip(offset).map(|(c, &o)| c.add_scalar(o)).collect()),
            AmbientMap::Rotation { i, j, angle } => {
                let (c, s) = (angle.cos(), angle.sin());
                let mut out = x.to_vec();
                out[*i] = &x[*i].scale(c) - &x[*j].scale(s);
                out[*j] = &x[*i].scale(s) + &x[*j].scale(c);
                Ok(out)
            }
        }
    }
}

/// Post-composes `chart` with `map`, screening a full node grid for map
/// singularities.
pub fn push_forward_chart(chart: &ImmersionChart, map: AmbientMap) -> Result<ImmersionChart> {
    let bg = chart.natural_background();
    match (&map, bg) {
        (AmbientMap::Stereographic, Background::Euclidean(_)) => {
            return Err(Error::Unsupported("stereographic projection needs a sphere-background chart".into()))
        }
        (_, b) => map.check_dim(b.embedding_dim())?,
    }
    let rule = chart.quadrature_full(SCREEN_RESOLUTION);
    for i in 0..rule.len() {
        let x = chart.jet_eval(rule.node(i), 0)?;
        map.apply_jets(&x)?;
    }
    let mut out = chart.clone();
    out.maps.push(map);
    Ok(out)
}

/// `|Ē(chart) − Ē(map ∘ chart)|`, each side evaluated in its own background.
pub fn conformal_invariance_residual(chart: &ImmersionChart, map: &AmbientMap, resolution: usize) -> Result<f64> {
    if chart.k != 4 {
        return Err(Error::Unsupported(format!("conformal invariance check needs k = 4, got {}", chart.k)));
    }
    if !map.is_conformal() {
        return Err(Error::Unsupported("non-isotropic dilation is not conformal".into()));
    }
    let pushed = push_forward_chart(chart, map.clone())?;
    let before = energy(chart, chart.natural_background(), resolution)?;
    let after = energy(&pushed, pushed.natural_background(), resolution)?;
    Ok((before.ebar.unwrap_or(before.e) - after.ebar.unwrap_or(after.e)).abs())
}

/// Largest deviation of `π(S^j(r₁) × S^k(r₂))` from the tube of radius
/// `r₂/r₁` about `S^j(1/r₁)`, over a full node grid.
pub fn anchor_correspondence_residual(j: usize, k: usize, r1: f64, r2: f64, resolution: usize) -> Result<f64> {
    let fam = crate::chart::Family::ProductSpheres { dims: vec![j, k], radii: vec![r1, r2] };
    let chart = push_forward_chart(&crate::chart::make_family_chart(fam)?, AmbientMap::Stereographic)?;
    let (big_r, r) = (1.0 / r1, r2 / r1);
    let rule = chart.quadrature_full(resolution);
    let mut worst: f64 = 0.0;
    for i in 0..rule.len() {
        let x = jv::values(&chart.jet_eval(rule.node(i), 0)?);
        let rho = x[..=j].iter().map(|c| c * c).sum::<f64>().sqrt();
        let rest = x[j + 1..].iter().map(|c| c * c).sum::<f64>();
        let dist = ((rho - big_r).powi(2) + rest).sqrt();
        worst = worst.max((dist - r).abs());
    }
    Ok(worst)
}
