//! Pointwise submanifold geometry from chart jets.
//!
//! Everything is frame-free: the normal bundle is handled through the
//! orthogonal projector `P_N`, and normal-bundle covariant derivatives are
//! `P_N ∂` plus Christoffel terms on tangential indices.

use nalgebra::{DMatrix, DVector};

use crate::chart::{Background, ImmersionChart};
use crate::error::{Error, Result};
use crate::jet::{vector as jv, Jet};

/// Condition-number bound beyond which a metric is treated as degenerate.
pub const MAX_CONDITION: f64 = 1e12;

/// How many derivatives of the mean curvature are needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Depth {
    Base,
    Gradient,
    Laplacian,
    Bilaplacian,
}

impl Depth {
    /// Jet order of the immersion required for this depth.
    pub fn jet_order(self) -> usize {
        match self {
            Depth::Base => 2,
            Depth::Gradient => 3,
            Depth::Laplacian => 4,
            Depth::Bilaplacian => 6,
        }
    }
}

/// Inverse of a jet-valued matrix by the Neumann series around its value.
fn jet_inverse(a: &[Vec<Jet>]) -> Result<(Vec<Vec<Jet>>, f64)> {
    let d = a.len();
    let a0 = DMatrix::from_fn(d, d, |i, j| a[i][j].value());
    let sv = a0.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond < MAX_CONDITION) {
        return Err(Error::Degenerate { node: Vec::new(), condition: cond });
    }
    let b0 = a0.try_inverse().ok_or(Error::Degenerate { node: Vec::new(), condition: f64::INFINITY })?;
    let nv = a[0][0].num_vars();
    let order = a.iter().flatten().map(Jet::order).min().unwrap_or(0);
    let b: Vec<Vec<Jet>> = (0..d).map(|i| (0..d).map(|j| Jet::constant(nv, order, b0[(i, j)])).collect()).collect();
    // M = I − B A has no constant term, so A⁻¹ = Σ Mⁱ B terminates at `order`.
    let m: Vec<Vec<Jet>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut acc = Jet::zero(nv, order);
                    for l in 0..d {
                        acc.fma_assign(&b[i][l], &a[l][j]);
                    }
                    let mut r = acc.scale(-1.0);
                    if i == j {
                        r = r.add_scalar(1.0);
                    }
                    r
                })
                .collect()
        })
        .collect();
    let mut x = b.clone();
    for _ in 0..order {
        x = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let mut acc = b[i][j].clone();
                        for l in 0..d {
                            acc.fma_assign(&m[i][l], &x[l][j]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
    }
    Ok((x, cond))
}

/// Orthogonal projector onto the normal space, acting on jet vectors.
///
/// For a sphere background the position vector is appended to the tangent
/// block, so the projector also removes the radial direction.
#[derive(Debug, Clone)]
pub struct NormalProjector {
    basis: Vec<Vec<Jet>>,
    dual: Vec<Vec<Jet>>,
}

impl NormalProjector {
    pub fn new(x: &[Jet], sphere: bool) -> Result<Self> {
        let k = x[0].num_vars();
        let mut basis: Vec<Vec<Jet>> = (0..k).map(|a| jv::derivative(x, a)).collect();
        if sphere {
            let o = basis[0][0].order();
            basis.push(jv::truncate(x, o));
        }
        let gram: Vec<Vec<Jet>> = basis.iter().map(|u| basis.iter().map(|v| jv::dot(u, v)).collect()).collect();
        let (ginv, _) = jet_inverse(&gram)?;
        let n = x.len();
        let o = gram[0][0].order();
        let dual = (0..basis.len())
            .map(|i| {
                let mut q = jv::zero(n, k, o);
                for (j, bj) in basis.iter().enumerate() {
                    jv::axpy(&mut q, &ginv[i][j], bj);
                }
                q
            })
            .collect();
        Ok(NormalProjector { basis, dual })
    }

    pub fn apply(&self, v: &[Jet]) -> Vec<Jet> {
        let mut out = v.to_vec();
        for (b, q) in self.basis.iter().zip(&self.dual) {
            let c = jv::dot(b, v).scale(-1.0);
            jv::axpy(&mut out, &c, q);
        }
        out
    }
}

/// A covariant tensor on `Σ` with scalar or normal-vector values. Components
/// are stored flat in row-major order over `rank` tangential indices.
#[derive(Debug, Clone)]
pub struct NTensor {
    pub rank: usize,
    pub normal: bool,
    pub comps: Vec<Vec<Jet>>,
}

impl NTensor {
    pub fn normal_field(v: Vec<Jet>) -> Self {
        NTensor { rank: 0, normal: true, comps: vec![v] }
    }

    pub fn scalar(rank: usize, comps: Vec<Jet>) -> Self {
        NTensor { rank, normal: false, comps: comps.into_iter().map(|c| vec![c]).collect() }
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.comps.iter().map(|c| jv::values(c)).collect()
    }
}

fn unflatten(mut idx: usize, k: usize, rank: usize) -> Vec<usize> {
    let mut out = vec![0; rank];
    for slot in out.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
    out
}

fn flatten(idx: &[usize], k: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * k + i)
}

/// Jets of all fundamental quantities at one point.
#[derive(Debug, Clone)]
pub struct JetGeometry {
    pub k: usize,
    pub n: usize,
    pub sphere: bool,
    pub x: Vec<Jet>,
    pub tangents: Vec<Vec<Jet>>,
    pub g: Vec<Vec<Jet>>,
    pub ginv: Vec<Vec<Jet>>,
    /// `gamma[μ][α][β] = Γ^μ_{αβ}`.
    pub gamma: Vec<Vec<Vec<Jet>>>,
    pub proj: NormalProjector,
    /// Second fundamental form, rank 2, normal-valued.
    pub l: NTensor,
    pub h: Vec<Jet>,
    pub condition: f64,
}

impl JetGeometry {
    pub fn new(x: Vec<Jet>, background: Background) -> Result<Self> {
        let k = x[0].num_vars();
        let n = x.len();
        if n != background.embedding_dim() {
            return Err(Error::Unsupported(format!(
                "chart has {n} ambient components but {} background needs {}",
                background.name(),
                background.embedding_dim()
            )));
        }
        if x[0].order() < 2 {
            return Err(Error::UnsupportedOrder { requested: x[0].order(), max: 2 });
        }
        let sphere = background.is_sphere();
        if sphere {
            let r2: f64 = x.iter().map(|c| c.value() * c.value()).sum();
            if (r2 - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!("sphere background needs |x| = 1, got {}", r2.sqrt())));
            }
        }
        let tangents: Vec<Vec<Jet>> = (0..k).map(|a| jv::derivative(&x, a)).collect();
        let g: Vec<Vec<Jet>> = (0..k).map(|a| (0..k).map(|b| jv::dot(&tangents[a], &tangents[b])).collect()).collect();
        let (ginv, condition) = jet_inverse(&g)?;
        let proj = NormalProjector::new(&x, sphere)?;
        let hess: Vec<Vec<Vec<Jet>>> =
            (0..k).map(|a| (0..k).map(|b| jv::derivative(&tangents[a], b)).collect()).collect();
        let lower: Vec<Vec<Vec<Jet>>> = (0..k)
            .map(|nu| (0..k).map(|a| (0..k).map(|b| jv::dot(&tangents[nu], &hess[a][b])).collect()).collect())
            .collect();
        let o2 = hess[0][0][0].order();
        let gamma: Vec<Vec<Vec<Jet>>> = (0..k)
            .map(|mu| {
                (0..k)
                    .map(|a| {
                        (0..k)
                            .map(|b| {
                                let mut acc = Jet::zero(k, o2);
                                for (nu, low) in lower.iter().enumerate() {
                                    acc.fma_assign(&ginv[mu][nu], &low[a][b]);
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut lcomps = vec![Vec::new(); k * k];
        for a in 0..k {
            for b in a..k {
                let v = proj.apply(&hess[a][b]);
                lcomps[b * k + a] = v.clone();
                lcomps[a * k + b] = v;
            }
        }
        let l = NTensor { rank: 2, normal: true, comps: lcomps };
        let mut geo = JetGeometry {
            k,
            n,
            sphere,
            x,
            tangents,
            g,
            ginv,
            gamma,
            proj,
            l,
            h: Vec::new(),
            condition,
        };
        geo.h = geo.trace(&geo.l).comps.remove(0);
        Ok(geo)
    }

    pub fn from_chart(chart: &ImmersionChart, background: Background, u: &[f64], depth: Depth) -> Result<Self> {
        let x = chart.jet_eval(u, depth.jet_order())?;
        JetGeometry::new(x, background).map_err(|e| match e {
            Error::Degenerate { condition, .. } => Error::Degenerate { node: u.to_vec(), condition },
            other => other,
        })
    }

    fn project_if(&self, normal: bool, v: Vec<Jet>) -> Vec<Jet> {
        if normal {
            self.proj.apply(&v)
        } else {
            v
        }
    }

    /// Full covariant derivative; the new index comes first.
    pub fn cov(&self, t: &NTensor) -> NTensor {
        let k = self.k;
        let r = t.rank;
        let total = k.pow(r as u32 + 1);
        let comps = (0..total)
            .map(|flat| {
                let idx = unflatten(flat, k, r + 1);
                let (gam, rest) = (idx[0], &idx[1..]);
                let src = &t.comps[flatten(rest, k)];
                let mut acc = jv::derivative(src, gam);
                for slot in 0..r {
                    let mut j = rest.to_vec();
                    for mu in 0..k {
                        j[slot] = mu;
                        let c = self.gamma[mu][gam][rest[slot]].scale(-1.0);
                        jv::axpy(&mut acc, &c, &t.comps[flatten(&j, k)]);
                    }
                }
                self.project_if(t.normal, acc)
            })
            .collect();
        NTensor { rank: r + 1, normal: t.normal, comps }
    }

    /// `g^{γα} ∇_γ T_{α…}`: divergence on the first slot.
    pub fn div(&self, t: &NTensor) -> NTensor {
        let k = self.k;
        let r = t.rank;
        assert!(r >= 1, "divergence needs rank >= 1");
        let total = k.pow(r as u32 - 1);
        let comps = (0..total)
            .map(|flat| {
                let rest = unflatten(flat, k, r - 1);
                let mut acc: Option<Vec<Jet>> = None;
                for gam in 0..k {
                    for a in 0..k {
                        let mut idx = vec![a];
                        idx.extend_from_slice(&rest);
                        let mut term = jv::derivative(&t.comps[flatten(&idx, k)], gam);
                        for slot in 0..r {
                            let mut j = idx.clone();
                            for mu in 0..k {
                                j[slot] = mu;
                                let c = self.gamma[mu][gam][idx[slot]].scale(-1.0);
                                jv::axpy(&mut term, &c, &t.comps[flatten(&j, k)]);
                            }
                        }
                        let scaled = jv::scale(&term, &self.ginv[gam][a]);
                        acc = Some(match acc {
                            None => scaled,
                            Some(s) => jv::add(&s, &scaled),
                        });
                    }
                }
                self.project_if(t.normal, acc.expect("k >= 1"))
            })
            .collect();
        NTensor { rank: r - 1, normal: t.normal, comps }
    }

    /// Contraction of the first two slots with `g⁻¹`.
    pub fn trace(&self, t: &NTensor) -> NTensor {
        let k = self.k;
        let r = t.rank;
        let total = k.pow(r as u32 - 2);
        let comps = (0..total)
            .map(|flat| {
                let rest = unflatten(flat, k, r - 2);
                let mut acc: Option<Vec<Jet>> = None;
                for a in 0..k {
                    for b in 0..k {
                        let mut idx = vec![a, b];
                        idx.extend_from_slice(&rest);
                        let s = jv::scale(&t.comps[flatten(&idx, k)], &self.ginv[a][b]);
                        acc = Some(match acc {
                            None => s,
                            Some(v) => jv::add(&v, &s),
                        });
                    }
                }
                acc.expect("k >= 1")
            })
            .collect();
        NTensor { rank: r - 2, normal: t.normal, comps }
    }

    /// Rough Laplacian `g^{αβ} ∇_α ∇_β` of a normal field.
    pub fn laplacian(&self, v: &[Jet]) -> Vec<Jet> {
        let grad = self.cov(&NTensor::normal_field(v.to_vec()));
        self.div(&grad).comps.remove(0)
    }

    /// Raises both indices of a rank-2 scalar tensor.
    pub fn raise2(&self, a: &[Jet]) -> Vec<Jet> {
        let k = self.k;
        let mut out = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                let mut acc = Jet::zero(k, a[0].order().min(self.ginv[0][0].order()));
                for p in 0..k {
                    for q in 0..k {
                        let t = &self.ginv[i][p] * &self.ginv[j][q];
                        acc.fma_assign(&t, &a[p * k + q]);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    /// `⟨L_{αβ}, V⟩` as a rank-2 scalar tensor.
    pub fn l_dot(&self, v: &[Jet]) -> Vec<Jet> {
        self.l.comps.iter().map(|c| jv::dot(c, v)).collect()
    }

    /// `L_{αβ} A^{αβ}` for a rank-2 scalar tensor with lower indices.
    pub fn l_contract(&self, a_lower: &[Jet]) -> Vec<Jet> {
        let up = self.raise2(a_lower);
        let o = up[0].order().min(self.l.comps[0][0].order());
        let mut acc = jv::zero(self.n, self.k, o);
        for (c, a) in self.l.comps.iter().zip(&up) {
            jv::axpy(&mut acc, a, c);
        }
        acc
    }
}

/// Pointwise geometry as floating-point values.
#[derive(Debug, Clone)]
pub struct GeometryData {
    pub u: Vec<f64>,
    pub k: usize,
    pub n: usize,
    pub sphere: bool,
    pub x: DVector<f64>,
    /// Columns are `∂_α x`.
    pub tangents: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub sqrt_det_g: f64,
    /// `christoffel[(μ·k + α)·k + β] = Γ^μ_{αβ}`.
    pub christoffel: Vec<f64>,
    pub projector: DMatrix<f64>,
    /// `l[α·k + β] = L_{αβ}`.
    pub l: Vec<DVector<f64>>,
    pub h: DVector<f64>,
    /// Trace-free part `L − (H/k) g`.
    pub l0: Vec<DVector<f64>>,
    /// `∇_α H`, lower index.
    pub grad_h: Option<Vec<DVector<f64>>>,
    pub lap_h: Option<DVector<f64>>,
    pub bilap_h: Option<DVector<f64>>,
    pub condition: f64,
}

fn dvec(v: &[Jet]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(Jet::value))
}

impl GeometryData {
    pub fn from_jets(geo: &JetGeometry, u: &[f64], depth: Depth) -> Self {
        let (k, n) = (geo.k, geo.n);
        let g = DMatrix::from_fn(k, k, |a, b| geo.g[a][b].value());
        let ginv = DMatrix::from_fn(k, k, |a, b| geo.ginv[a][b].value());
        let tangents = DMatrix::from_fn(n, k, |i, a| geo.tangents[a][i].value());
        let mut projector = DMatrix::zeros(n, n);
        for i in 0..n {
            let col: Vec<Jet> = (0..n).map(|j| Jet::constant(k, 0, if i == j { 1.0 } else { 0.0 })).collect();
            for (j, pj) in geo.proj.apply(&col).iter().enumerate() {
                projector[(j, i)] = pj.value();
            }
        }
        let l: Vec<DVector<f64>> = geo.l.comps.iter().map(|c| dvec(c)).collect();
        let h = dvec(&geo.h);
        let l0 = (0..k * k).map(|i| &l[i] - &h * (g[(i / k, i % k)] / k as f64)).collect();
        let mut christoffel = Vec::with_capacity(k * k * k);
        for mu in 0..k {
            for a in 0..k {
                for b in 0..k {
                    christoffel.push(geo.gamma[mu][a][b].value());
                }
            }
        }
        let (mut grad_h, mut lap_h, mut bilap_h) = (None, None, None);
        if depth >= Depth::Gradient {
            let gh = geo.cov(&NTensor::normal_field(geo.h.clone()));
            grad_h = Some(gh.comps.iter().map(|c| dvec(c)).collect());
            if depth >= Depth::Laplacian {
                let lap = geo.div(&gh).comps.remove(0);
                lap_h = Some(dvec(&lap));
                if depth >= Depth::Bilaplacian {
                    bilap_h = Some(dvec(&geo.laplacian(&lap)));
                }
            }
        }
        GeometryData {
            u: u.to_vec(),
            k,
            n,
            sphere: geo.sphere,
            x: dvec(&geo.x),
            sqrt_det_g: g.determinant().sqrt(),
            tangents,
            g,
            ginv,
            christoffel,
            projector,
            l,
            h,
            l0,
            grad_h,
            lap_h,
            bilap_h,
            condition: geo.condition,
        }
    }

    fn contract2(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        // g^{αγ} g^{βδ} A_{αβ} B_{γδ}
        (&self.ginv * a * &self.ginv).component_mul(b).sum()
    }

    fn pairing(&self, a: &[DVector<f64>], b: &[DVector<f64>]) -> DMatrix<f64> {
        let k = self.k;
        DMatrix::from_fn(k, k, |i, j| a[i * k + j].dot(&b[i * k + j]))
    }

    pub fn h_norm2(&self) -> f64 {
        self.h.norm_squared()
    }

    /// `|L|² = g^{αγ} g^{βδ} ⟨L_{αβ}, L_{γδ}⟩`.
    pub fn l_norm2(&self) -> f64 {
        self.tensor_norm2(&self.l)
    }

    pub fn l0_norm2(&self) -> f64 {
        self.tensor_norm2(&self.l0)
    }

    fn tensor_norm2(&self, t: &[DVector<f64>]) -> f64 {
        let k = self.k;
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    for d in 0..k {
                        s += self.ginv[(a, c)] * self.ginv[(b, d)] * t[a * k + b].dot(&t[c * k + d]);
                    }
                }
            }
        }
        s
    }

    fn dot_matrix(&self, t: &[DVector<f64>], v: &DVector<f64>) -> DMatrix<f64> {
        let k = self.k;
        DMatrix::from_fn(k, k, |i, j| t[i * k + j].dot(v))
    }

    /// `|Lᵗ H|² = Σ ⟨L_{αβ}, H⟩⟨L^{αβ}, H⟩`.
    pub fn lt_h_norm2(&self) -> f64 {
        let a = self.dot_matrix(&self.l, &self.h);
        self.contract2(&a, &a)
    }

    pub fn l0t_h_norm2(&self) -> f64 {
        let a = self.dot_matrix(&self.l0, &self.h);
        self.contract2(&a, &a)
    }

    /// `|∇H|² = g^{αβ} ⟨∇_α H, ∇_β H⟩`; requires gradient depth.
    pub fn grad_h_norm2(&self) -> Option<f64> {
        let gh = self.grad_h.as_ref()?;
        let k = self.k;
        let m = DMatrix::from_fn(k, k, |a, b| gh[a].dot(&gh[b]));
        Some(self.ginv.component_mul(&m).sum())
    }

    /// `Eᵀ g E = I` with `E` upper triangular.
    pub fn orthonormal_frame(&self) -> DMatrix<f64> {
        let c = self.g.clone().cholesky().expect("metric is positive definite").l();
        c.transpose().try_inverse().expect("Cholesky factor is invertible")
    }

    /// Second fundamental form in the orthonormal frame of [`Self::orthonormal_frame`].
    pub fn frame_tensor(&self, t: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let k = self.k;
        let e = self.orthonormal_frame();
        let mut out = vec![DVector::zeros(self.n); k * k];
        for a in 0..k {
            for b in 0..k {
                let mut acc = DVector::zeros(self.n);
                for al in 0..k {
                    for be in 0..k {
                        let w = e[(al, a)] * e[(be, b)];
                        if w != 0.0 {
                            acc += &t[al * k + be] * w;
                        }
                    }
                }
                out[a * k + b] = acc;
            }
        }
        out
    }

    /// Unit normal spanning the normal space of a hypersurface; `None` in higher codimension.
    pub fn unit_normal(&self) -> Option<DVector<f64>> {
        let codim = self.n - self.k - usize::from(self.sphere);
        if codim != 1 {
            return None;
        }
        let (mut best, mut col) = (0.0, 0);
        for j in 0..self.n {
            if self.projector[(j, j)] > best {
                best = self.projector[(j, j)];
                col = j;
            }
        }
        let v = self.projector.column(col).into_owned();
        Some(&v / v.norm())
    }

    /// `⟨H, ν⟩` for a given unit normal.
    pub fn scalar_h(&self, nu: &DVector<f64>) -> f64 {
        self.h.dot(nu)
    }

    /// `|L(e_a, e_b)|` pairing matrix with `ν` in the orthonormal frame.
    pub fn frame_scalar_l(&self, nu: &DVector<f64>) -> DMatrix<f64> {
        let f = self.frame_tensor(&self.l);
        let k = self.k;
        DMatrix::from_fn(k, k, |a, b| f[a * k + b].dot(nu))
    }

    pub fn pairing_matrix(&self, a: &[DVector<f64>], b: &[DVector<f64>]) -> DMatrix<f64> {
        self.pairing(a, b)
    }
}

/// Geometry of `chart` at parameter point `u` to the requested depth.
pub fn geometry_at(chart: &ImmersionChart, background: Background, u: &[f64], depth: Depth) -> Result<GeometryData> {
    let geo = JetGeometry::from_chart(chart, background, u, depth)?;
    Ok(GeometryData::from_jets(&geo, u, depth))
}

/// Intrinsic curvature of a 4-dimensional submanifold via the Gauss equation,
/// expressed in an orthonormal frame.
#[derive(Debug, Clone)]
pub struct IntrinsicCurvature {
    /// `riemann[((a·4 + b)·4 + c)·4 + d] = R̄_{abcd}`.
    pub riemann: Vec<f64>,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub schouten: DMatrix<f64>,
    pub weyl: Vec<f64>,
    pub weyl_norm2: f64,
    pub sigma2: f64,
    pub l0_norm2: f64,
    /// `tr L̊³` and `tr L̊⁴` for hypersurfaces, relative to [`GeometryData::unit_normal`].
    pub tr_l0_3: Option<f64>,
    pub tr_l0_4: Option<f64>,
    /// Scalar mean curvature for the same normal.
    pub h_scalar: Option<f64>,
}

impl IntrinsicCurvature {
    pub fn l0_norm4(&self) -> f64 {
        self.l0_norm2 * self.l0_norm2
    }

    /// Schouten–trace-free coupling `P̄_α^γ L̊^{αβ} L̊_{γβ}` for hypersurfaces.
    pub fn schouten_l0_l0(&self, l0_frame: &DMatrix<f64>) -> f64 {
        (&self.schouten * l0_frame * l0_frame).trace()
    }
}

fn ridx(a: usize, b: usize, c: usize, d: usize) -> usize {
    ((a * 4 + b) * 4 + c) * 4 + d
}

pub fn intrinsic_curvature(geom: &GeometryData) -> Result<IntrinsicCurvature> {
    if geom.k != 4 {
        return Err(Error::Unsupported(format!("intrinsic curvature needs k = 4, got {}", geom.k)));
    }
    let lf = geom.frame_tensor(&geom.l);
    let c = if geom.sphere { 1.0 } else { 0.0 };
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut riemann = vec![0.0; 256];
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    riemann[ridx(a, b, cc, d)] = lf[a * 4 + cc].dot(&lf[b * 4 + d]) - lf[a * 4 + d].dot(&lf[b * 4 + cc])
                        + c * (delta(a, cc) * delta(b, d) - delta(a, d) * delta(b, cc));
                }
            }
        }
    }
    let ricci = DMatrix::<f64>::from_fn(4, 4, |b, d| (0..4).map(|a| riemann[ridx(a, b, a, d)]).sum());
    let scalar = ricci.trace();
    let schouten: DMatrix<f64> = (&ricci - DMatrix::<f64>::identity(4, 4) * (scalar / 6.0)) * 0.5;
    let p = &schouten;
    let mut weyl = vec![0.0; 256];
    for a in 0..4 {
        for b in 0..4 {
            for cc in 0..4 {
                for d in 0..4 {
                    let pg = p[(a, cc)] * delta(b, d) + p[(b, d)] * delta(a, cc)
                        - p[(a, d)] * delta(b, cc)
                        - p[(b, cc)] * delta(a, d);
                    weyl[ridx(a, b, cc, d)] = riemann[ridx(a, b, cc, d)] - pg;
                }
            }
        }
    }
    let weyl_norm2 = weyl.iter().map(|w| w * w).sum();
    let tr = p.trace();
    let sigma2 = 0.5 * (tr * tr - p.norm_squared());
    let (tr_l0_3, tr_l0_4, h_scalar) = match geom.unit_normal() {
        Some(nu) => {
            let l0f = geom.frame_tensor(&geom.l0);
            let m = DMatrix::from_fn(4, 4, |a, b| l0f[a * 4 + b].dot(&nu));
            let m2 = &m * &m;
            (Some((&m2 * &m).trace()), Some((&m2 * &m2).trace()), Some(geom.h.dot(&nu)))
        }
        None => (None, None, None),
    };
    Ok(IntrinsicCurvature {
        riemann,
        ricci,
        scalar,
        schouten,
        weyl,
        weyl_norm2,
        sigma2,
        l0_norm2: geom.l0_norm2(),
        tr_l0_3,
        tr_l0_4,
        h_scalar,
    })
}
