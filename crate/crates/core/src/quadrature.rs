//! Tensor-product quadrature on chart parameter domains.
//!
//! Weights are pure parameter-space weights; the geometric factor `√det g` is
//! applied by the caller. For polar parameters the `sin φ` (or `sin² χ`) factor
//! of the area element is divided out of the weight so that the integrand times
//! the weight is a smooth function of `cos φ`.

use std::f64::consts::PI;

/// How a chart parameter is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Angle on `[0, 2π)`: equispaced trapezoid rule.
    Periodic,
    /// `φ ∈ (0, π)` with an odd power of `sin φ` in the area element:
    /// Gauss–Legendre in `s = cos φ`.
    Polar,
    /// `χ ∈ (0, π)` with `sin² χ` in the area element: open trapezoid rule.
    PolarEven,
}

/// One-dimensional rule: `(node, weight)` pairs.
pub fn rule_1d(kind: ParamKind, n: usize) -> Vec<(f64, f64)> {
    match kind {
        ParamKind::Periodic => (0..n).map(|i| (2.0 * PI * i as f64 / n as f64, 2.0 * PI / n as f64)).collect(),
        ParamKind::Polar => gauss_legendre(n)
            .into_iter()
            .map(|(s, w)| (s.acos(), w / (1.0 - s * s).sqrt()))
            .collect(),
        ParamKind::PolarEven => {
            let h = PI / (n as f64 + 1.0);
            (1..=n).map(|i| (h * i as f64, h)).collect()
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes in decreasing order.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// Composite Gauss–Legendre rule on `[a, b]` split at `breaks`, `n` nodes per panel.
pub fn composite_gauss_legendre(breaks: &[f64], n: usize) -> Vec<(f64, f64)> {
    let base = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        out.extend(base.iter().map(|&(x, wt)| (mid + half * x, half * wt)));
    }
    out
}

/// Tensor-product rule over a chart domain.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Flattened nodes, `dim` coordinates each.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// `collapsed[i]` replaces a periodic parameter by a single node with weight
    /// `2π`, which is exact when the integrand does not depend on it.
    pub fn tensor(kinds: &[ParamKind], n: usize, collapsed: &[bool]) -> Self {
        let rules: Vec<Vec<(f64, f64)>> = kinds
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if collapsed.get(i).copied().unwrap_or(false) {
                    vec![(0.0, 2.0 * PI)]
                } else {
                    rule_1d(k, n)
                }
            })
            .collect();
        let total: usize = rules.iter().map(Vec::len).product();
        let dim = kinds.len();
        let mut nodes = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = 1.0;
            for (d, r) in rules.iter().enumerate() {
                nodes.push(r[idx[d]].0);
                w *= r[idx[d]].1;
            }
            weights.push(w);
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < rules[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        QuadratureRule { dim, nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
}

/// Pairwise (cascade) summation with a fixed reduction tree.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if v.len() <= BLOCK {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let r = gauss_legendre(8);
        for deg in 0..16 {
            let q: f64 = r.iter().map(|&(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn uniform_periodic_rule() {
        let q = QuadratureRule::tensor(&[ParamKind::Periodic; 4], 8, &[]);
        assert_eq!(q.len(), 8usize.pow(4));
        let w = (2.0 * PI / 8.0).powi(4);
        assert!(q.weights.iter().all(|x| (x - w).abs() < 1e-15));
        assert!((pairwise_sum(&q.weights) - (2.0 * PI).powi(4)).abs() < 1e-12 * (2.0 * PI).powi(4));
    }

    #[test]
    fn polar_nodes_avoid_poles_and_absorb_sine() {
        for n in [4, 9, 32] {
            let r = rule_1d(ParamKind::Polar, n);
            assert!(r.iter().all(|&(p, _)| p > 0.0 && p < PI && p.sin() > 0.0));
            let s: f64 = r.iter().map(|&(p, w)| w * p.sin()).sum();
            assert!((s - 2.0).abs() < 1e-13);
            let e = rule_1d(ParamKind::PolarEven, n);
            let s2: f64 = e.iter().map(|&(p, w)| w * p.sin().powi(2)).sum();
            assert!((s2 - PI / 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn collapsed_parameter_has_single_node() {
        let q = QuadratureRule::tensor(&[ParamKind::Polar, ParamKind::Periodic], 6, &[false, true]);
        assert_eq!(q.len(), 6);
        assert!(q.weights.iter().all(|w| *w > 0.0));
    }

    #[test]
    fn pairwise_sum_is_deterministic() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum(&v.clone()).to_bits());
    }

    proptest! {
        #[test]
        fn trapezoid_is_exact_on_trig_polynomials(a in -1.0f64..1.0, b in -1.0f64..1.0, deg in 1usize..6) {
            let f = |t: f64| 1.0 + a * (deg as f64 * t).cos() + b * ((deg as f64) * t).sin();
            for n in [2 * deg + 2, 4 * deg + 4] {
                let q: f64 = rule_1d(ParamKind::Periodic, n).iter().map(|&(t, w)| w * f(t)).sum();
                prop_assert!((q - 2.0 * PI).abs() < 1e-12);
            }
        }
    }
}
