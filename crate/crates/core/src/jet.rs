//! Truncated multivariate Taylor series ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients `∂^a f(u₀) / a!` of a scalar
//! function of up to four variables for every multi-index `|a| ≤ order`.
//! Arithmetic on jets is exact up to the truncation order, which is what the
//! geometry engine relies on: the obstruction field needs sixth derivatives of
//! the immersion and finite differences cannot deliver them.
//!
//! Coefficients are stored in graded order (all degree-0 monomials, then
//! degree 1, ...), so truncating to a lower order is a prefix slice.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported truncation order.
pub const MAX_ORDER: usize = 6;
/// Largest supported number of variables.
pub const MAX_VARS: usize = 4;

type Mono = [u8; MAX_VARS];

struct Tables {
    monos: Vec<Mono>,
    /// `len_upto[o]` = number of monomials of degree ≤ o.
    len_upto: [usize; MAX_ORDER + 1],
    /// Product triples `(i, j, k)` with `mono[i] + mono[j] = mono[k]`, sorted by degree of `k`.
    mul: Vec<(u16, u16, u16)>,
    /// `mul_upto[o]` = number of triples whose result has degree ≤ o.
    mul_upto: [usize; MAX_ORDER + 1],
    /// `deriv[v][t] = (s, f)`: coefficient `t` of `∂_v f` is `f * c[s]`.
    deriv: Vec<Vec<(u16, f64)>>,
}

fn degree(m: &Mono) -> usize {
    m.iter().map(|&e| e as usize).sum()
}

impl Tables {
    fn build(nv: usize) -> Self {
        let mut monos: Vec<Mono> = Vec::new();
        let mut len_upto = [0usize; MAX_ORDER + 1];
        for d in 0..=MAX_ORDER {
            // lexicographic within the degree, first variable most significant
            let mut level = Vec::new();
            enumerate(nv, d, &mut [0u8; MAX_VARS], 0, &mut level);
            level.sort_by(|a, b| b.cmp(a));
            monos.extend(level);
            len_upto[d] = monos.len();
        }
        let index_of = |m: &Mono| monos.iter().position(|x| x == m);

        let mut mul = Vec::new();
        for (k, mk) in monos.iter().enumerate() {
            for (i, mi) in monos.iter().enumerate() {
                if (0..MAX_VARS).all(|v| mi[v] <= mk[v]) {
                    let mut mj = *mk;
                    for v in 0..MAX_VARS {
                        mj[v] -= mi[v];
                    }
                    let j = index_of(&mj).expect("complementary monomial");
                    mul.push((i as u16, j as u16, k as u16));
                }
            }
        }
        mul.sort_by_key(|&(_, _, k)| degree(&monos[k as usize]));
        let mut mul_upto = [0usize; MAX_ORDER + 1];
        for (o, slot) in mul_upto.iter_mut().enumerate() {
            *slot = mul.iter().filter(|&&(_, _, k)| degree(&monos[k as usize]) <= o).count();
        }

        let mut deriv = Vec::with_capacity(nv);
        for v in 0..nv {
            let mut table = Vec::new();
            for m in monos.iter().take(len_upto[MAX_ORDER - 1]) {
                let mut up = *m;
                up[v] += 1;
                let s = index_of(&up).expect("raised monomial");
                table.push((s as u16, up[v] as f64));
            }
            deriv.push(table);
        }
        Tables { monos, len_upto, mul, mul_upto, deriv }
    }
}

fn enumerate(nv: usize, remaining: usize, cur: &mut Mono, var: usize, out: &mut Vec<Mono>) {
    if var + 1 == nv {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for e in 0..=remaining {
        cur[var] = e as u8;
        enumerate(nv, remaining - e, cur, var + 1, out);
    }
    cur[var] = 0;
}

fn tables(nv: usize) -> &'static Tables {
    static TABLES: [OnceLock<Tables>; MAX_VARS] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=MAX_VARS).contains(&nv), "jets support 1..=4 variables");
    TABLES[nv - 1].get_or_init(|| Tables::build(nv))
}

/// Number of Taylor coefficients of a jet in `nv` variables truncated at `order`.
pub fn coefficient_count(nv: usize, order: usize) -> usize {
    tables(nv).len_upto[order]
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder { requested: order, max: MAX_ORDER });
    }
    Ok(())
}

/// Truncated Taylor expansion of a scalar function around a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    nv: u8,
    order: u8,
    c: Vec<f64>,
}

impl Jet {
    pub fn zero(nv: usize, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        Jet { nv: nv as u8, order: order as u8, c: vec![0.0; coefficient_count(nv, order)] }
    }

    pub fn constant(nv: usize, order: usize, value: f64) -> Self {
        let mut j = Self::zero(nv, order);
        j.c[0] = value;
        j
    }

    /// The coordinate function `u_var` expanded around `value`.
    pub fn variable(nv: usize, order: usize, var: usize, value: f64) -> Self {
        let mut j = Self::constant(nv, order, value);
        if order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Checked constructor used at API boundaries.
    pub fn try_variable(nv: usize, order: usize, var: usize, value: f64) -> Result<Self> {
        check_order(order)?;
        Ok(Self::variable(nv, order, var, value))
    }

    pub fn num_vars(&self) -> usize {
        self.nv as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Constant term.
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficient of the monomial with exponents `multi`.
    pub fn coeff(&self, multi: &[usize]) -> f64 {
        let t = tables(self.num_vars());
        let mut m = [0u8; MAX_VARS];
        for (slot, &e) in m.iter_mut().zip(multi) {
            *slot = e as u8;
        }
        if degree(&m) > self.order() {
            return 0.0;
        }
        match t.monos[..self.c.len()].iter().position(|x| *x == m) {
            Some(i) => self.c[i],
            None => 0.0,
        }
    }

    /// Partial derivative `∂^multi f` at the base point.
    pub fn partial(&self, multi: &[usize]) -> f64 {
        let fact: f64 = multi.iter().map(|&e| (1..=e).product::<usize>() as f64).product();
        self.coeff(multi) * fact
    }

    /// Exponent vectors of the stored coefficients, in storage order.
    pub fn monomials(&self) -> impl Iterator<Item = &[u8]> {
        let nv = self.num_vars();
        tables(nv).monos[..self.c.len()].iter().map(move |m| &m[..nv])
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        Jet { nv: self.nv, order: order as u8, c: self.c[..coefficient_count(self.num_vars(), order)].to_vec() }
    }

    /// `∂/∂u_var`; the result has one order less.
    pub fn derivative(&self, var: usize) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let nv = self.num_vars();
        let order = self.order() - 1;
        let table = &tables(nv).deriv[var];
        let n = coefficient_count(nv, order);
        let c = table[..n].iter().map(|&(s, f)| f * self.c[s as usize]).collect();
        Jet { nv: self.nv, order: order as u8, c }
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet { nv: self.nv, order: self.order, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    /// `self += a * b`, truncated to `self`'s order.
    pub fn fma_assign(&mut self, a: &Jet, b: &Jet) {
        let o = self.order().min(a.order()).min(b.order());
        let t = tables(self.num_vars());
        for &(i, j, k) in &t.mul[..t.mul_upto[o]] {
            self.c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
    }

    /// Evaluates `Σ_n coeffs[n] (self − self(u₀))^n`, i.e. composes a scalar
    /// function given by its Taylor coefficients at `self.value()`.
    pub fn compose(&self, coeffs: &[f64]) -> Self {
        let o = self.order();
        debug_assert!(coeffs.len() > o);
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut r = Jet::constant(self.num_vars(), o, coeffs[o]);
        for n in (0..o).rev() {
            r = &r * &delta;
            r.c[0] += coeffs[n];
        }
        r
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&taylor_from_derivs(|n| cycle[n % 4], self.order()))
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&taylor_from_derivs(|n| cycle[n % 4], self.order()))
    }

    /// `self^p` for real `p`; the base value must be positive unless `p` is a
    /// non-negative integer.
    pub fn powf(&self, p: f64) -> Self {
        let x = self.value();
        let o = self.order();
        let mut coeffs = Vec::with_capacity(o + 1);
        let mut binom = 1.0;
        for n in 0..=o {
            coeffs.push(binom * x.powf(p - n as f64));
            binom *= (p - n as f64) / (n as f64 + 1.0);
        }
        self.compose(&coeffs)
    }

    pub fn recip(&self) -> Self {
        let x = self.value();
        let inv = 1.0 / x;
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut term = inv;
        for _ in 0..=self.order() {
            coeffs.push(term);
            term *= -inv;
        }
        self.compose(&coeffs)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn div(&self, other: &Jet) -> Self {
        self * &other.recip()
    }

    pub fn square(&self) -> Self {
        self * self
    }
}

fn taylor_from_derivs(deriv: impl Fn(usize) -> f64, order: usize) -> Vec<f64> {
    let mut fact = 1.0;
    (0..=order)
        .map(|n| {
            if n > 0 {
                fact *= n as f64;
            }
            deriv(n) / fact
        })
        .collect()
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        debug_assert_eq!(self.nv, rhs.nv);
        let o = self.order().min(rhs.order());
        let mut out = Jet::zero(self.num_vars(), o);
        let t = tables(self.num_vars());
        for &(i, j, k) in &t.mul[..t.mul_upto[o]] {
            out.c[k as usize] += self.c[i as usize] * rhs.c[j as usize];
        }
        out
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        let o = self.order().min(rhs.order());
        let n = coefficient_count(self.num_vars(), o);
        let c = self.c[..n].iter().zip(&rhs.c[..n]).map(|(a, b)| a + b).collect();
        Jet { nv: self.nv, order: o as u8, c }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        let o = self.order().min(rhs.order());
        let n = coefficient_count(self.num_vars(), o);
        let c = self.c[..n].iter().zip(&rhs.c[..n]).map(|(a, b)| a - b).collect();
        Jet { nv: self.nv, order: o as u8, c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order < self.order {
            *self = self.truncate(rhs.order());
        }
        let n = self.c.len();
        for (a, b) in self.c.iter_mut().zip(&rhs.c[..n]) {
            *a += b;
        }
    }
}

/// Componentwise helpers for ambient-vector-valued jets.
pub mod vector {
    use super::Jet;

    pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
        let o = a.iter().chain(b).map(Jet::order).min().unwrap_or(0);
        let mut acc = Jet::zero(a[0].num_vars(), o);
        for (x, y) in a.iter().zip(b) {
            acc.fma_assign(x, y);
        }
        acc
    }

    pub fn scale(a: &[Jet], s: &Jet) -> Vec<Jet> {
        a.iter().map(|x| x * s).collect()
    }

    pub fn scale_f(a: &[Jet], s: f64) -> Vec<Jet> {
        a.iter().map(|x| x.scale(s)).collect()
    }

    pub fn add(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    pub fn sub(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    }

    pub fn derivative(a: &[Jet], var: usize) -> Vec<Jet> {
        a.iter().map(|x| x.derivative(var)).collect()
    }

    pub fn values(a: &[Jet]) -> Vec<f64> {
        a.iter().map(Jet::value).collect()
    }

    pub fn zero(n: usize, nv: usize, order: usize) -> Vec<Jet> {
        (0..n).map(|_| Jet::zero(nv, order)).collect()
    }

    /// `acc += s * v`, componentwise.
    pub fn axpy(acc: &mut [Jet], s: &Jet, v: &[Jet]) {
        for (a, x) in acc.iter_mut().zip(v) {
            if a.order() > s.order().min(x.order()) {
                *a = a.truncate(s.order().min(x.order()));
            }
            a.fma_assign(s, x);
        }
    }

    pub fn truncate(a: &[Jet], order: usize) -> Vec<Jet> {
        a.iter().map(|x| x.truncate(order)).collect()
    }
}
