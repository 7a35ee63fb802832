//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients of a smooth function of `nvars`
//! variables around a base point, truncated at total degree `order`. Every
//! arithmetic operation propagates the full expansion, so partial derivatives
//! of any order up to `order` come out exact to rounding. Metric components,
//! warping profiles and potentials are all written as functions of jets.
//!
//! Monomials are stored in graded order with a fixed ordering inside each
//! degree. The ordering does not depend on the truncation order, so an
//! order-`k` jet is a prefix of an order-`K` jet for `k <= K`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

/// Monomial layout and product tables for one `(nvars, order)` pair.
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    mul: Vec<(u32, u32, u32)>,
    deriv: Vec<Vec<(u32, u32, f64)>>,
    degree_start: Vec<usize>,
}

fn monomials_of_degree(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    if nvars == 0 {
        return if degree == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut tail in monomials_of_degree(nvars - 1, degree - first) {
            let mut m = Vec::with_capacity(nvars);
            m.push(first as u8);
            m.append(&mut tail);
            out.push(m);
        }
    }
    out
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> Self {
        let mut exps = Vec::new();
        let mut degree_start = Vec::with_capacity(order + 2);
        for d in 0..=order {
            degree_start.push(exps.len());
            exps.extend(monomials_of_degree(nvars, d));
        }
        degree_start.push(exps.len());
        let index: HashMap<Vec<u8>, usize> =
            exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let deg = |e: &[u8]| e.iter().map(|&v| v as usize).sum::<usize>();
        let mut mul = Vec::new();
        for (a, ea) in exps.iter().enumerate() {
            let da = deg(ea);
            for (b, eb) in exps.iter().enumerate() {
                if da + deg(eb) > order {
                    continue;
                }
                let sum: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                mul.push((a as u32, b as u32, index[&sum] as u32));
            }
        }
        mul.sort_by_key(|&(_, _, c)| c);

        let mut deriv = Vec::with_capacity(nvars);
        for var in 0..nvars {
            let mut table = Vec::new();
            if order > 0 {
                for (dst, e) in exps.iter().enumerate().take(degree_start[order]) {
                    let mut up = e.clone();
                    up[var] += 1;
                    table.push((dst as u32, index[&up] as u32, (e[var] + 1) as f64));
                }
            }
            deriv.push(table);
        }
        JetSpace {
            nvars,
            order,
            exps,
            index,
            mul,
            deriv,
            degree_start,
        }
    }

    /// Shared space for `nvars` variables truncated at total degree `order`.
    pub fn get(nvars: usize, order: usize) -> &'static JetSpace {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetSpace>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Box::leak(Box::new(JetSpace::build(nvars, order))))
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    fn lower(&self) -> &'static JetSpace {
        JetSpace::get(self.nvars, self.order - 1)
    }

    fn with_order(&self, order: usize) -> &'static JetSpace {
        JetSpace::get(self.nvars, order)
    }
}

/// A truncated Taylor expansion; see the module docs.
#[derive(Clone)]
pub struct Jet {
    space: &'static JetSpace,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.space.nvars)
            .field("order", &self.space.order)
            .field("coeffs", &self.c)
            .finish()
    }
}

impl Jet {
    pub fn constant(space: &'static JetSpace, value: f64) -> Self {
        let mut c = vec![0.0; space.len()];
        c[0] = value;
        Jet { space, c }
    }

    pub fn zero(space: &'static JetSpace) -> Self {
        Jet::constant(space, 0.0)
    }

    /// The coordinate function `x_var` expanded around `value`.
    pub fn variable(space: &'static JetSpace, var: usize, value: f64) -> Self {
        assert!(var < space.nvars, "variable index {var} out of range");
        let mut j = Jet::constant(space, value);
        if space.order > 0 {
            let mut e = vec![0u8; space.nvars];
            e[var] = 1;
            j.c[space.index[&e]] = 1.0;
        }
        j
    }

    /// Univariate jet `s0 + t` truncated at `order`.
    pub fn univariate(order: usize, s0: f64) -> Self {
        Jet::variable(JetSpace::get(1, order), 0, s0)
    }

    /// Builds a jet from raw Taylor coefficients laid out in `space` order.
    pub fn from_coeffs(space: &'static JetSpace, mut coeffs: Vec<f64>) -> Self {
        coeffs.resize(space.len(), 0.0);
        Jet { space, c: coeffs }
    }

    /// Same value and variable count, but with every coefficient above degree 0 dropped.
    pub fn constant_like(&self, value: f64) -> Self {
        Jet::constant(self.space, value)
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    /// Raw Taylor coefficients (not derivatives).
    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let space = self.space.with_order(order);
        Jet {
            space,
            c: self.c[..space.len()].to_vec(),
        }
    }

    /// Partial derivative in `var`; the result is one order lower.
    pub fn deriv(&self, var: usize) -> Jet {
        assert!(self.order() > 0, "cannot differentiate an order-0 jet");
        let space = self.space.lower();
        let mut c = vec![0.0; space.len()];
        for &(dst, src, factor) in &self.space.deriv[var] {
            c[dst as usize] = self.c[src as usize] * factor;
        }
        Jet { space, c }
    }

    /// The mixed partial derivative with the given multiplicities per variable.
    pub fn partial(&self, counts: &[usize]) -> f64 {
        assert_eq!(counts.len(), self.nvars());
        let total: usize = counts.iter().sum();
        if total > self.order() {
            return 0.0;
        }
        let e: Vec<u8> = counts.iter().map(|&c| c as u8).collect();
        let idx = self.space.index[&e];
        let fact: f64 = counts.iter().map(|&k| factorial(k)).product();
        self.c[idx] * fact
    }

    fn unify<'a>(a: &'a Jet, b: &'a Jet) -> &'static JetSpace {
        debug_assert_eq!(a.nvars(), b.nvars(), "jets over different variable sets");
        if a.order() <= b.order() {
            a.space
        } else {
            b.space
        }
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        let space = Jet::unify(self, other);
        let c = self.c[..space.len()]
            .iter()
            .zip(&other.c[..space.len()])
            .map(|(&a, &b)| op(a, b))
            .collect();
        Jet { space, c }
    }

    fn product(&self, other: &Jet) -> Jet {
        let space = Jet::unify(self, other);
        if space.order == 0 {
            return Jet {
                space,
                c: vec![self.c[0] * other.c[0]],
            };
        }
        let mut c = vec![0.0; space.len()];
        for &(a, b, k) in &space.mul {
            c[k as usize] += self.c[a as usize] * other.c[b as usize];
        }
        Jet { space, c }
    }

    pub fn scale(&self, k: f64) -> Jet {
        Jet {
            space: self.space,
            c: self.c.iter().map(|v| v * k).collect(),
        }
    }

    /// Evaluates `sum_k coeffs[k] * (self - self.value())^k`, i.e. composes a
    /// univariate Taylor series (centred at this jet's value) with this jet.
    pub fn compose(&self, coeffs: &[f64]) -> Jet {
        let top = self.order().min(coeffs.len().saturating_sub(1));
        if self.order() == 0 || top == 0 {
            return Jet::constant(self.space, coeffs.first().copied().unwrap_or(0.0));
        }
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let mut acc = Jet::constant(self.space, coeffs[top]);
        for k in (0..top).rev() {
            acc = acc.product(&delta);
            acc.c[0] += coeffs[k];
        }
        acc
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&taylor_coeffs(self.order(), |k| cycle[k % 4]))
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&taylor_coeffs(self.order(), |k| cycle[k % 4]))
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&taylor_coeffs(self.order(), |k| if k % 2 == 0 { s } else { c }))
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.value().sinh(), self.value().cosh());
        self.compose(&taylor_coeffs(self.order(), |k| if k % 2 == 0 { c } else { s }))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&taylor_coeffs(self.order(), |_| e))
    }

    pub fn ln(&self) -> Jet {
        let v = self.value();
        let mut coeffs = vec![v.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            coeffs.push(sign / (k as f64 * v.powi(k as i32)));
        }
        self.compose(&coeffs)
    }

    /// Real power; the base value must be positive unless `p` is an integer.
    pub fn powf(&self, p: f64) -> Jet {
        let v = self.value();
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut binom = 1.0;
        for k in 0..=self.order() {
            if k > 0 {
                binom *= (p - (k as f64 - 1.0)) / k as f64;
            }
            coeffs.push(binom * v.powf(p - k as f64));
        }
        self.compose(&coeffs)
    }

    pub fn powi(&self, p: i32) -> Jet {
        if p < 0 {
            return self.powi(-p).recip();
        }
        let mut acc = self.constant_like(1.0);
        for _ in 0..p {
            acc = acc.product(self);
        }
        acc
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        let v = self.value();
        let inv = 1.0 / v;
        let mut coeffs = Vec::with_capacity(self.order() + 1);
        let mut term = inv;
        for _ in 0..=self.order() {
            coeffs.push(term);
            term *= -inv;
        }
        self.compose(&coeffs)
    }

    /// Largest coefficient magnitude, used for relative tolerances.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficients of total degree exactly `d`.
    pub fn degree_slice(&self, d: usize) -> &[f64] {
        let s = self.space;
        &self.c[s.degree_start[d]..s.degree_start[d + 1]]
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn taylor_coeffs(order: usize, deriv: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for k in 0..=order {
        if k > 0 {
            fact *= k as f64;
        }
        out.push(deriv(k) / fact);
    }
    out
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));
jet_binop!(Div, div, |a, b| a.product(&b.recip()));

macro_rules! jet_scalar_op {
    ($trait:ident, $method:ident, $jet:ident, $k:ident, $body:expr, $rev:expr) => {
        impl $trait<f64> for &Jet {
            type Output = Jet;
            fn $method(self, $k: f64) -> Jet {
                let $jet = self;
                $body
            }
        }
        impl $trait<f64> for Jet {
            type Output = Jet;
            fn $method(self, $k: f64) -> Jet {
                let $jet = &self;
                $body
            }
        }
        impl $trait<&Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                let ($jet, $k) = (rhs, self);
                $rev
            }
        }
        impl $trait<Jet> for f64 {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                let ($jet, $k) = (&rhs, self);
                $rev
            }
        }
    };
}

jet_scalar_op!(
    Add,
    add,
    j,
    k,
    {
        let mut out = j.clone();
        out.c[0] += k;
        out
    },
    {
        let mut out = j.clone();
        out.c[0] += k;
        out
    }
);
jet_scalar_op!(
    Sub,
    sub,
    j,
    k,
    {
        let mut out = j.clone();
        out.c[0] -= k;
        out
    },
    {
        let mut out = j.scale(-1.0);
        out.c[0] += k;
        out
    }
);
jet_scalar_op!(Mul, mul, j, k, j.scale(k), j.scale(k));
jet_scalar_op!(Div, div, j, k, j.scale(1.0 / k), j.recip().scale(k));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        if rhs.order() < self.order() {
            *self = self.truncate(rhs.order());
        }
        let n = self.c.len();
        for (a, b) in self.c.iter_mut().zip(&rhs.c[..n]) {
            *a += b;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        if rhs.order() < self.order() {
            *self = self.truncate(rhs.order());
        }
        let n = self.c.len();
        for (a, b) in self.c.iter_mut().zip(&rhs.c[..n]) {
            *a -= b;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self -= &rhs;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, k: f64) {
        self.c.iter_mut().for_each(|v| *v *= k);
    }
}

/// Accumulates `sum_i a_i * b_i` without intermediate clones of the partial sum.
pub fn dot<'a>(pairs: impl IntoIterator<Item = (&'a Jet, &'a Jet)>, space: &'static JetSpace) -> Jet {
    let mut acc = Jet::zero(space);
    for (a, b) in pairs {
        acc += a * b;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_y(order: usize, x: f64, y: f64) -> (Jet, Jet) {
        let sp = JetSpace::get(2, order);
        (Jet::variable(sp, 0, x), Jet::variable(sp, 1, y))
    }

    #[test]
    fn polynomial_partials_are_exact() {
        let (x, y) = x_y(4, 1.5, -0.5);
        // p = x^3 y + 2 x y^2
        let p = &(&(&x * &x) * &x) * &y + &(&x * &(&y * &y)) * 2.0;
        assert!((p.partial(&[0, 0]) - (1.5f64.powi(3) * -0.5 + 2.0 * 1.5 * 0.25)).abs() < 1e-14);
        // d/dx = 3x^2 y + 2y^2
        assert!((p.partial(&[1, 0]) - (3.0 * 2.25 * -0.5 + 0.5)).abs() < 1e-14);
        // d2/dxdy = 3x^2 + 4y
        assert!((p.partial(&[1, 1]) - (3.0 * 2.25 - 2.0)).abs() < 1e-14);
        // d3/dx^3 = 6y
        assert!((p.partial(&[3, 0]) + 3.0).abs() < 1e-14);
        assert!((p.partial(&[3, 1]) - 6.0).abs() < 1e-14);
        assert_eq!(p.partial(&[0, 3]), 0.0);
    }

    #[test]
    fn transcendental_derivatives_match_closed_forms() {
        let s = Jet::univariate(5, 0.7);
        let sin = s.sin();
        for k in 0..=5 {
            let expect = [0.7f64.sin(), 0.7f64.cos(), -(0.7f64.sin()), -(0.7f64.cos())][k % 4];
            assert!((sin.partial(&[k]) - expect).abs() < 1e-13, "k = {k}");
        }
        let e = s.exp().ln();
        assert!((e.partial(&[0]) - 0.7).abs() < 1e-14);
        assert!((e.partial(&[1]) - 1.0).abs() < 1e-14);
        for k in 2..=5 {
            assert!(e.partial(&[k]).abs() < 1e-12);
        }
        let r = (&s * &s).sqrt();
        assert!((r.partial(&[1]) - 1.0).abs() < 1e-13);
        assert!(r.partial(&[2]).abs() < 1e-12);
        let inv = s.recip() * &s;
        assert!((inv.value() - 1.0).abs() < 1e-15);
        assert!(inv.partial(&[3]).abs() < 1e-12);
    }

    #[test]
    fn derivative_lowers_order_and_commutes() {
        let (x, y) = x_y(4, 0.3, 1.1);
        let f = (&x * &y).sin() + (&y * 2.0).exp() * &x;
        let fxy = f.deriv(0).deriv(1);
        let fyx = f.deriv(1).deriv(0);
        assert_eq!(fxy.order(), 2);
        for (a, b) in fxy.coeffs().iter().zip(fyx.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!((fxy.value() - f.partial(&[1, 1])).abs() < 1e-13);
    }

    #[test]
    fn mixed_order_arithmetic_truncates() {
        let (x, _) = x_y(4, 2.0, 0.0);
        let low = x.truncate(1);
        let prod = &x * &low;
        assert_eq!(prod.order(), 1);
        assert!((prod.partial(&[1, 0]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn powers_agree() {
        let s = Jet::univariate(6, 1.3);
        let a = s.powi(3);
        let b = s.powf(3.0);
        for (u, v) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((u - v).abs() < 1e-12);
        }
        let c = s.powi(-2) * s.powi(2);
        assert!((c.value() - 1.0).abs() < 1e-14);
        assert!(c.coeffs()[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
