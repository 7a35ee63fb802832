//! Volume integrals over warped models and the integral identities built on
//! them.
//!
//! On `ds^2 + sum_i r_i(s)^2 g_i` with homogeneous fibers and `f = f(s)`, every
//! integrand is a function of `s` alone, so
//! `int_M F = vol(F) * int F(s) prod_i r_i(s)^{d_i} ds`. The `s` integral uses
//! Gauss-Legendre on intervals and the trapezoidal rule on full periods, and
//! every estimate is repeated with doubled nodes to report its convergence.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levelset::{level_positions, REGULAR_GRADIENT};
use crate::statics::StaticModel;
use crate::tensor::flat;
use crate::tolerances::F_MIN;

/// Where to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Region {
    /// The whole (closed) model.
    ClosedManifold,
    /// `{c1 < f < c2}` for regular values `c1 < c2`.
    BetweenLevels { c1: f64, c2: f64 },
}

/// Node counts: Gauss-Legendre nodes per interval, trapezoidal nodes per period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureRule {
    pub gauss: usize,
    pub periodic: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule { gauss: 16, periodic: 24 }
    }
}

impl QuadratureRule {
    pub fn doubled(&self) -> Self {
        QuadratureRule {
            gauss: 2 * self.gauss,
            periodic: 2 * self.periodic,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(m.max(1)).expect("positive"));
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Trapezoidal (midpoint-shifted) nodes over one period starting at `a`.
pub fn trapezoid(m: usize, a: f64, period: f64) -> Vec<(f64, f64)> {
    let h = period / m as f64;
    (0..m).map(|i| (a + (i as f64 + 0.5) * h, h)).collect()
}

/// The `s`-pieces of a region and whether it is one full period.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pieces {
    pub intervals: Vec<(f64, f64)>,
    pub full_period: bool,
}

impl Pieces {
    /// Quadrature nodes `(s, weight)` for these pieces.
    pub fn nodes(&self, rule: QuadratureRule) -> Vec<(f64, f64)> {
        if self.full_period {
            let (a, b) = self.intervals[0];
            return trapezoid(rule.periodic, a, b - a);
        }
        self.intervals
            .iter()
            .flat_map(|&(a, b)| gauss_legendre(rule.gauss, a, b))
            .collect()
    }
}

/// Splits a region into `s`-intervals.
pub fn region_pieces(model: &StaticModel, region: Region) -> Result<Pieces> {
    let w = model
        .warped_product()
        .ok_or_else(|| Error::Region(format!("{}: integrals need a warped model", model.name)))?;
    let s = &w.s;
    match region {
        Region::ClosedManifold => {
            if s.is_periodic() {
                Ok(Pieces {
                    intervals: vec![(s.lo, s.lo + s.length())],
                    full_period: true,
                })
            } else if s.singular_ends {
                Ok(Pieces {
                    intervals: vec![(s.lo, s.hi)],
                    full_period: false,
                })
            } else {
                Err(Error::Region(format!("{}: the model is not closed", model.name)))
            }
        }
        Region::BetweenLevels { c1, c2 } => {
            if !(c1 < c2) {
                return Err(Error::Region(format!("empty level range ({c1}, {c2})")));
            }
            if w.fiber_volume().is_none() {
                return Err(Error::Region(format!("{}: level sets are not compact", model.name)));
            }
            let prof = model
                .f_profile
                .as_ref()
                .ok_or_else(|| Error::Region(format!("{}: no f(s) profile", model.name)))?;
            let mut cuts = vec![s.lo, if s.is_periodic() { s.lo + s.length() } else { s.hi }];
            for c in [c1, c2] {
                for p in level_positions(model, c)? {
                    let slope = prof.derivative(p, 1).abs();
                    if slope < REGULAR_GRADIENT {
                        return Err(Error::NotRegular(c, slope));
                    }
                    cuts.push(p);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let intervals: Vec<(f64, f64)> = cuts
                .windows(2)
                .map(|p| (p[0], p[1]))
                .filter(|&(a, b)| {
                    let v = prof.value(0.5 * (a + b));
                    b > a && v > c1 && v < c2
                })
                .collect();
            if intervals.is_empty() {
                return Err(Error::Region(format!("{}: f never lies in ({c1}, {c2})", model.name)));
            }
            // an interval ending at a non-periodic chart edge is not bounded by the level sets
            if !s.is_periodic() && !s.singular_ends {
                for &(a, b) in &intervals {
                    for e in [a, b] {
                        if e == s.lo || e == s.hi {
                            return Err(Error::Region(format!(
                                "{}: region ({c1}, {c2}) reaches the edge s = {e} of the window",
                                model.name
                            )));
                        }
                    }
                }
            }
            Ok(Pieces {
                intervals,
                full_period: false,
            })
        }
    }
}

/// Integrand values gathered at one node.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct NodeValues {
    pub f: f64,
    /// `B_jk f^j f^k`.
    pub bach_grad: f64,
    /// `B_jk f^{j,k}`.
    pub bach_hess: f64,
    pub d_sq: f64,
    /// `D_ijk f^{i,k} f^j`.
    pub d_hess_grad: f64,
    /// `D_ijk C^ijk`.
    pub d_dot_c: f64,
    pub c_sq: f64,
    /// `B_ij,^ij`.
    pub bach_double_divergence: f64,
    /// `C_ijk,^ijk`.
    pub cotton_triple_divergence: f64,
    /// `max_k |n^i f^j D_ijk|` with `n = grad f/|grad f|`.
    pub boundary_flux: f64,
}

/// All integrand values at `x` (metric jets of order 6).
pub fn node_values(model: &StaticModel, x: &[f64]) -> Result<NodeValues> {
    let mp = model.at(x, 6)?;
    let c = &mp.curv;
    let n = c.dim();
    let ginv = c.inverse_values();
    let grad = mp.f.gradient_up();
    let hess_up = mp.f.hessian().raise(0, &ginv).raise(1, &ginv);
    let b = c.bach()?;
    let d = mp.d_tensor()?;
    let cot = c.cotton()?;
    let mut bach_grad = 0.0;
    let mut bach_hess = 0.0;
    for j in 0..n {
        for k in 0..n {
            let bjk = b.components[j * n + k];
            bach_grad += bjk * grad[j] * grad[k];
            bach_hess += bjk * hess_up.components[j * n + k];
        }
    }
    let norm = grad
        .iter()
        .zip(mp.f.gradient())
        .map(|(u, l)| u * l)
        .sum::<f64>()
        .sqrt();
    let mut d_hess_grad = 0.0;
    let mut boundary_flux = 0.0f64;
    for k in 0..n {
        let mut flux = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dijk = d.components[flat(n, &[i, j, k])];
                flux += dijk * grad[i] * grad[j];
                d_hess_grad += dijk * hess_up.components[i * n + k] * grad[j];
            }
        }
        if norm > 0.0 {
            boundary_flux = boundary_flux.max((flux / norm).abs());
        }
    }
    Ok(NodeValues {
        f: mp.f_value(),
        bach_grad,
        bach_hess,
        d_sq: c.norm_sq(&d),
        d_hess_grad,
        d_dot_c: c.contract(&d, &cot),
        c_sq: c.norm_sq(&cot),
        bach_double_divergence: c.bach_double_divergence()?,
        cotton_triple_divergence: c.cotton_triple_divergence()?,
        boundary_flux,
    })
}

/// Node values with their full volume weights.
#[derive(Clone, Debug, Serialize)]
pub struct Sampled {
    pub nodes: Vec<(f64, f64, NodeValues)>,
}

impl Sampled {
    /// `sum_nodes weight * g(values)`, summed pairwise in node order.
    pub fn integral(&self, g: impl Fn(&NodeValues) -> f64) -> f64 {
        pairwise(&self.nodes.iter().map(|(_, w, v)| w * g(v)).collect::<Vec<f64>>())
    }

    pub fn max(&self, g: impl Fn(&NodeValues) -> f64) -> f64 {
        self.nodes.iter().map(|(_, _, v)| g(v)).fold(0.0, f64::max)
    }
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

/// Evaluates [`node_values`] on the region's nodes, in parallel.
pub fn sample(model: &StaticModel, pieces: &Pieces, rule: QuadratureRule) -> Result<Sampled> {
    let w = model
        .warped_product()
        .ok_or_else(|| Error::Region(format!("{}: integrals need a warped model", model.name)))?;
    let vol = w
        .fiber_volume()
        .ok_or_else(|| Error::Region(format!("{}: fiber has infinite volume", model.name)))?;
    let y = w.fiber_point();
    let nodes = pieces
        .nodes(rule)
        .into_par_iter()
        .map(|(s, wt)| {
            let v = node_values(model, &w.point(s, &y))?;
            Ok((s, wt * vol * w.density(s), v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Sampled { nodes })
}

/// An integral with its node-doubling change.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Integral {
    /// Estimate with the doubled rule.
    pub value: f64,
    /// `|I(2m) - I(m)|`.
    pub delta: f64,
}

/// `int_region g(s)` of a function of `s` alone (volume density included).
pub fn integrate_profile(
    model: &StaticModel,
    region: Region,
    rule: QuadratureRule,
    g: impl Fn(f64) -> f64 + Sync,
) -> Result<Integral> {
    let w = model
        .warped_product()
        .ok_or_else(|| Error::Region(format!("{}: integrals need a warped model", model.name)))?;
    let vol = w
        .fiber_volume()
        .ok_or_else(|| Error::Region(format!("{}: fiber has infinite volume", model.name)))?;
    let pieces = region_pieces(model, region)?;
    let est = |r: QuadratureRule| {
        let terms: Vec<f64> = pieces.nodes(r).iter().map(|&(s, wt)| wt * vol * w.density(s) * g(s)).collect();
        pairwise(&terms)
    };
    let (a, b) = (est(rule), est(rule.doubled()));
    Ok(Integral {
        value: b,
        delta: (b - a).abs(),
    })
}

/// Integral of a node-value expression with node doubling.
pub fn integrate_values(
    model: &StaticModel,
    region: Region,
    rule: QuadratureRule,
    g: impl Fn(&NodeValues) -> f64 + Copy,
) -> Result<Integral> {
    let pieces = region_pieces(model, region)?;
    let a = sample(model, &pieces, rule)?.integral(g);
    let b = sample(model, &pieces, rule.doubled())?.integral(g);
    Ok(Integral {
        value: b,
        delta: (b - a).abs(),
    })
}

/// Report of one integral identity.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub model: String,
    pub p: u32,
    pub region: Region,
    pub lhs: f64,
    pub rhs: f64,
    /// `|LHS - RHS|`.
    pub residual: f64,
    /// Pass threshold on `residual`.
    pub tolerance: f64,
    pub node_counts: [usize; 2],
    pub lhs_delta: f64,
    pub rhs_delta: f64,
    pub converged: bool,
    /// Largest `|n^i f^j D_ijk|` on the nodes.
    pub boundary_flux: f64,
    /// Extra numbers reported alongside the identity.
    pub extra: Vec<(String, f64)>,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance && self.converged
    }
}

/// Relative tolerance of the integral identities: `1e-4 (1 + |RHS|)`.
pub const IDENTITY_TOL: f64 = 1e-4;

struct Sides<'a> {
    name: &'a str,
    lhs: &'a dyn Fn(&NodeValues) -> f64,
    rhs: &'a dyn Fn(&NodeValues) -> f64,
    extra: Vec<(&'a str, &'a dyn Fn(&NodeValues) -> f64)>,
}

fn run_identity(model: &StaticModel, region: Region, p: u32, rule: QuadratureRule, sides: Sides) -> Result<IdentityCheck> {
    let pieces = region_pieces(model, region)?;
    let coarse = sample(model, &pieces, rule)?;
    let fine = sample(model, &pieces, rule.doubled())?;
    let (l0, l1) = (coarse.integral(sides.lhs), fine.integral(sides.lhs));
    let (r0, r1) = (coarse.integral(sides.rhs), fine.integral(sides.rhs));
    let tolerance = IDENTITY_TOL * (1.0 + r1.abs());
    let (lhs_delta, rhs_delta) = ((l1 - l0).abs(), (r1 - r0).abs());
    Ok(IdentityCheck {
        identity: sides.name.to_string(),
        model: model.name.clone(),
        p,
        region,
        lhs: l1,
        rhs: r1,
        residual: (l1 - r1).abs(),
        tolerance,
        node_counts: [coarse.nodes.len(), fine.nodes.len()],
        lhs_delta,
        rhs_delta,
        converged: lhs_delta.max(rhs_delta) <= 0.1 * tolerance,
        boundary_flux: fine.max(|v| v.boundary_flux),
        extra: sides
            .extra
            .into_iter()
            .map(|(k, g)| (k.to_string(), fine.integral(g)))
            .collect(),
    })
}

fn check_sign(model: &StaticModel, region: Region, p: u32) -> Result<()> {
    if p % 2 == 1 {
        let ok = match region {
            Region::BetweenLevels { c1, .. } => c1 >= F_MIN,
            Region::ClosedManifold => false,
        };
        if !ok {
            return Err(Error::Region(format!(
                "{}: odd p = {p} needs a region with f >= {F_MIN}",
                model.name
            )));
        }
    }
    Ok(())
}

/// `int f^p B_jk f^j f^k = 1/(2(n-1)) int f^{p-2} |D|^2` on `{c1 < f < c2}`.
///
/// The Hessian-contracted integral `int f^p B_jk f^{j,k}` and the
/// intermediate `int f^{p-2} D_ijk f^{i,k} f^j` are reported as extras.
pub fn check_main_identity(model: &StaticModel, c1: f64, c2: f64, p: u32, rule: QuadratureRule) -> Result<IdentityCheck> {
    if p < 2 {
        return Err(Error::Region(format!("p = {p} must be at least 2")));
    }
    let region = Region::BetweenLevels { c1, c2 };
    check_sign(model, region, p)?;
    let n = model.dim() as f64;
    let pi = p as i32;
    let lhs = move |v: &NodeValues| v.f.powi(pi) * v.bach_grad;
    let rhs = move |v: &NodeValues| v.f.powi(pi - 2) * v.d_sq / (2.0 * (n - 1.0));
    let hess = move |v: &NodeValues| v.f.powi(pi) * v.bach_hess;
    let dhg = move |v: &NodeValues| v.f.powi(pi - 2) * v.d_hess_grad / (n - 2.0);
    run_identity(
        model,
        region,
        p,
        rule,
        Sides {
            name: "bach-gradient-vs-d-norm",
            lhs: &lhs,
            rhs: &rhs,
            extra: vec![("hessian_contracted_lhs", &hess), ("d_hessian_gradient_over_n_minus_2", &dhg)],
        },
    )
}

/// Coefficient of `int f^{p-2} D.C` in the full-divergence identity:
/// `-p (n-4) / (2 (n-1) (n-2))`, exactly.
pub fn full_divergence_coefficient(n: i64, p: i64) -> Rational64 {
    Rational64::new(-p * (n - 4), 2 * (n - 1) * (n - 2))
}

/// `int_M f^p B_ij,^ij = -p(n-4)/(2(n-1)(n-2)) int_M f^{p-2} D.C` on a closed model, `p` even.
pub fn check_full_divergence_identity(model: &StaticModel, p: u32, rule: QuadratureRule) -> Result<IdentityCheck> {
    if p < 2 || p % 2 == 1 {
        return Err(Error::Region(format!("p = {p} must be even and at least 2")));
    }
    let n = model.dim();
    let k = full_divergence_coefficient(n as i64, p as i64);
    let kf = *k.numer() as f64 / *k.denom() as f64;
    let pi = p as i32;
    let lhs = move |v: &NodeValues| v.f.powi(pi) * v.bach_double_divergence;
    let rhs = move |v: &NodeValues| kf * v.f.powi(pi - 2) * v.d_dot_c;
    let dc = move |v: &NodeValues| v.f.powi(pi - 2) * v.d_dot_c;
    run_identity(
        model,
        Region::ClosedManifold,
        p,
        rule,
        Sides {
            name: "bach-double-divergence",
            lhs: &lhs,
            rhs: &rhs,
            extra: vec![("d_dot_c_integral", &dc)],
        },
    )
}

/// Coefficient of `int f^p |C|^2` in the three-dimensional identity. With
/// `B_jk = -C_ijk,^i` in dimension 3 and `D = f^2 C`, the full-divergence
/// coefficient at `n = 3` turns into `-p/4`.
pub fn cotton_identity_coefficient(p: i64) -> Rational64 {
    -full_divergence_coefficient(3, p)
}

/// `int_M f^p C_ijk,^ijk = -(p/4) int_M f^p |C|^2` on a closed 3-dimensional model.
pub fn check_3d_identity(model: &StaticModel, p: u32, rule: QuadratureRule) -> Result<IdentityCheck> {
    if model.dim() != 3 {
        return Err(Error::Dimension(model.dim()));
    }
    if p < 2 {
        return Err(Error::Region(format!("p = {p} must be at least 2")));
    }
    check_sign(model, Region::ClosedManifold, p)?;
    let k = cotton_identity_coefficient(p as i64);
    let kf = *k.numer() as f64 / *k.denom() as f64;
    let pi = p as i32;
    let lhs = move |v: &NodeValues| v.f.powi(pi) * v.cotton_triple_divergence;
    let rhs = move |v: &NodeValues| kf * v.f.powi(pi) * v.c_sq;
    let csq = move |v: &NodeValues| v.f.powi(pi) * v.c_sq;
    run_identity(
        model,
        Region::ClosedManifold,
        p,
        rule,
        Sides {
            name: "cotton-triple-divergence",
            lhs: &lhs,
            rhs: &rhs,
            extra: vec![("c_norm_integral", &csq)],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_are_exact() {
        assert_eq!(full_divergence_coefficient(4, 2), Rational64::from_integer(0));
        assert_eq!(full_divergence_coefficient(3, 2), Rational64::new(1, 2));
        for p in 2..10 {
            assert_eq!(cotton_identity_coefficient(p), Rational64::new(-p, 4));
        }
    }

    #[test]
    fn trapezoid_is_spectral_on_periodic_functions() {
        let v: f64 = trapezoid(8, 0.3, 2.0 * std::f64::consts::PI)
            .iter()
            .map(|(s, w)| w * s.sin().powi(2))
            .sum();
        assert!((v - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let v: f64 = gauss_legendre(4, -1.0, 2.0).iter().map(|(s, w)| w * s.powi(7)).sum();
        assert!((v - (256.0 - 1.0) / 8.0).abs() < 1e-12);
    }
}
