//! Derivative engine: exact jets from analytic callbacks, or central
//! finite differences on plain values.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::chart::Chart;
use crate::jet::{factorial, Jet, JetSpace};

/// How metric derivatives are produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DiffEngine {
    /// Taylor-mode propagation through the component callback.
    Analytic,
    /// Central differences. `step` (times the coordinate scale) drives the
    /// fourth-order stencils used for first and second derivatives;
    /// `step_high` drives the second-order stencils for orders three and four.
    FiniteDifference { step: f64, step_high: f64 },
}

impl Default for DiffEngine {
    fn default() -> Self {
        DiffEngine::Analytic
    }
}

impl DiffEngine {
    pub fn finite_difference() -> Self {
        DiffEngine::FiniteDifference {
            step: 1e-3,
            step_high: 1e-2,
        }
    }

    pub fn with_step(step: f64) -> Self {
        DiffEngine::FiniteDifference { step, step_high: 1e-2 }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, DiffEngine::Analytic)
    }
}

/// Stencil weights on offsets -2..=2.
fn weights(deriv: usize, fourth_order: bool) -> [f64; 5] {
    match (deriv, fourth_order) {
        (0, _) => [0.0, 0.0, 1.0, 0.0, 0.0],
        (1, true) => [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0],
        (2, true) => [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        (1, false) => [0.0, -0.5, 0.0, 0.5, 0.0],
        (2, false) => [0.0, 1.0, -2.0, 1.0, 0.0],
        (3, _) => [-0.5, 1.0, 0.0, -1.0, 0.5],
        (4, _) => [1.0, -4.0, 6.0, -4.0, 1.0],
        _ => panic!("no stencil for derivative order {deriv}"),
    }
}

/// Finite-difference jets of a vector-valued function of `x`.
///
/// Returns one jet (order `order` <= 4) per output component, with the
/// Taylor coefficients filled from stencil estimates.
pub(crate) fn fd_jets(
    chart: &Chart,
    x: &[f64],
    order: usize,
    step: f64,
    step_high: f64,
    eval: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Vec<Jet> {
    assert!(order <= 4, "finite differences support derivatives up to order 4");
    let n = x.len();
    let space = JetSpace::get(n, order);
    let h_low: Vec<f64> = chart.coords.iter().map(|c| step * c.scale).collect();
    let h_high: Vec<f64> = chart.coords.iter().map(|c| step_high * c.scale).collect();

    let mut cache: HashMap<(bool, Vec<i8>), Vec<f64>> = HashMap::new();
    let mut sample = |high: bool, offs: &[i8]| -> Vec<f64> {
        cache
            .entry((high, offs.to_vec()))
            .or_insert_with(|| {
                let h = if high { &h_high } else { &h_low };
                let p: Vec<f64> = x.iter().zip(offs).zip(h).map(|((&xi, &o), &hi)| xi + o as f64 * hi).collect();
                eval(&p)
            })
            .clone()
    };

    let base = sample(false, &vec![0; n]);
    let ncomp = base.len();
    let mut coeffs = vec![vec![0.0; space.len()]; ncomp];
    for (k, c) in coeffs.iter_mut().enumerate() {
        c[0] = base[k];
    }

    for idx in 1..space.len() {
        let exps: Vec<usize> = space.exponents(idx).iter().map(|&e| e as usize).collect();
        let total: usize = exps.iter().sum();
        let high = total >= 3;
        let h = if high { &h_high } else { &h_low };
        let w: Vec<[f64; 5]> = exps.iter().map(|&e| weights(e, !high)).collect();
        let active: Vec<usize> = (0..n).filter(|&i| exps[i] > 0).collect();
        let mut est = vec![0.0; ncomp];
        // Tensor-product stencil over the active coordinates.
        let mut offs = vec![0i8; n];
        let combos = 5usize.pow(active.len() as u32);
        for combo in 0..combos {
            let mut rem = combo;
            let mut weight = 1.0;
            for &i in &active {
                let o = rem % 5;
                rem /= 5;
                offs[i] = o as i8 - 2;
                weight *= w[i][o];
            }
            if weight == 0.0 {
                continue;
            }
            let vals = sample(high, &offs);
            for (e, v) in est.iter_mut().zip(&vals) {
                *e += weight * v;
            }
        }
        let mut denom = 1.0;
        for &i in &active {
            denom *= h[i].powi(exps[i] as i32) * factorial(exps[i]);
        }
        for (c, e) in coeffs.iter_mut().zip(&est) {
            c[idx] = e / denom;
        }
    }
    coeffs.into_iter().map(|c| Jet::from_coeffs(space, c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chart::Coordinate;

    #[test]
    fn stencils_are_exact_on_low_degree_polynomials() {
        let chart = Chart::new(vec![Coordinate::interval("x", -5.0, 5.0), Coordinate::interval("y", -5.0, 5.0)]).unwrap();
        let x = [0.4, -0.3];
        // degree-4 polynomial: every stencil used is exact on it
        let p = |v: &[f64]| vec![1.0 + v[0] * v[0] * v[1] - 2.0 * v[0].powi(4) + v[1].powi(3) * v[0]];
        let jets = fd_jets(&chart, &x, 4, 1e-2, 1e-1, &p);
        let sp = JetSpace::get(2, 4);
        let (a, b) = (Jet::variable(sp, 0, x[0]), Jet::variable(sp, 1, x[1]));
        let exact = 1.0 + &(&a * &a) * &b - a.powi(4) * 2.0 + b.powi(3) * &a;
        for counts in [[1, 0], [0, 1], [2, 0], [1, 1], [0, 2], [2, 1], [1, 2], [3, 0], [0, 3], [2, 2], [4, 0], [1, 3]] {
            let d = (jets[0].partial(&counts) - exact.partial(&counts)).abs();
            assert!(d < 1e-10, "{counts:?}: {d}");
        }
    }
}
