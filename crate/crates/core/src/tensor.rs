//! Pointwise tensors and tensor fields expanded as jets around a point.
//!
//! Components are stored row-major with every index lowered unless the
//! variance list says otherwise. Covariant derivatives append the new index
//! last: `(nabla T)_{a1..ar m} = nabla_m T_{a1..ar}`.

use serde::{Deserialize, Serialize};

use crate::jet::Jet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Up,
    Down,
}

/// Declared symmetries of a tensor, checked by [`TensorValue::symmetry_defect`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symmetries {
    /// Rank 2, `T_ij = T_ji`.
    pub symmetric: bool,
    /// `T_{ij...} = -T_{ji...}`.
    pub antisymmetric_first_pair: bool,
    /// Rank 4 algebraic curvature symmetries, including the first Bianchi identity.
    pub riemann: bool,
    /// Every single trace vanishes (requires the metric inverse).
    pub trace_free: bool,
}

impl Symmetries {
    pub const NONE: Symmetries = Symmetries {
        symmetric: false,
        antisymmetric_first_pair: false,
        riemann: false,
        trace_free: false,
    };
    pub const SYMMETRIC: Symmetries = Symmetries {
        symmetric: true,
        ..Symmetries::NONE
    };
    pub const CURVATURE: Symmetries = Symmetries {
        riemann: true,
        ..Symmetries::NONE
    };
    pub const WEYL: Symmetries = Symmetries {
        riemann: true,
        trace_free: true,
        ..Symmetries::NONE
    };
    pub const COTTON: Symmetries = Symmetries {
        antisymmetric_first_pair: true,
        trace_free: true,
        ..Symmetries::NONE
    };
}

/// Multi-index to flat offset for an `n`-dimensional rank-`idx.len()` array.
#[inline]
pub fn flat(n: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Inverse of [`flat`].
pub fn unflat(n: usize, rank: usize, mut k: usize) -> Vec<usize> {
    let mut idx = vec![0; rank];
    for slot in (0..rank).rev() {
        idx[slot] = k % n;
        k /= n;
    }
    idx
}

/// A tensor at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorValue {
    pub name: String,
    pub n: usize,
    pub variance: Vec<Variance>,
    pub symmetries: Symmetries,
    pub components: Vec<f64>,
}

impl TensorValue {
    pub fn new(name: impl Into<String>, n: usize, rank: usize, components: Vec<f64>) -> Self {
        assert_eq!(components.len(), n.pow(rank as u32), "component count does not match rank");
        TensorValue {
            name: name.into(),
            n,
            variance: vec![Variance::Down; rank],
            symmetries: Symmetries::NONE,
            components,
        }
    }

    pub fn zeros(name: impl Into<String>, n: usize, rank: usize) -> Self {
        TensorValue::new(name, n, rank, vec![0.0; n.pow(rank as u32)])
    }

    pub fn with_symmetries(mut self, s: Symmetries) -> Self {
        self.symmetries = s;
        self
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[flat(self.n, idx)]
    }

    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest componentwise difference to another tensor of the same shape.
    pub fn max_diff(&self, other: &TensorValue) -> f64 {
        assert_eq!(self.components.len(), other.components.len());
        self.components
            .iter()
            .zip(&other.components)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn scaled(&self, k: f64) -> TensorValue {
        let mut t = self.clone();
        t.components.iter_mut().for_each(|v| *v *= k);
        t
    }

    /// Moves index `slot` up (with `ginv`) or down (with `g`).
    fn move_index(&self, slot: usize, m: &[f64], to: Variance) -> TensorValue {
        let n = self.n;
        let rank = self.rank();
        let mut out = vec![0.0; self.components.len()];
        for (k, o) in out.iter_mut().enumerate() {
            let mut idx = unflat(n, rank, k);
            let a = idx[slot];
            let mut acc = 0.0;
            for b in 0..n {
                idx[slot] = b;
                acc += m[a * n + b] * self.components[flat(n, &idx)];
            }
            *o = acc;
        }
        let mut variance = self.variance.clone();
        variance[slot] = to;
        TensorValue {
            name: self.name.clone(),
            n,
            variance,
            symmetries: self.symmetries,
            components: out,
        }
    }

    pub fn raise(&self, slot: usize, ginv: &[f64]) -> TensorValue {
        assert_eq!(self.variance[slot], Variance::Down, "index already raised");
        self.move_index(slot, ginv, Variance::Up)
    }

    pub fn lower(&self, slot: usize, g: &[f64]) -> TensorValue {
        assert_eq!(self.variance[slot], Variance::Up, "index already lowered");
        self.move_index(slot, g, Variance::Down)
    }

    /// `|T|^2` with all indices contracted by the metric.
    pub fn norm_sq(&self, g: &[f64], ginv: &[f64]) -> f64 {
        let mut up = self.clone();
        for slot in 0..self.rank() {
            if up.variance[slot] == Variance::Down {
                up = up.raise(slot, ginv);
            }
        }
        let mut down = self.clone();
        for slot in 0..self.rank() {
            if down.variance[slot] == Variance::Up {
                down = down.lower(slot, g);
            }
        }
        up.components.iter().zip(&down.components).map(|(a, b)| a * b).sum()
    }

    /// Full contraction with another all-lowered tensor of the same rank.
    pub fn contract_full(&self, other: &TensorValue, ginv: &[f64]) -> f64 {
        let mut up = other.clone();
        for slot in 0..up.rank() {
            up = up.raise(slot, ginv);
        }
        self.components.iter().zip(&up.components).map(|(a, b)| a * b).sum()
    }

    /// Metric trace over slots `a < b` (both lowered).
    pub fn trace(&self, a: usize, b: usize, ginv: &[f64]) -> TensorValue {
        let n = self.n;
        let rank = self.rank();
        let out_rank = rank - 2;
        let mut out = vec![0.0; n.pow(out_rank as u32)];
        for (k, o) in out.iter_mut().enumerate() {
            let rest = unflat(n, out_rank, k);
            let mut acc = 0.0;
            for p in 0..n {
                for q in 0..n {
                    let w = ginv[p * n + q];
                    if w == 0.0 {
                        continue;
                    }
                    let mut idx = Vec::with_capacity(rank);
                    let mut r = rest.iter();
                    for s in 0..rank {
                        idx.push(if s == a {
                            p
                        } else if s == b {
                            q
                        } else {
                            *r.next().unwrap()
                        });
                    }
                    acc += w * self.components[flat(n, &idx)];
                }
            }
            *o = acc;
        }
        TensorValue::new(format!("tr{a}{b} {}", self.name), n, out_rank, out)
    }

    /// Largest violation of the declared symmetries, relative to `max(1, max|T|)`.
    /// Trace-freeness is only checked when `ginv` is supplied.
    pub fn symmetry_defect(&self, ginv: Option<&[f64]>) -> f64 {
        let n = self.n;
        let rank = self.rank();
        let s = self.symmetries;
        let mut defect: f64 = 0.0;
        let mut push = |v: f64| defect = defect.max(v.abs());
        for k in 0..self.components.len() {
            let idx = unflat(n, rank, k);
            let t = self.components[k];
            if s.symmetric && rank == 2 {
                push(t - self.get(&[idx[1], idx[0]]));
            }
            if s.antisymmetric_first_pair && rank >= 2 {
                let mut sw = idx.clone();
                sw.swap(0, 1);
                push(t + self.get(&sw));
            }
            if s.riemann && rank == 4 {
                let (i, j, k2, l) = (idx[0], idx[1], idx[2], idx[3]);
                push(t + self.get(&[j, i, k2, l]));
                push(t + self.get(&[i, j, l, k2]));
                push(t - self.get(&[k2, l, i, j]));
                push(t + self.get(&[j, k2, i, l]) + self.get(&[k2, i, j, l]));
            }
        }
        if s.trace_free {
            if let Some(ginv) = ginv {
                for a in 0..rank {
                    for b in a + 1..rank {
                        push(self.trace(a, b, ginv).max_abs());
                    }
                }
            }
        }
        defect / self.max_abs().max(1.0)
    }
}

/// A tensor field given by component jets at a point; indices lowered.
#[derive(Clone, Debug)]
pub struct TensorJet {
    pub n: usize,
    pub rank: usize,
    pub comps: Vec<Jet>,
}

impl TensorJet {
    pub fn new(n: usize, rank: usize, comps: Vec<Jet>) -> Self {
        assert_eq!(comps.len(), n.pow(rank as u32));
        TensorJet { n, rank, comps }
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[flat(self.n, idx)]
    }

    pub fn value(&self, name: impl Into<String>, symmetries: Symmetries) -> TensorValue {
        TensorValue::new(name, self.n, self.rank, self.comps.iter().map(Jet::value).collect()).with_symmetries(symmetries)
    }

    pub fn truncate(&self, order: usize) -> TensorJet {
        TensorJet::new(self.n, self.rank, self.comps.iter().map(|c| c.truncate(order)).collect())
    }

    pub fn scale(&self, k: f64) -> TensorJet {
        TensorJet::new(self.n, self.rank, self.comps.iter().map(|c| c.scale(k)).collect())
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> TensorJet {
        TensorJet::new(self.n, self.rank, self.comps.iter().map(f).collect())
    }

    pub fn zip(&self, other: &TensorJet, f: impl Fn(&Jet, &Jet) -> Jet) -> TensorJet {
        assert_eq!(self.comps.len(), other.comps.len());
        TensorJet::new(self.n, self.rank, self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect())
    }

    /// Covariant derivative with the new index appended. `christoffel` holds
    /// `Gamma^k_ij` at index `[k][i][j]`. The result is one order lower.
    pub fn covariant_derivative(&self, christoffel: &[Jet]) -> TensorJet {
        let n = self.n;
        let rank = self.rank;
        let ord = self.order() - 1;
        let gam: Vec<Jet> = christoffel.iter().map(|g| g.truncate(ord)).collect();
        let nz: Vec<bool> = gam.iter().map(|g| g.max_abs() != 0.0).collect();
        let base: Vec<Jet> = self.comps.iter().map(|c| c.truncate(ord)).collect();
        let mut out = Vec::with_capacity(self.comps.len() * n);
        for k in 0..self.comps.len() {
            let idx = unflat(n, rank, k);
            for m in 0..n {
                let mut acc = self.comps[k].deriv(m);
                let mut j = idx.clone();
                for s in 0..rank {
                    let a = idx[s];
                    for p in 0..n {
                        let gi = (p * n + m) * n + a;
                        if !nz[gi] {
                            continue;
                        }
                        j[s] = p;
                        acc -= &gam[gi] * &base[flat(n, &j)];
                    }
                    j[s] = a;
                }
                out.push(acc);
            }
        }
        TensorJet::new(n, rank + 1, out)
    }

    /// Trace over slots `a < b` with the metric inverse jets `ginv`.
    pub fn trace(&self, a: usize, b: usize, ginv: &[Jet]) -> TensorJet {
        let n = self.n;
        let rank = self.rank;
        let out_rank = rank - 2;
        let ord = self.order();
        let total = n.pow(out_rank as u32);
        let zero = self.comps[0].constant_like(0.0).truncate(ord);
        let mut out = Vec::with_capacity(total);
        for k in 0..total {
            let rest = unflat(n, out_rank, k);
            let mut acc = zero.clone();
            for p in 0..n {
                for q in 0..n {
                    let w = &ginv[p * n + q];
                    if w.max_abs() == 0.0 {
                        continue;
                    }
                    let mut idx = Vec::with_capacity(rank);
                    let mut r = rest.iter();
                    for s in 0..rank {
                        idx.push(if s == a {
                            p
                        } else if s == b {
                            q
                        } else {
                            *r.next().unwrap()
                        });
                    }
                    acc += w * &self.comps[flat(n, &idx)];
                }
            }
            out.push(acc);
        }
        TensorJet::new(n, out_rank, out)
    }

    /// Divergence on `slot` against the last (derivative) index: `nabla^a T_{..a..}`.
    pub fn divergence(&self, slot: usize, christoffel: &[Jet], ginv: &[Jet]) -> TensorJet {
        let d = self.covariant_derivative(christoffel);
        d.trace(slot, self.rank, ginv)
    }

    /// Contracts the last index with a vector field `v^a` (given with index up).
    pub fn contract_last(&self, v: &[Jet]) -> TensorJet {
        let n = self.n;
        let out_rank = self.rank - 1;
        let total = n.pow(out_rank as u32);
        let out = (0..total)
            .map(|k| {
                let mut acc = &self.comps[k * n] * &v[0];
                for a in 1..n {
                    acc += &self.comps[k * n + a] * &v[a];
                }
                acc
            })
            .collect();
        TensorJet::new(n, out_rank, out)
    }
}

/// Inverse of a symmetric matrix of jets by Gauss-Jordan elimination with
/// partial pivoting on the constant terms.
pub fn invert_jets(a: &[Jet], n: usize) -> Vec<Jet> {
    let mut m: Vec<Jet> = a.to_vec();
    let one = a[0].constant_like(1.0);
    let zero = a[0].constant_like(0.0);
    let mut inv: Vec<Jet> = (0..n * n).map(|k| if k / n == k % n { one.clone() } else { zero.clone() }).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x * n + col].value().abs().total_cmp(&m[y * n + col].value().abs()))
            .unwrap();
        if piv != col {
            for c in 0..n {
                m.swap(piv * n + c, col * n + c);
                inv.swap(piv * n + c, col * n + c);
            }
        }
        let r = m[col * n + col].recip();
        for c in 0..n {
            m[col * n + c] = &m[col * n + c] * &r;
            inv[col * n + c] = &inv[col * n + c] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = m[row * n + col].clone();
            if factor.max_abs() == 0.0 {
                continue;
            }
            for c in 0..n {
                let t = &factor * &m[col * n + c];
                m[row * n + c] -= t;
                let t = &factor * &inv[col * n + c];
                inv[row * n + c] -= t;
            }
        }
    }
    inv
}

/// Plain-value matrix inverse (Gauss-Jordan).
pub fn invert(a: &[f64], n: usize) -> Vec<f64> {
    let space = crate::jet::JetSpace::get(1, 0);
    let jets: Vec<Jet> = a.iter().map(|&v| Jet::constant(space, v)).collect();
    invert_jets(&jets, n).iter().map(Jet::value).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;

    #[test]
    fn raise_then_lower_round_trips() {
        let g = [2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5];
        let ginv = invert(&g, 3);
        let t = TensorValue::new("t", 3, 2, (0..9).map(|k| k as f64 * 0.7 - 2.0).collect());
        let back = t.raise(1, &ginv).lower(1, &g);
        assert!(t.max_diff(&back) < 1e-12);
    }

    #[test]
    fn jet_inverse_matches_derivative_of_inverse() {
        let sp = JetSpace::get(1, 2);
        let x = Jet::variable(sp, 0, 0.4);
        let a = vec![&x * &x + 2.0, x.clone(), x.clone(), x.sin() + 1.0];
        let inv = invert_jets(&a, 2);
        // (A^{-1})' = -A^{-1} A' A^{-1}
        for k in 0..4 {
            let (i, j) = (k / 2, k % 2);
            let a0: Vec<f64> = a.iter().map(Jet::value).collect();
            let da: Vec<f64> = a.iter().map(|e| e.partial(&[1])).collect();
            let ai = invert(&a0, 2);
            let mut expect = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    expect -= ai[i * 2 + p] * da[p * 2 + q] * ai[q * 2 + j];
                }
            }
            assert!((inv[k].partial(&[1]) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetry_defect_flags_violations() {
        let t = TensorValue::new("s", 2, 2, vec![1.0, 2.0, 2.0, 3.0]).with_symmetries(Symmetries::SYMMETRIC);
        assert_eq!(t.symmetry_defect(None), 0.0);
        let u = TensorValue::new("s", 2, 2, vec![1.0, 2.0, 2.5, 3.0]).with_symmetries(Symmetries::SYMMETRIC);
        assert!(u.symmetry_defect(None) > 0.1);
    }

    #[test]
    fn flat_index_round_trip() {
        for k in 0..125 {
            assert_eq!(flat(5, &unflat(5, 3, k)), k);
        }
    }
}
