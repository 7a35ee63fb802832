//! Pointwise curvature pipeline.
//!
//! Everything is computed from metric jets of order `K` at one point:
//! Christoffel symbols carry order `K-1`; Riemann, Ricci, Schouten and Weyl
//! `K-2`; the Cotton tensor and `D` `K-3`; Bach `K-4`. Quantities that need
//! more derivatives than the jet holds return [`Error::InsufficientOrder`].
//!
//! Sign conventions: `R_ijkl = g_km R^m_lij` with
//! `R^m_lij = d_i G^m_jl - d_j G^m_il + G^m_ip G^p_jl - G^m_jp G^p_il`, so the
//! unit sphere has `R_ijkl = g_ik g_jl - g_il g_jk` and `Ric_ik = g^jl R_ijkl`.

use std::cell::OnceCell;

use crate::error::{Error, Result};
use crate::geometry::{MetricField, ScalarField};
use crate::jet::Jet;
use crate::tensor::{flat, invert_jets, Symmetries, TensorJet, TensorValue};

/// Curvature of a metric at one point.
pub struct PointCurvature {
    n: usize,
    x: Vec<f64>,
    order: usize,
    g: Vec<Jet>,
    ginv: Vec<Jet>,
    gamma: Vec<Jet>,
    riemann: TensorJet,
    ricci: TensorJet,
    scalar: Jet,
    schouten: TensorJet,
    weyl: TensorJet,
    cotton: OnceCell<TensorJet>,
    weyl_div: OnceCell<TensorJet>,
    cotton_div: OnceCell<TensorJet>,
    bach: OnceCell<TensorJet>,
}

/// A scalar field's jets at the same point: `f`, `df`, `grad f` and `Hess f`.
#[derive(Clone, Debug)]
pub struct ScalarJets {
    pub f: Jet,
    pub df: TensorJet,
    pub grad: Vec<Jet>,
    pub hess: TensorJet,
}

impl ScalarJets {
    pub fn value(&self) -> f64 {
        self.f.value()
    }

    pub fn gradient(&self) -> Vec<f64> {
        self.df.comps.iter().map(Jet::value).collect()
    }

    pub fn gradient_up(&self) -> Vec<f64> {
        self.grad.iter().map(Jet::value).collect()
    }

    /// `|grad f|^2`.
    pub fn grad_norm_sq(&self) -> f64 {
        self.df.comps.iter().zip(&self.grad).map(|(a, b)| a.value() * b.value()).sum()
    }

    pub fn hessian(&self) -> TensorValue {
        self.hess.value("hess f", Symmetries::SYMMETRIC)
    }
}

fn sub_all(a: &[Jet], order: usize) -> Vec<Jet> {
    a.iter().map(|j| j.truncate(order)).collect()
}

fn zero_like(j: &Jet, order: usize) -> Jet {
    j.constant_like(0.0).truncate(order)
}

impl PointCurvature {
    /// Builds the pipeline from metric jets of order `order >= 2`.
    pub fn new(metric: &MetricField, x: &[f64], order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InsufficientOrder {
                have: order,
                need: 2,
                what: "Riemann tensor",
            });
        }
        let n = metric.dim();
        let g = metric.jets_at(x, order)?;
        let k1 = order - 1;
        let k2 = order - 2;
        let ginv = invert_jets(&sub_all(&g, k1), n);

        // dg[(c*n + a)*n + b] = d_c g_ab
        let mut dg = Vec::with_capacity(n * n * n);
        for c in 0..n {
            for ab in 0..n * n {
                dg.push(g[ab].deriv(c));
            }
        }
        let d = |c: usize, a: usize, b: usize| &dg[(c * n + a) * n + b];
        // first kind: G_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij)/2
        let mut first = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    first.push((d(i, j, l) + d(j, i, l) - d(l, i, j)) * 0.5);
                }
            }
        }
        let mut gamma = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for ij in 0..n * n {
                let mut acc = zero_like(&g[0], k1);
                for l in 0..n {
                    acc += &ginv[k * n + l] * &first[l * n * n + ij];
                }
                gamma.push(acc);
            }
        }

        let first2 = sub_all(&first, k2);
        let gamma2 = sub_all(&gamma, k2);
        let fst = |l: usize, i: usize, j: usize| &first2[(l * n + i) * n + j];
        let snd = |k: usize, i: usize, j: usize| &gamma2[(k * n + i) * n + j];
        let mut riem = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if i == j || k == l {
                            riem.push(zero_like(&g[0], k2));
                            continue;
                        }
                        let mut acc = first[(k * n + j) * n + l].deriv(i) - first[(k * n + i) * n + l].deriv(j);
                        for m in 0..n {
                            acc -= fst(m, i, k) * snd(m, j, l);
                            acc += fst(m, j, k) * snd(m, i, l);
                        }
                        riem.push(acc);
                    }
                }
            }
        }
        let riemann = TensorJet::new(n, 4, riem);
        let ginv2 = sub_all(&ginv, k2);
        let g2 = sub_all(&g, k2);
        let ricci = riemann.trace(1, 3, &ginv2);
        let mut scalar = zero_like(&g[0], k2);
        for ab in 0..n * n {
            scalar += &ginv2[ab] * &ricci.comps[ab];
        }
        let sc = 1.0 / (2.0 * (n as f64 - 1.0));
        let schouten = TensorJet::new(
            n,
            2,
            (0..n * n).map(|ab| &ricci.comps[ab] - &(&scalar * &g2[ab]) * sc).collect(),
        );
        let weyl = if n >= 3 {
            let c = 1.0 / (n as f64 - 2.0);
            let s = |a: usize, b: usize| &schouten.comps[a * n + b];
            let gg = |a: usize, b: usize| &g2[a * n + b];
            let mut w = Vec::with_capacity(n.pow(4));
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let kn = s(i, k) * gg(j, l) - s(i, l) * gg(j, k) - s(j, k) * gg(i, l) + s(j, l) * gg(i, k);
                            w.push(&riemann.comps[flat(n, &[i, j, k, l])] - &(kn * c));
                        }
                    }
                }
            }
            TensorJet::new(n, 4, w)
        } else {
            riemann.map(|j| j.constant_like(0.0))
        };

        Ok(PointCurvature {
            n,
            x: x.to_vec(),
            order,
            g,
            ginv,
            gamma,
            riemann,
            ricci,
            scalar,
            schouten,
            weyl,
            cotton: OnceCell::new(),
            weyl_div: OnceCell::new(),
            cotton_div: OnceCell::new(),
            bach: OnceCell::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self) -> &[f64] {
        &self.x
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn require(&self, need: usize, what: &'static str) -> Result<()> {
        if self.order < need {
            Err(Error::InsufficientOrder {
                have: self.order,
                need,
                what,
            })
        } else {
            Ok(())
        }
    }

    pub fn metric_values(&self) -> Vec<f64> {
        self.g.iter().map(Jet::value).collect()
    }

    pub fn inverse_values(&self) -> Vec<f64> {
        self.ginv.iter().map(Jet::value).collect()
    }

    pub fn metric_jets(&self) -> &[Jet] {
        &self.g
    }

    pub fn inverse_jets(&self) -> &[Jet] {
        &self.ginv
    }

    /// `Gamma^k_ij` at index `[k][i][j]`.
    pub fn christoffel_jets(&self) -> &[Jet] {
        &self.gamma
    }

    pub fn christoffel(&self) -> TensorValue {
        let mut t = TensorValue::new("christoffel", self.n, 3, self.gamma.iter().map(Jet::value).collect());
        t.variance[0] = crate::tensor::Variance::Up;
        t
    }

    pub fn riemann_jet(&self) -> &TensorJet {
        &self.riemann
    }

    pub fn ricci_jet(&self) -> &TensorJet {
        &self.ricci
    }

    pub fn scalar_jet(&self) -> &Jet {
        &self.scalar
    }

    pub fn schouten_jet(&self) -> &TensorJet {
        &self.schouten
    }

    pub fn weyl_jet(&self) -> &TensorJet {
        &self.weyl
    }

    pub fn riemann(&self) -> TensorValue {
        self.riemann.value("riemann", Symmetries::CURVATURE)
    }

    pub fn ricci(&self) -> TensorValue {
        self.ricci.value("ricci", Symmetries::SYMMETRIC)
    }

    pub fn scalar(&self) -> f64 {
        self.scalar.value()
    }

    pub fn schouten(&self) -> TensorValue {
        self.schouten.value("schouten", Symmetries::SYMMETRIC)
    }

    pub fn weyl(&self) -> TensorValue {
        self.weyl.value("weyl", Symmetries::WEYL)
    }

    /// `max |R - (W + S (kn) g/(n-2))|`.
    pub fn decomposition_residual(&self) -> f64 {
        let n = self.n;
        let s = self.schouten();
        let w = self.weyl();
        let g = self.metric_values();
        let r = self.riemann();
        let c = 1.0 / (n as f64 - 2.0);
        let mut m: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let kn = s.get(&[i, k]) * g[j * n + l] - s.get(&[i, l]) * g[j * n + k] - s.get(&[j, k]) * g[i * n + l]
                            + s.get(&[j, l]) * g[i * n + k];
                        m = m.max((r.get(&[i, j, k, l]) - w.get(&[i, j, k, l]) - c * kn).abs());
                    }
                }
            }
        }
        m
    }

    /// Covariant derivative of a tensor jet, new index last.
    pub fn covariant_derivative(&self, t: &TensorJet) -> TensorJet {
        t.covariant_derivative(&self.gamma)
    }

    /// `nabla^a T_{..a..}` with the contracted index at `slot`.
    pub fn covariant_divergence(&self, t: &TensorJet, slot: usize) -> TensorJet {
        t.divergence(slot, &self.gamma, &self.ginv)
    }

    /// Raises a covector jet.
    pub fn raise(&self, v: &[Jet]) -> Vec<Jet> {
        let n = self.n;
        (0..n)
            .map(|a| {
                let mut acc = &self.ginv[a * n] * &v[0];
                for b in 1..n {
                    acc += &self.ginv[a * n + b] * &v[b];
                }
                acc
            })
            .collect()
    }

    /// `C_ijk = S_jk,i - S_ik,j`.
    pub fn cotton_jet(&self) -> Result<&TensorJet> {
        self.require(3, "Cotton tensor")?;
        Ok(self.cotton.get_or_init(|| {
            let n = self.n;
            let ds = self.covariant_derivative(&self.schouten);
            let mut c = Vec::with_capacity(n * n * n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        c.push(&ds.comps[flat(n, &[j, k, i])] - &ds.comps[flat(n, &[i, k, j])]);
                    }
                }
            }
            TensorJet::new(n, 3, c)
        }))
    }

    pub fn cotton(&self) -> Result<TensorValue> {
        Ok(self.cotton_jet()?.value("cotton", Symmetries::COTTON))
    }

    /// `W_ijkl,^l`.
    pub fn weyl_divergence_jet(&self) -> Result<&TensorJet> {
        self.require(3, "Weyl divergence")?;
        Ok(self.weyl_div.get_or_init(|| self.covariant_divergence(&self.weyl, 3)))
    }

    /// `max |W_ijkl,^l + (n-3)/(n-2) C_ijk|`.
    pub fn weyl_divergence_residual(&self) -> Result<f64> {
        let n = self.n as f64;
        let lhs = self.weyl_divergence_jet()?.value("div W", Symmetries::NONE);
        let c = self.cotton()?;
        Ok(lhs.max_diff(&c.scaled(-(n - 3.0) / (n - 2.0))))
    }

    /// `C_ijk,^i`, indexed `(j, k)`.
    pub fn cotton_divergence_jet(&self) -> Result<&TensorJet> {
        self.require(4, "Cotton divergence")?;
        let c = self.cotton_jet()?;
        Ok(self.cotton_div.get_or_init(|| self.covariant_divergence(c, 0)))
    }

    /// `S^il W_ijkl` at the given order.
    fn schouten_weyl(&self, order: usize) -> TensorJet {
        let n = self.n;
        let ginv = sub_all(&self.ginv, order);
        let s = self.schouten.truncate(order);
        let w = self.weyl.truncate(order);
        // S^{il} = g^{ia} g^{lb} S_ab
        let mut s_up = Vec::with_capacity(n * n);
        for i in 0..n {
            for l in 0..n {
                let mut acc = zero_like(&ginv[0], order);
                for a in 0..n {
                    for b in 0..n {
                        acc += &(&ginv[i * n + a] * &ginv[l * n + b]) * &s.comps[a * n + b];
                    }
                }
                s_up.push(acc);
            }
        }
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = zero_like(&ginv[0], order);
                for i in 0..n {
                    for l in 0..n {
                        acc += &s_up[i * n + l] * &w.comps[flat(n, &[i, j, k, l])];
                    }
                }
                out.push(acc);
            }
        }
        TensorJet::new(n, 2, out)
    }

    /// Bach tensor from `(n-2) B_jk = -C_ijk,^i + S^il W_ijkl`.
    pub fn bach_jet(&self) -> Result<&TensorJet> {
        let div = self.cotton_divergence_jet()?;
        Ok(self.bach.get_or_init(|| {
            let sw = self.schouten_weyl(div.order());
            let c = 1.0 / (self.n as f64 - 2.0);
            div.zip(&sw, |a, b| (b - a) * c)
        }))
    }

    pub fn bach(&self) -> Result<TensorValue> {
        Ok(self.bach_jet()?.value("bach", Symmetries::SYMMETRIC))
    }

    /// Bach tensor from `B_jk = W_ijkl,^li/(n-3) + S^il W_ijkl/(n-2)`; needs `n >= 4`.
    pub fn bach_via_weyl(&self) -> Result<TensorValue> {
        if self.n < 4 {
            return Err(Error::Dimension(self.n));
        }
        self.require(4, "Bach tensor via the Weyl divergence")?;
        let n = self.n as f64;
        let v = self.weyl_divergence_jet()?;
        let dv = self.covariant_divergence(v, 0);
        let sw = self.schouten_weyl(dv.order());
        let b = dv.zip(&sw, |a, b| a * (1.0 / (n - 3.0)) + b * (1.0 / (n - 2.0)));
        Ok(b.value("bach (weyl route)", Symmetries::SYMMETRIC))
    }

    /// `B_ij,^ij`.
    pub fn bach_double_divergence(&self) -> Result<f64> {
        self.require(6, "double divergence of Bach")?;
        let b = self.bach_jet()?;
        let y = self.covariant_divergence(b, 0);
        let z = self.covariant_divergence(&y, 0);
        Ok(z.comps[0].value())
    }

    /// `C_ijk,^ijk`: derivative indices contracted in the order `i`, `j`, `k`.
    pub fn cotton_triple_divergence(&self) -> Result<f64> {
        self.require(6, "triple divergence of Cotton")?;
        let x = self.cotton_divergence_jet()?;
        let y = self.covariant_divergence(x, 0);
        let z = self.covariant_divergence(&y, 0);
        Ok(z.comps[0].value())
    }

    /// Jets of a scalar field at this point: `f` (order K), `df`, raised gradient, Hessian.
    pub fn scalar_field(&self, field: &ScalarField) -> ScalarJets {
        let f = field.jet(&self.x, self.order);
        self.scalar_jets(f)
    }

    pub fn scalar_jets(&self, f: Jet) -> ScalarJets {
        let n = self.n;
        let df = TensorJet::new(n, 1, (0..n).map(|i| f.deriv(i)).collect());
        let grad = self.raise(&df.comps);
        let hess = self.covariant_derivative(&df);
        ScalarJets { f, df, grad, hess }
    }

    /// `D_ijk = f^2 C_ijk - f W_ijkl f^l`.
    pub fn d_tensor_jet(&self, sf: &ScalarJets) -> Result<TensorJet> {
        let c = self.cotton_jet()?;
        let n = self.n;
        let ord = c.order();
        let f = sf.f.truncate(ord);
        let f2 = &f * &f;
        let grad = sub_all(&sf.grad, ord);
        let w = self.weyl.truncate(ord);
        let wf = w.contract_last(&grad);
        let mut out = Vec::with_capacity(n * n * n);
        for k in 0..n * n * n {
            out.push(&(&f2 * &c.comps[k]) - &(&f * &wf.comps[k]));
        }
        Ok(TensorJet::new(n, 3, out))
    }

    pub fn d_tensor(&self, sf: &ScalarJets) -> Result<TensorValue> {
        Ok(self.d_tensor_jet(sf)?.value("D", Symmetries::COTTON))
    }

    /// `|T|^2` for an all-lowered tensor value at this point.
    pub fn norm_sq(&self, t: &TensorValue) -> f64 {
        t.norm_sq(&self.metric_values(), &self.inverse_values())
    }

    /// Full contraction `A_{ij..} B^{ij..}`.
    pub fn contract(&self, a: &TensorValue, b: &TensorValue) -> f64 {
        a.contract_full(b, &self.inverse_values())
    }
}

/// Per-point tensor dump as emitted by the CLI.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TensorDump {
    pub metric: String,
    pub point: Vec<f64>,
    pub tensor: String,
    pub components: Vec<f64>,
    pub residuals: serde_json::Map<String, serde_json::Value>,
}

/// Curvature tensors at `x` as JSON-ready records.
pub fn dump_point(metric: &MetricField, x: &[f64]) -> Result<Vec<TensorDump>> {
    let order = if metric.engine().is_analytic() { 4 } else { 3 };
    let pc = PointCurvature::new(metric, x, order)?;
    let ginv = pc.inverse_values();
    let mut out = Vec::new();
    let mut push = |t: TensorValue, extra: Vec<(&str, f64)>| {
        let mut residuals = serde_json::Map::new();
        residuals.insert("symmetry".into(), t.symmetry_defect(Some(&ginv)).into());
        for (k, v) in extra {
            residuals.insert(k.into(), v.into());
        }
        out.push(TensorDump {
            metric: metric.name().to_string(),
            point: x.to_vec(),
            tensor: t.name.clone(),
            components: t.components,
            residuals,
        });
    };
    push(pc.riemann(), vec![("decomposition", pc.decomposition_residual())]);
    push(pc.ricci(), vec![]);
    push(
        TensorValue::new("scalar", pc.dim(), 0, vec![pc.scalar()]),
        vec![],
    );
    push(pc.schouten(), vec![]);
    push(pc.weyl(), vec![]);
    let wd = if pc.dim() >= 4 { pc.weyl_divergence_residual()? } else { 0.0 };
    push(pc.cotton()?, vec![("weyl_divergence", wd)]);
    if let Ok(b) = pc.bach() {
        push(b, vec![]);
    }
    Ok(out)
}
