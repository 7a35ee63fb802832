//! Geometry of regular level sets `f = c` on warped models, where the level
//! sets are the slices `{s} x F`.
//!
//! Ambient quantities are expressed in an orthonormal frame
//! `e_1, ..., e_{n-1}, e_n = grad f/|grad f|`; the slice's own curvature comes
//! from the induced metric, independently of the ambient pipeline.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::PointCurvature;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::kobayashi::bisect;
use crate::statics::StaticModel;
use crate::tensor::{flat, TensorValue};

/// Smallest `|grad f|` accepted for a regular value.
pub const REGULAR_GRADIENT: f64 = 1e-6;

/// Orthonormal frame at one point; the last vector is the unit normal.
#[derive(Clone, Debug)]
pub struct Frame {
    pub vectors: Vec<Vec<f64>>,
}

impl Frame {
    /// Gram-Schmidt on `normal, d_0, ..., d_{n-1}` in the metric `g`, dropping
    /// the coordinate vector that becomes dependent.
    pub fn adapted(g: &[f64], n: usize, normal: &[f64]) -> Frame {
        let dot = |u: &[f64], v: &[f64]| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += g[i * n + j] * u[i] * v[j];
                }
            }
            acc
        };
        let unit = |v: Vec<f64>| {
            let l = dot(&v, &v).sqrt();
            v.into_iter().map(|c| c / l).collect::<Vec<f64>>()
        };
        let mut basis = vec![unit(normal.to_vec())];
        // coordinate vectors least aligned with the normal first
        let mut coords: Vec<usize> = (0..n).collect();
        let align = |i: usize| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            dot(&e, &basis[0]).abs() / dot(&e, &e).sqrt()
        };
        coords.sort_by(|&a, &b| align(a).total_cmp(&align(b)));
        for &i in coords.iter().take(n - 1) {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            for b in &basis {
                let p = dot(&v, b);
                for (vc, bc) in v.iter_mut().zip(b) {
                    *vc -= p * bc;
                }
            }
            basis.push(unit(v));
        }
        let normal = basis.remove(0);
        basis.push(normal);
        Frame { vectors: basis }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn normal(&self) -> &[f64] {
        self.vectors.last().expect("non-empty frame")
    }

    /// `T(e_a, e_b)` for a rank-2 tensor.
    pub fn pair(&self, t: &TensorValue, a: usize, b: usize) -> f64 {
        let n = t.n;
        let (u, v) = (&self.vectors[a], &self.vectors[b]);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += t.components[i * n + j] * u[i] * v[j];
            }
        }
        acc
    }

    /// `T(e_a, e_b, e_c, e_d)` for a rank-4 tensor.
    pub fn quad(&self, t: &TensorValue, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = t.n;
        let e = |k: usize| &self.vectors[k];
        let mut acc = 0.0;
        for i in 0..n {
            let wi = e(a)[i];
            if wi == 0.0 {
                continue;
            }
            for j in 0..n {
                let wj = wi * e(b)[j];
                if wj == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let wk = wj * e(c)[k];
                    if wk == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += wk * e(d)[l] * t.components[flat(n, &[i, j, k, l])];
                    }
                }
            }
        }
        acc
    }

    /// `v(e_a)` for a covector.
    pub fn one(&self, v: &[f64], a: usize) -> f64 {
        v.iter().zip(&self.vectors[a]).map(|(x, y)| x * y).sum()
    }
}

/// Level-set quantities at one point of a slice.
#[derive(Clone, Debug, Serialize)]
pub struct SliceData {
    pub s: f64,
    pub point: Vec<f64>,
    /// The level `c = f(point)`.
    pub level: f64,
    /// `W = |grad f|^2`.
    pub w: f64,
    /// `h_ab = -f_{a,b}/|grad f|` in the tangent frame, row-major `(n-1)^2`.
    pub second_fundamental_form: Vec<f64>,
    /// Trace of `h`.
    pub mean_curvature: f64,
    /// `W^{-1/2}(f_{n,n} - Laplacian f)`.
    pub mean_curvature_formula: f64,
    pub a_sq: f64,
    /// `|A - H/(n-1) g^Sigma|^2`.
    pub traceless_sq: f64,
    pub grad_sigma_w_sq: f64,
    pub grad_n_w_sq: f64,
    pub r_nn: f64,
    /// `Ric(e_a, e_n)` for tangent `a`.
    pub r_an: Vec<f64>,
    /// `dH(e_a)` for tangent `a`.
    pub grad_sigma_h: Vec<f64>,
    pub scalar: f64,
    pub laplacian: f64,
    /// `|D|^2` from `D = f^2 C - f W(., ., ., grad f)`.
    pub d_sq: f64,
    /// `max |W(e_n, e_j, e_k, e_n)|`.
    pub weyl_normal: f64,
    /// Scalar curvature of the induced metric.
    pub slice_scalar: f64,
    /// `max |Ric^Sigma(e_a, e_b) - R^Sigma/(n-1) delta_ab|` from the induced metric.
    pub slice_einstein_deviation: f64,
    /// `max |Ric^Sigma_intrinsic - Ric^Sigma_Gauss|` in the tangent frame.
    pub gauss_ricci_gap: f64,
    /// `r(s)^2 R^Sigma/(n-1)`, the fiber's Einstein constant, on singly warped models.
    pub slice_constant: Option<f64>,
}

impl SliceData {
    fn n(&self) -> f64 {
        (self.r_an.len() + 1) as f64
    }

    /// Left side of the `|D|^2` level-set identity.
    pub fn identity_lhs(&self) -> f64 {
        self.d_sq
    }

    /// `2 (n-1)^2/(n-2)^2 W^2 |A - H/(n-1) g|^2 + (n-1)/(2(n-2)) |grad^Sigma W|^2`.
    pub fn identity_rhs(&self) -> f64 {
        let n = self.n();
        2.0 * (n - 1.0).powi(2) / (n - 2.0).powi(2) * self.w * self.w * self.traceless_sq
            + (n - 1.0) / (2.0 * (n - 2.0)) * self.grad_sigma_w_sq
    }

    /// `|LHS - RHS|/(1 + |LHS|)`.
    pub fn identity_residual(&self) -> f64 {
        (self.identity_lhs() - self.identity_rhs()).abs() / (1.0 + self.identity_lhs().abs())
    }

    /// `|R^Sigma - (R - 2 R_nn + H^2 - |A|^2)|`.
    pub fn gauss_residual(&self) -> f64 {
        let h = self.mean_curvature;
        (self.slice_scalar - (self.scalar - 2.0 * self.r_nn + h * h - self.a_sq)).abs()
    }

    /// `max_a |R_an - (n-2)/(n-1) dH(e_a)|`.
    pub fn codazzi_residual(&self) -> f64 {
        let n = self.n();
        self.r_an
            .iter()
            .zip(&self.grad_sigma_h)
            .map(|(r, dh)| (r - (n - 2.0) / (n - 1.0) * dh).abs())
            .fold(0.0, f64::max)
    }
}

fn slice_jets_w(grad: &[Jet], df: &[Jet]) -> Jet {
    let mut w = df[0].constant_like(0.0);
    for (a, b) in df.iter().zip(grad) {
        w += a * b;
    }
    w
}

/// Level-set data at `x` on a warped model.
pub fn slice_geometry(model: &StaticModel, x: &[f64]) -> Result<SliceData> {
    let warped = model
        .metric
        .warped_arc()
        .ok_or_else(|| Error::Model(format!("{}: level sets are computed on warped models only", model.name)))?;
    let mp = model.at(x, 4)?;
    let curv = &mp.curv;
    let n = curv.dim();
    let m = n - 1;
    let sf = &mp.f;
    let c = sf.value();
    let w = sf.grad_norm_sq();
    if w.sqrt() < REGULAR_GRADIENT {
        return Err(Error::NotRegular(c, w.sqrt()));
    }
    let g = curv.metric_values();
    let frame = Frame::adapted(&g, n, &sf.gradient_up());
    let hess = sf.hessian();
    let lap = mp.laplacian();
    let root = w.sqrt();

    let mut hff = vec![0.0; m * m];
    for a in 0..m {
        for b in 0..m {
            hff[a * m + b] = -frame.pair(&hess, a, b) / root;
        }
    }
    let mean_curvature: f64 = (0..m).map(|a| hff[a * m + a]).sum();
    let f_nn = frame.pair(&hess, m, m);
    let a_sq: f64 = hff.iter().map(|v| v * v).sum();
    let traceless_sq = a_sq - mean_curvature * mean_curvature / m as f64;

    // W and H as jets for their tangential derivatives
    let wj = slice_jets_w(&sf.grad, &sf.df.comps);
    let dw: Vec<f64> = (0..n).map(|i| wj.deriv(i).value()).collect();
    let grad_sigma_w_sq: f64 = (0..m).map(|a| frame.one(&dw, a).powi(2)).sum();
    let grad_n_w_sq = frame.one(&dw, m).powi(2);
    let k2 = sf.hess.order();
    let grad2: Vec<Jet> = sf.grad.iter().map(|j| j.truncate(k2)).collect();
    let w2 = wj.truncate(k2);
    let mut hnn = w2.constant_like(0.0);
    for i in 0..n {
        for j in 0..n {
            hnn += &(&sf.hess.comps[i * n + j] * &grad2[i]) * &grad2[j];
        }
    }
    let lap_jet = {
        let ginv: Vec<Jet> = curv.inverse_jets().iter().map(|j| j.truncate(k2)).collect();
        sf.hess.trace(0, 1, &ginv).comps.swap_remove(0)
    };
    let h_jet = &(&(&hnn * &w2.recip()) - &lap_jet) * &w2.powf(-0.5);
    let dh: Vec<f64> = (0..n).map(|i| h_jet.deriv(i).value()).collect();
    let grad_sigma_h: Vec<f64> = (0..m).map(|a| frame.one(&dh, a)).collect();

    let ric = curv.ricci();
    let riem = curv.riemann();
    let weyl = curv.weyl();
    let r_nn = frame.pair(&ric, m, m);
    let r_an: Vec<f64> = (0..m).map(|a| frame.pair(&ric, a, m)).collect();
    let mut weyl_normal = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            weyl_normal = weyl_normal.max(frame.quad(&weyl, m, j, k, m).abs());
        }
    }
    let d = mp.d_tensor()?;
    let d_sq = curv.norm_sq(&d);

    // intrinsic side: induced metric on the slice through x
    let s = x[0];
    let slice = warped.slice_metric(s);
    let y = &x[1..];
    let sc = PointCurvature::new(&slice, y, 2)?;
    let slice_scalar = sc.scalar();
    let sric = sc.ricci();
    // tangent frame vectors restricted to the fiber coordinates
    let tangent: Vec<Vec<f64>> = (0..m).map(|a| frame.vectors[a][1..].to_vec()).collect();
    let spair = |a: usize, b: usize| {
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                acc += sric.components[i * m + j] * tangent[a][i] * tangent[b][j];
            }
        }
        acc
    };
    let mut slice_einstein_deviation = 0.0f64;
    let mut gauss_ricci_gap = 0.0f64;
    for a in 0..m {
        for b in 0..m {
            let intrinsic = spair(a, b);
            let delta = if a == b { 1.0 } else { 0.0 };
            slice_einstein_deviation =
                slice_einstein_deviation.max((intrinsic - slice_scalar / m as f64 * delta).abs());
            let hh: f64 = (0..m).map(|g| hff[a * m + g] * hff[g * m + b]).sum();
            let extrinsic =
                frame.pair(&ric, a, b) - frame.quad(&riem, a, m, b, m) + mean_curvature * hff[a * m + b] - hh;
            gauss_ricci_gap = gauss_ricci_gap.max((intrinsic - extrinsic).abs());
        }
    }
    let slice_constant = if warped.is_singly_warped() {
        let r = warped.warp_values(s)[0];
        Some(r * r * slice_scalar / m as f64)
    } else {
        None
    };

    Ok(SliceData {
        s,
        point: x.to_vec(),
        level: c,
        w,
        second_fundamental_form: hff,
        mean_curvature,
        mean_curvature_formula: (f_nn - lap) / root,
        a_sq,
        traceless_sq,
        grad_sigma_w_sq,
        grad_n_w_sq,
        r_nn,
        r_an,
        grad_sigma_h,
        scalar: curv.scalar(),
        laplacian: lap,
        d_sq,
        weyl_normal,
        slice_scalar,
        slice_einstein_deviation,
        gauss_ricci_gap,
        slice_constant,
    })
}

/// `max - min` of a sampled quantity.
pub fn variation(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

/// Variations of the scalars that are constant along a slice under the
/// various hypotheses.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Constancy {
    pub scalar: f64,
    pub laplacian: f64,
    pub mean_curvature: f64,
    pub slice_scalar: f64,
    pub r_nn: f64,
}

/// One slice sampled at several fiber points.
#[derive(Clone, Debug, Serialize)]
pub struct SliceReport {
    pub s: f64,
    pub level: f64,
    pub points: Vec<SliceData>,
    pub constancy: Constancy,
    pub identity_residual: f64,
    pub gauss_residual: f64,
    pub codazzi_residual: f64,
    /// `max |H - W^{-1/2}(f_nn - Laplacian f)|`.
    pub mean_curvature_gap: f64,
    pub umbilic_defect: f64,
    pub max_d_sq: f64,
    pub slice_einstein_deviation: f64,
    pub gauss_ricci_gap: f64,
}

impl SliceReport {
    pub fn slice_constant(&self) -> Option<f64> {
        self.points.first().and_then(|p| p.slice_constant)
    }

    pub fn identity_sides(&self) -> (f64, f64) {
        let p = &self.points[0];
        (p.identity_lhs(), p.identity_rhs())
    }
}

/// Samples the slice `{s} x F` at `k` fiber points (at least 32 are used for
/// inhomogeneous fibers, as requested by the caller).
pub fn slice_report(model: &StaticModel, s: f64, k: usize) -> Result<SliceReport> {
    let w = model
        .warped_product()
        .ok_or_else(|| Error::Model(format!("{}: level sets are computed on warped models only", model.name)))?;
    let pts: Vec<Vec<f64>> = w.fiber_samples(k).iter().map(|y| w.point(s, y)).collect();
    let data: Vec<SliceData> = pts
        .par_iter()
        .map(|x| slice_geometry(model, x))
        .collect::<Result<_>>()?;
    let maxof = |f: &dyn Fn(&SliceData) -> f64| data.iter().map(f).fold(0.0, f64::max);
    let constancy = Constancy {
        scalar: variation(data.iter().map(|d| d.scalar)),
        laplacian: variation(data.iter().map(|d| d.laplacian)),
        mean_curvature: variation(data.iter().map(|d| d.mean_curvature)),
        slice_scalar: variation(data.iter().map(|d| d.slice_scalar)),
        r_nn: variation(data.iter().map(|d| d.r_nn)),
    };
    Ok(SliceReport {
        s,
        level: data[0].level,
        constancy,
        identity_residual: maxof(&|d| d.identity_residual()),
        gauss_residual: maxof(&|d| d.gauss_residual()),
        codazzi_residual: maxof(&|d| d.codazzi_residual()),
        mean_curvature_gap: maxof(&|d| (d.mean_curvature - d.mean_curvature_formula).abs()),
        umbilic_defect: maxof(&|d| d.traceless_sq),
        max_d_sq: maxof(&|d| d.d_sq),
        slice_einstein_deviation: maxof(&|d| d.slice_einstein_deviation),
        gauss_ricci_gap: maxof(&|d| d.gauss_ricci_gap),
        points: data,
    })
}

/// Values of `s` where `f(s) = c`, found by scanning `f` on the `s` coordinate
/// and bisecting each sign change.
pub fn level_positions(model: &StaticModel, c: f64) -> Result<Vec<f64>> {
    let w = model
        .warped_product()
        .ok_or_else(|| Error::Model(format!("{}: level sets are computed on warped models only", model.name)))?;
    let prof = model
        .f_profile
        .as_ref()
        .ok_or_else(|| Error::Model(format!("{}: no f(s) profile", model.name)))?;
    let g = |s: f64| prof.value(s) - c;
    let grid = w.s.samples(400);
    let mut out = Vec::new();
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if g(a) == 0.0 {
            out.push(a);
        } else if g(a) * g(b) < 0.0 {
            out.extend(bisect(a, b, g));
        }
    }
    Ok(out)
}

/// Reports for every slice of the level set `f = c`.
pub fn level_set(model: &StaticModel, c: f64, k: usize) -> Result<Vec<SliceReport>> {
    let positions = level_positions(model, c)?;
    if positions.is_empty() {
        return Err(Error::Region(format!("{}: f never takes the value {c}", model.name)));
    }
    positions.into_iter().map(|s| slice_report(model, s, k)).collect()
}

/// Outcome of the `W(e_n, ., ., e_n) = 0` check, which needs `D = 0` and `B = 0`.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum WeylNormal {
    Applicable { max: f64 },
    NotApplicable { d_max: f64, b_max: f64 },
}

/// Checks `W_{njkn} = 0` on the slice at `s`, gated on `max |D|, |B| <= gate`.
pub fn weyl_normal_check(model: &StaticModel, s: f64, k: usize, gate: f64) -> Result<WeylNormal> {
    let w = model
        .warped_product()
        .ok_or_else(|| Error::Model(format!("{}: level sets are computed on warped models only", model.name)))?;
    let pts: Vec<Vec<f64>> = w.fiber_samples(k).iter().map(|y| w.point(s, y)).collect();
    let rows: Vec<(f64, f64, f64)> = pts
        .par_iter()
        .map(|x| {
            let mp = model.at(x, 6)?;
            let d = mp.d_tensor()?.max_abs();
            let b = mp.curv.bach()?.max_abs();
            let sd = slice_geometry(model, x)?;
            Ok((d, b, sd.weyl_normal))
        })
        .collect::<Result<_>>()?;
    let d_max = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let b_max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if d_max > gate || b_max > gate {
        return Ok(WeylNormal::NotApplicable { d_max, b_max });
    }
    Ok(WeylNormal::Applicable {
        max: rows.iter().map(|r| r.2).fold(0.0, f64::max),
    })
}
