//! Static, vacuum-static and critical-point equations in the unified form
//! `f S = Hess f + Phi g`, and manufactured solutions on warped products.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::curvature::{PointCurvature, ScalarJets};
use crate::error::{Error, Result};
use crate::geometry::{
    make_multiply_warped, make_warped_product, BumpPerturbed, Coordinate, FiberFactor, FiberSpec, MetricField, Profile,
    ScalarField, WarpBlock, WarpedProduct,
};
use crate::jet::Jet;
use crate::ode::{integrate, SolutionProfile, TaylorOptions, TaylorSystem, Trajectory};
use crate::tensor::{flat, Symmetries, TensorValue};
use crate::tolerances::F_MIN;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    VacuumStatic,
    Static,
    Cpe,
    Unified,
}

impl ModelKind {
    pub fn default_phi(self) -> PhiSpec {
        match self {
            ModelKind::VacuumStatic => PhiSpec::Vacuum,
            ModelKind::Static => PhiSpec::Static,
            ModelKind::Cpe => PhiSpec::Cpe,
            ModelKind::Unified => PhiSpec::TraceIdentity,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::VacuumStatic => "vacuum-static",
            ModelKind::Static => "static",
            ModelKind::Cpe => "cpe",
            ModelKind::Unified => "unified",
        }
    }
}

/// How `Phi` is obtained at a point.
#[derive(Clone, Debug)]
pub enum PhiSpec {
    /// `(f tr S - Lap f)/n`: whatever makes the trace of the unified equation hold.
    TraceIdentity,
    /// `((n-2) R f/(2(n-1)) - Lap f)/n`.
    Static,
    /// `R f/(2(n-1))`.
    Vacuum,
    /// `R f/(2(n-1)) - R/(n(n-1))`.
    Cpe,
    Field(ScalarField),
}

/// A metric with a potential `f` and the scalar `Phi` of the unified equation.
#[derive(Clone, Debug)]
pub struct StaticModel {
    pub name: String,
    pub metric: MetricField,
    pub f: ScalarField,
    pub kind: ModelKind,
    pub phi: PhiSpec,
    /// `f` as a function of `s` when the metric is warped and `f = f(s)`.
    pub f_profile: Option<Arc<dyn Profile>>,
    /// Set for constant potentials; such models skip level-set machinery.
    pub constant_potential: Option<f64>,
    pub warnings: Vec<String>,
    /// The declarative recipe the model was built from, when there is one.
    pub spec: Option<crate::config::ModelSpec>,
}

impl StaticModel {
    pub fn new(name: impl Into<String>, metric: MetricField, f: ScalarField, kind: ModelKind) -> Self {
        StaticModel {
            name: name.into(),
            metric,
            f,
            kind,
            phi: kind.default_phi(),
            f_profile: None,
            constant_potential: None,
            warnings: Vec::new(),
            spec: None,
        }
    }

    /// A warped metric with `f = f(s)`.
    pub fn warped(name: impl Into<String>, metric: MetricField, f: Arc<dyn Profile>, kind: ModelKind) -> Result<Self> {
        if metric.warped().is_none() {
            return Err(Error::Model("f(s) potentials need a warped metric".into()));
        }
        let mut m = StaticModel::new(name, metric, ScalarField::of_first(Arc::clone(&f)), kind);
        m.f_profile = Some(f);
        Ok(m)
    }

    pub fn constant(name: impl Into<String>, metric: MetricField, c: f64, kind: ModelKind) -> Self {
        let mut m = StaticModel::new(name, metric, ScalarField::constant(c), kind);
        m.constant_potential = Some(c);
        m
    }

    pub fn with_phi(mut self, phi: PhiSpec) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_spec(mut self, spec: crate::config::ModelSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn warped_product(&self) -> Option<&WarpedProduct> {
        self.metric.warped()
    }

    /// Evaluates curvature and potential jets of order `order` at `x`.
    pub fn at(&self, x: &[f64], order: usize) -> Result<ModelPoint> {
        let curv = PointCurvature::new(&self.metric, x, order)?;
        let f = curv.scalar_field(&self.f);
        let n = curv.dim();
        let k2 = order - 2;
        let ginv: Vec<Jet> = curv.inverse_jets().iter().map(|j| j.truncate(k2)).collect();
        let lap = curv
            .covariant_derivative(&f.df)
            .trace(0, 1, &ginv)
            .comps
            .swap_remove(0);
        let tr_s = curv.schouten_jet().trace(0, 1, &ginv).comps.swap_remove(0);
        let fk = f.f.truncate(k2);
        let r = curv.scalar_jet().clone();
        let nf = n as f64;
        let phi = match &self.phi {
            PhiSpec::TraceIdentity => (&(&fk * &tr_s) - &lap) * (1.0 / nf),
            PhiSpec::Static => (&(&(&r * &fk) * ((nf - 2.0) / (2.0 * (nf - 1.0)))) - &lap) * (1.0 / nf),
            PhiSpec::Vacuum => &(&r * &fk) * (1.0 / (2.0 * (nf - 1.0))),
            PhiSpec::Cpe => &(&(&r * &fk) * (1.0 / (2.0 * (nf - 1.0)))) - &(&r * (1.0 / (nf * (nf - 1.0)))),
            PhiSpec::Field(p) => p.jet(x, order).truncate(k2),
        };
        Ok(ModelPoint {
            curv,
            f,
            phi,
            lap,
            tr_s,
        })
    }

    /// Sample points: `ks` values of `s` times `kf` fiber points on warped
    /// models, `ks * kf` Halton points otherwise.
    pub fn sample_points(&self, ks: usize, kf: usize) -> Vec<Vec<f64>> {
        match self.warped_product() {
            Some(w) => {
                let fibers = w.fiber_samples(kf);
                w.s.samples(ks)
                    .into_iter()
                    .flat_map(|s| fibers.iter().map(move |y| w.point(s, y)))
                    .collect()
            }
            None => self.metric.chart().halton_points(ks * kf),
        }
    }

    /// Negative control: `f + eps * bump((s - center)/width)` on the same metric.
    pub fn perturbed(&self, eps: f64, center: f64, width: f64) -> Result<StaticModel> {
        let inner = self
            .f_profile
            .clone()
            .ok_or_else(|| Error::Model(format!("{}: perturbation needs an f(s) potential", self.name)))?;
        let bump: Arc<dyn Profile> = Arc::new(BumpPerturbed {
            inner,
            eps,
            center,
            width,
        });
        let mut m = StaticModel::warped(format!("{}+bump({eps})", self.name), self.metric.clone(), bump, self.kind)?;
        m.phi = self.phi.clone();
        Ok(m)
    }

    /// `max - min` of the scalar curvature over `points`.
    pub fn scalar_curvature_variation(&self, points: &[Vec<f64>]) -> Result<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in points {
            let r = PointCurvature::new(&self.metric, x, 2)?.scalar();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok(hi - lo)
    }
}

/// Curvature and potential data of a model at one point.
pub struct ModelPoint {
    pub curv: PointCurvature,
    pub f: ScalarJets,
    phi: Jet,
    lap: Jet,
    tr_s: Jet,
}

/// Both sides of the Bach rewrite `(n-2) B_jk = -div(D/f^2)_jk + ...`.
#[derive(Clone, Debug)]
pub struct BachRewrite {
    pub lhs: TensorValue,
    pub rhs: TensorValue,
}

impl BachRewrite {
    pub fn residual(&self) -> f64 {
        self.lhs.max_diff(&self.rhs)
    }
}

impl ModelPoint {
    pub fn dim(&self) -> usize {
        self.curv.dim()
    }

    pub fn f_value(&self) -> f64 {
        self.f.value()
    }

    pub fn phi(&self) -> f64 {
        self.phi.value()
    }

    pub fn phi_jet(&self) -> &Jet {
        &self.phi
    }

    pub fn laplacian(&self) -> f64 {
        self.lap.value()
    }

    fn metric_term(&self, name: &str, coeff_g: f64, coeff_ric: f64, coeff_hess: f64) -> TensorValue {
        let n = self.dim();
        let g = self.curv.metric_values();
        let ric = self.curv.ricci();
        let h = self.f.hessian();
        let comps = (0..n * n)
            .map(|k| coeff_hess * h.components[k] + coeff_ric * ric.components[k] + coeff_g * g[k])
            .collect();
        TensorValue::new(name, n, 2, comps).with_symmetries(Symmetries::SYMMETRIC)
    }

    /// `f S - Hess f - Phi g`.
    pub fn unified_residual(&self) -> TensorValue {
        let n = self.dim() as f64;
        let f = self.f_value();
        let r = self.curv.scalar();
        // f S = f Ric - f R/(2(n-1)) g
        self.metric_term("unified residual", -f * r / (2.0 * (n - 1.0)) - self.phi(), f, -1.0)
    }

    /// `n Phi - (f tr S - Lap f)`.
    pub fn trace_identity_residual(&self) -> f64 {
        let n = self.dim() as f64;
        n * self.phi() - (self.f_value() * self.tr_s.value() - self.laplacian())
    }

    /// `Hess f - (Ric - R g/(n-1)) f - (R f/(n-1) + Lap f) g/n`; trace-free by construction.
    pub fn static_residual(&self) -> TensorValue {
        let n = self.dim() as f64;
        let f = self.f_value();
        let r = self.curv.scalar();
        let cg = r * f / (n - 1.0) - (r * f / (n - 1.0) + self.laplacian()) / n;
        self.metric_term("static residual", cg, -f, 1.0)
    }

    /// `Hess f - (Ric - R g/(n-1)) f`.
    pub fn vacuum_static_residual(&self) -> TensorValue {
        let n = self.dim() as f64;
        let f = self.f_value();
        let r = self.curv.scalar();
        self.metric_term("vacuum static residual", r * f / (n - 1.0), -f, 1.0)
    }

    /// `Hess f - (Ric - R g/(n-1)) f - R g/(n(n-1))`.
    pub fn cpe_residual(&self) -> TensorValue {
        let n = self.dim() as f64;
        let f = self.f_value();
        let r = self.curv.scalar();
        self.metric_term("cpe residual", r * f / (n - 1.0) - r / (n * (n - 1.0)), -f, 1.0)
    }

    /// `f_jl f^l`.
    fn hess_grad(&self) -> Vec<f64> {
        let n = self.dim();
        let h = self.f.hessian();
        let up = self.f.gradient_up();
        (0..n).map(|j| (0..n).map(|l| h.components[j * n + l] * up[l]).sum()).collect()
    }

    /// `Psi_j = -(n-2) f Phi_j + f_jl f^l + n Phi f_j`; needs jets of order 3.
    pub fn psi(&self) -> Result<Vec<f64>> {
        if self.phi.order() < 1 {
            return Err(Error::InsufficientOrder {
                have: self.curv.order(),
                need: 3,
                what: "gradient of Phi",
            });
        }
        let n = self.dim();
        let nf = n as f64;
        let f = self.f_value();
        let phi = self.phi();
        let df = self.f.gradient();
        let hg = self.hess_grad();
        Ok((0..n)
            .map(|j| -(nf - 2.0) * f * self.phi.deriv(j).value() + hg[j] + nf * phi * df[j])
            .collect())
    }

    /// `Psi_j = f_jl f^l - Lap f f_j`, valid for static and critical-point metrics.
    pub fn psi_reduced(&self) -> Vec<f64> {
        let lap = self.laplacian();
        let df = self.f.gradient();
        self.hess_grad().iter().zip(&df).map(|(a, b)| a - lap * b).collect()
    }

    /// `D = f^2 C - f W(., ., ., grad f)` from the curvature pipeline.
    pub fn d_tensor(&self) -> Result<TensorValue> {
        self.curv.d_tensor(&self.f)
    }

    /// `D_ijk = Alt_ij{(n-1) f_ik f_j + Psi_j g_ik}/(n-2)` from the potential alone.
    pub fn d_closed_form(&self) -> Result<TensorValue> {
        let n = self.dim();
        let nf = n as f64;
        let psi = self.psi()?;
        let h = self.f.hessian();
        let df = self.f.gradient();
        let g = self.curv.metric_values();
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = (nf - 1.0) * (h.components[i * n + k] * df[j] - h.components[j * n + k] * df[i])
                        + psi[j] * g[i * n + k]
                        - psi[i] * g[j * n + k];
                    out[flat(n, &[i, j, k])] = v / (nf - 2.0);
                }
            }
        }
        Ok(TensorValue::new("D (closed form)", n, 3, out).with_symmetries(Symmetries::COTTON))
    }

    /// Both sides of the Bach rewrite; needs jets of order 4 and `|f| >= f_min`.
    pub fn bach_rewrite(&self) -> Result<BachRewrite> {
        let f0 = self.f_value();
        if f0.abs() < F_MIN {
            return Err(Error::PotentialTooSmall(f0.abs(), F_MIN));
        }
        let n = self.dim();
        let nf = n as f64;
        let lhs = self.curv.bach()?.scaled(nf - 2.0);
        let d = self.curv.d_tensor_jet(&self.f)?;
        let ord = d.order();
        let f = self.f.f.truncate(ord);
        let inv_f2 = (&f * &f).recip();
        let e = d.map(|c| c * &inv_f2);
        let div = self.curv.covariant_divergence(&e, 0);
        let c = self.curv.cotton()?;
        let w = self.curv.weyl();
        let up = self.f.gradient_up();
        let mut rhs = vec![0.0; n * n];
        for j in 0..n {
            for k in 0..n {
                let mut cf = 0.0;
                let mut wff = 0.0;
                for l in 0..n {
                    cf += c.get(&[l, k, j]) * up[l];
                    for i in 0..n {
                        wff += w.get(&[i, j, k, l]) * up[i] * up[l];
                    }
                }
                rhs[j * n + k] =
                    -div.comps[j * n + k].value() + (nf - 3.0) / (nf - 2.0) * cf / f0 + wff / (f0 * f0);
            }
        }
        Ok(BachRewrite {
            lhs: lhs.with_symmetries(Symmetries::SYMMETRIC),
            rhs: TensorValue::new("Bach rewrite", n, 2, rhs),
        })
    }
}

/// `(r, r', r'')` of a profile as jets of the same order as `s`.
fn warp_jets(r: &dyn Profile, s: &Jet) -> (Jet, Jet, Jet) {
    let k = s.order();
    let big = Jet::univariate(k + 2, s.value());
    let r0 = r.eval(&big);
    let r1 = r0.deriv(0);
    let r2 = r1.deriv(0);
    (r0.truncate(k), r1.truncate(k), r2)
}

/// Trace-free part of the unified equation for `f(s)` on `ds^2 + r^2 g_E`:
/// `f'' = (r'/r) f' + f (Ric_ss - rho)`, with `Ric_ss = -m r''/r` and
/// `rho = lambda/r^2 - r''/r - (m-1)(r'/r)^2` the fiber eigenvalue of Ric.
pub struct WarpedStaticEquation {
    pub r: Arc<dyn Profile>,
    /// Fiber dimension `n - 1`.
    pub m: usize,
    /// Fiber Einstein constant.
    pub lambda: f64,
}

impl TaylorSystem for WarpedStaticEquation {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, s: &Jet, u: &[Jet]) -> Vec<Jet> {
        let m = self.m as f64;
        let (r, r1, r2) = warp_jets(self.r.as_ref(), s);
        let inv = r.recip();
        let mu = &r1 * &inv;
        let acc = &r2 * &inv;
        let ric_ss = acc.scale(-m);
        let rho = &(&(&(&inv * &inv) * self.lambda) - &acc) - &(&(&mu * &mu) * (m - 1.0));
        let fpp = &(&mu * &u[1]) + &(&u[0] * &(&ric_ss - &rho));
        vec![u[1].clone(), fpp]
    }
}

/// Unified equation for `f(s)` on `ds^2 + r1^2 g_1 + r2^2 g_2` with `r1` given:
/// the state is `(f, f', r2, r2')`. Equality of the fiber eigenvalues of
/// `f Ric - Hess f` fixes `r2''`, equality with the `ss` entry fixes `f''`.
pub struct DoublyWarpedStaticEquation {
    pub r1: Arc<dyn Profile>,
    pub d1: usize,
    pub lambda1: f64,
    pub d2: usize,
    pub lambda2: f64,
}

impl TaylorSystem for DoublyWarpedStaticEquation {
    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, s: &Jet, u: &[Jet]) -> Vec<Jet> {
        let (d1, d2) = (self.d1 as f64, self.d2 as f64);
        let (r1, r1p, r1pp) = warp_jets(self.r1.as_ref(), s);
        let inv1 = r1.recip();
        let mu1 = &r1p * &inv1;
        let acc1 = &r1pp * &inv1;
        let (f, fp, r2, r2p) = (&u[0], &u[1], &u[2], &u[3]);
        let inv2 = r2.recip();
        let mu2 = r2p * &inv2;
        let mu12 = &mu1 * &mu2;
        let rho1 =
            &(&(&(&inv1 * &inv1) * self.lambda1) - &acc1) - &(&(&(&mu1 * &mu1) * (d1 - 1.0)) + &(&mu12 * d2));
        // r2''/r2 from f (rho1 - rho2) = (mu1 - mu2) f'
        let acc2 = &(&(&(&(&inv2 * &inv2) * self.lambda2) - &(&(&mu2 * &mu2) * (d2 - 1.0))) - &(&mu12 * d1))
            + &(&(&(&mu1 - &mu2) * fp) * &f.recip() - &rho1);
        let r2pp = r2 * &acc2;
        let ric_ss = &(&acc1 * -d1) - &(&acc2 * d2);
        let fpp = &(f * &(&ric_ss - &rho1)) + &(&mu1 * fp);
        vec![fp.clone(), fpp, r2p.clone(), r2pp]
    }
}

/// Integrates both ways from `s0` across `[lo, hi]` and joins the pieces.
fn integrate_span(
    sys: &dyn TaylorSystem,
    s0: f64,
    u0: &[f64],
    lo: f64,
    hi: f64,
    opts: TaylorOptions,
    guard: Option<&dyn Fn(&[f64]) -> Option<String>>,
) -> Result<Trajectory> {
    if !(s0 >= lo && s0 <= hi) {
        return Err(Error::Model(format!("initial point s0 = {s0} outside [{lo}, {hi}]")));
    }
    let back = integrate(sys, s0, u0, lo, opts, guard)?;
    let fwd = integrate(sys, s0, u0, hi, opts, guard)?;
    for t in [&back, &fwd] {
        if let crate::ode::Termination::Boundary { s, reason } = &t.termination {
            return Err(Error::Model(format!("integration stopped at s = {s}: {reason}")));
        }
    }
    Ok(Trajectory::join(back, fwd))
}

fn potential_warnings(traj: &Trajectory) -> Vec<String> {
    let mut w = Vec::new();
    let zeros = traj.crossings(|u| u[0]);
    let max_f = traj.samples(401).iter().fold(0.0f64, |m, (_, u)| m.max(u[0].abs()));
    if max_f < F_MIN {
        w.push(format!(
            "degenerate model: |f| < {F_MIN:e} on the whole interval; guarded checks are skipped"
        ));
    } else if !zeros.is_empty() {
        w.push(format!(
            "f vanishes at s = {zeros:?}; checks dividing by f skip points with |f| < {F_MIN:e}"
        ));
    }
    let max_fp = traj.samples(401).iter().fold(0.0f64, |m, (_, u)| m.max(u[1].abs()));
    if max_fp < 1e-12 {
        w.push("f is constant on the interval".into());
    }
    w
}

/// Solves the trace-free unified equation for `f(s)` on `ds^2 + r^2 g_E`
/// with `f(s0) = f0`, `f'(s0) = df0`; `Phi` follows from the trace identity.
///
/// On a periodic `s` the solution is kept periodic only if it closes up;
/// otherwise the model is restricted to one period as an interval.
pub fn manufacture_static_warped(
    name: &str,
    r: Arc<dyn Profile>,
    fiber: &FiberSpec,
    n: usize,
    s: Coordinate,
    s0: f64,
    f0: f64,
    df0: f64,
) -> Result<StaticModel> {
    if f0 == 0.0 && df0 == 0.0 {
        return Err(Error::Model("initial data f0 = f0' = 0 gives f = 0".into()));
    }
    // validates n, fiber and positivity of r
    let mut metric = make_warped_product(Arc::clone(&r), fiber, n, s.clone())?;
    let sys: Arc<dyn TaylorSystem> = Arc::new(WarpedStaticEquation {
        r: Arc::clone(&r),
        m: n - 1,
        lambda: fiber.einstein_constant(),
    });
    let (lo, hi) = (s.lo + s.guard(), s.hi - s.guard());
    let traj = integrate_span(sys.as_ref(), s0, &[f0, df0], lo, hi, TaylorOptions::default(), None)?;
    let mut warnings = potential_warnings(&traj);
    let mut period = None;
    if let Some(t) = s.period {
        let a = traj.state_near(lo);
        let b = traj.state_near(hi);
        let gap = (a[0] - b[0]).abs() + (a[1] - b[1]).abs();
        if gap <= 1e-8 * (1.0 + a[0].abs() + a[1].abs()) {
            period = Some((lo, t));
        } else {
            warnings.push(format!(
                "solution does not close up over the period (gap {gap:e}); using the interval [{lo}, {hi}]"
            ));
            metric = make_warped_product(Arc::clone(&r), fiber, n, Coordinate::interval(&s.name, lo, hi))?;
        }
    }
    let f: Arc<dyn Profile> = Arc::new(SolutionProfile {
        name: format!("{name}: f"),
        system: sys,
        trajectory: Arc::new(traj),
        component: 0,
        period,
    });
    let mut model = StaticModel::warped(name, metric.with_name(name), f, ModelKind::Static)?
        .with_phi(PhiSpec::TraceIdentity);
    model.warnings = warnings;
    Ok(model)
}

/// Solves the unified equation on `ds^2 + r1(s)^2 g_1 + r2(s)^2 g_2` for
/// `f(s)` and `r2(s)` with `r1` prescribed; `s` must be an interval chart.
/// Integration stops with an error if `|f|` reaches `f_min` or `r2` collapses.
/// `tol` is the local error target of the Taylor integrator.
#[allow(clippy::too_many_arguments)]
pub fn manufacture_static_multiwarped(
    name: &str,
    r1: Arc<dyn Profile>,
    factors: [FiberFactor; 2],
    s: Coordinate,
    s0: f64,
    f0: f64,
    df0: f64,
    r2_0: f64,
    dr2_0: f64,
    tol: f64,
) -> Result<StaticModel> {
    if s.is_periodic() {
        return Err(Error::Model("the doubly warped construction needs an interval coordinate".into()));
    }
    if !(r2_0 > 0.0) {
        return Err(Error::InvalidWarp { s: s0, value: r2_0 });
    }
    let [fa, fb] = factors;
    let sys: Arc<dyn TaylorSystem> = Arc::new(DoublyWarpedStaticEquation {
        r1: Arc::clone(&r1),
        d1: fa.dim(),
        lambda1: fa.einstein_constant(),
        d2: fb.dim(),
        lambda2: fb.einstein_constant(),
    });
    let guard = |u: &[f64]| {
        if u[0].abs() < F_MIN {
            Some(format!("|f| fell below {F_MIN:e}"))
        } else if u[2] <= 1e-6 {
            Some("r2 collapsed".to_string())
        } else {
            None
        }
    };
    let traj = Arc::new(integrate_span(
        sys.as_ref(),
        s0,
        &[f0, df0, r2_0, dr2_0],
        s.lo,
        s.hi,
        TaylorOptions {
            tol,
            ..TaylorOptions::default()
        },
        Some(&guard),
    )?);
    let warnings = potential_warnings(&traj);
    let component = |c: usize, what: &str| -> Arc<dyn Profile> {
        Arc::new(SolutionProfile {
            name: format!("{name}: {what}"),
            system: Arc::clone(&sys),
            trajectory: Arc::clone(&traj),
            component: c,
            period: None,
        })
    };
    let blocks = vec![
        WarpBlock { factor: fa, warp: r1 },
        WarpBlock {
            factor: fb,
            warp: component(2, "r2"),
        },
    ];
    let metric = make_multiply_warped(blocks, s)?.with_name(name);
    let mut model =
        StaticModel::warped(name, metric, component(0, "f"), ModelKind::Static)?.with_phi(PhiSpec::TraceIdentity);
    model.warnings = warnings;
    Ok(model)
}

/// Residual maxima of one model over a point set.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ModelCheck {
    pub points: usize,
    pub unified: f64,
    pub trace_identity: f64,
    pub kind_residual: f64,
    pub psi_routes: f64,
    pub d_routes: f64,
    pub d_max: f64,
    /// Points skipped by the `|f| >= f_min` guard.
    pub guarded_skipped: usize,
    pub bach_rewrite: f64,
}

impl StaticModel {
    /// Residual of the equation named by `kind` at a point.
    pub fn kind_residual(&self, p: &ModelPoint) -> TensorValue {
        match self.kind {
            ModelKind::VacuumStatic => p.vacuum_static_residual(),
            ModelKind::Static => p.static_residual(),
            ModelKind::Cpe => p.cpe_residual(),
            ModelKind::Unified => p.unified_residual(),
        }
    }

    /// Runs the pointwise checks (residuals, both `Psi` and both `D` routes,
    /// and with `bach` the Bach rewrite) over `points`, in parallel.
    pub fn check(&self, points: &[Vec<f64>], bach: bool) -> Result<ModelCheck> {
        use rayon::prelude::*;
        let order = if bach { 4 } else { 3 };
        let rows: Vec<Result<(f64, f64, f64, f64, f64, f64, Option<f64>)>> = points
            .par_iter()
            .map(|x| {
                let p = self.at(x, order)?;
                let psi_gap = if matches!(self.kind, ModelKind::Unified) {
                    0.0
                } else {
                    let a = p.psi()?;
                    let b = p.psi_reduced();
                    a.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()))
                };
                let d = p.d_tensor()?;
                let dc = p.d_closed_form()?;
                let br = if bach && p.f_value().abs() >= F_MIN { Some(p.bach_rewrite()?.residual()) } else { None };
                Ok((
                    p.unified_residual().max_abs(),
                    p.trace_identity_residual().abs(),
                    self.kind_residual(&p).max_abs(),
                    psi_gap,
                    d.max_diff(&dc),
                    d.max_abs(),
                    br,
                ))
            })
            .collect();
        let mut out = ModelCheck {
            points: points.len(),
            ..ModelCheck::default()
        };
        for r in rows {
            let (u, t, k, ps, dr, dm, br) = r?;
            out.unified = out.unified.max(u);
            out.trace_identity = out.trace_identity.max(t);
            out.kind_residual = out.kind_residual.max(k);
            out.psi_routes = out.psi_routes.max(ps);
            out.d_routes = out.d_routes.max(dr);
            out.d_max = out.d_max.max(dm);
            match br {
                Some(b) => out.bach_rewrite = out.bach_rewrite.max(b),
                None if bach => out.guarded_skipped += 1,
                None => {}
            }
        }
        Ok(out)
    }
}

/// The doubly warped model with nonzero `D` used throughout the suites
/// (registry name `warped5`): `n = 5`, `r1 = 2 + 0.3 sin s` over `S^2 x S^2`,
/// `s in [-0.6, 1.1]`, `f(0) = 1, f'(0) = 0.8, r2(0) = 1.5, r2'(0) = 0`. On
/// this interval `f` runs monotonically through `(0.5, 1.5)`.
pub fn manufactured_nonzero_d() -> Result<StaticModel> {
    crate::config::lookup("warped5")?.build()
}
