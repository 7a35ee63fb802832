//! Warping profiles and (multiply) warped products `ds^2 + sum_i r_i(s)^2 g_i`.

use std::fmt;
use std::sync::Arc;

use super::chart::{Chart, Coordinate};
use super::fiber::{FiberFactor, FiberSpec};
use super::metric::MetricField;
use crate::error::{Error, Result};
use crate::jet::Jet;

/// A smooth function of one variable that can report its Taylor expansion.
pub trait Profile: Send + Sync {
    /// Taylor coefficients (not derivatives) at `s`, degrees `0..=order`.
    fn taylor(&self, s: f64, order: usize) -> Vec<f64>;

    fn describe(&self) -> String;

    fn eval(&self, s: &Jet) -> Jet {
        s.compose(&self.taylor(s.value(), s.order()))
    }

    fn value(&self, s: f64) -> f64 {
        self.taylor(s, 0)[0]
    }

    /// `k`-th derivative at `s`.
    fn derivative(&self, s: f64, k: usize) -> f64 {
        self.taylor(s, k)[k] * crate::jet::factorial(k)
    }
}

impl fmt::Debug for dyn Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({})", self.describe())
    }
}

type UnivariateFn = dyn Fn(&Jet) -> Jet + Send + Sync;

/// Profile given by a closed-form jet expression.
#[derive(Clone)]
pub struct ClosedProfile {
    name: String,
    f: Arc<UnivariateFn>,
}

impl ClosedProfile {
    pub fn new(name: impl Into<String>, f: impl Fn(&Jet) -> Jet + Send + Sync + 'static) -> Self {
        ClosedProfile {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        ClosedProfile::new(format!("{c}"), move |s| s.constant_like(c))
    }

    /// `amplitude * sin(frequency * s + phase)`.
    pub fn sine(amplitude: f64, frequency: f64, phase: f64) -> Self {
        ClosedProfile::new(format!("{amplitude}*sin({frequency}*s+{phase})"), move |s| {
            (s * frequency + phase).sin() * amplitude
        })
    }

    pub fn cosine(amplitude: f64, frequency: f64) -> Self {
        ClosedProfile::new(format!("{amplitude}*cos({frequency}*s)"), move |s| (s * frequency).cos() * amplitude)
    }

    /// `base + amplitude * sin(frequency * s)`.
    pub fn affine_sine(base: f64, amplitude: f64, frequency: f64) -> Self {
        ClosedProfile::new(format!("{base}+{amplitude}*sin({frequency}*s)"), move |s| {
            (s * frequency).sin() * amplitude + base
        })
    }

    /// `base + amplitude * cos(frequency * s)`.
    pub fn affine_cosine(base: f64, amplitude: f64, frequency: f64) -> Self {
        ClosedProfile::new(format!("{base}+{amplitude}*cos({frequency}*s)"), move |s| {
            (s * frequency).cos() * amplitude + base
        })
    }

    pub fn sinh(amplitude: f64, frequency: f64) -> Self {
        ClosedProfile::new(format!("{amplitude}*sinh({frequency}*s)"), move |s| (s * frequency).sinh() * amplitude)
    }

    pub fn cosh(amplitude: f64, frequency: f64) -> Self {
        ClosedProfile::new(format!("{amplitude}*cosh({frequency}*s)"), move |s| (s * frequency).cosh() * amplitude)
    }

    /// `a + b s`.
    pub fn linear(a: f64, b: f64) -> Self {
        ClosedProfile::new(format!("{a}+{b}*s"), move |s| s * b + a)
    }
}

impl Profile for ClosedProfile {
    fn taylor(&self, s: f64, order: usize) -> Vec<f64> {
        (self.f)(&Jet::univariate(order, s)).coeffs().to_vec()
    }

    fn describe(&self) -> String {
        self.name.clone()
    }

    fn eval(&self, s: &Jet) -> Jet {
        if s.nvars() == 1 {
            (self.f)(s)
        } else {
            s.compose(&self.taylor(s.value(), s.order()))
        }
    }
}

/// `scale * d/ds inner`.
pub struct DerivativeProfile {
    pub inner: Arc<dyn Profile>,
    pub scale: f64,
}

impl Profile for DerivativeProfile {
    fn taylor(&self, s: f64, order: usize) -> Vec<f64> {
        let c = self.inner.taylor(s, order + 1);
        (0..=order).map(|k| self.scale * (k + 1) as f64 * c[k + 1]).collect()
    }

    fn describe(&self) -> String {
        format!("{} * d/ds[{}]", self.scale, self.inner.describe())
    }
}

/// `inner + eps * exp(-((s - center)/width)^2)`, used for negative controls.
pub struct BumpPerturbed {
    pub inner: Arc<dyn Profile>,
    pub eps: f64,
    pub center: f64,
    pub width: f64,
}

impl Profile for BumpPerturbed {
    fn taylor(&self, s: f64, order: usize) -> Vec<f64> {
        let t = Jet::univariate(order, s);
        let z = (&t - self.center) / self.width;
        let bump = (-(&z * &z)).exp() * self.eps;
        self.inner
            .taylor(s, order)
            .iter()
            .zip(bump.coeffs())
            .map(|(a, b)| a + b)
            .collect()
    }

    fn describe(&self) -> String {
        format!("{} + {}*bump({}, {})", self.inner.describe(), self.eps, self.center, self.width)
    }
}

/// One fiber factor with its warping function.
#[derive(Clone)]
pub struct WarpBlock {
    pub factor: FiberFactor,
    pub warp: Arc<dyn Profile>,
}

/// `ds^2 + sum_i r_i(s)^2 g_i` on `s x F_1 x ... x F_m`.
#[derive(Clone)]
pub struct WarpedProduct {
    pub s: Coordinate,
    pub blocks: Vec<WarpBlock>,
    single: bool,
}

impl fmt::Debug for WarpedProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpedProduct")
            .field("s", &self.s)
            .field("blocks", &self.blocks.iter().map(|b| (&b.factor, b.warp.describe())).collect::<Vec<_>>())
            .finish()
    }
}

impl WarpedProduct {
    pub fn dim(&self) -> usize {
        1 + self.blocks.iter().map(|b| b.factor.dim()).sum::<usize>()
    }

    /// All factors share one warping function (an honest `ds^2 + r^2 g_E`).
    pub fn is_singly_warped(&self) -> bool {
        self.single
    }

    /// The common warp of a singly warped product.
    pub fn warp(&self) -> Option<&Arc<dyn Profile>> {
        self.single.then(|| &self.blocks[0].warp)
    }

    pub fn fiber(&self) -> Result<FiberSpec> {
        FiberSpec::new(self.blocks.iter().map(|b| b.factor.clone()).collect())
    }

    pub fn fiber_chart(&self) -> Chart {
        let mut coords = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let prefix = if self.blocks.len() > 1 { format!("f{}_", i + 1) } else { String::new() };
            coords.extend(b.factor.coordinates(&prefix));
        }
        Chart { coords }
    }

    pub fn chart(&self) -> Chart {
        let mut coords = vec![self.s.clone()];
        coords.extend(self.fiber_chart().coords);
        Chart { coords }
    }

    /// Generic interior fiber point.
    pub fn fiber_point(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.factor.reference_point()).collect()
    }

    pub fn point(&self, s: f64, fiber: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        x.push(s);
        x.extend_from_slice(fiber);
        x
    }

    /// `k` deterministic fiber points spread over the fiber chart.
    pub fn fiber_samples(&self, k: usize) -> Vec<Vec<f64>> {
        self.fiber_chart().halton_points(k)
    }

    pub fn warp_values(&self, s: f64) -> Vec<f64> {
        self.blocks.iter().map(|b| b.warp.value(s)).collect()
    }

    /// `prod_i r_i(s)^{dim F_i}`: the volume density relative to the fiber volume form.
    pub fn density(&self, s: f64) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.warp.value(s).powi(b.factor.dim() as i32))
            .product()
    }

    pub fn fiber_volume(&self) -> Option<f64> {
        self.blocks.iter().map(|b| b.factor.volume()).product()
    }

    fn components(&self, x: &[Jet]) -> Vec<Jet> {
        let n = self.dim();
        let zero = x[0].constant_like(0.0);
        let mut g = vec![zero; n * n];
        g[0] = x[0].constant_like(1.0);
        let mut off = 1;
        let mut cached: Option<Jet> = None;
        for b in &self.blocks {
            let d = b.factor.dim();
            let r2 = match (&cached, self.single) {
                (Some(r2), true) => r2.clone(),
                _ => {
                    let r = b.warp.eval(&x[0]);
                    let r2 = &r * &r;
                    cached = Some(r2.clone());
                    r2
                }
            };
            let diag = b.factor.diagonal(&x[off..off + d]);
            for (i, e) in diag.iter().enumerate() {
                g[(off + i) * n + off + i] = &r2 * e;
            }
            off += d;
        }
        g
    }

    /// Induced metric on the slice `{s} x F`.
    pub fn slice_metric(self: &Arc<Self>, s: f64) -> MetricField {
        let me = Arc::clone(self);
        let m = self.dim() - 1;
        let f = move |y: &[Jet]| {
            let mut x = Vec::with_capacity(m + 1);
            x.push(y[0].constant_like(s));
            x.extend_from_slice(y);
            let g = me.components(&x);
            let n = m + 1;
            let mut out = Vec::with_capacity(m * m);
            for i in 1..n {
                for j in 1..n {
                    out.push(g[i * n + j].clone());
                }
            }
            out
        };
        MetricField::any_dim(self.fiber_chart(), Arc::new(f)).with_name(format!("slice s={s}"))
    }

    /// Metric of the unwarped fiber (all r_i = 1).
    pub fn fiber_metric(&self) -> MetricField {
        let blocks: Vec<FiberFactor> = self.blocks.iter().map(|b| b.factor.clone()).collect();
        let m: usize = blocks.iter().map(FiberFactor::dim).sum();
        let f = move |y: &[Jet]| {
            let mut g = vec![y[0].constant_like(0.0); m * m];
            let mut off = 0;
            for b in &blocks {
                let d = b.dim();
                for (i, e) in b.diagonal(&y[off..off + d]).into_iter().enumerate() {
                    g[(off + i) * m + off + i] = e;
                }
                off += d;
            }
            g
        };
        MetricField::any_dim(self.fiber_chart(), Arc::new(f)).with_name("fiber")
    }
}

fn check_warp(s: &Coordinate, warp: &dyn Profile) -> Result<()> {
    for v in s.samples(401) {
        let r = warp.value(v);
        if !(r > 0.0) {
            return Err(Error::InvalidWarp { s: v, value: r });
        }
    }
    Ok(())
}

/// `ds^2 + r(s)^2 g_E` over the Einstein fiber `fiber`, with `n = 1 + dim E`.
pub fn make_warped_product(r: Arc<dyn Profile>, fiber: &FiberSpec, n: usize, s: Coordinate) -> Result<MetricField> {
    if n < 3 {
        return Err(Error::Dimension(n));
    }
    if fiber.dim() + 1 != n {
        return Err(Error::InvalidFiber(format!("fiber dimension {} != n - 1 = {}", fiber.dim(), n - 1)));
    }
    check_warp(&s, r.as_ref())?;
    let blocks = fiber
        .factors
        .iter()
        .map(|f| WarpBlock {
            factor: f.clone(),
            warp: Arc::clone(&r),
        })
        .collect();
    Ok(build(WarpedProduct { s, blocks, single: true }))
}

/// `ds^2 + sum_i r_i(s)^2 g_i` with an independent warp per factor.
pub fn make_multiply_warped(blocks: Vec<WarpBlock>, s: Coordinate) -> Result<MetricField> {
    if blocks.is_empty() {
        return Err(Error::InvalidFiber("no fiber factors".into()));
    }
    let n = 1 + blocks.iter().map(|b| b.factor.dim()).sum::<usize>();
    if n < 3 {
        return Err(Error::Dimension(n));
    }
    for b in &blocks {
        check_warp(&s, b.warp.as_ref())?;
    }
    let single = blocks.windows(2).all(|w| Arc::ptr_eq(&w[0].warp, &w[1].warp));
    Ok(build(WarpedProduct { s, blocks, single }))
}

fn build(w: WarpedProduct) -> MetricField {
    let w = Arc::new(w);
    let me = Arc::clone(&w);
    MetricField::any_dim(w.chart(), Arc::new(move |x: &[Jet]| me.components(x))).with_warped(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn derivative_profile_shifts_coefficients() {
        let sin: Arc<dyn Profile> = Arc::new(ClosedProfile::sine(1.0, 1.0, 0.0));
        let d = DerivativeProfile { inner: sin, scale: 2.0 };
        let t = d.taylor(0.4, 3);
        assert!((t[0] - 2.0 * 0.4f64.cos()).abs() < 1e-15);
        assert!((d.derivative(0.4, 1) + 2.0 * 0.4f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_warp_rejected() {
        let fiber = FiberSpec::sphere(2, 1.0).unwrap();
        let r: Arc<dyn Profile> = Arc::new(ClosedProfile::sine(1.0, 1.0, 0.0));
        let s = Coordinate::interval("s", 0.5, 4.0);
        assert!(matches!(make_warped_product(r, &fiber, 3, s), Err(Error::InvalidWarp { .. })));
    }

    #[test]
    fn warped_matches_chart_entry() {
        let fiber = FiberSpec::sphere(2, 1.0).unwrap();
        let r: Arc<dyn Profile> = Arc::new(ClosedProfile::sine(1.0, 1.0, 0.0));
        let warped = make_warped_product(r, &fiber, 3, Coordinate::polar("s", 0.0, PI)).unwrap();
        let chart = warped.chart().clone();
        let direct = MetricField::from_chart(chart, |x| {
            let z = x[0].constant_like(0.0);
            let s2 = x[0].sin().powi(2);
            let t2 = x[1].sin().powi(2);
            vec![z.constant_like(1.0), z.clone(), z.clone(), z.clone(), s2.clone(), z.clone(), z.clone(), z, &s2 * &t2]
        })
        .unwrap();
        for x in [[0.3, 1.0, 0.2], [1.7, 0.4, 5.0], [2.9, 2.5, 1.0]] {
            let a = warped.jets_at(&x, 3).unwrap();
            let b = direct.jets_at(&x, 3).unwrap();
            for (ja, jb) in a.iter().zip(&b) {
                for (u, v) in ja.coeffs().iter().zip(jb.coeffs()) {
                    assert!((u - v).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn density_and_volume() {
        let fiber = FiberSpec::s2xs2(1.0, 1.0).unwrap();
        let r: Arc<dyn Profile> = Arc::new(ClosedProfile::affine_sine(2.0, 0.3, 1.0));
        let m = make_warped_product(r, &fiber, 5, Coordinate::periodic("s", 0.0, 2.0 * PI)).unwrap();
        let w = m.warped().unwrap();
        assert!(w.is_singly_warped());
        assert!((w.density(0.0) - 16.0).abs() < 1e-14);
        assert!((w.fiber_volume().unwrap() - 16.0 * PI * PI).abs() < 1e-12);
        assert_eq!(w.fiber_samples(40).len(), 40);
    }
}
