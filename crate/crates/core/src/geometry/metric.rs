use std::fmt;
use std::sync::Arc;

use super::chart::Chart;
use super::diff::{fd_jets, DiffEngine};
use super::warped::WarpedProduct;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};

/// Metric components as a function of coordinate jets, row-major `n x n`.
pub type ComponentFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;
/// Metric components from plain coordinate values (finite differences only).
pub type SampledFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
enum Components {
    Analytic(Arc<ComponentFn>),
    Sampled(Arc<SampledFn>),
}

/// A Riemannian metric on a coordinate chart.
#[derive(Clone)]
pub struct MetricField {
    name: String,
    chart: Chart,
    components: Components,
    engine: DiffEngine,
    warped: Option<Arc<WarpedProduct>>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("engine", &self.engine)
            .field("warped", &self.warped.is_some())
            .finish()
    }
}

/// `d_k g_ij`, `d_k d_l g_ij`, `d_k d_l d_m g_ij`, symmetric in the derivative slots.
#[derive(Clone, Debug)]
pub struct MetricDerivatives {
    pub n: usize,
    pub order: usize,
    /// index `[k][i][j]`
    pub first: Vec<f64>,
    /// index `[k][l][i][j]`
    pub second: Vec<f64>,
    /// index `[k][l][m][i][j]`
    pub third: Vec<f64>,
}

impl MetricDerivatives {
    pub fn d1(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.first[(k * n + i) * n + j]
    }

    pub fn d2(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.second[((k * n + l) * n + i) * n + j]
    }

    pub fn d3(&self, k: usize, l: usize, m: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.third[(((k * n + l) * n + m) * n + i) * n + j]
    }
}

impl MetricField {
    /// A metric given by an analytic component callback on `chart`.
    pub fn from_chart(chart: Chart, components: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Result<Self> {
        if chart.dim() < 3 {
            return Err(Error::Dimension(chart.dim()));
        }
        Ok(Self::any_dim(chart, Arc::new(components)))
    }

    /// Metric known only through plain values; derivatives use finite differences.
    pub fn sampled(chart: Chart, components: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Result<Self> {
        if chart.dim() < 3 {
            return Err(Error::Dimension(chart.dim()));
        }
        Ok(MetricField {
            name: "sampled".into(),
            chart,
            components: Components::Sampled(Arc::new(components)),
            engine: DiffEngine::finite_difference(),
            warped: None,
        })
    }

    /// No dimension check: fibers and level sets may be 2-dimensional.
    pub(crate) fn any_dim(chart: Chart, components: Arc<ComponentFn>) -> Self {
        MetricField {
            name: "chart".into(),
            chart,
            components: Components::Analytic(components),
            engine: DiffEngine::Analytic,
            warped: None,
        }
    }

    pub(crate) fn with_warped(mut self, w: Arc<WarpedProduct>) -> Self {
        self.warped = Some(w);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_engine(mut self, engine: DiffEngine) -> Result<Self> {
        if engine.is_analytic() && matches!(self.components, Components::Sampled(_)) {
            return Err(Error::Model("a sampled metric has no analytic derivatives".into()));
        }
        self.engine = engine;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn engine(&self) -> DiffEngine {
        self.engine
    }

    /// Warped-product structure, when the metric was built as one.
    pub fn warped(&self) -> Option<&WarpedProduct> {
        self.warped.as_deref()
    }

    pub fn warped_arc(&self) -> Option<Arc<WarpedProduct>> {
        self.warped.clone()
    }

    fn raw_values(&self, x: &[f64]) -> Vec<f64> {
        match &self.components {
            Components::Analytic(f) => {
                let sp = JetSpace::get(x.len(), 0);
                let xs: Vec<Jet> = x.iter().map(|&v| Jet::constant(sp, v)).collect();
                f(&xs).iter().map(Jet::value).collect()
            }
            Components::Sampled(f) => f(x),
        }
    }

    /// Component values `g_ij(x)`, checked for symmetry and positivity.
    pub fn values_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.chart.check_point(x)?;
        let g = self.raw_values(x);
        check_spd(&g, self.dim(), x)?;
        Ok(g)
    }

    /// Component jets of the given order at `x`.
    pub fn jets_at(&self, x: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.chart.check_point(x)?;
        let jets = match (&self.components, self.engine) {
            (Components::Analytic(f), DiffEngine::Analytic) => {
                let sp = JetSpace::get(x.len(), order);
                let xs: Vec<Jet> = x.iter().enumerate().map(|(i, &v)| Jet::variable(sp, i, v)).collect();
                f(&xs)
            }
            (_, DiffEngine::FiniteDifference { step, step_high }) => {
                if order > 4 {
                    return Err(Error::InsufficientOrder {
                        have: 4,
                        need: order,
                        what: "finite-difference metric derivatives",
                    });
                }
                let eval = |p: &[f64]| self.raw_values(p);
                fd_jets(&self.chart, x, order, step, step_high, &eval)
            }
            (Components::Sampled(_), DiffEngine::Analytic) => unreachable!("rejected by with_engine"),
        };
        let n = self.dim();
        if jets.len() != n * n {
            return Err(Error::Model(format!("metric callback returned {} components, expected {}", jets.len(), n * n)));
        }
        let values: Vec<f64> = jets.iter().map(Jet::value).collect();
        check_spd(&values, n, x)?;
        Ok(jets)
    }

    /// Coordinate derivatives of the components up to `order` (1, 2 or 3).
    pub fn derivatives(&self, x: &[f64], order: usize) -> Result<MetricDerivatives> {
        let order = order.clamp(1, 3);
        let jets = self.jets_at(x, order)?;
        let n = self.dim();
        let mut first = vec![0.0; n * n * n];
        let mut second = if order >= 2 { vec![0.0; n.pow(4)] } else { vec![] };
        let mut third = if order >= 3 { vec![0.0; n.pow(5)] } else { vec![] };
        for i in 0..n {
            for j in 0..n {
                let g = &jets[i * n + j];
                for k in 0..n {
                    let mut c = vec![0; n];
                    c[k] += 1;
                    first[(k * n + i) * n + j] = g.partial(&c);
                    if order < 2 {
                        continue;
                    }
                    for l in 0..n {
                        let mut c2 = c.clone();
                        c2[l] += 1;
                        second[((k * n + l) * n + i) * n + j] = g.partial(&c2);
                        if order < 3 {
                            continue;
                        }
                        for m in 0..n {
                            let mut c3 = c2.clone();
                            c3[m] += 1;
                            third[(((k * n + l) * n + m) * n + i) * n + j] = g.partial(&c3);
                        }
                    }
                }
            }
        }
        Ok(MetricDerivatives {
            n,
            order,
            first,
            second,
            third,
        })
    }

    pub fn determinant(&self, x: &[f64]) -> Result<f64> {
        let g = self.values_at(x)?;
        Ok(cholesky(&g, self.dim()).map(|l| (0..self.dim()).map(|i| l[i * self.dim() + i].powi(2)).product()).unwrap_or(0.0))
    }
}

/// Lower Cholesky factor, or the index of the first non-positive pivot.
pub(crate) fn cholesky(a: &[f64], n: usize) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        let scale = a[j * n + j].abs().max(1e-300);
        if !(d > 1e-13 * scale) {
            return Err((j, d));
        }
        let dj = d.sqrt();
        l[j * n + j] = dj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    Ok(l)
}

fn check_spd(g: &[f64], n: usize, x: &[f64]) -> Result<()> {
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 0..n {
        for j in i + 1..n {
            if (g[i * n + j] - g[j * n + i]).abs() > 1e-12 * scale {
                return Err(Error::DegenerateMetric {
                    point: x.to_vec(),
                    reason: format!("g[{i}][{j}] != g[{j}][{i}]"),
                });
            }
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateMetric {
            point: x.to_vec(),
            reason: "non-finite component".into(),
        });
    }
    cholesky(g, n).map(|_| ()).map_err(|(j, d)| Error::DegenerateMetric {
        point: x.to_vec(),
        reason: format!("not positive definite (pivot {j} = {d:e})"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chart::Coordinate;
    use std::f64::consts::PI;

    fn s3_polar() -> MetricField {
        let chart = Chart::new(vec![
            Coordinate::polar("s", 0.0, PI),
            Coordinate::polar("theta", 0.0, PI),
            Coordinate::periodic("phi", 0.0, 2.0 * PI),
        ])
        .unwrap();
        MetricField::from_chart(chart, |x| {
            let z = x[0].constant_like(0.0);
            let s2 = x[0].sin().powi(2);
            let t2 = x[1].sin().powi(2);
            vec![
                z.constant_like(1.0),
                z.clone(),
                z.clone(),
                z.clone(),
                s2.clone(),
                z.clone(),
                z.clone(),
                z,
                &s2 * &t2,
            ]
        })
        .unwrap()
    }

    #[test]
    fn euclidean_metric_is_valid() {
        let chart = Chart::cube(3, 2.0).unwrap();
        let m = MetricField::from_chart(chart, |x| {
            (0..9).map(|k| x[0].constant_like(if k % 4 == 0 { 1.0 } else { 0.0 })).collect()
        })
        .unwrap();
        assert_eq!(m.determinant(&[0.1, 0.2, -0.3]).unwrap(), 1.0);
        let d = m.derivatives(&[0.1, 0.2, -0.3], 3).unwrap();
        assert!(d.first.iter().chain(&d.second).chain(&d.third).all(|v| *v == 0.0));
    }

    #[test]
    fn s3_determinant_and_derivative() {
        let m = s3_polar();
        let (s, t) = (1.0f64, 0.8f64);
        let det = m.determinant(&[s, t, 0.3]).unwrap();
        assert!((det - s.sin().powi(4) * t.sin().powi(2)).abs() < 1e-13);
        let d = m.derivatives(&[s, t, 0.3], 1).unwrap();
        assert!((d.d1(0, 1, 1) - 2.0 * s.sin() * s.cos()).abs() < 1e-8);
    }

    #[test]
    fn degenerate_metric_is_reported() {
        let chart = Chart::cube(3, 2.0).unwrap();
        let m = MetricField::from_chart(chart, |x| {
            let one = x[0].constant_like(1.0);
            let z = x[0].constant_like(0.0);
            // g_33 = x1^2 vanishes on x1 = 0
            vec![one.clone(), z.clone(), z.clone(), z.clone(), one, z.clone(), z.clone(), z, &x[0] * &x[0]]
        })
        .unwrap();
        assert!(m.values_at(&[0.5, 0.0, 0.0]).is_ok());
        match m.values_at(&[0.0, 0.3, 0.0]) {
            Err(Error::DegenerateMetric { point, .. }) => assert_eq!(point, vec![0.0, 0.3, 0.0]),
            other => panic!("expected degenerate-metric error, got {other:?}"),
        }
    }

    #[test]
    fn polynomial_component_derivative() {
        let chart = Chart::cube(3, 2.0).unwrap();
        let m = MetricField::from_chart(chart, |x| {
            let one = x[0].constant_like(1.0);
            let z = x[0].constant_like(0.0);
            vec![1.0 + &x[0] * &x[0], z.clone(), z.clone(), z.clone(), one.clone(), z.clone(), z.clone(), z, one]
        })
        .unwrap();
        let d = m.derivatives(&[1.0, 0.0, 0.0], 2).unwrap();
        assert!((d.d1(0, 0, 0) - 2.0).abs() < 1e-10);
        let fd = m.clone().with_engine(DiffEngine::finite_difference()).unwrap();
        let d = fd.derivatives(&[1.0, 0.0, 0.0], 2).unwrap();
        assert!((d.d1(0, 0, 0) - 2.0).abs() < 1e-10);
        assert!((d.d2(0, 0, 0, 0) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn out_of_domain_point() {
        let m = s3_polar();
        assert!(matches!(m.values_at(&[4.0, 1.0, 0.0]), Err(Error::OutOfDomain { coord: 0, .. })));
        // periodic coordinates wrap
        assert!(m.values_at(&[1.0, 1.0, 17.0]).is_ok());
    }

    #[test]
    fn derivative_slots_are_symmetric() {
        let m = s3_polar();
        let d = m.derivatives(&[0.7, 1.1, 0.2], 3).unwrap();
        let n = 3;
        for k in 0..n {
            for l in 0..n {
                for q in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            assert_eq!(d.d2(k, l, i, j), d.d2(l, k, i, j));
                            assert_eq!(d.d3(k, l, q, i, j), d.d3(q, k, l, i, j));
                            assert_eq!(d.d3(k, l, q, i, j), d.d3(l, k, q, i, j));
                        }
                    }
                }
            }
        }
    }
}
