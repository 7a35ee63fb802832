//! Metrics in coordinates, the derivative engine and warped-product models.

mod chart;
mod diff;
mod fiber;
mod metric;
mod scalar;
mod warped;

pub use chart::{Chart, Coordinate};
pub use diff::DiffEngine;
pub use fiber::{unit_sphere_area, FiberFactor, FiberSpec};
pub use metric::{ComponentFn, MetricDerivatives, MetricField, SampledFn};
pub use scalar::{ScalarField, ScalarFn};
pub use warped::{
    make_multiply_warped, make_warped_product, BumpPerturbed, ClosedProfile, DerivativeProfile, Profile, WarpBlock,
    WarpedProduct,
};


use std::f64::consts::PI;

use crate::error::Result;
use crate::jet::Jet;

/// Diagonal metric helper: builds the full `n x n` component list.
pub fn diagonal_components(diag: Vec<Jet>) -> Vec<Jet> {
    let n = diag.len();
    let zero = diag[0].constant_like(0.0);
    let mut g = vec![zero; n * n];
    for (i, d) in diag.into_iter().enumerate() {
        g[i * n + i] = d;
    }
    g
}

/// Flat metric on `[-L, L]^n`.
pub fn euclidean(n: usize, half_width: f64) -> Result<MetricField> {
    Ok(MetricField::from_chart(Chart::cube(n, half_width)?, move |x| {
        diagonal_components((0..n).map(|_| x[0].constant_like(1.0)).collect())
    })?
    .with_name(format!("euclidean{n}")))
}

/// Flat torus `R^n / (length Z)^n`.
pub fn flat_torus(n: usize, length: f64) -> Result<MetricField> {
    let chart = Chart::new((0..n).map(|i| Coordinate::periodic(&format!("x{}", i + 1), 0.0, length)).collect())?;
    Ok(MetricField::from_chart(chart, move |x| {
        diagonal_components((0..n).map(|_| x[0].constant_like(1.0)).collect())
    })?
    .with_name(format!("T{n}")))
}

/// Round unit `S^n` as `ds^2 + sin^2 s g_{S^{n-1}}`.
pub fn round_sphere(n: usize) -> Result<MetricField> {
    let fiber = FiberSpec::sphere(n - 1, 1.0)?;
    Ok(make_warped_product(
        std::sync::Arc::new(ClosedProfile::sine(1.0, 1.0, 0.0)),
        &fiber,
        n,
        Coordinate::polar("s", 0.0, PI),
    )?
    .with_name(format!("S{n}")))
}
